//! Gamma and lower incomplete gamma functions for real shape parameters.
//!
//! The lower incomplete gamma function uses the power series below the
//! switchover point `x = s + 1` and a modified Lentz continued fraction for
//! the upper tail above it, returning `Γ(s) − Γ(s, x)` there.

use crate::error::{Error, Result};

/// Largest shape parameter accepted by the public functions.
pub const MAX_SHAPE: f64 = 10.0;

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Arguments of the lower incomplete gamma function `γ(s, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaArgs {
    pub s: f64,
    pub x: f64,
}

impl GammaArgs {
    pub fn new(s: f64, x: f64) -> Result<Self> {
        check_shape(s)?;
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("incomplete gamma limit must be >= 0, got {x}")));
        }
        Ok(Self { s, x })
    }

    pub fn eval(&self) -> f64 {
        lower_incomplete_unchecked(self.s, self.x)
    }
}

fn check_shape(s: f64) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("gamma shape must be > 0, got {s}")));
    }
    if s > MAX_SHAPE {
        return Err(Error::Domain(format!("gamma shape must be <= {MAX_SHAPE}, got {s}")));
    }
    Ok(())
}

/// Complete gamma function `Γ(s)` for `s ∈ (0, 10]`.
pub fn complete_gamma(s: f64) -> Result<f64> {
    check_shape(s)?;
    Ok(gamma_unchecked(s))
}

/// Lower incomplete gamma function `γ(s, x) = ∫₀ˣ t^(s−1) e^(−t) dt`.
pub fn lower_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    Ok(GammaArgs::new(s, x)?.eval())
}

pub(crate) fn gamma_unchecked(s: f64) -> f64 {
    if s < 0.5 {
        // reflection: Γ(s)Γ(1−s) = π / sin(πs)
        return std::f64::consts::PI / ((std::f64::consts::PI * s).sin() * gamma_unchecked(1.0 - s));
    }
    // small integers are exact
    if s == s.trunc() && s <= 20.0 {
        return (1..s as u64).map(|k| k as f64).product();
    }
    let z = s - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

pub(crate) fn lower_incomplete_unchecked(s: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return gamma_unchecked(s);
    }
    if x < s + 1.0 {
        series(s, x)
    } else {
        let g = gamma_unchecked(s);
        let upper = upper_continued_fraction(s, x);
        (g - upper).clamp(0.0, g)
    }
}

/// `x^s e^(−x) Σ xⁿ / (s (s+1) ⋯ (s+n))`
fn series(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut denom = s;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (s * x.ln() - x).exp() * sum
}

/// Upper incomplete gamma `Γ(s, x)` via the modified Lentz algorithm.
fn upper_continued_fraction(s: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (s * x.ln() - x).exp() * h
}
