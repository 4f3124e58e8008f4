//! Beam outage capacity.
//!
//! For an infinite cell the capacity is `log y*` where `y*` is the unique root
//! on `(1, ∞)` of
//!
//! ```text
//! unbounded:  y^(a+1) − y^a − c = 0
//! bounded:    log(y^a (y−1)) + (α/2ρ)(y−1) − log c = 0
//! ```
//!
//! with `a = α(M−1)/2`, `b = (2λπ/α) Γ(2/α) ρ^(2/α)` and `c = (−b / log ε)^(α/2)`.
//! Both are solved in log form in the variable `u = y − 1`, so the reported
//! residual is a relative one and stays meaningful when `c` is astronomically
//! large. Finite cells invert the monotone outage CDF by bisection.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_epsilon, PathLossKind, PathLossModel, Radius, SystemConfig};
use crate::outage::{sinr_outage, Backend};
use crate::specfun;

/// Largest residual accepted from the root solvers.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Target accuracy `|F*(x) − ε|` of the finite-cell inversion.
pub const CDF_TOL: f64 = 1e-10;
/// Iteration cap shared by all bisection loops.
pub const MAX_ITER: usize = 200;
/// Initial lower bracket for `y − 1`.
const LOWER_BRACKET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquationKind {
    Unbounded,
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEquation {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub kind: EquationKind,
}

impl CapacityEquation {
    pub fn new(config: &SystemConfig, alpha: f64, epsilon: f64, kind: EquationKind) -> Result<Self> {
        if !(alpha > 2.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("path-loss exponent alpha must be > 2, got {alpha}")));
        }
        check_epsilon(epsilon)?;
        let s = 2.0 / alpha;
        let a = 0.5 * alpha * (config.beams as f64 - 1.0);
        let b = 2.0 * config.lambda * PI / alpha * specfun::gamma_unchecked(s) * config.power.powf(s);
        Ok(Self { a, b, alpha, rho: config.power, epsilon, kind })
    }

    /// `log c = (α/2) log(−b / log ε)`.
    pub fn log_target(&self) -> f64 {
        0.5 * self.alpha * (-self.b / self.epsilon.ln()).ln()
    }

    /// `c = (−b / log ε)^(α/2)`.
    pub fn target(&self) -> f64 {
        self.log_target().exp()
    }

    /// Log-form residual as a function of `u = y − 1`; strictly increasing.
    pub fn residual_at(&self, u: f64) -> f64 {
        let base = self.a * u.ln_1p() + u.ln() - self.log_target();
        match self.kind {
            EquationKind::Unbounded => base,
            EquationKind::Bounded => base + self.alpha / (2.0 * self.rho) * u,
        }
    }

    /// `y^(a+1) − y^a − c`, the unbounded equation in polynomial form.
    pub fn polynomial_residual(&self, y: f64) -> f64 {
        y.powf(self.a + 1.0) - y.powf(self.a) - self.target()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitySolution {
    /// `y* = e^C`; equal to 1 when the outage floor applies.
    pub y_star: f64,
    /// Capacity in nats/s/Hz.
    pub capacity_nats: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Final bracket on `y`.
    pub bracket: (f64, f64),
    /// Set when ε does not exceed the empty-cell probability, so no positive
    /// rate meets the outage constraint and the capacity is pinned to 0.
    pub outage_floor: bool,
}

impl CapacitySolution {
    pub fn capacity_bits(&self) -> f64 {
        self.capacity_nats / LN_2
    }
}

/// Bisection for the root of an increasing function on `(lo, hi)` with
/// `f(lo) < 0 ≤ f(hi)`. Switches from geometric to arithmetic midpoints once
/// the bracket spans less than a factor of two. Returns the best point, the
/// final bracket and the iteration count.
fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64, stop: f64) -> Result<(f64, f64, f64, usize)> {
    let mut best = hi;
    let mut best_val = f(hi)?;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let mid = if hi > 2.0 * lo && lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v.abs() < best_val.abs() {
            best = mid;
            best_val = v;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if v == 0.0 || (best_val.abs() <= stop && (hi - lo) <= 4.0 * f64::EPSILON * hi) {
            break;
        }
    }
    Ok((best, lo, hi, iterations))
}

fn solve_root(eq: &CapacityEquation, expected: EquationKind) -> Result<CapacitySolution> {
    if eq.kind != expected {
        return Err(Error::InvalidParameter(format!("expected a {expected:?} equation, got {:?}", eq.kind)));
    }
    check_epsilon(eq.epsilon)?;
    if !(eq.a >= 0.0) || !(eq.b > 0.0) {
        return Err(Error::InvalidParameter(format!("need a >= 0 and b > 0, got a={} b={}", eq.a, eq.b)));
    }
    let h = |u: f64| eq.residual_at(u);
    let mut lo = LOWER_BRACKET;
    while h(lo) >= 0.0 {
        lo *= 1e-6;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::Numeric { message: "root lies below the smallest representable bracket".into(), achieved: h(lo) });
        }
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while h(hi) < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::Numeric { message: "could not bracket the capacity root".into(), achieved: h(hi) });
        }
    }
    let (u, lo, hi, iterations) = bisect(|u| Ok(h(u)), lo, hi, 1e-14)?;
    let residual = h(u).abs();
    if residual > RESIDUAL_TOL {
        return Err(Error::Numeric { message: format!("root solver stopped after {iterations} iterations"), achieved: residual });
    }
    Ok(CapacitySolution {
        y_star: 1.0 + u,
        capacity_nats: u.ln_1p(),
        residual,
        iterations,
        bracket: (1.0 + lo, 1.0 + hi),
        outage_floor: false,
    })
}

/// Large-system capacity for `G(d) = d^(−α)`.
pub fn solve_capacity_unbounded(eq: &CapacityEquation) -> Result<CapacitySolution> {
    solve_root(eq, EquationKind::Unbounded)
}

/// Large-system capacity for `G(d) = (1 + d^α)^(−1)`.
pub fn solve_capacity_bounded(eq: &CapacityEquation) -> Result<CapacitySolution> {
    solve_root(eq, EquationKind::Bounded)
}

/// Single-beam unbounded capacity in closed form: `log(1 + ρ(−2λπΓ(2/α) / (α log ε))^(α/2))`.
pub fn single_beam_closed_form(lambda: f64, power: f64, alpha: f64, epsilon: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::InvalidParameter(format!("path-loss exponent alpha must be > 2, got {alpha}")));
    }
    check_epsilon(epsilon)?;
    let inner = -2.0 * lambda * PI * specfun::gamma_unchecked(2.0 / alpha) / (alpha * epsilon.ln());
    Ok((power * inner.powf(0.5 * alpha)).ln_1p())
}

/// Large-system capacity for either root-equation model.
pub fn large_system_capacity(config: &SystemConfig, model: &PathLossModel, epsilon: f64) -> Result<CapacitySolution> {
    let kind = match model.kind {
        PathLossKind::Unbounded => EquationKind::Unbounded,
        PathLossKind::Bounded => EquationKind::Bounded,
        _ => {
            return Err(Error::Unsupported(format!(
                "no large-system capacity equation for the {} path-loss law",
                model.label()
            )))
        }
    };
    let eq = CapacityEquation::new(config, model.alpha, epsilon, kind)?;
    solve_root(&eq, kind)
}

/// Capacity `log(F*⁻¹(ε) + 1)` of a cell. Finite cells invert the outage CDF
/// by bisection; an infinite cell uses the root equations.
pub fn capacity_finite_d(config: &SystemConfig, model: &PathLossModel, backend: Backend, epsilon: f64) -> Result<CapacitySolution> {
    check_epsilon(epsilon)?;
    if config.radius == Radius::Infinite {
        return large_system_capacity(config, model, epsilon);
    }
    let floor = config.empty_cell_probability();
    if epsilon <= floor {
        return Ok(CapacitySolution {
            y_star: 1.0,
            capacity_nats: 0.0,
            residual: (floor - epsilon).abs(),
            iterations: 0,
            bracket: (1.0, 1.0),
            outage_floor: true,
        });
    }

    let log_eps = epsilon.ln();
    let eval = |x: f64| -> Result<f64> { Ok(sinr_outage(config, model, backend, x)?.exponent - log_eps) };

    let mut hi = 1.0;
    let mut doublings = 0;
    while eval(hi)? < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::Numeric { message: "could not bracket the outage quantile".into(), achieved: hi });
        }
    }
    // lower end: F*(x) < ε holds at x = 0; walk down geometrically for a positive bracket
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if lo < 1e-300 {
            lo = 0.0;
            break;
        }
        if eval(lo)? < 0.0 {
            break;
        }
        hi = lo;
    }

    let (x, lo, hi, iterations) = bisect(eval, lo, hi, 0.0)?;
    let result = sinr_outage(config, model, backend, x)?;
    let residual = (result.sinr_cdf_value - epsilon).abs();
    if residual > CDF_TOL {
        return Err(Error::Numeric { message: format!("outage CDF inversion stopped after {iterations} iterations"), achieved: residual });
    }
    Ok(CapacitySolution {
        y_star: 1.0 + x,
        capacity_nats: x.ln_1p(),
        residual,
        iterations,
        bracket: (1.0 + lo, 1.0 + hi),
        outage_floor: false,
    })
}

/// One row of the scaling diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub lambda: f64,
    pub capacity: f64,
    /// `C(λ²)`
    pub capacity_squared: f64,
    /// Doubling statistic `C(λ²) − C(λ)`.
    pub doubling: f64,
    /// `C(λ²) / C(λ)`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Reference value the doubling statistic is compared against.
    pub doubling_target: f64,
    /// Leading-order slope of `C` against `log λ` for the unbounded law,
    /// `α / (α(M−1) + 2)`; `None` for the bounded law, whose capacity grows like `log log λ`.
    pub log_lambda_slope: Option<f64>,
}

/// Reference value for the doubling statistic: `(α/2) log 2` for a single
/// unbounded beam, `log 2 / (M−1)` for several unbounded beams and `log 2`
/// for the bounded law.
pub fn doubling_target(kind: EquationKind, beams: u32, alpha: f64) -> f64 {
    match kind {
        EquationKind::Unbounded if beams == 1 => 0.5 * alpha * LN_2,
        EquationKind::Unbounded => LN_2 / (beams as f64 - 1.0),
        EquationKind::Bounded => LN_2,
    }
}

/// Leading-order growth of the unbounded capacity: `C ≈ κ log λ` with
/// `κ = α / (α(M−1) + 2)`, from `y^(a+1) ≈ c ∝ λ^(α/2)`.
pub fn unbounded_log_slope(beams: u32, alpha: f64) -> f64 {
    alpha / (alpha * (beams as f64 - 1.0) + 2.0)
}

/// Large-system capacities over an increasing λ grid together with the
/// doubling statistic `C(λ²) − C(λ)` at each point.
pub fn scaling_diagnostic(
    kind: EquationKind,
    base: &SystemConfig,
    alpha: f64,
    epsilon: f64,
    lambdas: &[f64],
) -> Result<ScalingReport> {
    if lambdas.len() < 3 {
        return Err(Error::Precondition("scaling diagnostic needs at least 3 intensities".into()));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("intensity grid must be strictly increasing".into()));
    }
    let solve = |lambda: f64| -> Result<f64> {
        let cfg = SystemConfig::new(lambda, Radius::Infinite, base.beams, base.power)?;
        let eq = CapacityEquation::new(&cfg, alpha, epsilon, kind)?;
        Ok(solve_root(&eq, kind)?.capacity_nats)
    };
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let capacity = solve(lambda)?;
            let capacity_squared = solve(lambda * lambda)?;
            Ok(ScalingRow {
                lambda,
                capacity,
                capacity_squared,
                doubling: capacity_squared - capacity,
                ratio: capacity_squared / capacity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingReport {
        rows,
        doubling_target: doubling_target(kind, base.beams, alpha),
        log_lambda_slope: match kind {
            EquationKind::Unbounded => Some(unbounded_log_slope(base.beams, alpha)),
            EquationKind::Bounded => None,
        },
    })
}
