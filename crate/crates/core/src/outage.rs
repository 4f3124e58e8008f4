//! Beam outage probabilities: the CDF of the best user's SINR on a beam and the
//! induced rate CDF `F_r(x) = F*(eˣ − 1)`.
//!
//! Every evaluation accumulates the (non-positive) exponent of
//!
//! ```text
//! F*(x) = exp( −λπ / (x+1)^(M−1) · ∫₀^{D²} exp(−x / (G(√t) ρ)) dt )
//! ```
//!
//! and exponentiates last, so very small probabilities at large `λD²` never
//! underflow before the caller sees them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PathLossKind, PathLossModel, Radius, SystemConfig};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutageMethod {
    Quadrature,
    ClosedFormUnbounded,
    ClosedFormBounded,
    LargeSystemUnbounded,
    LargeSystemBounded,
}

impl OutageMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OutageMethod::Quadrature => "quadrature",
            OutageMethod::ClosedFormUnbounded => "closed-form-unbounded",
            OutageMethod::ClosedFormBounded => "closed-form-bounded",
            OutageMethod::LargeSystemUnbounded => "large-system-unbounded",
            OutageMethod::LargeSystemBounded => "large-system-bounded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageResult {
    /// SINR threshold at which `F*` was evaluated.
    pub sinr_threshold: f64,
    /// `F*(sinr_threshold)`.
    pub sinr_cdf_value: f64,
    /// `F_r(log(1 + sinr_threshold))`; equal to `sinr_cdf_value` by construction.
    pub rate_cdf_value: f64,
    /// `log F*`, always `≤ 0`.
    pub exponent: f64,
    pub method: OutageMethod,
}

impl OutageResult {
    fn from_exponent(sinr_threshold: f64, exponent: f64, method: OutageMethod) -> Self {
        let exponent = exponent.min(0.0);
        let p = exponent.exp().clamp(0.0, 1.0);
        Self { sinr_threshold, sinr_cdf_value: p, rate_cdf_value: p, exponent, method }
    }
}

/// How the beam outage probability is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    /// Closed forms for the unbounded and bounded laws, quadrature for the rest.
    Auto,
    /// Closed forms only; errors for laws without one.
    ClosedForm,
    /// Numerical integration of the general expression (finite cells only).
    Quadrature,
}

fn check_threshold(x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("SINR threshold must be >= 0, got {x}")));
    }
    Ok(())
}

/// Per-user SINR CDF given the user's path-loss gain `g`:
/// `1 − e^(−x/(gρ)) / (x+1)^(M−1)`.
pub fn conditional_sinr_cdf(config: &SystemConfig, g: f64, x: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::Domain(format!("gain must be > 0, got {g}")));
    }
    check_threshold(x)?;
    let tail = (-x / (g * config.power)).exp() / (x + 1.0).powi(config.beams as i32 - 1);
    Ok((1.0 - tail).clamp(0.0, 1.0))
}

/// `1/G(d)`, finite at the origin for every law.
fn attenuation(model: &PathLossModel, d: f64) -> f64 {
    let a = model.alpha;
    match model.kind {
        PathLossKind::Unbounded => d.powf(a),
        PathLossKind::Bounded => 1.0 + d.powf(a),
        PathLossKind::GuardZone { d0 } => d0.max(d).powf(a),
        PathLossKind::Shifted => (1.0 + d).powf(a),
    }
}

fn interference_factor(config: &SystemConfig, x: f64) -> f64 {
    (x + 1.0).powi(config.beams as i32 - 1)
}

/// General outage probability for any path-loss law in a finite cell, with
/// the radial integral computed by adaptive quadrature.
pub fn outage_general(config: &SystemConfig, model: &PathLossModel, x: f64) -> Result<OutageResult> {
    outage_general_with(config, model, x, QuadratureOptions::default())
}

pub fn outage_general_with(
    config: &SystemConfig,
    model: &PathLossModel,
    x: f64,
    opts: QuadratureOptions,
) -> Result<OutageResult> {
    check_threshold(x)?;
    let d = config.finite_radius("general outage quadrature")?;
    let d2 = d * d;
    let integral = if x == 0.0 {
        d2
    } else {
        let rho = config.power;
        let f = |t: f64| (-x * attenuation(model, t.sqrt()) / rho).exp();
        match model.kind {
            PathLossKind::GuardZone { d0 } if d0 > 0.0 && d0 * d0 < d2 => {
                // flat up to d0²; integrate the kinked pieces separately
                let split = d0 * d0;
                integrate(&f, 0.0, split, opts)?.value + integrate(&f, split, d2, opts)?.value
            }
            _ => integrate(f, 0.0, d2, opts)?.value,
        }
    };
    let exponent = -config.lambda * PI / interference_factor(config, x) * integral;
    Ok(OutageResult::from_exponent(x, exponent, OutageMethod::Quadrature))
}

/// `−(2λπ / (α (x+1)^(M−1))) (ρ/x)^(2/α) γ(2/α, x D^α / ρ)`, with `Γ` in place of
/// `γ` for an infinite cell and `−λπD²` at `x = 0`.
fn unbounded_exponent(config: &SystemConfig, alpha: f64, x: f64) -> f64 {
    let lambda = config.lambda;
    if x == 0.0 {
        return match config.radius {
            Radius::Finite(d) => -lambda * PI * d * d,
            Radius::Infinite => f64::NEG_INFINITY,
        };
    }
    let s = 2.0 / alpha;
    let rho = config.power;
    let gamma = match config.radius {
        Radius::Finite(d) => specfun::lower_incomplete_unchecked(s, x * d.powf(alpha) / rho),
        Radius::Infinite => specfun::gamma_unchecked(s),
    };
    -(2.0 * lambda * PI / (alpha * interference_factor(config, x))) * (rho / x).powf(s) * gamma
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("path-loss exponent alpha must be > 2, got {alpha}")));
    }
    Ok(())
}

/// Closed form for `G(d) = d^(−α)`; the large-system form when the radius is infinite.
pub fn outage_unbounded(config: &SystemConfig, alpha: f64, x: f64) -> Result<OutageResult> {
    check_alpha(alpha)?;
    check_threshold(x)?;
    let method = if config.radius.is_infinite() {
        OutageMethod::LargeSystemUnbounded
    } else {
        OutageMethod::ClosedFormUnbounded
    };
    Ok(OutageResult::from_exponent(x, unbounded_exponent(config, alpha, x), method))
}

/// Closed form for `G(d) = (1 + d^α)^(−1)`. Its exponent is the unbounded
/// exponent scaled by `e^(−x/ρ)`.
pub fn outage_bounded(config: &SystemConfig, alpha: f64, x: f64) -> Result<OutageResult> {
    check_alpha(alpha)?;
    check_threshold(x)?;
    let method = if config.radius.is_infinite() {
        OutageMethod::LargeSystemBounded
    } else {
        OutageMethod::ClosedFormBounded
    };
    let base = unbounded_exponent(config, alpha, x);
    let exponent = if x == 0.0 { base } else { base * (-x / config.power).exp() };
    Ok(OutageResult::from_exponent(x, exponent, method))
}

/// `F*` at SINR threshold `x` through the chosen backend.
pub fn sinr_outage(config: &SystemConfig, model: &PathLossModel, backend: Backend, x: f64) -> Result<OutageResult> {
    let closed = match model.kind {
        PathLossKind::Unbounded => Some(outage_unbounded as fn(&SystemConfig, f64, f64) -> Result<OutageResult>),
        PathLossKind::Bounded => Some(outage_bounded as fn(&SystemConfig, f64, f64) -> Result<OutageResult>),
        _ => None,
    };
    match (backend, closed) {
        (Backend::Quadrature, _) | (Backend::Auto, None) => outage_general(config, model, x),
        (_, Some(f)) => f(config, model.alpha, x),
        (Backend::ClosedForm, None) => Err(Error::Unsupported(format!(
            "no closed form for the {} path-loss law",
            model.label()
        ))),
    }
}

/// Beam outage probability at target rate `rate` (nats/s/Hz): `F*(e^rate − 1)`.
pub fn rate_outage(config: &SystemConfig, model: &PathLossModel, backend: Backend, rate: f64) -> Result<OutageResult> {
    if !(rate >= 0.0) {
        return Err(Error::Domain(format!("target rate must be >= 0, got {rate}")));
    }
    sinr_outage(config, model, backend, rate.exp_m1())
}
