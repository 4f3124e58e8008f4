//! System parameters, path-loss laws and the distance/gain distributions
//! induced by uniformly placed users in a disk.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell radius. `Infinite` selects the large-system formulas explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Radius {
    Finite(f64),
    Infinite,
}

impl Radius {
    pub fn finite(self) -> Option<f64> {
        match self {
            Radius::Finite(d) => Some(d),
            Radius::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Radius::Infinite)
    }

    /// Radius as a float, with `Infinite` mapped to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Finite(d) => write!(f, "{d}"),
            Radius::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Radius {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinite") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Radius::Infinite);
        }
        let d: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("radius must be a number or 'inf', got '{s}'")))?;
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidParameter(format!("radius must be > 0, got {d}")));
        }
        Ok(Radius::Finite(d))
    }
}

/// Cell and transmission parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// User intensity (users per unit area).
    pub lambda: f64,
    pub radius: Radius,
    /// Number of transmit antennas, equal to the number of beams.
    pub beams: u32,
    /// Transmit power per beam (linear).
    pub power: f64,
}

impl SystemConfig {
    pub fn new(lambda: f64, radius: Radius, beams: u32, power: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        if let Radius::Finite(d) = radius {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidParameter(format!("radius must be > 0, got {d}")));
            }
        }
        if beams < 1 {
            return Err(Error::InvalidParameter("beams must be >= 1".into()));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidParameter(format!("power must be > 0, got {power}")));
        }
        Ok(Self { lambda, radius, beams, power })
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.radius, self.beams, self.power)
    }

    pub fn with_radius(self, radius: Radius) -> Result<Self> {
        Self::new(self.lambda, radius, self.beams, self.power)
    }

    /// Finite radius or an `Unsupported` error naming the operation.
    pub fn finite_radius(&self, op: &str) -> Result<f64> {
        self.radius
            .finite()
            .ok_or_else(|| Error::Unsupported(format!("{op} requires a finite cell radius")))
    }

    /// Mean number of users in a finite cell, `λπD²`.
    pub fn mean_users(&self) -> Option<f64> {
        self.radius.finite().map(|d| self.lambda * std::f64::consts::PI * d * d)
    }

    /// Probability that a finite cell holds no users, `exp(−λπD²)`.
    /// Zero for an infinite cell.
    pub fn empty_cell_probability(&self) -> f64 {
        self.mean_users().map_or(0.0, |m| (-m).exp())
    }
}

/// The four supported distance-to-gain laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PathLossKind {
    /// `d^(−α)`
    Unbounded,
    /// `(1 + d^α)^(−1)`
    Bounded,
    /// `max(d0, d)^(−α)`
    GuardZone { d0: f64 },
    /// `(1 + d)^(−α)`
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub kind: PathLossKind,
    pub alpha: f64,
}

impl PathLossModel {
    pub fn new(kind: PathLossKind, alpha: f64) -> Result<Self> {
        if !(alpha > 2.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("path-loss exponent alpha must be > 2, got {alpha}")));
        }
        if let PathLossKind::GuardZone { d0 } = kind {
            if !(d0 >= 0.0) || !d0.is_finite() {
                return Err(Error::InvalidParameter(format!("guard distance d0 must be >= 0, got {d0}")));
            }
        }
        Ok(Self { kind, alpha })
    }

    pub fn unbounded(alpha: f64) -> Result<Self> {
        Self::new(PathLossKind::Unbounded, alpha)
    }

    pub fn bounded(alpha: f64) -> Result<Self> {
        Self::new(PathLossKind::Bounded, alpha)
    }

    pub fn guard_zone(alpha: f64, d0: f64) -> Result<Self> {
        Self::new(PathLossKind::GuardZone { d0 }, alpha)
    }

    pub fn shifted(alpha: f64) -> Result<Self> {
        Self::new(PathLossKind::Shifted, alpha)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.kind, alpha)
    }

    /// `G(0⁺)`; infinite for laws with a singularity at the origin.
    pub fn peak_gain(&self) -> f64 {
        match self.kind {
            PathLossKind::Unbounded => f64::INFINITY,
            PathLossKind::Bounded | PathLossKind::Shifted => 1.0,
            PathLossKind::GuardZone { d0 } => d0.powf(-self.alpha),
        }
    }

    /// True when `G` has no flat region, so the closed-form inverse is exact.
    pub fn is_strictly_decreasing(&self) -> bool {
        !matches!(self.kind, PathLossKind::GuardZone { d0 } if d0 > 0.0)
    }

    /// Linear gain `G(d)` at distance `d ≥ 0`.
    pub fn gain(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(Error::Domain(format!("distance must be >= 0, got {d}")));
        }
        let g = self.gain_unchecked(d);
        if g.is_infinite() {
            return Err(Error::Domain(format!("path loss is singular at d = {d}")));
        }
        Ok(g)
    }

    pub(crate) fn gain_unchecked(&self, d: f64) -> f64 {
        let a = self.alpha;
        match self.kind {
            PathLossKind::Unbounded => d.powf(-a),
            PathLossKind::Bounded => 1.0 / (1.0 + d.powf(a)),
            PathLossKind::GuardZone { d0 } => d0.max(d).powf(-a),
            PathLossKind::Shifted => (1.0 + d).powf(-a),
        }
    }

    /// `G⁻¹(g) = inf{d ≥ 0 : G(d) ≤ g}`. Zero on and above the peak gain,
    /// which includes the whole flat region of a guard zone.
    pub fn generalized_inverse(&self, g: f64) -> Result<f64> {
        if !(g > 0.0) {
            return Err(Error::Domain(format!("gain must be > 0, got {g}")));
        }
        if g >= self.peak_gain() {
            return Ok(0.0);
        }
        let a = self.alpha;
        Ok(match self.kind {
            PathLossKind::Unbounded | PathLossKind::GuardZone { .. } => g.powf(-1.0 / a),
            PathLossKind::Bounded => ((1.0 - g) / g).powf(1.0 / a),
            PathLossKind::Shifted => g.powf(-1.0 / a) - 1.0,
        })
    }

    /// Gain CDF of a user placed uniformly in a disk of radius `D`:
    /// `F_G(g) = 1 − (G⁻¹(g)/D)²`, clamped to `[0, 1]`.
    pub fn pathloss_cdf(&self, config: &SystemConfig, g: f64) -> Result<f64> {
        let d = config.finite_radius("path-loss CDF")?;
        if g <= 0.0 {
            return Ok(0.0);
        }
        let r = self.generalized_inverse(g)? / d;
        Ok((1.0 - r * r).clamp(0.0, 1.0))
    }

    pub fn label(&self) -> String {
        match self.kind {
            PathLossKind::Unbounded => "unbounded".into(),
            PathLossKind::Bounded => "bounded".into(),
            PathLossKind::GuardZone { d0 } => format!("guard:{d0}"),
            PathLossKind::Shifted => "shifted".into(),
        }
    }
}

impl FromStr for PathLossKind {
    type Err = Error;

    /// Parses `unbounded`, `bounded`, `guard:<d0>` or `shifted`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "unbounded" | "ub" => Ok(PathLossKind::Unbounded),
            "bounded" | "b" => Ok(PathLossKind::Bounded),
            "shifted" => Ok(PathLossKind::Shifted),
            _ => {
                if let Some(rest) = t.strip_prefix("guard:") {
                    let d0: f64 = rest
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad guard distance in '{s}'")))?;
                    if !(d0 >= 0.0) || !d0.is_finite() {
                        return Err(Error::InvalidParameter(format!("guard distance d0 must be >= 0, got {d0}")));
                    }
                    Ok(PathLossKind::GuardZone { d0 })
                } else {
                    Err(Error::InvalidParameter(format!(
                        "unknown path-loss model '{s}' (expected unbounded|bounded|guard:<d0>|shifted)"
                    )))
                }
            }
        }
    }
}

/// Target rate and outage tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageQuery {
    /// nats/s/Hz
    pub target_rate: f64,
    pub epsilon: f64,
}

impl OutageQuery {
    pub fn new(target_rate: f64, epsilon: f64) -> Result<Self> {
        if !(target_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("target rate must be >= 0, got {target_rate}")));
        }
        check_epsilon(epsilon)?;
        Ok(Self { target_rate, epsilon })
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Builds a configuration from flat `key = value` lines
/// (keys: lambda, radius, beams, power, model, alpha, d0). `#` starts a comment.
pub fn parse_config_document(text: &str) -> Result<(SystemConfig, PathLossModel)> {
    let mut lambda = None;
    let mut radius = None;
    let mut beams = None;
    let mut power = None;
    let mut model = None;
    let mut alpha = None;
    let mut d0 = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::InvalidParameter(format!("line {}: expected key = value", lineno + 1)))?;
        let value = value.trim();
        let num = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::InvalidParameter(format!("line {}: '{v}' is not a number", lineno + 1)))
        };
        match key.trim() {
            "lambda" => lambda = Some(num(value)?),
            "radius" => radius = Some(value.parse::<Radius>()?),
            "beams" => {
                beams = Some(value.parse::<u32>().map_err(|_| {
                    Error::InvalidParameter(format!("line {}: beams must be a positive integer", lineno + 1))
                })?)
            }
            "power" => power = Some(num(value)?),
            "model" => model = Some(value.to_string()),
            "alpha" => alpha = Some(num(value)?),
            "d0" => d0 = Some(num(value)?),
            other => return Err(Error::InvalidParameter(format!("line {}: unknown key '{other}'", lineno + 1))),
        }
    }
    let missing = |k: &str| Error::InvalidParameter(format!("missing key '{k}'"));
    let config = SystemConfig::new(
        lambda.ok_or_else(|| missing("lambda"))?,
        radius.ok_or_else(|| missing("radius"))?,
        beams.ok_or_else(|| missing("beams"))?,
        power.ok_or_else(|| missing("power"))?,
    )?;
    let model_name = model.ok_or_else(|| missing("model"))?;
    let kind = match (model_name.as_str(), d0) {
        ("guard", Some(d0)) => PathLossKind::GuardZone { d0 },
        ("guard", None) => return Err(missing("d0")),
        (name, _) => name.parse()?,
    };
    let model = PathLossModel::new(kind, alpha.ok_or_else(|| missing("alpha"))?)?;
    Ok((config, model))
}
