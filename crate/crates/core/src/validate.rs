//! Built-in property suite behind `obf-outage validate`.
//!
//! Each property runs over a parameter grid and reports the worst deviation it
//! saw. Quick mode uses subsampled grids and fewer Monte Carlo trials.

use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::{
    capacity_finite_d, large_system_capacity, single_beam_closed_form, solve_capacity_bounded, solve_capacity_unbounded,
    unbounded_log_slope, CapacityEquation, EquationKind, RESIDUAL_TOL,
};
use crate::error::Result;
use crate::model::{PathLossKind, PathLossModel, Radius, SystemConfig};
use crate::outage::{outage_bounded, outage_general, outage_unbounded, rate_outage, Backend};
use crate::sim::{ks_band_99, run_trials, SimMode, SimSeed};
use crate::specfun::{complete_gamma, lower_incomplete_gamma};

pub const ORACLE_TOL: f64 = 1e-8;
pub const EXPONENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_seconds: f64,
}

/// One point of the outage grid: (x, λ, D, α, M).
#[derive(Debug, Clone, Copy)]
pub struct OutagePoint {
    pub x: f64,
    pub lambda: f64,
    pub radius: Radius,
    pub alpha: f64,
    pub beams: u32,
}

impl OutagePoint {
    pub fn config(&self) -> Result<SystemConfig> {
        SystemConfig::new(self.lambda, self.radius, self.beams, 1.0)
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// x log-spaced on [0.1, 10] (20 points), λ ∈ {0.5, 1, 10}, D ∈ {0.5, 1, 2, 5},
/// α ∈ {2.5, 4}, M ∈ {1, 2, 4}. Infinite radius is appended when asked for.
pub fn outage_grid(quick: bool, include_infinite: bool) -> Vec<OutagePoint> {
    let xs = if quick { log_spaced(0.1, 10.0, 5) } else { log_spaced(0.1, 10.0, 20) };
    let lambdas: &[f64] = if quick { &[0.5, 10.0] } else { &[0.5, 1.0, 10.0] };
    let mut radii: Vec<Radius> =
        if quick { vec![Radius::Finite(0.5), Radius::Finite(5.0)] } else { [0.5, 1.0, 2.0, 5.0].map(Radius::Finite).to_vec() };
    if include_infinite {
        radii.push(Radius::Infinite);
    }
    let mut out = Vec::new();
    for &x in &xs {
        for &lambda in lambdas {
            for &radius in &radii {
                for alpha in [2.5, 4.0] {
                    for beams in [1, 2, 4] {
                        out.push(OutagePoint { x, lambda, radius, alpha, beams });
                    }
                }
            }
        }
    }
    out
}

/// One root-equation case: (λ, M, α, ε).
#[derive(Debug, Clone, Copy)]
pub struct RootCase {
    pub lambda: f64,
    pub beams: u32,
    pub alpha: f64,
    pub epsilon: f64,
}

/// λ on a half-decade log grid over [0.1, 1e12], M ∈ {1, 2, 4}, α ∈ {2.5, 4}, ε ∈ {0.01, 0.1}.
pub fn root_grid(quick: bool) -> Vec<RootCase> {
    let lambdas = if quick { log_spaced(0.1, 1e12, 7) } else { log_spaced(0.1, 1e12, 27) };
    let mut out = Vec::new();
    for &lambda in &lambdas {
        for beams in [1, 2, 4] {
            for alpha in [2.5, 4.0] {
                for epsilon in [0.01, 0.1] {
                    out.push(RootCase { lambda, beams, alpha, epsilon });
                }
            }
        }
    }
    out
}

/// Largest |F* quadrature − F* closed form| over the grid, for both models.
pub fn oracle_max_error(grid: &[OutagePoint]) -> Result<f64> {
    let errs = grid
        .par_iter()
        .map(|p| -> Result<f64> {
            let cfg = p.config()?;
            let ub = outage_general(&cfg, &PathLossModel::unbounded(p.alpha)?, p.x)?.sinr_cdf_value;
            let b = outage_general(&cfg, &PathLossModel::bounded(p.alpha)?, p.x)?.sinr_cdf_value;
            let ub_cf = outage_unbounded(&cfg, p.alpha, p.x)?.sinr_cdf_value;
            let b_cf = outage_bounded(&cfg, p.alpha, p.x)?.sinr_cdf_value;
            Ok((ub - ub_cf).abs().max((b - b_cf).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Largest |log F*_b − e^(−x/ρ) log F*_ub| over the grid (closed forms).
pub fn exponent_relation_max_error(grid: &[OutagePoint]) -> Result<f64> {
    let errs = grid
        .par_iter()
        .map(|p| -> Result<f64> {
            let cfg = p.config()?;
            let ub = outage_unbounded(&cfg, p.alpha, p.x)?.exponent;
            let b = outage_bounded(&cfg, p.alpha, p.x)?.exponent;
            Ok((b - (-p.x / cfg.power).exp() * ub).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Largest |log-form residual| of both root equations over the grid.
pub fn root_residual_max(grid: &[RootCase]) -> Result<f64> {
    let res = grid
        .par_iter()
        .map(|c| -> Result<f64> {
            let cfg = SystemConfig::new(c.lambda, Radius::Infinite, c.beams, 1.0)?;
            let ub = solve_capacity_unbounded(&CapacityEquation::new(&cfg, c.alpha, c.epsilon, EquationKind::Unbounded)?)?;
            let b = solve_capacity_bounded(&CapacityEquation::new(&cfg, c.alpha, c.epsilon, EquationKind::Bounded)?)?;
            Ok(ub.residual.abs().max(b.residual.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(res.into_iter().fold(0.0, f64::max))
}

/// Relative gaps |C(D) − C_∞| / C_∞ for (unbounded, bounded).
pub fn radius_gaps(lambda: f64, radius: f64, beams: u32, alpha: f64, epsilon: f64) -> Result<(f64, f64)> {
    let cfg = SystemConfig::new(lambda, Radius::Finite(radius), beams, 1.0)?;
    let inf = cfg.with_radius(Radius::Infinite)?;
    let gap = |model: PathLossModel| -> Result<f64> {
        let finite = capacity_finite_d(&cfg, &model, Backend::Auto, epsilon)?.capacity_nats;
        let asymptote = large_system_capacity(&inf, &model, epsilon)?.capacity_nats;
        Ok((finite - asymptote).abs() / asymptote)
    };
    Ok((gap(PathLossModel::unbounded(alpha)?)?, gap(PathLossModel::bounded(alpha)?)?))
}

/// Large-system capacity for the given law.
pub fn asymptotic_capacity(kind: PathLossKind, lambda: f64, beams: u32, alpha: f64, epsilon: f64) -> Result<f64> {
    let cfg = SystemConfig::new(lambda, Radius::Infinite, beams, 1.0)?;
    Ok(large_system_capacity(&cfg, &PathLossModel::new(kind, alpha)?, epsilon)?.capacity_nats)
}

/// C(λ²) − C(λ) on the large-system capacity.
pub fn doubling_statistic(kind: PathLossKind, lambda: f64, beams: u32, alpha: f64, epsilon: f64) -> Result<f64> {
    Ok(asymptotic_capacity(kind, lambda * lambda, beams, alpha, epsilon)?
        - asymptotic_capacity(kind, lambda, beams, alpha, epsilon)?)
}

/// KS distance of a simulated beam-1 rate CDF to the analytic CDF, and the 99% band.
pub fn simulation_ks(config: &SystemConfig, model: &PathLossModel, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let run = run_trials(config, model, trials, SimSeed::new(seed), SimMode::Projection, false)?;
    let mut distinct = run.cdf.samples().to_vec();
    distinct.dedup();
    let values = distinct
        .par_iter()
        .map(|&x| Ok(rate_outage(config, model, Backend::Auto, x)?.rate_cdf_value))
        .collect::<Result<Vec<f64>>>()?;
    let lookup = |x: f64| values[distinct.partition_point(|&v| v < x)];
    let ks = run.cdf.ks_distance(lookup, |x| if x <= 0.0 { 0.0 } else { lookup(x) });
    Ok((ks, ks_band_99(trials)))
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> PropertyResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    PropertyResult { name: name.to_string(), passed, detail, elapsed_seconds: start.elapsed().as_secs_f64() }
}

fn specfun_identities() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    worst = worst.max((complete_gamma(0.5)? - PI.sqrt()).abs() / PI.sqrt());
    for s in [0.2, 0.5, 2.0 / 3.0, 1.0, 1.25, 2.5, 4.0] {
        for x in [0.01, 0.3, 1.0, 2.5, 7.0, 30.0] {
            let lhs = lower_incomplete_gamma(s + 1.0, x)?;
            let rhs = s * lower_incomplete_gamma(s, x)? - x.powf(s) * (-x).exp();
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1e-300));
        }
        let exp1 = lower_incomplete_gamma(1.0, s)?;
        worst = worst.max((exp1 + (-s).exp_m1()).abs() / exp1);
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.3e}")))
}

fn gain_laws() -> Result<(bool, String)> {
    let ds = log_spaced(1e-3, 1e3, 241);
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for model in [
        PathLossModel::unbounded(4.0)?,
        PathLossModel::bounded(4.0)?,
        PathLossModel::guard_zone(3.0, 0.5)?,
        PathLossModel::shifted(2.5)?,
    ] {
        let mut prev = model.peak_gain();
        for &d in &ds {
            let g = model.gain(d)?;
            monotone &= g <= prev && g > 0.0;
            prev = g;
            let back = model.generalized_inverse(g)?;
            let exact = match model.kind {
                PathLossKind::GuardZone { d0 } => d.max(d0),
                _ => d,
            };
            // bounded gains lose d below d^α ≈ 1e-3 to rounding of 1 + d^α
            let conditioned = !matches!(model.kind, PathLossKind::Bounded) || d.powf(model.alpha) >= 1e-3;
            if conditioned && !matches!(model.kind, PathLossKind::GuardZone { d0 } if d <= d0) {
                worst = worst.max((back - exact).abs() / exact);
            }
        }
    }
    Ok((monotone && worst <= 1e-12, format!("monotone={monotone}, max round-trip error {worst:.3e}")))
}

fn outage_shape(grid: &[OutagePoint]) -> Result<(bool, String)> {
    let mut violations = 0usize;
    for p in grid {
        let cfg = p.config()?;
        let ub = outage_unbounded(&cfg, p.alpha, p.x)?.sinr_cdf_value;
        let b = outage_bounded(&cfg, p.alpha, p.x)?.sinr_cdf_value;
        if b < ub {
            violations += 1;
        }
    }
    // monotone in x along each parameter line
    let mut lines = grid.to_vec();
    lines.sort_by(|a, b| {
        (a.lambda, a.radius.as_f64(), a.alpha, a.beams, a.x)
            .partial_cmp(&(b.lambda, b.radius.as_f64(), b.alpha, b.beams, b.x))
            .expect("finite keys")
    });
    for w in lines.windows(2) {
        let (p, q) = (w[0], w[1]);
        if (p.lambda, p.radius.as_f64(), p.alpha, p.beams) != (q.lambda, q.radius.as_f64(), q.alpha, q.beams) {
            continue;
        }
        for model in [PathLossModel::unbounded(p.alpha)?, PathLossModel::bounded(p.alpha)?] {
            let fp = crate::outage::sinr_outage(&p.config()?, &model, Backend::ClosedForm, p.x)?.sinr_cdf_value;
            let fq = crate::outage::sinr_outage(&q.config()?, &model, Backend::ClosedForm, q.x)?.sinr_cdf_value;
            if fq < fp {
                violations += 1;
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations of x-monotonicity or F_b >= F_ub")))
}

fn single_beam(quick: bool) -> Result<(bool, String)> {
    let lambdas = if quick { log_spaced(0.1, 1e6, 5) } else { log_spaced(0.1, 1e12, 27) };
    let mut worst: f64 = 0.0;
    for &lambda in &lambdas {
        for alpha in [2.5, 4.0] {
            for eps in [0.01, 0.1] {
                let closed = single_beam_closed_form(lambda, 1.0, alpha, eps)?;
                let solved = asymptotic_capacity(PathLossKind::Unbounded, lambda, 1, alpha, eps)?;
                worst = worst.max((solved - closed).abs() / closed.max(1e-300));
            }
        }
    }
    let c = single_beam_closed_form(1.0, 1.0, 4.0, 0.1)?;
    Ok((worst <= 1e-9, format!("C(λ=1,α=4,ε=0.1)={c:.11}, max relative error {worst:.3e}")))
}

fn capacity_order(quick: bool) -> Result<(bool, String)> {
    let lambdas = if quick { log_spaced(0.1, 1e6, 5) } else { log_spaced(0.1, 1e12, 27) };
    let mut violations = 0usize;
    for beams in [1, 2, 4] {
        for alpha in [2.5, 4.0] {
            let caps = |kind: PathLossKind, eps: f64| -> Result<Vec<f64>> {
                lambdas.iter().map(|&l| asymptotic_capacity(kind, l, beams, alpha, eps)).collect()
            };
            for eps in [0.01, 0.1] {
                let ub = caps(PathLossKind::Unbounded, eps)?;
                let b = caps(PathLossKind::Bounded, eps)?;
                violations += ub.windows(2).filter(|w| !(w[1] > w[0])).count();
                violations += b.windows(2).filter(|w| !(w[1] > w[0])).count();
                violations += ub.iter().zip(&b).filter(|(u, b)| b > u).count();
            }
            for kind in [PathLossKind::Unbounded, PathLossKind::Bounded] {
                let lo = caps(kind, 0.01)?;
                let hi = caps(kind, 0.1)?;
                violations += lo.iter().zip(&hi).filter(|(l, h)| !(h > l)).count();
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations of λ/ε monotonicity or C_b <= C_ub")))
}

fn radius_convergence(quick: bool) -> Result<(bool, String)> {
    let radii = if quick { vec![0.5, 1.0, 2.0, 5.0] } else { (1..=20).map(|i| 0.25 * i as f64).collect() };
    let cfg = SystemConfig::new(10.0, Radius::Finite(1.0), 2, 1.0)?;
    let mut violations = 0usize;
    for model in [PathLossModel::unbounded(4.0)?, PathLossModel::bounded(4.0)?] {
        let caps: Vec<f64> = radii
            .iter()
            .map(|&d| Ok(capacity_finite_d(&cfg.with_radius(Radius::Finite(d))?, &model, Backend::Auto, 0.1)?.capacity_nats))
            .collect::<Result<_>>()?;
        violations += caps.windows(2).filter(|w| w[1] < w[0] - 1e-12).count();
        let asymptote = large_system_capacity(&cfg.with_radius(Radius::Infinite)?, &model, 0.1)?.capacity_nats;
        let gap = (caps[caps.len() - 1] - asymptote).abs() / asymptote;
        if gap > 1e-6 {
            violations += 1;
        }
    }
    let (ub2, b2) = radius_gaps(10.0, 2.0, 2, 4.0, 0.1)?;
    if ub2 > 0.05 || b2 > 0.05 || ub2 > b2 {
        violations += 1;
    }
    Ok((violations == 0, format!("{violations} violations; gaps at D=2: unbounded {ub2:.3e}, bounded {b2:.3e}")))
}

fn scaling() -> Result<(bool, String)> {
    let bounded = doubling_statistic(PathLossKind::Bounded, 1e6, 2, 4.0, 0.1)?;
    let bounded_ok = (bounded - LN_2).abs() / LN_2 <= 0.25;
    let mut worst: f64 = 0.0;
    for beams in [1, 2, 4] {
        for alpha in [2.5, 4.0] {
            let c1 = asymptotic_capacity(PathLossKind::Unbounded, 1e10, beams, alpha, 0.1)?;
            let c2 = asymptotic_capacity(PathLossKind::Unbounded, 1e12, beams, alpha, 0.1)?;
            let slope = (c2 - c1) / (1e12f64.ln() - 1e10f64.ln());
            let target = unbounded_log_slope(beams, alpha);
            worst = worst.max((slope - target).abs() / target);
        }
    }
    Ok((
        bounded_ok && worst <= 0.02,
        format!("bounded doubling {bounded:.4} vs ln 2; unbounded log-λ slope max relative error {worst:.3e}"),
    ))
}

fn alpha_crossover() -> Result<(bool, String)> {
    let c = |lambda: f64, alpha: f64| asymptotic_capacity(PathLossKind::Unbounded, lambda, 2, alpha, 0.01);
    let (s3, s4) = (c(0.1, 3.0)?, c(0.1, 4.0)?);
    let (l3, l4) = (c(100.0, 3.0)?, c(100.0, 4.0)?);
    Ok((
        s4 < s3 && l4 > l3,
        format!("λ=0.1: C(3)={s3:.5} C(4)={s4:.5}; λ=100: C(3)={l3:.5} C(4)={l4:.5}"),
    ))
}

fn root_residuals(quick: bool) -> Result<(bool, String)> {
    let grid = root_grid(quick);
    let worst = root_residual_max(&grid)?;
    Ok((worst <= RESIDUAL_TOL, format!("{} cases, max residual {worst:.3e}", grid.len())))
}

fn monte_carlo(quick: bool) -> Result<(bool, String)> {
    let trials = if quick { 5_000 } else { 100_000 };
    let cfg = SystemConfig::new(1.0, Radius::Finite(1.0), 2, 1.0)?;
    let mut detail = Vec::new();
    let mut ok = true;
    for model in [PathLossModel::unbounded(4.0)?, PathLossModel::bounded(4.0)?] {
        let (ks, band) = simulation_ks(&cfg, &model, trials, 7)?;
        ok &= ks <= band;
        detail.push(format!("{}: KS {ks:.4} (band {band:.4})", model.label()));
    }
    Ok((ok, detail.join("; ")))
}

fn determinism() -> Result<(bool, String)> {
    let cfg = SystemConfig::new(2.0, Radius::Finite(1.5), 2, 1.0)?;
    let model = PathLossModel::unbounded(4.0)?;
    let run = |threads: usize| -> Result<Vec<f64>> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| Ok(run_trials(&cfg, &model, 2_000, SimSeed::new(11), SimMode::Projection, false)?.cdf.samples().to_vec()))
    };
    let a = run(1)?;
    let b = run(4)?;
    let c = run(4)?;
    let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()) && a.len() == b.len() && b == c;
    Ok((same, format!("1 vs 4 workers bit-identical: {same}")))
}

pub fn run_suite(quick: bool) -> Vec<PropertyResult> {
    let finite = outage_grid(quick, false);
    let with_inf = outage_grid(quick, true);
    vec![
        check("specfun_identities", specfun_identities),
        check("gain_monotone_and_inverse", gain_laws),
        check("oracle_equivalence", || {
            let e = oracle_max_error(&finite)?;
            Ok((e <= ORACLE_TOL, format!("{} points, max |quadrature - closed form| {e:.3e}", finite.len())))
        }),
        check("exponent_relation", || {
            let e = exponent_relation_max_error(&with_inf)?;
            Ok((e <= EXPONENT_TOL, format!("{} points, max log-domain error {e:.3e}", with_inf.len())))
        }),
        check("outage_monotone_and_bounded_dominance", || outage_shape(&with_inf)),
        check("single_beam_closed_form", || single_beam(quick)),
        check("root_residuals", || root_residuals(quick)),
        check("capacity_monotone_and_ordering", || capacity_order(quick)),
        check("radius_convergence", || radius_convergence(quick)),
        check("scaling_slopes", scaling),
        check("alpha_crossover", alpha_crossover),
        check("monte_carlo_ks", || monte_carlo(quick)),
        check("determinism", determinism),
    ]
}

pub fn to_text(results: &[PropertyResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{} {} ({:.2} s): {}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.elapsed_seconds,
            r.detail
        ));
    }
    let passed = results.iter().filter(|r| r.passed).count();
    out.push_str(&format!("{passed}/{} properties passed\n", results.len()));
    out
}

pub fn to_json(results: &[PropertyResult]) -> String {
    serde_json::to_string_pretty(results).expect("results serialise") + "\n"
}
