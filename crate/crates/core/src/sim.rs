//! Monte Carlo network simulator.
//!
//! Users are dropped as a Poisson point process in the disk, each user's beam
//! SINRs are drawn from the fading model, and the base station schedules the
//! user with the largest SINR on beam 1. Only beam 1 is recorded per trial:
//! beams within a trial share users and are dependent.
//!
//! Trial `i` draws from ChaCha8 stream `i` under the master seed, so outcomes
//! are bit-identical regardless of thread count or scheduling order.

use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PathLossModel, SystemConfig};

/// Smallest trial count accepted by [`empirical_outage_capacity`].
pub const MIN_CAPACITY_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMode {
    /// Beam projections drawn directly as i.i.d. unit-mean exponentials.
    Projection,
    /// Complex Gaussian channel projected onto random orthonormal beams.
    ExplicitBeams,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::Projection => "projection",
            SimMode::ExplicitBeams => "explicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSeed {
    pub master_seed: u64,
}

impl SimSeed {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Independent random stream for one trial.
    pub fn stream(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(trial);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct User {
    pub distance: f64,
    pub gain: f64,
}

/// Drops `N ~ Poisson(λπD²)` users uniformly in the disk; `d = D√U`.
pub fn drop_users<R: Rng + ?Sized>(config: &SystemConfig, model: &PathLossModel, rng: &mut R) -> Result<Vec<User>> {
    let radius = config.finite_radius("user drop")?;
    let mean = config.mean_users().unwrap_or(0.0);
    let n = if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?;
        poisson.sample(rng) as usize
    } else {
        0
    };
    Ok((0..n)
        .map(|_| {
            // U in (0, 1] keeps the unbounded gain finite
            let u: f64 = 1.0 - rng.random::<f64>();
            let distance = radius * u.sqrt();
            User { distance, gain: model.gain_unchecked(distance) }
        })
        .collect())
}

/// Random orthonormal beams: the Gram–Schmidt factor of an M×M complex
/// Gaussian matrix. `beams[k]` is the k-th beam vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSet {
    pub beams: Vec<Vec<Complex64>>,
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

impl BeamSet {
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let mut beams: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        while beams.len() < m {
            let mut v: Vec<Complex64> = (0..m).map(|_| complex_gaussian(rng)).collect();
            for b in &beams {
                // v -= <b, v> b
                let proj: Complex64 = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-10 {
                v.iter_mut().for_each(|c| *c /= norm);
                beams.push(v);
            }
        }
        Self { beams }
    }

    /// `|hᵀ b_k|²` for every beam.
    pub fn projections(&self, h: &[Complex64]) -> Vec<f64> {
        self.beams
            .iter()
            .map(|b| h.iter().zip(b).map(|(hi, bi)| hi * bi).sum::<Complex64>().norm_sqr())
            .collect()
    }
}

/// `γ_m = P_m / ((ρg)⁻¹ + Σ_{k≠m} P_k)` for every beam, given projection powers `P`.
pub fn sinr_from_projections(projections: &[f64], gain: f64, power: f64) -> Vec<f64> {
    let noise = 1.0 / (power * gain);
    let total: f64 = projections.iter().sum();
    projections.iter().map(|&p| p / (noise + (total - p))).collect()
}

/// SINR of a user with gain `g` on each of the `M` beams.
pub fn beam_sinrs<R: Rng + ?Sized>(
    g: f64,
    config: &SystemConfig,
    rng: &mut R,
    mode: SimMode,
    beams: Option<&BeamSet>,
) -> Result<Vec<f64>> {
    if !(g > 0.0) {
        return Err(Error::Domain(format!("gain must be > 0, got {g}")));
    }
    let m = config.beams as usize;
    let projections = match mode {
        SimMode::Projection => (0..m).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>(),
        SimMode::ExplicitBeams => {
            let owned;
            let set = match beams {
                Some(b) => b,
                None => {
                    owned = BeamSet::random(m, rng);
                    &owned
                }
            };
            let h: Vec<Complex64> = (0..m).map(|_| complex_gaussian(rng)).collect();
            set.projections(&h)
        }
    };
    Ok(sinr_from_projections(&projections, g, config.power))
}

/// Beam-1 SINR only; the Projection path draws exactly `M` exponentials.
fn beam1_sinr<R: Rng + ?Sized>(g: f64, config: &SystemConfig, rng: &mut R, mode: SimMode, beams: Option<&BeamSet>) -> f64 {
    match mode {
        SimMode::Projection => {
            let signal: f64 = Exp1.sample(rng);
            let interference: f64 = (1..config.beams).map(|_| -> f64 { Exp1.sample(rng) }).sum();
            signal / (1.0 / (config.power * g) + interference)
        }
        SimMode::ExplicitBeams => beam_sinrs(g, config, rng, mode, beams).map(|v| v[0]).unwrap_or(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub num_users: usize,
    /// 0 for an empty cell.
    pub max_sinr_beam1: f64,
    /// `log(1 + max_sinr_beam1)`
    pub rate_beam1: f64,
}

/// One network realisation.
pub fn run_trial(config: &SystemConfig, model: &PathLossModel, seed: SimSeed, trial: u64, mode: SimMode) -> Result<TrialOutcome> {
    let mut rng = seed.stream(trial);
    let users = drop_users(config, model, &mut rng)?;
    let beams = match mode {
        SimMode::ExplicitBeams => Some(BeamSet::random(config.beams as usize, &mut rng)),
        SimMode::Projection => None,
    };
    let max_sinr = users
        .iter()
        .map(|u| beam1_sinr(u.gain, config, &mut rng, mode, beams.as_ref()))
        .fold(0.0, f64::max);
    Ok(TrialOutcome { num_users: users.len(), max_sinr_beam1: max_sinr, rate_beam1: max_sinr.ln_1p() })
}

/// Per-beam maximum SINR of one realisation under explicit beams.
pub fn run_trial_all_beams(config: &SystemConfig, model: &PathLossModel, seed: SimSeed, trial: u64) -> Result<Vec<f64>> {
    let mut rng = seed.stream(trial);
    let users = drop_users(config, model, &mut rng)?;
    let beams = BeamSet::random(config.beams as usize, &mut rng);
    let mut best = vec![0.0f64; config.beams as usize];
    for u in &users {
        let s = beam_sinrs(u.gain, config, &mut rng, SimMode::ExplicitBeams, Some(&beams))?;
        for (b, v) in best.iter_mut().zip(s) {
            *b = (*b).max(v);
        }
    }
    Ok(best)
}

/// Sorted sample of beam rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { samples }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn trial_count(&self) -> usize {
        self.samples.len()
    }

    /// `#{s ≤ x} / n`
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }

    /// `#{s < x} / n`
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s < x) as f64 / self.samples.len() as f64
    }

    /// The `⌈q·n⌉`-th order statistic (1-based), `q ∈ (0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.samples.len();
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.samples[k - 1]
    }

    /// Kolmogorov–Smirnov distance to a reference CDF `cdf` with left limits
    /// `cdf_left`, compared on both sides of every distinct sample value so
    /// atoms (the empty-cell mass at 0) are handled exactly.
    pub fn ks_distance<F, L>(&self, cdf: F, cdf_left: L) -> f64
    where
        F: Fn(f64) -> f64,
        L: Fn(f64) -> f64,
    {
        let n = self.samples.len() as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < self.samples.len() {
            let v = self.samples[i];
            let mut j = i;
            while j < self.samples.len() && self.samples[j] == v {
                j += 1;
            }
            let below = i as f64 / n;
            let at = j as f64 / n;
            d = d.max((cdf_left(v) - below).abs()).max((cdf(v) - at).abs());
            i = j;
        }
        d
    }

    /// KS distance to a continuous reference CDF.
    pub fn ks_distance_continuous<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        self.ks_distance(&cdf, &cdf)
    }

    /// One rate per line.
    pub fn write_samples<W: Write>(&self, mut out: W) -> io::Result<()> {
        for s in &self.samples {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }
}

/// 99% Kolmogorov–Smirnov acceptance band, `1.63 / √n`.
pub fn ks_band_99(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub cdf: EmpiricalCdf,
    pub empty_cells: usize,
    pub outcomes: Option<Vec<TrialOutcome>>,
}

/// Runs `trials` independent realisations in parallel and returns the sorted
/// beam-1 rate sample.
pub fn run_trials(
    config: &SystemConfig,
    model: &PathLossModel,
    trials: usize,
    seed: SimSeed,
    mode: SimMode,
    keep_outcomes: bool,
) -> Result<SimulationRun> {
    if trials < 1 {
        return Err(Error::Precondition("at least one trial is required".into()));
    }
    config.finite_radius("Monte Carlo simulation")?;
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(config, model, seed, i, mode))
        .collect::<Result<Vec<_>>>()?;
    let empty_cells = outcomes.iter().filter(|o| o.num_users == 0).count();
    let cdf = EmpiricalCdf::from_samples(outcomes.iter().map(|o| o.rate_beam1).collect());
    Ok(SimulationRun { cdf, empty_cells, outcomes: keep_outcomes.then_some(outcomes) })
}

/// Empirical ε-quantile of the beam rate (lower order statistic `⌈ε·n⌉`).
pub fn empirical_outage_capacity(cdf: &EmpiricalCdf, epsilon: f64) -> Result<f64> {
    crate::model::check_epsilon(epsilon)?;
    if cdf.trial_count() < MIN_CAPACITY_TRIALS {
        return Err(Error::Precondition(format!(
            "empirical outage capacity needs at least {MIN_CAPACITY_TRIALS} trials, got {}",
            cdf.trial_count()
        )));
    }
    Ok(cdf.quantile(epsilon))
}
