//! Command-line front end: argument parsing, the four subcommands and exit codes.

use std::f64::consts::LN_2;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::capacity::{capacity_finite_d, large_system_capacity};
use crate::error::{Error, Result};
use crate::model::{check_epsilon, parse_config_document, PathLossKind, PathLossModel, Radius, SystemConfig};
use crate::outage::{rate_outage, Backend};
use crate::report::{CsvReport, Grid, SweepSpec, SweepVariable};
use crate::sim::{empirical_outage_capacity, ks_band_99, run_trials, SimMode, SimSeed, MIN_CAPACITY_TRIALS};
use crate::validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const TOOL: &str = concat!("obf-outage ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(
    name = "obf-outage",
    version,
    about = "Beam outage probability and outage capacity of opportunistic beamforming with Poisson users",
    after_help = "Grids: lin:START:STOP:COUNT, log:START:STOP:COUNT or a comma-separated list.\n\
                  Rates are in nats/s/Hz; --bits converts the displayed rate columns to bits/s/Hz."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Beam outage probability F_r(x) over a rate grid.
    #[command(allow_negative_numbers = true)]
    Outage(OutageArgs),
    /// Beam outage capacity over a sweep of radius, lambda, alpha or epsilon.
    #[command(allow_negative_numbers = true)]
    Capacity(CapacityArgs),
    /// Monte Carlo network simulation checked against the analytic CDF.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Run the built-in property suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Auto,
    Closed,
    Quadrature,
}

impl BackendArg {
    fn backend(self) -> Backend {
        match self {
            BackendArg::Auto => Backend::Auto,
            BackendArg::Closed => Backend::ClosedForm,
            BackendArg::Quadrature => Backend::Quadrature,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            BackendArg::Auto => "auto",
            BackendArg::Closed => "closed",
            BackendArg::Quadrature => "quadrature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Projection,
    Explicit,
}

/// Flags shared by every evaluation subcommand. Unset flags fall back to the
/// `--config` document, then to the built-in defaults.
#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Flat key = value file (lambda, radius, beams, power, model, alpha, d0).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// User intensity; a comma-separated list is accepted by `outage`.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Cell radius or `inf`.
    #[arg(long)]
    pub radius: Option<String>,
    #[arg(long)]
    pub beams: Option<u32>,
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// unbounded | bounded | guard:<d0> | shifted; comma-separated list accepted by `outage` and `capacity`.
    #[arg(long, value_delimiter = ',')]
    pub model: Vec<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    /// Display rate columns in bits/s/Hz.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutageArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Single target rate (nats/s/Hz).
    #[arg(long, conflicts_with = "rate_grid")]
    pub rate: Option<f64>,
    /// Rate grid (nats/s/Hz).
    #[arg(long)]
    pub rate_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    pub backend: BackendArg,
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Swept variable: radius | lambda | alpha | epsilon.
    #[arg(long, default_value = "radius")]
    pub sweep: String,
    #[arg(long, default_value = "lin:0.25:5:20")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    pub backend: BackendArg,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Projection)]
    pub mode: ModeArg,
    /// Rate grid for the CDF table; defaults to 101 points from 0 to the largest sample.
    #[arg(long)]
    pub rate_grid: Option<String>,
    /// Worker threads (output does not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Also write the sorted raw rate samples, one per line.
    #[arg(long)]
    pub dump_samples: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Subsampled grids.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved shared parameters.
#[derive(Debug, Clone)]
struct Resolved {
    lambdas: Vec<f64>,
    radius: Radius,
    beams: u32,
    power: f64,
    alpha: f64,
    models: Vec<PathLossKind>,
    model_names: Vec<String>,
    epsilon: f64,
}

impl Resolved {
    fn config(&self, lambda: f64) -> Result<SystemConfig> {
        SystemConfig::new(lambda, self.radius, self.beams, self.power)
    }

    fn model(&self, kind: PathLossKind) -> Result<PathLossModel> {
        PathLossModel::new(kind, self.alpha)
    }

    /// Shared flags in canonical form, for the reproduction command line.
    fn canonical_flags(&self) -> String {
        let lambdas: Vec<String> = self.lambdas.iter().map(|l| l.to_string()).collect();
        format!(
            "--lambda {} --radius {} --beams {} --power {} --alpha {} --model {} --epsilon {}",
            lambdas.join(","),
            self.radius,
            self.beams,
            self.power,
            self.alpha,
            self.model_names.join(","),
            self.epsilon
        )
    }

    fn annotate(&self, report: &mut CsvReport) {
        report
            .meta("lambda", self.lambdas.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";"))
            .meta("radius", self.radius)
            .meta("beams", self.beams)
            .meta("power", self.power)
            .meta("alpha", self.alpha)
            .meta("model", self.model_names.join(";"))
            .meta("epsilon", self.epsilon);
    }
}

fn resolve(args: &SystemArgs, default_radius: Radius) -> Result<Resolved> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
            Some(parse_config_document(&text)?)
        }
        None => None,
    };
    let lambdas = if !args.lambda.is_empty() {
        args.lambda.clone()
    } else {
        vec![file.map_or(1.0, |(c, _)| c.lambda)]
    };
    let radius = match &args.radius {
        Some(r) => r.parse()?,
        None => file.map_or(default_radius, |(c, _)| c.radius),
    };
    let beams = args.beams.or(file.map(|(c, _)| c.beams)).unwrap_or(2);
    let power = args.power.or(file.map(|(c, _)| c.power)).unwrap_or(1.0);
    let alpha = args.alpha.or(file.map(|(_, m)| m.alpha)).unwrap_or(4.0);
    let model_names = if !args.model.is_empty() {
        args.model.iter().map(|m| m.trim().to_ascii_lowercase()).collect()
    } else {
        vec![file.map_or("unbounded".to_string(), |(_, m)| m.label())]
    };
    let models = model_names.iter().map(|m| m.parse()).collect::<Result<Vec<PathLossKind>>>()?;
    let epsilon = args.epsilon.unwrap_or(0.1);

    for &l in &lambdas {
        SystemConfig::new(l, radius, beams, power)?;
    }
    for &k in &models {
        PathLossModel::new(k, alpha)?;
    }
    check_epsilon(epsilon)?;
    Ok(Resolved { lambdas, radius, beams, power, alpha, models, model_names, epsilon })
}

fn rate_label(bits: bool) -> &'static str {
    if bits {
        "x_bits"
    } else {
        "x"
    }
}

fn display_rate(x: f64, bits: bool) -> f64 {
    if bits {
        x / LN_2
    } else {
        x
    }
}

/// Output of a subcommand: the rendered text and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub text: String,
    pub exit_code: i32,
}

fn render(report: &CsvReport, json: bool) -> String {
    if json {
        report.to_json()
    } else {
        report.to_csv()
    }
}

pub fn cmd_outage(args: &OutageArgs) -> Result<CsvReport> {
    let r = resolve(&args.system, Radius::Finite(1.0))?;
    let grid_spec = match (args.rate, &args.rate_grid) {
        (Some(x), _) => x.to_string(),
        (None, Some(g)) => g.clone(),
        (None, None) => "lin:0:5:51".to_string(),
    };
    let grid: Grid = grid_spec.parse()?;
    if grid.values()[0] < 0.0 {
        return Err(Error::InvalidParameter("target rates must be >= 0".into()));
    }
    let sweep = SweepSpec { variable: SweepVariable::X, grid };
    let backend = args.backend.backend();

    let mut columns = Vec::new();
    for (kind, name) in r.models.iter().zip(&r.model_names) {
        for &lambda in &r.lambdas {
            columns.push((*kind, name.clone(), lambda));
        }
    }
    let mut header = vec![rate_label(args.system.bits).to_string()];
    header.extend(columns.iter().map(|(_, name, lambda)| format!("F_r:{name}:lambda={lambda}")));
    let mut report = CsvReport::new(header);
    report.meta("tool", TOOL).meta(
        "command",
        format!(
            "obf-outage outage {} --rate-grid {} --backend {}{}{}",
            r.canonical_flags(),
            grid_spec,
            args.backend.as_str(),
            if args.system.bits { " --bits" } else { "" },
            if args.system.json { " --json" } else { "" },
        ),
    );
    r.annotate(&mut report);
    report.meta("sweep", sweep.variable.as_str()).meta("grid", &grid_spec).meta("backend", args.backend.as_str()).meta(
        "units",
        if args.system.bits { "bits/s/Hz" } else { "nats/s/Hz" },
    );

    let rows = sweep
        .grid
        .values()
        .par_iter()
        .map(|&x| -> Result<Vec<f64>> {
            let mut row = vec![display_rate(x, args.system.bits)];
            for (kind, _, lambda) in &columns {
                let cfg = r.config(*lambda)?;
                row.push(rate_outage(&cfg, &r.model(*kind)?, backend, x)?.rate_cdf_value);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    for row in rows {
        report.push_row(row)?;
    }
    Ok(report)
}

pub fn cmd_capacity(args: &CapacityArgs) -> Result<CsvReport> {
    let r = resolve(&args.system, Radius::Finite(1.0))?;
    let variable: SweepVariable = args.sweep.parse()?;
    if variable == SweepVariable::X {
        return Err(Error::InvalidParameter("capacity sweeps radius, lambda, alpha or epsilon".into()));
    }
    if r.lambdas.len() > 1 {
        return Err(Error::InvalidParameter("capacity takes a single --lambda (sweep lambda with --sweep lambda)".into()));
    }
    let grid: Grid = args.grid.parse()?;
    let sweep = SweepSpec { variable, grid };
    let backend = args.backend.backend();
    let bits = args.system.bits;

    let unit = |c: f64| display_rate(c, bits);
    let suffix = if bits { "_bits" } else { "" };
    let mut header = vec![variable.as_str().to_string()];
    for name in &r.model_names {
        header.push(format!("C{suffix}:{name}"));
        header.push(format!("C_inf{suffix}:{name}"));
        header.push(format!("floor:{name}"));
        if variable == SweepVariable::Lambda {
            header.push(format!("doubling{suffix}:{name}"));
        }
    }
    let mut report = CsvReport::new(header);
    report.meta("tool", TOOL).meta(
        "command",
        format!(
            "obf-outage capacity {} --sweep {} --grid {} --backend {}{}{}",
            r.canonical_flags(),
            variable.as_str(),
            args.grid,
            args.backend.as_str(),
            if bits { " --bits" } else { "" },
            if args.system.json { " --json" } else { "" },
        ),
    );
    r.annotate(&mut report);
    report
        .meta("sweep", variable.as_str())
        .meta("grid", &args.grid)
        .meta("backend", args.backend.as_str())
        .meta("units", if bits { "bits/s/Hz" } else { "nats/s/Hz" });

    let lambda = r.lambdas[0];
    let rows = sweep
        .grid
        .values()
        .par_iter()
        .map(|&v| -> Result<Vec<f64>> {
            let (mut lambda, mut radius, mut alpha, mut eps) = (lambda, r.radius, r.alpha, r.epsilon);
            match variable {
                SweepVariable::Lambda => lambda = v,
                SweepVariable::Radius => radius = Radius::Finite(v),
                SweepVariable::Alpha => alpha = v,
                SweepVariable::Epsilon => eps = v,
                SweepVariable::X => unreachable!(),
            }
            check_epsilon(eps)?;
            let cfg = SystemConfig::new(lambda, radius, r.beams, r.power)?;
            let mut row = vec![v];
            for kind in &r.models {
                let model = PathLossModel::new(*kind, alpha)?;
                let sol = capacity_finite_d(&cfg, &model, backend, eps)?;
                let inf_cfg = cfg.with_radius(Radius::Infinite)?;
                let asymptote = match large_system_capacity(&inf_cfg, &model, eps) {
                    Ok(s) => s.capacity_nats,
                    Err(Error::Unsupported(_)) => f64::NAN,
                    Err(e) => return Err(e),
                };
                row.push(unit(sol.capacity_nats));
                row.push(unit(asymptote));
                row.push(if sol.outage_floor { 1.0 } else { 0.0 });
                if variable == SweepVariable::Lambda {
                    let squared = inf_cfg.with_lambda(lambda * lambda)?;
                    let doubling = match large_system_capacity(&squared, &model, eps) {
                        Ok(s) => s.capacity_nats - asymptote,
                        Err(Error::Unsupported(_)) => f64::NAN,
                        Err(e) => return Err(e),
                    };
                    row.push(unit(doubling));
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    for row in rows {
        report.push_row(row)?;
    }
    Ok(report)
}

/// Result of `simulate`: the report plus whether the KS check passed.
pub struct SimulationReport {
    pub report: CsvReport,
    pub ks_distance: f64,
    pub ks_band: f64,
    pub samples: crate::sim::EmpiricalCdf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulationReport> {
    let r = resolve(&args.system, Radius::Finite(1.0))?;
    if r.radius.is_infinite() {
        return Err(Error::InvalidParameter("simulate needs a finite --radius".into()));
    }
    if r.lambdas.len() != 1 || r.models.len() != 1 {
        return Err(Error::InvalidParameter("simulate takes a single --lambda and a single --model".into()));
    }
    if args.trials < MIN_CAPACITY_TRIALS {
        return Err(Error::Precondition(format!("--trials must be >= {MIN_CAPACITY_TRIALS}, got {}", args.trials)));
    }
    let cfg = r.config(r.lambdas[0])?;
    let model = r.model(r.models[0])?;
    let mode = match args.mode {
        ModeArg::Projection => SimMode::Projection,
        ModeArg::Explicit => SimMode::ExplicitBeams,
    };
    let seed = SimSeed::new(args.seed);

    let run = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| run_trials(&cfg, &model, args.trials, seed, mode, false))?,
        None => run_trials(&cfg, &model, args.trials, seed, mode, false)?,
    };
    let cdf = run.cdf;

    let analytic = |x: f64| -> Result<f64> { Ok(rate_outage(&cfg, &model, Backend::Auto, x)?.rate_cdf_value) };
    // distinct sample values, evaluated in parallel
    let mut distinct: Vec<f64> = cdf.samples().to_vec();
    distinct.dedup();
    let values = distinct.par_iter().map(|&x| analytic(x)).collect::<Result<Vec<_>>>()?;
    let lookup = |x: f64| -> f64 {
        let i = distinct.partition_point(|&v| v < x);
        values[i]
    };
    let ks = cdf.ks_distance(lookup, |x| if x <= 0.0 { 0.0 } else { lookup(x) });
    let band = ks_band_99(cdf.trial_count());

    let empirical_cap = empirical_outage_capacity(&cdf, r.epsilon)?;
    let analytic_cap = capacity_finite_d(&cfg, &model, Backend::Auto, r.epsilon)?;

    let grid_spec = match &args.rate_grid {
        Some(g) => g.clone(),
        None => {
            let top = cdf.samples().last().copied().unwrap_or(0.0);
            if top > 0.0 {
                format!("lin:0:{top}:101")
            } else {
                "0".to_string()
            }
        }
    };
    let grid: Grid = grid_spec.parse()?;
    let bits = args.system.bits;
    let mut report = CsvReport::new(vec![rate_label(bits).into(), "F_empirical".into(), "F_analytic".into()]);
    report.meta("tool", TOOL).meta(
        "command",
        format!(
            "obf-outage simulate {} --trials {} --seed {} --mode {}{}{}{}",
            r.canonical_flags(),
            args.trials,
            args.seed,
            mode.as_str(),
            args.rate_grid.as_ref().map(|g| format!(" --rate-grid {g}")).unwrap_or_default(),
            if bits { " --bits" } else { "" },
            if args.system.json { " --json" } else { "" },
        ),
    );
    r.annotate(&mut report);
    report
        .meta("trials", args.trials)
        .meta("seed", args.seed)
        .meta("mode", mode.as_str())
        .meta("units", if bits { "bits/s/Hz" } else { "nats/s/Hz" })
        .meta("empty_cells", run.empty_cells)
        .meta("ks_distance", ks)
        .meta("ks_band_99", band)
        .meta("ks_pass", ks <= band)
        .meta("empirical_capacity", display_rate(empirical_cap, bits))
        .meta("analytic_capacity", display_rate(analytic_cap.capacity_nats, bits))
        .meta("analytic_outage_floor", analytic_cap.outage_floor);
    let rows = grid
        .values()
        .par_iter()
        .map(|&x| -> Result<Vec<f64>> { Ok(vec![display_rate(x, bits), cdf.cdf(x), analytic(x)?]) })
        .collect::<Result<Vec<_>>>()?;
    for row in rows {
        report.push_row(row)?;
    }
    Ok(SimulationReport { report, ks_distance: ks, ks_band: band, samples: cdf })
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Numeric { .. } => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

fn write_output(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))),
        None => Ok(()),
    }
}

/// Runs a parsed command. Text goes to `--out` when given and is also
/// returned so the caller can print it to stdout otherwise.
pub fn execute(cli: &Cli) -> std::result::Result<CommandOutput, (String, i32)> {
    let fail = |e: Error| (format!("error: {e}"), exit_code_for(&e));
    let (text, code, out) = match &cli.command {
        Command::Outage(a) => {
            let report = cmd_outage(a).map_err(fail)?;
            (render(&report, a.system.json), EXIT_OK, &a.system.out)
        }
        Command::Capacity(a) => {
            let report = cmd_capacity(a).map_err(fail)?;
            (render(&report, a.system.json), EXIT_OK, &a.system.out)
        }
        Command::Simulate(a) => {
            let sim = cmd_simulate(a).map_err(fail)?;
            if let Some(path) = &a.dump_samples {
                let file = std::fs::File::create(path)
                    .map_err(|e| (format!("error: cannot write {}: {e}", path.display()), EXIT_USAGE))?;
                sim.samples
                    .write_samples(std::io::BufWriter::new(file))
                    .map_err(|e| (format!("error: {e}"), EXIT_FAILURE))?;
            }
            let code = if sim.ks_distance <= sim.ks_band { EXIT_OK } else { EXIT_FAILURE };
            (render(&sim.report, a.system.json), code, &a.system.out)
        }
        Command::Validate(a) => {
            let results = validate::run_suite(a.quick);
            let code = if results.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_FAILURE };
            let text = if a.json { validate::to_json(&results) } else { validate::to_text(&results) };
            (text, code, &a.out)
        }
    };
    write_output(&text, out).map_err(fail)?;
    Ok(CommandOutput { text: if out.is_some() { String::new() } else { text }, exit_code: code })
}
