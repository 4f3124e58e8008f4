use std::process::{Command, Output};

use obf_outage::outage::{rate_outage, Backend};
use obf_outage::report::CsvReport;
use obf_outage::{PathLossModel, Radius, SystemConfig};

const BIN: &str = env!("CARGO_BIN_EXE_obf-outage");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn csv(args: &[&str]) -> CsvReport {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    CsvReport::parse(&String::from_utf8(out.stdout).unwrap()).unwrap()
}

fn meta<'a>(r: &'a CsvReport, key: &str) -> &'a str {
    &r.metadata.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("missing {key}")).1
}

#[test]
fn outage_shape_contract() {
    let r = csv(&[
        "outage", "--model", "unbounded", "--lambda", "1", "--radius", "inf", "--alpha", "4", "--beams", "2", "--power",
        "1", "--rate-grid", "log:0.01:10:50",
    ]);
    assert_eq!(r.rows.len(), 50);
    assert_eq!(r.header, vec!["x", "F_r:unbounded:lambda=1"]);
    let f = r.column("F_r:unbounded:lambda=1").unwrap();
    assert!(f.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(meta(&r, "radius"), "inf");
}

#[test]
fn outage_zero_rate_is_void_probability() {
    for (lambda, radius) in [(1.0, 1.0), (0.5, 2.0), (3.0, 0.4)] {
        let r = csv(&[
            "outage", "--lambda", &lambda.to_string(), "--radius", &radius.to_string(), "--model", "unbounded,bounded",
            "--rate-grid", "0,1",
        ]);
        let expected = (-lambda * std::f64::consts::PI * radius * radius).exp();
        for row in &r.rows[..1] {
            assert!((row[1] - expected).abs() <= 1e-15 * expected.max(1e-300) + 1e-300, "{row:?}");
            assert!((row[2] - expected).abs() <= 1e-15 * expected.max(1e-300) + 1e-300, "{row:?}");
        }
    }
}

#[test]
fn outage_columns_obey_exponent_relation() {
    for radius in ["1", "inf"] {
        let r = csv(&[
            "outage", "--lambda", "1", "--radius", radius, "--model", "unbounded,bounded", "--rate-grid", "lin:0.05:4:40",
        ]);
        for row in &r.rows {
            let x = row[0].exp_m1();
            let predicted = (-x).exp() * row[1].ln();
            assert!((row[2].ln() - predicted).abs() <= 1e-12 * (1.0 + predicted.abs()), "{radius} {row:?}");
        }
    }
}

#[test]
fn outage_bits_is_display_only() {
    let nats = csv(&["outage", "--rate-grid", "0.5,1,2"]);
    let bits = csv(&["outage", "--rate-grid", "0.5,1,2", "--bits"]);
    assert_eq!(bits.header[0], "x_bits");
    for (n, b) in nats.rows.iter().zip(&bits.rows) {
        assert!((b[0] - n[0] / std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(b[1], n[1]);
    }
}

#[test]
fn outage_quadrature_matches_closed_form_columns() {
    let closed = csv(&["outage", "--lambda", "10", "--radius", "2", "--backend", "closed", "--rate-grid", "lin:0.1:3:10"]);
    let quad = csv(&["outage", "--lambda", "10", "--radius", "2", "--backend", "quadrature", "--rate-grid", "lin:0.1:3:10"]);
    for (c, q) in closed.rows.iter().zip(&quad.rows) {
        assert!((c[1] - q[1]).abs() <= 1e-8);
    }
    let guard = csv(&["outage", "--model", "guard:0.2,shifted", "--radius", "2", "--rate-grid", "0,1"]);
    assert_eq!(guard.header.len(), 3);
}

#[test]
fn capacity_radius_sweep_approaches_asymptote() {
    let r = csv(&[
        "capacity", "--lambda", "10", "--alpha", "4", "--epsilon", "0.1", "--model", "unbounded,bounded", "--sweep",
        "radius", "--grid", "lin:0.25:5:20",
    ]);
    for name in ["unbounded", "bounded"] {
        let c = r.column(&format!("C:{name}")).unwrap();
        let inf = r.column(&format!("C_inf:{name}")).unwrap();
        assert!(c.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{name} not non-decreasing");
        let last = c.len() - 1;
        assert!((c[last] - inf[last]).abs() / inf[last] < 1e-6);
    }
}

#[test]
fn capacity_lambda_sweep_has_doubling_column() {
    let r = csv(&[
        "capacity", "--epsilon", "0.01", "--model", "unbounded,bounded", "--sweep", "lambda", "--grid", "log:1e3:1e6:4",
    ]);
    let ub = r.column("doubling:unbounded").unwrap();
    let b = r.column("doubling:bounded").unwrap();
    let last = ub.len() - 1;
    // unbounded: C grows as α/(α(M−1)+2)·log λ, so C(λ²) − C(λ) ≈ (2/3)·log λ for M=2, α=4
    assert!((ub[last] / (1e6f64.ln() * 2.0 / 3.0) - 1.0).abs() < 0.05);
    assert!((b[last] - std::f64::consts::LN_2).abs() / std::f64::consts::LN_2 < 0.25);
}

#[test]
fn capacity_alpha_sweep_crossover() {
    let at = |lambda: &str| {
        csv(&["capacity", "--lambda", lambda, "--radius", "inf", "--epsilon", "0.01", "--sweep", "alpha", "--grid", "3,4"])
            .column("C:unbounded")
            .unwrap()
    };
    let small = at("0.1");
    let large = at("100");
    assert!(small[1] < small[0]);
    assert!(large[1] > large[0]);
}

#[test]
fn metadata_command_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let out = run(&[
        "capacity", "--lambda", "10", "--model", "bounded", "--sweep", "epsilon", "--grid", "lin:0.05:0.5:4", "--out",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&first).unwrap();
    let report = CsvReport::parse(&text).unwrap();
    let command = meta(&report, "command").to_string();
    let args: Vec<&str> = command.split_whitespace().skip(1).collect();
    let rerun = run(&args);
    assert_eq!(String::from_utf8(rerun.stdout).unwrap(), text);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cell.conf");
    std::fs::write(&path, "# cell\nlambda = 10\nradius = 2\nbeams = 2\npower = 1\nmodel = bounded\nalpha = 4\n").unwrap();
    let from_file = csv(&["outage", "--config", path.to_str().unwrap(), "--rate-grid", "0.5,1"]);
    let from_flags =
        csv(&["outage", "--lambda", "10", "--radius", "2", "--model", "bounded", "--rate-grid", "0.5,1"]);
    assert_eq!(from_file.rows, from_flags.rows);
    let overridden = csv(&["outage", "--config", path.to_str().unwrap(), "--lambda", "1", "--rate-grid", "0.5,1"]);
    assert_eq!(meta(&overridden, "lambda"), "1");
}

#[test]
fn json_output() {
    let out = run(&["outage", "--rate-grid", "0,1", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["metadata"]["beams"], "2");
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[(&[&str], &str)] = &[
        (&["outage", "--alpha", "2"], "alpha must be > 2"),
        (&["outage", "--epsilon", "1"], "epsilon must lie in (0, 1)"),
        (&["capacity", "--epsilon", "0"], "epsilon must lie in (0, 1)"),
        (&["outage", "--power", "0"], "power must be > 0"),
        (&["outage", "--lambda", "-1"], "lambda must be > 0"),
        (&["simulate", "--trials", "10"], "--trials must be >= 1000"),
        (&["simulate", "--radius", "inf"], "finite --radius"),
        (&["outage", "--rate-grid", "3,2"], "strictly increasing"),
        (&["outage", "--model", "parabolic"], "model"),
        (&["capacity", "--sweep", "beams"], "sweep"),
        (&["frobnicate"], "unrecognized subcommand"),
    ];
    for (args, needle) in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("samples.txt");
    let base = ["simulate", "--lambda", "1", "--radius", "1", "--trials", "5000", "--seed", "9"];
    let a = run(&base);
    let b = run(&[&base[..], &["--threads", "1"]].concat());
    let c = run(&[&base[..], &["--threads", "3", "--dump-samples", dump.to_str().unwrap()]].concat());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let samples: Vec<f64> = std::fs::read_to_string(&dump).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(samples.len(), 5000);
    assert!(samples.windows(2).all(|w| w[0] <= w[1]));
    let other_seed = run(&["simulate", "--lambda", "1", "--radius", "1", "--trials", "5000", "--seed", "10"]);
    assert_ne!(a.stdout, other_seed.stdout);
}

#[test]
fn simulate_reports_ks_and_capacities() {
    let r = csv(&["simulate", "--lambda", "1", "--radius", "1", "--trials", "100000", "--seed", "3"]);
    let ks: f64 = meta(&r, "ks_distance").parse().unwrap();
    let band: f64 = meta(&r, "ks_band_99").parse().unwrap();
    assert!(ks <= band && (band - 0.005_154_5).abs() < 1e-6);
    assert_eq!(meta(&r, "ks_pass"), "true");
    let emp: f64 = meta(&r, "empirical_capacity").parse().unwrap();
    let ana: f64 = meta(&r, "analytic_capacity").parse().unwrap();
    assert!(emp > 0.0 && ana > 0.0);
    // the empirical ε-quantile sits where the analytic CDF is within the KS band of ε
    let cfg = SystemConfig::new(1.0, Radius::Finite(1.0), 2, 1.0).unwrap();
    let model = PathLossModel::unbounded(4.0).unwrap();
    let at = rate_outage(&cfg, &model, Backend::Auto, emp).unwrap().rate_cdf_value;
    assert!((at - 0.1).abs() <= band, "{at}");
    let at = rate_outage(&cfg, &model, Backend::Auto, ana).unwrap().rate_cdf_value;
    assert!((at - 0.1).abs() <= 1e-9);
    assert_eq!(r.rows.len(), 101);
    assert_eq!(r.rows[0][0], 0.0);
}

#[test]
fn validate_quick_and_json() {
    let out = run(&["validate", "--quick"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| !l.starts_with("FAIL")));
    let json = run(&["validate", "--quick", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let records = v.as_array().unwrap();
    assert!(records.len() >= 10);
    assert!(records.iter().all(|r| r["passed"] == true && r["name"].is_string()));
}
