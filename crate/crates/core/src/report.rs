//! Parameter grids and the CSV report format.
//!
//! A report is `#`-prefixed `key=value` metadata lines, one header line and
//! comma-separated numeric rows.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// A strictly increasing, non-empty list of values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    values: Vec<f64>,
}

impl Grid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("grid must not be empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid values must be finite".into()));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    pub fn linear(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("grid count must be >= 1".into()));
        }
        if count == 1 {
            return Self::new(vec![start]);
        }
        let step = (stop - start) / (count - 1) as f64;
        Self::new((0..count).map(|i| if i == count - 1 { stop } else { start + step * i as f64 }).collect())
    }

    pub fn logarithmic(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start > 0.0 && stop > 0.0) {
            return Err(Error::InvalidParameter("log grid endpoints must be > 0".into()));
        }
        let lin = Self::linear(start.ln(), stop.ln(), count)?;
        let n = lin.values.len();
        Self::new(
            lin.values
                .iter()
                .enumerate()
                .map(|(i, v)| match i {
                    0 => start,
                    _ if i == n - 1 => stop,
                    _ => v.exp(),
                })
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `lin:start:stop:count`, `log:start:stop:count` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad grid '{s}' (use lin:a:b:n, log:a:b:n or v1,v2,...)"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            [kind @ ("lin" | "log"), a, b, n] => {
                let a: f64 = a.parse().map_err(|_| bad())?;
                let b: f64 = b.parse().map_err(|_| bad())?;
                let n: usize = n.parse().map_err(|_| bad())?;
                if *kind == "lin" {
                    Grid::linear(a, b, n)
                } else {
                    Grid::logarithmic(a, b, n)
                }
            }
            [list] => Grid::new(
                list.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => Err(bad()),
        }
    }
}

/// Shortest round-trip decimal, switching to exponent form outside [1e-4, 1e15).
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepVariable {
    X,
    Lambda,
    Radius,
    Alpha,
    Epsilon,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::X => "x",
            SweepVariable::Lambda => "lambda",
            SweepVariable::Radius => "radius",
            SweepVariable::Alpha => "alpha",
            SweepVariable::Epsilon => "epsilon",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "rate" => Ok(SweepVariable::X),
            "lambda" => Ok(SweepVariable::Lambda),
            "radius" => Ok(SweepVariable::Radius),
            "alpha" => Ok(SweepVariable::Alpha),
            "epsilon" => Ok(SweepVariable::Epsilon),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep variable '{other}' (expected x|lambda|radius|alpha|epsilon)"
            ))),
        }
    }
}

/// A variable swept over a grid with everything else held fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvReport {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvReport {
    pub fn new(header: Vec<String>) -> Self {
        Self { metadata: Vec::new(), header, rows: Vec::new() }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::InvalidParameter(format!(
                "row has {} fields, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(self.to_csv().as_bytes())
    }

    pub fn to_json(&self) -> String {
        let metadata: serde_json::Map<String, serde_json::Value> =
            self.metadata.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect();
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::Value::Object(
                    self.header
                        .iter()
                        .zip(r)
                        .map(|(h, v)| (h.clone(), serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into)))
                        .collect(),
                )
            })
            .collect();
        let doc = serde_json::json!({ "metadata": metadata, "header": self.header, "rows": rows });
        serde_json::to_string_pretty(&doc).expect("report serialises") + "\n"
    }

    /// Parses the CSV text produced by [`CsvReport::to_csv`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.peek() {
            let Some(rest) = line.strip_prefix('#') else { break };
            let rest = rest.trim();
            let (k, v) = rest.split_once('=').unwrap_or((rest, ""));
            metadata.push((k.to_string(), v.to_string()));
            lines.next();
        }
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::InvalidParameter("missing CSV header".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut report = CsvReport { metadata, header, rows: Vec::new() };
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad CSV field '{f}'"))))
                .collect::<Result<Vec<_>>>()?;
            report.push_row(row)?;
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g: Grid = "log:0.01:10:50".parse().unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g.values()[0], 0.01);
        assert_eq!(g.values()[49], 10.0);
        let l: Grid = "lin:0:1:5".parse().unwrap();
        assert_eq!(l.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let e: Grid = "1,2.5,4".parse().unwrap();
        assert_eq!(e.values(), &[1.0, 2.5, 4.0]);
        assert!("3,2".parse::<Grid>().is_err());
        assert!("log:0:1:3".parse::<Grid>().is_err());
        assert!("lin:0:1:0".parse::<Grid>().is_err());
        assert!("cubic:0:1:3".parse::<Grid>().is_err());
        assert!("".parse::<Grid>().is_err());
    }

    #[test]
    fn csv_round_trip_and_arity() {
        let mut r = CsvReport::new(vec!["x".into(), "F_r".into()]);
        r.meta("tool", "obf-outage 0.1.0").meta("lambda", 1.0);
        r.push_row(vec![0.0, 0.043_213_918_263_772_25]).unwrap();
        r.push_row(vec![1.5, 1.0]).unwrap();
        assert!(r.push_row(vec![1.0]).is_err());
        let text = r.to_csv();
        assert!(text.starts_with("# tool=obf-outage 0.1.0\n# lambda=1\nx,F_r\n"));
        let back = CsvReport::parse(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.column("F_r").unwrap(), vec![0.043_213_918_263_772_25, 1.0]);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["rows"][1]["x"], 1.5);
        assert_eq!(json["metadata"]["lambda"], "1");
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, 0.5, 1e-4, 1.144_871_977_841_909_3e-12, 2.27e-14, 3.5e20, -7.25e-9, 123_456.789] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_number(1.144_871_977_841_909_3e-12), "1.1448719778419093e-12");
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn sweep_variable_names() {
        for v in ["x", "lambda", "radius", "alpha", "epsilon"] {
            assert_eq!(v.parse::<SweepVariable>().unwrap().as_str(), v);
        }
        assert!("beams".parse::<SweepVariable>().is_err());
    }
}
