//! Command implementations. Each returns its report as text so the
//! dispatcher owns every write to stdout and disk.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::certify::certify;
use crate::channel::{CovSplit, RateTriple};
use crate::error::{Error, Result};
use crate::matcore::SymMatrix;
use crate::optimizer::{grid_oracle, maximize_weighted, trace_surface, RegionSample, SolverConfig, SolverResult, Weights};

use super::config::{ChannelConfig, Units};

/// Text for stdout plus the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub exit: i32,
}

impl CommandOutput {
    fn ok(stdout: String) -> Self {
        Self { stdout, exit: 0 }
    }
}

/// Exit status for an error: 1 for bad input, 3 for a failed
/// certificate, 2 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidWeights(_) | Error::UnsupportedDim(_) | Error::InvalidResolution(_) | Error::InfeasibleTarget { .. } => 1,
        Error::NoCertificate { .. } => 3,
        _ => 2,
    }
}

/// Exactly 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn rows(m: &SymMatrix) -> Value {
    json!(m.to_rows())
}

fn rates_json(r: &RateTriple, units: Units) -> Value {
    let k = units.from_nats();
    json!({ "r0": r.r0 * k, "r1": r.r1 * k, "r2": r.r2 * k })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn weights(l1: f64, l2: f64, r0: f64, units: Units) -> Result<Weights> {
    Weights::new(l1, l2, r0 * units.to_nats())
}

/// Parameters of a region trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOptions {
    pub r0_steps: usize,
    pub weight_steps: usize,
    pub units: Units,
    pub dump_covariances: bool,
}

fn covariance_header(dim: usize) -> String {
    let mut cols = Vec::new();
    for block in ["b0", "b1"] {
        for i in 1..=dim {
            for j in 1..=dim {
                cols.push(format!("{block}_{i}{j}"));
            }
        }
    }
    cols.join(",")
}

/// Boundary CSV: `r0_target,theta,r0,r1,r2,units`, optionally followed by
/// row-major `B0` and `B1` entries. Rows come sorted by `(r0_target, theta)`.
pub fn region_csv(samples: &[RegionSample], dim: usize, opts: &RegionOptions) -> String {
    let k = opts.units.from_nats();
    let mut out = String::from("r0_target,theta,r0,r1,r2,units");
    if opts.dump_covariances {
        out.push(',');
        out.push_str(&covariance_header(dim));
    }
    out.push('\n');
    for s in samples {
        let fields = [s.weights.r0_target * k, s.theta, s.rates.r0 * k, s.rates.r1 * k, s.rates.r2 * k];
        let line: Vec<String> = fields.iter().map(|&x| fmt_real(x)).collect();
        out.push_str(&line.join(","));
        let _ = write!(out, ",{}", opts.units);
        if opts.dump_covariances {
            for m in [&s.split.b0, &s.split.b1] {
                for x in m.as_slice() {
                    let _ = write!(out, ",{}", fmt_real(*x));
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn cmd_region(cfg: &ChannelConfig, solver: &SolverConfig, opts: &RegionOptions) -> Result<String> {
    let samples = trace_surface(&cfg.aligned, opts.r0_steps, opts.weight_steps, solver)?;
    Ok(region_csv(&samples, cfg.tx_dim(), opts))
}

fn solution_json(res: &SolverResult, units: Units) -> Map<String, Value> {
    let k = units.from_nats();
    let mut m = Map::new();
    m.insert("value".into(), json!(res.value * k));
    m.insert("rates".into(), rates_json(&res.rates, units));
    m.insert("B0".into(), rows(&res.split.b0));
    m.insert("B1".into(), rows(&res.split.b1));
    let active: Vec<String> = res.active_constraints.iter().map(ToString::to_string).collect();
    m.insert("active_constraints".into(), json!(active));
    m
}

/// Single weighted maximization. The report doubles as a `--solution` file.
pub fn cmd_maximize(cfg: &ChannelConfig, solver: &SolverConfig, l1: f64, l2: f64, r0: f64, units: Units) -> Result<CommandOutput> {
    let w = weights(l1, l2, r0, units)?;
    let res = maximize_weighted(&cfg.aligned, &w, solver)?;
    let mut m = Map::new();
    m.insert("command".into(), json!("maximize"));
    m.insert("units".into(), json!(units));
    m.insert("lambda1".into(), json!(w.lambda1));
    m.insert("lambda2".into(), json!(w.lambda2));
    m.insert("r0_target".into(), json!(r0));
    m.insert("seed".into(), json!(solver.seed));
    m.extend(solution_json(&res, units));
    m.insert("converged".into(), json!(res.converged));
    m.insert("iterations".into(), json!(res.iterations));
    Ok(CommandOutput::ok(pretty(&Value::Object(m))))
}

#[derive(Deserialize)]
struct SolutionFile {
    #[serde(rename = "B0")]
    b0: Vec<Vec<f64>>,
    #[serde(rename = "B1")]
    b1: Vec<Vec<f64>>,
}

/// Reads `B0`, `B1` from a JSON file; other keys are ignored.
pub fn load_solution(path: &Path) -> Result<CovSplit> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let f: SolutionFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    CovSplit::new(SymMatrix::from_rows(&f.b0)?, SymMatrix::from_rows(&f.b1)?)
}

/// Full certification chain; exit 3 unless every check passes.
pub fn cmd_certify(cfg: &ChannelConfig, split: &CovSplit, l1: f64, l2: f64, r0: f64, units: Units) -> Result<CommandOutput> {
    let w = weights(l1, l2, r0, units)?;
    split.check_feasible(cfg.aligned.s())?;
    let report = match certify(&cfg.aligned, split, &w) {
        Ok(r) => r,
        Err(Error::NoCertificate { residual, limit }) => {
            let v = json!({
                "command": "certify",
                "passed": false,
                "error": "no KKT certificate",
                "stationarity_residual": residual,
                "limit": limit,
            });
            return Ok(CommandOutput { stdout: pretty(&v), exit: 3 });
        }
        Err(e) => return Err(e),
    };

    let mut kkt = Map::new();
    for (name, value, tol) in report.kkt.entries() {
        kkt.insert(name.into(), json!({ "value": value, "tol": tol, "passed": value <= tol }));
    }
    let mut enh = Map::new();
    for (name, value, passed) in report.enhancement.residuals.entries() {
        enh.insert(name.into(), json!({ "value": value, "passed": passed }));
    }
    let c = &report.certificate;
    let passed = report.passed();
    let v = json!({
        "command": "certify",
        "passed": passed,
        "kkt": kkt,
        "enhancement": enh,
        "multipliers": {
            "M0": rows(&c.m0),
            "M1": rows(&c.m1),
            "M2": rows(&c.m2),
            "beta1": c.beta1,
            "beta2": c.beta2,
            "condition": c.condition,
        },
        "N_tilde": rows(&report.enhancement.n_tilde),
    });
    Ok(CommandOutput {
        stdout: pretty(&v),
        exit: if passed { 0 } else { 3 },
    })
}

pub fn cmd_oracle(cfg: &ChannelConfig, l1: f64, l2: f64, r0: f64, resolution: usize, units: Units) -> Result<CommandOutput> {
    let w = weights(l1, l2, r0, units)?;
    let rep = grid_oracle(&cfg.aligned, &w, resolution)?;
    let mut m = Map::new();
    m.insert("command".into(), json!("oracle"));
    m.insert("units".into(), json!(units));
    m.extend(solution_json(&rep.best, units));
    m.insert("coarse_value".into(), json!(rep.coarse_value * units.from_nats()));
    m.insert("resolution".into(), json!(rep.resolution));
    m.insert("points_scanned".into(), json!(rep.points_scanned));
    m.insert("feasible_points".into(), json!(rep.feasible_points));
    m.insert("refinement_window".into(), json!(rep.refinement_window));
    Ok(CommandOutput::ok(pretty(&Value::Object(m))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    fn scalar() -> ChannelConfig {
        parse_config(r#"{"mode": "aligned", "N1": [[1]], "N2": [[2]], "S": [[3]]}"#).unwrap()
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(0.0), "0.0000000000000000e0");
        let x = 0.5 * 1.6f64.ln();
        assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_shape_and_header() {
        let cfg = scalar();
        let opts = RegionOptions {
            r0_steps: 2,
            weight_steps: 3,
            units: Units::Nats,
            dump_covariances: true,
        };
        let csv = cmd_region(&cfg, &SolverConfig::default(), &opts).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "r0_target,theta,r0,r1,r2,units,b0_11,b1_11");
        assert_eq!(lines.len(), 7);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 8 && l.contains(",nats,")));
    }

    #[test]
    fn bits_scale_rates() {
        let cfg = scalar();
        let solver = SolverConfig::default();
        let nats = cmd_maximize(&cfg, &solver, 1.0, 0.0, 0.0, Units::Nats).unwrap();
        let bits = cmd_maximize(&cfg, &solver, 1.0, 0.0, 0.0, Units::Bits).unwrap();
        let vn: Value = serde_json::from_str(&nats.stdout).unwrap();
        let vb: Value = serde_json::from_str(&bits.stdout).unwrap();
        let (n, b) = (vn["value"].as_f64().unwrap(), vb["value"].as_f64().unwrap());
        assert!((n - 0.5 * 1.6f64.ln()).abs() < 1e-9);
        assert!((b - n / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidWeights("x".into())), 1);
        assert_eq!(exit_code(&Error::UnsupportedDim(3)), 1);
        assert_eq!(exit_code(&Error::NoCertificate { residual: 1.0, limit: 0.1 }), 3);
        assert_eq!(exit_code(&Error::Io("x".into())), 2);
    }
}
