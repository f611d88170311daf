//! Channel configuration files.
//!
//! ```json
//! {
//!   "mode": "general",
//!   "H1": [[1.8, 2.0], [1.0, 3.0]],
//!   "H2": [[3.3, 1.3], [2.0, -1.5]],
//!   "S":  [[5.0, 1.25], [1.25, 10.0]],
//!   "units": "nats",
//!   "solver": { "restarts": 16 }
//! }
//! ```
//!
//! Aligned configs give `N1`, `N2` instead of `H1`, `H2`. `units` defaults
//! to nats; `solver` may override any subset of the solver defaults.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{AlignedChannel, GeneralChannel};
use crate::error::{Error, Result};
use crate::matcore::{Matrix, SymMatrix};
use crate::optimizer::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    General,
    Aligned,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    /// Multiplier taking nats to these units.
    pub fn from_nats(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => std::f64::consts::LOG2_E,
        }
    }

    pub fn to_nats(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => std::f64::consts::LN_2,
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        })
    }
}

type Rows = Vec<Vec<f64>>;

/// The file as written, echoed verbatim into manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Mode,
    #[serde(rename = "H1", default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<Rows>,
    #[serde(rename = "H2", default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<Rows>,
    #[serde(rename = "N1", default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<Rows>,
    #[serde(rename = "N2", default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<Rows>,
    #[serde(rename = "S")]
    pub s: Rows,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct ChannelConfig {
    pub file: ConfigFile,
    /// Present for `general` configs.
    pub general: Option<GeneralChannel>,
    /// The channel every command works on.
    pub aligned: AlignedChannel,
}

impl ChannelConfig {
    pub fn mode(&self) -> Mode {
        self.file.mode
    }

    pub fn units(&self) -> Units {
        self.file.units
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.file.solver
    }

    pub fn tx_dim(&self) -> usize {
        self.aligned.dim()
    }

    /// Receive antennas `(r1, r2)`; equal to `t` for aligned configs.
    pub fn rx_dims(&self) -> (usize, usize) {
        match &self.general {
            Some(g) => (g.h1().rows(), g.h2().rows()),
            None => (self.tx_dim(), self.tx_dim()),
        }
    }
}

fn required<'a>(field: &str, rows: &'a Option<Rows>, mode: Mode) -> Result<&'a Rows> {
    rows.as_ref()
        .ok_or_else(|| Error::InvalidChannel(format!("{field} is required in {} mode", mode_name(mode))))
}

fn forbid(field: &str, rows: &Option<Rows>, mode: Mode) -> Result<()> {
    match rows {
        Some(_) => Err(Error::InvalidChannel(format!("{field} is not allowed in {} mode", mode_name(mode)))),
        None => Ok(()),
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::General => "general",
        Mode::Aligned => "aligned",
    }
}

fn field_err(field: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::InvalidChannel(m) => Error::InvalidChannel(m),
        other => Error::InvalidChannel(format!("{field}: {other}")),
    }
}

fn sym(field: &str, rows: &Rows) -> Result<SymMatrix> {
    SymMatrix::from_rows(rows).map_err(field_err(field))
}

fn dense(field: &str, rows: &Rows) -> Result<Matrix> {
    Matrix::from_rows(rows).map_err(field_err(field))
}

fn require_pd(field: &str, m: &SymMatrix) -> Result<()> {
    match m.eig() {
        Ok(e) if e.min() > 0.0 => Ok(()),
        _ => Err(Error::InvalidChannel(format!("{field} not positive definite"))),
    }
}

/// Validates a parsed file into a channel.
pub fn validate(file: ConfigFile) -> Result<ChannelConfig> {
    file.solver.validate()?;
    let s = sym("S", &file.s)?;
    require_pd("S", &s)?;
    let (general, aligned) = match file.mode {
        Mode::General => {
            forbid("N1", &file.n1, file.mode)?;
            forbid("N2", &file.n2, file.mode)?;
            let h1 = dense("H1", required("H1", &file.h1, file.mode)?)?;
            let h2 = dense("H2", required("H2", &file.h2, file.mode)?)?;
            let g = GeneralChannel::new(h1, h2, s).map_err(field_err("channel"))?;
            let a = g.to_aligned().map_err(field_err("channel"))?;
            (Some(g), a)
        }
        Mode::Aligned => {
            forbid("H1", &file.h1, file.mode)?;
            forbid("H2", &file.h2, file.mode)?;
            let n1 = sym("N1", required("N1", &file.n1, file.mode)?)?;
            let n2 = sym("N2", required("N2", &file.n2, file.mode)?)?;
            require_pd("N1", &n1)?;
            require_pd("N2", &n2)?;
            (None, AlignedChannel::new(n1, n2, s).map_err(field_err("channel"))?)
        }
    };
    Ok(ChannelConfig { file, general, aligned })
}

/// Parses config text; syntax errors carry the line and column.
pub fn parse_config(text: &str) -> Result<ChannelConfig> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate(file)
}

pub fn load_config(path: &Path) -> Result<ChannelConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
