//! Run configuration: which operator, which grids, which seed. Written as
//! the header of every JSON report and read back losslessly.

use std::path::PathBuf;

use kreisslab_core::constructions::{
    build_bermbmp_shift, build_ergces, build_shields_counterexample, build_tn, build_tz_block, Construction,
    DirectSumParams, ErgcesParams, TnParams,
};
use kreisslab_core::norm::DEFAULT_SEED;
use kreisslab_core::ShiftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

pub const OPERATOR_NAMES: [&str; 5] = ["tn", "shields", "bermbmp", "ergces", "tzblock"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum OperatorConfig {
    Tn {
        #[serde(rename = "N")]
        n: usize,
        eta: f64,
    },
    Shields {
        epsilon: f64,
        eta: f64,
        n_max: usize,
    },
    Bermbmp {
        alpha: f64,
        direction: ShiftDirection,
        d: usize,
    },
    Ergces {
        #[serde(rename = "J")]
        j: usize,
    },
    Tzblock {
        d: usize,
    },
}

/// Operator flags as given on the command line; unset ones take the
/// catalog defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OperatorFlags {
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub nmax_sum: Option<usize>,
    pub trunc: Option<usize>,
    pub direction: Option<ShiftDirection>,
}

impl OperatorConfig {
    pub fn from_flags(name: &str, f: &OperatorFlags) -> Result<Self> {
        Ok(match name {
            "tn" => Self::Tn {
                n: f.trunc.unwrap_or(16),
                eta: f.eta.unwrap_or(0.45),
            },
            "shields" => Self::Shields {
                epsilon: f.epsilon.unwrap_or(0.15),
                eta: f.eta.unwrap_or(0.45),
                n_max: f.nmax_sum.unwrap_or(64),
            },
            "bermbmp" => Self::Bermbmp {
                alpha: f.eta.unwrap_or(0.45),
                direction: f.direction.unwrap_or(ShiftDirection::Forward),
                d: f.trunc.unwrap_or(64),
            },
            "ergces" => Self::Ergces {
                j: f.trunc.unwrap_or(20),
            },
            "tzblock" => Self::Tzblock {
                d: f.trunc.unwrap_or(256),
            },
            other => {
                return Err(usage(format!(
                    "unknown operator '{other}' (expected one of {})",
                    OPERATOR_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn build(&self) -> Result<Construction> {
        Ok(match *self {
            Self::Tn { n, eta } => build_tn(TnParams::new(n, eta)?)?,
            Self::Shields { epsilon, eta, n_max } => {
                build_shields_counterexample(DirectSumParams::new(epsilon, eta, n_max)?)?
            }
            Self::Bermbmp { alpha, direction, d } => build_bermbmp_shift(alpha, direction, d)?,
            Self::Ergces { j } => build_ergces(ErgcesParams::new(j)?)?,
            Self::Tzblock { d } => build_tz_block(d)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn json(self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative residual at which power iteration stops.
    pub norm: f64,
    /// Relative slack on claim margins.
    pub claim_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-10,
            claim_slack: kreisslab_core::kreiss::CLAIM_SLACK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub radii: Vec<f64>,
    pub angles: usize,
    pub n_max: usize,
    pub k_max: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            radii: geometric_radii(12),
            angles: 256,
            n_max: 256,
            k_max: 64,
        }
    }
}

/// `1 + 2^{-m}`, `m = 1..=levels`
pub fn geometric_radii(levels: u32) -> Vec<f64> {
    (1..=levels).map(|m| 1.0 + 0.5f64.powi(m as i32)).collect()
}

/// A level count (`12`) or an explicit comma-separated list (`1.5,1.1`).
pub fn parse_radii(s: &str) -> Result<Vec<f64>> {
    if let Ok(levels) = s.trim().parse::<u32>() {
        if levels == 0 {
            return Err(usage("--radii needs at least one level"));
        }
        return Ok(geometric_radii(levels));
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad radius '{t}' in --radii")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub theorem: Option<String>,
    pub operator: Option<OperatorConfig>,
    pub tolerances: Tolerances,
    pub grid: GridConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            theorem: None,
            operator: None,
            tolerances: Tolerances::default(),
            grid: GridConfig::default(),
            seed: DEFAULT_SEED,
            out: PathBuf::from("kreisslab-out"),
            format: OutputFormat::Both,
        }
    }
}
