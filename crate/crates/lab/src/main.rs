use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kreisslab::commands::execute;
use kreisslab::config::{parse_radii, OperatorConfig, OperatorFlags, OutputFormat, RunConfig};
use kreisslab::error::{Error, Result};
use kreisslab_core::norm::DEFAULT_SEED;
use kreisslab_core::ShiftDirection;

#[derive(Parser)]
#[command(name = "kreisslab", version, about = "Power, mean and resolvent bounds for weighted-shift constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize an operator and write its nonzero entries
    Construct(Flags),
    /// ||T^k|| for k = 1..=k-max
    Powers(Flags),
    /// Cesàro mean norm profile, rotated over the angle grid
    Cesaro(Flags),
    /// Resolvent, strong, uniform and second-order Kreiss constants
    Kreiss(Flags),
    /// Orbit claims on seeded unit vectors, C from the second-order constant
    Claims(Flags),
    /// Log-log growth fit of ||T^k||
    Growth(Flags),
    /// Canonical run for one result id (thm2.4, thm2.5, thm2.7-claims, thm2.8, prop3.5, ex2.9, lemma2.1, thm1.5)
    Reproduce {
        id: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Clone)]
struct Flags {
    /// tn | shields | bermbmp | ergces | tzblock
    #[arg(long)]
    operator: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
    /// Level count (radii 1 + 2^-m) or comma-separated radii
    #[arg(long)]
    radii: Option<String>,
    /// Weight exponent (eta for tn/shields, alpha for bermbmp)
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of direct summands for shields
    #[arg(long)]
    nmax_sum: Option<usize>,
    /// Truncation: N for tn, d for bermbmp/tzblock, J for ergces
    #[arg(long)]
    trunc: Option<usize>,
    /// forward | backward (bermbmp)
    #[arg(long)]
    direction: Option<String>,
    /// Decimal or 0x-prefixed hex
    #[arg(long, default_value = "0x5EED")]
    seed: String,
    #[arg(long, default_value = "kreisslab-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    format: OutputFormat,
}

fn parse_seed(s: &str) -> Result<u64> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| Error::Usage(format!("bad --seed '{s}'")))
}

fn parse_direction(s: &str) -> Result<ShiftDirection> {
    match s {
        "forward" => Ok(ShiftDirection::Forward),
        "backward" => Ok(ShiftDirection::Backward),
        _ => Err(Error::Usage(format!("bad --direction '{s}' (forward or backward)"))),
    }
}

fn config(command: &str, theorem: Option<String>, f: Flags) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(command);
    cfg.theorem = theorem;
    if let Some(name) = &f.operator {
        let flags = OperatorFlags {
            eta: f.eta,
            epsilon: f.epsilon,
            nmax_sum: f.nmax_sum,
            trunc: f.trunc,
            direction: f.direction.as_deref().map(parse_direction).transpose()?,
        };
        cfg.operator = Some(OperatorConfig::from_flags(name, &flags)?);
    }
    if let Some(r) = &f.radii {
        cfg.grid.radii = parse_radii(r)?;
    }
    cfg.grid.n_max = f.n_max.unwrap_or(cfg.grid.n_max);
    cfg.grid.k_max = f.k_max.unwrap_or(cfg.grid.k_max);
    cfg.grid.angles = f.angles.unwrap_or(cfg.grid.angles);
    cfg.seed = if f.seed.is_empty() { DEFAULT_SEED } else { parse_seed(&f.seed)? };
    cfg.out = f.out;
    cfg.format = f.format;
    Ok(cfg)
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("KREISSLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cli = Cli::parse();
    let cfg = match cli.command {
        Command::Construct(f) => config("construct", None, f),
        Command::Powers(f) => config("powers", None, f),
        Command::Cesaro(f) => config("cesaro", None, f),
        Command::Kreiss(f) => config("kreiss", None, f),
        Command::Claims(f) => config("claims", None, f),
        Command::Growth(f) => config("growth", None, f),
        Command::Reproduce { id, flags } => config("reproduce", Some(id), flags),
    };
    let outcome = cfg.and_then(|cfg| execute(&cfg));
    match outcome {
        Ok((report, files)) => {
            for c in &report.results {
                println!("{}", c.line());
            }
            let s = &report.summary;
            println!(
                "{} gated checks: {} passed, {} failed; {} informational",
                s.gated, s.passed, s.failed, s.informational
            );
            for v in &s.vacuous_passes {
                println!("vacuous passes in {}: {}", v.name, v.count);
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
