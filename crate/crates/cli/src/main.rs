use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mgale::experiment::{list_suites, run_to_file, ExperimentConfig, RunOutput};
use mgale::Error;
use serde_json::{json, Value};

/// Martingale-decomposition experiments: inequality audits, dilated and ergodic
/// series diagnostics, Davenport Gram matrices, Riesz products.
#[derive(Parser)]
#[command(name = "mgale", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (JSON).
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Grid resolution J (2^J points); overrides the config.
        #[arg(long)]
        resolution: Option<u32>,
    },
    /// List the available suites.
    Suites {
        #[arg(long)]
        json: bool,
    },
    /// Gram matrix of dilated Davenport functions.
    Davenport {
        #[arg(long)]
        lambda: f64,
        /// `pow:q:K` or a comma list.
        #[arg(long)]
        freqs: String,
        /// Also compare against quadrature with this truncation M.
        #[arg(long)]
        quadrature: Option<u64>,
        #[arg(long, default_value_t = 22)]
        resolution: u32,
        #[command(flatten)]
        common: Common,
    },
    #[command(subcommand)]
    Riesz(RieszCmd),
    #[command(subcommand)]
    Symbolic(SymbolicCmd),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RieszCmd {
    /// Exact Fourier coefficients of the partial product.
    Coeff {
        /// RieszProductSpec JSON file.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        freqs: Vec<i64>,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Points drawn from the partial-product density.
    Sample {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Oscillation diagnostic of `sum a_n f(lambda_n x)` under the Riesz product.
    Series {
        #[arg(long)]
        spec: PathBuf,
        /// `sine`, `davenport:l:M`, ...
        #[arg(long, default_value = "sine")]
        generator: String,
        /// `geometric:r`, `power:s`, ...
        #[arg(long)]
        coeffs: String,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum SymbolicCmd {
    /// est-Pn decay audit for the potentials of a Riesz product.
    Audit {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Hypothesis bound B on the test family.
        #[arg(long, default_value_t = 10.0)]
        bound: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())).into())
}

fn execute(mut cfg: Value, common: &Common, resolution: Option<u32>) -> Result<RunOutput> {
    if let Some(s) = common.seed {
        cfg["seed"] = json!(s);
    }
    if let Some(j) = resolution {
        cfg["resolution"] = json!(j);
    }
    let cfg = ExperimentConfig::from_json(&cfg.to_string())?;
    let (out, path) = run_to_file(&cfg, common.out.as_deref())?;
    println!("{}: {} ({})", path.display(), out.status(), out.suite.anchor);
    for (k, v) in &out.meta {
        println!("  {k}: {v}");
    }
    Ok(out)
}

fn dispatch(cli: Cli) -> Result<i32> {
    let out = match cli.command {
        Command::Suites { json } => {
            if json {
                println!("{}", serde_json::to_string_pretty(list_suites())?);
            } else {
                for s in list_suites() {
                    println!("{:<20} {:<10} {}", s.name, format!("{:?}", s.kind).to_lowercase(), s.anchor);
                }
            }
            return Ok(0);
        }
        Command::Run { config, common, resolution } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            // validate before applying overrides so that malformed files report as config errors
            ExperimentConfig::from_json(&text)?;
            execute(serde_json::from_str(&text)?, &common, resolution)?
        }
        Command::Davenport { lambda, freqs, quadrature, resolution, common } => {
            let mut cfg = json!({ "kind": "davenport", "suite": "gram", "lambda": lambda, "freqs": freqs });
            if let Some(m) = quadrature {
                cfg["quadrature"] = json!({ "truncation": m, "resolution": resolution });
            }
            execute(cfg, &common, None)?
        }
        Command::Riesz(RieszCmd::Coeff { spec, freqs, depth, common }) => {
            let cfg = json!({ "kind": "riesz", "suite": "riesz-coeff", "spec": read_json(&spec)?, "freqs": freqs, "depth": depth });
            execute(cfg, &common, None)?
        }
        Command::Riesz(RieszCmd::Sample { spec, count, depth, common }) => {
            let cfg = json!({ "kind": "riesz", "suite": "riesz-sample", "spec": read_json(&spec)?, "count": count, "depth": depth });
            execute(cfg, &common, None)?
        }
        Command::Riesz(RieszCmd::Series { spec, generator, coeffs, checkpoints, samples, depth, common }) => {
            let cfg = json!({
                "kind": "riesz", "suite": "riesz-series", "spec": read_json(&spec)?, "generator": generator,
                "coeffs": coeffs, "checkpoints": checkpoints, "samples": samples, "depth": depth,
            });
            execute(cfg, &common, None)?
        }
        Command::Symbolic(SymbolicCmd::Audit { spec, depth, alpha, bound, common }) => {
            let cfg = json!({
                "kind": "symbolic", "suite": "est-pn", "riesz": read_json(&spec)?, "depth": depth,
                "alpha": alpha, "bound": bound,
            });
            execute(cfg, &common, None)?
        }
    };
    Ok(out.exit_code())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
