//! `circle`: experiment runner for the circle-method pipeline.
//!
//! Every subcommand resolves to an `ExperimentConfig` and runs through
//! the same dispatcher, so command-line runs and `run --config` files
//! produce identical records. Exit codes: 0 ok, 1 invalid configuration,
//! 2 evaluation budget exceeded.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use circle_core::Error;
use config::{recipe, ExperimentConfig, Pipeline, SystemSource};

#[derive(Parser)]
#[command(name = "circle", version, about = "circle-method experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a pipeline from a JSON configuration file
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a pinned recipe configuration (goldbach3, squares7, corollary2-demo)
    Recipe {
        name: String,
        #[arg(long)]
        output: Option<PathBuf>,
        /// run the recipe instead of printing its configuration
        #[arg(long)]
        exec: bool,
    },
    /// Weighted / prime-only solution count
    Count {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        s: Vec<i64>,
        #[arg(long, default_value = "weighted")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// End-to-end count vs singular series times singular integral
    Compare {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        s: Vec<i64>,
        #[arg(long, default_value_t = 500)]
        q: u64,
        #[arg(long, default_value_t = 64.0)]
        phi: f64,
        #[arg(long)]
        csv: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Local factor at a prime, optionally with a solubility check
    Local {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',')]
        s: Vec<i64>,
        #[arg(long, default_value_t = 4)]
        t_max: u32,
        #[arg(long)]
        solubility: bool,
        #[arg(long, default_value_t = 4)]
        t_cap: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Truncated singular series
    Series {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_delimiter = ',')]
        s: Vec<i64>,
        #[arg(long, default_value_t = 100)]
        q: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Truncated singular integral J(mu; Phi)
    Jint {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_delimiter = ',')]
        mu: Vec<f64>,
        #[arg(long, default_value_t = 64.0)]
        phi: f64,
        #[arg(long)]
        csv: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Minor-arc sup scan over an N = 2^k ladder
    ArcsScan {
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 1)]
        d: u32,
        #[arg(long, default_value = "10:16")]
        ladder: String,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long)]
        csv: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Regularize a quadratic(+linear) system to the configured rank targets
    Regularize {
        #[arg(long)]
        system: PathBuf,
        /// degree-2 target, e.g. const:4 or table:2,3,5+1
        #[arg(long, default_value = "const:4")]
        target: String,
        /// parametric mode: comma-separated 0-based y-side variables
        #[arg(long, value_delimiter = ',')]
        y_block: Option<Vec<usize>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rank reports for a system
    Rank {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Select a variable split meeting the Birch-rank thresholds
    Split {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        c1: i64,
        #[arg(long)]
        c2: i64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn params(pairs: Vec<(&str, serde_json::Value)>) -> serde_json::Map<String, serde_json::Value> {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn path_source(p: &PathBuf) -> Option<SystemSource> {
    Some(SystemSource::Path(p.display().to_string()))
}

fn opt(v: Option<String>) -> serde_json::Value {
    v.map(serde_json::Value::String)
        .unwrap_or(serde_json::Value::Null)
}

fn to_config(cmd: &Cmd) -> Result<ExperimentConfig, Error> {
    let out = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string());
    Ok(match cmd {
        Cmd::Run { config, .. } => {
            let text = std::fs::read_to_string(config)?;
            serde_json::from_str(&text)?
        }
        Cmd::Recipe { name, .. } => recipe(name)?,
        Cmd::Count {
            system,
            n,
            s,
            mode,
            seed,
            output,
        } => ExperimentConfig {
            pipeline: Pipeline::Count,
            system: path_source(system),
            parameters: params(vec![
                ("n", json!(n)),
                ("s", json!(s)),
                ("mode", json!(mode)),
            ]),
            seed: *seed,
            output: out(output),
        },
        Cmd::Compare {
            system,
            n,
            s,
            q,
            phi,
            csv,
            seed,
            output,
        } => ExperimentConfig {
            pipeline: Pipeline::Compare,
            system: path_source(system),
            parameters: params(vec![
                ("n", json!(n)),
                ("s", json!(s)),
                ("q", json!(q)),
                ("phi", json!(phi)),
                ("csv", opt(csv.clone())),
            ]),
            seed: *seed,
            output: out(output),
        },
        Cmd::Local {
            system,
            p,
            s,
            t_max,
            solubility,
            t_cap,
            output,
        } => ExperimentConfig {
            pipeline: Pipeline::Local,
            system: path_source(system),
            parameters: params(vec![
                ("p", json!(p)),
                ("s", json!(s)),
                ("t_max", json!(t_max)),
                ("solubility", json!(solubility)),
                ("t_cap", json!(t_cap)),
            ]),
            seed: 0,
            output: out(output),
        },
        Cmd::Series { system, s, q, output } => ExperimentConfig {
            pipeline: Pipeline::Series,
            system: path_source(system),
            parameters: params(vec![("s", json!(s)), ("q", json!(q))]),
            seed: 0,
            output: out(output),
        },
        Cmd::Jint {
            system,
            mu,
            phi,
            csv,
            output,
        } => ExperimentConfig {
            pipeline: Pipeline::Jint,
            system: path_source(system),
            parameters: params(vec![
                ("mu", json!(mu)),
                ("phi", json!(phi)),
                ("csv", opt(csv.clone())),
            ]),
            seed: 0,
            output: out(output),
        },
        Cmd::ArcsScan {
            c,
            d,
            ladder,
            samples,
            csv,
            output,
        } => ExperimentConfig {
            pipeline: Pipeline::ArcsScan,
            system: None,
            parameters: params(vec![
                ("c", json!(c)),
                ("d", json!(d)),
                ("ladder", json!(ladder)),
                ("samples", json!(samples)),
                ("csv", opt(csv.clone())),
            ]),
            seed: 0,
            output: out(output),
        },
        Cmd::Regularize {
            system,
            target,
            y_block,
            output,
        } => ExperimentConfig {
            pipeline: Pipeline::Regularize,
            system: path_source(system),
            parameters: {
                let mut p = params(vec![("target", json!(target))]);
                if let Some(y) = y_block {
                    p.insert("y_block".to_string(), json!(y));
                }
                p
            },
            seed: 0,
            output: out(output),
        },
        Cmd::Rank { system, seed, output } => ExperimentConfig {
            pipeline: Pipeline::Rank,
            system: path_source(system),
            parameters: params(vec![]),
            seed: *seed,
            output: out(output),
        },
        Cmd::Split {
            system,
            c1,
            c2,
            output,
        } => ExperimentConfig {
            pipeline: Pipeline::Split,
            system: path_source(system),
            parameters: params(vec![("c1", json!(c1)), ("c2", json!(c2))]),
            seed: 0,
            output: out(output),
        },
    })
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn try_main(cli: &Cli) -> Result<(), Error> {
    // `recipe` without --exec prints the configuration itself
    if let Cmd::Recipe {
        name,
        output,
        exec: false,
    } = &cli.cmd
    {
        let cfg = recipe(name)?;
        let text = serde_json::to_string_pretty(&cfg)?;
        return emit(output.as_ref(), &text);
    }
    let mut config = to_config(&cli.cmd)?;
    // a --output flag on `run` overrides the config file's setting
    if let Cmd::Run {
        output: Some(p), ..
    } = &cli.cmd
    {
        config.output = Some(p.display().to_string());
    }
    let record = run::execute(&config)?;
    let text = serde_json::to_string_pretty(&record)?;
    let out_path = config.output.as_ref().map(PathBuf::from);
    emit(out_path.as_ref(), &text)
}

fn main() -> ExitCode {
    // clap's own usage errors count as invalid configuration (exit 1);
    // exit 2 is reserved for exceeded evaluation budgets
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match try_main(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::BudgetExceeded(msg)) => {
            eprintln!("error: budget exceeded: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
