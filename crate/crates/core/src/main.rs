use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use indexgame::experiment::{
    config_from_value, read_kpis, run_experiment, run_single, set_path, summarize, ExperimentConfig, Method,
};
use indexgame::Error;

#[derive(Parser)]
#[command(name = "indexgame", version, about = "Utility-shaped games with a public index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `runs`.
    #[arg(long)]
    runs: Option<usize>,
    /// Output root; results land in `<out>/<name>/`.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method over all seeded runs.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat `run` for each value of one dotted config path.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated JSON values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute the summary of a finished run directory.
    Analyze { dir: PathBuf },
    /// Print both centralized benchmarks for the first run's model.
    Bench {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

const EXIT_PARTIAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn read_tree(path: &Path) -> Result<Value, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config {
        path: format!("{}:{}:{}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })
}

fn apply_overrides(tree: &mut Value, common: &Common) -> Result<(), Error> {
    if let Some(seed) = common.seed {
        set_path(tree, "base_seed", seed.into())?;
    }
    if let Some(runs) = common.runs {
        set_path(tree, "runs", runs.into())?;
    }
    Ok(())
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig, Error> {
    let mut tree = read_tree(path)?;
    apply_overrides(&mut tree, common)?;
    config_from_value(tree)
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config { .. } | Error::InvalidParameter { .. })
}

fn run_one(cfg: &ExperimentConfig, common: &Common) -> anyhow::Result<bool> {
    let report = run_experiment(cfg, &common.out, common.threads)?;
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    eprintln!("wrote {}", report.dir.display());
    Ok(report.partial_failure())
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config, common } => {
            let cfg = load(&config, &common)?;
            run_one(&cfg, &common)
        }
        Command::Sweep { config, param, values, common } => {
            let mut tree = read_tree(&config)?;
            apply_overrides(&mut tree, &common)?;
            let mut configs = Vec::with_capacity(values.len());
            for raw in &values {
                let v: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
                let mut t = tree.clone();
                set_path(&mut t, &param, v)?;
                let mut cfg = config_from_value(t)?;
                cfg.name = format!("{}/{param}={raw}", cfg.name);
                configs.push(cfg);
            }
            let mut partial = false;
            for cfg in &configs {
                let (parent, leaf) = cfg.name.split_once('/').expect("sweep name");
                let mut c = cfg.clone();
                c.name = leaf.to_string();
                let sub = Common { out: common.out.join(parent), ..common.clone() };
                partial |= run_one(&c, &sub)?;
            }
            Ok(partial)
        }
        Command::Analyze { dir } => {
            let rows = read_kpis(&dir.join("kpi.csv")).with_context(|| format!("reading {}", dir.display()))?;
            let runs = rows.iter().map(|r| r.run).max().map_or(0, |m| m + 1);
            let name = dir.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
            let summary = summarize(&name, runs, &rows, Vec::new());
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(false)
        }
        Command::Bench { config, common } => {
            let cfg = load(&config, &common)?;
            let out = run_single(&ExperimentConfig { methods: vec![Method::Centralized], ..cfg }, 0)?;
            let report = serde_json::json!({
                "seed": out.seed,
                "capacity": out.model.capacity(),
                "high_accuracy": out.high_accuracy,
                "equal_budget": out.equal_budget,
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("error: more than 10% of runs aborted; see summary.json");
            ExitCode::from(EXIT_PARTIAL)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<Error>().is_some_and(is_config_error);
            ExitCode::from(if config { EXIT_CONFIG } else { EXIT_PARTIAL })
        }
    }
}
