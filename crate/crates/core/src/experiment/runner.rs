//! Per-run orchestration and the parallel experiment driver.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentConfig, Method};
use super::output::{read_kpis, summarize, write_kpis, write_summary, write_trace, Aborted, ExperimentSummary, KpiRow};
use super::scenario::{build_model, method_kind};
use crate::analysis::kpis;
use crate::benchmarks::{centralized_primal_dual, centralized_proximal, BenchmarkResult};
use crate::dynamics::{run_from, GameState, RunResult, Tracking};
use crate::error::{Error, Result};
use crate::model::GameModel;

/// Everything one seeded run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run: usize,
    pub seed: u64,
    pub model: GameModel,
    pub high_accuracy: BenchmarkResult,
    pub equal_budget: BenchmarkResult,
    pub traces: Vec<(Method, RunResult)>,
    pub kpis: Vec<KpiRow>,
}

pub fn benchmark(model: &GameModel, budget: usize, tol: f64) -> Result<BenchmarkResult> {
    if model.capacity().is_some() {
        centralized_primal_dual(model, budget, tol)
    } else {
        Ok(centralized_proximal(model, budget, tol))
    }
}

fn centralized_trace(model: &GameModel, eq: &BenchmarkResult, w_star: f64, seed: u64) -> RunResult {
    RunResult {
        label: Method::Centralized.label().into(),
        seed,
        w: vec![eq.w_star],
        gap: vec![w_star - eq.w_star],
        load: vec![model.load(&eq.p_star)],
        violation: vec![model.violation(&eq.p_star)],
        z: vec![eq.z_star.unwrap_or(0.0)],
        p_final: eq.p_star.clone(),
        z_final: eq.z_star.unwrap_or(0.0),
        fallbacks: 0,
        tracking_error: Vec::new(),
    }
}

/// Runs every configured method on the model drawn for `base_seed + run`.
pub fn run_single(cfg: &ExperimentConfig, run: usize) -> Result<RunOutput> {
    let seed = cfg.base_seed.wrapping_add(run as u64);
    let model = build_model(cfg, seed)?;
    let budget = cfg.dynamics.max_iters.max(1);
    let high_accuracy = benchmark(&model, budget * cfg.benchmark.high_accuracy_multiplier, cfg.benchmark.tol)?;
    let equal_budget = benchmark(&model, budget, cfg.benchmark.tol)?;
    let w_star = high_accuracy.w_star;
    let tracking = cfg.tracking_every.map(|every| Tracking { every });

    let mut traces = Vec::with_capacity(cfg.methods.len());
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let trace = match method_kind(cfg, method) {
            Some(kind) => {
                let m = model.with_utility(kind);
                run_from(&m, &cfg.dynamics, GameState::initial(&m), w_star, seed, method.label(), tracking)
                    .map_err(|e| match e {
                        Error::Diverged { iteration, reason } => {
                            Error::Diverged { iteration, reason: format!("{}: {reason}", method.label()) }
                        }
                        other => other,
                    })?
            }
            None => centralized_trace(&model, &equal_budget, w_star, seed),
        };
        let mut k = kpis(&trace, cfg.dynamics.epsilon);
        if method == Method::Centralized {
            let eps = cfg.dynamics.epsilon;
            let hit = k.terminal_gap.abs() <= eps && trace.violation[0] <= eps;
            k.iters_to_eps = if hit { equal_budget.iterations.clamp(1, budget) } else { budget };
        }
        rows.push(KpiRow {
            run,
            seed,
            method,
            terminal_gap: k.terminal_gap,
            violation_rate: k.violation_rate,
            iters_to_eps: k.iters_to_eps,
            alpha_hat: k.alpha_hat,
            tracking_error: k.tracking_error,
            terminal_load: k.terminal_load,
            terminal_z: k.terminal_z,
            w_star,
            w_star_budget: equal_budget.w_star,
            capacity: model.capacity(),
        });
        traces.push((method, trace));
    }
    Ok(RunOutput { run, seed, model, high_accuracy, equal_budget, traces, kpis: rows })
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dir: PathBuf,
    pub rows: Vec<KpiRow>,
    pub summary: ExperimentSummary,
}

impl ExperimentReport {
    /// More than a tenth of the runs aborted.
    pub fn partial_failure(&self) -> bool {
        self.summary.aborted.len() * 10 > self.summary.runs_requested
    }
}

/// Runs all seeds in a worker pool and writes traces, `kpi.csv` and `summary.json`
/// under `out_root/<name>/`.
pub fn run_experiment(cfg: &ExperimentConfig, out_root: &Path, threads: Option<usize>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let dir = out_root.join(&cfg.name);
    std::fs::create_dir_all(&dir)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::invalid("threads", e.to_string()))?;
    let outcomes: Vec<std::result::Result<Vec<KpiRow>, Aborted>> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|run| {
                let seed = cfg.base_seed.wrapping_add(run as u64);
                let abort = |e: Error| Aborted { run, seed, reason: e.to_string() };
                let out = run_single(cfg, run).map_err(abort)?;
                for (method, trace) in &out.traces {
                    write_trace(&dir.join(format!("trace_{}_{run}.csv", method.label())), trace).map_err(abort)?;
                }
                Ok(out.kpis)
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut aborted = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.extend(r),
            Err(a) => aborted.push(a),
        }
    }
    let kpi_path = dir.join("kpi.csv");
    write_kpis(&kpi_path, &rows)?;
    // Summaries come from the rounded CSV so `analyze` reproduces them exactly.
    let rows = read_kpis(&kpi_path)?;
    let summary = summarize(&cfg.name, cfg.runs, &rows, aborted);
    write_summary(&dir.join("summary.json"), &summary)?;
    Ok(ExperimentReport { dir, rows, summary })
}
