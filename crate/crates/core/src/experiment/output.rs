//! CSV and JSON emission with a stable column schema.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Method;
use crate::analysis::{fdr_bh, wilcoxon_signed_rank, Summary};
use crate::dynamics::RunResult;
use crate::error::Result;

pub const TRACE_HEADER: [&str; 6] = ["iter", "W", "gap", "load", "violation", "z"];
pub const KPI_HEADER: [&str; 13] = [
    "run",
    "seed",
    "method",
    "terminal_gap",
    "violation_rate",
    "iters_to_eps",
    "alpha_hat",
    "tracking_error",
    "terminal_load",
    "terminal_z",
    "w_star",
    "w_star_budget",
    "capacity",
];

/// `%.9g`-style formatting: nine significant digits, trailing zeros dropped.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig9).unwrap_or_default()
}

pub fn write_trace(path: &Path, run: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(TRACE_HEADER)?;
    for t in 0..run.len() {
        w.write_record([
            (t + 1).to_string(),
            fmt_sig9(run.w[t]),
            fmt_sig9(run.gap[t]),
            fmt_sig9(run.load[t]),
            fmt_sig9(run.violation[t]),
            fmt_sig9(run.z[t]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One line of `kpi.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRow {
    pub run: usize,
    pub seed: u64,
    pub method: Method,
    pub terminal_gap: f64,
    pub violation_rate: f64,
    pub iters_to_eps: usize,
    pub alpha_hat: Option<f64>,
    pub tracking_error: Option<f64>,
    pub terminal_load: f64,
    pub terminal_z: f64,
    pub w_star: f64,
    pub w_star_budget: f64,
    pub capacity: Option<f64>,
}

pub fn write_kpis(path: &Path, rows: &[KpiRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(KPI_HEADER)?;
    for r in rows {
        w.write_record([
            r.run.to_string(),
            r.seed.to_string(),
            r.method.label().to_string(),
            fmt_sig9(r.terminal_gap),
            fmt_sig9(r.violation_rate),
            r.iters_to_eps.to_string(),
            opt(r.alpha_hat),
            opt(r.tracking_error),
            fmt_sig9(r.terminal_load),
            fmt_sig9(r.terminal_z),
            fmt_sig9(r.w_star),
            fmt_sig9(r.w_star_budget),
            opt(r.capacity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_kpis(path: &Path) -> Result<Vec<KpiRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<KpiRow>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub runs: usize,
    pub terminal_gap: Summary,
    pub violation_rate: Summary,
    pub iters_to_eps: Summary,
    pub alpha_hat: Summary,
    pub terminal_z: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub method: Method,
    pub metric: String,
    /// Median of `method - price_only` over paired runs.
    pub median_diff: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aborted {
    pub run: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub runs_requested: usize,
    pub runs_completed: usize,
    pub aborted: Vec<Aborted>,
    pub methods: BTreeMap<Method, MethodSummary>,
    /// Wilcoxon signed-rank tests against price-only with BH control at 5% FDR.
    pub tests: Vec<PairedTest>,
}

pub const FDR_LEVEL: f64 = 0.05;

fn metric(row: &KpiRow, name: &str) -> f64 {
    match name {
        "terminal_gap" => row.terminal_gap,
        "violation_rate" => row.violation_rate,
        _ => unreachable!("metric {name}"),
    }
}

pub fn summarize(name: &str, runs_requested: usize, rows: &[KpiRow], aborted: Vec<Aborted>) -> ExperimentSummary {
    let mut by_method: BTreeMap<Method, Vec<&KpiRow>> = BTreeMap::new();
    for r in rows {
        by_method.entry(r.method).or_default().push(r);
    }
    let methods = by_method
        .iter()
        .map(|(m, rs)| {
            let col = |f: &dyn Fn(&KpiRow) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let s = MethodSummary {
                runs: rs.len(),
                terminal_gap: Summary::of(&col(&|r| r.terminal_gap)),
                violation_rate: Summary::of(&col(&|r| r.violation_rate)),
                iters_to_eps: Summary::of(&col(&|r| r.iters_to_eps as f64)),
                alpha_hat: Summary::of(&col(&|r| r.alpha_hat.unwrap_or(f64::NAN))),
                terminal_z: Summary::of(&col(&|r| r.terminal_z)),
            };
            (*m, s)
        })
        .collect();

    let mut tests = Vec::new();
    if let Some(base) = by_method.get(&Method::PriceOnly) {
        let base: BTreeMap<usize, &KpiRow> = base.iter().map(|r| (r.run, *r)).collect();
        for (m, rs) in &by_method {
            if *m == Method::PriceOnly {
                continue;
            }
            for name in ["terminal_gap", "violation_rate"] {
                let diffs: Vec<f64> = rs
                    .iter()
                    .filter_map(|r| base.get(&r.run).map(|b| metric(r, name) - metric(b, name)))
                    .filter(|d| d.is_finite())
                    .collect();
                if diffs.is_empty() {
                    continue;
                }
                tests.push(PairedTest {
                    method: *m,
                    metric: name.into(),
                    median_diff: Summary::of(&diffs).median,
                    p_value: wilcoxon_signed_rank(&diffs),
                    reject: false,
                });
            }
        }
        let p: Vec<f64> = tests.iter().map(|t| t.p_value).collect();
        for (t, r) in tests.iter_mut().zip(fdr_bh(&p, FDR_LEVEL)) {
            t.reject = r;
        }
    }
    ExperimentSummary {
        name: name.into(),
        runs_requested,
        runs_completed: rows.iter().map(|r| r.run).collect::<std::collections::BTreeSet<_>>().len(),
        aborted,
        methods,
        tests,
    }
}

pub fn write_summary(path: &Path, summary: &ExperimentSummary) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, summary)?;
    Ok(())
}
