use serde::{Deserialize, Serialize};

use crate::dynamics::RunResult;

/// Default iteration window for the contraction fit.
pub const CONTRACTION_WINDOW: (usize, usize) = (50, 250);

const VIOLATION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub method: String,
    pub seed: u64,
    pub terminal_gap: f64,
    pub violation_rate: f64,
    pub iters_to_eps: usize,
    pub alpha_hat: Option<f64>,
    pub tracking_error: Option<f64>,
    pub terminal_load: f64,
    pub terminal_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        Self { median: quantile(values, 0.5), q1: quantile(values, 0.25), q3: quantile(values, 0.75) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Linear-interpolation quantile of the finite values; NaN when there are none.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r2 })
}

/// `exp` of the least-squares slope of `log gap_t` on `t` over `[start, end)`,
/// cut at the first nonpositive gap.
pub fn fit_contraction(gap: &[f64], window: (usize, usize)) -> Option<f64> {
    let end = window.1.min(gap.len());
    let mut t = Vec::new();
    let mut lg = Vec::new();
    for (i, g) in gap.iter().enumerate().take(end).skip(window.0) {
        if *g <= 0.0 || !g.is_finite() {
            break;
        }
        t.push(i as f64);
        lg.push(g.ln());
    }
    linear_regression(&t, &lg).map(|f| f.slope.exp())
}

pub fn kpis(run: &RunResult, epsilon: f64) -> KpiRecord {
    let n = run.len();
    let tail = n.div_ceil(4);
    let violation_rate = if tail == 0 {
        0.0
    } else {
        run.violation[n - tail..].iter().filter(|v| **v > VIOLATION_EPS).count() as f64 / tail as f64
    };
    let iters_to_eps = run
        .gap
        .iter()
        .zip(&run.violation)
        .position(|(g, v)| g.abs() <= epsilon && *v <= epsilon)
        .map_or(n, |t| t + 1);
    let tracking_error = if run.tracking_error.is_empty() {
        None
    } else {
        let m = run.tracking_error.len();
        let k = m.div_ceil(4);
        Some(run.tracking_error[m - k..].iter().sum::<f64>() / k as f64)
    };
    KpiRecord {
        method: run.label.clone(),
        seed: run.seed,
        terminal_gap: run.gap.last().copied().unwrap_or(f64::NAN),
        violation_rate,
        iters_to_eps,
        alpha_hat: fit_contraction(&run.gap, CONTRACTION_WINDOW),
        tracking_error,
        terminal_load: run.load.last().copied().unwrap_or(f64::NAN),
        terminal_z: run.z_final,
    }
}
