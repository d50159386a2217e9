//! Centralized planner solutions and the variational-inequality equilibrium
//! used as a reference point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GameModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub p_star: Vec<f64>,
    pub z_star: Option<f64>,
    pub w_star: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Natural-map residual at `p_star`.
    pub residual: f64,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Ascent {
    p: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Projected gradient ascent with Armijo backtracking on `f`.
fn projected_ascent<F, G>(model: &GameModel, f: F, grad: G, p0: &[f64], budget: usize, tol: f64, step0: f64) -> Ascent
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut p = p0.to_vec();
    model.project(&mut p);
    let mut value = f(&p);
    let mut step = step0;
    let mut trial = vec![0.0; p.len()];
    let mut residual = f64::INFINITY;
    for it in 0..budget {
        let g = grad(&p);
        residual = p
            .iter()
            .zip(&g)
            .zip(model.agents())
            .map(|((q, gi), a)| (a.project(q + gi) - q).abs())
            .fold(0.0, f64::max);
        if residual < tol {
            return Ascent { p, iterations: it, residual, converged: true };
        }
        let mut accepted = false;
        for _ in 0..60 {
            for ((t, q), (gi, a)) in trial.iter_mut().zip(&p).zip(g.iter().zip(model.agents())) {
                *t = a.project(q + step * gi);
            }
            let ft = f(&trial);
            let decrease: f64 = trial.iter().zip(&p).map(|(t, q)| (t - q) * (t - q)).sum();
            let lin: f64 = trial.iter().zip(&p).zip(&g).map(|((t, q), gi)| gi * (t - q)).sum();
            if decrease == 0.0 || ft >= value + lin - decrease / (2.0 * step) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut p, &mut trial);
        value = f(&p);
        step = (step * 1.5).min(1e3);
    }
    Ascent { p, iterations: budget, residual, converged: residual < tol }
}

/// Projected gradient ascent on welfare over the box, ignoring capacity.
pub fn centralized_proximal(model: &GameModel, budget: usize, tol: f64) -> BenchmarkResult {
    centralized_proximal_from(model, &model.midpoint(), budget, tol)
}

pub fn centralized_proximal_from(model: &GameModel, p0: &[f64], budget: usize, tol: f64) -> BenchmarkResult {
    let r = projected_ascent(model, |p| model.welfare(p), |p| model.welfare_gradient(p), p0, budget, tol, 1.0);
    BenchmarkResult {
        w_star: model.welfare(&r.p),
        p_star: r.p,
        z_star: None,
        iterations: r.iterations,
        converged: r.converged,
        residual: r.residual,
    }
}

/// Capacity-constrained planner optimum: dual bisection on the price `z` with
/// warm-started inner projected ascent on `W - z * sum(p)`.
pub fn centralized_primal_dual(model: &GameModel, budget: usize, tol: f64) -> Result<BenchmarkResult> {
    let cap = model.capacity().ok_or(Error::NoCapacity)?;
    let inner = |z: f64, p0: &[f64], budget: usize| {
        projected_ascent(
            model,
            |p| model.welfare(p) - z * model.load(p),
            |p| model.welfare_gradient(p).into_iter().map(|g| g - z).collect(),
            p0,
            budget,
            tol,
            1.0,
        )
    };
    let per_solve = (budget / 20).max(50);
    let mut used = 0usize;
    let free = inner(0.0, &model.midpoint(), budget.min(per_solve * 4));
    used += free.iterations;
    if model.load(&free.p) <= cap {
        return Ok(BenchmarkResult {
            w_star: model.welfare(&free.p),
            p_star: free.p,
            z_star: Some(0.0),
            iterations: used,
            converged: free.converged,
            residual: free.residual,
        });
    }
    let (mut z_lo, mut z_hi) = (0.0, 1.0);
    let mut hi = inner(z_hi, &free.p, per_solve);
    used += hi.iterations;
    while model.load(&hi.p) > cap && z_hi < 1e8 {
        z_lo = z_hi;
        z_hi *= 2.0;
        hi = inner(z_hi, &hi.p, per_solve);
        used += hi.iterations;
    }
    while used < budget && (z_hi - z_lo) > 1e-12 * (1.0 + z_hi) {
        let zm = 0.5 * (z_lo + z_hi);
        let m = inner(zm, &hi.p, per_solve.min(budget - used).max(1));
        used += m.iterations.max(1);
        if model.load(&m.p) > cap {
            z_lo = zm;
        } else {
            z_hi = zm;
            hi = m;
        }
        if (model.load(&hi.p) - cap).abs() < tol && hi.converged {
            break;
        }
    }
    // Polish at the feasible end of the bracket.
    let fin = inner(z_hi, &hi.p, per_solve);
    let fin = if model.load(&fin.p) <= cap + 1e-9 { fin } else { hi };
    let slack = (cap - model.load(&fin.p)).max(0.0);
    let converged = fin.converged && slack * z_hi < tol.max(1e-6);
    Ok(BenchmarkResult {
        w_star: model.welfare(&fin.p),
        p_star: fin.p,
        z_star: Some(z_hi),
        iterations: used,
        converged,
        residual: fin.residual,
    })
}

/// Solution of the box-constrained VI `F(p; z)` by projected extragradient
/// with adaptive steps; the Nash equilibrium of the game at fixed index `z`.
pub fn nash_equilibrium(model: &GameModel, z: f64, p0: Option<&[f64]>, budget: usize, tol: f64) -> BenchmarkResult {
    let mut p = p0.map_or_else(|| model.midpoint(), <[f64]>::to_vec);
    model.project(&mut p);
    let natural = |p: &[f64], f: &[f64]| {
        p.iter()
            .zip(f)
            .zip(model.agents())
            .map(|((q, fi), a)| (a.project(q - fi) - q).abs())
            .fold(0.0, f64::max)
    };
    let mut eta = 1.0;
    let mut residual = f64::INFINITY;
    let mut iterations = budget;
    let mut y = vec![0.0; p.len()];
    for it in 0..budget {
        let fp = model.pseudo_gradient(&p, z);
        residual = natural(&p, &fp);
        if residual < tol {
            iterations = it;
            break;
        }
        loop {
            for ((yi, q), (fi, a)) in y.iter_mut().zip(&p).zip(fp.iter().zip(model.agents())) {
                *yi = a.project(q - eta * fi);
            }
            let fy = model.pseudo_gradient(&y, z);
            let num: f64 = fp.iter().zip(&fy).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let den: f64 = p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if eta * num <= 0.9 * den || den == 0.0 || eta < 1e-12 {
                for ((q, fi), a) in p.iter_mut().zip(&fy).zip(model.agents()) {
                    *q = a.project(*q - eta * fi);
                }
                break;
            }
            eta *= 0.5;
        }
        eta = (eta * 1.2).min(1e3);
    }
    BenchmarkResult {
        w_star: model.welfare(&p),
        p_star: p,
        z_star: Some(z),
        iterations,
        converged: residual < tol,
        residual,
    }
}

/// Sup-norm distance between two profiles.
pub fn distance_sup(a: &[f64], b: &[f64]) -> f64 {
    sup_diff(a, b)
}
