use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GameModel;

const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moduli {
    /// Smallest sampled monotonicity ratio, clamped at zero.
    pub mu_hat: f64,
    pub l_hat: f64,
    /// Unclamped minimum, negative when a sampled pair was non-monotone.
    pub mu_raw: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepsizeRegion {
    pub eta_max: f64,
    pub q: f64,
    pub alpha: f64,
    pub contractive: bool,
}

/// Empirical moduli of an operator over uniform random pairs in a box.
pub fn estimate_operator_moduli<F, R>(f: F, lowers: &[f64], uppers: &[f64], n_pairs: usize, rng: &mut R) -> Result<Moduli>
where
    F: Fn(&[f64]) -> Vec<f64>,
    R: Rng + ?Sized,
{
    if n_pairs < 2 {
        return Err(Error::invalid("n_pairs", "must be >= 2"));
    }
    if lowers.len() != uppers.len() || lowers.is_empty() {
        return Err(Error::invalid("bounds", "lower and upper bounds must match and be nonempty"));
    }
    let draw = |rng: &mut R| -> Vec<f64> {
        lowers.iter().zip(uppers).map(|(l, u)| l + (u - l) * rng.random::<f64>()).collect()
    };
    let mut mu = f64::INFINITY;
    let mut l = 0.0f64;
    let mut taken = 0;
    while taken < n_pairs {
        let p = draw(rng);
        let q = draw(rng);
        let dp: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
        let norm2: f64 = dp.iter().map(|d| d * d).sum();
        if norm2 < 1e-24 {
            continue;
        }
        let df: Vec<f64> = f(&p).iter().zip(f(&q)).map(|(a, b)| a - b).collect();
        let inner: f64 = df.iter().zip(&dp).map(|(a, b)| a * b).sum();
        let dfn: f64 = df.iter().map(|d| d * d).sum::<f64>().sqrt();
        mu = mu.min(inner / norm2);
        l = l.max(dfn / norm2.sqrt());
        taken += 1;
    }
    let l_hat = l.max(FLOOR);
    Ok(Moduli { mu_hat: mu.clamp(0.0, l_hat), l_hat, mu_raw: mu, samples: taken })
}

/// Moduli of the pseudo-gradient at fixed index `z`.
pub fn estimate_moduli<R: Rng + ?Sized>(model: &GameModel, z: f64, n_pairs: usize, rng: &mut R) -> Result<Moduli> {
    estimate_operator_moduli(|p| model.pseudo_gradient(p, z), &model.lowers(), &model.uppers(), n_pairs, rng)
}

/// `eta_max = 2 mu / L^2`, `q = sqrt(1 - 2 eta mu + eta^2 L^2)`, `alpha = (1 - rho) + rho q`.
pub fn stepsize_region(moduli: &Moduli, eta: f64, rho: f64) -> StepsizeRegion {
    let (mu, l) = (moduli.mu_hat, moduli.l_hat);
    let eta_max = 2.0 * mu / (l * l);
    let q = (1.0 - 2.0 * eta * mu + eta * eta * l * l).max(0.0).sqrt();
    let alpha = (1.0 - rho) + rho * q;
    StepsizeRegion { eta_max, q, alpha, contractive: eta > 0.0 && eta < eta_max && rho > 0.0 && rho <= 1.0 }
}
