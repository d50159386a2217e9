//! Decentralized update rules, the public-index controller, noise and drift
//! processes, and the trajectory runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::benchmarks::nash_equilibrium;
use crate::error::{Error, Result};
use crate::model::GameModel;
use crate::optim::golden_section_max;

/// RNG stream for gradient and index measurement noise.
pub const STREAM_NOISE: u64 = 1;
/// RNG stream for exogenous drift.
pub const STREAM_DRIFT: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    DampedGradient,
    BestResponseHysteresis,
}

/// Which per-agent scalar follows the AR(1) drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftTarget {
    Off,
    Theta,
    CostA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub eta: f64,
    pub rho: f64,
    pub eta_z: f64,
    pub hysteresis_h: f64,
    /// Expected norm of the gradient noise vector.
    pub sigma: f64,
    /// Sd of the noise on the load the index controller observes.
    pub index_noise_sd: f64,
    pub drift_target: DriftTarget,
    pub drift_coeff: f64,
    pub drift_noise_sd: f64,
    pub max_iters: usize,
    pub epsilon: f64,
    pub stop_at_epsilon: bool,
    pub rule: UpdateRule,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            eta: 0.2,
            rho: 0.5,
            eta_z: 0.03,
            hysteresis_h: 0.0,
            sigma: 0.0,
            index_noise_sd: 0.0,
            drift_target: DriftTarget::Off,
            drift_coeff: 0.98,
            drift_noise_sd: 0.0,
            max_iters: 500,
            epsilon: 1e-3,
            stop_at_epsilon: false,
            rule: UpdateRule::DampedGradient,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |f: &str, r: &str| Err(Error::invalid(format!("dynamics.{f}"), r.to_string()));
        let finite = [
            ("eta", self.eta),
            ("rho", self.rho),
            ("eta_z", self.eta_z),
            ("hysteresis_h", self.hysteresis_h),
            ("sigma", self.sigma),
            ("index_noise_sd", self.index_noise_sd),
            ("drift_coeff", self.drift_coeff),
            ("drift_noise_sd", self.drift_noise_sd),
            ("epsilon", self.epsilon),
        ];
        for (f, v) in finite {
            if !v.is_finite() {
                return bad(f, "must be finite");
            }
        }
        if self.eta <= 0.0 {
            return bad("eta", "must be > 0");
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad("rho", "must lie in (0, 1]");
        }
        for (f, v) in [
            ("eta_z", self.eta_z),
            ("hysteresis_h", self.hysteresis_h),
            ("sigma", self.sigma),
            ("index_noise_sd", self.index_noise_sd),
            ("drift_noise_sd", self.drift_noise_sd),
        ] {
            if v < 0.0 {
                return bad(f, "must be >= 0");
            }
        }
        if !(0.0..=1.0).contains(&self.drift_coeff) {
            return bad("drift_coeff", "must lie in [0, 1]");
        }
        if self.epsilon <= 0.0 {
            return bad("epsilon", "must be > 0");
        }
        Ok(())
    }

    fn drifting(&self) -> bool {
        self.drift_target != DriftTarget::Off
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub p: Vec<f64>,
    pub z: f64,
    pub t: usize,
    /// Current values of the drifting parameter; empty when drift is off.
    pub drift_state: Vec<f64>,
}

impl GameState {
    /// Box midpoint with a zero index.
    pub fn initial(model: &GameModel) -> Self {
        Self { p: model.midpoint(), z: 0.0, t: 0, drift_state: Vec::new() }
    }

    pub fn from_profile(model: &GameModel, p: Vec<f64>, z: f64) -> Result<Self> {
        if !model.in_box(&p) {
            return Err(Error::invalid("p", "initial profile must lie in the box"));
        }
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::invalid("z", "must be >= 0"));
        }
        Ok(Self { p, z, t: 0, drift_state: Vec::new() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub label: String,
    pub seed: u64,
    pub w: Vec<f64>,
    pub gap: Vec<f64>,
    pub load: Vec<f64>,
    pub violation: Vec<f64>,
    pub z: Vec<f64>,
    pub p_final: Vec<f64>,
    pub z_final: f64,
    /// Best-response steps that fell back to a gradient step.
    pub fallbacks: usize,
    /// `||p_t - p*_t||` against a moving reference, when tracked.
    pub tracking_error: Vec<f64>,
}

impl RunResult {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Noise draw with expected norm about `sigma`, one coordinate per agent.
fn noise_vector(n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    let sd = sigma / (n as f64).sqrt();
    (0..n).map(|_| sd * gaussian(rng)).collect()
}

/// Synchronous damped projected gradient step on every agent.
pub fn step_damped_gradient(model: &GameModel, state: &GameState, cfg: &DynamicsConfig, rng: &mut ChaCha8Rng) -> GameState {
    let f = model.pseudo_gradient(&state.p, state.z);
    let xi = noise_vector(model.n(), cfg.sigma, rng);
    let p = state
        .p
        .iter()
        .zip(f.iter().zip(&xi))
        .zip(model.agents())
        .map(|((q, (fi, e)), a)| {
            let g = -fi + e;
            a.project((1.0 - cfg.rho) * q + cfg.rho * (q + cfg.eta * g))
        })
        .collect();
    GameState { p, z: state.z, t: state.t + 1, drift_state: state.drift_state.clone() }
}

/// Synchronous best responses, each kept only when it moves more than `h`.
///
/// Returns the new state and the number of agents whose scalar search looked
/// non-concave; those agents take a damped gradient step instead.
pub fn step_best_response_hysteresis(model: &GameModel, state: &GameState, cfg: &DynamicsConfig) -> (GameState, usize) {
    let d = model.signal_map().denominators(&state.p);
    let mut fallbacks = 0;
    let p = (0..model.n())
        .map(|i| {
            let a = &model.agents()[i];
            let best = golden_section_max(|q| model.own_payoff(i, q, d[i], state.z).0, a.lower, a.upper, 1e-8, 200);
            let target = if best.unimodal {
                best.x
            } else {
                fallbacks += 1;
                let g = model.own_payoff(i, state.p[i], d[i], state.z).1;
                a.project(state.p[i] + cfg.rho * cfg.eta * g)
            };
            if (target - state.p[i]).abs() > cfg.hysteresis_h {
                target
            } else {
                state.p[i]
            }
        })
        .collect();
    (GameState { p, z: state.z, t: state.t + 1, drift_state: state.drift_state.clone() }, fallbacks)
}

/// `z' = max(0, z + eta_z (sum p - C))`.
pub fn step_dual_index(state: &GameState, model: &GameModel, eta_z: f64) -> Result<f64> {
    let cap = model.capacity().ok_or(Error::NoCapacity)?;
    Ok((state.z + eta_z * (model.load(&state.p) - cap)).max(0.0))
}

/// AR(1) step `v' = m + coeff (v - m) + e` around the anchor `m`, kept positive.
///
/// A zero anchor gives the plain recursion `v' = coeff v + e`.
pub fn drift_step(values: &[f64], anchor: &[f64], coeff: f64, sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    values
        .iter()
        .zip(anchor)
        .map(|(v, m)| {
            let e = if sd > 0.0 { sd * gaussian(rng) } else { 0.0 };
            let next = m + coeff * (v - m) + e;
            next.max(1e-6)
        })
        .collect()
}

fn drift_values(model: &GameModel, target: DriftTarget) -> Vec<f64> {
    match target {
        DriftTarget::Off => Vec::new(),
        DriftTarget::Theta => model.thetas(),
        DriftTarget::CostA => model.cost_as(),
    }
}

fn apply_drift(model: &mut GameModel, target: DriftTarget, values: &[f64]) {
    match target {
        DriftTarget::Off => {}
        DriftTarget::Theta => model.set_thetas(values),
        DriftTarget::CostA => model.set_cost_as(values),
    }
}

/// Moving-reference options for tracking runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tracking {
    /// Recompute the equilibrium reference every this many iterations.
    pub every: usize,
}

/// Runs the message-free loop from the box midpoint with `z = 0`.
pub fn run_trajectory(model: &GameModel, cfg: &DynamicsConfig, w_star: f64, seed: u64, label: &str) -> Result<RunResult> {
    run_from(model, cfg, GameState::initial(model), w_star, seed, label, None)
}

/// Same as [`run_trajectory`] but also records the distance to the current
/// equilibrium of the drifting game.
pub fn run_tracking(model: &GameModel, cfg: &DynamicsConfig, seed: u64, label: &str, tracking: Tracking) -> Result<RunResult> {
    let w_star = nash_equilibrium(model, 0.0, None, 20_000, 1e-10).w_star;
    run_from(model, cfg, GameState::initial(model), w_star, seed, label, Some(tracking))
}

pub fn run_from(
    model: &GameModel,
    cfg: &DynamicsConfig,
    init: GameState,
    w_star: f64,
    seed: u64,
    label: &str,
    tracking: Option<Tracking>,
) -> Result<RunResult> {
    cfg.validate()?;
    if init.p.len() != model.n() {
        return Err(Error::invalid("p", "initial profile has the wrong length"));
    }
    let uses_index = cfg.eta_z > 0.0 && model.capacity().is_some();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(STREAM_NOISE);
    let mut drift_rng = ChaCha8Rng::seed_from_u64(seed);
    drift_rng.set_stream(STREAM_DRIFT);

    let mut live = model.clone();
    let anchor = drift_values(model, cfg.drift_target);
    let mut state = init;
    if cfg.drifting() && state.drift_state.is_empty() {
        state.drift_state = anchor.clone();
    }

    let n_iter = cfg.max_iters;
    let mut out = RunResult {
        label: label.to_string(),
        seed,
        w: Vec::with_capacity(n_iter),
        gap: Vec::with_capacity(n_iter),
        load: Vec::with_capacity(n_iter),
        violation: Vec::with_capacity(n_iter),
        z: Vec::with_capacity(n_iter),
        p_final: Vec::new(),
        z_final: 0.0,
        fallbacks: 0,
        tracking_error: Vec::new(),
    };
    let gap0 = w_star - model.welfare(&state.p);
    let blowup = 10.0 * gap0.abs().max(0.1 * (1.0 + w_star.abs()));
    let mut reference: Option<Vec<f64>> = None;

    for t in 0..n_iter {
        if cfg.drifting() {
            state.drift_state = drift_step(&state.drift_state, &anchor, cfg.drift_coeff, cfg.drift_noise_sd, &mut drift_rng);
            apply_drift(&mut live, cfg.drift_target, &state.drift_state);
        }
        let mut next = match cfg.rule {
            UpdateRule::DampedGradient => step_damped_gradient(&live, &state, cfg, &mut noise_rng),
            UpdateRule::BestResponseHysteresis => {
                let (s, fb) = step_best_response_hysteresis(&live, &state, cfg);
                out.fallbacks += fb;
                s
            }
        };
        if uses_index {
            let cap = live.capacity().unwrap_or(f64::INFINITY);
            let noise = if cfg.index_noise_sd > 0.0 { cfg.index_noise_sd * gaussian(&mut noise_rng) } else { 0.0 };
            next.z = (next.z + cfg.eta_z * (live.load(&next.p) + noise - cap)).max(0.0);
        }
        state = next;

        let w = live.welfare(&state.p);
        let gap = w_star - w;
        if !w.is_finite() || !state.z.is_finite() {
            return Err(Error::Diverged { iteration: t, reason: "non-finite welfare or index".into() });
        }
        if gap.abs() > blowup {
            return Err(Error::Diverged {
                iteration: t,
                reason: format!("gap {gap:.3e} exceeds ten times its initial scale"),
            });
        }
        let violation = live.violation(&state.p);
        out.w.push(w);
        out.gap.push(gap);
        out.load.push(live.load(&state.p));
        out.violation.push(violation);
        out.z.push(state.z);

        if let Some(tr) = tracking {
            if reference.is_none() || t % tr.every.max(1) == 0 {
                let prev = reference.as_deref();
                reference = Some(nash_equilibrium(&live, state.z, prev, 20_000, 1e-10).p_star);
            }
            let r = reference.as_ref().expect("reference set above");
            let err = state.p.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            out.tracking_error.push(err);
        }

        if cfg.stop_at_epsilon && gap.abs() <= cfg.epsilon && violation <= cfg.epsilon {
            break;
        }
    }
    out.p_final = state.p;
    out.z_final = state.z;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ResponseCurve;
    use crate::model::{AgentSpec, CostForm, Proxy, SignalMap, UtilityKind};
    use approx::assert_relative_eq;

    /// One agent whose price-only pseudo-gradient is `p - 0.5`:
    /// `u = theta * p - a p - b p^2` with theta = 1, a = 0.5, b = 0.5.
    fn affine_model() -> GameModel {
        let agent = AgentSpec { cost_a: 0.5, cost_b: 0.5, ..AgentSpec::unit(0.0, 1.0) };
        GameModel::new(
            vec![agent],
            SignalMap::decoupled(1.0),
            ResponseCurve::new(2.2, 1.6).unwrap(),
            UtilityKind::PriceOnly { proxy: Proxy::Signal, linearized: true, uses_index: false },
            1.0,
            CostForm::Quadratic,
            Some(1.0),
        )
        .unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn damped_gradient_by_hand() {
        let m = affine_model();
        assert_relative_eq!(m.pseudo_gradient(&[0.2], 0.0)[0], 0.2 - 0.5, epsilon = 1e-15);
        let s = GameState::from_profile(&m, vec![0.0], 0.0).unwrap();
        let mut cfg = DynamicsConfig { eta: 0.5, rho: 1.0, ..Default::default() };
        assert_relative_eq!(step_damped_gradient(&m, &s, &cfg, &mut rng()).p[0], 0.25, epsilon = 1e-15);
        cfg.rho = 0.5;
        assert_relative_eq!(step_damped_gradient(&m, &s, &cfg, &mut rng()).p[0], 0.125, epsilon = 1e-15);
        let fixed = GameState::from_profile(&m, vec![0.5], 0.0).unwrap();
        assert_eq!(step_damped_gradient(&m, &fixed, &cfg, &mut rng()).p[0], 0.5);
    }

    #[test]
    fn best_response_with_band() {
        // Own payoff p - 0.5 p^2 - 0.5 p ... maximized at p = 0.5.
        let m = affine_model();
        let cfg = DynamicsConfig { hysteresis_h: 0.0, ..Default::default() };
        let s = GameState::from_profile(&m, vec![0.9], 0.0).unwrap();
        let (next, fb) = step_best_response_hysteresis(&m, &s, &cfg);
        assert!((next.p[0] - 0.5).abs() < 1e-7);
        assert_eq!(fb, 0);
        let banded = DynamicsConfig { hysteresis_h: 0.2, ..Default::default() };
        let near = GameState::from_profile(&m, vec![0.45], 0.0).unwrap();
        assert_eq!(step_best_response_hysteresis(&m, &near, &banded).0.p[0], 0.45);
    }

    #[test]
    fn dual_index_by_hand() {
        let agents = vec![AgentSpec::unit(0.0, 30.0)];
        let m = GameModel::new(
            agents,
            SignalMap::decoupled(1.0),
            ResponseCurve::new(2.2, 1.6).unwrap(),
            UtilityKind::AgenticBid,
            1.0,
            CostForm::Energy,
            Some(20.0),
        )
        .unwrap();
        let s = GameState::from_profile(&m, vec![25.0], 1.0).unwrap();
        assert_relative_eq!(step_dual_index(&s, &m, 0.05).unwrap(), 1.25, epsilon = 1e-15);
        let s = GameState::from_profile(&m, vec![15.0], 0.0).unwrap();
        assert_eq!(step_dual_index(&s, &m, 0.1).unwrap(), 0.0);
        let s = GameState::from_profile(&m, vec![20.0], 0.7).unwrap();
        assert_eq!(step_dual_index(&s, &m, 0.1).unwrap(), 0.7);
        let free = m.with_capacity(None).unwrap();
        assert!(matches!(step_dual_index(&s, &free, 0.1), Err(Error::NoCapacity)));
    }

    #[test]
    fn drift_identity_and_decay() {
        let mut r = rng();
        assert_eq!(drift_step(&[1.0, 2.0], &[0.0, 0.0], 1.0, 0.0, &mut r), vec![1.0, 2.0]);
        assert_relative_eq!(drift_step(&[1.0], &[0.0], 0.98, 0.0, &mut r)[0], 0.98, epsilon = 1e-15);
    }

    #[test]
    fn drift_stationary_sd() {
        let (coeff, sd) = (0.98, 0.01);
        let mut r = rng();
        let mut v = vec![10.0];
        let anchor = [10.0];
        let mut acc = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            v = drift_step(&v, &anchor, coeff, sd, &mut r);
            acc.push(v[0] - 10.0);
        }
        let var = acc.iter().map(|x| x * x).sum::<f64>() / acc.len() as f64;
        let expect = sd / (1.0f64 - coeff * coeff).sqrt();
        assert!((var.sqrt() / expect - 1.0).abs() < 0.05, "{} vs {expect}", var.sqrt());
    }

    #[test]
    fn empty_budget_is_noop() {
        let m = affine_model();
        let cfg = DynamicsConfig { max_iters: 0, ..Default::default() };
        let r = run_trajectory(&m, &cfg, 0.0, 1, "x").unwrap();
        assert!(r.is_empty());
        assert_eq!(r.p_final, m.midpoint());
    }

    #[test]
    fn rejects_bad_config() {
        let m = affine_model();
        let cfg = DynamicsConfig { rho: 0.0, ..Default::default() };
        assert!(run_trajectory(&m, &cfg, 0.0, 1, "x").is_err());
        let cfg = DynamicsConfig { eta: -1.0, ..Default::default() };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("dynamics.eta"), "{msg}");
    }
}
