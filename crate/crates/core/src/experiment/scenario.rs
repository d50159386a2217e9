//! Seeded population draws and per-method model variants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::config::{CapacityRule, ExperimentConfig, ExperimentKind, Method, ShapedFamily, ThetaPrior};
use crate::benchmarks::centralized_proximal;
use crate::curve::ResponseCurve;
use crate::error::{Error, Result};
use crate::model::{AgentSpec, GameModel, Proxy, SignalMap, Tier, UtilityKind};

/// RNG stream for model parameter draws.
pub const STREAM_MODEL: u64 = 0;

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn draw_agents(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<AgentSpec>> {
    if let Some(agents) = &cfg.population.agents {
        return Ok(agents.clone());
    }
    let pop = &cfg.population;
    let theta_dist = match pop.theta {
        ThetaPrior::LogNormal { mu, sigma } => Some(
            LogNormal::new(mu, sigma).map_err(|e| Error::invalid("population.theta", e.to_string()))?,
        ),
        ThetaPrior::Fixed { .. } => None,
    };
    let tiers: Vec<Tier> = match cfg.experiment {
        ExperimentKind::SupplyChain => pop
            .tiers
            .iter()
            .zip([Tier::Supplier, Tier::Processor, Tier::Retailer].into_iter().cycle())
            .flat_map(|(&count, t)| std::iter::repeat_n(t, count))
            .collect(),
        _ => vec![Tier::Bot; pop.n],
    };
    let agents = tiers
        .into_iter()
        .map(|tier| {
            let upper = uniform(rng, pop.upper_range);
            let cost_a = uniform(rng, pop.cost_a_range);
            let cost_b = uniform(rng, pop.cost_b_range);
            let theta = match (&theta_dist, pop.theta) {
                (Some(d), _) => d.sample(rng),
                (None, ThetaPrior::Fixed { value }) => value,
                (None, _) => 1.0,
            };
            let energy_c = uniform(rng, pop.energy_c_range);
            let energy_w = uniform(rng, pop.energy_w_range);
            let rel_v = uniform(rng, pop.rel_v_range);
            AgentSpec { lower: pop.lower, upper, cost_a, cost_b, theta, energy_c, energy_w, rel_v, tier }
        })
        .collect();
    Ok(agents)
}

/// Same-tier interference with equal weights summing to `row_sum` per row.
pub fn tier_coupling(agents: &[AgentSpec], row_sum: f64) -> Vec<Vec<f64>> {
    let n = agents.len();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        let peers = agents.iter().filter(|a| a.tier == agents[i].tier).count();
        if peers < 2 {
            continue;
        }
        let w = row_sum / (peers - 1) as f64;
        for j in 0..n {
            if j != i && agents[j].tier == agents[i].tier {
                rows[i][j] = w;
            }
        }
    }
    rows
}

fn signal_map(cfg: &ExperimentConfig, agents: &[AgentSpec]) -> SignalMap {
    if let Some(m) = &cfg.signal.matrix {
        return SignalMap::matrix(cfg.signal.gain, m);
    }
    match cfg.experiment {
        ExperimentKind::SupplyChain => SignalMap::matrix(cfg.signal.gain, &tier_coupling(agents, cfg.signal.tier_row_sum)),
        _ => SignalMap::mean_field(cfg.signal.gain, cfg.signal.zeta),
    }
}

pub fn shaped_kind(cfg: &ExperimentConfig) -> UtilityKind {
    match cfg.utility.shaped {
        ShapedFamily::Dsh => UtilityKind::Dsh,
        ShapedFamily::YangSmith => UtilityKind::YangSmith,
        ShapedFamily::AgenticBid => UtilityKind::AgenticBid,
    }
}

/// Utility family a decentralized method plays; `None` for the centralized benchmark.
pub fn method_kind(cfg: &ExperimentConfig, method: Method) -> Option<UtilityKind> {
    let proxy = match cfg.experiment {
        ExperimentKind::SupplyChain => Proxy::Signal,
        _ => Proxy::OwnAction,
    };
    match method {
        Method::Shaped => Some(shaped_kind(cfg)),
        Method::PriceOnly => Some(UtilityKind::PriceOnly {
            proxy,
            linearized: false,
            uses_index: cfg.price_only_uses_index,
        }),
        Method::TatonnementOnly => Some(UtilityKind::PriceOnly { proxy, linearized: true, uses_index: true }),
        Method::Centralized => None,
    }
}

/// The shaped model of one run, with capacity resolved.
pub fn build_model(cfg: &ExperimentConfig, run_seed: u64) -> Result<GameModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(STREAM_MODEL);
    let agents = draw_agents(cfg, &mut rng)?;
    let signal = signal_map(cfg, &agents);
    let curve = ResponseCurve::new(cfg.curve.kappa, cfg.curve.beta)?;
    let free = GameModel::new(agents, signal, curve, shaped_kind(cfg), cfg.utility.lambda, cfg.utility.cost, None)?;
    let capacity = match cfg.capacity {
        CapacityRule::None => None,
        CapacityRule::Fixed { value } => Some(value),
        CapacityRule::FractionOfOptimum { fraction } => {
            let budget = cfg.dynamics.max_iters.max(1) * cfg.benchmark.high_accuracy_multiplier;
            let opt = centralized_proximal(&free, budget, cfg.benchmark.tol);
            Some(fraction * free.load(&opt.p_star))
        }
    };
    free.with_capacity(capacity)
}
