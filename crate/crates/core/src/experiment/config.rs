//! Experiment configuration: a JSON tree merged over per-experiment defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::DynamicsConfig;
use crate::error::{Error, Result};
use crate::model::{AgentSpec, CostForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SupplyChain,
    Agentic,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shaped,
    PriceOnly,
    TatonnementOnly,
    Centralized,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Shaped => "shaped",
            Method::PriceOnly => "price_only",
            Method::TatonnementOnly => "tatonnement_only",
            Method::Centralized => "centralized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapedFamily {
    Dsh,
    YangSmith,
    AgenticBid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaPrior {
    Fixed { value: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub n: usize,
    /// Supplier/processor/retailer counts.
    pub tiers: Vec<usize>,
    pub lower: f64,
    pub upper_range: [f64; 2],
    pub cost_a_range: [f64; 2],
    pub cost_b_range: [f64; 2],
    pub theta: ThetaPrior,
    pub energy_c_range: [f64; 2],
    pub energy_w_range: [f64; 2],
    pub rel_v_range: [f64; 2],
    /// Explicit population for custom experiments.
    pub agents: Option<Vec<AgentSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub kappa: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub gain: f64,
    /// Same-tier interference row sum (supply chain).
    pub tier_row_sum: f64,
    /// Mean-field congestion weight (agentic).
    pub zeta: f64,
    /// Explicit coupling matrix for custom experiments.
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    pub shaped: ShapedFamily,
    pub lambda: f64,
    pub cost: CostForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapacityRule {
    None,
    Fixed { value: f64 },
    /// Fraction of the aggregate load at the unconstrained planner optimum.
    FractionOfOptimum { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Budget multiple used for the high-accuracy W*.
    pub high_accuracy_multiplier: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    pub population: PopulationConfig,
    pub curve: CurveConfig,
    pub signal: SignalConfig,
    pub utility: UtilityConfig,
    pub dynamics: DynamicsConfig,
    pub capacity: CapacityRule,
    pub runs: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub price_only_uses_index: bool,
    pub benchmark: BenchmarkConfig,
    /// Recompute a moving equilibrium reference every this many iterations.
    pub tracking_every: Option<usize>,
}

impl ExperimentConfig {
    pub fn supply_chain() -> Self {
        Self {
            name: "supply_chain".into(),
            experiment: ExperimentKind::SupplyChain,
            population: PopulationConfig {
                n: 50,
                tiers: vec![20, 15, 15],
                lower: 0.3,
                upper_range: [0.5, 1.5],
                cost_a_range: [0.1, 0.3],
                cost_b_range: [0.05, 0.15],
                theta: ThetaPrior::Fixed { value: 1.0 },
                energy_c_range: [0.03, 0.03],
                energy_w_range: [1.5, 1.5],
                rel_v_range: [1.0, 1.0],
                agents: None,
            },
            curve: CurveConfig { kappa: 2.2, beta: 1.6 },
            signal: SignalConfig { gain: 8.0, tier_row_sum: 0.3, zeta: 0.0, matrix: None },
            utility: UtilityConfig { shaped: ShapedFamily::Dsh, lambda: 1.0, cost: CostForm::Quadratic },
            dynamics: DynamicsConfig { eta: 0.4, rho: 1.0, eta_z: 0.01, ..DynamicsConfig::default() },
            capacity: CapacityRule::FractionOfOptimum { fraction: 0.85 },
            runs: 100,
            base_seed: 20240501,
            methods: vec![Method::Shaped, Method::PriceOnly, Method::TatonnementOnly, Method::Centralized],
            price_only_uses_index: false,
            benchmark: BenchmarkConfig { high_accuracy_multiplier: 10, tol: 1e-10 },
            tracking_every: None,
        }
    }

    pub fn agentic() -> Self {
        Self {
            name: "agentic".into(),
            experiment: ExperimentKind::Agentic,
            population: PopulationConfig {
                n: 60,
                tiers: Vec::new(),
                lower: 0.2,
                upper_range: [1.0, 1.0],
                cost_a_range: [0.0, 0.0],
                cost_b_range: [0.0, 0.0],
                theta: ThetaPrior::LogNormal { mu: 0.0, sigma: 0.6 },
                energy_c_range: [0.01, 0.05],
                energy_w_range: [1.2, 1.8],
                rel_v_range: [1.0, 1.6],
                agents: None,
            },
            curve: CurveConfig { kappa: 2.2, beta: 1.6 },
            signal: SignalConfig { gain: 10.0, tier_row_sum: 0.0, zeta: 0.5, matrix: None },
            utility: UtilityConfig { shaped: ShapedFamily::AgenticBid, lambda: 1.0, cost: CostForm::Energy },
            dynamics: DynamicsConfig { eta: 0.2, rho: 0.5, eta_z: 0.03, ..DynamicsConfig::default() },
            capacity: CapacityRule::Fixed { value: 20.0 },
            runs: 100,
            base_seed: 20240502,
            methods: vec![Method::Shaped, Method::PriceOnly, Method::TatonnementOnly, Method::Centralized],
            price_only_uses_index: true,
            benchmark: BenchmarkConfig { high_accuracy_multiplier: 10, tol: 1e-10 },
            tracking_every: None,
        }
    }

    /// Five agentic agents with capacity scaled from the 60-agent default.
    pub fn small() -> Self {
        let mut cfg = Self::agentic();
        cfg.name = "small".into();
        cfg.population.n = 5;
        cfg.capacity = CapacityRule::Fixed { value: 20.0 * 5.0 / 60.0 };
        cfg.runs = 10;
        cfg
    }

    pub fn custom() -> Self {
        Self { name: "custom".into(), experiment: ExperimentKind::Custom, ..Self::agentic() }
    }

    pub fn defaults_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::SupplyChain => Self::supply_chain(),
            ExperimentKind::Agentic => Self::agentic(),
            ExperimentKind::Custom => Self::custom(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |f: &str, r: String| Err(Error::invalid(f, r));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name", "must be a nonempty plain directory name".into());
        }
        let pop = &self.population;
        if self.experiment != ExperimentKind::Custom && pop.n == 0 {
            return bad("population.n", "must be >= 1".into());
        }
        if self.experiment == ExperimentKind::SupplyChain && pop.tiers.iter().sum::<usize>() != pop.n {
            return bad("population.tiers", format!("counts must sum to population.n = {}", pop.n));
        }
        if self.experiment == ExperimentKind::Custom && pop.agents.as_ref().is_none_or(Vec::is_empty) {
            return bad("population.agents", "custom experiments list their agents".into());
        }
        if !(pop.lower.is_finite() && pop.lower >= 0.0) {
            return bad("population.lower", "must be >= 0".into());
        }
        let ranges = [
            ("population.upper_range", pop.upper_range),
            ("population.cost_a_range", pop.cost_a_range),
            ("population.cost_b_range", pop.cost_b_range),
            ("population.energy_c_range", pop.energy_c_range),
            ("population.energy_w_range", pop.energy_w_range),
            ("population.rel_v_range", pop.rel_v_range),
        ];
        for (f, [lo, hi]) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(f, format!("needs finite [lo, hi] with lo <= hi, got [{lo}, {hi}]"));
            }
        }
        if pop.upper_range[0] <= pop.lower && self.experiment != ExperimentKind::Custom {
            return bad("population.upper_range", "lowest upper bound must exceed population.lower".into());
        }
        match pop.theta {
            ThetaPrior::Fixed { value } if !(value.is_finite() && value > 0.0) => {
                return bad("population.theta.value", "must be > 0".into());
            }
            ThetaPrior::LogNormal { mu, sigma } if !(mu.is_finite() && sigma.is_finite() && sigma >= 0.0) => {
                return bad("population.theta.sigma", "must be >= 0".into());
            }
            _ => {}
        }
        if !(self.curve.kappa.is_finite() && self.curve.kappa > 0.0) {
            return bad("curve.kappa", "must be > 0".into());
        }
        if !(self.curve.beta.is_finite() && self.curve.beta > 0.0) {
            return bad("curve.beta", "must be > 0".into());
        }
        if !(self.signal.gain.is_finite() && self.signal.gain > 0.0) {
            return bad("signal.gain", "must be > 0".into());
        }
        if !(0.0..1.0).contains(&self.signal.tier_row_sum) {
            return bad("signal.tier_row_sum", "must lie in [0, 1)".into());
        }
        if !(self.signal.zeta.is_finite() && self.signal.zeta >= 0.0) {
            return bad("signal.zeta", "must be >= 0".into());
        }
        if !(self.utility.lambda.is_finite() && self.utility.lambda >= 0.0) {
            return bad("utility.lambda", "must be >= 0".into());
        }
        self.dynamics.validate()?;
        match self.capacity {
            CapacityRule::Fixed { value } if !(value.is_finite() && value > 0.0) => {
                return bad("capacity.value", "must be > 0".into());
            }
            CapacityRule::FractionOfOptimum { fraction } if !(fraction.is_finite() && fraction > 0.0) => {
                return bad("capacity.fraction", "must be > 0".into());
            }
            _ => {}
        }
        if self.runs == 0 {
            return bad("runs", "must be >= 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods", "list at least one method".into());
        }
        if self.benchmark.high_accuracy_multiplier == 0 {
            return bad("benchmark.high_accuracy_multiplier", "must be >= 1".into());
        }
        if !(self.benchmark.tol.is_finite() && self.benchmark.tol > 0.0) {
            return bad("benchmark.tol", "must be > 0".into());
        }
        if self.tracking_every == Some(0) {
            return bad("tracking_every", "must be >= 1".into());
        }
        Ok(())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Builds a validated config from a JSON tree, filling defaults for its experiment kind.
pub fn config_from_value(user: Value) -> Result<ExperimentConfig> {
    if !user.is_object() {
        return Err(Error::Config { path: ".".into(), message: "top level must be an object".into() });
    }
    let kind = match user.get("experiment") {
        None => ExperimentKind::SupplyChain,
        Some(v) => serde_path_to_error::deserialize::<_, ExperimentKind>(v.clone())
            .map_err(|e| Error::Config { path: "experiment".into(), message: e.inner().to_string() })?,
    };
    let mut tree = serde_json::to_value(ExperimentConfig::defaults_for(kind))?;
    // Tagged enums are replaced wholesale so their fields never mix across variants.
    let mut user = user;
    for key in ["capacity"] {
        if let Some(v) = user.as_object_mut().and_then(|o| o.remove(key)) {
            tree.as_object_mut().expect("object").insert(key.into(), v);
        }
    }
    if let Some(theta) = user.pointer_mut("/population").and_then(|p| p.as_object_mut()).and_then(|o| o.remove("theta")) {
        tree.pointer_mut("/population").and_then(Value::as_object_mut).expect("population").insert("theta".into(), theta);
    }
    merge(&mut tree, user);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(tree).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Config {
        path: format!("{}:{}:{}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    })?;
    config_from_value(value)
}

/// Sets a dotted path inside a JSON tree, creating objects along the way.
pub fn set_path(tree: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = tree;
    let parts: Vec<&str> = path.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::invalid("param", format!("malformed path `{path}`")));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::invalid("param", format!("`{path}` does not address an object field")))?;
        if k + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}
