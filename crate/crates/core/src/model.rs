//! Agent populations, signal maps, utility families, welfare and the
//! pseudo-gradient operator.

use serde::{Deserialize, Serialize};

use crate::curve::ResponseCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Supplier,
    Processor,
    Retailer,
    Bot,
}

/// One agent's box, costs and type parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub lower: f64,
    pub upper: f64,
    pub cost_a: f64,
    pub cost_b: f64,
    pub theta: f64,
    pub energy_c: f64,
    pub energy_w: f64,
    pub rel_v: f64,
    pub tier: Tier,
}

impl AgentSpec {
    /// A unit-type agent on `[lower, upper]` with no costs beyond a small energy term.
    pub fn unit(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            cost_a: 0.0,
            cost_b: 0.0,
            theta: 1.0,
            energy_c: 0.03,
            energy_w: 1.5,
            rel_v: 1.0,
            tier: Tier::Bot,
        }
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let f = |name: &str| format!("agents[{index}].{name}");
        let all = [
            ("lower", self.lower),
            ("upper", self.upper),
            ("cost_a", self.cost_a),
            ("cost_b", self.cost_b),
            ("theta", self.theta),
            ("energy_c", self.energy_c),
            ("energy_w", self.energy_w),
            ("rel_v", self.rel_v),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::invalid(f(name), format!("must be finite, got {v}")));
            }
        }
        if self.lower < 0.0 {
            return Err(Error::invalid(f("lower"), "must be >= 0"));
        }
        if self.upper <= self.lower {
            return Err(Error::invalid(f("upper"), "must exceed lower"));
        }
        if self.cost_b < 0.0 {
            return Err(Error::invalid(f("cost_b"), "must be >= 0"));
        }
        if self.theta <= 0.0 {
            return Err(Error::invalid(f("theta"), "must be > 0"));
        }
        if self.energy_c <= 0.0 {
            return Err(Error::invalid(f("energy_c"), "must be > 0"));
        }
        if self.energy_w <= 1.0 {
            return Err(Error::invalid(f("energy_w"), "must be > 1"));
        }
        if self.rel_v <= 0.0 {
            return Err(Error::invalid(f("rel_v"), "must be > 0"));
        }
        Ok(())
    }

    #[inline]
    pub fn project(&self, q: f64) -> f64 {
        q.clamp(self.lower, self.upper)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Interference structure inside the signal denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    None,
    /// Row-major N x N nonnegative matrix with zero diagonal.
    Matrix { n: usize, a: Vec<f64> },
    /// Congestion from the mean action of the other agents.
    MeanField { zeta: f64 },
}

/// `x_i = gain * p_i / D_i(p_{-i})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalMap {
    pub gain: f64,
    pub coupling: Coupling,
}

impl SignalMap {
    pub fn decoupled(gain: f64) -> Self {
        Self { gain, coupling: Coupling::None }
    }

    pub fn matrix(gain: f64, rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let a = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { gain, coupling: Coupling::Matrix { n, a } }
    }

    pub fn mean_field(gain: f64, zeta: f64) -> Self {
        Self { gain, coupling: Coupling::MeanField { zeta } }
    }

    pub fn is_decoupled(&self) -> bool {
        match &self.coupling {
            Coupling::None => true,
            Coupling::Matrix { a, .. } => a.iter().all(|&v| v == 0.0),
            Coupling::MeanField { zeta } => *zeta == 0.0,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::invalid("signal.gain", "must be > 0"));
        }
        match &self.coupling {
            Coupling::None => {}
            Coupling::Matrix { n: m, a } => {
                if *m != n || a.len() != n * n {
                    return Err(Error::invalid(
                        "signal.coupling",
                        format!("matrix must be {n}x{n}"),
                    ));
                }
                for i in 0..n {
                    let row = &a[i * n..(i + 1) * n];
                    if row[i] != 0.0 {
                        return Err(Error::invalid("signal.coupling", "diagonal must be zero"));
                    }
                    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(Error::invalid("signal.coupling", "entries must be >= 0"));
                    }
                    if row.iter().sum::<f64>() >= 1.0 {
                        return Err(Error::invalid(
                            "signal.coupling",
                            format!("row {i} sum must be < 1"),
                        ));
                    }
                }
            }
            Coupling::MeanField { zeta } => {
                if !(zeta.is_finite() && *zeta >= 0.0) {
                    return Err(Error::invalid("signal.zeta", "must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Denominators `D_i`, none of which depends on `p_i`.
    pub fn denominators(&self, p: &[f64]) -> Vec<f64> {
        let n = p.len();
        match &self.coupling {
            Coupling::None => vec![1.0; n],
            Coupling::Matrix { a, .. } => (0..n)
                .map(|i| {
                    let row = &a[i * n..(i + 1) * n];
                    1.0 + row.iter().zip(p).map(|(aij, pj)| aij * pj).sum::<f64>()
                })
                .collect(),
            Coupling::MeanField { zeta } => {
                if n < 2 {
                    return vec![1.0; n];
                }
                let s: f64 = p.iter().sum();
                p.iter()
                    .map(|pi| 1.0 + zeta * (s - pi) / (n - 1) as f64)
                    .collect()
            }
        }
    }

    pub fn denominator(&self, p: &[f64], i: usize) -> f64 {
        let n = p.len();
        match &self.coupling {
            Coupling::None => 1.0,
            Coupling::Matrix { a, .. } => {
                1.0 + a[i * n..(i + 1) * n].iter().zip(p).map(|(x, y)| x * y).sum::<f64>()
            }
            Coupling::MeanField { zeta } => {
                if n < 2 {
                    1.0
                } else {
                    let s: f64 = p.iter().sum();
                    1.0 + zeta * (s - p[i]) / (n - 1) as f64
                }
            }
        }
    }

    /// `sum_i w_i dD_i/dp_k` for every `k`.
    fn transpose_weighted(&self, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        match &self.coupling {
            Coupling::None => vec![0.0; n],
            Coupling::Matrix { a, .. } => {
                let mut out = vec![0.0; n];
                for (i, wi) in w.iter().enumerate() {
                    if *wi == 0.0 {
                        continue;
                    }
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += wi * a[i * n + k];
                    }
                }
                out
            }
            Coupling::MeanField { zeta } => {
                if n < 2 {
                    return vec![0.0; n];
                }
                let c = zeta / (n - 1) as f64;
                let t: f64 = w.iter().sum();
                w.iter().map(|wk| c * (t - wk)).collect()
            }
        }
    }
}

/// What a price-only agent treats as its private value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proxy {
    /// `log(1 + x_i)` minus the model cost.
    Signal,
    /// `theta_i log(1 + p_i)`, no cost term.
    OwnAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum UtilityKind {
    /// `theta v(Rel) - lambda c(p) - z p`.
    Dsh,
    /// `log(1 + Rel^v) - lambda c(p) - z p`.
    YangSmith,
    /// `theta log(1 + Rel^v) - lambda c(p) - z p`.
    AgenticBid,
    /// Reliability-blind baseline; `linearized` drops the log.
    PriceOnly {
        proxy: Proxy,
        linearized: bool,
        uses_index: bool,
    },
}

impl UtilityKind {
    pub fn charges_index(&self) -> bool {
        match self {
            UtilityKind::PriceOnly { uses_index, .. } => *uses_index,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostForm {
    /// `a p + b p^2`
    Quadratic,
    /// `C p^w`
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameModel {
    agents: Vec<AgentSpec>,
    signal: SignalMap,
    curve: ResponseCurve,
    utility: UtilityKind,
    lambda: f64,
    cost: CostForm,
    capacity: Option<f64>,
}

impl GameModel {
    pub fn new(
        agents: Vec<AgentSpec>,
        signal: SignalMap,
        curve: ResponseCurve,
        utility: UtilityKind,
        lambda: f64,
        cost: CostForm,
        capacity: Option<f64>,
    ) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::invalid("agents", "population must be nonempty"));
        }
        for (i, a) in agents.iter().enumerate() {
            a.validate(i)?;
        }
        signal.validate(agents.len())?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid("lambda", "must be >= 0"));
        }
        if let Some(c) = capacity {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::invalid("capacity", "must be > 0"));
            }
        }
        Ok(Self { agents, signal, curve, utility, lambda, cost, capacity })
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    pub fn signal_map(&self) -> &SignalMap {
        &self.signal
    }

    pub fn curve(&self) -> &ResponseCurve {
        &self.curve
    }

    pub fn utility_kind(&self) -> UtilityKind {
        self.utility
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cost_form(&self) -> CostForm {
        self.cost
    }

    pub fn capacity(&self) -> Option<f64> {
        self.capacity
    }

    /// Same population and physics under a different utility family.
    pub fn with_utility(&self, utility: UtilityKind) -> Self {
        Self { utility, ..self.clone() }
    }

    pub fn with_capacity(&self, capacity: Option<f64>) -> Result<Self> {
        Self::new(
            self.agents.clone(),
            self.signal.clone(),
            self.curve,
            self.utility,
            self.lambda,
            self.cost,
            capacity,
        )
    }

    /// Restricts the model to the agents in `keep`; the coupling is sliced accordingly.
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        let agents: Vec<AgentSpec> = keep
            .iter()
            .map(|&i| {
                self.agents
                    .get(i)
                    .cloned()
                    .ok_or(Error::IndexOutOfRange { index: i, len: self.n() })
            })
            .collect::<Result<_>>()?;
        let coupling = match &self.signal.coupling {
            Coupling::Matrix { n, a } => {
                let m = keep.len();
                let mut b = Vec::with_capacity(m * m);
                for &i in keep {
                    for &j in keep {
                        b.push(a[i * n + j]);
                    }
                }
                Coupling::Matrix { n: m, a: b }
            }
            other => other.clone(),
        };
        if agents.is_empty() {
            return Ok(Self { agents, signal: SignalMap { gain: self.signal.gain, coupling }, ..self.clone() });
        }
        Self::new(
            agents,
            SignalMap { gain: self.signal.gain, coupling },
            self.curve,
            self.utility,
            self.lambda,
            self.cost,
            self.capacity,
        )
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.theta).collect()
    }

    pub fn set_thetas(&mut self, values: &[f64]) {
        for (a, v) in self.agents.iter_mut().zip(values) {
            a.theta = *v;
        }
    }

    pub fn cost_as(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.cost_a).collect()
    }

    pub fn set_cost_as(&mut self, values: &[f64]) {
        for (a, v) in self.agents.iter_mut().zip(values) {
            a.cost_a = *v;
        }
    }

    pub fn lowers(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.lower).collect()
    }

    pub fn uppers(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.upper).collect()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.agents.iter().map(AgentSpec::midpoint).collect()
    }

    pub fn project(&self, p: &mut [f64]) {
        for (q, a) in p.iter_mut().zip(&self.agents) {
            *q = a.project(*q);
        }
    }

    pub fn in_box(&self, p: &[f64]) -> bool {
        p.len() == self.n() && p.iter().zip(&self.agents).all(|(q, a)| *q >= a.lower && *q <= a.upper)
    }

    pub fn load(&self, p: &[f64]) -> f64 {
        p.iter().sum()
    }

    pub fn violation(&self, p: &[f64]) -> f64 {
        self.capacity.map_or(0.0, |c| (self.load(p) - c).max(0.0))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, len: self.n() });
        }
        Ok(())
    }

    pub fn signal(&self, p: &[f64], i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.signal.gain * p[i] / self.signal.denominator(p, i))
    }

    pub fn signals(&self, p: &[f64]) -> Vec<f64> {
        let d = self.signal.denominators(p);
        p.iter().zip(&d).map(|(q, di)| self.signal.gain * q / di).collect()
    }

    /// `lambda * c_i(q)` and its derivative.
    #[inline]
    fn cost(&self, a: &AgentSpec, q: f64) -> (f64, f64) {
        let (c, dc) = match self.cost {
            CostForm::Quadratic => (a.cost_a * q + a.cost_b * q * q, a.cost_a + 2.0 * a.cost_b * q),
            CostForm::Energy => {
                let q = q.max(0.0);
                let pw = q.powf(a.energy_w - 1.0);
                (a.energy_c * pw * q, a.energy_c * a.energy_w * pw)
            }
        };
        (self.lambda * c, self.lambda * dc)
    }

    /// `theta log(1 + Rel(x)^v)` and its derivative in `x`.
    #[inline]
    fn reliability_benefit(&self, theta: f64, v: f64, x: f64) -> (f64, f64) {
        let y = self.curve.value(x);
        if y == 0.0 {
            return (0.0, 0.0);
        }
        let yv = y.powf(v);
        let val = theta * yv.ln_1p();
        let d = theta * v * yv * self.curve.log_slope(x) / (1.0 + yv);
        (val, d)
    }

    /// Private payoff of agent `i` at own action `q` given denominator `d` and index `z`,
    /// with its derivative in `q`.
    #[inline]
    pub fn own_payoff(&self, i: usize, q: f64, d: f64, z: f64) -> (f64, f64) {
        let a = &self.agents[i];
        let g = self.signal.gain / d;
        let x = g * q;
        let (benefit, dbenefit) = match self.utility {
            UtilityKind::Dsh | UtilityKind::AgenticBid => {
                let (b, db) = self.reliability_benefit(a.theta, a.rel_v, x);
                (b, db * g)
            }
            UtilityKind::YangSmith => {
                let (b, db) = self.reliability_benefit(1.0, a.rel_v, x);
                (b, db * g)
            }
            UtilityKind::PriceOnly { proxy, linearized, .. } => match (proxy, linearized) {
                (Proxy::Signal, false) => (a.theta * x.ln_1p(), a.theta * g / (1.0 + x)),
                (Proxy::Signal, true) => (a.theta * x, a.theta * g),
                (Proxy::OwnAction, false) => (a.theta * q.ln_1p(), a.theta / (1.0 + q)),
                (Proxy::OwnAction, true) => (a.theta * q, a.theta),
            },
        };
        let (c, dc) = match self.utility {
            UtilityKind::PriceOnly { proxy: Proxy::OwnAction, .. } => (0.0, 0.0),
            _ => self.cost(a, q),
        };
        let zc = if self.utility.charges_index() { z } else { 0.0 };
        (benefit - c - zc * q, dbenefit - dc - zc)
    }

    pub fn utility(&self, i: usize, p: &[f64], z: f64) -> Result<f64> {
        self.check_index(i)?;
        let d = self.signal.denominator(p, i);
        Ok(self.own_payoff(i, p[i], d, z).0)
    }

    /// Planner welfare; index transfers are excluded.
    pub fn welfare(&self, p: &[f64]) -> f64 {
        let d = self.signal.denominators(p);
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let x = self.signal.gain * p[i] / d[i];
                self.reliability_benefit(a.theta, a.rel_v, x).0 - self.cost(a, p[i]).0
            })
            .sum()
    }

    /// Gradient of `welfare`, including cross-agent interference terms.
    pub fn welfare_gradient(&self, p: &[f64]) -> Vec<f64> {
        let d = self.signal.denominators(p);
        let gain = self.signal.gain;
        let n = self.n();
        let mut own = vec![0.0; n];
        let mut cross_w = vec![0.0; n];
        for (i, a) in self.agents.iter().enumerate() {
            let x = gain * p[i] / d[i];
            let (_, db) = self.reliability_benefit(a.theta, a.rel_v, x);
            own[i] = db * gain / d[i] - self.cost(a, p[i]).1;
            cross_w[i] = db * gain * p[i] / (d[i] * d[i]);
        }
        let cross = self.signal.transpose_weighted(&cross_w);
        own.iter().zip(&cross).map(|(o, c)| o - c).collect()
    }

    /// `F_i = -du_i/dp_i`.
    pub fn pseudo_gradient(&self, p: &[f64], z: f64) -> Vec<f64> {
        let d = self.signal.denominators(p);
        (0..self.n()).map(|i| -self.own_payoff(i, p[i], d[i], z).1).collect()
    }

    /// Sum of private payoffs; an exact potential whenever the signals are decoupled.
    pub fn potential(&self, p: &[f64], z: f64) -> f64 {
        let d = self.signal.denominators(p);
        (0..self.n()).map(|i| self.own_payoff(i, p[i], d[i], z).0).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn curve() -> ResponseCurve {
        ResponseCurve::new(2.2, 1.6).unwrap()
    }

    fn supply_price_only(a: f64, b: f64) -> GameModel {
        let agent = AgentSpec { cost_a: a, cost_b: b, tier: Tier::Supplier, ..AgentSpec::unit(0.0, 1.0) };
        GameModel::new(
            vec![agent],
            SignalMap::decoupled(1.0),
            curve(),
            UtilityKind::PriceOnly { proxy: Proxy::Signal, linearized: false, uses_index: false },
            1.0,
            CostForm::Quadratic,
            None,
        )
        .unwrap()
    }

    #[test]
    fn matrix_signal_by_hand() {
        let sig = SignalMap::matrix(1.0, &[vec![0.0, 0.5], vec![0.5, 0.0]]);
        let m = GameModel::new(
            vec![AgentSpec::unit(0.0, 2.0); 2],
            sig,
            curve(),
            UtilityKind::Dsh,
            1.0,
            CostForm::Quadratic,
            None,
        )
        .unwrap();
        assert_relative_eq!(m.signal(&[1.0, 1.0], 0).unwrap(), 1.0 / 1.5, epsilon = 1e-15);
        assert_eq!(m.signal(&[0.0, 1.0], 0).unwrap(), 0.0);
        assert!(matches!(m.signal(&[1.0, 1.0], 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn decoupled_signal_is_identity() {
        let m = supply_price_only(0.2, 0.1);
        assert_eq!(m.signal(&[0.7], 0).unwrap(), 0.7);
    }

    #[test]
    fn mean_field_excludes_self() {
        let m = GameModel::new(
            vec![AgentSpec::unit(0.0, 1.0); 3],
            SignalMap::mean_field(10.0, 0.5),
            curve(),
            UtilityKind::AgenticBid,
            1.0,
            CostForm::Energy,
            Some(1.0),
        )
        .unwrap();
        let p = [0.4, 0.2, 0.6];
        assert_relative_eq!(m.signal(&p, 0).unwrap(), 10.0 * 0.4 / (1.0 + 0.5 * 0.4), epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_coupling() {
        let bad = SignalMap::matrix(1.0, &[vec![0.0, 1.2], vec![0.1, 0.0]]);
        let r = GameModel::new(
            vec![AgentSpec::unit(0.0, 1.0); 2],
            bad,
            curve(),
            UtilityKind::Dsh,
            1.0,
            CostForm::Quadratic,
            None,
        );
        assert!(r.is_err());
        let diag = SignalMap::matrix(1.0, &[vec![0.1, 0.0], vec![0.0, 0.0]]);
        assert!(GameModel::new(
            vec![AgentSpec::unit(0.0, 1.0); 2],
            diag,
            curve(),
            UtilityKind::Dsh,
            1.0,
            CostForm::Quadratic,
            None,
        )
        .is_err());
    }

    #[test]
    fn zero_action_payoffs() {
        let m = supply_price_only(0.2, 0.1);
        assert_eq!(m.utility(0, &[0.0], 0.0).unwrap(), 0.0);
        let bid = GameModel::new(
            vec![AgentSpec::unit(0.0, 1.0)],
            SignalMap::decoupled(10.0),
            curve(),
            UtilityKind::AgenticBid,
            1.0,
            CostForm::Energy,
            Some(1.0),
        )
        .unwrap();
        assert_eq!(bid.utility(0, &[0.0], 0.7).unwrap(), 0.0);
        assert_eq!(bid.welfare(&[0.0]), 0.0);
    }

    #[test]
    fn yang_smith_matches_formula_chain() {
        let agent = AgentSpec { energy_c: 0.03, energy_w: 1.5, rel_v: 1.2, ..AgentSpec::unit(0.0, 1.0) };
        let m = GameModel::new(
            vec![agent],
            SignalMap::decoupled(10.0),
            curve(),
            UtilityKind::YangSmith,
            1.0,
            CostForm::Energy,
            None,
        )
        .unwrap();
        let rel = (-(2.2f64 / 5.0).powf(1.6)).exp();
        let expect = -0.03 * 0.5f64.powf(1.5) + (1.0 + rel.powf(1.2)).ln();
        assert_relative_eq!(m.utility(0, &[0.5], 0.0).unwrap(), expect, epsilon = 1e-14);
    }

    #[test]
    fn welfare_single_agent_at_kappa() {
        let agent = AgentSpec { cost_a: 0.0, cost_b: 0.0, ..AgentSpec::unit(0.0, 5.0) };
        let m = GameModel::new(
            vec![agent.clone()],
            SignalMap::decoupled(1.0),
            curve(),
            UtilityKind::Dsh,
            1.0,
            CostForm::Quadratic,
            None,
        )
        .unwrap();
        assert_relative_eq!(m.welfare(&[2.2]), 0.31326168751822, epsilon = 1e-12);
        let two = GameModel::new(
            vec![agent.clone(), agent],
            SignalMap::decoupled(1.0),
            curve(),
            UtilityKind::Dsh,
            1.0,
            CostForm::Quadratic,
            None,
        )
        .unwrap();
        assert_eq!(two.welfare(&[2.2, 2.2]), 2.0 * m.welfare(&[2.2]));
    }

    #[test]
    fn price_only_gradient_at_zero() {
        let m = supply_price_only(0.2, 0.1);
        assert_relative_eq!(m.pseudo_gradient(&[0.0], 0.0)[0], -0.8, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_profile_symmetric_gradient() {
        let sig = SignalMap::matrix(8.0, &[vec![0.0, 0.3], vec![0.3, 0.0]]);
        let m = GameModel::new(
            vec![AgentSpec { cost_a: 0.2, cost_b: 0.1, ..AgentSpec::unit(0.3, 1.5) }; 2],
            sig,
            curve(),
            UtilityKind::Dsh,
            1.0,
            CostForm::Quadratic,
            Some(1.5),
        )
        .unwrap();
        let f = m.pseudo_gradient(&[0.8, 0.8], 0.4);
        assert_eq!(f[0], f[1]);
    }

    #[test]
    fn welfare_gradient_matches_finite_difference() {
        let rows = vec![vec![0.0, 0.1, 0.2], vec![0.15, 0.0, 0.1], vec![0.05, 0.2, 0.0]];
        let m = GameModel::new(
            vec![AgentSpec { cost_a: 0.2, cost_b: 0.1, ..AgentSpec::unit(0.3, 1.5) }; 3],
            SignalMap::matrix(8.0, &rows),
            curve(),
            UtilityKind::Dsh,
            1.0,
            CostForm::Quadratic,
            None,
        )
        .unwrap();
        let p = [0.5, 0.9, 1.2];
        let g = m.welfare_gradient(&p);
        let h = 1e-6;
        for k in 0..3 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let fd = (m.welfare(&a) - m.welfare(&b)) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-7 * (1.0 + fd.abs()), "k={k}: {} vs {fd}", g[k]);
        }
    }

    #[test]
    fn subset_slices_coupling() {
        let rows = vec![vec![0.0, 0.1, 0.2], vec![0.15, 0.0, 0.1], vec![0.05, 0.2, 0.0]];
        let m = GameModel::new(
            vec![AgentSpec::unit(0.3, 1.5); 3],
            SignalMap::matrix(8.0, &rows),
            curve(),
            UtilityKind::Dsh,
            1.0,
            CostForm::Quadratic,
            None,
        )
        .unwrap();
        let s = m.subset(&[0, 2]).unwrap();
        assert_eq!(s.n(), 2);
        assert_relative_eq!(
            s.signal(&[1.0, 1.0], 0).unwrap(),
            8.0 / 1.2,
            epsilon = 1e-14
        );
        assert!(m.subset(&[5]).is_err());
    }
}
