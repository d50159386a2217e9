//! Quantized action sets, discrete best responses, and two-layer
//! discrete-plus-continuous composition.

use crate::benchmarks::centralized_proximal_from;
use crate::error::{Error, Result};
use crate::model::GameModel;

/// Per-agent grids `{l, l + delta, ..., u}`; the last gap may be shorter than `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedBox {
    delta: f64,
    grids: Vec<Vec<f64>>,
}

impl QuantizedBox {
    pub fn new(model: &GameModel, delta: f64) -> Result<Self> {
        Self::from_bounds(&model.lowers(), &model.uppers(), delta)
    }

    pub fn from_bounds(lowers: &[f64], uppers: &[f64], delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid("delta", "must be > 0"));
        }
        let grids = lowers
            .iter()
            .zip(uppers)
            .map(|(&l, &u)| {
                let mut g = Vec::new();
                let mut k = 0usize;
                loop {
                    let v = l + k as f64 * delta;
                    if v >= u - 1e-9 * delta {
                        break;
                    }
                    g.push(v);
                    k += 1;
                }
                g.push(u);
                g
            })
            .collect();
        Ok(Self { delta, grids })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grid(&self, i: usize) -> &[f64] {
        &self.grids[i]
    }

    pub fn len(&self) -> usize {
        self.grids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }

    fn nearest(&self, i: usize, q: f64) -> f64 {
        let g = &self.grids[i];
        let pos = g.partition_point(|v| *v < q);
        if pos == 0 {
            return g[0];
        }
        if pos == g.len() {
            return g[g.len() - 1];
        }
        let (lo, hi) = (g[pos - 1], g[pos]);
        if hi - q < (q - lo) - 1e-9 * self.delta {
            hi
        } else {
            lo
        }
    }
}

/// Componentwise nearest grid point, exact midpoints rounding down.
pub fn quantize(p: &[f64], qbox: &QuantizedBox) -> Vec<f64> {
    p.iter().enumerate().map(|(i, q)| qbox.nearest(i, *q)).collect()
}

/// Exhaustive argmax of agent `i`'s payoff on its grid; ties go to the smaller action.
pub fn discrete_best_response(model: &GameModel, i: usize, p: &[f64], z: f64, qbox: &QuantizedBox) -> Result<f64> {
    if i >= model.n() {
        return Err(Error::IndexOutOfRange { index: i, len: model.n() });
    }
    let d = model.signal_map().denominator(p, i);
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &q in qbox.grid(i) {
        let u = model.own_payoff(i, q, d, z).0;
        if best.1.is_nan() || u > best.0 + 1e-12 * (1.0 + best.0.abs()) {
            best = (u, q);
        }
    }
    Ok(best.1)
}

/// Round-robin discrete best responses from the quantized midpoint until no agent moves.
pub fn discrete_equilibrium(model: &GameModel, z: f64, qbox: &QuantizedBox, max_rounds: usize) -> Result<Vec<f64>> {
    let mut p = quantize(&model.midpoint(), qbox);
    for _ in 0..max_rounds {
        let mut moved = false;
        for i in 0..model.n() {
            let br = discrete_best_response(model, i, &p, z, qbox)?;
            if br != p[i] {
                p[i] = br;
                moved = true;
            }
        }
        if !moved {
            return Ok(p);
        }
    }
    Err(Error::NoDiscreteFixedPoint { rounds: max_rounds })
}

/// Selection `a` with `|a| <= k` scored by `A(a) = sum r_i a_i - phi(|a|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerProblem {
    rewards: Vec<f64>,
    /// `phi(s)` for `s = 0..=n`.
    phi: Vec<f64>,
    k: usize,
}

impl TwoLayerProblem {
    pub fn new(rewards: Vec<f64>, phi: Vec<f64>, k: usize) -> Result<Self> {
        let n = rewards.len();
        if phi.len() != n + 1 {
            return Err(Error::invalid("phi", format!("needs {} values", n + 1)));
        }
        if rewards.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(Error::invalid("rewards", "must be finite"));
        }
        for s in 1..=n {
            if phi[s] < phi[s - 1] {
                return Err(Error::invalid("phi", "must be nondecreasing"));
            }
            if s >= 2 && phi[s] - phi[s - 1] < phi[s - 1] - phi[s - 2] - 1e-12 {
                return Err(Error::invalid("phi", "must be convex"));
            }
        }
        if k > n {
            return Err(Error::invalid("k", "cannot exceed the number of items"));
        }
        Ok(Self { rewards, phi, k })
    }

    /// `phi(s) = c s^2`.
    pub fn quadratic(rewards: Vec<f64>, c: f64, k: usize) -> Result<Self> {
        let phi = (0..=rewards.len()).map(|s| c * (s * s) as f64).collect();
        Self::new(rewards, phi, k)
    }

    pub fn n(&self) -> usize {
        self.rewards.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn score(&self, selected: &[usize]) -> f64 {
        selected.iter().map(|&i| self.rewards[i]).sum::<f64>() - self.phi[selected.len()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerResult {
    pub selected: Vec<usize>,
    /// Continuous actions of the selected agents, in `selected` order.
    pub p: Vec<f64>,
    pub value: f64,
    /// Objective after every block update.
    pub history: Vec<f64>,
}

fn continuous_value(model: Option<&GameModel>, selected: &[usize], p: &[f64]) -> Result<f64> {
    match model {
        None => Ok(0.0),
        Some(m) => {
            if selected.is_empty() {
                return Ok(0.0);
            }
            let sub = m.subset(selected)?;
            let ps: Vec<f64> = selected.iter().map(|&i| p[i]).collect();
            Ok(sub.welfare(&ps))
        }
    }
}

fn neighbours(selected: &[usize], n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let inside = |i: usize| selected.contains(&i);
    if selected.len() < k {
        for i in (0..n).filter(|&i| !inside(i)) {
            let mut s = selected.to_vec();
            s.push(i);
            s.sort_unstable();
            out.push(s);
        }
    }
    for &j in selected {
        let s: Vec<usize> = selected.iter().copied().filter(|&x| x != j).collect();
        out.push(s);
        for i in (0..n).filter(|&i| !inside(i)) {
            let mut s: Vec<usize> = selected.iter().copied().filter(|&x| x != j).collect();
            s.push(i);
            s.sort_unstable();
            out.push(s);
        }
    }
    out
}

/// Block-coordinate ascent on `A(a) + W_a(p)`: steepest add/drop/swap moves on
/// the selection, then continuous welfare maximization over the selected agents.
pub fn two_layer_optimize(problem: &TwoLayerProblem, model: Option<&GameModel>) -> Result<TwoLayerResult> {
    if let Some(m) = model {
        if m.n() != problem.n() {
            return Err(Error::invalid("model", "population must match the item count"));
        }
    }
    let n = problem.n();
    let mut p = model.map_or_else(|| vec![0.0; n], GameModel::midpoint);
    let mut selected: Vec<usize> = Vec::new();
    let mut value = problem.score(&selected) + continuous_value(model, &selected, &p)?;
    let mut history = vec![value];
    loop {
        let mut improved = false;
        // Discrete block.
        let mut best = (value, None);
        for cand in neighbours(&selected, n, problem.k) {
            let v = problem.score(&cand) + continuous_value(model, &cand, &p)?;
            if v > best.0 + 1e-12 {
                best = (v, Some(cand));
            }
        }
        if let (v, Some(cand)) = best {
            selected = cand;
            value = v;
            improved = true;
        }
        history.push(value);
        // Continuous block.
        if let Some(m) = model {
            if !selected.is_empty() {
                let sub = m.subset(&selected)?;
                let p0: Vec<f64> = selected.iter().map(|&i| p[i]).collect();
                let r = centralized_proximal_from(&sub, &p0, 5000, 1e-10);
                let v = problem.score(&selected) + r.w_star;
                if v > value + 1e-12 {
                    for (slot, &i) in selected.iter().enumerate() {
                        p[i] = r.p_star[slot];
                    }
                    value = v;
                    improved = true;
                }
            }
            history.push(value);
        }
        if !improved {
            break;
        }
    }
    let ps = selected.iter().map(|&i| p[i]).collect();
    Ok(TwoLayerResult { selected, p: ps, value, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ResponseCurve;
    use crate::model::{AgentSpec, CostForm, Proxy, SignalMap, UtilityKind};

    /// Single agent with own payoff `(1 - a) p - b p^2`.
    fn quadratic_agent(a: f64, b: f64) -> GameModel {
        let agent = AgentSpec { cost_a: a, cost_b: b, ..AgentSpec::unit(0.0, 1.0) };
        GameModel::new(
            vec![agent],
            SignalMap::decoupled(1.0),
            ResponseCurve::new(2.2, 1.6).unwrap(),
            UtilityKind::PriceOnly { proxy: Proxy::Signal, linearized: true, uses_index: false },
            1.0,
            CostForm::Quadratic,
            None,
        )
        .unwrap()
    }

    fn unit_box(delta: f64) -> QuantizedBox {
        QuantizedBox::from_bounds(&[0.0], &[1.0], delta).unwrap()
    }

    #[test]
    fn quantize_nearest_and_ties() {
        let q = unit_box(0.1);
        assert!((quantize(&[0.234], &q)[0] - 0.2).abs() < 1e-12);
        assert!((quantize(&[0.25], &q)[0] - 0.2).abs() < 1e-12);
        let on = quantize(&[0.25], &q);
        assert_eq!(quantize(&on, &q), on);
        assert_eq!(q.grid(0).len(), 11);
    }

    #[test]
    fn grid_keeps_both_endpoints() {
        let q = QuantizedBox::from_bounds(&[0.3], &[1.25], 0.2).unwrap();
        let g = q.grid(0);
        assert_eq!(g[0], 0.3);
        assert_eq!(*g.last().unwrap(), 1.25);
        assert!(g.windows(2).all(|w| w[1] - w[0] <= 0.2 + 1e-12));
    }

    #[test]
    fn best_response_on_grid() {
        // (1 - 0.34) p - p^2 peaks at 0.33.
        let m = quadratic_agent(0.34, 1.0);
        let br = discrete_best_response(&m, 0, &[0.5], 0.0, &unit_box(0.1)).unwrap();
        assert!((br - 0.3).abs() < 1e-12, "{br}");
        // Peak at 0.35: u(0.3) = u(0.4).
        let tie = quadratic_agent(0.3, 1.0);
        let br = discrete_best_response(&tie, 0, &[0.5], 0.0, &unit_box(0.1)).unwrap();
        assert!((br - 0.3).abs() < 1e-12, "tie {br}");
        let single = QuantizedBox::from_bounds(&[0.4], &[0.4 + 1e-12], 1.0).unwrap();
        assert_eq!(single.grid(0).len(), 1);
    }

    #[test]
    fn two_layer_pure_discrete() {
        let prob = TwoLayerProblem::quadratic(vec![3.0, 1.0, 2.0, 0.5], 0.5, 2).unwrap();
        let r = two_layer_optimize(&prob, None).unwrap();
        assert_eq!(r.selected, vec![0, 2]);
        assert!((r.value - 3.0).abs() < 1e-12);
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn two_layer_empty_budget() {
        let prob = TwoLayerProblem::quadratic(vec![3.0, 1.0], 0.5, 0).unwrap();
        let r = two_layer_optimize(&prob, None).unwrap();
        assert!(r.selected.is_empty() && r.p.is_empty());
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rejects_concave_phi() {
        assert!(TwoLayerProblem::new(vec![1.0, 1.0], vec![0.0, 2.0, 3.0], 1).is_err());
        assert!(TwoLayerProblem::new(vec![1.0], vec![0.0, -1.0], 1).is_err());
    }
}
