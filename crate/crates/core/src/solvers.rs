//! Exact dynamic-programming oracles: stationary distributions, reward
//! rates, centered differential values and relative value iteration.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{induced_chain, is_communicating, InducedChain, Policy, TabularMdp};

/// Default tolerance for the oracle solvers.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 1_000_000;

/// Self-loop mixing weight applied inside relative value iteration so that
/// periodic chains (both Two Loop cycles have period 5) still contract.
const APERIODICITY_MIX: f64 = 0.5;

const RANK_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-9;

/// Ground truth for a fixed policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSolution {
    pub d: Vec<f64>,
    pub reward_rate: f64,
    /// Centered: `Σ d(s) v(s) = 0`.
    pub v: Vec<f64>,
    /// Centered action values, ragged per state, when requested.
    pub q: Option<Vec<Vec<f64>>>,
}

impl ChainSolution {
    /// State–action weights `d(s) π(a|s)`, flattened in pair order.
    pub fn pair_weights(&self, policy: &Policy) -> Vec<f64> {
        self.d
            .iter()
            .zip(policy.rows())
            .flat_map(|(&ds, row)| row.iter().map(move |&p| ds * p))
            .collect()
    }

    /// Action values flattened in pair order.
    pub fn q_flat(&self) -> Option<Vec<f64>> {
        self.q.as_ref().map(|q| q.iter().flatten().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalSolution {
    pub reward_rate_opt: f64,
    /// Centered under the greedy policy's stationary pair distribution.
    pub q_opt: Vec<Vec<f64>>,
    pub greedy_policy: Policy,
    pub greedy_actions: Vec<usize>,
    /// Solution of the greedy policy's chain (d, v, q).
    pub chain: ChainSolution,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RviOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub require_communicating: bool,
}

impl Default for RviOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_sweeps: DEFAULT_MAX_SWEEPS, require_communicating: true }
    }
}

fn to_matrix(p: &[Vec<f64>]) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| p[i][j])
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let scale = sv.iter().cloned().fold(1.0_f64, f64::max);
    sv.iter().filter(|&&x| x > RANK_TOL * scale).count()
}

/// Unique stationary distribution of a unichain row-stochastic matrix.
///
/// Solves `(Pᵀ − I) d = 0` with the last equation replaced by `Σ d = 1`.
/// Columns of `Pᵀ − I` sum to zero, so any single equation is redundant
/// and the replacement is well posed whenever the nullity is one.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    if n == 0 || p.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("transition matrix must be square and non-empty".into()));
    }
    let mut a = to_matrix(p).transpose() - DMatrix::<f64>::identity(n, n);
    let rank = numerical_rank(&a);
    if rank + 1 < n {
        return Err(Error::NotUnichain(n - rank));
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let d = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular stationary system".into()))?;
    let mut d: Vec<f64> = d.iter().map(|&x| if x < 0.0 && x > -1e-12 { 0.0 } else { x }).collect();
    if d.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::Numerical("stationary solve produced a negative mass".into()));
    }
    let total: f64 = d.iter().sum();
    d.iter_mut().for_each(|x| *x /= total);
    Ok(d)
}

pub fn reward_rate(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    let chain = induced_chain(mdp, policy)?;
    let d = stationary_distribution(&chain.p)?;
    Ok(dot(&d, &chain.r))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Centered differential state values of `policy`.
///
/// Stacks the `n` Bellman rows `(I − P) v = r − r(π) e` with the centering
/// row `dᵀ v = 0` and solves the overdetermined system in the
/// least-squares sense.
pub fn differential_values(mdp: &TabularMdp, policy: &Policy) -> Result<ChainSolution> {
    let chain = induced_chain(mdp, policy)?;
    solve_chain(&chain)
}

pub fn solve_chain(chain: &InducedChain) -> Result<ChainSolution> {
    let n = chain.n();
    let d = stationary_distribution(&chain.p)?;
    let g = dot(&d, &chain.r);
    let mut a = DMatrix::<f64>::zeros(n + 1, n);
    let mut b = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = if i == j { 1.0 } else { 0.0 } - chain.p[i][j];
        }
        b[i] = chain.r[i] - g;
    }
    for j in 0..n {
        a[(n, j)] = d[j];
    }
    let v = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let v: Vec<f64> = v.iter().copied().collect();

    let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let residual = bellman_residual(chain, g, &v);
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::Numerical(format!("Bellman residual {residual:e} after solve")));
    }
    Ok(ChainSolution { d, reward_rate: g, v, q: None })
}

/// `max_s |v(s) − (r(s) − g + Σ P(s,s') v(s'))|`.
pub fn bellman_residual(chain: &InducedChain, g: f64, v: &[f64]) -> f64 {
    (0..chain.n())
        .map(|s| {
            let next: f64 = dot(&chain.p[s], v);
            (v[s] - (chain.r[s] - g + next)).abs()
        })
        .fold(0.0, f64::max)
}

/// Centered differential action values of `policy`.
///
/// `q(s,a) = Σ p(s',r|s,a) (r − r(π) + v(s'))` with the centered `v`; then
/// `Σ d(s) π(a|s) q(s,a) = Σ d(s) v(s) = 0`.
pub fn differential_action_values(mdp: &TabularMdp, policy: &Policy) -> Result<ChainSolution> {
    let mut sol = differential_values(mdp, policy)?;
    let g = sol.reward_rate;
    let q = (0..mdp.n_states())
        .map(|s| {
            (0..mdp.n_actions(s))
                .map(|a| mdp.outcomes(s, a).iter().map(|o| o.prob * (o.reward - g + sol.v[o.next_state])).sum())
                .collect()
        })
        .collect();
    sol.q = Some(q);
    Ok(sol)
}

/// Residual of the optimality equation for action values:
/// `max |q(s,a) − Σ p (r − g + max_a' q(s',a'))|`.
pub fn optimality_residual(mdp: &TabularMdp, g: f64, q: &[Vec<f64>]) -> f64 {
    let v: Vec<f64> = q.iter().map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut worst: f64 = 0.0;
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions(s) {
            let target: f64 = mdp.outcomes(s, a).iter().map(|o| o.prob * (o.reward - g + v[o.next_state])).sum();
            worst = worst.max((q[s][a] - target).abs());
        }
    }
    worst
}

/// Optimal reward rate and centered optimal action values.
pub fn solve_optimal(mdp: &TabularMdp, tol: f64) -> Result<OptimalSolution> {
    solve_optimal_with(mdp, RviOptions { tol, ..Default::default() })
}

/// Relative value iteration on action values with reference entry (0, 0).
///
/// Each sweep computes `TQ − Q`; the span of that difference bounds the
/// error of its midpoint as an estimate of `r*`, so iteration stops once the
/// span falls below `tol` and the returned rate is within `tol / 2`. The
/// update is damped, `Q ← Q + τ (TQ − Q)`, which leaves the fixed points
/// unchanged and makes periodic MDPs converge.
pub fn solve_optimal_with(mdp: &TabularMdp, opts: RviOptions) -> Result<OptimalSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    if opts.require_communicating && !is_communicating(mdp) {
        return Err(Error::NotCommunicating);
    }
    let n_pairs = mdp.n_pairs();
    let n = mdp.n_states();
    let mut q = vec![0.0; n_pairs];
    let mut v = vec![0.0; n];
    let mut diff = vec![0.0; n_pairs];
    let mut estimate = None;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for s in 0..n {
            let off = mdp.pair_offset(s);
            v[s] = q[off..off + mdp.n_actions(s)].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in 0..n {
            for a in 0..mdp.n_actions(s) {
                let i = mdp.pair_index(s, a);
                let tq: f64 = mdp.outcomes(s, a).iter().map(|o| o.prob * (o.reward + v[o.next_state])).sum();
                diff[i] = tq - q[i];
                lo = lo.min(diff[i]);
                hi = hi.max(diff[i]);
            }
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Numerical("relative value iteration produced non-finite values".into()));
        }
        if hi - lo < opts.tol {
            estimate = Some(0.5 * (lo + hi));
            break;
        }
        for (qi, di) in q.iter_mut().zip(&diff) {
            *qi += APERIODICITY_MIX * di;
        }
        let reference = q[0];
        q.iter_mut().for_each(|x| *x -= reference);
    }
    let reward_rate_opt = estimate.ok_or(Error::IterationCap(opts.max_sweeps))?;

    let greedy_actions: Vec<usize> = (0..n)
        .map(|s| {
            let off = mdp.pair_offset(s);
            argmax_lowest(&q[off..off + mdp.n_actions(s)])
        })
        .collect();
    let greedy_policy = Policy::deterministic(mdp, &greedy_actions)?;
    let chain = differential_action_values(mdp, &greedy_policy)?;
    let q_opt = chain.q.clone().expect("action values requested");
    Ok(OptimalSolution { reward_rate_opt, q_opt, greedy_policy, greedy_actions, chain, sweeps })
}

fn argmax_lowest(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{build_two_loop, build_two_state_transient, TwoLoopVariant, LEFT, RIGHT};
    use crate::mdp::Outcome;

    const TWO_LOOP_D: [f64; 9] = [0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
    const TWO_LOOP_V: [f64; 9] = [-0.2, -1.4, -1.1, -0.8, -0.5, 0.6, 0.9, 1.2, 1.5];

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn always(mdp: &TabularMdp, a0: usize) -> Policy {
        let mut acts = vec![0; mdp.n_states()];
        acts[0] = a0;
        Policy::deterministic(mdp, &acts).unwrap()
    }

    #[test]
    fn stationary_small_chains() {
        assert_eq!(stationary_distribution(&[vec![1.0]]).unwrap(), vec![1.0]);
        let d = stationary_distribution(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(close(&d, &[0.5, 0.5], 1e-15));
        // periodic flip chain: power iteration would oscillate
        let d = stationary_distribution(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(close(&d, &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn stationary_rejects_multichain() {
        let p = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert!(matches!(stationary_distribution(&p), Err(Error::NotUnichain(3))));
        let p = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(stationary_distribution(&p), Err(Error::NotUnichain(2))));
    }

    #[test]
    fn two_loop_uniform_policy() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let pi = Policy::uniform(&m);
        let sol = differential_values(&m, &pi).unwrap();
        assert!(close(&sol.d, &TWO_LOOP_D, 1e-12));
        assert!((sol.reward_rate - 0.3).abs() < 1e-12);
        assert!(close(&sol.v, &TWO_LOOP_V, 1e-9), "{:?}", sol.v);
        assert!(dot(&sol.d, &sol.v).abs() < 1e-12);
    }

    #[test]
    fn two_loop_deterministic_rates() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        assert!((reward_rate(&m, &always(&m, LEFT)).unwrap() - 0.2).abs() < 1e-12);
        assert!((reward_rate(&m, &always(&m, RIGHT)).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn table_of_action_values_for_always_right() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let pi = always(&m, RIGHT);
        let sol = differential_action_values(&m, &pi).unwrap();
        let q = sol.q_flat().unwrap();
        let expected = [-1.8, -0.8, -2.4, -2.0, -1.6, -1.2, -0.4, 0.0, 0.4, 0.8];
        assert!(close(&q, &expected, 1e-9), "{q:?}");
        let w = sol.pair_weights(&pi);
        let expected_w = [0.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.2, 0.2, 0.2, 0.2];
        assert!(close(&w, &expected_w, 1e-12), "{w:?}");
        assert!(dot(&w, &q).abs() < 1e-12);
    }

    #[test]
    fn self_loop_zero_bias() {
        let m = TabularMdp::from_rows(vec![vec![vec![Outcome::new(1.0, 0, 3.0)]]]);
        let sol = differential_action_values(&m, &Policy::uniform(&m)).unwrap();
        assert_eq!(sol.reward_rate, 3.0);
        assert!(sol.v[0].abs() < 1e-15);
        assert!(sol.q.unwrap()[0][0].abs() < 1e-15);
    }

    #[test]
    fn reward_shift_changes_rate_only() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let pi = Policy::uniform(&m);
        let base = differential_values(&m, &pi).unwrap();
        let shifted = differential_values(&m.shift_rewards(1.75), &pi).unwrap();
        assert!((shifted.reward_rate - base.reward_rate - 1.75).abs() < 1e-12);
        assert!(close(&shifted.v, &base.v, 1e-9));
    }

    #[test]
    fn optimal_two_loop_family() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let sol = solve_optimal(&m, DEFAULT_TOL).unwrap();
        assert!((sol.reward_rate_opt - 0.4).abs() < 1e-10);
        assert_eq!(sol.greedy_actions[0], RIGHT);
        assert!(optimality_residual(&m, sol.reward_rate_opt, &sol.q_opt) < 1e-9);

        let big = solve_optimal(&build_two_loop(TwoLoopVariant::BigReward), DEFAULT_TOL).unwrap();
        assert!((big.reward_rate_opt - 2.0).abs() < 1e-10);
        assert_eq!(big.greedy_actions[0], RIGHT);
    }

    #[test]
    fn optimal_rejects_non_communicating() {
        let m = build_two_state_transient();
        assert!(matches!(solve_optimal(&m, DEFAULT_TOL), Err(Error::NotCommunicating)));
        let sol = solve_optimal_with(&m, RviOptions { require_communicating: false, ..Default::default() }).unwrap();
        assert!((sol.reward_rate_opt - 2.0).abs() < 1e-10);
        assert!(close(&sol.chain.d, &[0.0, 1.0], 1e-12));
    }

    #[test]
    fn transient_stationary_any_policy() {
        let m = build_two_state_transient();
        for probs in [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]] {
            let pi = Policy::new(&m, vec![probs.to_vec(), vec![1.0]]).unwrap();
            let chain = induced_chain(&m, &pi).unwrap();
            let d = stationary_distribution(&chain.p).unwrap();
            assert!(close(&d, &[0.0, 1.0], 1e-12));
        }
    }

    #[test]
    fn optimal_iteration_cap() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let r = solve_optimal_with(&m, RviOptions { max_sweeps: 3, ..Default::default() });
        assert!(matches!(r, Err(Error::IterationCap(3))));
    }
}
