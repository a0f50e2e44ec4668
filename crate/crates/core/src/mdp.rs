//! Finite MDPs with ragged action sets, stochastic policies, sampling and
//! the Markov chain a policy induces.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums of transition lists and policies.
pub const PROB_TOL: f64 = 1e-12;

/// The generator every stochastic operation takes explicitly.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// One outcome of taking an action: probability, next state, reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub prob: f64,
    pub next_state: usize,
    pub reward: f64,
}

impl Outcome {
    pub fn new(prob: f64, next_state: usize, reward: f64) -> Self {
        Self { prob, next_state, reward }
    }
}

/// A single experienced (or simulated) step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

impl Transition {
    pub fn new(state: usize, action: usize, reward: f64, next_state: usize) -> Self {
        Self { state, action, reward, next_state }
    }
}

/// A finite MDP stored as sparse outcome lists per state–action pair.
///
/// Pairs are laid out state-major: pair index of `(s, a)` is
/// `pair_offset(s) + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    actions_per_state: Vec<usize>,
    offsets: Vec<usize>,
    outcomes: Vec<Vec<Outcome>>,
}

impl TabularMdp {
    /// Builds an MDP from per-state lists of per-action outcome lists.
    ///
    /// Construction only fixes the shape; call [`validate_mdp`] (or
    /// [`TabularMdp::validated`]) to check the probabilistic invariants.
    pub fn from_rows(rows: Vec<Vec<Vec<Outcome>>>) -> Self {
        let actions_per_state: Vec<usize> = rows.iter().map(Vec::len).collect();
        let offsets = offsets_for(&actions_per_state);
        let outcomes = rows.into_iter().flatten().collect();
        Self { actions_per_state, offsets, outcomes }
    }

    /// Like [`TabularMdp::from_rows`] but rejects MDPs with any violation.
    pub fn validated(rows: Vec<Vec<Vec<Outcome>>>) -> Result<Self> {
        let mdp = Self::from_rows(rows);
        let report = validate_mdp(&mdp);
        if report.is_valid() {
            Ok(mdp)
        } else {
            Err(Error::InvalidMdp(report.to_string()))
        }
    }

    pub fn n_states(&self) -> usize {
        self.actions_per_state.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.outcomes.len()
    }

    pub fn n_actions(&self, s: usize) -> usize {
        self.actions_per_state[s]
    }

    pub fn actions_per_state(&self) -> &[usize] {
        &self.actions_per_state
    }

    pub fn pair_offset(&self, s: usize) -> usize {
        self.offsets[s]
    }

    pub fn pair_index(&self, s: usize, a: usize) -> usize {
        self.offsets[s] + a
    }

    /// Inverse of [`TabularMdp::pair_index`].
    pub fn pair_of(&self, idx: usize) -> (usize, usize) {
        let s = match self.offsets.binary_search(&idx) {
            Ok(mut s) => {
                // skip states with zero actions sharing the same offset
                while s + 1 < self.offsets.len() && self.offsets[s + 1] == idx {
                    s += 1;
                }
                s
            }
            Err(s) => s - 1,
        };
        (s, idx - self.offsets[s])
    }

    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[self.pair_index(s, a)]
    }

    pub fn check_pair(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.n_states() {
            return Err(Error::Index(format!("state {s} out of range (n_states = {})", self.n_states())));
        }
        if a >= self.actions_per_state[s] {
            return Err(Error::Index(format!(
                "action {a} out of range for state {s} ({} actions)",
                self.actions_per_state[s]
            )));
        }
        Ok(())
    }

    /// Expected one-step reward of `(s, a)`.
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        self.outcomes(s, a).iter().map(|o| o.prob * o.reward).sum()
    }

    /// Rescales every outcome list to sum to one. Used after binomial
    /// expansions to absorb rounding.
    pub fn normalize_rows(&mut self) {
        for row in &mut self.outcomes {
            let total: f64 = row.iter().map(|o| o.prob).sum();
            if total > 0.0 {
                for o in row.iter_mut() {
                    o.prob /= total;
                }
            }
        }
    }

    /// Same structure with every reward shifted by `c`.
    pub fn shift_rewards(&self, c: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.outcomes {
            for o in row.iter_mut() {
                o.reward += c;
            }
        }
        out
    }
}

pub(crate) fn offsets_for(counts: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    counts
        .iter()
        .map(|&n| {
            let off = acc;
            acc += n;
            off
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoActions { state: usize },
    ProbabilitySum { state: usize, action: usize, sum: f64 },
    NegativeProbability { state: usize, action: usize, prob: f64 },
    IndexOutOfRange { state: usize, action: usize, next_state: usize },
    NonFiniteReward { state: usize, action: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoActions { state } => write!(f, "state {state}: no actions"),
            Violation::ProbabilitySum { state, action, sum } => {
                write!(f, "({state},{action}): probability sum {sum} != 1")
            }
            Violation::NegativeProbability { state, action, prob } => {
                write!(f, "({state},{action}): negative probability {prob}")
            }
            Violation::IndexOutOfRange { state, action, next_state } => {
                write!(f, "({state},{action}): next state {next_state} index out of range")
            }
            Violation::NonFiniteReward { state, action } => {
                write!(f, "({state},{action}): non-finite reward")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Reports every invariant violation of `mdp`; an empty report means valid.
pub fn validate_mdp(mdp: &TabularMdp) -> ValidationReport {
    let mut violations = Vec::new();
    let n = mdp.n_states();
    for s in 0..n {
        if mdp.n_actions(s) == 0 {
            violations.push(Violation::NoActions { state: s });
        }
        for a in 0..mdp.n_actions(s) {
            let row = mdp.outcomes(s, a);
            let mut sum = 0.0;
            for o in row {
                if o.prob < 0.0 {
                    violations.push(Violation::NegativeProbability { state: s, action: a, prob: o.prob });
                }
                if o.next_state >= n {
                    violations.push(Violation::IndexOutOfRange { state: s, action: a, next_state: o.next_state });
                }
                if !o.reward.is_finite() {
                    violations.push(Violation::NonFiniteReward { state: s, action: a });
                }
                sum += o.prob;
            }
            if !((sum - 1.0).abs() <= PROB_TOL) {
                violations.push(Violation::ProbabilitySum { state: s, action: a, sum });
            }
        }
    }
    ValidationReport { violations }
}

/// Draws `(next_state, reward)` for `(s, a)`.
pub fn sample_transition<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    s: usize,
    a: usize,
    rng: &mut R,
) -> Result<(usize, f64)> {
    mdp.check_pair(s, a)?;
    Ok(sample_unchecked(mdp.outcomes(s, a), rng))
}

pub(crate) fn sample_unchecked<R: Rng + ?Sized>(row: &[Outcome], rng: &mut R) -> (usize, f64) {
    if let [only] = row {
        return (only.next_state, only.reward);
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for o in row {
        acc += o.prob;
        if u < acc {
            return (o.next_state, o.reward);
        }
    }
    // rounding left u above the cumulative total: take the last positive outcome
    let last = row.iter().rev().find(|o| o.prob > 0.0).unwrap_or(&row[row.len() - 1]);
    (last.next_state, last.reward)
}

/// A stochastic stationary policy: one probability row per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    probs: Vec<Vec<f64>>,
}

impl Policy {
    /// Checks each row against the MDP's action counts.
    pub fn new(mdp: &TabularMdp, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != mdp.n_states() {
            return Err(Error::Shape(format!(
                "policy has {} rows, MDP has {} states",
                probs.len(),
                mdp.n_states()
            )));
        }
        for (s, row) in probs.iter().enumerate() {
            if row.len() != mdp.n_actions(s) {
                return Err(Error::Shape(format!(
                    "policy row {s} has {} entries, state has {} actions",
                    row.len(),
                    mdp.n_actions(s)
                )));
            }
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InvalidPolicy(format!("row {s} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidPolicy(format!("row {s} sums to {sum}")));
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(mdp: &TabularMdp) -> Self {
        let probs = mdp
            .actions_per_state()
            .iter()
            .map(|&n| vec![1.0 / n as f64; n])
            .collect();
        Self { probs }
    }

    /// Deterministic policy from one action per state.
    pub fn deterministic(mdp: &TabularMdp, actions: &[usize]) -> Result<Self> {
        if actions.len() != mdp.n_states() {
            return Err(Error::Shape(format!(
                "{} actions given for {} states",
                actions.len(),
                mdp.n_states()
            )));
        }
        let mut probs = Vec::with_capacity(actions.len());
        for (s, &a) in actions.iter().enumerate() {
            mdp.check_pair(s, a)?;
            let mut row = vec![0.0; mdp.n_actions(s)];
            row[a] = 1.0;
            probs.push(row);
        }
        Ok(Self { probs })
    }

    /// Mixes a deterministic choice with the uniform distribution:
    /// probability `epsilon` spread uniformly, the rest on `actions[s]`.
    pub fn epsilon_soft(mdp: &TabularMdp, actions: &[usize], epsilon: f64) -> Result<Self> {
        let det = Self::deterministic(mdp, actions)?;
        let probs = det
            .probs
            .iter()
            .map(|row| {
                let n = row.len() as f64;
                row.iter().map(|&p| (1.0 - epsilon) * p + epsilon / n).collect()
            })
            .collect();
        Ok(Self { probs })
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s]
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s][a]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn is_compatible(&self, mdp: &TabularMdp) -> bool {
        self.probs.len() == mdp.n_states()
            && self.probs.iter().enumerate().all(|(s, r)| r.len() == mdp.n_actions(s))
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        let row = &self.probs[s];
        if row.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
    }
}

/// Dense state-to-state matrix and expected reward vector induced by a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    /// Row-major `n × n`.
    pub p: Vec<Vec<f64>>,
    pub r: Vec<f64>,
}

impl InducedChain {
    pub fn n(&self) -> usize {
        self.r.len()
    }
}

pub fn induced_chain(mdp: &TabularMdp, policy: &Policy) -> Result<InducedChain> {
    if !policy.is_compatible(mdp) {
        return Err(Error::Shape("policy shape does not match the MDP".into()));
    }
    let n = mdp.n_states();
    let mut p = vec![vec![0.0; n]; n];
    let mut r = vec![0.0; n];
    for s in 0..n {
        for a in 0..mdp.n_actions(s) {
            let pa = policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for o in mdp.outcomes(s, a) {
                p[s][o.next_state] += pa * o.prob;
                r[s] += pa * o.prob * o.reward;
            }
        }
    }
    Ok(InducedChain { p, r })
}

/// True iff the union reachability graph over all actions is strongly connected.
pub fn is_communicating(mdp: &TabularMdp) -> bool {
    let n = mdp.n_states();
    if n == 0 {
        return false;
    }
    let mut fwd = vec![Vec::new(); n];
    let mut rev = vec![Vec::new(); n];
    for s in 0..n {
        for a in 0..mdp.n_actions(s) {
            for o in mdp.outcomes(s, a) {
                if o.prob > 0.0 {
                    fwd[s].push(o.next_state);
                    rev[o.next_state].push(s);
                }
            }
        }
    }
    reaches_all(&fwd) && reaches_all(&rev)
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(s) = stack.pop() {
        for &t in &adj[s] {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// How a step size is produced at each update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant { alpha: f64 },
    /// `alpha · factor^t` with `t` the number of updates already made.
    ExpDecay { alpha: f64, factor: f64 },
    /// `alpha / n^exponent` with `n` the visit count of the updated entry.
    PerPairCount { alpha: f64, exponent: f64 },
}

impl ScheduleKind {
    pub fn initial(&self) -> f64 {
        match *self {
            ScheduleKind::Constant { alpha }
            | ScheduleKind::ExpDecay { alpha, .. }
            | ScheduleKind::PerPairCount { alpha, .. } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScheduleKind::Constant { alpha } => alpha > 0.0 && alpha.is_finite(),
            ScheduleKind::ExpDecay { alpha, factor } => alpha > 0.0 && factor > 0.0 && factor <= 1.0,
            ScheduleKind::PerPairCount { alpha, exponent } => alpha > 0.0 && exponent > 0.0 && exponent <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid step-size schedule {self:?}")))
        }
    }
}

/// Step-size sequence with the bookkeeping its kind needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizeSchedule {
    kind: ScheduleKind,
    current: f64,
    counts: Vec<u64>,
}

impl StepSizeSchedule {
    /// `n_keys` is the number of entries that may be counted separately
    /// (pairs for action values, states for state values).
    pub fn new(kind: ScheduleKind, n_keys: usize) -> Self {
        let counts = match kind {
            ScheduleKind::PerPairCount { .. } => vec![0; n_keys],
            _ => Vec::new(),
        };
        Self { kind, current: kind.initial(), counts }
    }

    pub fn constant(alpha: f64) -> Self {
        Self::new(ScheduleKind::Constant { alpha }, 0)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Step size for an update of entry `key`; advances the schedule.
    pub fn next(&mut self, key: usize) -> f64 {
        match self.kind {
            ScheduleKind::Constant { alpha } => alpha,
            ScheduleKind::ExpDecay { factor, .. } => {
                let a = self.current;
                self.current *= factor;
                a
            }
            ScheduleKind::PerPairCount { alpha, exponent } => {
                let c = &mut self.counts[key];
                *c += 1;
                if exponent == 1.0 {
                    alpha / *c as f64
                } else {
                    alpha / (*c as f64).powf(exponent)
                }
            }
        }
    }

    pub fn visits(&self, key: usize) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{build_two_loop, build_two_state_transient, TwoLoopVariant};

    fn self_loop(reward: f64) -> TabularMdp {
        TabularMdp::from_rows(vec![vec![vec![Outcome::new(1.0, 0, reward)]]])
    }

    #[test]
    fn validation_flags_bad_rows() {
        let good = build_two_loop(TwoLoopVariant::Standard);
        assert!(validate_mdp(&good).is_valid());

        let short = TabularMdp::from_rows(vec![vec![vec![Outcome::new(0.9, 0, 0.0)]]]);
        let report = validate_mdp(&short);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::ProbabilitySum { .. }));

        let oob = TabularMdp::from_rows(vec![vec![vec![Outcome::new(1.0, 1, 0.0)]]]);
        let report = validate_mdp(&oob);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::IndexOutOfRange { next_state: 1, .. }));
        assert!(report.to_string().contains("index out of range"));
    }

    #[test]
    fn validation_flags_empty_state_and_nan_reward() {
        let m = TabularMdp::from_rows(vec![vec![vec![Outcome::new(1.0, 0, f64::NAN)]], vec![]]);
        let report = validate_mdp(&m);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::NoActions { state: 1 })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::NonFiniteReward { .. })));
    }

    #[test]
    fn pair_layout_roundtrip() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        assert_eq!(m.n_pairs(), 10);
        for idx in 0..m.n_pairs() {
            let (s, a) = m.pair_of(idx);
            assert_eq!(m.pair_index(s, a), idx);
        }
        assert_eq!(m.pair_of(1), (0, 1));
        assert_eq!(m.pair_of(2), (1, 0));
    }

    #[test]
    fn deterministic_samples() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let mut rng = seeded_rng(1);
        for _ in 0..100 {
            assert_eq!(sample_transition(&m, 8, 0, &mut rng).unwrap(), (0, 2.0));
        }
        let t = build_two_state_transient();
        for _ in 0..100 {
            assert_eq!(sample_transition(&t, 1, 0, &mut rng).unwrap(), (1, 2.0));
        }
        assert!(matches!(sample_transition(&m, 1, 1, &mut rng), Err(Error::Index(_))));
        assert!(matches!(sample_transition(&m, 9, 0, &mut rng), Err(Error::Index(_))));
    }

    #[test]
    fn transient_branch_frequency() {
        // 0.1 branch; sd = sqrt(0.09/1e6) = 3e-4, so 0.003 is a 10-sigma band
        let t = build_two_state_transient();
        let mut rng = seeded_rng(7);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| sample_transition(&t, 0, 0, &mut rng).unwrap().0 == 1)
            .count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.1).abs() < 0.003, "{frac}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let t = build_two_state_transient();
        let draw = |seed| {
            let mut rng = seeded_rng(seed);
            (0..50).map(|_| sample_transition(&t, 0, 0, &mut rng).unwrap().0).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn induced_chain_two_loop_uniform() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let chain = induced_chain(&m, &Policy::uniform(&m)).unwrap();
        assert_eq!(chain.r[0], 0.5);
        assert_eq!(chain.r[8], 2.0);
        for s in 1..8 {
            assert_eq!(chain.r[s], 0.0);
        }
        assert_eq!(chain.p[0][1], 0.5);
        assert_eq!(chain.p[0][5], 0.5);
        for row in &chain.p {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < PROB_TOL);
        }
    }

    #[test]
    fn induced_chain_identity() {
        let m = self_loop(3.0);
        let chain = induced_chain(&m, &Policy::uniform(&m)).unwrap();
        assert_eq!(chain.p, vec![vec![1.0]]);
        assert_eq!(chain.r, vec![3.0]);
    }

    #[test]
    fn induced_chain_shape_mismatch() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let other = self_loop(1.0);
        assert!(matches!(induced_chain(&m, &Policy::uniform(&other)), Err(Error::Shape(_))));
    }

    #[test]
    fn communicating() {
        assert!(is_communicating(&build_two_loop(TwoLoopVariant::Standard)));
        assert!(!is_communicating(&build_two_state_transient()));
        assert!(is_communicating(&self_loop(0.0)));
    }

    #[test]
    fn policy_validation() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let mut rows = Policy::uniform(&m).rows().to_vec();
        rows[0] = vec![0.7, 0.2];
        assert!(matches!(Policy::new(&m, rows.clone()), Err(Error::InvalidPolicy(_))));
        rows[0] = vec![1.0];
        assert!(matches!(Policy::new(&m, rows), Err(Error::Shape(_))));
        let soft = Policy::epsilon_soft(&m, &[0; 9], 0.1).unwrap();
        assert!((soft.prob(0, 0) - 0.95).abs() < 1e-15);
        assert_eq!(soft.prob(3, 0), 1.0);
    }

    #[test]
    fn per_pair_count_schedule() {
        let mut sched = StepSizeSchedule::new(ScheduleKind::PerPairCount { alpha: 1.0, exponent: 1.0 }, 3);
        let seq: Vec<f64> = (0..5).map(|_| sched.next(1)).collect();
        assert_eq!(seq, vec![1.0, 0.5, 1.0 / 3.0, 0.25, 0.2]);
        assert_eq!(sched.next(0), 1.0);
        assert_eq!(sched.visits(1), 5);
    }

    #[test]
    fn per_pair_count_harmonic_partial_sums() {
        // Σ 1/n grows like ln n (unbounded), Σ 1/n² stays below π²/6
        let mut sched = StepSizeSchedule::new(ScheduleKind::PerPairCount { alpha: 1.0, exponent: 1.0 }, 1);
        let (mut s1, mut s2, mut prev) = (0.0, 0.0, f64::INFINITY);
        for _ in 0..100_000 {
            let a = sched.next(0);
            assert!(a > 0.0 && a <= prev);
            prev = a;
            s1 += a;
            s2 += a * a;
        }
        assert!(s1 > (100_000f64).ln());
        assert!(s2 < std::f64::consts::PI.powi(2) / 6.0);
    }

    #[test]
    fn exp_decay_schedule() {
        let mut sched = StepSizeSchedule::new(ScheduleKind::ExpDecay { alpha: 0.2, factor: 0.5 }, 0);
        assert_eq!(sched.next(0), 0.2);
        assert_eq!(sched.next(5), 0.1);
        assert_eq!(sched.next(2), 0.05);
        assert!(ScheduleKind::ExpDecay { alpha: 0.2, factor: 1.5 }.validate().is_err());
    }
}
