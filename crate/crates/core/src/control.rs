//! Tabular control learners: Differential Q-learning, RVI Q-learning and
//! Centered Differential Q-learning, plus greedy / ε-greedy selection.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{offsets_for, StepSizeSchedule, TabularMdp, Transition};

/// Ragged action-value table, flattened in pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    counts: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(mdp: &TabularMdp) -> Self {
        Self::filled(mdp.actions_per_state(), 0.0)
    }

    pub fn filled(actions_per_state: &[usize], value: f64) -> Self {
        let offsets = offsets_for(actions_per_state);
        let total = actions_per_state.iter().sum();
        Self { counts: actions_per_state.to_vec(), offsets, values: vec![value; total] }
    }

    pub fn from_flat(actions_per_state: &[usize], values: Vec<f64>) -> Result<Self> {
        let total: usize = actions_per_state.iter().sum();
        if values.len() != total {
            return Err(Error::Shape(format!("{} values for {total} pairs", values.len())));
        }
        Ok(Self { counts: actions_per_state.to_vec(), offsets: offsets_for(actions_per_state), values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let counts: Vec<usize> = rows.iter().map(Vec::len).collect();
        Self { offsets: offsets_for(&counts), counts, values: rows.iter().flatten().copied().collect() }
    }

    pub fn n_states(&self) -> usize {
        self.counts.len()
    }

    pub fn n_actions(&self, s: usize) -> usize {
        self.counts[s]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, s: usize, a: usize) -> usize {
        self.offsets[s] + a
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[self.offsets[s] + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        let i = self.index(s, a);
        self.values[i] = value;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let off = self.offsets[s];
        &self.values[off..off + self.counts[s]]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn max_value(&self, s: usize) -> f64 {
        self.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// `Q − c·e`.
    pub fn shifted(&self, c: f64) -> Vec<f64> {
        self.values.iter().map(|x| x - c).collect()
    }
}

/// Argmax over a row with ties broken by the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    argmax_within(row, 0.0)
}

/// First index whose value is within `tie_eps` of the row maximum.
pub fn argmax_within(row: &[f64], tie_eps: f64) -> usize {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    row.iter().position(|&x| x >= max - tie_eps).unwrap_or(0)
}

pub fn greedy_action(q: &QTable, s: usize) -> usize {
    argmax(q.row(s))
}

/// Uniform over the actions of `s` with probability `epsilon`, otherwise
/// greedy. Single-action states consume no randomness.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &QTable, s: usize, epsilon: f64, rng: &mut R) -> usize {
    let n = q.n_actions(s);
    if n == 1 {
        return 0;
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..n)
    } else {
        greedy_action(q, s)
    }
}

/// Scalar summary of a Q table used by RVI Q-learning in place of a
/// reward-rate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceFunction {
    SinglePair { state: usize, action: usize },
    MeanAll,
    MaxAll,
}

impl ReferenceFunction {
    pub fn check(&self, q: &QTable) -> Result<()> {
        if let ReferenceFunction::SinglePair { state, action } = *self {
            if state >= q.n_states() || action >= q.n_actions(state) {
                return Err(Error::Index(format!("reference pair ({state},{action}) out of range")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ReferenceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceFunction::SinglePair { state, action } => write!(f, "pair:{state}-{action}"),
            ReferenceFunction::MeanAll => f.write_str("mean"),
            ReferenceFunction::MaxAll => f.write_str("max"),
        }
    }
}

impl FromStr for ReferenceFunction {
    type Err = Error;

    /// `mean`, `max`, or `pair:S-A`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" | "mean_all" => Ok(ReferenceFunction::MeanAll),
            "max" | "max_all" => Ok(ReferenceFunction::MaxAll),
            other => {
                let body = other
                    .strip_prefix("pair:")
                    .ok_or_else(|| Error::Config(format!("unknown reference function '{other}'")))?;
                let (st, ac) = body
                    .split_once('-')
                    .ok_or_else(|| Error::Config(format!("reference pair must be 'pair:S-A', got '{other}'")))?;
                let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| Error::Config(format!("{other}: {e}")));
                Ok(ReferenceFunction::SinglePair { state: parse(st)?, action: parse(ac)? })
            }
        }
    }
}

pub fn reference_value(f: &ReferenceFunction, q: &QTable) -> f64 {
    match *f {
        ReferenceFunction::SinglePair { state, action } => q.get(state, action),
        ReferenceFunction::MeanAll => q.mean(),
        ReferenceFunction::MaxAll => q.as_slice().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// What the experiment harness needs from a control learner.
pub trait ControlLearner {
    fn update(&mut self, tr: &Transition);
    fn q(&self) -> &QTable;
    /// R̄ for the differential methods, f(Q) for RVI.
    fn reward_rate_estimate(&self) -> f64;
    /// Offset-corrected values, for learners that estimate the offset.
    fn centered(&self) -> Option<Vec<f64>> {
        None
    }
    fn diverged(&self) -> bool;
}

/// Differential Q-learning.
#[derive(Debug, Clone)]
pub struct DiffQ {
    pub q: QTable,
    pub rbar: f64,
    pub eta: f64,
    alpha: StepSizeSchedule,
    /// `η ΣQ₀ − R̄₀`.
    offset_const: f64,
    diverged: bool,
}

impl DiffQ {
    pub fn new(q0: QTable, rbar0: f64, eta: f64, alpha: StepSizeSchedule) -> Self {
        let offset_const = eta * q0.sum() - rbar0;
        Self { q: q0, rbar: rbar0, eta, alpha, offset_const, diverged: false }
    }

    pub fn zeros(mdp: &TabularMdp, eta: f64, alpha: StepSizeSchedule) -> Self {
        Self::new(QTable::zeros(mdp), 0.0, eta, alpha)
    }

    /// Applies one update and returns the TD error.
    pub fn step(&mut self, tr: &Transition) -> f64 {
        let i = self.q.index(tr.state, tr.action);
        let delta = tr.reward - self.rbar + self.q.max_value(tr.next_state) - self.q.as_slice()[i];
        let alpha = self.alpha.next(i);
        self.q.as_mut_slice()[i] += alpha * delta;
        self.rbar += self.eta * alpha * delta;
        if !(self.q.as_slice()[i].is_finite() && self.rbar.is_finite()) {
            self.diverged = true;
        }
        delta
    }

    /// `R̄ₜ − (η ΣQₜ − c)`; zero up to rounding at every step.
    pub fn offset_residual(&self) -> f64 {
        self.rbar - (self.eta * self.q.sum() - self.offset_const)
    }

    pub fn offset_const(&self) -> f64 {
        self.offset_const
    }
}

impl ControlLearner for DiffQ {
    fn update(&mut self, tr: &Transition) {
        self.step(tr);
    }
    fn q(&self) -> &QTable {
        &self.q
    }
    fn reward_rate_estimate(&self) -> f64 {
        self.rbar
    }
    fn diverged(&self) -> bool {
        self.diverged
    }
}

/// RVI Q-learning.
///
/// The mean reference is kept as a running value updated with every write to
/// Q, so each step costs O(|𝒜|) instead of a pass over the table.
#[derive(Debug, Clone)]
pub struct RviQ {
    pub q: QTable,
    reference: ReferenceFunction,
    alpha: StepSizeSchedule,
    inv_pairs: f64,
    running_mean: f64,
    diverged: bool,
}

impl RviQ {
    pub fn new(q0: QTable, reference: ReferenceFunction, alpha: StepSizeSchedule) -> Result<Self> {
        reference.check(&q0)?;
        let inv_pairs = 1.0 / q0.len() as f64;
        let running_mean = q0.mean();
        Ok(Self { q: q0, reference, alpha, inv_pairs, running_mean, diverged: false })
    }

    pub fn zeros(mdp: &TabularMdp, reference: ReferenceFunction, alpha: StepSizeSchedule) -> Result<Self> {
        Self::new(QTable::zeros(mdp), reference, alpha)
    }

    pub fn reference(&self) -> ReferenceFunction {
        self.reference
    }

    /// f(Q) for the current table.
    pub fn reference_now(&self) -> f64 {
        match self.reference {
            ReferenceFunction::MeanAll => self.running_mean,
            other => reference_value(&other, &self.q),
        }
    }

    /// Recomputes the running mean from the table.
    pub fn resync_reference(&mut self) {
        self.running_mean = self.q.mean();
    }

    pub fn step(&mut self, tr: &Transition) -> f64 {
        let i = self.q.index(tr.state, tr.action);
        let f = self.reference_now();
        let delta = tr.reward - f + self.q.max_value(tr.next_state) - self.q.as_slice()[i];
        let alpha = self.alpha.next(i);
        self.q.as_mut_slice()[i] += alpha * delta;
        self.running_mean += self.inv_pairs * alpha * delta;
        if !self.q.as_slice()[i].is_finite() {
            self.diverged = true;
        }
        delta
    }
}

impl ControlLearner for RviQ {
    fn update(&mut self, tr: &Transition) {
        self.step(tr);
    }
    fn q(&self) -> &QTable {
        &self.q
    }
    fn reward_rate_estimate(&self) -> f64 {
        self.reference_now()
    }
    fn diverged(&self) -> bool {
        self.diverged
    }
}

/// Differential Q-learning with a second estimator that learns the offset
/// of Q so that `Q − Q̄ e` approaches the centered action values.
#[derive(Debug, Clone)]
pub struct CenteredDiffQ {
    pub inner: DiffQ,
    pub f: QTable,
    pub qbar: f64,
    pub kappa: f64,
    beta: StepSizeSchedule,
    /// Near-tie threshold for the greedy action at the next state.
    pub tie_eps: f64,
    offset_const: f64,
    diverged: bool,
}

impl CenteredDiffQ {
    pub fn new(inner: DiffQ, f0: QTable, qbar0: f64, kappa: f64, beta: StepSizeSchedule) -> Self {
        let offset_const = kappa * f0.sum() - qbar0;
        Self { inner, f: f0, qbar: qbar0, kappa, beta, tie_eps: 0.0, offset_const, diverged: false }
    }

    pub fn zeros(
        mdp: &TabularMdp,
        eta: f64,
        alpha: StepSizeSchedule,
        kappa: f64,
        beta: StepSizeSchedule,
    ) -> Self {
        Self::new(DiffQ::zeros(mdp, eta, alpha), QTable::zeros(mdp), 0.0, kappa, beta)
    }

    pub fn step(&mut self, tr: &Transition) {
        self.inner.step(tr);
        let q = &self.inner.q;
        let i = q.index(tr.state, tr.action);
        let next_greedy = argmax_within(q.row(tr.next_state), self.tie_eps);
        let delta = q.as_slice()[i] - self.qbar + self.f.get(tr.next_state, next_greedy) - self.f.as_slice()[i];
        let beta = self.beta.next(i);
        self.f.as_mut_slice()[i] += beta * delta;
        self.qbar += self.kappa * beta * delta;
        if !(self.f.as_slice()[i].is_finite() && self.qbar.is_finite()) {
            self.diverged = true;
        }
    }

    pub fn centered_values(&self) -> Vec<f64> {
        self.inner.q.shifted(self.qbar)
    }

    /// `Q̄ₜ − (κ ΣFₜ − c)`.
    pub fn offset_residual(&self) -> f64 {
        self.qbar - (self.kappa * self.f.sum() - self.offset_const)
    }
}

impl ControlLearner for CenteredDiffQ {
    fn update(&mut self, tr: &Transition) {
        self.step(tr);
    }
    fn q(&self) -> &QTable {
        &self.inner.q
    }
    fn reward_rate_estimate(&self) -> f64 {
        self.inner.rbar
    }
    fn centered(&self) -> Option<Vec<f64>> {
        Some(self.centered_values())
    }
    fn diverged(&self) -> bool {
        self.diverged || self.inner.diverged
    }
}
