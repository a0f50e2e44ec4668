//! Tabular prediction learners: Differential TD-learning (on- and
//! off-policy), Average Cost TD-learning and Centered Differential TD.

use crate::error::{Error, Result};
use crate::mdp::{Policy, StepSizeSchedule, Transition};

/// `π(a|s) / b(a|s)`.
pub fn importance_ratio(pi: &Policy, b: &Policy, s: usize, a: usize) -> Result<f64> {
    let denom = b.prob(s, a);
    if denom <= 0.0 {
        return Err(Error::Coverage { state: s, action: a });
    }
    Ok(pi.prob(s, a) / denom)
}

/// Checks that `b` covers `π`: `π(a|s) > 0 ⇒ b(a|s) > 0`.
pub fn check_coverage(pi: &Policy, b: &Policy) -> Result<()> {
    for s in 0..pi.n_states() {
        for (a, &p) in pi.row(s).iter().enumerate() {
            if p > 0.0 && b.prob(s, a) <= 0.0 {
                return Err(Error::Coverage { state: s, action: a });
            }
        }
    }
    Ok(())
}

pub trait PredictionLearner {
    fn update(&mut self, tr: &Transition, rho: f64);
    fn values(&self) -> &[f64];
    fn reward_rate_estimate(&self) -> f64;
    fn centered(&self) -> Option<Vec<f64>> {
        None
    }
    fn diverged(&self) -> bool;
}

/// Differential TD-learning.
#[derive(Debug, Clone)]
pub struct DiffTd {
    pub v: Vec<f64>,
    pub rbar: f64,
    pub eta: f64,
    alpha: StepSizeSchedule,
    offset_const: f64,
    diverged: bool,
}

impl DiffTd {
    pub fn new(v0: Vec<f64>, rbar0: f64, eta: f64, alpha: StepSizeSchedule) -> Self {
        let offset_const = eta * v0.iter().sum::<f64>() - rbar0;
        Self { v: v0, rbar: rbar0, eta, alpha, offset_const, diverged: false }
    }

    pub fn zeros(n_states: usize, eta: f64, alpha: StepSizeSchedule) -> Self {
        Self::new(vec![0.0; n_states], 0.0, eta, alpha)
    }

    pub fn step(&mut self, tr: &Transition, rho: f64) -> f64 {
        let s = tr.state;
        let delta = tr.reward - self.rbar + self.v[tr.next_state] - self.v[s];
        let alpha = self.alpha.next(s);
        if rho != 0.0 {
            self.v[s] += alpha * rho * delta;
            self.rbar += self.eta * alpha * rho * delta;
        }
        if !(self.v[s].is_finite() && self.rbar.is_finite()) {
            self.diverged = true;
        }
        delta
    }

    /// `R̄ₜ − (η ΣVₜ − c)`.
    pub fn offset_residual(&self) -> f64 {
        self.rbar - (self.eta * self.v.iter().sum::<f64>() - self.offset_const)
    }
}

impl PredictionLearner for DiffTd {
    fn update(&mut self, tr: &Transition, rho: f64) {
        self.step(tr, rho);
    }
    fn values(&self) -> &[f64] {
        &self.v
    }
    fn reward_rate_estimate(&self) -> f64 {
        self.rbar
    }
    fn diverged(&self) -> bool {
        self.diverged
    }
}

/// Average Cost TD-learning. On-policy only: the reward-rate estimate
/// tracks the conventional error `r − R̄` and never reads V.
#[derive(Debug, Clone)]
pub struct AvgCostTd {
    pub v: Vec<f64>,
    pub rbar: f64,
    pub eta: f64,
    alpha: StepSizeSchedule,
    diverged: bool,
}

impl AvgCostTd {
    pub fn new(v0: Vec<f64>, rbar0: f64, eta: f64, alpha: StepSizeSchedule) -> Self {
        Self { v: v0, rbar: rbar0, eta, alpha, diverged: false }
    }

    pub fn zeros(n_states: usize, eta: f64, alpha: StepSizeSchedule) -> Self {
        Self::new(vec![0.0; n_states], 0.0, eta, alpha)
    }

    pub fn step(&mut self, tr: &Transition) -> f64 {
        let s = tr.state;
        let delta = tr.reward - self.rbar + self.v[tr.next_state] - self.v[s];
        let alpha = self.alpha.next(s);
        self.v[s] += alpha * delta;
        self.rbar += self.eta * alpha * (tr.reward - self.rbar);
        if !(self.v[s].is_finite() && self.rbar.is_finite()) {
            self.diverged = true;
        }
        delta
    }
}

impl PredictionLearner for AvgCostTd {
    /// `rho` is ignored; callers must supply an on-policy stream.
    fn update(&mut self, tr: &Transition, _rho: f64) {
        self.step(tr);
    }
    fn values(&self) -> &[f64] {
        &self.v
    }
    fn reward_rate_estimate(&self) -> f64 {
        self.rbar
    }
    fn diverged(&self) -> bool {
        self.diverged
    }
}

/// Differential TD-learning plus an offset estimator whose rewards are the
/// first estimator's values.
#[derive(Debug, Clone)]
pub struct CenteredDiffTd {
    pub inner: DiffTd,
    pub f: Vec<f64>,
    pub vbar: f64,
    pub kappa: f64,
    beta: StepSizeSchedule,
    offset_const: f64,
    diverged: bool,
}

impl CenteredDiffTd {
    pub fn new(inner: DiffTd, f0: Vec<f64>, vbar0: f64, kappa: f64, beta: StepSizeSchedule) -> Self {
        let offset_const = kappa * f0.iter().sum::<f64>() - vbar0;
        Self { inner, f: f0, vbar: vbar0, kappa, beta, offset_const, diverged: false }
    }

    pub fn zeros(n_states: usize, eta: f64, alpha: StepSizeSchedule, kappa: f64, beta: StepSizeSchedule) -> Self {
        Self::new(DiffTd::zeros(n_states, eta, alpha), vec![0.0; n_states], 0.0, kappa, beta)
    }

    /// The second estimator reads the first estimator's value after this
    /// step's update.
    pub fn step(&mut self, tr: &Transition, rho: f64) {
        self.inner.step(tr, rho);
        let s = tr.state;
        let delta = self.inner.v[s] - self.vbar + self.f[tr.next_state] - self.f[s];
        let beta = self.beta.next(s);
        if rho != 0.0 {
            self.f[s] += beta * rho * delta;
            self.vbar += self.kappa * beta * rho * delta;
        }
        if !(self.f[s].is_finite() && self.vbar.is_finite()) {
            self.diverged = true;
        }
    }

    pub fn centered_values(&self) -> Vec<f64> {
        self.inner.v.iter().map(|x| x - self.vbar).collect()
    }

    /// `V̄ₜ − (κ ΣFₜ − c)`.
    pub fn offset_residual(&self) -> f64 {
        self.vbar - (self.kappa * self.f.iter().sum::<f64>() - self.offset_const)
    }
}

impl PredictionLearner for CenteredDiffTd {
    fn update(&mut self, tr: &Transition, rho: f64) {
        self.step(tr, rho);
    }
    fn values(&self) -> &[f64] {
        &self.inner.v
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
