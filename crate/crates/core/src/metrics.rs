//! Evaluation quantities.

use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};
use crate::solvers::{differential_action_values, differential_values, ChainSolution};

/// Oracle reference for one policy: centered values, their weights and the
/// reward rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalContext {
    pub v_ref: Vec<f64>,
    pub d_ref: Vec<f64>,
    pub r_ref: f64,
}

impl EvalContext {
    pub fn new(v_ref: Vec<f64>, d_ref: Vec<f64>, r_ref: f64) -> Result<Self> {
        if v_ref.len() != d_ref.len() {
            return Err(Error::Shape(format!("{} reference values but {} weights", v_ref.len(), d_ref.len())));
        }
        let offset: f64 = v_ref.iter().zip(&d_ref).map(|(v, d)| v * d).sum();
        if offset.abs() > 1e-9 {
            return Err(Error::Numerical(format!("reference values are not centered (offset {offset:e})")));
        }
        Ok(Self { v_ref, d_ref, r_ref })
    }

    /// State-value context of `policy`.
    pub fn for_states(mdp: &TabularMdp, policy: &Policy) -> Result<Self> {
        let sol = differential_values(mdp, policy)?;
        Self::new(sol.v, sol.d, sol.reward_rate)
    }

    /// Action-value context of `policy` with weights `d(s) π(a|s)`.
    pub fn for_actions(mdp: &TabularMdp, policy: &Policy) -> Result<Self> {
        let sol = differential_action_values(mdp, policy)?;
        Self::from_action_solution(&sol, policy)
    }

    pub fn from_action_solution(sol: &ChainSolution, policy: &Policy) -> Result<Self> {
        let q = sol.q_flat().ok_or_else(|| Error::Config("solution has no action values".into()))?;
        Self::new(q, sol.pair_weights(policy), sol.reward_rate)
    }

    pub fn len(&self) -> usize {
        self.v_ref.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_ref.is_empty()
    }
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!("expected {want} values, got {got}")));
    }
    Ok(())
}

/// RMS error against the nearest constant shift of the reference:
/// `c = Σ d V`, then `sqrt(Σ d (V − c − v_ref)²)`.
pub fn rmsve_tvr(values: &[f64], ctx: &EvalContext) -> Result<f64> {
    check_len(values.len(), ctx.len())?;
    let c: f64 = ctx.d_ref.iter().zip(values).map(|(d, v)| d * v).sum();
    let sq: f64 = values
        .iter()
        .zip(&ctx.v_ref)
        .zip(&ctx.d_ref)
        .map(|((v, r), d)| d * (v - c - r).powi(2))
        .sum();
    Ok(sq.sqrt())
}

/// Weighted RMS difference, no centering.
pub fn rmsve_plain(values: &[f64], ref_values: &[f64], weights: &[f64]) -> Result<f64> {
    check_len(values.len(), ref_values.len())?;
    check_len(weights.len(), ref_values.len())?;
    let sq: f64 = values
        .iter()
        .zip(ref_values)
        .zip(weights)
        .map(|((v, r), w)| w * (v - r).powi(2))
        .sum();
    Ok(sq.sqrt())
}

/// Reward-rate error `(r_ref − R̄)²`.
pub fn rre(rbar: f64, ctx: &EvalContext) -> f64 {
    (ctx.r_ref - rbar).powi(2)
}

/// Trailing mean over the last `window` rewards; the first `window − 1`
/// entries average whatever is available.
pub fn windowed_reward_rate(rewards: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(rewards.len());
    let mut sum = 0.0;
    for (t, &r) in rewards.iter().enumerate() {
        sum += r;
        if t >= window {
            sum -= rewards[t - window];
        }
        out.push(sum / (t + 1).min(window) as f64);
    }
    Ok(out)
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
