//! Exact solutions of the tabular environments, as JSON and as a table.

use std::fmt::Write as _;

use serde::Serialize;

use super::config::PolicySpec;
use super::output::format_g9;
use crate::envs::TabularEnv;
use crate::error::Result;
use crate::mdp::{is_communicating, TabularMdp};
use crate::solvers::{differential_action_values, solve_optimal_with, RviOptions, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub enum SolveTarget {
    Policy(PolicySpec),
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub env: String,
    /// Policy spec, or `optimal`.
    pub target: String,
    pub communicating: bool,
    pub reward_rate: f64,
    /// Optimal reward rate from relative value iteration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward_rate_opt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub greedy_actions: Option<Vec<usize>>,
    pub d: Vec<f64>,
    pub v: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Solves `env` for a fixed policy or for the optimum.
///
/// A non-communicating MDP still gets an optimal solve; the report carries
/// a "not communicating" warning instead of failing.
pub fn solve_command(env: &TabularEnv, target: &SolveTarget) -> Result<SolveReport> {
    let mdp = env.build()?;
    solve_mdp(env.name(), &mdp, target)
}

pub fn solve_mdp(name: &str, mdp: &TabularMdp, target: &SolveTarget) -> Result<SolveReport> {
    let communicating = is_communicating(mdp);
    let mut warnings = Vec::new();
    if !communicating {
        warnings.push("not communicating".to_string());
    }
    match target {
        SolveTarget::Policy(spec) => {
            let policy = spec.resolve(mdp)?;
            let sol = differential_action_values(mdp, &policy)?;
            Ok(SolveReport {
                env: name.to_string(),
                target: spec.to_string(),
                communicating,
                reward_rate: sol.reward_rate,
                reward_rate_opt: None,
                greedy_actions: None,
                d: sol.d,
                v: sol.v,
                q: sol.q.unwrap_or_default(),
                warnings,
            })
        }
        SolveTarget::Optimal => {
            let opts = RviOptions { tol: DEFAULT_TOL, require_communicating: false, ..Default::default() };
            let sol = solve_optimal_with(mdp, opts)?;
            Ok(SolveReport {
                env: name.to_string(),
                target: "optimal".into(),
                communicating,
                reward_rate: sol.chain.reward_rate,
                reward_rate_opt: Some(sol.reward_rate_opt),
                greedy_actions: Some(sol.greedy_actions),
                d: sol.chain.d,
                v: sol.chain.v,
                q: sol.q_opt,
                warnings,
            })
        }
    }
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "env: {}  target: {}", self.env, self.target);
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        match self.reward_rate_opt {
            Some(r) => {
                let _ = writeln!(out, "r* = {}  (greedy policy rate {})", format_g9(r), format_g9(self.reward_rate));
            }
            None => {
                let _ = writeln!(out, "r(pi) = {}", format_g9(self.reward_rate));
            }
        }
        let width = self.q.iter().map(Vec::len).max().unwrap_or(0);
        let _ = write!(out, "{:>6} {:>14} {:>14}", "state", "d", "v");
        for a in 0..width {
            let _ = write!(out, " {:>14}", format!("q[{a}]"));
        }
        if self.greedy_actions.is_some() {
            let _ = write!(out, " {:>7}", "greedy");
        }
        out.push('\n');
        for s in 0..self.d.len() {
            let _ = write!(out, "{s:>6} {:>14} {:>14}", cell(self.d[s]), cell(self.v[s]));
            for a in 0..width {
                let cell = self.q.get(s).and_then(|r| r.get(a)).map(|x| cell(*x)).unwrap_or_default();
                let _ = write!(out, " {cell:>14}");
            }
            if let Some(g) = &self.greedy_actions {
                let _ = write!(out, " {:>7}", g[s]);
            }
            out.push('\n');
        }
        out
    }
}

/// Table cell; rounding residue below 1e-12 prints as 0.
fn cell(x: f64) -> String {
    format_g9(if x.abs() < 1e-12 { 0.0 } else { x })
}
