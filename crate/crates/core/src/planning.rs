//! Planning: the differential updates driven by transitions simulated from a
//! model MDP.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::control::DiffQ;
use crate::error::{Error, Result};
use crate::mdp::{sample_transition, Policy, TabularMdp, Transition};
use crate::prediction::{check_coverage, importance_ratio, DiffTd};

/// The model `p̂`; same structure and invariants as the true MDP.
pub type ModelMdp = TabularMdp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    #[default]
    UniformRandom,
    /// Round-robin in index order.
    Sweep,
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectorKind::UniformRandom => "uniform_random",
            SelectorKind::Sweep => "sweep",
        })
    }
}

impl FromStr for SelectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_random" | "uniform" => Ok(SelectorKind::UniformRandom),
            "sweep" => Ok(SelectorKind::Sweep),
            other => Err(Error::Config(format!("unknown planning selector '{other}'"))),
        }
    }
}

/// Chooses which pair (or state) the next planning update starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanningSelector {
    kind: SelectorKind,
    cursor: usize,
}

impl PlanningSelector {
    pub fn new(kind: SelectorKind) -> Self {
        Self { kind, cursor: 0 }
    }

    pub fn kind(&self) -> SelectorKind {
        self.kind
    }

    /// Index in `0..n`. Sweep draws no randomness.
    pub fn next_index<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> usize {
        match self.kind {
            SelectorKind::UniformRandom => rng.random_range(0..n),
            SelectorKind::Sweep => {
                let i = self.cursor % n;
                self.cursor = (i + 1) % n;
                i
            }
        }
    }
}

/// One Differential Q-planning step. Returns the simulated transition.
pub fn diffq_planning_step<R: Rng + ?Sized>(
    learner: &mut DiffQ,
    model: &ModelMdp,
    sel: &mut PlanningSelector,
    rng: &mut R,
) -> Transition {
    let (s, a) = model.pair_of(sel.next_index(model.n_pairs(), rng));
    let (next_state, reward) = sample_transition(model, s, a, rng).expect("selector yields valid pairs");
    let tr = Transition::new(s, a, reward, next_state);
    learner.step(&tr);
    tr
}

/// One Differential TD-planning step: state from the selector, action from
/// `b`, outcome from the model. Returns the transition and its ratio.
pub fn difftd_planning_step<R: Rng + ?Sized>(
    learner: &mut DiffTd,
    model: &ModelMdp,
    b: &Policy,
    pi: &Policy,
    sel: &mut PlanningSelector,
    rng: &mut R,
) -> Result<(Transition, f64)> {
    let s = sel.next_index(model.n_states(), rng);
    let a = b.sample_action(s, rng);
    let rho = importance_ratio(pi, b, s, a)?;
    let (next_state, reward) = sample_transition(model, s, a, rng)?;
    let tr = Transition::new(s, a, reward, next_state);
    learner.step(&tr, rho);
    Ok((tr, rho))
}

/// Checks the planning preconditions once, up front.
pub fn check_planning_policies(model: &ModelMdp, b: &Policy, pi: &Policy) -> Result<()> {
    if !b.is_compatible(model) || !pi.is_compatible(model) {
        return Err(Error::Shape("policy does not match the model".into()));
    }
    check_coverage(pi, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{build_two_loop, TwoLoopVariant};
    use crate::mdp::{seeded_rng, Outcome, ScheduleKind, StepSizeSchedule};
    use crate::solvers::{reward_rate, solve_optimal, DEFAULT_TOL};

    fn per_pair(alpha: f64, n: usize) -> StepSizeSchedule {
        StepSizeSchedule::new(ScheduleKind::PerPairCount { alpha, exponent: 1.0 }, n)
    }

    fn two_loop_policy(left: f64) -> Policy {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let mut rows = Policy::uniform(&m).rows().to_vec();
        rows[0] = vec![left, 1.0 - left];
        Policy::new(&m, rows).unwrap()
    }

    #[test]
    fn sweep_is_round_robin() {
        let mut sel = PlanningSelector::new(SelectorKind::Sweep);
        let mut rng = seeded_rng(0);
        let got: Vec<usize> = (0..7).map(|_| sel.next_index(3, &mut rng)).collect();
        assert_eq!(got, vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn uniform_selector_covers_everything() {
        let mut sel = PlanningSelector::new(SelectorKind::UniformRandom);
        let mut rng = seeded_rng(3);
        let mut seen = [0u32; 10];
        for _ in 0..10_000 {
            seen[sel.next_index(10, &mut rng)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn selector_names_round_trip() {
        for k in [SelectorKind::UniformRandom, SelectorKind::Sweep] {
            assert_eq!(k.to_string().parse::<SelectorKind>().unwrap(), k);
        }
        assert!("nope".parse::<SelectorKind>().is_err());
    }

    #[test]
    fn diffq_planning_two_loop() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let r_star = solve_optimal(&m, DEFAULT_TOL).unwrap().reward_rate_opt;
        let sched = StepSizeSchedule::new(ScheduleKind::PerPairCount { alpha: 0.1, exponent: 0.6 }, m.n_pairs());
        let mut l = DiffQ::zeros(&m, 1.0, sched);
        let mut sel = PlanningSelector::new(SelectorKind::Sweep);
        let mut rng = seeded_rng(11);
        for _ in 0..200_000 {
            diffq_planning_step(&mut l, &m, &mut sel, &mut rng);
            debug_assert!(l.offset_residual().abs() < 1e-9);
        }
        assert!((l.rbar - r_star).abs() < 0.02, "rbar {}", l.rbar);
        assert!(l.offset_residual().abs() < 1e-9);
    }

    #[test]
    fn diffq_planning_self_loop() {
        let m = TabularMdp::from_rows(vec![vec![vec![Outcome::new(1.0, 0, 3.0)]]]);
        let mut l = DiffQ::zeros(&m, 1.0, StepSizeSchedule::constant(0.1));
        let mut sel = PlanningSelector::new(SelectorKind::UniformRandom);
        let mut rng = seeded_rng(0);
        for _ in 0..1000 {
            diffq_planning_step(&mut l, &m, &mut sel, &mut rng);
        }
        assert!((l.rbar - 3.0).abs() < 1e-9, "{}", l.rbar);
    }

    #[test]
    fn difftd_planning_on_policy() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let pi = two_loop_policy(0.5);
        let mut l = DiffTd::zeros(9, 1.0, per_pair(0.1, 9));
        let mut sel = PlanningSelector::new(SelectorKind::UniformRandom);
        let mut rng = seeded_rng(5);
        for _ in 0..100_000 {
            let (_, rho) = difftd_planning_step(&mut l, &m, &pi, &pi, &mut sel, &mut rng).unwrap();
            assert_eq!(rho, 1.0);
        }
        assert!((l.rbar - 0.3).abs() < 0.02, "rbar {}", l.rbar);
    }

    #[test]
    fn difftd_planning_off_policy() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let pi = two_loop_policy(0.5);
        let b = two_loop_policy(0.9);
        let target = reward_rate(&m, &pi).unwrap();
        check_planning_policies(&m, &b, &pi).unwrap();
        let mut l = DiffTd::zeros(9, 1.0, per_pair(0.1, 9));
        let mut sel = PlanningSelector::new(SelectorKind::UniformRandom);
        let mut rng = seeded_rng(6);
        for _ in 0..200_000 {
            difftd_planning_step(&mut l, &m, &b, &pi, &mut sel, &mut rng).unwrap();
        }
        assert!((l.rbar - target).abs() < 0.05, "rbar {}", l.rbar);
    }

    #[test]
    fn difftd_planning_rejects_uncovered_target() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let b = two_loop_policy(1.0);
        let pi = two_loop_policy(0.5);
        assert!(matches!(check_planning_policies(&m, &b, &pi), Err(Error::Coverage { .. })));
    }

    #[test]
    fn planning_equals_learning_on_replayed_stream() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        let mut planner = DiffQ::zeros(&m, 0.5, per_pair(0.3, m.n_pairs()));
        let mut learner = DiffQ::zeros(&m, 0.5, per_pair(0.3, m.n_pairs()));
        let mut sel = PlanningSelector::new(SelectorKind::UniformRandom);
        let mut rng = seeded_rng(9);
        let stream: Vec<Transition> =
            (0..5000).map(|_| diffq_planning_step(&mut planner, &m, &mut sel, &mut rng)).collect();
        for tr in &stream {
            learner.step(tr);
        }
        assert_eq!(planner.q.as_slice(), learner.q.as_slice());
        assert_eq!(planner.rbar.to_bits(), learner.rbar.to_bits());
    }
}
