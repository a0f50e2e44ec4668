//! Benchmark MDPs: Access-Control queuing, the Two Loop family and a
//! two-state MDP with a transient state.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Outcome, TabularMdp};

/// Access-Control queuing task parameters.
///
/// `free_prob` defaults to 0.06, the per-step release probability from the
/// textbook version of the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccessControlParams {
    pub n_servers: usize,
    pub priorities: Vec<f64>,
    pub free_prob: f64,
}

impl Default for AccessControlParams {
    fn default() -> Self {
        Self { n_servers: 10, priorities: vec![1.0, 2.0, 4.0, 8.0], free_prob: 0.06 }
    }
}

impl AccessControlParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_servers == 0 {
            return Err(Error::Config("access control needs at least one server".into()));
        }
        if self.priorities.is_empty() {
            return Err(Error::Config("access control needs at least one priority".into()));
        }
        if !(self.free_prob > 0.0 && self.free_prob < 1.0) {
            return Err(Error::Config(format!("free_prob must lie in (0, 1), got {}", self.free_prob)));
        }
        Ok(())
    }

    /// State id of (head priority index, free servers).
    pub fn state_id(&self, priority_index: usize, free: usize) -> usize {
        priority_index * (self.n_servers + 1) + free
    }

    /// Inverse of [`AccessControlParams::state_id`].
    pub fn decode(&self, state: usize) -> (usize, usize) {
        (state / (self.n_servers + 1), state % (self.n_servers + 1))
    }
}

pub const REJECT: usize = 0;
pub const ACCEPT: usize = 1;

/// Builds the Access-Control MDP.
///
/// Accepting with a free server pays the head customer's priority and
/// occupies a server; every busy server (including one just occupied) then
/// frees independently with `free_prob`, and the next head priority is
/// uniform.
pub fn build_access_control(params: &AccessControlParams) -> Result<TabularMdp> {
    params.validate()?;
    let n = params.n_servers;
    let n_pri = params.priorities.len();
    let p = params.free_prob;
    let mut rows = Vec::with_capacity(n_pri * (n + 1));
    for &priority in &params.priorities {
        for free in 0..=n {
            let mut actions = Vec::with_capacity(2);
            for action in [REJECT, ACCEPT] {
                let (busy, reward) = if action == ACCEPT && free > 0 {
                    (n - free + 1, priority)
                } else {
                    (n - free, 0.0)
                };
                let mut outcomes = Vec::with_capacity((busy + 1) * n_pri);
                for released in 0..=busy {
                    let pk = binomial_pmf(busy, released, p);
                    let next_free = n - busy + released;
                    for next_pi in 0..n_pri {
                        outcomes.push(Outcome::new(
                            pk / n_pri as f64,
                            params.state_id(next_pi, next_free),
                            reward,
                        ));
                    }
                }
                actions.push(outcomes);
            }
            rows.push(actions);
        }
    }
    let mut mdp = TabularMdp::from_rows(rows);
    mdp.normalize_rows();
    Ok(mdp)
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    // n ≤ a few dozen here, so the multiplicative form is exact enough
    let mut coeff = 1.0;
    for i in 0..k {
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoLoopVariant {
    Standard,
    BigReward,
    RareState,
}

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Two Loop MDP and its variants.
///
/// State 0 chooses `left` (reward +1 into 1→2→3→4→0) or `right`
/// (reward 0 into 5→6→7→8, then 8→0 pays +2, or +10 for the big-reward
/// variants). In `RareState` every nominal transition happens with
/// probability 0.98 and otherwise diverts to state 9 while still paying the
/// nominal reward; state 9 returns to 0 paying +100.
pub fn build_two_loop(variant: TwoLoopVariant) -> TabularMdp {
    let loop_reward = match variant {
        TwoLoopVariant::Standard => 2.0,
        TwoLoopVariant::BigReward | TwoLoopVariant::RareState => 10.0,
    };
    let det = |next: usize, reward: f64| vec![Outcome::new(1.0, next, reward)];
    let mut rows: Vec<Vec<Vec<Outcome>>> = vec![vec![det(1, 1.0), det(5, 0.0)]];
    for s in 1..=3 {
        rows.push(vec![det(s + 1, 0.0)]);
    }
    rows.push(vec![det(0, 0.0)]);
    for s in 5..=7 {
        rows.push(vec![det(s + 1, 0.0)]);
    }
    rows.push(vec![det(0, loop_reward)]);

    if variant == TwoLoopVariant::RareState {
        const DETOUR: f64 = 0.02;
        for actions in rows.iter_mut() {
            for outcomes in actions.iter_mut() {
                let nominal = outcomes[0];
                *outcomes = vec![
                    Outcome::new(1.0 - DETOUR, nominal.next_state, nominal.reward),
                    Outcome::new(DETOUR, 9, nominal.reward),
                ];
            }
        }
        rows.push(vec![det(0, 100.0)]);
    }
    TabularMdp::from_rows(rows)
}

/// Two states: 0 is transient under every policy, 1 is an absorbing
/// self-loop paying +2.
pub fn build_two_state_transient() -> TabularMdp {
    TabularMdp::from_rows(vec![
        vec![
            vec![Outcome::new(0.9, 0, 1.0), Outcome::new(0.1, 1, 1.0)],
            vec![Outcome::new(1.0, 1, -10.0)],
        ],
        vec![vec![Outcome::new(1.0, 1, 2.0)]],
    ])
}

/// A tabular benchmark by CLI name.
#[derive(Debug, Clone, PartialEq)]
pub enum TabularEnv {
    AccessControl(AccessControlParams),
    TwoLoop(TwoLoopVariant),
    TwoStateTransient,
}

impl TabularEnv {
    pub fn build(&self) -> Result<TabularMdp> {
        match self {
            TabularEnv::AccessControl(p) => build_access_control(p),
            TabularEnv::TwoLoop(v) => Ok(build_two_loop(*v)),
            TabularEnv::TwoStateTransient => Ok(build_two_state_transient()),
        }
    }

    /// Start state of a run. Access-Control starts with every server free
    /// and a uniformly drawn head customer; the others start in state 0.
    pub fn start_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            TabularEnv::AccessControl(p) => {
                let pi = rng.random_range(0..p.priorities.len());
                p.state_id(pi, p.n_servers)
            }
            _ => 0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TabularEnv::AccessControl(_) => "access_control",
            TabularEnv::TwoLoop(TwoLoopVariant::Standard) => "two_loop",
            TabularEnv::TwoLoop(TwoLoopVariant::BigReward) => "two_loop_big",
            TabularEnv::TwoLoop(TwoLoopVariant::RareState) => "two_loop_rare",
            TabularEnv::TwoStateTransient => "two_state_transient",
        }
    }
}

impl fmt::Display for TabularEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TabularEnv {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "access_control" => Ok(TabularEnv::AccessControl(AccessControlParams::default())),
            "two_loop" => Ok(TabularEnv::TwoLoop(TwoLoopVariant::Standard)),
            "two_loop_big" => Ok(TabularEnv::TwoLoop(TwoLoopVariant::BigReward)),
            "two_loop_rare" => Ok(TabularEnv::TwoLoop(TwoLoopVariant::RareState)),
            "two_state_transient" => Ok(TabularEnv::TwoStateTransient),
            other => Err(Error::Config(format!("unknown tabular environment '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{is_communicating, validate_mdp, Policy};

    #[test]
    fn access_control_shape() {
        let params = AccessControlParams::default();
        let m = build_access_control(&params).unwrap();
        assert_eq!(m.n_states(), 44);
        assert_eq!(m.n_pairs(), 88);
        assert!(validate_mdp(&m).is_valid());
        assert!(is_communicating(&m));
        assert_eq!(params.state_id(3, 2), 35);
        assert_eq!(params.decode(35), (3, 2));
    }

    #[test]
    fn access_control_dynamics() {
        let params = AccessControlParams::default();
        let m = build_access_control(&params).unwrap();
        // all servers busy: accept is a no-op and pays nothing
        let s = params.state_id(3, 0);
        assert_eq!(m.outcomes(s, ACCEPT), m.outcomes(s, REJECT));
        assert_eq!(m.expected_reward(s, ACCEPT), 0.0);
        // all free: rejecting keeps all free, never increases busy count
        let s = params.state_id(0, 10);
        assert!(m.outcomes(s, REJECT).iter().all(|o| params.decode(o.next_state).1 == 10));
        // accept pays the priority
        let s = params.state_id(2, 5);
        assert!((m.expected_reward(s, ACCEPT) - 4.0).abs() < 1e-12);
        // after accepting with 5 free, at most 4 + 6 = 10 can be free next
        let max_free = m.outcomes(s, ACCEPT).iter().map(|o| params.decode(o.next_state).1).max().unwrap();
        assert_eq!(max_free, 10);
        let min_free = m.outcomes(s, ACCEPT).iter().map(|o| params.decode(o.next_state).1).min().unwrap();
        assert_eq!(min_free, 4);
    }

    #[test]
    fn access_control_rejects_bad_params() {
        let mut p = AccessControlParams::default();
        p.free_prob = 1.0;
        assert!(build_access_control(&p).is_err());
        p = AccessControlParams { priorities: vec![], ..Default::default() };
        assert!(build_access_control(&p).is_err());
    }

    #[test]
    fn two_loop_structure() {
        for v in [TwoLoopVariant::Standard, TwoLoopVariant::BigReward, TwoLoopVariant::RareState] {
            let m = build_two_loop(v);
            assert!(validate_mdp(&m).is_valid(), "{v:?}");
            assert!(is_communicating(&m));
        }
        let m = build_two_loop(TwoLoopVariant::Standard);
        assert_eq!(m.n_states(), 9);
        assert_eq!(m.actions_per_state(), &[2, 1, 1, 1, 1, 1, 1, 1, 1]);
        assert_eq!(m.outcomes(8, 0), &[Outcome::new(1.0, 0, 2.0)]);
        assert_eq!(build_two_loop(TwoLoopVariant::BigReward).outcomes(8, 0)[0].reward, 10.0);
        let rare = build_two_loop(TwoLoopVariant::RareState);
        assert_eq!(rare.n_states(), 10);
        assert_eq!(rare.outcomes(9, 0), &[Outcome::new(1.0, 0, 100.0)]);
    }

    #[test]
    fn two_loop_cycles_have_length_five() {
        let m = build_two_loop(TwoLoopVariant::Standard);
        for first in [LEFT, RIGHT] {
            let mut s = m.outcomes(0, first)[0].next_state;
            let mut len = 1;
            while s != 0 {
                s = m.outcomes(s, 0)[0].next_state;
                len += 1;
            }
            assert_eq!(len, 5);
        }
    }

    #[test]
    fn transient_mdp() {
        let m = build_two_state_transient();
        assert!(validate_mdp(&m).is_valid());
        assert!(!is_communicating(&m));
        let _ = Policy::uniform(&m);
    }

    #[test]
    fn names_roundtrip() {
        for name in ["access_control", "two_loop", "two_loop_big", "two_loop_rare", "two_state_transient"] {
            let env: TabularEnv = name.parse().unwrap();
            assert_eq!(env.name(), name);
            assert!(validate_mdp(&env.build().unwrap()).is_valid());
        }
        assert!("puckworld".parse::<TabularEnv>().is_err());
    }
}
