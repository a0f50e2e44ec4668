//! Experiment configuration and its validation into a runnable plan.

use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::control::ReferenceFunction;
use crate::envs::{AccessControlParams, TabularEnv};
use crate::error::{Error, Result};
use crate::lfa::Track1d;
use crate::mdp::{Policy, ScheduleKind, StepSizeSchedule, TabularMdp};
use crate::planning::SelectorKind;
use crate::solvers::solve_optimal;

/// Parses a snake_case enum name through its serde representation.
pub(crate) fn parse_name<T: DeserializeOwned>(s: &str, what: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown {what} '{s}'")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DiffQ,
    RviQ,
    CenteredDiffQ,
    DiffTd,
    AvgcostTd,
    CenteredDiffTd,
    DiffQPlan,
    DiffTdPlan,
    DiffQLfa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::DiffQ,
        Algorithm::RviQ,
        Algorithm::CenteredDiffQ,
        Algorithm::DiffTd,
        Algorithm::AvgcostTd,
        Algorithm::CenteredDiffTd,
        Algorithm::DiffQPlan,
        Algorithm::DiffTdPlan,
        Algorithm::DiffQLfa,
    ];

    pub fn is_prediction(self) -> bool {
        matches!(self, Algorithm::DiffTd | Algorithm::AvgcostTd | Algorithm::CenteredDiffTd | Algorithm::DiffTdPlan)
    }

    pub fn is_centered(self) -> bool {
        matches!(self, Algorithm::CenteredDiffQ | Algorithm::CenteredDiffTd)
    }

    pub fn uses_eta(self) -> bool {
        self != Algorithm::RviQ
    }

    pub fn is_planning(self) -> bool {
        matches!(self, Algorithm::DiffQPlan | Algorithm::DiffTdPlan)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DiffQ => "diff_q",
            Algorithm::RviQ => "rvi_q",
            Algorithm::CenteredDiffQ => "centered_diff_q",
            Algorithm::DiffTd => "diff_td",
            Algorithm::AvgcostTd => "avgcost_td",
            Algorithm::CenteredDiffTd => "centered_diff_td",
            Algorithm::DiffQPlan => "diff_q_plan",
            Algorithm::DiffTdPlan => "diff_td_plan",
            Algorithm::DiffQLfa => "diff_q_lfa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_name(s, "algorithm")
    }
}

/// Shape of a step-size sequence; the scale comes from `alpha` or `beta`.
///
/// String form: `constant`, `exp_decay:FACTOR`, `per_pair_count:EXPONENT`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScheduleShape {
    #[default]
    Constant,
    ExpDecay(f64),
    PerPairCount(f64),
}

impl ScheduleShape {
    pub fn with_scale(self, alpha: f64) -> ScheduleKind {
        match self {
            ScheduleShape::Constant => ScheduleKind::Constant { alpha },
            ScheduleShape::ExpDecay(factor) => ScheduleKind::ExpDecay { alpha, factor },
            ScheduleShape::PerPairCount(exponent) => ScheduleKind::PerPairCount { alpha, exponent },
        }
    }
}

impl fmt::Display for ScheduleShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleShape::Constant => f.write_str("constant"),
            ScheduleShape::ExpDecay(x) => write!(f, "exp_decay:{x}"),
            ScheduleShape::PerPairCount(x) => write!(f, "per_pair_count:{x}"),
        }
    }
}

impl FromStr for ScheduleShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = |default: Option<f64>| -> Result<f64> {
            match arg {
                Some(a) => a.trim().parse().map_err(|_| Error::Config(format!("bad schedule parameter in '{s}'"))),
                None => default.ok_or_else(|| Error::Config(format!("schedule '{s}' needs a parameter"))),
            }
        };
        match kind {
            "constant" if arg.is_none() => Ok(ScheduleShape::Constant),
            "exp_decay" => Ok(ScheduleShape::ExpDecay(num(None)?)),
            "per_pair_count" => Ok(ScheduleShape::PerPairCount(num(Some(1.0))?)),
            _ => Err(Error::Config(format!("unknown schedule '{s}'"))),
        }
    }
}

impl Serialize for ScheduleShape {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScheduleShape {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A quantity recorded at evaluation points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricSpec {
    RmsveTvr,
    RmsvePlain,
    Rre,
    Rbar,
    WindowRate(usize),
}

impl MetricSpec {
    pub fn needs_oracle(self) -> bool {
        matches!(self, MetricSpec::RmsveTvr | MetricSpec::RmsvePlain | MetricSpec::Rre)
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::RmsveTvr => f.write_str("rmsve_tvr"),
            MetricSpec::RmsvePlain => f.write_str("rmsve_plain"),
            MetricSpec::Rre => f.write_str("rre"),
            MetricSpec::Rbar => f.write_str("rbar"),
            MetricSpec::WindowRate(w) => write!(f, "window_rate({w})"),
        }
    }
}

impl FromStr for MetricSpec {
    type Err = Error;
    /// Accepts `window_rate(W)` and `window_rate:W`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "rmsve_tvr" => return Ok(MetricSpec::RmsveTvr),
            "rmsve_plain" => return Ok(MetricSpec::RmsvePlain),
            "rre" => return Ok(MetricSpec::Rre),
            "rbar" => return Ok(MetricSpec::Rbar),
            _ => {}
        }
        let arg = s
            .strip_prefix("window_rate(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("window_rate:"));
        match arg.map(|a| a.trim().parse::<usize>()) {
            Some(Ok(w)) if w >= 1 => Ok(MetricSpec::WindowRate(w)),
            Some(_) => Err(Error::Config(format!("window in '{s}' must be a positive integer"))),
            None => Err(Error::Config(format!("unknown metric '{s}'"))),
        }
    }
}

/// Named policy over a tabular environment.
///
/// `uniform`, `always:K` (action K wherever it exists, else action 0),
/// `probs:P0,P1,..` (applied to every state with that many actions, uniform
/// elsewhere), `optimal`, `eps_optimal:EPS`.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Uniform,
    Always(usize),
    Probs(Vec<f64>),
    Optimal,
    EpsOptimal(f64),
}

impl PolicySpec {
    pub fn resolve(&self, mdp: &TabularMdp) -> Result<Policy> {
        match self {
            PolicySpec::Uniform => Ok(Policy::uniform(mdp)),
            PolicySpec::Always(k) => {
                let acts: Vec<usize> =
                    (0..mdp.n_states()).map(|s| if *k < mdp.n_actions(s) { *k } else { 0 }).collect();
                Policy::deterministic(mdp, &acts)
            }
            PolicySpec::Probs(p) => {
                if p.is_empty() {
                    return Err(Error::Config("probs policy needs at least one probability".into()));
                }
                let mut matched = false;
                let rows = (0..mdp.n_states())
                    .map(|s| {
                        let n = mdp.n_actions(s);
                        if n == p.len() {
                            matched = true;
                            p.clone()
                        } else {
                            vec![1.0 / n as f64; n]
                        }
                    })
                    .collect();
                if !matched {
                    return Err(Error::Config(format!("no state has {} actions", p.len())));
                }
                Policy::new(mdp, rows).map_err(|e| Error::Config(e.to_string()))
            }
            PolicySpec::Optimal => Ok(solve_optimal_unchecked(mdp)?.0),
            PolicySpec::EpsOptimal(eps) => {
                let (_, acts) = solve_optimal_unchecked(mdp)?;
                Policy::epsilon_soft(mdp, &acts, *eps)
            }
        }
    }
}

fn solve_optimal_unchecked(mdp: &TabularMdp) -> Result<(Policy, Vec<usize>)> {
    let sol = solve_optimal(mdp, crate::solvers::DEFAULT_TOL)?;
    Ok((sol.greedy_policy, sol.greedy_actions))
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Uniform => f.write_str("uniform"),
            PolicySpec::Always(k) => write!(f, "always:{k}"),
            PolicySpec::Probs(p) => {
                let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "probs:{}", parts.join(","))
            }
            PolicySpec::Optimal => f.write_str("optimal"),
            PolicySpec::EpsOptimal(e) => write!(f, "eps_optimal:{e}"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad policy spec '{s}'"));
        let s = s.trim();
        match s {
            "uniform" => return Ok(PolicySpec::Uniform),
            "optimal" => return Ok(PolicySpec::Optimal),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("always:") {
            return k.trim().parse().map(PolicySpec::Always).map_err(|_| bad());
        }
        if let Some(p) = s.strip_prefix("probs:") {
            let probs: std::result::Result<Vec<f64>, _> = p.split([',', ';']).map(|x| x.trim().parse::<f64>()).collect();
            return probs.map(PolicySpec::Probs).map_err(|_| bad());
        }
        if let Some(e) = s.strip_prefix("eps_optimal:") {
            let eps: f64 = e.trim().parse().map_err(|_| bad())?;
            if !(0.0..=1.0).contains(&eps) {
                return Err(bad());
            }
            return Ok(PolicySpec::EpsOptimal(eps));
        }
        Err(bad())
    }
}

/// Everything needed to launch a batch of runs. Field names are the JSON
/// keys; the CLI flags are their kebab-case forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: String,
    /// Environment parameters (Access-Control or track1d fields).
    pub env_params: Option<serde_json::Value>,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha_schedule: ScheduleShape,
    pub epsilon: f64,
    pub reference: Option<String>,
    pub target_policy: Option<String>,
    pub behavior_policy: Option<String>,
    pub selector: SelectorKind,
    /// Near-tie threshold for the centered control learner's argmax.
    pub tie_eps: f64,
    /// Tile coder for diff_q_lfa.
    pub tilings: usize,
    pub tiles: usize,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub eval_every: usize,
    pub metrics: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: "two_loop".into(),
            env_params: None,
            algorithm: Algorithm::DiffQ,
            alpha: 0.1,
            eta: None,
            beta: None,
            kappa: None,
            alpha_schedule: ScheduleShape::Constant,
            epsilon: 0.1,
            reference: None,
            target_policy: None,
            behavior_policy: None,
            selector: SelectorKind::UniformRandom,
            tie_eps: 0.0,
            tilings: 8,
            tiles: 10,
            steps: 10_000,
            runs: 1,
            seed: 0,
            eval_every: 1000,
            metrics: vec!["rbar".into()],
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every constraint and resolves names into a [`Plan`].
    pub fn plan(&self) -> Result<Plan> {
        let cfg = Error::Config;
        let algo = self.algorithm;
        if self.steps == 0 {
            return Err(cfg("steps must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(cfg("eval_every must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(cfg("alpha must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(cfg("epsilon must lie in [0, 1]".into()));
        }
        if !(self.tie_eps >= 0.0) {
            return Err(cfg("tie_eps must be non-negative".into()));
        }
        let alpha_kind = self.alpha_schedule.with_scale(self.alpha);
        alpha_kind.validate().map_err(|e| cfg(e.to_string()))?;

        let eta = match (algo.uses_eta(), self.eta) {
            (true, Some(e)) if e > 0.0 && e.is_finite() => Some(e),
            (true, Some(_)) => return Err(cfg("eta must be positive".into())),
            (true, None) => return Err(cfg(format!("{algo} requires eta"))),
            (false, Some(_)) => return Err(cfg(format!("{algo} takes no eta"))),
            (false, None) => None,
        };
        let centered = if algo.is_centered() {
            let beta = self.beta.ok_or_else(|| cfg(format!("{algo} requires beta")))?;
            let kappa = self.kappa.ok_or_else(|| cfg(format!("{algo} requires kappa")))?;
            if !(beta > 0.0 && kappa > 0.0) {
                return Err(cfg("beta and kappa must be positive".into()));
            }
            Some((self.alpha_schedule.with_scale(beta), kappa))
        } else {
            if self.beta.is_some() || self.kappa.is_some() {
                return Err(cfg(format!("{algo} takes no beta or kappa")));
            }
            None
        };
        let reference = match (algo, &self.reference) {
            (Algorithm::RviQ, Some(r)) => Some(r.parse::<ReferenceFunction>().map_err(|e| cfg(e.to_string()))?),
            (Algorithm::RviQ, None) => return Err(cfg("rvi_q requires a reference".into())),
            (_, Some(_)) => return Err(cfg(format!("{algo} takes no reference"))),
            (_, None) => None,
        };
        if !algo.is_prediction() && (self.target_policy.is_some() || self.behavior_policy.is_some()) {
            return Err(cfg(format!("{algo} takes no target or behavior policy")));
        }

        let mut metrics = Vec::new();
        for m in &self.metrics {
            let m: MetricSpec = m.parse()?;
            if !metrics.contains(&m) {
                metrics.push(m);
            }
        }

        let env = if algo == Algorithm::DiffQLfa {
            if self.env != "track1d" {
                return Err(cfg("diff_q_lfa runs on track1d only".into()));
            }
            let track: Track1d = match &self.env_params {
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| cfg(format!("env_params: {e}")))?,
                None => Track1d::default(),
            };
            track.validate()?;
            if self.tilings == 0 || self.tiles == 0 {
                return Err(cfg("tilings and tiles must be positive".into()));
            }
            if metrics.iter().any(|m| m.needs_oracle()) {
                return Err(cfg("track1d has no oracle; use rbar or window_rate".into()));
            }
            EnvPlan::Track1d(track)
        } else {
            let mut env: TabularEnv = self.env.parse()?;
            if let Some(v) = &self.env_params {
                match &mut env {
                    TabularEnv::AccessControl(p) => {
                        *p = serde_json::from_value::<AccessControlParams>(v.clone())
                            .map_err(|e| cfg(format!("env_params: {e}")))?;
                        p.validate()?;
                    }
                    _ => return Err(cfg(format!("{} takes no parameters", env.name()))),
                }
            }
            let mdp = env.build()?;
            if let Some(r) = &reference {
                let q = crate::control::QTable::zeros(&mdp);
                r.check(&q).map_err(|e| cfg(e.to_string()))?;
            }
            EnvPlan::Tabular { env, mdp }
        };

        let policies = match (&env, algo.is_prediction()) {
            (EnvPlan::Tabular { mdp, .. }, true) => {
                let target: PolicySpec = self.target_policy.as_deref().unwrap_or("uniform").parse()?;
                let behavior: PolicySpec = match &self.behavior_policy {
                    Some(b) => b.parse()?,
                    None => target.clone(),
                };
                if algo == Algorithm::AvgcostTd && behavior != target {
                    return Err(cfg("avgcost_td is on-policy only".into()));
                }
                let pi = target.resolve(mdp)?;
                let b = behavior.resolve(mdp)?;
                crate::prediction::check_coverage(&pi, &b).map_err(|e| cfg(e.to_string()))?;
                Some((pi, b))
            }
            _ => None,
        };

        Ok(Plan {
            config: self.clone(),
            algorithm: algo,
            env,
            alpha: alpha_kind,
            eta,
            centered,
            reference,
            policies,
            metrics,
        })
    }
}

#[derive(Debug, Clone)]
pub enum EnvPlan {
    Tabular { env: TabularEnv, mdp: TabularMdp },
    Track1d(Track1d),
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ExperimentConfig,
    pub algorithm: Algorithm,
    pub env: EnvPlan,
    pub alpha: ScheduleKind,
    pub eta: Option<f64>,
    /// Second-estimator schedule and κ.
    pub centered: Option<(ScheduleKind, f64)>,
    pub reference: Option<ReferenceFunction>,
    /// `(target, behavior)`.
    pub policies: Option<(Policy, Policy)>,
    pub metrics: Vec<MetricSpec>,
}

impl Plan {
    pub fn schedule(&self, kind: ScheduleKind, n_keys: usize) -> StepSizeSchedule {
        StepSizeSchedule::new(kind, n_keys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.name()));
        }
        assert!("q_learning".parse::<Algorithm>().is_err());
    }

    #[test]
    fn schedule_shapes() {
        assert_eq!("constant".parse::<ScheduleShape>().unwrap(), ScheduleShape::Constant);
        assert_eq!("exp_decay:0.9995".parse::<ScheduleShape>().unwrap(), ScheduleShape::ExpDecay(0.9995));
        assert_eq!("per_pair_count".parse::<ScheduleShape>().unwrap(), ScheduleShape::PerPairCount(1.0));
        assert_eq!("per_pair_count:0.7".parse::<ScheduleShape>().unwrap(), ScheduleShape::PerPairCount(0.7));
        assert!("exp_decay".parse::<ScheduleShape>().is_err());
        assert!("cosine".parse::<ScheduleShape>().is_err());
        let s = ScheduleShape::ExpDecay(0.9995);
        assert_eq!(s.to_string().parse::<ScheduleShape>().unwrap(), s);
    }

    #[test]
    fn metric_names() {
        assert_eq!("window_rate(1500)".parse::<MetricSpec>().unwrap(), MetricSpec::WindowRate(1500));
        assert_eq!("window_rate:20".parse::<MetricSpec>().unwrap(), MetricSpec::WindowRate(20));
        assert!("window_rate(0)".parse::<MetricSpec>().is_err());
        assert!("regret".parse::<MetricSpec>().is_err());
        for m in [MetricSpec::RmsveTvr, MetricSpec::RmsvePlain, MetricSpec::Rre, MetricSpec::Rbar, MetricSpec::WindowRate(7)] {
            assert_eq!(m.to_string().parse::<MetricSpec>().unwrap(), m);
        }
    }

    #[test]
    fn policy_specs() {
        let m = crate::envs::build_two_loop(crate::envs::TwoLoopVariant::Standard);
        let p = "probs:0.9,0.1".parse::<PolicySpec>().unwrap().resolve(&m).unwrap();
        assert_eq!(p.row(0), &[0.9, 0.1]);
        assert_eq!(p.row(3), &[1.0]);
        let p = "always:1".parse::<PolicySpec>().unwrap().resolve(&m).unwrap();
        assert_eq!(p.row(0), &[0.0, 1.0]);
        let p = "optimal".parse::<PolicySpec>().unwrap().resolve(&m).unwrap();
        assert_eq!(p.row(0), &[0.0, 1.0]);
        let p = "eps_optimal:0.1".parse::<PolicySpec>().unwrap().resolve(&m).unwrap();
        assert!((p.row(0)[0] - 0.05).abs() < 1e-15);
        assert!("probs:0.5,0.5,0.5".parse::<PolicySpec>().unwrap().resolve(&m).is_err());
        assert!("probs:0.2,0.2".parse::<PolicySpec>().unwrap().resolve(&m).is_err());
        assert!("sometimes".parse::<PolicySpec>().is_err());
        assert!("eps_optimal:2".parse::<PolicySpec>().is_err());
        for s in ["uniform", "always:1", "probs:0.9,0.1", "optimal", "eps_optimal:0.1"] {
            assert_eq!(s.parse::<PolicySpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn default_config_round_trips() {
        let mut c = ExperimentConfig::default();
        assert!(c.plan().is_err());
        c.eta = Some(1.0);
        c.plan().unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn compatibility_rules() {
        let base = ExperimentConfig { eta: Some(1.0), ..Default::default() };
        let check = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = base.clone();
            f(&mut c);
            c.plan()
        };
        assert!(check(&|c| c.algorithm = Algorithm::RviQ).is_err());
        assert!(check(&|c| {
            c.algorithm = Algorithm::RviQ;
            c.eta = None;
            c.reference = Some("mean".into());
        })
        .is_ok());
        assert!(check(&|c| c.reference = Some("mean".into())).is_err());
        assert!(check(&|c| c.eta = None).is_err());
        assert!(check(&|c| c.algorithm = Algorithm::CenteredDiffQ).is_err());
        assert!(check(&|c| {
            c.algorithm = Algorithm::CenteredDiffQ;
            c.beta = Some(0.4);
            c.kappa = Some(0.125);
        })
        .is_ok());
        assert!(check(&|c| c.beta = Some(0.1)).is_err());
        assert!(check(&|c| c.target_policy = Some("uniform".into())).is_err());
        assert!(check(&|c| {
            c.algorithm = Algorithm::AvgcostTd;
            c.behavior_policy = Some("probs:0.9,0.1".into());
        })
        .is_err());
        assert!(check(&|c| {
            c.algorithm = Algorithm::DiffTd;
            c.target_policy = Some("always:0".into());
            c.behavior_policy = Some("always:1".into());
        })
        .is_err());
        assert!(check(&|c| c.algorithm = Algorithm::DiffQLfa).is_err());
        assert!(check(&|c| {
            c.algorithm = Algorithm::DiffQLfa;
            c.env = "track1d".into();
            c.metrics = vec!["rre".into()];
        })
        .is_err());
        assert!(check(&|c| c.env = "gridworld".into()).is_err());
        assert!(check(&|c| c.steps = 0).is_err());
        assert!(check(&|c| c.epsilon = 1.5).is_err());
        assert!(check(&|c| c.env_params = Some(serde_json::json!({"free_prob": 0.1}))).is_err());
        assert!(check(&|c| {
            c.env = "access_control".into();
            c.env_params = Some(serde_json::json!({"free_prob": 0.1}));
        })
        .is_ok());
        assert!(check(&|c| {
            c.algorithm = Algorithm::RviQ;
            c.eta = None;
            c.reference = Some("pair:9-0".into());
        })
        .is_err());
    }

    #[test]
    fn unknown_json_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"alpah": 0.1}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"algorithm": "rvi_q", "reference": "max"}"#).unwrap();
        assert_eq!(c.algorithm, Algorithm::RviQ);
        assert_eq!(c.alpha, 0.1);
    }
}
