//! Seeded multi-run execution of one configuration.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Algorithm, EnvPlan, ExperimentConfig, MetricSpec, Plan};
use super::output::format_g9;
use crate::control::{epsilon_greedy, greedy_action, CenteredDiffQ, ControlLearner, DiffQ, QTable, RviQ};
use crate::error::{Error, Result};
use crate::lfa::{LfaDiffQ, TileCoder, Track1d};
use crate::mdp::{sample_transition, seeded_rng, Policy, SimRng, StepSizeSchedule, TabularMdp, Transition};
use crate::metrics::{rmsve_plain, rmsve_tvr, EvalContext};
use crate::planning::{diffq_planning_step, difftd_planning_step, PlanningSelector};
use crate::prediction::{importance_ratio, AvgCostTd, CenteredDiffTd, DiffTd, PredictionLearner};
use crate::solvers::{solve_optimal, DEFAULT_TOL};

/// Largest per-entry change between evaluations still counted as converged.
pub const CONVERGED_TOL: f64 = 1e-9;

/// `z ↦ splitmix64(z)`, the finalizer used to derive per-run seeds.
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run_index`: `seed XOR splitmix64(run_index)`.
pub fn run_seed(seed: u64, run_index: usize) -> u64 {
    seed ^ splitmix64(run_index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub run: usize,
    pub step: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    Running,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub steps_done: usize,
    /// Reward averaged over every step taken.
    pub mean_reward: f64,
    pub final_rbar: f64,
    /// Learned table (values, action values or weights), flattened.
    pub final_values: Vec<f64>,
    /// Centered estimate for the centered learners.
    pub final_centered: Option<Vec<f64>>,
    /// Greedy action per state for tabular control.
    pub greedy_actions: Option<Vec<usize>>,
    /// Each recorded metric averaged over its evaluation points.
    pub metric_means: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
    pub runs: Vec<RunSummary>,
}

impl RunLog {
    /// `run,step,metric,value` with nine significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,step,metric,value\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.run, r.step, r.metric, format_g9(r.value)));
        }
        out
    }

    /// Values of `metric` at `step`, one per run that reached it.
    pub fn values_at(&self, metric: &str, step: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.metric == metric && r.step == step).map(|r| r.value).collect()
    }

    pub fn n_diverged(&self) -> usize {
        self.runs.iter().filter(|r| r.status == RunStatus::Diverged).count()
    }
}

/// Validates `cfg` and runs it on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunLog> {
    run_plan(&cfg.plan()?, None)
}

/// Oracle reference shared read-only by every run.
pub fn oracle_for(plan: &Plan) -> Result<Option<EvalContext>> {
    if !plan.metrics.iter().any(|m| m.needs_oracle()) {
        return Ok(None);
    }
    let EnvPlan::Tabular { mdp, .. } = &plan.env else {
        return Err(Error::Config("oracle metrics need a tabular environment".into()));
    };
    let ctx = match &plan.policies {
        Some((pi, _)) => EvalContext::for_states(mdp, pi)?,
        None => {
            let sol = solve_optimal(mdp, DEFAULT_TOL)?;
            EvalContext::from_action_solution(&sol.chain, &sol.greedy_policy)?
        }
    };
    Ok(Some(ctx))
}

/// Runs every run of `plan`; with `jobs` set, on a dedicated pool of that
/// size. Output is independent of the degree of parallelism.
pub fn run_plan(plan: &Plan, jobs: Option<usize>) -> Result<RunLog> {
    let oracle = oracle_for(plan)?;
    let work = || -> Result<Vec<(Vec<LogRow>, RunSummary)>> {
        (0..plan.config.runs).into_par_iter().map(|i| run_single(plan, oracle.as_ref(), i)).collect()
    };
    let results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut rows = Vec::new();
    let mut runs = Vec::with_capacity(results.len());
    for (r, s) in results {
        rows.extend(r);
        runs.push(s);
    }
    Ok(RunLog { rows, runs })
}

enum Agent {
    Control(Box<dyn ControlLearner + Send>),
    ControlPlan(DiffQ, PlanningSelector),
    Prediction(Box<dyn PredictionLearner + Send>),
    PredictionPlan(DiffTd, PlanningSelector),
    Lfa { learner: LfaDiffQ, coder: TileCoder, env: Track1d },
}

impl Agent {
    fn values(&self) -> Vec<f64> {
        match self {
            Agent::Control(l) => l.q().as_slice().to_vec(),
            Agent::ControlPlan(l, _) => l.q.as_slice().to_vec(),
            Agent::Prediction(l) => l.values().to_vec(),
            Agent::PredictionPlan(l, _) => l.v.clone(),
            Agent::Lfa { learner, .. } => learner.weights.iter().flatten().copied().collect(),
        }
    }

    fn centered(&self) -> Option<Vec<f64>> {
        match self {
            Agent::Control(l) => l.centered(),
            Agent::Prediction(l) => l.centered(),
            _ => None,
        }
    }

    fn rbar(&self) -> f64 {
        match self {
            Agent::Control(l) => l.reward_rate_estimate(),
            Agent::ControlPlan(l, _) => l.rbar,
            Agent::Prediction(l) => l.reward_rate_estimate(),
            Agent::PredictionPlan(l, _) => l.rbar,
            Agent::Lfa { learner, .. } => learner.rbar,
        }
    }

    fn diverged(&self) -> bool {
        match self {
            Agent::Control(l) => l.diverged(),
            Agent::ControlPlan(l, _) => l.diverged(),
            Agent::Prediction(l) => l.diverged(),
            Agent::PredictionPlan(l, _) => l.diverged(),
            Agent::Lfa { learner, .. } => learner.diverged(),
        }
    }

    fn q_table(&self) -> Option<&QTable> {
        match self {
            Agent::Control(l) => Some(l.q()),
            Agent::ControlPlan(l, _) => Some(&l.q),
            _ => None,
        }
    }
}

fn build_agent(plan: &Plan) -> Result<Agent> {
    let eta = plan.eta.unwrap_or(0.0);
    let sched = StepSizeSchedule::new;
    let selector = || PlanningSelector::new(plan.config.selector);
    if let EnvPlan::Track1d(env) = &plan.env {
        let coder = TileCoder::new(plan.config.tilings, vec![plan.config.tiles], vec![(0.0, 1.0)])?;
        let learner = LfaDiffQ::for_tiles(&coder, Track1d::N_ACTIONS, plan.config.alpha, eta);
        return Ok(Agent::Lfa { learner, coder, env: *env });
    }
    let EnvPlan::Tabular { mdp, .. } = &plan.env else { unreachable!() };
    let (n_pairs, n_states) = (mdp.n_pairs(), mdp.n_states());
    Ok(match plan.algorithm {
        Algorithm::DiffQ => Agent::Control(Box::new(DiffQ::zeros(mdp, eta, sched(plan.alpha, n_pairs)))),
        Algorithm::RviQ => {
            let reference = plan.reference.expect("validated");
            Agent::Control(Box::new(RviQ::zeros(mdp, reference, sched(plan.alpha, n_pairs))?))
        }
        Algorithm::CenteredDiffQ => {
            let (beta, kappa) = plan.centered.expect("validated");
            let mut l = CenteredDiffQ::zeros(mdp, eta, sched(plan.alpha, n_pairs), kappa, sched(beta, n_pairs));
            l.tie_eps = plan.config.tie_eps;
            Agent::Control(Box::new(l))
        }
        Algorithm::DiffQPlan => Agent::ControlPlan(DiffQ::zeros(mdp, eta, sched(plan.alpha, n_pairs)), selector()),
        Algorithm::DiffTd => Agent::Prediction(Box::new(DiffTd::zeros(n_states, eta, sched(plan.alpha, n_states)))),
        Algorithm::AvgcostTd => {
            Agent::Prediction(Box::new(AvgCostTd::zeros(n_states, eta, sched(plan.alpha, n_states))))
        }
        Algorithm::CenteredDiffTd => {
            let (beta, kappa) = plan.centered.expect("validated");
            Agent::Prediction(Box::new(CenteredDiffTd::zeros(
                n_states,
                eta,
                sched(plan.alpha, n_states),
                kappa,
                sched(beta, n_states),
            )))
        }
        Algorithm::DiffTdPlan => {
            Agent::PredictionPlan(DiffTd::zeros(n_states, eta, sched(plan.alpha, n_states)), selector())
        }
        Algorithm::DiffQLfa => return Err(Error::Config("diff_q_lfa runs on track1d only".into())),
    })
}

/// Position of the agent in its environment.
enum Position {
    State(usize),
    Track(f64, Vec<usize>),
    None,
}

struct Sim<'a> {
    mdp: Option<&'a TabularMdp>,
    policies: Option<&'a (Policy, Policy)>,
    epsilon: f64,
}

impl Sim<'_> {
    /// Advances one step and returns its reward.
    fn step(&self, agent: &mut Agent, pos: &mut Position, rng: &mut SimRng) -> Result<f64> {
        match (agent, pos) {
            (Agent::Control(l), Position::State(s)) => {
                let mdp = self.mdp.expect("tabular");
                let a = epsilon_greedy(l.q(), *s, self.epsilon, rng);
                let (s2, r) = sample_transition(mdp, *s, a, rng)?;
                l.update(&Transition::new(*s, a, r, s2));
                *s = s2;
                Ok(r)
            }
            (Agent::ControlPlan(l, sel), _) => Ok(diffq_planning_step(l, self.mdp.expect("tabular"), sel, rng).reward),
            (Agent::Prediction(l), Position::State(s)) => {
                let mdp = self.mdp.expect("tabular");
                let (pi, b) = self.policies.expect("prediction policies");
                let a = b.sample_action(*s, rng);
                let rho = importance_ratio(pi, b, *s, a)?;
                let (s2, r) = sample_transition(mdp, *s, a, rng)?;
                l.update(&Transition::new(*s, a, r, s2), rho);
                *s = s2;
                Ok(r)
            }
            (Agent::PredictionPlan(l, sel), _) => {
                let (pi, b) = self.policies.expect("prediction policies");
                let (tr, _) = difftd_planning_step(l, self.mdp.expect("tabular"), b, pi, sel, rng)?;
                Ok(tr.reward)
            }
            (Agent::Lfa { learner, coder, env }, Position::Track(p, x)) => {
                let a = learner.epsilon_greedy(x, Track1d::N_ACTIONS, self.epsilon, rng);
                let (next, r) = env.transition(*p, a);
                let x_next = coder.encode(&[next])?;
                learner.step(x, a, r, &x_next, Track1d::N_ACTIONS);
                *p = next;
                *x = x_next;
                Ok(r)
            }
            _ => unreachable!("agent and position kinds always match"),
        }
    }
}

fn start_position(plan: &Plan, agent: &Agent, rng: &mut SimRng) -> Result<Position> {
    Ok(match (&plan.env, agent) {
        (_, Agent::ControlPlan(..) | Agent::PredictionPlan(..)) => Position::None,
        (EnvPlan::Tabular { env, .. }, _) => Position::State(env.start_state(rng)),
        (EnvPlan::Track1d(env), Agent::Lfa { coder, .. }) => {
            let p = env.start(rng);
            Position::Track(p, coder.encode(&[p])?)
        }
        _ => unreachable!(),
    })
}

/// Executes run `run_index` of `plan`.
pub fn run_single(plan: &Plan, oracle: Option<&EvalContext>, run_index: usize) -> Result<(Vec<LogRow>, RunSummary)> {
    let cfg = &plan.config;
    let seed = run_seed(cfg.seed, run_index);
    let mut rng = seeded_rng(seed);
    let mut agent = build_agent(plan)?;
    let mut pos = start_position(plan, &agent, &mut rng)?;
    let sim = Sim {
        mdp: match &plan.env {
            EnvPlan::Tabular { mdp, .. } => Some(mdp),
            EnvPlan::Track1d(_) => None,
        },
        policies: plan.policies.as_ref(),
        epsilon: cfg.epsilon,
    };

    let mut rewards = Vec::with_capacity(cfg.steps);
    let mut rows = Vec::new();
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut last_eval: Option<Vec<f64>> = None;
    let mut status = RunStatus::Running;

    for t in 1..=cfg.steps {
        let r = sim.step(&mut agent, &mut pos, &mut rng)?;
        rewards.push(r);
        let diverged = agent.diverged();
        if t % cfg.eval_every == 0 || t == cfg.steps || diverged {
            let values = agent.values();
            let rbar = agent.rbar();
            for m in &plan.metrics {
                let value = evaluate(*m, &agent, &values, rbar, &rewards, oracle)?;
                let name = m.to_string();
                let e = sums.entry(name.clone()).or_insert((0.0, 0));
                e.0 += value;
                e.1 += 1;
                rows.push(LogRow { run: run_index, step: t, metric: name, value });
            }
            if diverged {
                status = RunStatus::Diverged;
                break;
            }
            let mut snapshot = values;
            snapshot.push(rbar);
            status = match &last_eval {
                Some(prev) if max_abs_diff(prev, &snapshot) < CONVERGED_TOL => RunStatus::Converged,
                _ => RunStatus::Running,
            };
            last_eval = Some(snapshot);
        }
    }

    let summary = RunSummary {
        run: run_index,
        seed,
        status,
        steps_done: rewards.len(),
        mean_reward: rewards.iter().sum::<f64>() / rewards.len().max(1) as f64,
        final_rbar: agent.rbar(),
        final_values: agent.values(),
        final_centered: agent.centered(),
        greedy_actions: agent.q_table().map(|q| (0..q.n_states()).map(|s| greedy_action(q, s)).collect()),
        metric_means: sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
    };
    Ok((rows, summary))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn evaluate(
    m: MetricSpec,
    agent: &Agent,
    values: &[f64],
    rbar: f64,
    rewards: &[f64],
    oracle: Option<&EvalContext>,
) -> Result<f64> {
    let ctx = || oracle.ok_or_else(|| Error::Config(format!("metric {m} needs an oracle")));
    Ok(match m {
        MetricSpec::Rbar => rbar,
        MetricSpec::Rre => crate::metrics::rre(rbar, ctx()?),
        MetricSpec::RmsveTvr => rmsve_tvr(values, ctx()?)?,
        MetricSpec::RmsvePlain => {
            let ctx = ctx()?;
            match agent.centered() {
                Some(c) => rmsve_plain(&c, &ctx.v_ref, &ctx.d_ref)?,
                None => rmsve_plain(values, &ctx.v_ref, &ctx.d_ref)?,
            }
        }
        MetricSpec::WindowRate(w) => {
            let tail = &rewards[rewards.len().saturating_sub(w)..];
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            eta: Some(1.0),
            steps: 2000,
            runs: 3,
            seed: 42,
            eval_every: 500,
            metrics: vec!["rbar".into(), "rmsve_tvr".into(), "rre".into(), "window_rate(100)".into()],
            ..Default::default()
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(run_seed(7, 0), 7 ^ splitmix64(0));
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| run_seed(1, i)).collect();
        assert_eq!(seeds.len(), 1000);
        // reference outputs of the standard splitmix64 sequence from state 0
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn deterministic_regardless_of_jobs() {
        let plan = cfg().plan().unwrap();
        let a = run_plan(&plan, Some(1)).unwrap();
        let b = run_plan(&plan, Some(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.runs.len(), 3);
        assert_eq!(a.rows.len(), 3 * 4 * 4);
        let steps: Vec<usize> = a.rows.iter().filter(|r| r.run == 0 && r.metric == "rbar").map(|r| r.step).collect();
        assert_eq!(steps, vec![500, 1000, 1500, 2000]);
        assert!(a.rows.windows(2).all(|w| (w[0].run, w[0].step) <= (w[1].run, w[1].step)));
    }

    #[test]
    fn runs_do_not_depend_on_each_other() {
        let mut c = cfg();
        let all = run_experiment(&c).unwrap();
        c.runs = 1;
        let one = run_experiment(&c).unwrap();
        assert_eq!(one.runs[0], all.runs[0]);
    }

    #[test]
    fn final_eval_at_last_step() {
        let mut c = cfg();
        c.steps = 1234;
        let log = run_experiment(&c).unwrap();
        assert_eq!(log.values_at("rbar", 1234).len(), 3);
    }

    #[test]
    fn every_algorithm_runs() {
        for algo in Algorithm::ALL {
            let mut c = cfg();
            c.algorithm = algo;
            c.runs = 1;
            c.steps = 300;
            c.eval_every = 100;
            match algo {
                Algorithm::RviQ => {
                    c.eta = None;
                    c.reference = Some("mean".into());
                }
                Algorithm::CenteredDiffQ | Algorithm::CenteredDiffTd => {
                    c.beta = Some(0.1);
                    c.kappa = Some(0.5);
                }
                Algorithm::DiffQLfa => {
                    c.env = "track1d".into();
                    c.metrics = vec!["rbar".into(), "window_rate(50)".into()];
                }
                _ => {}
            }
            let log = run_experiment(&c).unwrap_or_else(|e| panic!("{algo}: {e}"));
            assert_eq!(log.runs[0].steps_done, 300, "{algo}");
            assert_eq!(log.runs[0].greedy_actions.is_some(), matches!(algo, Algorithm::DiffQ | Algorithm::RviQ | Algorithm::CenteredDiffQ | Algorithm::DiffQPlan), "{algo}");
            assert_eq!(log.runs[0].final_centered.is_some(), algo.is_centered(), "{algo}");
        }
    }

    #[test]
    fn divergence_is_recorded_not_fatal() {
        let mut c = cfg();
        c.alpha = 50.0;
        c.eta = Some(50.0);
        c.metrics = vec!["rbar".into()];
        let log = run_experiment(&c).unwrap();
        assert_eq!(log.n_diverged(), 3);
        assert!(log.runs.iter().all(|r| r.steps_done < 2000));
    }

    #[test]
    fn planning_runs_converge_to_oracle() {
        let mut c = cfg();
        c.algorithm = Algorithm::DiffTdPlan;
        c.steps = 20_000;
        c.runs = 2;
        c.metrics = vec!["rre".into()];
        let log = run_experiment(&c).unwrap();
        for v in log.values_at("rre", 20_000) {
            assert!(v < 0.01, "{v}");
        }
    }

    #[test]
    fn oracle_metric_needs_solvable_env() {
        let mut c = cfg();
        c.env = "two_state_transient".into();
        let err = run_experiment(&c).unwrap_err();
        assert!(err.is_solver_error(), "{err}");
        c.metrics = vec!["rbar".into()];
        run_experiment(&c).unwrap();
    }

    #[test]
    fn csv_layout() {
        let mut c = cfg();
        c.runs = 1;
        c.steps = 500;
        c.metrics = vec!["rbar".into()];
        let csv = run_experiment(&c).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("run,step,metric,value"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&row[..3], &["0", "500", "rbar"]);
        row[3].parse::<f64>().unwrap();
    }
}
