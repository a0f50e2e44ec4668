//! Cross-product parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{EnvPlan, ExperimentConfig, Plan};
use super::output::format_g9;
use super::run::{run_plan, RunLog};
use crate::error::{Error, Result};
use crate::metrics::mean_stderr;

/// Base configuration plus named axes. JSON form:
/// `{"base": {..}, "grid": {"alpha": [0.1, 0.2], "reference": ["pair:all"]}}`.
/// Axes are taken in name order; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub grid: serde_json::Map<String, Value>,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep: {e}")))
    }

    /// Adds an axis from `name=v1,v2,..`. Values that parse as JSON are
    /// taken as such, anything else as a string.
    pub fn add_axis(&mut self, spec: &str) -> Result<()> {
        let (name, values) =
            spec.split_once('=').ok_or_else(|| Error::Config(format!("grid axis '{spec}' needs name=values")))?;
        let name = name.trim().replace('-', "_");
        let values: Vec<Value> = if values.trim().is_empty() {
            Vec::new()
        } else {
            split_values(values)
                .into_iter()
                .map(|v| serde_json::from_str(&v).unwrap_or(Value::String(v)))
                .collect()
        };
        self.grid.insert(name, Value::Array(values));
        Ok(())
    }

    /// Every cell in grid order. `pair:all` in a `reference` axis expands
    /// to one value per state–action pair of the base environment.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.grid.is_empty() {
            return Ok(Vec::new());
        }
        let mut axes: Vec<(String, Vec<Value>)> = Vec::new();
        for (name, values) in &self.grid {
            let Value::Array(values) = values else {
                return Err(Error::Config(format!("grid axis '{name}' must be a list")));
            };
            let mut expanded = Vec::new();
            for v in values {
                if name == "reference" && v.as_str() == Some("pair:all") {
                    expanded.extend(all_pairs(&self.base)?);
                } else {
                    expanded.push(v.clone());
                }
            }
            axes.push((name.clone(), expanded));
        }
        let base = serde_json::to_value(&self.base).expect("config serializes");
        let mut cells = Vec::new();
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        for mut k in 0..total {
            let mut params = vec![(String::new(), Value::Null); axes.len()];
            for (i, (name, values)) in axes.iter().enumerate().rev() {
                params[i] = (name.clone(), values[k % values.len()].clone());
                k /= values.len();
            }
            let mut doc = base.clone();
            for (name, v) in &params {
                doc[name.as_str()] = v.clone();
            }
            let config: ExperimentConfig =
                serde_json::from_value(doc).map_err(|e| Error::Config(format!("grid cell {}: {e}", label(&params))))?;
            cells.push(Cell { params: params.iter().map(|(n, v)| (n.clone(), value_text(v))).collect(), config });
        }
        Ok(cells)
    }
}

fn split_values(s: &str) -> Vec<String> {
    // commas inside brackets belong to the value (e.g. probs lists are
    // written with ';' on the command line, JSON arrays with brackets)
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '[' | '{' | '(' => depth += 1,
            ']' | '}' | ')' => depth -= 1,
            _ => {}
        }
        if c == ',' && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    out.push(cur.trim().to_string());
    out
}

fn all_pairs(base: &ExperimentConfig) -> Result<Vec<Value>> {
    let mut probe = base.clone();
    probe.reference = None;
    probe.algorithm = super::config::Algorithm::DiffQ;
    probe.eta = Some(1.0);
    probe.beta = None;
    probe.kappa = None;
    probe.target_policy = None;
    probe.behavior_policy = None;
    probe.metrics = Vec::new();
    let EnvPlan::Tabular { mdp, .. } = probe.plan()?.env else {
        return Err(Error::Config("pair:all needs a tabular environment".into()));
    };
    Ok((0..mdp.n_pairs())
        .map(|i| {
            let (s, a) = mdp.pair_of(i);
            Value::String(format!("pair:{s}-{a}"))
        })
        .collect())
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "null".into(),
        other => other.to_string(),
    }
}

fn label(params: &[(String, Value)]) -> String {
    params.iter().map(|(n, v)| format!("{n}={}", value_text(v))).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// `(axis, value)` in axis order.
    pub params: Vec<(String, String)>,
    pub config: ExperimentConfig,
}

impl Cell {
    /// File-system friendly name from the sorted parameter values.
    pub fn file_stem(&self) -> String {
        let mut parts: Vec<String> = self.params.iter().map(|(n, v)| format!("{n}={v}")).collect();
        parts.sort();
        parts
            .join("_")
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '_' })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: Vec<(String, String)>,
    pub statistic: String,
    pub mean: f64,
    pub stderr: f64,
    pub runs: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub cells: Vec<Cell>,
    pub rows: Vec<SweepRow>,
    pub logs: Vec<RunLog>,
}

impl SweepResult {
    pub fn table_csv(&self) -> String {
        let mut header: Vec<String> = self.axes.clone();
        header.extend(["statistic", "mean", "stderr", "runs", "diverged"].map(String::from));
        let mut out = header.join(",") + "\n";
        for r in &self.rows {
            let mut fields: Vec<String> = r.params.iter().map(|(_, v)| csv_field(v)).collect();
            fields.push(r.statistic.clone());
            fields.push(format_g9(r.mean));
            fields.push(format_g9(r.stderr));
            fields.push(r.runs.to_string());
            fields.push(r.diverged.to_string());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Summary statistic of one run: reward averaged over all steps for
/// control, the averaged RMSVE(TVR) (else RRE) for prediction.
fn statistic(plan: &Plan) -> &'static str {
    if plan.algorithm.is_prediction() {
        let names: Vec<String> = plan.metrics.iter().map(|m| m.to_string()).collect();
        if names.iter().any(|n| n == "rmsve_tvr") {
            return "rmsve_tvr";
        }
        if names.iter().any(|n| n == "rre") {
            return "rre";
        }
    }
    "mean_reward"
}

/// Validates every cell, then runs them in parallel and aggregates in grid
/// order.
pub fn sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepResult> {
    let cells = spec.cells()?;
    let plans: Vec<Plan> = cells
        .iter()
        .map(|c| c.config.plan().map_err(|e| Error::Config(format!("cell {}: {e}", c.file_stem()))))
        .collect::<Result<_>>()?;
    let work = || -> Result<Vec<RunLog>> { plans.par_iter().map(|p| run_plan(p, None)).collect() };
    let logs = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let rows = cells
        .iter()
        .zip(&plans)
        .zip(&logs)
        .map(|((cell, plan), log)| {
            let stat = statistic(plan);
            let xs: Vec<f64> = log
                .runs
                .iter()
                .map(|r| if stat == "mean_reward" { r.mean_reward } else { r.metric_means[stat] })
                .collect();
            let (mean, stderr) = mean_stderr(&xs);
            SweepRow {
                params: cell.params.clone(),
                statistic: stat.to_string(),
                mean,
                stderr,
                runs: xs.len(),
                diverged: log.n_diverged(),
            }
        })
        .collect();
    Ok(SweepResult { axes: spec.grid.keys().cloned().collect(), cells, rows, logs })
}
