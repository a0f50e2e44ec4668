//! Tile coding and Differential Q-learning with linear action values, plus
//! a small continuous tracking task to exercise them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid tile coder with uniformly offset tilings.
#[derive(Debug, Clone, PartialEq)]
pub struct TileCoder {
    tilings: usize,
    tiles_per_dim: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    tiles_per_tiling: usize,
}

impl TileCoder {
    pub fn new(tilings: usize, tiles_per_dim: Vec<usize>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if tilings == 0 {
            return Err(Error::Config("at least one tiling is required".into()));
        }
        if tiles_per_dim.is_empty() || tiles_per_dim.len() != bounds.len() {
            return Err(Error::Shape(format!(
                "{} tile counts but {} bounds",
                tiles_per_dim.len(),
                bounds.len()
            )));
        }
        if tiles_per_dim.contains(&0) {
            return Err(Error::Config("tile counts must be positive".into()));
        }
        if bounds.iter().any(|&(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::Config("bounds must be finite with low < high".into()));
        }
        let tiles_per_tiling = tiles_per_dim.iter().product();
        Ok(Self { tilings, tiles_per_dim, bounds, tiles_per_tiling })
    }

    pub fn dims(&self) -> usize {
        self.tiles_per_dim.len()
    }

    pub fn tilings(&self) -> usize {
        self.tilings
    }

    pub fn n_features(&self) -> usize {
        self.tilings * self.tiles_per_tiling
    }

    /// Active feature indices, one per tiling, ascending.
    ///
    /// Tiling `i` is displaced by `i / tilings` of a tile width in every
    /// dimension. Inputs outside the bounds are clipped.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<usize>> {
        if x.len() != self.dims() {
            return Err(Error::Shape(format!("expected {} inputs, got {}", self.dims(), x.len())));
        }
        let mut out = Vec::with_capacity(self.tilings);
        for i in 0..self.tilings {
            let shift = i as f64 / self.tilings as f64;
            let mut flat = 0;
            for ((&xi, &(lo, hi)), &n) in x.iter().zip(&self.bounds).zip(&self.tiles_per_dim) {
                let u = (xi.clamp(lo, hi) - lo) / (hi - lo) * n as f64 + shift;
                let k = (u.floor() as usize).min(n - 1);
                flat = flat * n + k;
            }
            out.push(i * self.tiles_per_tiling + flat);
        }
        Ok(out)
    }
}

/// Differential Q-learning with one weight vector per action over sparse
/// binary features.
#[derive(Debug, Clone)]
pub struct LfaDiffQ {
    pub weights: Vec<Vec<f64>>,
    pub rbar: f64,
    /// Effective step size applied to each active feature.
    pub alpha: f64,
    pub eta: f64,
    diverged: bool,
}

impl LfaDiffQ {
    pub fn new(n_features: usize, n_actions: usize, alpha: f64, eta: f64) -> Self {
        Self { weights: vec![vec![0.0; n_features]; n_actions], rbar: 0.0, alpha, eta, diverged: false }
    }

    /// Learner for `coder`'s features with `alpha` divided by the number of
    /// tilings.
    pub fn for_tiles(coder: &TileCoder, n_actions: usize, alpha: f64, eta: f64) -> Self {
        Self::new(coder.n_features(), n_actions, alpha / coder.tilings() as f64, eta)
    }

    pub fn n_actions(&self) -> usize {
        self.weights.len()
    }

    /// `w_aᵀ x` for the active set `x`.
    pub fn value(&self, x: &[usize], a: usize) -> f64 {
        let w = &self.weights[a];
        match x.split_first() {
            None => 0.0,
            Some((&first, rest)) => rest.iter().fold(w[first], |acc, &i| acc + w[i]),
        }
    }

    /// Greedy action among the first `n_actions`, lowest index on ties.
    pub fn greedy(&self, x: &[usize], n_actions: usize) -> usize {
        let mut best = 0;
        let mut best_v = self.value(x, 0);
        for a in 1..n_actions {
            let v = self.value(x, a);
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }

    pub fn epsilon_greedy<R: Rng + ?Sized>(&self, x: &[usize], n_actions: usize, epsilon: f64, rng: &mut R) -> usize {
        if n_actions == 1 {
            return 0;
        }
        if rng.random::<f64>() < epsilon {
            rng.random_range(0..n_actions)
        } else {
            self.greedy(x, n_actions)
        }
    }

    /// One update from features `x`, action `a`, reward `r` and next
    /// features `x_next`, where only the first `next_actions` actions are
    /// available. Returns the TD error.
    pub fn step(&mut self, x: &[usize], a: usize, r: f64, x_next: &[usize], next_actions: usize) -> f64 {
        let next_max = (0..next_actions).map(|b| self.value(x_next, b)).fold(f64::NEG_INFINITY, f64::max);
        let delta = r - self.rbar + next_max - self.value(x, a);
        let w = &mut self.weights[a];
        for &i in x {
            w[i] += self.alpha * delta;
        }
        self.rbar += self.eta * self.alpha * delta;
        if !(self.rbar.is_finite() && x.iter().all(|&i| w[i].is_finite())) {
            self.diverged = true;
        }
        delta
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }
}

/// One-dimensional tracking task: the agent moves left, stays or moves
/// right by `step` within `[0, 1]` and pays its distance to a fixed target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Track1d {
    pub target: f64,
    pub step: f64,
}

impl Default for Track1d {
    fn default() -> Self {
        Self { target: 0.7, step: 0.05 }
    }
}

impl Track1d {
    pub const N_ACTIONS: usize = 3;

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.target) || !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::Config("track1d needs target in [0, 1] and step in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random::<f64>()
    }

    /// Returns `(next position, reward)`; reward is computed at the new
    /// position.
    pub fn transition(&self, pos: f64, action: usize) -> (f64, f64) {
        let dir = action as f64 - 1.0;
        let next = (pos + dir * self.step).clamp(0.0, 1.0);
        (next, -(next - self.target).abs())
    }
}

/// Settings for a tile-coded run on [`Track1d`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LfaRunConfig {
    pub tilings: usize,
    pub tiles: usize,
    pub alpha: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub env: Track1d,
}

impl Default for LfaRunConfig {
    fn default() -> Self {
        Self { tilings: 8, tiles: 10, alpha: 0.05, eta: 0.5, epsilon: 0.1, env: Track1d::default() }
    }
}

/// Runs `steps` steps and returns the reward sequence. With `learn` off the
/// agent picks uniformly at random.
pub fn run_track1d<R: Rng + ?Sized>(
    cfg: &LfaRunConfig,
    steps: usize,
    learn: bool,
    rng: &mut R,
) -> Result<(Vec<f64>, LfaDiffQ)> {
    cfg.env.validate()?;
    let coder = TileCoder::new(cfg.tilings, vec![cfg.tiles], vec![(0.0, 1.0)])?;
    let mut agent = LfaDiffQ::for_tiles(&coder, Track1d::N_ACTIONS, cfg.alpha, cfg.eta);
    let mut pos = cfg.env.start(rng);
    let mut x = coder.encode(&[pos])?;
    let mut rewards = Vec::with_capacity(steps);
    for _ in 0..steps {
        let a = if learn {
            agent.epsilon_greedy(&x, Track1d::N_ACTIONS, cfg.epsilon, rng)
        } else {
            rng.random_range(0..Track1d::N_ACTIONS)
        };
        let (next, r) = cfg.env.transition(pos, a);
        let x_next = coder.encode(&[next])?;
        if learn {
            agent.step(&x, a, r, &x_next, Track1d::N_ACTIONS);
        }
        rewards.push(r);
        pos = next;
        x = x_next;
    }
    Ok((rewards, agent))
}
