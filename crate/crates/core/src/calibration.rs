//! Weighted calibrated forecasting over a finite grid of distributions.
//!
//! Forecasts are produced by internal-regret matching on the Brier loss.
//! The played distribution over grid cells is the stationary law of the
//! regret-matching transport matrix, solved directly and polished by
//! power iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::WeightSequence;
use crate::geometry::{l1_covering_constant, solve_linear, SimplexGrid};

const POWER_TOL: f64 = 1e-12;
const POWER_ITERS: usize = 20_000;

#[derive(Debug, Clone)]
pub struct Calibrator {
    n_states: usize,
    grid: SimplexGrid,
    eps: f64,
    mass: Vec<f64>,
    tally: Vec<Vec<f64>>,
    regret: Vec<Vec<f64>>,
    q: Vec<f64>,
    stale: bool,
    pending: Option<usize>,
    stage: usize,
    total_weight: f64,
    sum_sq: f64,
    rng: ChaCha8Rng,
}

impl Calibrator {
    /// Calibrator on the uniform grid over `n_states` states with l1
    /// covering radius at most `eps`.
    pub fn new(n_states: usize, eps: f64, seed: u64) -> Result<Self> {
        Ok(Self::with_grid(SimplexGrid::new(n_states, eps)?, seed))
    }

    pub fn with_grid(grid: SimplexGrid, seed: u64) -> Self {
        let k = grid.len();
        let n = grid.n;
        Self {
            n_states: n,
            eps: l1_covering_constant(n) / grid.denominator as f64,
            grid,
            mass: vec![0.0; k],
            tally: vec![vec![0.0; n]; k],
            regret: vec![vec![0.0; k]; k],
            q: vec![1.0 / k as f64; k],
            stale: false,
            pending: None,
            stage: 0,
            total_weight: 0.0,
            sum_sq: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn grid(&self) -> &SimplexGrid {
        &self.grid
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.grid.points[k]
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Law of the next prediction.
    pub fn distribution(&mut self) -> &[f64] {
        self.refresh();
        &self.q
    }

    /// Expected forecast `sum_k q_k p_k`.
    pub fn mean_forecast(&mut self) -> Vec<f64> {
        self.refresh();
        let mut m = vec![0.0; self.n_states];
        for (qk, p) in self.q.iter().zip(&self.grid.points) {
            for (o, v) in m.iter_mut().zip(p) {
                *o += qk * v;
            }
        }
        m
    }

    /// Samples the cell for the current stage. Repeated calls before the
    /// matching update return the same cell.
    pub fn predict(&mut self) -> usize {
        if let Some(k) = self.pending {
            return k;
        }
        self.refresh();
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut k = self.q.len() - 1;
        for (idx, &p) in self.q.iter().enumerate() {
            acc += p;
            if u < acc {
                k = idx;
                break;
            }
        }
        self.pending = Some(k);
        k
    }

    /// Reveals the state and weight of the predicted stage.
    pub fn update(&mut self, state: usize, theta: f64) -> Result<()> {
        let k = self
            .pending
            .take()
            .ok_or_else(|| Error::Calibration("update without a matching predict".into()))?;
        if state >= self.n_states {
            self.pending = Some(k);
            return Err(Error::Calibration(format!("state {state} out of range")));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            self.pending = Some(k);
            return Err(Error::Calibration(format!(
                "weight {theta} must be nonnegative"
            )));
        }
        self.stage += 1;
        if theta == 0.0 {
            return Ok(());
        }
        self.mass[k] += theta;
        self.tally[k][state] += theta;
        self.total_weight += theta;
        self.sum_sq += theta * theta;
        let loss: Vec<f64> = self
            .grid
            .points
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(w, v)| {
                        let e = if w == state { 1.0 } else { 0.0 };
                        (v - e) * (v - e)
                    })
                    .sum()
            })
            .collect();
        for a in 0..self.q.len() {
            let wa = theta * self.q[a];
            if wa == 0.0 {
                continue;
            }
            for b in 0..self.q.len() {
                self.regret[a][b] += wa * (loss[a] - loss[b]);
            }
        }
        self.stale = true;
        Ok(())
    }

    fn transport(&self) -> Option<Vec<Vec<f64>>> {
        let k = self.q.len();
        let pos: Vec<Vec<f64>> = self
            .regret
            .iter()
            .map(|r| r.iter().map(|v| v.max(0.0)).collect())
            .collect();
        let mu = pos
            .iter()
            .enumerate()
            .map(|(a, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(b, _)| *b != a)
                    .map(|(_, v)| v)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if mu <= 0.0 {
            return None;
        }
        let mut p = vec![vec![0.0; k]; k];
        for a in 0..k {
            let mut off = 0.0;
            for b in 0..k {
                if a != b {
                    p[a][b] = pos[a][b] / mu;
                    off += p[a][b];
                }
            }
            p[a][a] = 1.0 - off;
        }
        Some(p)
    }

    fn refresh(&mut self) {
        if !self.stale {
            return;
        }
        self.stale = false;
        let Some(p) = self.transport() else {
            return;
        };
        let k = self.q.len();
        let mut q = stationary_direct(&p).unwrap_or_else(|| self.q.clone());
        for _ in 0..POWER_ITERS {
            let mut next = vec![0.0; k];
            for a in 0..k {
                if q[a] != 0.0 {
                    for b in 0..k {
                        next[b] += q[a] * p[a][b];
                    }
                }
            }
            let s: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= s);
            let diff: f64 = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
            q = next;
            if diff < POWER_TOL {
                break;
            }
        }
        self.q = q;
    }

    /// l1 residual of `q P = q` for the current law.
    pub fn stationary_residual(&mut self) -> f64 {
        self.refresh();
        let Some(p) = self.transport() else {
            return 0.0;
        };
        let k = self.q.len();
        (0..k)
            .map(|b| ((0..k).map(|a| self.q[a] * p[a][b]).sum::<f64>() - self.q[b]).abs())
            .sum()
    }

    pub fn cell_mass(&self, k: usize) -> f64 {
        self.mass[k]
    }

    /// Weighted empirical state distribution of cell `k`.
    pub fn empirical(&self, k: usize) -> Option<Vec<f64>> {
        (self.mass[k] > 0.0).then(|| self.tally[k].iter().map(|v| v / self.mass[k]).collect())
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// `max_k W_k (|p_k - w_k|_1 - eps)_+`.
    pub fn score(&self) -> f64 {
        (0..self.len())
            .filter_map(|k| {
                let w = self.empirical(k)?;
                let d: f64 = self.grid.points[k]
                    .iter()
                    .zip(&w)
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                Some(self.mass[k] * (d - self.eps).max(0.0))
            })
            .fold(0.0, f64::max)
    }

    /// `sqrt(8 |states| sum theta^2)` over the stages seen so far.
    pub fn bound(&self) -> f64 {
        (8.0 * self.n_states as f64 * self.sum_sq).sqrt()
    }
}

fn stationary_direct(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = p.len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for row in 0..k - 1 {
        for col in 0..k {
            a[row][col] = p[col][row] - if row == col { 1.0 } else { 0.0 };
        }
    }
    a[k - 1] = vec![1.0; k];
    b[k - 1] = 1.0;
    let q = solve_linear(a, b)?;
    q.iter()
        .all(|v| *v > -1e-9)
        .then(|| q.iter().map(|v| v.max(0.0)).collect())
}

/// State generators for exercising a calibrator.
#[derive(Debug, Clone)]
pub enum Nature {
    Constant(usize),
    Iid(Vec<f64>),
    /// The state least expected under the current mean forecast.
    Adversarial,
}

impl Nature {
    pub fn parse(s: &str, n_states: usize) -> Result<Self> {
        match s {
            "adversarial" => Ok(Nature::Adversarial),
            "iid" => Ok(Nature::Iid(vec![1.0 / n_states as f64; n_states])),
            _ => {
                let k = s
                    .strip_prefix("constant:")
                    .and_then(|v| v.parse::<usize>().ok())
                    .filter(|k| *k < n_states)
                    .ok_or_else(|| Error::Parse(format!("unknown nature `{s}`")))?;
                Ok(Nature::Constant(k))
            }
        }
    }

    pub fn next_state<R: Rng>(&self, cal: &mut Calibrator, rng: &mut R) -> usize {
        match self {
            Nature::Constant(k) => *k,
            Nature::Iid(p) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (k, v) in p.iter().enumerate() {
                    acc += v;
                    if u < acc {
                        return k;
                    }
                }
                p.len() - 1
            }
            Nature::Adversarial => {
                let m = cal.mean_forecast();
                let mut best = 0;
                for (k, v) in m.iter().enumerate() {
                    if *v < m[best] {
                        best = k;
                    }
                }
                best
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorePoint {
    pub t: usize,
    pub score: f64,
    pub bound: f64,
}

/// Runs a calibrator against a nature, recording score and bound every
/// `every` stages and at the last stage.
pub fn run_demo(
    n_states: usize,
    eps: f64,
    theta: &WeightSequence,
    nature: &Nature,
    seed: u64,
    every: usize,
) -> Result<Vec<ScorePoint>> {
    let horizon = theta
        .horizon()
        .unwrap_or_else(|| (1..).find(|&t| theta.tail(t) < 1e-6).unwrap_or(1));
    let mut cal = Calibrator::new(n_states, eps, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = Vec::new();
    for t in 1..=horizon {
        cal.predict();
        let w = nature.next_state(&mut cal, &mut rng);
        cal.update(w, theta.weight(t))?;
        if t % every.max(1) == 0 || t == horizon {
            out.push(ScorePoint {
                t,
                score: cal.score(),
                bound: cal.bound(),
            });
        }
    }
    Ok(out)
}
