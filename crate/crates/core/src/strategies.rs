//! Behavioral strategies for both players.

use std::f64::consts::E;
use std::sync::Arc;

use crate::calibration::Calibrator;
use crate::conditions::{self, CheckParams, GridWitness, Verdict};
use crate::error::{Error, Result};
use crate::evaluator;
use crate::game::{GameSpec, MixedAction, PlayHistory, Player, WeightSequence};
use crate::geometry::{solve_min_max, SimplexGrid, TargetSet};

/// A behavioral strategy under perfect monitoring.
pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;
    fn player(&self) -> Player;
    /// Reseeds internal randomness and forgets any per-play state.
    fn reset(&mut self, seed: u64);
    /// Mixed action for stage `t` given the play before it.
    fn next_mixed(
        &mut self,
        history: &PlayHistory,
        t: usize,
        theta: &WeightSequence,
    ) -> MixedAction;
    fn as_markov(&self) -> Option<&dyn Markov> {
        None
    }
    fn box_clone(&self) -> Box<dyn Strategy>;
}

impl Clone for Box<dyn Strategy> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// Strategies whose stage-t mixed action ignores the realized history.
pub trait Markov: Send + Sync {
    fn mixed_at(&self, t: usize) -> Vec<f64>;
}

type Rule = Arc<dyn Fn(usize) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct MarkovStrategy {
    name: String,
    player: Player,
    rule: Rule,
}

impl std::fmt::Debug for MarkovStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MarkovStrategy")
            .field("name", &self.name)
            .finish()
    }
}

impl MarkovStrategy {
    pub fn from_fn(
        name: impl Into<String>,
        player: Player,
        rule: impl Fn(usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            player,
            rule: Arc::new(rule),
        }
    }

    pub fn stationary(name: impl Into<String>, player: Player, x: MixedAction) -> Self {
        let x = x.into_inner();
        Self::from_fn(name, player, move |_| x.clone())
    }

    /// Plays `stages[t-1]`, then `after` once the table runs out.
    pub fn table(
        name: impl Into<String>,
        player: Player,
        stages: Vec<Vec<f64>>,
        after: Vec<f64>,
    ) -> Self {
        Self::from_fn(name, player, move |t| {
            stages.get(t - 1).unwrap_or(&after).clone()
        })
    }
}

impl Markov for MarkovStrategy {
    fn mixed_at(&self, t: usize) -> Vec<f64> {
        (self.rule)(t)
    }
}

impl Strategy for MarkovStrategy {
    fn name(&self) -> &str {
        &self.name
    }

    fn player(&self) -> Player {
        self.player
    }

    fn reset(&mut self, _seed: u64) {}

    fn next_mixed(
        &mut self,
        _history: &PlayHistory,
        t: usize,
        _theta: &WeightSequence,
    ) -> MixedAction {
        MixedAction::from_weights(&(self.rule)(t))
    }

    fn as_markov(&self) -> Option<&dyn Markov> {
        Some(self)
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}

fn two_rows(spec: &GameSpec) -> Result<(usize, usize)> {
    if spec.n1() != 2 {
        return Err(Error::InvalidStrategy(
            "player 1 needs exactly two actions".into(),
        ));
    }
    let top = spec.index_of(Player::One, "T").unwrap_or(0);
    Ok((top, 1 - top))
}

fn place_top(top: usize, z: f64) -> Vec<f64> {
    let mut x = vec![0.0; 2];
    x[top] = z;
    x[1 - top] = 1.0 - z;
    x
}

/// The discounted strategy playing T at stage k with probability
/// `min(eps + (k-1) lambda / (1-lambda), 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaStar {
    pub lambda: f64,
    pub eps: f64,
}

impl SigmaStar {
    pub const DEFAULT_EPS: f64 = 1.0 / (2.0 * E);

    pub fn new(lambda: f64) -> Result<Self> {
        Self::with_eps(lambda, Self::DEFAULT_EPS)
    }

    pub fn with_eps(lambda: f64, eps: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidStrategy(format!(
                "lambda {lambda} outside (0, 1)"
            )));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidStrategy(format!("eps {eps} outside [0, 1]")));
        }
        Ok(Self { lambda, eps })
    }

    pub fn z(&self, k: usize) -> f64 {
        self.eps + (k - 1) as f64 * self.lambda / (1.0 - self.lambda)
    }

    pub fn z_bar(&self, k: usize) -> f64 {
        self.z(k).min(1.0)
    }

    /// The k with `z(k) <= 1 < z(k+1)`.
    pub fn k_lambda(&self) -> usize {
        let mut k = 1 + ((1.0 - self.eps) * (1.0 - self.lambda) / self.lambda).floor() as usize;
        while self.z(k) > 1.0 {
            k -= 1;
        }
        while self.z(k + 1) <= 1.0 {
            k += 1;
        }
        k
    }

    /// Closed-form payoff against R forever in the game with L quitting.
    pub fn value_vs_r(&self) -> f64 {
        let k = self.k_lambda();
        let q = 1.0 - self.lambda;
        self.eps - self.lambda * q.powi(k as i32 - 1) - q.powi(k as i32) * self.z(k)
    }

    pub fn strategy(&self, spec: &GameSpec) -> Result<MarkovStrategy> {
        let (top, _) = two_rows(spec)?;
        let s = *self;
        Ok(MarkovStrategy::from_fn(
            format!("sigma_star:lambda={}", self.lambda),
            Player::One,
            move |k| place_top(top, s.z_bar(k)),
        ))
    }
}

/// A map from [0, 1] to the probability of the top row.
#[derive(Debug, Clone)]
pub enum Xi {
    /// `(1/p)(1 - (1-t)^p)`.
    Closed { p: f64 },
    /// Values on the grid `k h`, the last entry at t = 1.
    Table {
        h: f64,
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
}

impl Xi {
    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Xi::Closed { p } => (1.0 - (1.0 - t).powf(*p)) / p,
            Xi::Table { h, values, slopes } => {
                let n = values.len() - 1;
                let pos = t / h;
                let k = (pos.floor() as usize).min(n - 1);
                let s = pos - k as f64;
                if s <= 0.0 {
                    return values[k];
                }
                if k + 1 == n {
                    return values[k] + s * (values[n] - values[k]);
                }
                let (y0, y1) = (values[k], values[k + 1]);
                let (m0, m1) = (slopes[k] * h, slopes[k + 1] * h);
                let s2 = s * s;
                let s3 = s2 * s;
                (2.0 * s3 - 3.0 * s2 + 1.0) * y0
                    + (s3 - 2.0 * s2 + s) * m0
                    + (-2.0 * s3 + 3.0 * s2) * y1
                    + (s3 - s2) * m1
            }
        }
    }
}

/// Payoffs of the 2x2 single-column game: rows (top, bottom) against the
/// quitting column and the non-quitting column.
#[derive(Debug, Clone, Copy)]
struct SingleColumn {
    top_l: f64,
    bot_l: f64,
    top_r: f64,
    bot_r: f64,
}

impl SingleColumn {
    fn from_spec(spec: &GameSpec) -> Result<(Self, usize)> {
        let (top, bot) = two_rows(spec)?;
        let q = spec.quitting(Player::Two);
        let nq = spec.non_quitting(Player::Two);
        if spec.dim() != 1
            || q.len() != 1
            || nq.len() != 1
            || !spec.quitting(Player::One).is_empty()
        {
            return Err(Error::InvalidStrategy(
                "need a one-dimensional game with two non-quitting rows, one quitting and one non-quitting column".into(),
            ));
        }
        let (l, r) = (q[0], nq[0]);
        let g = Self {
            top_l: spec.g(top, l)[0],
            bot_l: spec.g(bot, l)[0],
            top_r: spec.g(top, r)[0],
            bot_r: spec.g(bot, r)[0],
        };
        if g.top_l == g.bot_l {
            return Err(Error::InvalidStrategy(
                "the quitting column does not separate the rows".into(),
            ));
        }
        Ok((g, top))
    }

    fn quit(&self, z: f64) -> f64 {
        z * self.top_l + (1.0 - z) * self.bot_l
    }

    fn stay(&self, z: f64) -> f64 {
        z * self.top_r + (1.0 - z) * self.bot_r
    }

    /// Derivative in s = -ln(1-t).
    fn flow(&self, z: f64) -> f64 {
        (self.quit(z) - self.stay(z)) / (self.top_l - self.bot_l)
    }

    fn closed_form(&self) -> Option<f64> {
        let c = self.top_l;
        let p = self.top_r / c;
        (c > 0.0 && self.bot_l == 0.0 && (self.bot_r + c).abs() <= 1e-12 * c && p > 0.0)
            .then_some(p)
    }
}

pub const XI_STEP: f64 = 1e-4;
pub const XI_RESIDUAL_TOL: f64 = 1e-6;

/// The map keeping `int_0^t g_R(xi) + (1-t) g_L(xi(t))` at zero, in closed
/// form when the game has the form (c, pc; 0, -c).
pub fn solve_xi_single_column(spec: &GameSpec) -> Result<Xi> {
    let (g, _) = SingleColumn::from_spec(spec)?;
    match g.closed_form() {
        Some(p) => Ok(Xi::Closed { p }),
        None => integrate_xi(spec),
    }
}

/// Integrates the defining equation by RK4 on [0, 1-h], finishes at t = 1
/// through the autonomous form in `s = -ln(1-t)`, and validates range and
/// integral residual.
pub fn integrate_xi(spec: &GameSpec) -> Result<Xi> {
    let (g, _) = SingleColumn::from_spec(spec)?;
    let h = XI_STEP;
    let n = (1.0 / h).round() as usize;
    let f = |t: f64, z: f64| g.flow(z) / (1.0 - t);
    let z0 = -g.bot_l / (g.top_l - g.bot_l);
    if !(-1e-12..=1.0 + 1e-12).contains(&z0) {
        return Err(Error::InvalidStrategy(format!(
            "initial value {z0} is not a probability"
        )));
    }
    let mut values = Vec::with_capacity(n + 1);
    values.push(z0.clamp(0.0, 1.0));
    for k in 0..n - 1 {
        let t = k as f64 * h;
        let z = values[k];
        let k1 = f(t, z);
        let k2 = f(t + h / 2.0, z + h / 2.0 * k1);
        let k3 = f(t + h / 2.0, z + h / 2.0 * k2);
        let k4 = f(t + h, z + h * k3);
        values.push(z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    // finish in s, where the equation is autonomous
    let mut z = values[n - 1];
    let ds = 1e-3;
    for _ in 0..200_000 {
        let k1 = g.flow(z);
        let k2 = g.flow(z + ds / 2.0 * k1);
        let k3 = g.flow(z + ds / 2.0 * k2);
        let k4 = g.flow(z + ds * k3);
        let step = ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        z += step;
        if step.abs() < 1e-16 || !(-1.0..=2.0).contains(&z) {
            break;
        }
    }
    values.push(z);
    if let Some(bad) = values.iter().find(|v| !(-1e-9..=1.0 + 1e-9).contains(*v)) {
        return Err(Error::InvalidStrategy(format!(
            "the solution leaves [0, 1] (reaches {bad})"
        )));
    }
    let values: Vec<f64> = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let slopes: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(k, &z)| if k < n { f(k as f64 * h, z) } else { 0.0 })
        .collect();
    let xi = Xi::Table { h, values, slopes };
    let res = xi_residual(spec, &xi, n)?;
    if res > XI_RESIDUAL_TOL {
        return Err(Error::InvalidStrategy(format!(
            "integral residual {res:.3e} exceeds tolerance"
        )));
    }
    Ok(xi)
}

/// `max_t |int_0^t g_R(xi) ds + (1-t) g_L(xi(t))|` over `points + 1` grid
/// times, by the trapezoid rule on a grid ten times finer.
pub fn xi_residual(spec: &GameSpec, xi: &Xi, points: usize) -> Result<f64> {
    let (g, _) = SingleColumn::from_spec(spec)?;
    let fine = points * 10;
    let h = 1.0 / fine as f64;
    let mut integral = 0.0;
    let mut prev = g.stay(xi.value(0.0));
    let mut worst = g.quit(xi.value(0.0)).abs();
    for k in 1..=fine {
        let t = k as f64 * h;
        let cur = g.stay(xi.value(t));
        integral += 0.5 * h * (prev + cur);
        prev = cur;
        if k % 10 == 0 {
            worst = worst.max((integral + (1.0 - t) * g.quit(xi.value(t))).abs());
        }
    }
    Ok(worst)
}

/// Plays the top row at stage k with probability `xi(k/T)`.
pub fn continuous_time_strategy(spec: &GameSpec, xi: Xi, horizon: usize) -> Result<MarkovStrategy> {
    if horizon == 0 {
        return Err(Error::InvalidStrategy("horizon must be positive".into()));
    }
    let (top, _) = two_rows(spec)?;
    for k in 0..=64 {
        let v = xi.value(k as f64 / 64.0);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidStrategy(format!("xi takes the value {v}")));
        }
    }
    Ok(MarkovStrategy::from_fn(
        format!("continuous:T={horizon}"),
        Player::One,
        move |k| place_top(top, xi.value(k as f64 / horizon as f64)),
    ))
}

/// Per-cell play of a calibrated strategy: quit into `x_star` with
/// intensity `gamma`, otherwise `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub x: Vec<f64>,
    pub x_star: Vec<f64>,
    pub gamma: f64,
}

/// Calibrated play over a grid of forecasts of the opponent's behavior on
/// the columns `omega`.
#[derive(Debug, Clone)]
pub struct Calibrated {
    name: String,
    omega: Vec<usize>,
    grid: SimplexGrid,
    cells: Vec<Cell>,
    design: Option<WeightSequence>,
    max_violation: f64,
    cal: Calibrator,
    survival: f64,
    last_weight: f64,
}

impl Calibrated {
    /// Validates cells against `eta` (no cell may quit with intensity above `1 - eta`).
    pub fn new(
        name: impl Into<String>,
        omega: Vec<usize>,
        grid: SimplexGrid,
        cells: Vec<Cell>,
        eta: f64,
    ) -> Result<Self> {
        if cells.len() != grid.len() || omega.len() != grid.n {
            return Err(Error::InvalidStrategy(
                "one cell per grid point is required".into(),
            ));
        }
        if let Some(c) = cells
            .iter()
            .find(|c| !(0.0..=1.0 - eta + 1e-12).contains(&c.gamma))
        {
            return Err(Error::InvalidStrategy(format!(
                "quitting intensity {} exceeds 1 - eta = {}",
                c.gamma,
                1.0 - eta
            )));
        }
        let cal = Calibrator::with_grid(grid.clone(), 0);
        Ok(Self {
            name: name.into(),
            omega,
            grid,
            cells,
            design: None,
            max_violation: 0.0,
            cal,
            survival: 1.0,
            last_weight: 0.0,
        })
    }

    /// Uses `design` instead of the evaluation weights.
    pub fn with_design(mut self, design: WeightSequence) -> Self {
        self.name = format!("{},design={}", self.name, design.label());
        self.design = Some(design);
        self
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn grid(&self) -> &SimplexGrid {
        &self.grid
    }

    /// Largest witness slack over the grid.
    pub fn max_violation(&self) -> f64 {
        self.max_violation
    }

    /// Quitting probability at stage `t` for a cell of intensity `gamma`.
    pub fn stage_quit(gamma: f64, weight: f64, tail: f64) -> f64 {
        if gamma == 0.0 || weight == 0.0 {
            return 0.0;
        }
        gamma * weight / ((1.0 - gamma) * tail + gamma * weight)
    }
}

impl Strategy for Calibrated {
    fn name(&self) -> &str {
        &self.name
    }

    fn player(&self) -> Player {
        Player::One
    }

    fn reset(&mut self, seed: u64) {
        self.cal = Calibrator::with_grid(self.grid.clone(), seed);
        self.survival = 1.0;
        self.last_weight = 0.0;
    }

    fn next_mixed(
        &mut self,
        history: &PlayHistory,
        t: usize,
        theta: &WeightSequence,
    ) -> MixedAction {
        if let Some((_, j)) = history.last() {
            let (state, w) = match self.omega.iter().position(|&c| c == j) {
                Some(s) => (s, self.last_weight),
                None => (0, 0.0),
            };
            let _ = self.cal.update(state, w);
        }
        let k = self.cal.predict();
        let theta = self.design.as_ref().unwrap_or(theta);
        let (w, tail) = (theta.weight(t), theta.tail(t));
        let cell = &self.cells[k];
        let g = Self::stage_quit(cell.gamma, w, tail);
        self.last_weight = self.survival * w * (1.0 - g) / (1.0 - cell.gamma);
        self.survival *= 1.0 - g;
        let mix: Vec<f64> = cell
            .x
            .iter()
            .zip(&cell.x_star)
            .map(|(a, b)| (1.0 - g) * a + g * b)
            .collect();
        MixedAction::from_weights(&mix)
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}

fn cells_from(ws: &[GridWitness], n1: usize) -> Result<(Vec<Cell>, f64)> {
    let mut worst: f64 = 0.0;
    let cells = ws
        .iter()
        .map(|w| {
            worst = worst.max(w.violation);
            let gamma = w.gamma.unwrap_or(0.0);
            let x = w.x.clone().filter(|_| gamma < 1.0);
            let x_star = w.x_star.clone().filter(|_| gamma > 0.0);
            match (x, x_star) {
                (Some(x), Some(xs)) => Ok(Cell {
                    x,
                    x_star: xs,
                    gamma,
                }),
                (Some(x), None) => Ok(Cell {
                    x_star: vec![0.0; n1],
                    x,
                    gamma: 0.0,
                }),
                (None, Some(xs)) => Ok(Cell {
                    x: xs.clone(),
                    x_star: xs,
                    gamma,
                }),
                (None, None) => Err(Error::InvalidStrategy(format!(
                    "no witness at grid point {:?}",
                    w.y
                ))),
            }
        })
        .collect::<Result<_>>()?;
    Ok((cells, worst))
}

/// Plays the witness of the forecast column mixture (type II games).
pub fn type2_calibrated(spec: &GameSpec, target: &TargetSet, eps: f64) -> Result<Calibrated> {
    let (grid, ws) = conditions::suff_bmii_witnesses(spec, target, eps)?;
    let (cells, worst) = cells_from(&ws, spec.n1())?;
    let mut s = Calibrated::new(
        format!("type2_calibrated:eps={eps}"),
        spec.non_quitting(Player::Two),
        grid,
        cells,
        0.0,
    )?;
    s.max_violation = worst;
    Ok(s)
}

/// Quits gradually into the witness of the forecast (type I games), with
/// witness quitting mass capped at `1 - eta`.
pub fn type1_calibrated(
    spec: &GameSpec,
    target: &TargetSet,
    eps: f64,
    eta: f64,
) -> Result<Calibrated> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidStrategy(format!("eta {eta} outside [0, 1)")));
    }
    let (grid, ws) = conditions::bmi_cond1_witnesses(spec, target, eps, Some(1.0 - eta))?;
    let (cells, worst) = cells_from(&ws, spec.n1())?;
    let mut s = Calibrated::new(
        format!("type1_calibrated:eps={eps},eta={eta}"),
        (0..spec.n2()).collect(),
        grid,
        cells,
        eta,
    )?;
    s.max_violation = worst;
    Ok(s)
}

/// Stationary play from alternative (a) when it holds, otherwise calibrated
/// play on the witnesses of alternative (b).
pub fn general_quitting(
    spec: &GameSpec,
    target: &TargetSet,
    eps: f64,
    eta: f64,
) -> Result<Box<dyn Strategy>> {
    let params = CheckParams::with_eps(eps);
    let a = conditions::alternative_a(spec, target, &params)?;
    if a.verdict == Verdict::Holds {
        let w = &a.witness;
        let gamma = w.gamma.unwrap_or(1.0);
        let n1 = spec.n1();
        let x = w.x.clone().unwrap_or(vec![0.0; n1]);
        let xs = w.x_star.clone().unwrap_or(vec![0.0; n1]);
        let mix: Vec<f64> = x
            .iter()
            .zip(&xs)
            .map(|(a, b)| (1.0 - gamma) * a + gamma * b)
            .collect();
        return Ok(Box::new(MarkovStrategy::stationary(
            format!("general_quitting:a,gamma={gamma}"),
            Player::One,
            MixedAction::from_weights(&mix),
        )));
    }
    let (grid, ws) = conditions::alternative_b_witnesses(spec, target, eps, 1.0 - eta)?;
    if grid.is_empty() {
        return Err(Error::InvalidStrategy(
            "player 2 has no non-quitting action".into(),
        ));
    }
    let worst = ws.iter().map(|w| w.violation).fold(0.0, f64::max);
    if worst > params.holds_tol() {
        return Err(Error::InvalidStrategy(format!(
            "neither alternative holds (slack {:.3} and {worst:.3}); the first condition may still hold in general form",
            a.value
        )));
    }
    let (cells, worst) = cells_from(&ws, spec.n1())?;
    let mut s = Calibrated::new(
        format!("general_quitting:b,eps={eps},eta={eta}"),
        spec.non_quitting(Player::Two),
        grid,
        cells,
        eta,
    )?;
    s.max_violation = worst;
    Ok(Box::new(s))
}

/// Steers the weighted average payoff toward the target by playing the
/// minimax action of the game projected on the direction away from it.
#[derive(Debug, Clone)]
pub struct BlackwellProjection {
    spec: GameSpec,
    target: TargetSet,
    sum: Vec<f64>,
    weight: f64,
}

impl BlackwellProjection {
    pub fn new(spec: &GameSpec, target: &TargetSet) -> Result<Self> {
        if spec.dim() != target.dim() {
            return Err(Error::Shape("game and target dimensions differ".into()));
        }
        Ok(Self {
            spec: spec.clone(),
            target: target.clone(),
            sum: vec![0.0; spec.dim()],
            weight: 0.0,
        })
    }
}

impl Strategy for BlackwellProjection {
    fn name(&self) -> &str {
        "blackwell"
    }

    fn player(&self) -> Player {
        Player::One
    }

    fn reset(&mut self, _seed: u64) {
        self.sum.iter_mut().for_each(|v| *v = 0.0);
        self.weight = 0.0;
    }

    fn next_mixed(
        &mut self,
        history: &PlayHistory,
        t: usize,
        theta: &WeightSequence,
    ) -> MixedAction {
        if let Some((i, j)) = history.last() {
            let w = theta.weight(t - 1);
            for (s, g) in self.sum.iter_mut().zip(self.spec.g(i, j)) {
                *s += w * g;
            }
            self.weight += w;
        }
        let n1 = self.spec.n1();
        if self.weight <= 0.0 {
            return MixedAction::uniform(n1);
        }
        let avg: Vec<f64> = self.sum.iter().map(|s| s / self.weight).collect();
        let proj = self.target.project(&avg);
        let diff: Vec<f64> = avg.iter().zip(&proj).map(|(a, b)| a - b).collect();
        let len = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len <= 1e-12 {
            return MixedAction::uniform(n1);
        }
        let m: Vec<Vec<f64>> = (0..n1)
            .map(|i| {
                (0..self.spec.n2())
                    .map(|j| {
                        self.spec
                            .g(i, j)
                            .iter()
                            .zip(&diff)
                            .map(|(g, u)| g * u / len)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        match solve_min_max(&m) {
            Ok((x, _)) => MixedAction::from_weights(&x),
            Err(_) => MixedAction::uniform(n1),
        }
    }

    fn box_clone(&self) -> Box<dyn Strategy> {
        Box::new(self.clone())
    }
}

fn col_index(spec: &GameSpec, label: &str) -> Result<usize> {
    spec.index_of(Player::Two, label)
        .ok_or_else(|| Error::InvalidStrategy(format!("player 2 has no action `{label}`")))
}

pub fn stationary(spec: &GameSpec, player: Player, x: MixedAction) -> Result<MarkovStrategy> {
    let n = match player {
        Player::One => spec.n1(),
        Player::Two => spec.n2(),
    };
    if x.len() != n {
        return Err(Error::InvalidStrategy(format!(
            "mixed action has {} entries, expected {n}",
            x.len()
        )));
    }
    let label = x
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join("/");
    Ok(MarkovStrategy::stationary(
        format!("stationary:{label}"),
        player,
        x,
    ))
}

/// Plays `pre` before stage `k` and the quitting column `j` at stage `k`.
pub fn quit_at(
    spec: &GameSpec,
    k: usize,
    j: usize,
    pre: Option<MixedAction>,
) -> Result<MarkovStrategy> {
    if k == 0 {
        return Err(Error::InvalidStrategy(
            "quit stage must be at least 1".into(),
        ));
    }
    if !spec.actions(Player::Two).get(j).is_some_and(|a| a.quitting) {
        return Err(Error::InvalidStrategy(format!(
            "column {j} is not a quitting action"
        )));
    }
    let n2 = spec.n2();
    let pre = match pre {
        Some(p) => p.into_inner(),
        None => {
            let nq = spec.non_quitting(Player::Two);
            if nq.is_empty() {
                MixedAction::pure(n2, j).into_inner()
            } else {
                MixedAction::uniform_on(n2, &nq).into_inner()
            }
        }
    };
    let quit = MixedAction::pure(n2, j).into_inner();
    let label = &spec.p2()[j].label;
    Ok(MarkovStrategy::from_fn(
        format!("quit_at:k={k},j={label}"),
        Player::Two,
        move |t| {
            if t < k {
                pre.clone()
            } else {
                quit.clone()
            }
        },
    ))
}

/// Plays the column labeled `R` at every stage.
pub fn r_forever(spec: &GameSpec) -> Result<MarkovStrategy> {
    let j = col_index(spec, "R")?;
    Ok(MarkovStrategy::stationary(
        "r_forever",
        Player::Two,
        MixedAction::pure(spec.n2(), j),
    ))
}

/// Uniform over all columns before stage `n`, then the column labeled `L`.
pub fn bm1_excluder(spec: &GameSpec, n: usize) -> Result<MarkovStrategy> {
    let l = col_index(spec, "L")?;
    let n2 = spec.n2();
    let uni = MixedAction::uniform(n2).into_inner();
    let pure = MixedAction::pure(n2, l).into_inner();
    Ok(MarkovStrategy::from_fn(
        format!("bm1_excluder:n={n}"),
        Player::Two,
        move |t| {
            if t < n {
                uni.clone()
            } else {
                pure.clone()
            }
        },
    ))
}

/// Plays the top row at stage t with probability `(t+1)^-a`.
pub fn markov_power(spec: &GameSpec, a: f64) -> Result<MarkovStrategy> {
    let (top, _) = two_rows(spec)?;
    Ok(MarkovStrategy::from_fn(
        format!("markov_power:a={a}"),
        Player::One,
        move |t| place_top(top, (t as f64 + 1.0).powf(-a)),
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct BestResponseOpts {
    /// Plays used to estimate the stage behavior of a non-Markov strategy.
    pub runs: usize,
    /// Rounds of re-estimation against the current response.
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for BestResponseOpts {
    fn default() -> Self {
        Self {
            runs: 64,
            sweeps: 2,
            seed: 0,
        }
    }
}

/// Pure Markov reply maximizing `<u, E payoff>` against stage actions `xs`,
/// by backward induction on the value to go.
fn linear_reply(spec: &GameSpec, xs: &[Vec<f64>], theta: &WeightSequence, u: &[f64]) -> Vec<usize> {
    let n2 = spec.n2();
    let h = xs.len();
    let mut choice = vec![0; h];
    let mut v = 0.0;
    for t in (1..=h).rev() {
        let x = &xs[t - 1];
        let (w, tail) = (theta.weight(t), theta.tail(t));
        let mut best = f64::NEG_INFINITY;
        for j in 0..n2 {
            let mut val = 0.0;
            let mut q = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let gu: f64 = spec.g(i, j).iter().zip(u).map(|(g, u)| g * u).sum();
                if spec.is_absorbing(i, j) {
                    val += xi * tail * gu;
                    q += xi;
                } else {
                    val += xi * w * gu;
                }
            }
            val += (1.0 - q) * v;
            if val > best + 1e-15 {
                best = val;
                choice[t - 1] = j;
            }
        }
        v = best;
    }
    choice
}

fn directions(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    if d == 2 {
        for k in 0..64 {
            let a = k as f64 * std::f64::consts::TAU / 64.0;
            out.push(vec![a.cos(), a.sin()]);
        }
        return out;
    }
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; d];
            u[k] = s;
            out.push(u);
        }
    }
    out
}

/// Markov reply to `sigma` that pushes the expected payoff away from the
/// target. For each direction `u` the reply maximizing `<u, E payoff>` is
/// computed exactly; directions are then refined toward the displacement of
/// the resulting payoff from its projection. A non-Markov `sigma` is
/// replaced by its average stage behavior on surviving plays, re-estimated
/// against the current reply.
pub fn best_response_markov(
    spec: &GameSpec,
    sigma: &dyn Strategy,
    target: &TargetSet,
    theta: &WeightSequence,
    opts: &BestResponseOpts,
) -> Result<MarkovStrategy> {
    let h = theta.truncation(1e-9);
    let n2 = spec.n2();
    let table = |choice: &[usize]| {
        MarkovStrategy::table(
            "best_response_markov",
            Player::Two,
            choice
                .iter()
                .map(|&j| MixedAction::pure(n2, j).into_inner())
                .collect(),
            MixedAction::pure(n2, *choice.last().unwrap_or(&0)).into_inner(),
        )
    };
    let respond = |xs: &[Vec<f64>]| -> MarkovStrategy {
        let fixed = MarkovStrategy::table(
            "",
            Player::One,
            xs.to_vec(),
            xs.last().cloned().unwrap_or_default(),
        );
        let score = |c: &[usize]| {
            let tau = table(c);
            let (p, _, _) = evaluator::exact_payoff(spec, &fixed, &tau, theta, 1e-12);
            (target.distance(&p), p)
        };
        let mut best: Option<(f64, Vec<usize>)> = None;
        for u0 in directions(spec.dim()) {
            let mut u = u0;
            for _ in 0..8 {
                let c = linear_reply(spec, xs, theta, &u);
                let (d, p) = score(&c);
                if best.as_ref().is_none_or(|b| d > b.0) {
                    best = Some((d, c));
                }
                let proj = target.project(&p);
                let diff: Vec<f64> = p.iter().zip(&proj).map(|(a, b)| a - b).collect();
                let len = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
                if len <= 1e-15 {
                    break;
                }
                let next: Vec<f64> = diff.iter().map(|v| v / len).collect();
                if next.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-12) {
                    break;
                }
                u = next;
            }
        }
        table(&best.map(|b| b.1).unwrap_or_default())
    };
    if let Some(m) = sigma.as_markov() {
        let xs: Vec<Vec<f64>> = (1..=h).map(|t| m.mixed_at(t)).collect();
        return Ok(respond(&xs));
    }
    let n1 = spec.n1();
    let mut tau = MarkovStrategy::stationary("", Player::Two, MixedAction::uniform(n2));
    for sweep in 0..opts.sweeps.max(1) {
        let mut sum = vec![vec![0.0; n1]; h];
        let mut count = vec![0usize; h];
        for r in 0..opts.runs.max(1) {
            evaluator::seeded_run(
                spec,
                sigma,
                &tau,
                theta,
                h,
                opts.seed.wrapping_add(sweep as u64),
                r,
                |t, x, _| {
                    for (s, v) in sum[t - 1].iter_mut().zip(x.iter()) {
                        *s += v;
                    }
                    count[t - 1] += 1;
                },
            )?;
        }
        let mut last = MixedAction::uniform(n1).into_inner();
        let xs: Vec<Vec<f64>> = sum
            .into_iter()
            .zip(count)
            .map(|(s, c)| {
                if c > 0 {
                    last = s.iter().map(|v| v / c as f64).collect();
                }
                last.clone()
            })
            .collect();
        tau = respond(&xs);
    }
    Ok(tau)
}

/// `name:key=value,key=value` with `/`-separated vectors.
#[derive(Debug, Clone)]
pub struct StrategySpec {
    pub name: String,
    pub params: Vec<(String, String)>,
}

impl StrategySpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let params = rest
            .split(',')
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| Error::Parse(format!("parameter `{p}` should be key=value")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            name: name.trim().to_string(),
            params,
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|_| {
                Error::Parse(format!("bad value `{v}` for `{key}` in `{}`", self.name))
            }),
            None => default.ok_or_else(|| Error::Parse(format!("`{}` needs `{key}=`", self.name))),
        }
    }

    fn mixed(&self, key: &str, n: usize) -> Result<Option<MixedAction>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let p: Vec<f64> = v
            .split('/')
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad probability `{t}`")))
            })
            .collect::<Result<_>>()?;
        if p.len() != n {
            return Err(Error::Parse(format!(
                "`{key}` has {} entries, expected {n}",
                p.len()
            )));
        }
        Ok(Some(MixedAction::new(p)?))
    }
}

/// Context for building strategies by name.
pub struct BuildContext<'a> {
    pub spec: &'a GameSpec,
    pub target: &'a TargetSet,
    pub theta: &'a WeightSequence,
    /// Player 1's strategy, for replies.
    pub opponent: Option<&'a dyn Strategy>,
}

pub const P1_NAMES: [&str; 9] = [
    "stationary:x=P/P",
    "pure:a=LABEL",
    "sigma_star:lambda=L",
    "continuous[:T=N]",
    "blackwell",
    "type2_calibrated:eps=E",
    "type1_calibrated:eps=E,eta=H[,design=cesaro:N]",
    "general_quitting:eps=E,eta=H",
    "markov_power:a=A",
];

pub const P2_NAMES: [&str; 6] = [
    "stationary:y=P/P",
    "pure:a=LABEL",
    "quit_at:k=K,j=LABEL",
    "r_forever",
    "bm1_excluder:n=N",
    "best_response[:runs=R,sweeps=S]",
];

/// Builds a strategy for `player` from a `name:key=value,...` string.
pub fn build(ctx: &BuildContext<'_>, player: Player, s: &str) -> Result<Box<dyn Strategy>> {
    let sp = StrategySpec::parse(s)?;
    let spec = ctx.spec;
    let n = match player {
        Player::One => spec.n1(),
        Player::Two => spec.n2(),
    };
    let unknown = || Error::Parse(format!("unknown strategy `{}` for {player:?}", sp.name));
    if sp.name == "stationary" {
        let key = if player == Player::One { "x" } else { "y" };
        let x = sp.mixed(key, n)?.unwrap_or_else(|| MixedAction::uniform(n));
        return Ok(Box::new(stationary(spec, player, x)?));
    }
    if sp.name == "pure" {
        let label = sp
            .raw("a")
            .ok_or_else(|| Error::Parse("`pure` needs `a=`".into()))?;
        let k = spec
            .index_of(player, label)
            .ok_or_else(|| Error::InvalidStrategy(format!("no action `{label}`")))?;
        return Ok(Box::new(MarkovStrategy::stationary(
            format!("pure:{label}"),
            player,
            MixedAction::pure(n, k),
        )));
    }
    let eps = sp.num("eps", Some(0.1))?;
    match player {
        Player::One => Ok(match sp.name.as_str() {
            "sigma_star" => {
                let s = SigmaStar::with_eps(
                    sp.num("lambda", None)?,
                    sp.num("eps", Some(SigmaStar::DEFAULT_EPS))?,
                )?;
                Box::new(s.strategy(spec)?)
            }
            "continuous" => {
                let t = sp.num("T", ctx.theta.horizon())?;
                Box::new(continuous_time_strategy(
                    spec,
                    solve_xi_single_column(spec)?,
                    t,
                )?)
            }
            "blackwell" => Box::new(BlackwellProjection::new(spec, ctx.target)?),
            "type2_calibrated" => Box::new(type2_calibrated(spec, ctx.target, eps)?),
            "type1_calibrated" => {
                let eta = sp.num("eta", Some(eps.sqrt()))?;
                let s = type1_calibrated(spec, ctx.target, eps, eta)?;
                match sp.raw("design") {
                    Some(d) => Box::new(s.with_design(WeightSequence::parse(d)?)),
                    None => Box::new(s),
                }
            }
            "general_quitting" => {
                let eta = sp.num("eta", Some(eps.sqrt()))?;
                general_quitting(spec, ctx.target, eps, eta)?
            }
            "markov_power" => Box::new(markov_power(spec, sp.num("a", Some(1.0))?)?),
            _ => return Err(unknown()),
        }),
        Player::Two => Ok(match sp.name.as_str() {
            "quit_at" => {
                let j = match sp.raw("j") {
                    Some(l) => col_index(spec, l)?,
                    None => *spec.quitting(Player::Two).first().ok_or_else(|| {
                        Error::InvalidStrategy("player 2 has no quitting action".into())
                    })?,
                };
                Box::new(quit_at(spec, sp.num("k", None)?, j, sp.mixed("pre", n)?)?)
            }
            "r_forever" => Box::new(r_forever(spec)?),
            "bm1_excluder" => Box::new(bm1_excluder(spec, sp.num("n", None)?)?),
            "best_response" => {
                let sigma = ctx.opponent.ok_or_else(|| {
                    Error::InvalidStrategy("best_response needs player 1's strategy".into())
                })?;
                let opts = BestResponseOpts {
                    runs: sp.num("runs", Some(64))?,
                    sweeps: sp.num("sweeps", Some(2))?,
                    seed: sp.num("seed", Some(0))?,
                };
                Box::new(best_response_markov(
                    spec, sigma, ctx.target, ctx.theta, &opts,
                )?)
            }
            _ => return Err(unknown()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, zero_target};
    use crate::evaluator::exact_result;

    #[test]
    fn sigma_star_constants() {
        let s = SigmaStar::new(0.1).unwrap();
        assert!((s.z(1) - 0.183_939_720_585_721_2).abs() < 1e-15);
        assert_eq!(s.k_lambda(), 8);
        assert!((s.z(2) - (s.eps + 0.1 / 0.9)).abs() < 1e-15);
    }

    #[test]
    fn sigma_star_against_r_matches_closed_form() {
        let g = catalog::example6();
        let s = SigmaStar::new(0.1).unwrap();
        let sigma = s.strategy(&g).unwrap();
        let r = r_forever(&g).unwrap();
        let th = WeightSequence::discounted(0.1).unwrap();
        let res = exact_result(&g, &sigma, &r, &th, &zero_target(1), 1e-15);
        let z8 = s.eps + 7.0 / 9.0;
        let oracle = s.eps - 0.1 * 0.9f64.powi(7) - 0.9f64.powi(8) * z8;
        assert!(
            (res.payoff[0] - oracle).abs() < 1e-9,
            "{} vs {oracle}",
            res.payoff[0]
        );
        assert!((s.value_vs_r() - oracle).abs() < 1e-15);
    }

    #[test]
    fn quitting_at_once_pays_the_first_probability() {
        let g = catalog::example6();
        let s = SigmaStar::new(0.1).unwrap();
        let sigma = s.strategy(&g).unwrap();
        let l = quit_at(&g, 1, 0, None).unwrap();
        let th = WeightSequence::discounted(0.1).unwrap();
        let res = exact_result(&g, &sigma, &l, &th, &zero_target(1), 1e-15);
        assert!((res.payoff[0] - s.eps).abs() < 1e-12);
    }

    #[test]
    fn stage_quit_formula() {
        let th = WeightSequence::cesaro(10).unwrap();
        let g = Calibrated::stage_quit(0.5, th.weight(1), th.tail(1));
        assert!((g - 1.0 / 11.0).abs() < 1e-15);
        assert_eq!(Calibrated::stage_quit(0.0, 0.1, 1.0), 0.0);
    }

    #[test]
    fn xi_closed_forms() {
        let x = Xi::Closed { p: 2.0 };
        assert_eq!(x.value(0.0), 0.0);
        assert!((x.value(1.0) - 0.5).abs() < 1e-15);
        let x = Xi::Closed { p: 4.0 };
        assert!((x.value(0.5) - 0.234375).abs() < 1e-15);
        let x = Xi::Closed { p: 1.0 };
        assert!((x.value(0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn integrated_xi_matches_closed_form() {
        for p in [1.0, 2.0, 4.0] {
            let g = catalog::p_game(p).unwrap();
            assert!(matches!(
                solve_xi_single_column(&g).unwrap(),
                Xi::Closed { .. }
            ));
            let num = integrate_xi(&g).unwrap();
            let exact = Xi::Closed { p };
            let worst = (0..=10_000)
                .map(|k| {
                    let t = k as f64 / 10_000.0;
                    (num.value(t) - exact.value(t)).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "p = {p}: {worst}");
        }
    }

    #[test]
    fn quit_at_rejects_non_quitting_column() {
        let g = catalog::example6();
        assert!(quit_at(&g, 2, 1, None).is_err());
    }

    #[test]
    fn excluder_switches_at_n() {
        let g = catalog::example4();
        let s = bm1_excluder(&g, 5).unwrap();
        assert_eq!(s.mixed_at(4), vec![0.5, 0.5]);
        assert_eq!(s.mixed_at(5), vec![1.0, 0.0]);
    }

    #[test]
    fn best_reply_is_exact_in_one_dimension() {
        let g = catalog::example6();
        let sigma = SigmaStar::new(0.1).unwrap().strategy(&g).unwrap();
        let th = WeightSequence::discounted(0.1).unwrap();
        let tau = best_response_markov(
            &g,
            &sigma,
            &zero_target(1),
            &th,
            &BestResponseOpts::default(),
        )
        .unwrap();
        let br = exact_result(&g, &sigma, &tau, &th, &zero_target(1), 1e-12).distance;
        let r = exact_result(
            &g,
            &sigma,
            &r_forever(&g).unwrap(),
            &th,
            &zero_target(1),
            1e-12,
        )
        .distance;
        assert!(br >= r - 1e-12);
    }

    #[test]
    fn type1_witnesses_respect_the_cap() {
        let g = catalog::example4();
        let s = type1_calibrated(&g, &zero_target(1), 0.1, 0.2).unwrap();
        assert!(s.cells().iter().all(|c| c.gamma <= 0.8 + 1e-9));
        let grid = s.grid().clone();
        let bad = vec![
            Cell {
                x: vec![0.0, 1.0],
                x_star: vec![1.0, 0.0],
                gamma: 1.0
            };
            grid.len()
        ];
        assert!(Calibrated::new("x", vec![0, 1], grid, bad, 0.1).is_err());
    }

    #[test]
    fn parse_strategy_strings() {
        let sp = StrategySpec::parse("type1_calibrated:eps=0.05,eta=0.22").unwrap();
        assert_eq!(sp.name, "type1_calibrated");
        assert_eq!(sp.raw("eta"), Some("0.22"));
        let g = catalog::example6();
        let th = WeightSequence::cesaro(10).unwrap();
        let c = zero_target(1);
        let ctx = BuildContext {
            spec: &g,
            target: &c,
            theta: &th,
            opponent: None,
        };
        let s = build(&ctx, Player::Two, "quit_at:k=3,j=L").unwrap();
        assert_eq!(s.as_markov().unwrap().mixed_at(3), vec![1.0, 0.0]);
        assert!(build(&ctx, Player::Two, "nope").is_err());
    }
}
