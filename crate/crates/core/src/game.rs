//! Generalized quitting games.
//!
//! Player 1 chooses rows, player 2 chooses columns. Some actions of each
//! player are *quitting*: as soon as one of them is played the game is
//! absorbed and the stage payoff is received at every remaining stage.
//! Payoffs are vectors in `R^d` with Euclidean norm at most one.

use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};

/// Slack allowed on the unit-norm bound of payoff vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Slack allowed when checking that probabilities sum to one.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub label: String,
    pub quitting: bool,
}

impl Action {
    pub fn new(label: &str, quitting: bool) -> Self {
        Self {
            label: label.to_string(),
            quitting,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameClass {
    /// Neither player has a quitting action.
    NoQuitting,
    /// Only player 1 can quit.
    BigMatchI,
    /// Only player 2 can quit.
    BigMatchII,
    /// Both players can quit.
    General,
}

#[derive(Deserialize, Serialize)]
struct GameFile {
    d: usize,
    p1: Vec<Action>,
    p2: Vec<Action>,
    payoff: Vec<Vec<Vec<f64>>>,
}

/// An immutable game description.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    dim: usize,
    p1: Vec<Action>,
    p2: Vec<Action>,
    payoff: Vec<f64>,
}

impl GameSpec {
    /// Builds a game and checks shapes and the unit-norm bound.
    pub fn new(
        dim: usize,
        p1: Vec<Action>,
        p2: Vec<Action>,
        payoff: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let spec = Self::unchecked(dim, p1, p2, payoff)?;
        spec.check_norms()?;
        Ok(spec)
    }

    fn unchecked(
        dim: usize,
        p1: Vec<Action>,
        p2: Vec<Action>,
        payoff: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("payoff dimension must be positive".into()));
        }
        if p1.is_empty() || p2.is_empty() {
            return Err(Error::Shape("each player needs at least one action".into()));
        }
        if payoff.len() != p1.len() {
            return Err(Error::Shape(format!(
                "payoff has {} rows but player 1 has {} actions",
                payoff.len(),
                p1.len()
            )));
        }
        let mut flat = Vec::with_capacity(p1.len() * p2.len() * dim);
        for (i, row) in payoff.iter().enumerate() {
            if row.len() != p2.len() {
                return Err(Error::Shape(format!(
                    "payoff row {i} has {} entries but player 2 has {} actions",
                    row.len(),
                    p2.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                if v.len() != dim {
                    return Err(Error::Shape(format!(
                        "payoff ({i},{j}) has length {} instead of {dim}",
                        v.len()
                    )));
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Shape(format!("payoff ({i},{j}) is not finite")));
                }
                flat.extend_from_slice(v);
            }
        }
        Ok(Self {
            dim,
            p1,
            p2,
            payoff: flat,
        })
    }

    fn check_norms(&self) -> Result<()> {
        for i in 0..self.n1() {
            for j in 0..self.n2() {
                let n = norm(self.g(i, j));
                if n > 1.0 + NORM_TOL {
                    return Err(Error::Normalization {
                        row: self.p1[i].label.clone(),
                        col: self.p2[j].label.clone(),
                        norm: n,
                    });
                }
            }
        }
        Ok(())
    }

    /// Parses the JSON game format. With `rescale`, payoffs are divided by
    /// their largest norm when it exceeds one and the factor is returned.
    pub fn from_json(text: &str, rescale: bool) -> Result<(Self, f64)> {
        let file: GameFile = serde_json::from_str(text)?;
        let mut spec = Self::unchecked(file.d, file.p1, file.p2, file.payoff)?;
        let factor = spec.max_norm();
        if factor > 1.0 + NORM_TOL {
            if !rescale {
                spec.check_norms()?;
            }
            spec.payoff.iter_mut().for_each(|v| *v /= factor);
            return Ok((spec, factor));
        }
        Ok((spec, 1.0))
    }

    pub fn from_file(path: &Path, rescale: bool) -> Result<(Self, f64)> {
        Self::from_json(&read_file(path)?, rescale)
    }

    pub fn to_json(&self) -> String {
        let payoff = (0..self.n1())
            .map(|i| (0..self.n2()).map(|j| self.g(i, j).to_vec()).collect())
            .collect();
        let file = GameFile {
            d: self.dim,
            p1: self.p1.clone(),
            p2: self.p2.clone(),
            payoff,
        };
        serde_json::to_string_pretty(&file).expect("game serializes")
    }

    pub fn max_norm(&self) -> f64 {
        self.payoff.chunks(self.dim).map(norm).fold(0.0, f64::max)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n1(&self) -> usize {
        self.p1.len()
    }
    pub fn n2(&self) -> usize {
        self.p2.len()
    }
    pub fn p1(&self) -> &[Action] {
        &self.p1
    }
    pub fn p2(&self) -> &[Action] {
        &self.p2
    }

    pub fn actions(&self, who: Player) -> &[Action] {
        match who {
            Player::One => &self.p1,
            Player::Two => &self.p2,
        }
    }

    /// Index of the action with the given label.
    pub fn index_of(&self, who: Player, label: &str) -> Option<usize> {
        self.actions(who).iter().position(|a| a.label == label)
    }

    pub fn quitting(&self, who: Player) -> Vec<usize> {
        (0..self.actions(who).len())
            .filter(|&k| self.actions(who)[k].quitting)
            .collect()
    }

    pub fn non_quitting(&self, who: Player) -> Vec<usize> {
        (0..self.actions(who).len())
            .filter(|&k| !self.actions(who)[k].quitting)
            .collect()
    }

    /// Pure payoff vector g(i, j).
    #[inline]
    pub fn g(&self, i: usize, j: usize) -> &[f64] {
        let k = (i * self.p2.len() + j) * self.dim;
        &self.payoff[k..k + self.dim]
    }

    #[inline]
    pub fn is_absorbing(&self, i: usize, j: usize) -> bool {
        self.p1[i].quitting || self.p2[j].quitting
    }

    pub fn classify(&self) -> GameClass {
        let q1 = self.p1.iter().any(|a| a.quitting);
        let q2 = self.p2.iter().any(|a| a.quitting);
        match (q1, q2) {
            (false, false) => GameClass::NoQuitting,
            (true, false) => GameClass::BigMatchI,
            (false, true) => GameClass::BigMatchII,
            (true, true) => GameClass::General,
        }
    }

    fn bilinear(&self, a: &[f64], b: &[f64], filter: impl Fn(usize, usize) -> bool) -> Vec<f64> {
        assert_eq!(a.len(), self.n1(), "row weights have the wrong length");
        assert_eq!(b.len(), self.n2(), "column weights have the wrong length");
        let mut out = vec![0.0; self.dim];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0.0 || !filter(i, j) {
                    continue;
                }
                let w = ai * bj;
                for (o, v) in out.iter_mut().zip(self.g(i, j)) {
                    *o += w * v;
                }
            }
        }
        out
    }

    /// Multilinear extension g(a, b) for weights (mixed actions or measures).
    pub fn payoff(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.bilinear(a, b, |_, _| true)
    }

    /// Sum of g over absorbing pairs, weighted by a_i b_j. Not normalized.
    pub fn absorption_payoff(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.bilinear(a, b, |i, j| self.is_absorbing(i, j))
    }

    /// Sum of g over non-absorbing pairs.
    pub fn non_absorbing_payoff(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.bilinear(a, b, |i, j| !self.is_absorbing(i, j))
    }

    /// Total weight a_i b_j over absorbing pairs.
    pub fn absorption_prob(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut p = 0.0;
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                if self.is_absorbing(i, j) {
                    p += ai * bj;
                }
            }
        }
        p
    }

    /// The point (g(x,y) + g*(alpha,y) + g*(x,beta)) / (1 + p*(alpha,y) + p*(x,beta)).
    pub fn perturbed_point(&self, x: &[f64], alpha: &[f64], y: &[f64], beta: &[f64]) -> Vec<f64> {
        let mut num = self.payoff(x, y);
        for (n, (a, b)) in num.iter_mut().zip(
            self.absorption_payoff(alpha, y)
                .into_iter()
                .zip(self.absorption_payoff(x, beta)),
        ) {
            *n += a + b;
        }
        let den = 1.0 + self.absorption_prob(alpha, y) + self.absorption_prob(x, beta);
        num.iter().map(|v| v / den).collect()
    }

    /// The same game with no quitting actions.
    pub fn without_quitting(&self) -> GameSpec {
        let strip = |v: &[Action]| v.iter().map(|a| Action::new(&a.label, false)).collect();
        GameSpec {
            dim: self.dim,
            p1: strip(&self.p1),
            p2: strip(&self.p2),
            payoff: self.payoff.clone(),
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A probability vector over a player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedAction(Vec<f64>);

impl MixedAction {
    /// Validates nonnegativity and unit mass (within 1e-9), then renormalizes.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidMixed("empty vector".into()));
        }
        if p.iter().any(|v| !v.is_finite() || *v < -PROB_TOL) {
            return Err(Error::InvalidMixed(format!(
                "negative or non-finite entry in {p:?}"
            )));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidMixed(format!("entries sum to {s}")));
        }
        Ok(Self(p.into_iter().map(|v| v.max(0.0) / s).collect()))
    }

    pub fn pure(n: usize, k: usize) -> Self {
        let mut p = vec![0.0; n];
        p[k] = 1.0;
        Self(p)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Uniform over the listed indices.
    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        let mut p = vec![0.0; n];
        for &k in support {
            p[k] = 1.0 / support.len() as f64;
        }
        Self(p)
    }

    /// Normalizes a nonnegative weight vector. Panics on zero mass.
    pub fn from_weights(w: &[f64]) -> Self {
        let s: f64 = w.iter().map(|v| v.max(0.0)).sum();
        assert!(s > 0.0, "cannot normalize a zero vector");
        Self(w.iter().map(|v| v.max(0.0) / s).collect())
    }

    /// Index drawn from a uniform variate `u` in [0, 1).
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.0
            .iter()
            .rposition(|p| *p > 0.0)
            .unwrap_or(self.0.len() - 1)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for MixedAction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A finite nonnegative measure over a player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AbsorbingMeasure(Vec<f64>);

impl AbsorbingMeasure {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "negative or non-finite entry in {m:?}"
            )));
        }
        Ok(Self(m))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn mass(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl Deref for AbsorbingMeasure {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Stage weights theta_t (t = 1, 2, ...) summing to one.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSequence {
    Cesaro { horizon: usize },
    Discounted { lambda: f64 },
    Custom { weights: Vec<f64>, tails: Vec<f64> },
}

impl WeightSequence {
    pub fn cesaro(horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidWeights(
                "Cesaro horizon must be positive".into(),
            ));
        }
        Ok(Self::Cesaro { horizon })
    }

    pub fn discounted(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidWeights(format!(
                "discount rate {lambda} outside (0, 1]"
            )));
        }
        Ok(Self::Discounted { lambda })
    }

    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(
                "weights must be nonnegative and finite".into(),
            ));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {s}")));
        }
        let mut tails = vec![0.0; weights.len() + 1];
        for t in (0..weights.len()).rev() {
            tails[t] = tails[t + 1] + weights[t];
        }
        Ok(Self::Custom { weights, tails })
    }

    /// Parses `cesaro:T`, `discounted:LAMBDA` or `custom:@FILE`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            Error::Parse(format!("weight sequence `{s}` should look like kind:arg"))
        })?;
        match kind {
            "cesaro" => Self::cesaro(
                arg.parse()
                    .map_err(|_| Error::Parse(format!("bad Cesaro horizon `{arg}`")))?,
            ),
            "discounted" => Self::discounted(
                arg.parse()
                    .map_err(|_| Error::Parse(format!("bad discount rate `{arg}`")))?,
            ),
            "custom" => {
                let path = arg.strip_prefix('@').ok_or_else(|| {
                    Error::Parse("custom weights are given as custom:@file".into())
                })?;
                let text = read_file(Path::new(path))?;
                let weights: Vec<f64> = match serde_json::from_str(&text) {
                    Ok(w) => w,
                    Err(_) => text
                        .split(|c: char| c.is_whitespace() || c == ',')
                        .filter(|t| !t.is_empty())
                        .map(|t| {
                            t.parse()
                                .map_err(|_| Error::Parse(format!("bad weight `{t}`")))
                        })
                        .collect::<Result<_>>()?,
                };
                Self::custom(weights)
            }
            _ => Err(Error::Parse(format!(
                "unknown weight sequence kind `{kind}`"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Cesaro { horizon } => format!("cesaro:{horizon}"),
            Self::Discounted { lambda } => format!("discounted:{lambda}"),
            Self::Custom { weights, .. } => format!("custom[{}]", weights.len()),
        }
    }

    /// theta_t for t >= 1.
    pub fn weight(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        match self {
            Self::Cesaro { horizon } => {
                if t <= *horizon {
                    1.0 / *horizon as f64
                } else {
                    0.0
                }
            }
            Self::Discounted { lambda } => lambda * pow_stage(1.0 - lambda, t - 1),
            Self::Custom { weights, .. } => weights.get(t - 1).copied().unwrap_or(0.0),
        }
    }

    /// Sum of theta_s over s >= t.
    pub fn tail(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        match self {
            Self::Cesaro { horizon } => {
                if t <= *horizon {
                    (*horizon - t + 1) as f64 / *horizon as f64
                } else {
                    0.0
                }
            }
            Self::Discounted { lambda } => pow_stage(1.0 - lambda, t - 1),
            Self::Custom { tails, .. } => tails.get(t - 1).copied().unwrap_or(0.0),
        }
    }

    /// Last stage with positive weight, if the support is finite.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            Self::Cesaro { horizon } => Some(*horizon),
            Self::Discounted { lambda } if *lambda >= 1.0 => Some(1),
            Self::Discounted { .. } => None,
            Self::Custom { weights, .. } => {
                Some(weights.iter().rposition(|w| *w > 0.0).map_or(1, |k| k + 1))
            }
        }
    }

    /// Smallest stage count after which the remaining weight is below `tol`.
    pub fn truncation(&self, tol: f64) -> usize {
        if let Some(h) = self.horizon() {
            return h;
        }
        let mut t = match self {
            Self::Discounted { lambda } => {
                ((tol.ln() / (1.0 - lambda).ln()).floor().max(0.0) as usize).max(1)
            }
            _ => 1,
        };
        while self.tail(t + 1) >= tol {
            t += 1;
        }
        while t > 1 && self.tail(t) < tol {
            t -= 1;
        }
        t
    }

    pub fn sum_squares(&self) -> f64 {
        match self {
            Self::Cesaro { horizon } => 1.0 / *horizon as f64,
            Self::Discounted { lambda } => lambda * lambda / (2.0 * lambda - lambda * lambda),
            Self::Custom { weights, .. } => weights.iter().map(|w| w * w).sum(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.sum_squares().sqrt()
    }
}

fn pow_stage(base: f64, k: usize) -> f64 {
    if k <= i32::MAX as usize {
        base.powi(k as i32)
    } else {
        base.powf(k as f64)
    }
}

/// Realized play up to the current stage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlayHistory {
    pairs: Vec<(usize, usize)>,
    absorbed: Option<usize>,
}

impl PlayHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the action pair of the next stage. Returns true when it absorbs.
    pub fn push(&mut self, spec: &GameSpec, i: usize, j: usize) -> Result<bool> {
        if let Some(stage) = self.absorbed {
            return Err(Error::Absorbed(stage));
        }
        if i >= spec.n1() || j >= spec.n2() {
            return Err(Error::Shape(format!("action pair ({i},{j}) out of range")));
        }
        self.pairs.push((i, j));
        if spec.is_absorbing(i, j) {
            self.absorbed = Some(self.pairs.len());
            return Ok(true);
        }
        Ok(false)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Stage at which the game was absorbed.
    pub fn absorbed_at(&self) -> Option<usize> {
        self.absorbed
    }

    pub fn last(&self) -> Option<(usize, usize)> {
        self.pairs.last().copied()
    }

    /// Sum of theta_t g over the history. An absorbing pair at stage t counts
    /// with the full tail weight from t on.
    pub fn weighted_payoff(&self, spec: &GameSpec, theta: &WeightSequence) -> Vec<f64> {
        let mut out = vec![0.0; spec.dim()];
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let t = k + 1;
            let w = if self.absorbed == Some(t) {
                theta.tail(t)
            } else {
                theta.weight(t)
            };
            for (o, v) in out.iter_mut().zip(spec.g(i, j)) {
                *o += w * v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn pure_and_mixed_payoffs() {
        let g = catalog::example6();
        let half = MixedAction::uniform(2);
        let l = MixedAction::pure(2, 0);
        assert_eq!(g.payoff(&half, &l), vec![0.5]);
        assert_eq!(g.classify(), GameClass::BigMatchII);
    }

    #[test]
    fn absorption_quantities_are_unnormalized() {
        let g = catalog::example6();
        let x = [0.5, 0.5];
        let y = [0.25, 0.75];
        assert!((g.absorption_prob(&x, &y) - 0.25).abs() < 1e-15);
        assert!((g.absorption_payoff(&x, &y)[0] - 0.125).abs() < 1e-15);
        let total = g.payoff(&x, &y)[0];
        let split = g.absorption_payoff(&x, &y)[0] + g.non_absorbing_payoff(&x, &y)[0];
        assert!((total - split).abs() < 1e-15);
    }

    #[test]
    fn perturbed_point_with_zero_measures_is_payoff() {
        let g = catalog::example5();
        let x = [0.3, 0.7];
        let y = [0.6, 0.4];
        let z = [0.0, 0.0];
        let a = g.perturbed_point(&x, &z, &y, &z);
        let b = g.payoff(&x, &y);
        assert!((a[0] - b[0]).abs() < 1e-15);
    }

    #[test]
    fn weighted_payoff_charges_the_tail_at_absorption() {
        let spec = GameSpec::new(
            1,
            vec![Action::new("B", false)],
            vec![Action::new("R", false), Action::new("Q", true)],
            vec![vec![vec![-1.0], vec![0.0]]],
        )
        .unwrap();
        let theta = WeightSequence::cesaro(10).unwrap();
        let mut h = PlayHistory::new();
        for _ in 0..5 {
            assert!(!h.push(&spec, 0, 0).unwrap());
        }
        assert!(h.push(&spec, 0, 1).unwrap());
        assert!((h.weighted_payoff(&spec, &theta)[0] + 0.5).abs() < 1e-15);
        assert!(matches!(h.push(&spec, 0, 0), Err(Error::Absorbed(6))));
    }

    #[test]
    fn normalization_is_enforced_or_rescaled() {
        let text = r#"{"d":1,"p1":[{"label":"T","quitting":false}],
            "p2":[{"label":"L","quitting":false},{"label":"R","quitting":true}],
            "payoff":[[[2.0],[-1.0]]]}"#;
        assert!(matches!(
            GameSpec::from_json(text, false),
            Err(Error::Normalization { .. })
        ));
        let (g, f) = GameSpec::from_json(text, true).unwrap();
        assert_eq!(f, 2.0);
        assert_eq!(g.g(0, 0), &[1.0]);
        assert_eq!(g.g(0, 1), &[-0.5]);
    }

    #[test]
    fn json_round_trip() {
        let g = catalog::example4();
        let (back, f) = GameSpec::from_json(&g.to_json(), false).unwrap();
        assert_eq!(f, 1.0);
        assert_eq!(back, g);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            GameSpec::new(
                1,
                vec![Action::new("T", false)],
                vec![Action::new("L", false)],
                vec![vec![]]
            ),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn mixed_action_validation() {
        assert!(MixedAction::new(vec![0.5, 0.6]).is_err());
        assert!(MixedAction::new(vec![-0.1, 1.1]).is_err());
        let m = MixedAction::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(m.sample_with(0.2), 0);
        assert_eq!(m.sample_with(0.3), 1);
        assert!(AbsorbingMeasure::new(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn weight_sequences() {
        let c = WeightSequence::cesaro(4).unwrap();
        assert_eq!(c.weight(4), 0.25);
        assert_eq!(c.weight(5), 0.0);
        assert_eq!(c.tail(2), 0.75);
        assert_eq!(c.horizon(), Some(4));
        let d = WeightSequence::discounted(0.1).unwrap();
        assert!((d.tail(3) - 0.81).abs() < 1e-15);
        assert!((d.weight(3) - 0.081).abs() < 1e-15);
        let direct: f64 = (1..5000).map(|t| d.weight(t).powi(2)).sum();
        assert!((d.sum_squares() - direct).abs() < 1e-12);
        assert!(WeightSequence::custom(vec![0.5, 0.4]).is_err());
        let u = WeightSequence::custom(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(u.tail(2), 0.5);
        assert_eq!(u.tail(4), 0.0);
        assert!(WeightSequence::discounted(0.0).is_err());
        assert_eq!(
            WeightSequence::parse("cesaro:10").unwrap(),
            WeightSequence::cesaro(10).unwrap()
        );
        assert!(WeightSequence::parse("geometric:3").is_err());
    }
}
