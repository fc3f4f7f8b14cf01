//! Numerical checkers for the approachability conditions.
//!
//! The three nested conditions optimize the distance from the target to
//!
//! ```text
//!   (g(x,y) + g*(a,y) + g*(x,b)) / (1 + p*(a,y) + p*(x,b))
//! ```
//!
//! over mixed actions `x`, `y` and absorbing measures `a`, `b`. For fixed
//! `x` and `y` the fraction is linear-fractional in each measure, so the
//! set it sweeps is the convex hull of a base point and finitely many
//! limit points (one per action with positive absorption). The inner
//! infimum over `a` is then a hull distance, the supremum over `b` of a
//! convex or quasiconvex function of that hull is attained at a vertex,
//! and the outer extrema are scanned on simplex grids. Where the order
//! `sup_b min_x` makes this reduction unavailable, measures are scanned on
//! a mass-by-direction grid that includes the infinite-mass limit.
//!
//! Condition values are Euclidean distances. The class-specific checkers
//! are linear programs; their value is the smallest common slack of the
//! unit-normalized target rows, which is zero exactly when the condition
//! holds at every grid point.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameClass, GameSpec, Player};
use crate::geometry::{hull_distance, MixedProblem, SimplexGrid, TargetSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConditionId {
    Cond1,
    Cond2,
    Cond3,
    BlackwellClassic,
    SuffBMII,
    BMICond1,
    AltA,
    AltB,
    UniformTypeII,
    ASUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

/// Grid and measure parameters shared by the checkers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckParams {
    pub eps: f64,
    pub mass_cap: f64,
    pub mass_points: usize,
    pub refine_iters: usize,
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            eps: 0.02,
            mass_cap: 1e3,
            mass_points: 20,
            refine_iters: 50,
        }
    }
}

impl CheckParams {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }

    pub fn holds_tol(&self) -> f64 {
        3.0 * self.eps + 1e-6
    }

    pub fn fails_tol(&self) -> f64 {
        10.0 * self.eps
    }

    pub fn verdict(&self, value: f64) -> Verdict {
        if value <= self.holds_tol() {
            Verdict::Holds
        } else if value >= self.fails_tol() {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    }

    /// `{0}`, a geometric ladder from `1/M` to `M`, and infinity.
    pub fn masses(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        let k = self.mass_points.max(2);
        let lo = 1.0 / self.mass_cap;
        let r = (self.mass_cap / lo).powf(1.0 / (k - 1) as f64);
        out.extend((0..k).map(|i| lo * r.powi(i as i32)));
        out.push(f64::INFINITY);
        out
    }
}

/// Extremal points found by a checker.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Witness {
    pub y: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub value: f64,
    pub verdict: Verdict,
    pub witness: Witness,
    pub eps: f64,
    pub mass_cap: f64,
    pub holds_tol: f64,
    pub fails_tol: f64,
    pub grid_points: usize,
}

impl ConditionReport {
    fn new(
        condition: ConditionId,
        value: f64,
        witness: Witness,
        params: &CheckParams,
        grid_points: usize,
    ) -> Self {
        let value = value.max(0.0);
        Self {
            condition,
            value,
            verdict: params.verdict(value),
            witness,
            eps: params.eps,
            mass_cap: params.mass_cap,
            holds_tol: params.holds_tol(),
            fails_tol: params.fails_tol(),
            grid_points,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_dims(spec: &GameSpec, target: &TargetSet) -> Result<()> {
    if spec.dim() != target.dim() {
        return Err(Error::Shape(format!(
            "game payoffs live in dimension {} but the target in {}",
            spec.dim(),
            target.dim()
        )));
    }
    Ok(())
}

fn require_class(spec: &GameSpec, class: GameClass, what: &str) -> Result<()> {
    let got = spec.classify();
    if got != class {
        return Err(Error::NotApplicable(format!(
            "{what} needs a {class:?} game, got {got:?}"
        )));
    }
    Ok(())
}

/// First index attaining the maximum, for deterministic witnesses.
fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

fn mix(vectors: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let d = vectors[0].len();
    let mut out = vec![0.0; d];
    for (v, &wk) in vectors.iter().zip(w) {
        if wk != 0.0 {
            for (o, c) in out.iter_mut().zip(v) {
                *o += wk * c;
            }
        }
    }
    out
}

/// Data of a game at a fixed column mixture `y`.
struct AtY {
    /// g(i, y) for every row.
    gy: Vec<Vec<f64>>,
    /// Limit points of the fraction as the row measure grows along each
    /// row with positive absorption, with that row's absorption rate.
    limits: Vec<Vec<f64>>,
    limit_rows: Vec<(usize, f64)>,
}

struct Structure<'a> {
    spec: &'a GameSpec,
    target: &'a TargetSet,
    rows_q: Vec<usize>,
    cols_q: Vec<usize>,
    cols_n: Vec<usize>,
    /// g(i, j) as row vectors for each column.
    by_col: Vec<Vec<Vec<f64>>>,
}

impl<'a> Structure<'a> {
    fn new(spec: &'a GameSpec, target: &'a TargetSet) -> Self {
        let by_col = (0..spec.n2())
            .map(|j| (0..spec.n1()).map(|i| spec.g(i, j).to_vec()).collect())
            .collect();
        Self {
            spec,
            target,
            rows_q: spec.quitting(Player::One),
            cols_q: spec.quitting(Player::Two),
            cols_n: spec.non_quitting(Player::Two),
            by_col,
        }
    }

    fn at_y(&self, y: &[f64]) -> AtY {
        let spec = self.spec;
        let mut gy = Vec::with_capacity(spec.n1());
        let mut limits = Vec::new();
        let mut limit_rows = Vec::new();
        for i in 0..spec.n1() {
            let mut unit = vec![0.0; spec.n1()];
            unit[i] = 1.0;
            gy.push(spec.payoff(&unit, y));
            let d = spec.absorption_prob(&unit, y);
            if d > 0.0 {
                let a = spec.absorption_payoff(&unit, y);
                limits.push(a.iter().map(|v| v / d).collect());
                limit_rows.push((i, d));
            }
        }
        AtY {
            gy,
            limits,
            limit_rows,
        }
    }

    /// Vertices of the fraction's range over column measures, excluding the base point.
    fn column_limits(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for &j in &self.cols_q {
            out.push(mix(&self.by_col[j], x));
        }
        let gamma: f64 = self.rows_q.iter().map(|&i| x[i]).sum();
        if gamma > 0.0 {
            for &j in &self.cols_n {
                let mut v = vec![0.0; self.spec.dim()];
                for &i in &self.rows_q {
                    for (o, c) in v.iter_mut().zip(self.spec.g(i, j)) {
                        *o += x[i] * c / gamma;
                    }
                }
                out.push(v);
            }
        }
        out
    }

    fn hull_with(&self, base: Vec<f64>, extra: &[Vec<f64>]) -> (f64, Vec<f64>) {
        if extra.is_empty() {
            return (self.target.distance(&base), vec![1.0]);
        }
        let mut pts = Vec::with_capacity(extra.len() + 1);
        pts.push(base);
        pts.extend_from_slice(extra);
        let h = hull_distance(&pts, self.target);
        (h.distance, h.weights)
    }

    /// Values of the first two conditions at `(y, x)`.
    fn inner12(&self, at: &AtY, x: &[f64], want2: bool) -> (f64, f64) {
        let gxy = mix(&at.gy, x);
        let (t1, _) = self.hull_with(gxy, &at.limits);
        let verts = self.column_limits(x);
        let mut c1 = t1;
        let mut c2 = t1;
        for v in &verts {
            c1 = c1.max(self.target.distance(v));
            if want2 {
                c2 = c2.max(self.hull_with(v.clone(), &at.limits).0);
            }
        }
        if !want2 {
            c2 = f64::NAN;
        }
        (c1, c2)
    }

    /// Row measure realizing the hull weights of the base point and limits.
    fn alpha_from(&self, at: &AtY, weights: &[f64], base_den: f64) -> Option<Vec<f64>> {
        let w0 = weights[0];
        let mut alpha = vec![0.0; self.spec.n1()];
        for (k, &(i, d)) in at.limit_rows.iter().enumerate() {
            let wk = weights[k + 1];
            if wk > 1e-12 {
                if w0 <= 1e-12 {
                    return None;
                }
                alpha[i] = wk * base_den / (w0 * d);
            }
        }
        Some(alpha)
    }
}

fn refine<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: Vec<f64>,
    f0: f64,
    step: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f0;
    let mut s = step;
    for _ in 0..iters {
        if fx <= 0.0 {
            break;
        }
        let mut improved = false;
        for from in 0..n {
            for to in 0..n {
                if from == to || x[from] <= 0.0 {
                    continue;
                }
                let delta = s.min(x[from]);
                let mut cand = x.clone();
                cand[from] -= delta;
                cand[to] += delta;
                let fc = f(&cand);
                if fc < fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                }
            }
        }
        if !improved {
            s *= 0.5;
        }
    }
    (x, fx)
}

/// Approximates condition 1, 2 or 3 on grids of resolution `params.eps`.
pub fn condition_value(
    spec: &GameSpec,
    target: &TargetSet,
    which: u8,
    params: &CheckParams,
) -> Result<ConditionReport> {
    check_dims(spec, target)?;
    match which {
        1 | 2 => Ok(conditions_12(spec, target, params)?.swap_remove(which as usize - 1)),
        3 => condition3(spec, target, params),
        _ => Err(Error::Parse(format!(
            "condition {which} is not one of 1, 2, 3"
        ))),
    }
}

/// Conditions 1 and 2 together, sharing grids and candidate responses so
/// that the reported values respect `value1 >= value2`.
pub fn conditions_12(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<Vec<ConditionReport>> {
    check_dims(spec, target)?;
    let st = Structure::new(spec, target);
    let ygrid = SimplexGrid::new(spec.n2(), params.eps)?;
    let xgrid = SimplexGrid::new(spec.n1(), params.eps)?;
    let step = 1.0 / xgrid.denominator as f64;
    let per_y: Vec<_> = ygrid
        .points
        .par_iter()
        .map(|y| {
            let at = st.at_y(y);
            let mut best1 = (f64::INFINITY, 0usize);
            let mut best2 = (f64::INFINITY, 0usize);
            for (k, x) in xgrid.points.iter().enumerate() {
                let (c1, c2) = st.inner12(&at, x, true);
                if c1 < best1.0 {
                    best1 = (c1, k);
                }
                if c2 < best2.0 {
                    best2 = (c2, k);
                }
            }
            let (x1, v1) = refine(
                |x| st.inner12(&at, x, false).0,
                xgrid.points[best1.1].clone(),
                best1.0,
                step,
                params.refine_iters,
            );
            let (x2, v2) = refine(
                |x| st.inner12(&at, x, true).1,
                xgrid.points[best2.1].clone(),
                best2.0,
                step,
                params.refine_iters,
            );
            let cross = st.inner12(&at, &x1, true).1;
            let (x2, v2) = if cross < v2 {
                (x1.clone(), cross)
            } else {
                (x2, v2)
            };
            (v1, x1, v2, x2)
        })
        .collect();
    let v1: Vec<f64> = per_y.iter().map(|r| r.0).collect();
    let v2: Vec<f64> = per_y.iter().map(|r| r.2).collect();
    let mut out = Vec::new();
    for (cid, vals, which) in [(ConditionId::Cond1, &v1, 1), (ConditionId::Cond2, &v2, 2)] {
        let k = argmax_first(vals);
        let y = &ygrid.points[k];
        let x = if which == 1 { &per_y[k].1 } else { &per_y[k].3 };
        let at = st.at_y(y);
        let (_, weights) = st.hull_with(mix(&at.gy, x), &at.limits);
        let alpha = st.alpha_from(&at, &weights, 1.0);
        let witness = Witness {
            y: y.clone(),
            x: Some(x.clone()),
            note: alpha
                .is_none()
                .then(|| "row measure at its infinite-mass limit".to_string()),
            alpha,
            ..Default::default()
        };
        out.push(ConditionReport::new(
            cid,
            vals[k],
            witness,
            params,
            ygrid.len(),
        ));
    }
    Ok(out)
}

/// Condition 3: `max_y sup_b min_x inf_a` of the distance.
pub fn condition3(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<ConditionReport> {
    check_dims(spec, target)?;
    let st = Structure::new(spec, target);
    let ygrid = SimplexGrid::new(spec.n2(), params.eps)?;
    let masses = params.masses();
    let n1 = spec.n1();
    // betas: (mass, direction index); mass 0 once
    let mut betas: Vec<(f64, usize)> = vec![(0.0, 0)];
    for &m in masses.iter().filter(|m| **m > 0.0) {
        for k in 0..ygrid.len() {
            betas.push((m, k));
        }
    }
    let eval = |at: &AtY, y: &[f64], m: f64, dir: &[f64]| -> (f64, Vec<f64>, Vec<f64>) {
        // image of each pure row under the fraction with column measure m * dir
        let mut pts = Vec::with_capacity(n1 + at.limits.len());
        let mut dens = Vec::with_capacity(n1);
        for i in 0..n1 {
            let mut unit = vec![0.0; n1];
            unit[i] = 1.0;
            let p = spec.absorption_prob(&unit, dir);
            let a = spec.absorption_payoff(&unit, dir);
            if m.is_infinite() {
                if p > 0.0 {
                    pts.push(a.iter().map(|v| v / p).collect());
                } else {
                    pts.push(at.gy[i].clone());
                }
                dens.push(if p > 0.0 { f64::INFINITY } else { 1.0 });
            } else {
                let den = 1.0 + m * p;
                pts.push(
                    at.gy[i]
                        .iter()
                        .zip(&a)
                        .map(|(g, a)| (g + m * a) / den)
                        .collect(),
                );
                dens.push(den);
            }
        }
        let _ = y;
        pts.extend(at.limits.iter().cloned());
        let h = hull_distance(&pts, st.target);
        (h.distance, h.weights, dens)
    };
    let per_y: Vec<(f64, usize, Vec<f64>, Vec<f64>)> = ygrid
        .points
        .par_iter()
        .map(|y| {
            let at = st.at_y(y);
            let mut best = (f64::NEG_INFINITY, 0usize, Vec::new(), Vec::new());
            for (b, &(m, k)) in betas.iter().enumerate() {
                let (v, w, dens) = eval(&at, y, m, &ygrid.points[k]);
                if v > best.0 {
                    best = (v, b, w, dens);
                }
            }
            best
        })
        .collect();
    let vals: Vec<f64> = per_y.iter().map(|r| r.0).collect();
    let k = argmax_first(&vals);
    let y = ygrid.points[k].clone();
    let (value, b, weights, dens) = per_y[k].clone();
    let (m, dir) = betas[b];
    let beta: Vec<f64> = ygrid.points[dir].iter().map(|v| v * m).collect();
    let at = st.at_y(&y);
    // recover x from the weights on row images, and the row measure from the rest
    let wx: Vec<f64> = (0..n1)
        .map(|i| {
            if dens[i].is_finite() {
                weights[i] / dens[i]
            } else {
                0.0
            }
        })
        .collect();
    let sx: f64 = wx.iter().sum();
    let wphi: f64 = weights[..n1].iter().sum();
    let finite_beta = m.is_finite();
    let x = (sx > 0.0 && finite_beta).then(|| wx.iter().map(|v| v / sx).collect::<Vec<_>>());
    let alpha = x.as_ref().and_then(|x| {
        let base_den = 1.0 + spec.absorption_prob(x, &beta);
        let mut w = vec![wphi];
        w.extend_from_slice(&weights[n1..]);
        st.alpha_from(&at, &w, base_den)
    });
    let witness = Witness {
        y,
        x,
        alpha,
        beta: finite_beta.then_some(beta),
        note: (!finite_beta).then(|| {
            format!(
                "column measure at its infinite-mass limit along {:?}",
                ygrid.points[dir]
            )
        }),
        ..Default::default()
    };
    Ok(ConditionReport::new(
        ConditionId::Cond3,
        value,
        witness,
        params,
        ygrid.len(),
    ))
}

/// `max_y min_x d_C(g(x, y))` over all actions, ignoring absorption.
pub fn blackwell_classic(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<ConditionReport> {
    check_dims(spec, target)?;
    let rows: Vec<usize> = (0..spec.n1()).collect();
    let cols: Vec<usize> = (0..spec.n2()).collect();
    let (value, y, x) = restricted_blackwell(spec, target, &rows, &cols, params.eps)?;
    let witness = Witness {
        y,
        x: Some(x),
        ..Default::default()
    };
    let n = SimplexGrid::new(spec.n2(), params.eps)?.len();
    Ok(ConditionReport::new(
        ConditionId::BlackwellClassic,
        value,
        witness,
        params,
        n,
    ))
}

/// Blackwell's condition with player 1 on `rows` and player 2 on `cols`.
/// Returns the value with its extremal `y` and best response `x` (full length).
fn restricted_blackwell(
    spec: &GameSpec,
    target: &TargetSet,
    rows: &[usize],
    cols: &[usize],
    eps: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if cols.is_empty() {
        return Ok((0.0, vec![], vec![]));
    }
    if rows.is_empty() {
        return Ok((f64::INFINITY, vec![], vec![]));
    }
    let grid = SimplexGrid::new(cols.len(), eps)?;
    let ys = grid.embed(spec.n2(), cols);
    let res: Vec<(f64, Vec<f64>)> = ys
        .par_iter()
        .map(|y| {
            let pts: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| {
                    let mut unit = vec![0.0; spec.n1()];
                    unit[i] = 1.0;
                    spec.payoff(&unit, y)
                })
                .collect();
            let h = hull_distance(&pts, target);
            let mut x = vec![0.0; spec.n1()];
            for (&i, w) in rows.iter().zip(&h.weights) {
                x[i] = *w;
            }
            (h.distance, x)
        })
        .collect();
    let vals: Vec<f64> = res.iter().map(|r| r.0).collect();
    let k = argmax_first(&vals);
    Ok((vals[k], ys[k].clone(), res[k].1.clone()))
}

/// Grid point witness of a linear membership checker.
#[derive(Debug, Clone, Serialize)]
pub struct GridWitness {
    pub y: Vec<f64>,
    /// Positive part of the optimal slack.
    pub violation: f64,
    pub x: Option<Vec<f64>>,
    pub x_star: Option<Vec<f64>>,
    pub gamma: Option<f64>,
}

fn col_vectors(spec: &GameSpec, rows: &[usize], y: &[f64]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&i| {
            let mut unit = vec![0.0; spec.n1()];
            unit[i] = 1.0;
            spec.payoff(&unit, y)
        })
        .collect()
}

fn pure_col(spec: &GameSpec, rows: &[usize], j: usize) -> Vec<Vec<f64>> {
    rows.iter().map(|&i| spec.g(i, j).to_vec()).collect()
}

fn scatter(n: usize, idx: &[usize], vals: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&i, v) in idx.iter().zip(vals) {
        out[i] = *v;
    }
    out
}

fn finish_lp(
    id: ConditionId,
    witnesses: &[GridWitness],
    params: &CheckParams,
    grid_points: usize,
) -> ConditionReport {
    if witnesses.is_empty() {
        return ConditionReport::new(id, 0.0, Witness::default(), params, 0);
    }
    let vals: Vec<f64> = witnesses.iter().map(|w| w.violation).collect();
    let k = argmax_first(&vals);
    let w = &witnesses[k];
    let witness = Witness {
        y: w.y.clone(),
        x: w.x.clone(),
        x_star: w.x_star.clone(),
        gamma: w.gamma,
        ..Default::default()
    };
    ConditionReport::new(id, vals[k], witness, params, grid_points)
}

/// Per grid point of the non-quitting columns: some x with g(x,y) and every
/// g(x,j*) in the target.
pub fn suff_bmii_witnesses(
    spec: &GameSpec,
    target: &TargetSet,
    eps: f64,
) -> Result<(SimplexGrid, Vec<GridWitness>)> {
    check_dims(spec, target)?;
    require_class(spec, GameClass::BigMatchII, "suff_bmii")?;
    let cols_n = spec.non_quitting(Player::Two);
    if cols_n.is_empty() {
        return Err(Error::NotApplicable(
            "player 2 has no non-quitting action".into(),
        ));
    }
    let grid = SimplexGrid::new(cols_n.len(), eps)?;
    let ys = grid.embed(spec.n2(), &cols_n);
    let ws = membership_scan(spec, target, &ys)?;
    Ok((grid, ws))
}

fn membership_scan(
    spec: &GameSpec,
    target: &TargetSet,
    ys: &[Vec<f64>],
) -> Result<Vec<GridWitness>> {
    let rows: Vec<usize> = (0..spec.n1()).collect();
    let cols_q = spec.quitting(Player::Two);
    ys.par_iter()
        .map(|y| {
            let mut prob =
                MixedProblem::single(rows.len()).member(col_vectors(spec, &rows, y), target);
            for &j in &cols_q {
                prob = prob.member(pure_col(spec, &rows, j), target);
            }
            let sol = prob.solve()?;
            Ok(GridWitness {
                y: y.clone(),
                violation: sol.violation.max(0.0),
                x: sol.x,
                x_star: None,
                gamma: None,
            })
        })
        .collect()
}

pub fn suff_bmii(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<ConditionReport> {
    let (grid, ws) = suff_bmii_witnesses(spec, target, params.eps)?;
    Ok(finish_lp(ConditionId::SuffBMII, &ws, params, grid.len()))
}

/// Blackwell's condition for the rows whose quitting-column payoffs lie in
/// the target, against every column mixture.
pub fn uniform_type2(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<ConditionReport> {
    check_dims(spec, target)?;
    require_class(spec, GameClass::BigMatchII, "uniform_type2")?;
    let rows: Vec<usize> = (0..spec.n1()).collect();
    let mut safe = MixedProblem::single(rows.len());
    for &j in &spec.quitting(Player::Two) {
        safe = safe.member(pure_col(spec, &rows, j), target);
    }
    let safe = safe.solve()?;
    let grid = SimplexGrid::new(spec.n2(), params.eps)?;
    if safe.violation > crate::geometry::INFEAS_TOL {
        let witness = Witness {
            y: vec![],
            x: safe.x,
            note: Some("the safe set of rows is empty".into()),
            ..Default::default()
        };
        return Ok(ConditionReport::new(
            ConditionId::UniformTypeII,
            safe.violation,
            witness,
            params,
            grid.len(),
        ));
    }
    let ws = membership_scan(spec, target, &grid.points)?;
    Ok(finish_lp(
        ConditionId::UniformTypeII,
        &ws,
        params,
        grid.len(),
    ))
}

/// Type-I witnesses `(x, x*, gamma)` per grid point, optionally with
/// `gamma <= gamma_cap`.
pub fn bmi_cond1_witnesses(
    spec: &GameSpec,
    target: &TargetSet,
    eps: f64,
    gamma_cap: Option<f64>,
) -> Result<(SimplexGrid, Vec<GridWitness>)> {
    check_dims(spec, target)?;
    require_class(spec, GameClass::BigMatchI, "bmi_cond1")?;
    let rows: Vec<usize> = (0..spec.n1()).collect();
    let rows_q = spec.quitting(Player::One);
    let rows_n = spec.non_quitting(Player::One);
    let grid = SimplexGrid::new(spec.n2(), eps)?;
    let ws = grid
        .points
        .par_iter()
        .map(|y| {
            let mut prob =
                MixedProblem::single(rows.len()).member(col_vectors(spec, &rows, y), target);
            if let Some(cap) = gamma_cap {
                prob = prob.hard_row(scatter(rows.len(), &rows_q, &vec![1.0; rows_q.len()]), cap);
            }
            let sol = prob.solve()?;
            Ok(split_witness(y, &sol, &rows_n, &rows_q))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, ws))
}

fn split_witness(
    y: &[f64],
    sol: &crate::geometry::MixedSolution,
    rows_n: &[usize],
    rows_q: &[usize],
) -> GridWitness {
    let Some(full) = &sol.x else {
        return GridWitness {
            y: y.to_vec(),
            violation: f64::INFINITY,
            x: None,
            x_star: None,
            gamma: None,
        };
    };
    let n = full.len();
    let gamma: f64 = rows_q.iter().map(|&i| full[i]).sum();
    let part = |idx: &[usize], mass: f64| {
        if idx.is_empty() {
            return None;
        }
        Some(if mass > 1e-12 {
            let mut v = vec![0.0; n];
            idx.iter().for_each(|&i| v[i] = full[i] / mass);
            v
        } else {
            crate::game::MixedAction::uniform_on(n, idx).into_inner()
        })
    };
    GridWitness {
        y: y.to_vec(),
        violation: sol.violation.max(0.0),
        x: part(rows_n, 1.0 - gamma),
        x_star: part(rows_q, gamma),
        gamma: Some(gamma.clamp(0.0, 1.0)),
    }
}

pub fn bmi_cond1(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<ConditionReport> {
    let (grid, ws) = bmi_cond1_witnesses(spec, target, params.eps, None)?;
    Ok(finish_lp(ConditionId::BMICond1, &ws, params, grid.len()))
}

fn gamma_grid(eps: f64, allow_zero: bool) -> Vec<f64> {
    let n = (1.0 / eps - 1e-9).ceil().max(1.0) as usize;
    let start = if allow_zero { 0 } else { 1 };
    (start..=n).map(|k| k as f64 / n as f64).collect()
}

/// Alternative (a): a quitting mixture safe against every non-quitting
/// column whose blend with some x is safe against every quitting column.
pub fn alternative_a(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<ConditionReport> {
    check_dims(spec, target)?;
    let rows_n = spec.non_quitting(Player::One);
    let rows_q = spec.quitting(Player::One);
    if rows_q.is_empty() {
        let witness = Witness {
            note: Some("player 1 has no quitting action".into()),
            ..Default::default()
        };
        return Ok(ConditionReport::new(
            ConditionId::AltA,
            f64::INFINITY,
            witness,
            params,
            0,
        ));
    }
    let gammas = if rows_n.is_empty() {
        vec![1.0]
    } else {
        gamma_grid(params.eps, false)
    };
    let best = gammas
        .par_iter()
        .map(|&g| alt_program(spec, target, &rows_n, &rows_q, g, None))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by(|a, b| a.violation.total_cmp(&b.violation))
        .expect("nonempty gamma grid");
    Ok(finish_lp(ConditionId::AltA, &[best], params, gammas.len()))
}

/// Builds and solves the program for either alternative at a fixed gamma.
/// With `y` present this is alternative (b), otherwise (a).
fn alt_program(
    spec: &GameSpec,
    target: &TargetSet,
    rows_n: &[usize],
    rows_q: &[usize],
    gamma: f64,
    y: Option<&[f64]>,
) -> Result<GridWitness> {
    let nn = rows_n.len();
    let nq = rows_q.len();
    let use_n = nn > 0 && (gamma < 1.0 || y.is_some());
    let use_q = nq > 0 && gamma > 0.0;
    let mut groups = Vec::new();
    if use_n {
        groups.push((0..nn).collect::<Vec<_>>());
    }
    if use_q {
        groups.push((nn..nn + nq).collect());
    }
    let n = nn + nq;
    let join =
        |a: Vec<Vec<f64>>, b: Vec<Vec<f64>>| -> Vec<Vec<f64>> { a.into_iter().chain(b).collect() };
    let zeros = |k: usize| vec![vec![0.0; spec.dim()]; k];
    let scale = |v: Vec<Vec<f64>>, s: f64| {
        v.into_iter()
            .map(|r| r.into_iter().map(|c| c * s).collect())
            .collect::<Vec<_>>()
    };
    let mut prob = MixedProblem {
        n,
        groups,
        members: vec![],
        hard: vec![],
    };
    // unused blocks are pinned to zero
    if !use_n && nn > 0 {
        prob.hard.push((
            scatter(n, &(0..nn).collect::<Vec<_>>(), &vec![1.0; nn]),
            0.0,
        ));
    }
    if !use_q && nq > 0 {
        prob.hard.push((
            scatter(n, &(nn..n).collect::<Vec<_>>(), &vec![1.0; nq]),
            0.0,
        ));
    }
    match y {
        None => {
            for &j in &spec.non_quitting(Player::Two) {
                prob = prob.member(join(zeros(nn), pure_col(spec, rows_q, j)), target);
            }
            for &j in &spec.quitting(Player::Two) {
                prob = prob.member(
                    join(
                        scale(pure_col(spec, rows_n, j), 1.0 - gamma),
                        scale(pure_col(spec, rows_q, j), gamma),
                    ),
                    target,
                );
            }
        }
        Some(y) => {
            for &j in &spec.quitting(Player::Two) {
                prob = prob.member(join(pure_col(spec, rows_n, j), zeros(nq)), target);
            }
            prob = prob.member(
                join(
                    scale(col_vectors(spec, rows_n, y), 1.0 - gamma),
                    scale(col_vectors(spec, rows_q, y), gamma),
                ),
                target,
            );
        }
    }
    if prob.members.is_empty() {
        prob = prob.member(zeros(n), target);
    }
    let sol = prob.solve()?;
    let x_full = sol.x.as_ref().map(|v| {
        let mut full = vec![0.0; spec.n1()];
        let mut xs = vec![0.0; spec.n1()];
        for (k, &i) in rows_n.iter().enumerate() {
            full[i] = v[k];
        }
        for (k, &i) in rows_q.iter().enumerate() {
            xs[i] = v[nn + k];
        }
        (full, xs)
    });
    Ok(GridWitness {
        y: y.map(|v| v.to_vec()).unwrap_or_default(),
        violation: sol.violation.max(0.0),
        x: x_full.as_ref().filter(|_| use_n).map(|p| p.0.clone()),
        x_star: x_full.as_ref().filter(|_| use_q).map(|p| p.1.clone()),
        gamma: Some(gamma),
    })
}

/// Alternative (b) witnesses per grid point of the non-quitting columns.
pub fn alternative_b_witnesses(
    spec: &GameSpec,
    target: &TargetSet,
    eps: f64,
    gamma_cap: f64,
) -> Result<(SimplexGrid, Vec<GridWitness>)> {
    check_dims(spec, target)?;
    let rows_n = spec.non_quitting(Player::One);
    let rows_q = spec.quitting(Player::One);
    let cols_n = spec.non_quitting(Player::Two);
    if cols_n.is_empty() {
        return Ok((
            SimplexGrid {
                n: 0,
                denominator: 1,
                points: vec![],
            },
            vec![],
        ));
    }
    let grid = SimplexGrid::new(cols_n.len(), eps)?;
    let ys = grid.embed(spec.n2(), &cols_n);
    let gammas: Vec<f64> = if rows_q.is_empty() {
        vec![0.0]
    } else {
        gamma_grid(eps, true)
            .into_iter()
            .filter(|g| *g <= gamma_cap + 1e-12)
            .collect()
    };
    let ws = ys
        .par_iter()
        .map(|y| {
            let mut best: Option<GridWitness> = None;
            for &g in &gammas {
                if rows_n.is_empty() {
                    break;
                }
                let w = alt_program(spec, target, &rows_n, &rows_q, g, Some(y))?;
                let better = best.as_ref().is_none_or(|b| w.violation < b.violation);
                if better {
                    let done = w.violation <= 0.0;
                    best = Some(w);
                    if done {
                        break;
                    }
                }
            }
            Ok(best.unwrap_or(GridWitness {
                y: y.clone(),
                violation: f64::INFINITY,
                x: None,
                x_star: None,
                gamma: None,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, ws))
}

/// Both alternatives of the general quitting lemma.
pub fn quitting_alternatives(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<(ConditionReport, ConditionReport)> {
    let a = alternative_a(spec, target, params)?;
    let (grid, ws) = alternative_b_witnesses(spec, target, params.eps, 1.0)?;
    let b = finish_lp(ConditionId::AltB, &ws, params, grid.len());
    Ok((a, b))
}

/// Uniform almost-sure approachability by the three-case characterization.
pub fn as_uniform(
    spec: &GameSpec,
    target: &TargetSet,
    params: &CheckParams,
) -> Result<ConditionReport> {
    check_dims(spec, target)?;
    const MEMBER_TOL: f64 = 1e-9;
    let rows_n = spec.non_quitting(Player::One);
    let rows_q = spec.quitting(Player::One);
    let cols_n = spec.non_quitting(Player::Two);
    let cols_q = spec.quitting(Player::Two);
    let worst = |i: usize, cols: &[usize]| {
        cols.iter()
            .map(|&j| target.distance(spec.g(i, j)))
            .fold(0.0, f64::max)
    };
    let safe: Vec<usize> = rows_n
        .iter()
        .copied()
        .filter(|&i| worst(i, &cols_q) <= MEMBER_TOL)
        .collect();
    let all_cols: Vec<usize> = (0..spec.n2()).collect();
    let quit_cols = if safe.is_empty() { &all_cols } else { &cols_n };
    let quit = rows_q
        .iter()
        .map(|&i| (worst(i, quit_cols), i))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let case = match (spec.classify(), safe.is_empty()) {
        (GameClass::NoQuitting, _) => "no quitting actions",
        (GameClass::BigMatchI, _) => "type I",
        (GameClass::BigMatchII, _) => "type II",
        (GameClass::General, true) => "general, no safe non-quitting row",
        (GameClass::General, false) => "general, some safe non-quitting row",
    };
    let (bw, by, bx) = restricted_blackwell(spec, target, &safe, &cols_n, params.eps)?;
    let mut witness = Witness {
        note: Some(case.to_string()),
        ..Default::default()
    };
    let mut value = bw;
    witness.y = by;
    if !bx.is_empty() {
        witness.x = Some(bx);
    }
    if let Some((qv, i)) = quit {
        if qv < value {
            value = qv;
            witness.x_star = Some(crate::game::MixedAction::pure(spec.n1(), i).into_inner());
            witness.x = None;
            witness.y = vec![];
        }
    }
    if value.is_infinite() {
        // distance to making some non-quitting row safe
        value = rows_n
            .iter()
            .map(|&i| worst(i, &cols_q))
            .fold(f64::INFINITY, f64::min);
    }
    let n = if cols_n.is_empty() {
        0
    } else {
        SimplexGrid::new(cols_n.len(), params.eps)?.len()
    };
    Ok(ConditionReport::new(
        ConditionId::ASUniform,
        value,
        witness,
        params,
        n,
    ))
}

/// Dispatches a checker by its command-line name.
pub fn check_by_name(
    spec: &GameSpec,
    target: &TargetSet,
    which: &str,
    params: &CheckParams,
) -> Result<Vec<ConditionReport>> {
    Ok(match which {
        "1" | "cond1" => vec![condition_value(spec, target, 1, params)?],
        "2" | "cond2" => vec![condition_value(spec, target, 2, params)?],
        "3" | "cond3" => vec![condition_value(spec, target, 3, params)?],
        "blackwell" => vec![blackwell_classic(spec, target, params)?],
        "suff_bmii" => vec![suff_bmii(spec, target, params)?],
        "bmi_cond1" => vec![bmi_cond1(spec, target, params)?],
        "alt" | "alternatives" => {
            let (a, b) = quitting_alternatives(spec, target, params)?;
            vec![a, b]
        }
        "alt_a" => vec![alternative_a(spec, target, params)?],
        "uniform_type2" => vec![uniform_type2(spec, target, params)?],
        "as_uniform" => vec![as_uniform(spec, target, params)?],
        _ => return Err(Error::Parse(format!("unknown condition `{which}`"))),
    })
}

pub const CHECK_NAMES: [&str; 10] = [
    "1",
    "2",
    "3",
    "blackwell",
    "suff_bmii",
    "bmi_cond1",
    "alt",
    "alt_a",
    "uniform_type2",
    "as_uniform",
];
