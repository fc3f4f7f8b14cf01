//! Target sets, simplex grids and the small convex solvers built on them.
//!
//! Every target is a bounded polytope, so distances between a target and
//! the convex hull of finitely many points reduce to a minimum-norm point
//! problem over pairwise differences, solved exactly by Wolfe's algorithm.
//! Membership of a mixed-action image in a target is a linear program.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::PROB_TOL;

/// Tolerance below which a linear feasibility problem counts as feasible.
pub const FEAS_TOL: f64 = 1e-8;
/// Above this violation a problem counts as infeasible.
pub const INFEAS_TOL: f64 = 1e-6;

/// Largest grid enumerated before reporting a resource error.
pub const GRID_LIMIT: u128 = 5_000_000;
const VERTEX_SUBSET_LIMIT: u128 = 200_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum TargetFile {
    Point { c: Vec<f64> },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Hpoly { a: Vec<Vec<f64>>, b: Vec<f64> },
}

/// A closed convex target in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSet {
    Point(Vec<f64>),
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{z : a_r . z <= b_r}` with unit-norm rows, bounded and nonempty.
    HPolytope {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        vertices: Vec<Vec<f64>>,
    },
}

impl TargetSet {
    pub fn point(c: Vec<f64>) -> Self {
        Self::Point(c)
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidTarget(
                "box bounds must have equal positive length".into(),
            ));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTarget("box bounds must be finite".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::EmptyTarget);
        }
        Ok(Self::Box { lower, upper })
    }

    /// Normalizes rows, checks nonemptiness and boundedness, and enumerates vertices.
    pub fn hpolytope(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidTarget(
                "need as many right-hand sides as rows".into(),
            ));
        }
        let d = a[0].len();
        if d == 0 || a.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidTarget(
                "rows must share a positive dimension".into(),
            ));
        }
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (r, &bi) in a.iter().zip(&b) {
            if r.iter().any(|v| !v.is_finite()) || !bi.is_finite() {
                return Err(Error::InvalidTarget("non-finite coefficient".into()));
            }
            let n = crate::game::norm(r);
            if n < 1e-12 {
                if bi < 0.0 {
                    return Err(Error::EmptyTarget);
                }
                continue;
            }
            let n = if (n - 1.0).abs() < 1e-12 { 1.0 } else { n };
            rows.push(r.iter().map(|v| v / n).collect::<Vec<_>>());
            rhs.push(bi / n);
        }
        check_polytope_lp(&rows, &rhs, d)?;
        let vertices = enumerate_vertices(&rows, &rhs, d)?;
        if vertices.is_empty() {
            return Err(Error::EmptyTarget);
        }
        Ok(Self::HPolytope {
            a: rows,
            b: rhs,
            vertices,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str::<TargetFile>(text)? {
            TargetFile::Point { c } => {
                if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidTarget(
                        "point must be finite and nonempty".into(),
                    ));
                }
                Ok(Self::Point(c))
            }
            TargetFile::Box { lower, upper } => Self::boxed(lower, upper),
            TargetFile::Hpoly { a, b } => Self::hpolytope(a, b),
        }
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&crate::error::read_file(path)?)
    }

    pub fn to_json(&self) -> String {
        let f = match self {
            Self::Point(c) => TargetFile::Point { c: c.clone() },
            Self::Box { lower, upper } => TargetFile::Box {
                lower: lower.clone(),
                upper: upper.clone(),
            },
            Self::HPolytope { a, b, .. } => TargetFile::Hpoly {
                a: a.clone(),
                b: b.clone(),
            },
        };
        serde_json::to_string(&f).expect("target serializes")
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Point(c) => c.len(),
            Self::Box { lower, .. } => lower.len(),
            Self::HPolytope { a, .. } => a[0].len(),
        }
    }

    /// Scales the set about the origin by `1 / factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| x / factor).collect::<Vec<_>>();
        match self {
            Self::Point(c) => Self::Point(s(c)),
            Self::Box { lower, upper } => Self::Box {
                lower: s(lower),
                upper: s(upper),
            },
            Self::HPolytope { a, b, vertices } => Self::HPolytope {
                a: a.clone(),
                b: s(b),
                vertices: vertices.iter().map(s).collect(),
            },
        }
    }

    /// Extreme points; the set is their convex hull.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Point(c) => vec![c.clone()],
            Self::Box { lower, upper } => {
                let d = lower.len();
                let free: Vec<usize> = (0..d).filter(|&k| upper[k] > lower[k]).collect();
                (0..1usize << free.len())
                    .map(|mask| {
                        let mut v = lower.clone();
                        for (bit, &k) in free.iter().enumerate() {
                            if mask >> bit & 1 == 1 {
                                v[k] = upper[k];
                            }
                        }
                        v
                    })
                    .collect()
            }
            Self::HPolytope { vertices, .. } => vertices.clone(),
        }
    }

    /// Euclidean projection.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim(), "dimension mismatch");
        match self {
            Self::Point(c) => c.clone(),
            Self::Box { lower, upper } => z
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            Self::HPolytope { vertices, .. } => {
                let diffs: Vec<Vec<f64>> = vertices.iter().map(|v| sub(v, z)).collect();
                let mn = min_norm_point(&diffs);
                add(z, &mn.point)
            }
        }
    }

    /// Euclidean distance `d_C(z)`.
    pub fn distance(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.dim(), "dimension mismatch");
        match self {
            Self::Point(c) => dist(z, c),
            Self::Box { lower, upper } => z
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| {
                    let e = if v < l {
                        l - v
                    } else if v > u {
                        v - u
                    } else {
                        0.0
                    };
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            Self::HPolytope { .. } => dist(z, &self.project(z)),
        }
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.distance(z) <= tol
    }

    /// Linear description as rows `(a, b, equality)` with unit-norm `a`.
    pub fn linear_rows(&self) -> Vec<(Vec<f64>, f64, bool)> {
        let d = self.dim();
        let unit = |k: usize, s: f64| {
            let mut e = vec![0.0; d];
            e[k] = s;
            e
        };
        match self {
            Self::Point(c) => (0..d).map(|k| (unit(k, 1.0), c[k], true)).collect(),
            Self::Box { lower, upper } => (0..d)
                .flat_map(|k| {
                    [
                        (unit(k, 1.0), upper[k], false),
                        (unit(k, -1.0), -lower[k], false),
                    ]
                })
                .collect(),
            Self::HPolytope { a, b, .. } => a
                .iter()
                .cloned()
                .zip(b.iter().copied())
                .map(|(r, v)| (r, v, false))
                .collect(),
        }
    }

    /// A box grown by `delta` on every side.
    pub fn inflate_box(&self, delta: f64) -> Option<Self> {
        match self {
            Self::Box { lower, upper } => Some(Self::Box {
                lower: lower.iter().map(|v| v - delta).collect(),
                upper: upper.iter().map(|v| v + delta).collect(),
            }),
            _ => None,
        }
    }
}

fn check_polytope_lp(a: &[Vec<f64>], b: &[f64], d: usize) -> Result<()> {
    for k in 0..d {
        for dir in [
            OptimizationDirection::Maximize,
            OptimizationDirection::Minimize,
        ] {
            let mut p = Problem::new(dir);
            let z: Vec<_> = (0..d)
                .map(|c| {
                    p.add_var(
                        if c == k { 1.0 } else { 0.0 },
                        (f64::NEG_INFINITY, f64::INFINITY),
                    )
                })
                .collect();
            for (row, &rhs) in a.iter().zip(b) {
                let expr: Vec<_> = z.iter().copied().zip(row.iter().copied()).collect();
                p.add_constraint(expr.as_slice(), ComparisonOp::Le, rhs);
            }
            match p.solve() {
                Ok(_) => {}
                Err(minilp::Error::Infeasible) => return Err(Error::EmptyTarget),
                Err(minilp::Error::Unbounded) => {
                    return Err(Error::InvalidTarget("polytope must be bounded".into()))
                }
            }
        }
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn enumerate_vertices(a: &[Vec<f64>], b: &[f64], d: usize) -> Result<Vec<Vec<f64>>> {
    let m = a.len();
    if m < d {
        return Err(Error::InvalidTarget("polytope must be bounded".into()));
    }
    if binomial(m, d) > VERTEX_SUBSET_LIMIT {
        return Err(Error::InvalidTarget(format!(
            "{m} facets in dimension {d} is too many"
        )));
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let mat: Vec<Vec<f64>> = idx.iter().map(|&r| a[r].clone()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&r| b[r]).collect();
        if let Some(z) = solve_linear(mat, rhs) {
            let feasible = a.iter().zip(b).all(|(r, &bi)| dot(r, &z) <= bi + 1e-9);
            if feasible && !out.iter().any(|v| dist(v, &z) < 1e-9) {
                out.push(z);
            }
        }
        // next combination
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if idx[k] < m - d + k {
                idx[k] += 1;
                for l in k + 1..d {
                    idx[l] = idx[l - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Minimum-norm point of a polytope given by its generators.
#[derive(Debug, Clone)]
pub struct MinNorm {
    pub point: Vec<f64>,
    /// Convex weights on the generators.
    pub weights: Vec<f64>,
}

/// Wolfe's algorithm for the point of smallest norm in `conv(points)`.
pub fn min_norm_point(points: &[Vec<f64>]) -> MinNorm {
    assert!(!points.is_empty(), "need at least one generator");
    let m = points.len();
    let d = points[0].len();
    let sq: Vec<f64> = points.iter().map(|p| dot(p, p)).collect();
    let scale = sq.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let start = (0..m).min_by(|&a, &b| sq[a].total_cmp(&sq[b])).unwrap();
    let mut active: Vec<usize> = vec![start];
    let mut lam: Vec<f64> = vec![1.0];
    let combine = |act: &[usize], w: &[f64]| {
        let mut x = vec![0.0; d];
        for (&k, &wk) in act.iter().zip(w) {
            for (xc, pc) in x.iter_mut().zip(&points[k]) {
                *xc += wk * pc;
            }
        }
        x
    };
    let mut x = points[start].clone();
    for _major in 0..(50 * (m + d) + 100) {
        let xx = dot(&x, &x);
        if xx <= 1e-28 * scale {
            break;
        }
        let (j, xj) = (0..m)
            .map(|k| (k, dot(&x, &points[k])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xj >= xx - 1e-13 * scale || active.contains(&j) {
            break;
        }
        active.push(j);
        lam.push(0.0);
        loop {
            let alpha = match affine_min_norm(points, &active) {
                Some(a) => a,
                None => {
                    // drop the newest generator's degenerate partner
                    let drop = (0..active.len() - 1)
                        .min_by(|&a, &b| lam[a].total_cmp(&lam[b]))
                        .unwrap_or(0);
                    active.remove(drop);
                    lam.remove(drop);
                    let s: f64 = lam.iter().sum();
                    lam.iter_mut().for_each(|v| *v /= s);
                    continue;
                }
            };
            if alpha.iter().all(|&a| a > 1e-14) {
                lam = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (a, l) in alpha.iter().zip(&lam) {
                if *a <= 1e-14 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            let keep: Vec<bool> = lam.iter().map(|l| *l > 1e-14).collect();
            let mut k = 0;
            active.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            lam.retain(|l| *l > 1e-14);
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|v| *v /= s);
            if active.len() == 1 {
                lam = vec![1.0];
                break;
            }
        }
        x = combine(&active, &lam);
    }
    let mut weights = vec![0.0; m];
    for (&k, &w) in active.iter().zip(&lam) {
        weights[k] = w;
    }
    MinNorm { point: x, weights }
}

/// Minimum-norm point of the affine hull of the active generators.
fn affine_min_norm(points: &[Vec<f64>], active: &[usize]) -> Option<Vec<f64>> {
    let k = active.len();
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = dot(&points[active[r]], &points[active[c]]);
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
    }
    let mut b = vec![0.0; k + 1];
    b[k] = 1.0;
    let sol = solve_linear(a, b)?;
    Some(sol[..k].to_vec())
}

/// Distance from a target to the convex hull of `points`.
#[derive(Debug, Clone)]
pub struct HullDistance {
    pub distance: f64,
    /// Convex weights on `points` of a nearest hull point.
    pub weights: Vec<f64>,
    pub hull_point: Vec<f64>,
}

pub fn hull_distance(points: &[Vec<f64>], target: &TargetSet) -> HullDistance {
    let verts = target.vertices();
    let nv = verts.len();
    let mut diffs = Vec::with_capacity(points.len() * nv);
    for p in points {
        for v in &verts {
            diffs.push(sub(p, v));
        }
    }
    let mn = min_norm_point(&diffs);
    let mut weights = vec![0.0; points.len()];
    for (k, w) in mn.weights.iter().enumerate() {
        weights[k / nv] += w;
    }
    let d = points[0].len();
    let mut hull_point = vec![0.0; d];
    for (p, w) in points.iter().zip(&weights) {
        for (h, c) in hull_point.iter_mut().zip(p) {
            *h += w * c;
        }
    }
    HullDistance {
        distance: dot(&mn.point, &mn.point).sqrt(),
        weights,
        hull_point,
    }
}

/// The uniform grid `{k / N}` on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGrid {
    pub n: usize,
    pub denominator: usize,
    pub points: Vec<Vec<f64>>,
}

/// Worst-case l1 distance from the simplex to the grid, times the denominator.
pub fn l1_covering_constant(n: usize) -> f64 {
    2.0 * (n / 2) as f64 * n.div_ceil(2) as f64 / n as f64
}

impl SimplexGrid {
    /// Uniform grid whose l1 covering radius is at most `eps`.
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("grid over an empty simplex".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Shape(format!(
                "grid resolution {eps} must be positive"
            )));
        }
        let c = l1_covering_constant(n).max(1.0);
        let den = ((c / eps) - 1e-9).ceil().max(1.0) as usize;
        Self::with_denominator(n, den)
    }

    pub fn with_denominator(n: usize, den: usize) -> Result<Self> {
        let count = binomial(den + n - 1, n - 1);
        if count > GRID_LIMIT {
            return Err(Error::GridTooLarge {
                points: count,
                limit: GRID_LIMIT,
            });
        }
        let mut points = Vec::with_capacity(count as usize);
        let mut comp = vec![0usize; n];
        fill(&mut comp, 0, den, den, &mut points);
        Ok(Self {
            n,
            denominator: den,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// l1 covering radius actually achieved.
    pub fn covering_radius(&self) -> f64 {
        l1_covering_constant(self.n) / self.denominator as f64
    }

    /// Index of an l1-nearest grid point.
    pub fn nearest(&self, p: &[f64]) -> usize {
        (0..self.points.len())
            .min_by(|&a, &b| l1(&self.points[a], p).total_cmp(&l1(&self.points[b], p)))
            .unwrap()
    }

    /// Embeds each point into a larger simplex on the listed coordinates.
    pub fn embed(&self, total: usize, coords: &[usize]) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| {
                let mut v = vec![0.0; total];
                for (&c, &x) in coords.iter().zip(p) {
                    v[c] = x;
                }
                v
            })
            .collect()
    }
}

fn fill(comp: &mut [usize], pos: usize, left: usize, den: usize, out: &mut Vec<Vec<f64>>) {
    if pos == comp.len() - 1 {
        comp[pos] = left;
        out.push(comp.iter().map(|&k| k as f64 / den as f64).collect());
        return;
    }
    for k in (0..=left).rev() {
        comp[pos] = k;
        fill(comp, pos + 1, left - k, den, out);
    }
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `sum_i x_i v_i` must lie in `target`, up to the common slack.
#[derive(Debug, Clone)]
pub struct Membership<'a> {
    pub vectors: Vec<Vec<f64>>,
    pub target: &'a TargetSet,
}

/// Linear feasibility over products of simplices.
///
/// Variables are nonnegative; each group of indices sums to one. All
/// membership rows share one slack `t`, which is minimized. Hard rows
/// `coef . x <= rhs` take no slack.
#[derive(Debug, Clone, Default)]
pub struct MixedProblem<'a> {
    pub n: usize,
    pub groups: Vec<Vec<usize>>,
    pub members: Vec<Membership<'a>>,
    pub hard: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    Feasible,
    Uncertain,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct MixedSolution {
    pub status: Feasibility,
    /// Optimal common slack; negative values mean strict interior.
    pub violation: f64,
    /// Minimizer, absent only when the hard rows are infeasible.
    pub x: Option<Vec<f64>>,
}

impl<'a> MixedProblem<'a> {
    pub fn single(n: usize) -> Self {
        Self {
            n,
            groups: vec![(0..n).collect()],
            ..Default::default()
        }
    }

    pub fn member(mut self, vectors: Vec<Vec<f64>>, target: &'a TargetSet) -> Self {
        self.members.push(Membership { vectors, target });
        self
    }

    pub fn hard_row(mut self, coef: Vec<f64>, rhs: f64) -> Self {
        self.hard.push((coef, rhs));
        self
    }

    pub fn solve(&self) -> Result<MixedSolution> {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let xs: Vec<_> = (0..self.n).map(|_| p.add_var(0.0, (0.0, 1.0))).collect();
        let t = p.add_var(1.0, (-1.0, f64::INFINITY));
        for g in &self.groups {
            let expr: Vec<_> = g.iter().map(|&k| (xs[k], 1.0)).collect();
            p.add_constraint(expr.as_slice(), ComparisonOp::Eq, 1.0);
        }
        for (coef, rhs) in &self.hard {
            let expr: Vec<_> = xs.iter().copied().zip(coef.iter().copied()).collect();
            p.add_constraint(expr.as_slice(), ComparisonOp::Le, *rhs);
        }
        for m in &self.members {
            if m.vectors.len() != self.n {
                return Err(Error::Shape(
                    "membership needs one vector per variable".into(),
                ));
            }
            for (row, b, eq) in m.target.linear_rows() {
                let coefs: Vec<f64> = m.vectors.iter().map(|v| dot(&row, v)).collect();
                let mut expr: Vec<_> = xs.iter().copied().zip(coefs.iter().copied()).collect();
                expr.push((t, -1.0));
                p.add_constraint(expr.as_slice(), ComparisonOp::Le, b);
                if eq {
                    let mut neg: Vec<_> =
                        xs.iter().copied().zip(coefs.iter().map(|c| -c)).collect();
                    neg.push((t, -1.0));
                    p.add_constraint(neg.as_slice(), ComparisonOp::Le, -b);
                }
            }
        }
        match p.solve() {
            Ok(sol) => {
                let mut x: Vec<f64> = xs.iter().map(|v| sol[*v].max(0.0)).collect();
                for g in &self.groups {
                    let s: f64 = g.iter().map(|&k| x[k]).sum();
                    if s > 0.0 {
                        g.iter().for_each(|&k| x[k] /= s);
                    }
                }
                let violation = if self.members.is_empty() {
                    -1.0
                } else {
                    sol[t]
                };
                Ok(MixedSolution {
                    status: classify_violation(violation),
                    violation,
                    x: Some(x),
                })
            }
            Err(minilp::Error::Infeasible) => Ok(MixedSolution {
                status: Feasibility::Infeasible,
                violation: f64::INFINITY,
                x: None,
            }),
            Err(minilp::Error::Unbounded) => {
                Err(Error::Solver("membership program unbounded".into()))
            }
        }
    }
}

pub fn classify_violation(v: f64) -> Feasibility {
    if v <= FEAS_TOL {
        Feasibility::Feasible
    } else if v <= INFEAS_TOL {
        Feasibility::Uncertain
    } else {
        Feasibility::Infeasible
    }
}

/// Finds x in the simplex with `sum_i x_i v_i` in `target` and each extra
/// image in its own target.
pub fn feasible_mixed(
    vectors: &[Vec<f64>],
    target: &TargetSet,
    extra: &[(Vec<Vec<f64>>, &TargetSet)],
) -> Result<MixedSolution> {
    if vectors.is_empty() {
        return Err(Error::Shape("no actions".into()));
    }
    if vectors.iter().any(|v| v.len() != target.dim()) {
        return Err(Error::Shape("vector and target dimensions differ".into()));
    }
    let mut prob = MixedProblem::single(vectors.len()).member(vectors.to_vec(), target);
    for (v, c) in extra {
        prob = prob.member(v.clone(), c);
    }
    prob.solve()
}

/// Optimal row strategy of `min_x max_j sum_i x_i m[i][j]` and its value.
pub fn solve_min_max(m: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let n = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    if n == 0 || cols == 0 {
        return Err(Error::Shape("empty matrix game".into()));
    }
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let xs: Vec<_> = (0..n).map(|_| p.add_var(0.0, (0.0, 1.0))).collect();
    let v = p.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let sum: Vec<_> = xs.iter().map(|x| (*x, 1.0)).collect();
    p.add_constraint(sum.as_slice(), ComparisonOp::Eq, 1.0);
    for j in 0..cols {
        let mut expr: Vec<_> = (0..n).map(|i| (xs[i], m[i][j])).collect();
        expr.push((v, -1.0));
        p.add_constraint(expr.as_slice(), ComparisonOp::Le, 0.0);
    }
    let sol = p
        .solve()
        .map_err(|e| Error::Solver(format!("matrix game: {e}")))?;
    let x: Vec<f64> = xs.iter().map(|x| sol[*x].max(0.0)).collect();
    let s: f64 = x.iter().sum();
    debug_assert!((s - 1.0).abs() < 1e-6 + PROB_TOL);
    Ok((x.iter().map(|v| v / s).collect(), sol[v]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TargetSet {
        TargetSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn distances_to_simple_targets() {
        assert!((TargetSet::point(vec![0.0]).distance(&[-0.27788]) - 0.27788).abs() < 1e-15);
        assert_eq!(unit_square().distance(&[2.0, 0.0]), 1.0);
        assert_eq!(unit_square().project(&[2.0, 0.5]), vec![1.0, 0.5]);
    }

    #[test]
    fn hpolytope_matches_box() {
        let h = TargetSet::hpolytope(
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 2.0],
                vec![0.0, -1.0],
            ],
            vec![1.0, 0.0, 2.0, 0.0],
        )
        .unwrap();
        assert_eq!(h.vertices().len(), 4);
        for z in [[2.0, 0.0], [0.5, 0.5], [-1.0, 3.0], [0.3, -2.0]] {
            assert!(
                (h.distance(&z) - unit_square().distance(&z)).abs() < 1e-12,
                "{z:?}"
            );
        }
    }

    #[test]
    fn hpolytope_errors() {
        assert!(matches!(
            TargetSet::hpolytope(vec![vec![1.0], vec![-1.0]], vec![-1.0, -1.0]),
            Err(Error::EmptyTarget)
        ));
        assert!(matches!(
            TargetSet::hpolytope(vec![vec![1.0, 0.0]], vec![1.0]),
            Err(Error::InvalidTarget(_))
        ));
    }

    #[test]
    fn target_json_round_trip() {
        for t in [
            TargetSet::point(vec![0.5, 0.0]),
            unit_square(),
            TargetSet::hpolytope(
                vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
                vec![1.0, 0.0, 0.0],
            )
            .unwrap(),
        ] {
            assert_eq!(TargetSet::from_json(&t.to_json()).unwrap(), t);
        }
        assert!(TargetSet::from_json(r#"{"type":"ball","r":1}"#).is_err());
    }

    #[test]
    fn grids_have_expected_sizes() {
        let g = SimplexGrid::new(2, 0.5).unwrap();
        assert_eq!(
            g.points,
            vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]
        );
        assert_eq!(SimplexGrid::new(2, 0.1).unwrap().len(), 11);
        assert_eq!(SimplexGrid::new(2, 0.02).unwrap().len(), 51);
        assert_eq!(SimplexGrid::new(1, 0.3).unwrap().points, vec![vec![1.0]]);
        assert!(matches!(
            SimplexGrid::new(12, 0.01),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn grid_sizes_stay_within_the_power_bound() {
        for (n, eps) in [2usize, 3]
            .into_iter()
            .flat_map(|n| [0.3, 0.1, 0.05, 0.02, 0.01].map(|e| (n, e)))
        {
            {
                let k = SimplexGrid::new(n, eps).unwrap().len() as f64;
                let cap = ((1.0f64 / eps).ceil() + 1.0).powi(n as i32 - 1);
                assert!(k <= cap, "n {n}, eps {eps}: {k} > {cap}");
            }
        }
        assert_eq!(SimplexGrid::new(2, 0.5).unwrap().len(), 3);
        assert_eq!(SimplexGrid::new(3, 0.5).unwrap().len(), 10);
    }

    #[test]
    fn wolfe_on_a_segment() {
        let r = min_norm_point(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        assert!((r.point[0] - 1.0).abs() < 1e-14 && r.point[1].abs() < 1e-14);
        assert!((r.weights[0] - 0.5).abs() < 1e-14);
        let r = min_norm_point(&[vec![2.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]);
        assert!(dot(&r.point, &r.point) < 1e-24);
    }

    #[test]
    fn hull_distance_in_one_dimension() {
        let c = TargetSet::boxed(vec![-0.1], vec![0.1]).unwrap();
        let h = hull_distance(&[vec![0.5], vec![0.3]], &c);
        assert!((h.distance - 0.2).abs() < 1e-14);
        assert!((h.hull_point[0] - 0.3).abs() < 1e-14);
        let h = hull_distance(&[vec![0.5], vec![-0.3]], &TargetSet::point(vec![0.0]));
        assert!(h.distance < 1e-14);
        assert!(h.hull_point[0].abs() < 1e-14);
    }

    #[test]
    fn feasible_mixed_finds_the_midpoint() {
        let zero = TargetSet::point(vec![0.0]);
        let s = feasible_mixed(&[vec![1.0], vec![-1.0]], &zero, &[]).unwrap();
        assert_eq!(s.status, Feasibility::Feasible);
        let x = s.x.unwrap();
        assert!((x[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn feasible_mixed_with_extra_constraint() {
        // columns L (quitting) and R, stage payoff at y = (1/2, 1/2)
        let zero = TargetSet::point(vec![0.0]);
        let v = vec![vec![1.0], vec![-0.5]];
        let quit = vec![vec![1.0], vec![0.0]];
        let s = feasible_mixed(&v, &zero, &[(quit, &zero)]).unwrap();
        assert_eq!(s.status, Feasibility::Infeasible);
        assert!((s.violation - 0.2).abs() < 1e-9);
    }

    #[test]
    fn interior_witness_for_boxes() {
        let c = TargetSet::boxed(vec![-0.5], vec![0.5]).unwrap();
        let s = feasible_mixed(&[vec![1.0], vec![-1.0]], &c, &[]).unwrap();
        assert!((s.violation + 0.5).abs() < 1e-9);
    }

    #[test]
    fn matching_pennies() {
        let (x, v) = solve_min_max(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-9 && v.abs() < 1e-9);
    }
}
