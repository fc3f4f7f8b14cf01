//! Structural checks of the condition checkers on random games.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conditions::{self, CheckParams, Verdict};
use crate::error::Result;
use crate::game::{Action, GameClass, GameSpec};
use crate::geometry::TargetSet;

/// A random game of the requested class with at most `max_actions`
/// actions per side, payoffs in the unit ball, and a random box target.
pub fn random_game<R: Rng>(
    rng: &mut R,
    class: GameClass,
    max_dim: usize,
    max_actions: usize,
) -> (GameSpec, TargetSet) {
    let d = rng.random_range(1..=max_dim);
    let (n1, n2) = (
        rng.random_range(1..=max_actions),
        rng.random_range(1..=max_actions),
    );
    let flags = |rng: &mut R, n: usize, on: bool| -> Vec<bool> {
        if !on {
            return vec![false; n];
        }
        let mut f: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let k = rng.random_range(0..n);
        f[k] = true;
        f
    };
    let (q1, q2) = match class {
        GameClass::NoQuitting => (false, false),
        GameClass::BigMatchI => (true, false),
        GameClass::BigMatchII => (false, true),
        GameClass::General => (true, true),
    };
    let f1 = flags(rng, n1, q1);
    let f2 = flags(rng, n2, q2);
    let mut payoff = vec![vec![vec![0.0; d]; n2]; n1];
    for row in payoff.iter_mut() {
        for v in row.iter_mut() {
            for c in v.iter_mut() {
                *c = rng.random_range(-1.0..1.0);
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
    }
    let acts = |f: &[bool], p: &str| -> Vec<Action> {
        f.iter()
            .enumerate()
            .map(|(k, &q)| Action::new(&format!("{p}{k}"), q))
            .collect()
    };
    let spec = GameSpec::new(d, acts(&f1, "r"), acts(&f2, "c"), payoff)
        .expect("random payoffs are normalized");
    let center: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
    let half: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..0.3)).collect();
    let target = TargetSet::boxed(
        center.iter().zip(&half).map(|(c, h)| c - h).collect(),
        center.iter().zip(&half).map(|(c, h)| c + h).collect(),
    )
    .expect("nonempty box");
    (spec, target)
}

const CLASSES: [GameClass; 4] = [
    GameClass::NoQuitting,
    GameClass::BigMatchI,
    GameClass::BigMatchII,
    GameClass::General,
];

/// Violation counts over a batch of random games.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteSummary {
    pub games: usize,
    pub eps: f64,
    pub seed: u64,
    pub nestedness_checked: usize,
    pub nestedness_violations: usize,
    pub type1_checked: usize,
    pub type1_collapse_violations: usize,
    pub type2_checked: usize,
    pub type2_gap_violations: usize,
    pub type2_verdict_disagreements: usize,
    pub uniform_vs_suff_disagreements: usize,
    /// Largest `value2 - value1` and `value3 - value2` seen.
    pub worst_order_gap: f64,
    /// Largest `|value_k - blackwell|` on type I games.
    pub worst_type1_gap: f64,
    /// Largest `|value1 - value2|` on type II games.
    pub worst_type2_gap: f64,
}

impl SuiteSummary {
    pub fn violations(&self) -> usize {
        self.nestedness_violations
            + self.type1_collapse_violations
            + self.type2_gap_violations
            + self.type2_verdict_disagreements
            + self.uniform_vs_suff_disagreements
    }

    pub fn table(&self) -> String {
        let rows = [
            (
                "nestedness violations",
                self.nestedness_violations,
                self.nestedness_checked,
            ),
            (
                "type I collapse violations",
                self.type1_collapse_violations,
                self.type1_checked,
            ),
            (
                "type II value gap violations",
                self.type2_gap_violations,
                self.type2_checked,
            ),
            (
                "type II verdict disagreements",
                self.type2_verdict_disagreements,
                self.type2_checked,
            ),
            (
                "uniform_type2 vs suff_bmii disagreements",
                self.uniform_vs_suff_disagreements,
                self.type2_checked,
            ),
        ];
        let mut out = format!(
            "games: {}  eps: {}  seed: {}\n",
            self.games, self.eps, self.seed
        );
        for (name, bad, of) in rows {
            out.push_str(&format!("{name:<42} {bad:>4} / {of}\n"));
        }
        out.push_str(&format!(
            "worst gaps: order {:.2e}, type I {:.2e}, type II {:.2e}\n",
            self.worst_order_gap, self.worst_type1_gap, self.worst_type2_gap
        ));
        out
    }
}

/// Holds against Fails; Inconclusive agrees with anything.
pub fn contradict(a: Verdict, b: Verdict) -> bool {
    matches!(
        (a, b),
        (Verdict::Holds, Verdict::Fails) | (Verdict::Fails, Verdict::Holds)
    )
}

/// Runs the nestedness and collapse checks on `games` random games,
/// cycling through the four classes.
pub fn run(games: usize, seed: u64, eps: f64) -> Result<SuiteSummary> {
    let params = CheckParams::with_eps(eps);
    let tol = 2.0 * eps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SuiteSummary {
        games,
        eps,
        seed,
        ..Default::default()
    };
    for g in 0..games {
        let class = CLASSES[g % CLASSES.len()];
        let (spec, target) = random_game(&mut rng, class, 2, 3);
        let r12 = conditions::conditions_12(&spec, &target, &params)?;
        let (v1, v2) = (r12[0].value, r12[1].value);
        let v3 = conditions::condition3(&spec, &target, &params)?.value;
        s.nestedness_checked += 1;
        let order = (v2 - v1).max(v3 - v2);
        s.worst_order_gap = s.worst_order_gap.max(order);
        if v2 > v1 + 1e-9 || v3 > v2 + tol {
            s.nestedness_violations += 1;
        }
        match spec.classify() {
            GameClass::BigMatchI => {
                s.type1_checked += 1;
                let bw = conditions::blackwell_classic(&spec, &target, &params)?.value;
                let gap = [v1, v2, v3]
                    .iter()
                    .map(|v| (v - bw).abs())
                    .fold(0.0, f64::max);
                s.worst_type1_gap = s.worst_type1_gap.max(gap);
                if gap > tol {
                    s.type1_collapse_violations += 1;
                }
            }
            GameClass::BigMatchII => {
                s.type2_checked += 1;
                let gap = (v1 - v2).abs();
                s.worst_type2_gap = s.worst_type2_gap.max(gap);
                if gap > tol {
                    s.type2_gap_violations += 1;
                }
                let suff = conditions::suff_bmii(&spec, &target, &params);
                let uni = conditions::uniform_type2(&spec, &target, &params)?;
                match suff {
                    Ok(suff) => {
                        if contradict(r12[0].verdict, suff.verdict) {
                            s.type2_verdict_disagreements += 1;
                        }
                        if contradict(uni.verdict, suff.verdict) {
                            s.uniform_vs_suff_disagreements += 1;
                        }
                    }
                    // every column quits: the sufficient condition reduces to the safe set
                    Err(crate::error::Error::NotApplicable(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            _ => {}
        }
    }
    Ok(s)
}
