//! Expected weighted payoffs: exact for Markov pairs, Monte Carlo otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameSpec, MixedAction, PlayHistory, WeightSequence};
use crate::geometry::TargetSet;
use crate::strategies::{Markov, Strategy};

pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    ExactMarkov,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub payoff: Vec<f64>,
    pub distance: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
    /// Last stage simulated or summed.
    pub stages: usize,
    /// Weight not accounted for by the truncation.
    pub tail_bound: f64,
}

/// Forward recursion for a Markov pair.
///
/// Stage `t` contributes `S_t (theta_t g_na(x_t, y_t) + tail_t g*(x_t, y_t))`
/// where `S_t` is the probability of reaching stage `t` unabsorbed. The sum
/// stops once `S_t tail_t < tail_tol` or the weights run out.
pub fn exact_payoff(
    spec: &GameSpec,
    sigma: &dyn Markov,
    tau: &dyn Markov,
    theta: &WeightSequence,
    tail_tol: f64,
) -> (Vec<f64>, usize, f64) {
    let d = spec.dim();
    let (n1, n2) = (spec.n1(), spec.n2());
    let mut acc = vec![0.0; d];
    let mut survival = 1.0;
    let last = theta.horizon();
    let mut t = 1;
    loop {
        let tail = theta.tail(t);
        if survival * tail < tail_tol || last.is_some_and(|h| t > h) {
            return (acc, t - 1, survival * tail);
        }
        let w = theta.weight(t);
        let x = sigma.mixed_at(t);
        let y = tau.mixed_at(t);
        let mut q = 0.0;
        for i in 0..n1 {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n2 {
                let pij = x[i] * y[j];
                if pij == 0.0 {
                    continue;
                }
                let absorbing = spec.is_absorbing(i, j);
                let c = survival * pij * if absorbing { tail } else { w };
                if absorbing {
                    q += pij;
                }
                for (a, g) in acc.iter_mut().zip(spec.g(i, j)) {
                    *a += c * g;
                }
            }
        }
        survival *= 1.0 - q;
        t += 1;
    }
}

/// Exact payoffs against "play `pre`, then the quitting column `j` at
/// stage k" for every k in `1..=max_k`, in one forward pass.
pub fn exact_quit_sweep(
    spec: &GameSpec,
    sigma: &dyn Markov,
    pre: &dyn Markov,
    j: usize,
    theta: &WeightSequence,
    max_k: usize,
) -> Result<Vec<Vec<f64>>> {
    if !spec
        .actions(crate::game::Player::Two)
        .get(j)
        .is_some_and(|a| a.quitting)
    {
        return Err(Error::Evaluation(format!(
            "column {j} is not a quitting action"
        )));
    }
    let d = spec.dim();
    let mut acc = vec![0.0; d];
    let mut survival = 1.0;
    let mut out = Vec::with_capacity(max_k);
    for t in 1..=max_k {
        let x = sigma.mixed_at(t);
        let (w, tail) = (theta.weight(t), theta.tail(t));
        let mut quit = acc.clone();
        for (i, &xi) in x.iter().enumerate() {
            for (q, g) in quit.iter_mut().zip(spec.g(i, j)) {
                *q += survival * xi * tail * g;
            }
        }
        out.push(quit);
        let y = pre.mixed_at(t);
        let mut q = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            for (jj, &yj) in y.iter().enumerate() {
                let pij = xi * yj;
                if pij == 0.0 {
                    continue;
                }
                let absorbing = spec.is_absorbing(i, jj);
                if absorbing {
                    q += pij;
                }
                let c = survival * pij * if absorbing { tail } else { w };
                for (a, g) in acc.iter_mut().zip(spec.g(i, jj)) {
                    *a += c * g;
                }
            }
        }
        survival *= 1.0 - q;
    }
    Ok(out)
}

/// Exact evaluation; both strategies must be Markov.
pub fn exact_markov(
    spec: &GameSpec,
    sigma: &dyn Strategy,
    tau: &dyn Strategy,
    theta: &WeightSequence,
    target: &TargetSet,
    tail_tol: f64,
) -> Result<EvalResult> {
    let (Some(s), Some(t)) = (sigma.as_markov(), tau.as_markov()) else {
        return Err(Error::Evaluation(
            "exact evaluation needs two Markov strategies".into(),
        ));
    };
    Ok(exact_result(spec, s, t, theta, target, tail_tol))
}

pub fn exact_result(
    spec: &GameSpec,
    sigma: &dyn Markov,
    tau: &dyn Markov,
    theta: &WeightSequence,
    target: &TargetSet,
    tail_tol: f64,
) -> EvalResult {
    let (payoff, stages, tail_bound) = exact_payoff(spec, sigma, tau, theta, tail_tol);
    EvalResult {
        distance: target.distance(&payoff),
        payoff,
        method: Method::ExactMarkov,
        runs: None,
        seed: None,
        stderr: None,
        stages,
        tail_bound,
    }
}

/// Outcome of one simulated play.
#[derive(Debug, Clone)]
pub struct Run {
    pub payoff: Vec<f64>,
    pub absorbed_at: Option<usize>,
    pub stages: usize,
}

/// Plays once up to `horizon` stages. An absorbing pair at stage `t` is
/// credited with the whole tail weight from `t` on. `observe` sees each
/// stage's mixed actions before sampling.
pub fn play<R: Rng>(
    spec: &GameSpec,
    sigma: &mut dyn Strategy,
    tau: &mut dyn Strategy,
    theta: &WeightSequence,
    horizon: usize,
    rng: &mut R,
    mut observe: impl FnMut(usize, &MixedAction, &MixedAction),
) -> Result<Run> {
    let mut history = PlayHistory::new();
    let mut payoff = vec![0.0; spec.dim()];
    for t in 1..=horizon {
        let x = sigma.next_mixed(&history, t, theta);
        let y = tau.next_mixed(&history, t, theta);
        observe(t, &x, &y);
        let i = x.sample_with(rng.random());
        let j = y.sample_with(rng.random());
        let absorbed = history.push(spec, i, j)?;
        let w = if absorbed {
            theta.tail(t)
        } else {
            theta.weight(t)
        };
        for (p, g) in payoff.iter_mut().zip(spec.g(i, j)) {
            *p += w * g;
        }
        if absorbed {
            return Ok(Run {
                payoff,
                absorbed_at: Some(t),
                stages: t,
            });
        }
    }
    Ok(Run {
        payoff,
        absorbed_at: None,
        stages: horizon,
    })
}

/// Seeds for run `run`: the sampling stream and the two strategy seeds.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn strategy_seed(seed: u64, run: usize, player: u64) -> u64 {
    let mut z = seed
        ^ (run as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ player.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs one play with fresh copies of both strategies seeded for `run`.
pub fn seeded_run(
    spec: &GameSpec,
    sigma: &dyn Strategy,
    tau: &dyn Strategy,
    theta: &WeightSequence,
    horizon: usize,
    seed: u64,
    run: usize,
    observe: impl FnMut(usize, &MixedAction, &MixedAction),
) -> Result<Run> {
    let mut s = sigma.box_clone();
    let mut t = tau.box_clone();
    s.reset(strategy_seed(seed, run, 1));
    t.reset(strategy_seed(seed, run, 2));
    let mut rng = run_rng(seed, run);
    play(
        spec,
        s.as_mut(),
        t.as_mut(),
        theta,
        horizon,
        &mut rng,
        observe,
    )
}

/// Default stage cap: the horizon for finite weights, otherwise where the
/// remaining weight drops below 1e-6.
pub fn default_horizon(theta: &WeightSequence) -> usize {
    theta.truncation(1e-6)
}

/// Monte Carlo estimate of the expected weighted payoff.
pub fn mc_eval(
    spec: &GameSpec,
    sigma: &dyn Strategy,
    tau: &dyn Strategy,
    theta: &WeightSequence,
    target: &TargetSet,
    runs: usize,
    seed: u64,
    horizon_cap: Option<usize>,
) -> Result<EvalResult> {
    if runs == 0 {
        return Err(Error::Evaluation("at least one run is required".into()));
    }
    let horizon = horizon_cap.unwrap_or_else(|| default_horizon(theta));
    let results: Vec<Run> = (0..runs)
        .into_par_iter()
        .map(|r| seeded_run(spec, sigma, tau, theta, horizon, seed, r, |_, _, _| {}))
        .collect::<Result<_>>()?;
    let d = spec.dim();
    let mut mean = vec![0.0; d];
    for r in &results {
        for (m, v) in mean.iter_mut().zip(&r.payoff) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= runs as f64);
    let mut var = vec![0.0; d];
    for r in &results {
        for ((s, v), m) in var.iter_mut().zip(&r.payoff).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let stderr: Vec<f64> = var
        .iter()
        .map(|s| {
            if runs > 1 {
                (s / (runs - 1) as f64 / runs as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let surviving = results.iter().filter(|r| r.absorbed_at.is_none()).count() as f64 / runs as f64;
    Ok(EvalResult {
        distance: target.distance(&mean),
        payoff: mean,
        method: Method::MonteCarlo,
        runs: Some(runs),
        seed: Some(seed),
        stderr: Some(stderr),
        stages: horizon,
        tail_bound: surviving * theta.tail(horizon + 1),
    })
}

/// One point of an approach curve.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub parameter: String,
    pub result: EvalResult,
}

/// Evaluates across a family of weight sequences, rebuilding the pair for
/// each member. Markov pairs are evaluated exactly, others by Monte Carlo.
pub fn approach_curve<F>(
    spec: &GameSpec,
    target: &TargetSet,
    family: &[WeightSequence],
    runs: usize,
    seed: u64,
    mut build: F,
) -> Result<Vec<CurvePoint>>
where
    F: FnMut(&WeightSequence) -> Result<(Box<dyn Strategy>, Box<dyn Strategy>)>,
{
    family
        .iter()
        .map(|theta| {
            let (s, t) = build(theta)?;
            let result = match (s.as_markov(), t.as_markov()) {
                (Some(a), Some(b)) => exact_result(spec, a, b, theta, target, DEFAULT_TAIL_TOL),
                _ => mc_eval(
                    spec,
                    s.as_ref(),
                    t.as_ref(),
                    theta,
                    target,
                    runs,
                    seed,
                    None,
                )?,
            };
            Ok(CurvePoint {
                parameter: theta.label(),
                result,
            })
        })
        .collect()
}

pub fn csv_header(dim: usize) -> String {
    let mut cols: Vec<String> = ["game", "p1", "p2", "theta", "method", "runs", "seed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((0..dim).map(|k| format!("payoff{k}")));
    cols.push("distance".into());
    cols.extend((0..dim).map(|k| format!("stderr{k}")));
    cols.join(",")
}

pub fn csv_row(game: &str, p1: &str, p2: &str, theta: &WeightSequence, r: &EvalResult) -> String {
    let quote = |s: &str| {
        if s.contains(',') || s.contains('"') {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    let mut cols = vec![
        quote(game),
        quote(p1),
        quote(p2),
        quote(&theta.label()),
        format!("{:?}", r.method),
        r.runs.map(|v| v.to_string()).unwrap_or_default(),
        r.seed.map(|v| v.to_string()).unwrap_or_default(),
    ];
    cols.extend(r.payoff.iter().map(|v| format!("{v:.12e}")));
    cols.push(format!("{:.12e}", r.distance));
    match &r.stderr {
        Some(se) => cols.extend(se.iter().map(|v| format!("{v:.12e}"))),
        None => cols.extend(std::iter::repeat_n(String::new(), r.payoff.len())),
    }
    cols.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, zero_target};
    use crate::game::Player;
    use crate::strategies::{self, MarkovStrategy, SigmaStar};

    #[test]
    fn constant_pure_pair_pays_its_entry() {
        let g = catalog::example5();
        let s = MarkovStrategy::stationary("", Player::One, MixedAction::pure(2, 0));
        let t = MarkovStrategy::stationary("", Player::Two, MixedAction::pure(2, 1));
        for th in [
            WeightSequence::cesaro(7).unwrap(),
            WeightSequence::discounted(0.2).unwrap(),
        ] {
            let r = exact_result(&g, &s, &t, &th, &zero_target(1), 1e-14);
            assert!((r.payoff[0] - 1.0).abs() < 1e-12);
            assert!(r.tail_bound < 1e-14);
        }
    }

    #[test]
    fn sweep_matches_single_evaluations() {
        let g = catalog::example6();
        let sigma = SigmaStar::new(0.05).unwrap().strategy(&g).unwrap();
        let pre = MarkovStrategy::stationary("", Player::Two, MixedAction::pure(2, 1));
        let th = WeightSequence::cesaro(40).unwrap();
        let sweep = exact_quit_sweep(&g, &sigma, &pre, 0, &th, 40).unwrap();
        for k in [1, 2, 17, 40] {
            let tau = strategies::quit_at(&g, k, 0, None).unwrap();
            let (p, _, _) = exact_payoff(&g, &sigma, &tau, &th, 0.0);
            assert!((p[0] - sweep[k - 1][0]).abs() < 1e-14);
        }
        assert!(exact_quit_sweep(&g, &sigma, &pre, 1, &th, 3).is_err());
    }

    #[test]
    fn exact_rejects_history_dependent_play() {
        let g = catalog::example6();
        let c = zero_target(1);
        let b = strategies::BlackwellProjection::new(&g, &c).unwrap();
        let r = strategies::r_forever(&g).unwrap();
        let th = WeightSequence::cesaro(5).unwrap();
        assert!(matches!(
            exact_markov(&g, &b, &r, &th, &c, 1e-12),
            Err(Error::Evaluation(_))
        ));
    }

    #[test]
    fn monte_carlo_is_reproducible_and_exact_for_pure_play() {
        let g = catalog::example4();
        let c = zero_target(1);
        let s = MarkovStrategy::stationary("", Player::One, MixedAction::pure(2, 1));
        let t = MarkovStrategy::stationary("", Player::Two, MixedAction::pure(2, 1));
        let th = WeightSequence::cesaro(50).unwrap();
        let a = mc_eval(&g, &s, &t, &th, &c, 10, 3, None).unwrap();
        let b = mc_eval(&g, &s, &t, &th, &c, 10, 3, None).unwrap();
        assert_eq!(a, b);
        assert!((a.payoff[0] + 1.0).abs() < 1e-12);
        assert!(a.stderr.unwrap()[0] < 1e-15);
    }

    #[test]
    fn absorbed_runs_finish_with_the_tail() {
        let g = catalog::example6();
        let c = zero_target(1);
        let s = MarkovStrategy::stationary("", Player::One, MixedAction::pure(2, 0));
        let t = strategies::quit_at(&g, 3, 0, None).unwrap();
        let th = WeightSequence::discounted(0.1).unwrap();
        let r = mc_eval(&g, &s, &t, &th, &c, 1, 0, None).unwrap();
        let brute: f64 = (1..=2).map(|k| th.weight(k) * 0.0).sum::<f64>()
            + (3..20_000).map(|k| th.weight(k)).sum::<f64>();
        assert!((r.payoff[0] - brute).abs() < 1e-9);
    }
}
