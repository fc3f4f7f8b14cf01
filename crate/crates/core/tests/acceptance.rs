//! Acceptance criteria, one line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use approach_lab::calibration::{self, Nature};
use approach_lab::catalog::{self, zero_target};
use approach_lab::conditions::{self, CheckParams, ConditionReport, Verdict};
use approach_lab::evaluator::{self, exact_payoff};
use approach_lab::game::{GameClass, GameSpec, MixedAction, Player, WeightSequence};
use approach_lab::reproduce;
use approach_lab::strategies::{self, BestResponseOpts, MarkovStrategy, SigmaStar, Strategy};
use approach_lab::suite;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(detail: String, elapsed: Duration, limit: Duration) -> Outcome {
    ensure(
        elapsed <= limit,
        format!("{detail}; took {elapsed:.1?} (limit {limit:?})"),
    )
}

const E: f64 = std::f64::consts::E;

fn k_lambda(lambda: f64) -> usize {
    let eps = 0.5 / E;
    ((1.0 - eps) * (1.0 - lambda) / lambda).floor() as usize + 1
}

fn eqr_oracle(lambda: f64) -> f64 {
    let eps = 0.5 / E;
    let k = k_lambda(lambda) as i32;
    let z = eps + (k - 1) as f64 * lambda / (1.0 - lambda);
    eps - lambda * (1.0 - lambda).powi(k - 1) - (1.0 - lambda).powi(k) * z
}

fn criterion1() -> Outcome {
    let g = catalog::example6();
    let c = zero_target(1);
    let frozen = [
        (0.01, -0.260_048_204_509),
        (0.05, -0.267_650_039_996),
        (0.1, -0.277_877_817_743),
    ];
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for (lambda, frozen_r) in frozen {
        let start = Instant::now();
        let s = SigmaStar::new(lambda).unwrap();
        let sigma = s.strategy(&g).unwrap();
        let th = WeightSequence::discounted(lambda).unwrap();
        let kl = k_lambda(lambda);
        if s.k_lambda() != kl {
            return Err(format!(
                "lambda {lambda}: k_lambda {} vs {kl}",
                s.k_lambda()
            ));
        }
        for k in 1..=kl {
            let tau = strategies::quit_at(&g, k, 0, None).unwrap();
            let v = evaluator::exact_markov(&g, &sigma, &tau, &th, &c, 1e-15)
                .unwrap()
                .payoff[0];
            worst = worst.max((v - 0.5 / E).abs());
        }
        let r = strategies::r_forever(&g).unwrap();
        let v = evaluator::exact_markov(&g, &sigma, &r, &th, &c, 1e-15)
            .unwrap()
            .payoff[0];
        worst = worst
            .max((v - eqr_oracle(lambda)).abs())
            .max((v - frozen_r).abs());
        slowest = slowest.max(start.elapsed());
    }
    let d = ensure(
        worst <= 1e-9,
        format!("max |error| {worst:.2e} over all k <= k_lambda and R forever"),
    )?;
    within(d, slowest, Duration::from_secs(1))
}

fn criterion2() -> Outcome {
    let lambda: f64 = 0.01;
    let eps = 0.5 / E;
    let lhs = (1.0 - lambda).powf((1.0 - eps) * (1.0 - lambda) / lambda + 1.0);
    let g = catalog::example6();
    let s = SigmaStar::new(lambda).unwrap();
    let r = strategies::r_forever(&g).unwrap();
    let th = WeightSequence::discounted(lambda).unwrap();
    let v = exact_payoff(&g, &s.strategy(&g).unwrap(), &r, &th, 1e-15).0[0];
    let excess = reproduce::dominance_excess(lambda, 200, 11).map_err(|e| e.to_string())?;
    ensure(
        lhs >= (-1.0f64).exp() && v < -eps && excess <= 1e-9,
        format!("threshold {lhs:.6} >= {:.6}, payoff vs R {v:.6} < {:.6}, dominance excess {excess:.2e} on 200 strategies", (-1.0f64).exp(), -eps),
    )
}

fn criterion3() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for p in [1.0, 2.0, 4.0] {
        worst = worst.max(reproduce::continuous_worst(p, 10_000).map_err(|e| e.to_string())?);
        gap = gap.max(reproduce::xi_gap(p).map_err(|e| e.to_string())?);
    }
    let d = ensure(
        worst <= 0.01 && gap <= 1e-6,
        format!("max |payoff| {worst:.2e}, ODE sup gap {gap:.2e}"),
    )?;
    within(d, start.elapsed(), Duration::from_secs(10))
}

fn criterion4() -> Outcome {
    let start = Instant::now();
    let th = WeightSequence::cesaro(10_000).unwrap();
    let mut lines = Vec::new();
    for nature in ["adversarial", "iid"] {
        let scores: Vec<(f64, f64)> = (0..100)
            .map(|seed| {
                let n = Nature::parse(nature, 2).unwrap();
                let pts = calibration::run_demo(2, 0.25, &th, &n, seed, 10_000).unwrap();
                let last = pts.last().unwrap();
                (last.score, last.bound)
            })
            .collect();
        let mean = scores.iter().map(|s| s.0).sum::<f64>() / 100.0;
        let sd = (scores.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
        let bound = scores[0].1;
        let oracle = (8.0 * 2.0 * 1e-4f64).sqrt();
        if (bound - oracle).abs() > 1e-12 {
            return Err(format!("bound {bound} differs from {oracle}"));
        }
        if mean > bound + 2.0 * sd / 10.0 {
            return Err(format!(
                "{nature}: mean score {mean:.4} above bound {bound:.4}"
            ));
        }
        lines.push(format!("{nature} mean {mean:.4} (sd {sd:.4})"));
    }
    within(
        format!("{} <= bound 0.04", lines.join(", ")),
        start.elapsed(),
        Duration::from_secs(60),
    )
}

fn expect(r: &ConditionReport, want: Verdict, mismatches: &mut Vec<String>, label: &str) {
    if r.verdict != want {
        mismatches.push(format!("{label}: {:?} ({:.4})", r.verdict, r.value));
    }
}

fn criterion5() -> Outcome {
    let start = Instant::now();
    let p = CheckParams::default();
    let c = zero_target(1);
    let mut bad = Vec::new();
    let v = |g: &GameSpec, k: u8| conditions::condition_value(g, &c, k, &p).unwrap();
    let g1 = catalog::example1();
    let r = v(&g1, 1);
    expect(&r, Verdict::Fails, &mut bad, "ex1 cond1");
    if r.value < 0.98 {
        bad.push(format!("ex1 cond1 value {:.4}", r.value));
    }
    let g2 = catalog::example2();
    expect(&v(&g2, 1), Verdict::Fails, &mut bad, "ex2 cond1");
    expect(&v(&g2, 2), Verdict::Holds, &mut bad, "ex2 cond2");
    expect(&v(&g2, 3), Verdict::Holds, &mut bad, "ex2 cond3");
    let g4 = catalog::example4();
    expect(
        &conditions::blackwell_classic(&g4, &c, &p).unwrap(),
        Verdict::Holds,
        &mut bad,
        "ex4 blackwell",
    );
    for k in 1..=3 {
        expect(
            &v(&g4, k),
            Verdict::Holds,
            &mut bad,
            &format!("ex4 cond{k}"),
        );
    }
    let g5 = catalog::example5();
    expect(&v(&g5, 1), Verdict::Fails, &mut bad, "ex5 cond1");
    expect(&v(&g5, 2), Verdict::Fails, &mut bad, "ex5 cond2");
    expect(
        &conditions::suff_bmii(&g5, &c, &p).unwrap(),
        Verdict::Fails,
        &mut bad,
        "ex5 suff_bmii",
    );
    expect(
        &conditions::uniform_type2(&g5, &c, &p).unwrap(),
        Verdict::Fails,
        &mut bad,
        "ex5 uniform_type2",
    );
    let g6 = catalog::example6();
    expect(&v(&g6, 3), Verdict::Holds, &mut bad, "ex6 cond3");
    expect(&v(&g6, 1), Verdict::Fails, &mut bad, "ex6 cond1");
    expect(&v(&g6, 2), Verdict::Fails, &mut bad, "ex6 cond2");
    let d = ensure(
        bad.is_empty(),
        format!("15 verdicts, mismatches: [{}]", bad.join("; ")),
    )?;
    within(d, start.elapsed(), Duration::from_secs(120))
}

fn criterion6() -> Outcome {
    let start = Instant::now();
    let s = suite::run(200, 1, 0.1).map_err(|e| e.to_string())?;
    let d = ensure(
        s.violations() == 0,
        format!(
            "{} violations over 200 games (worst gaps: type I {:.3}, type II {:.3})",
            s.violations(),
            s.worst_type1_gap,
            s.worst_type2_gap
        ),
    )?;
    within(d, start.elapsed(), Duration::from_secs(600))
}

fn guarantee(
    spec: &GameSpec,
    target: &approach_lab::geometry::TargetSet,
    sigma: &dyn Strategy,
    adversaries: &[(String, Box<dyn Strategy>)],
    runs: usize,
    tol: f64,
) -> Result<String, String> {
    let th = WeightSequence::cesaro(10_000).unwrap();
    let mut worst = (String::new(), 0.0, 0.0);
    for (name, tau) in adversaries {
        let r = evaluator::mc_eval(spec, sigma, tau.as_ref(), &th, target, runs, 5, None)
            .map_err(|e| e.to_string())?;
        if r.distance >= worst.1 {
            worst = (
                name.clone(),
                r.distance,
                r.stderr.as_ref().map_or(0.0, |s| s[0]),
            );
        }
    }
    ensure(
        worst.1 <= tol,
        format!(
            "worst {:.4} (stderr {:.4}) against {}",
            worst.1, worst.2, worst.0
        ),
    )
}

fn criterion7() -> Outcome {
    let th = WeightSequence::cesaro(10_000).unwrap();
    let (g, target) = catalog::bm2_box();
    let sigma = strategies::type2_calibrated(&g, &target, 0.1).unwrap();
    let opts = BestResponseOpts::default();
    let mut advs: Vec<(String, Box<dyn Strategy>)> = vec![
        (
            "stationary uniform".into(),
            Box::new(strategies::stationary(&g, Player::Two, MixedAction::uniform(3)).unwrap()),
        ),
        (
            "stationary (0,1/2,1/2)".into(),
            Box::new(
                strategies::stationary(
                    &g,
                    Player::Two,
                    MixedAction::new(vec![0.0, 0.5, 0.5]).unwrap(),
                )
                .unwrap(),
            ),
        ),
    ];
    for k in [1, 100, 5_000] {
        advs.push((
            format!("quit_at {k}"),
            Box::new(strategies::quit_at(&g, k, 0, None).unwrap()),
        ));
    }
    advs.push((
        "best response".into(),
        Box::new(strategies::best_response_markov(&g, &sigma, &target, &th, &opts).unwrap()),
    ));
    let type2 =
        guarantee(&g, &target, &sigma, &advs, 200, 0.1).map(|d| format!("type II on bm2_box: {d}"));

    let g4 = catalog::example4();
    let c = zero_target(1);
    let sigma = strategies::type1_calibrated(&g4, &c, 0.1, 0.02).unwrap();
    let advs: Vec<(String, Box<dyn Strategy>)> = vec![
        (
            "stationary (1/2,1/2)".into(),
            Box::new(strategies::stationary(&g4, Player::Two, MixedAction::uniform(2)).unwrap()),
        ),
        (
            "R forever".into(),
            Box::new(strategies::r_forever(&g4).unwrap()),
        ),
        (
            "switch at 100".into(),
            Box::new(strategies::bm1_excluder(&g4, 100).unwrap()),
        ),
        (
            "best response".into(),
            Box::new(strategies::best_response_markov(&g4, &sigma, &c, &th, &opts).unwrap()),
        ),
    ];
    let type1 =
        guarantee(&g4, &c, &sigma, &advs, 1_000, 0.05).map(|d| format!("type I on ex4: {d}"));
    match (type2, type1) {
        (Ok(a), Ok(b)) => Ok(format!("{a}; {b}")),
        (a, b) => Err(format!(
            "{}; {}",
            a.unwrap_or_else(|e| e),
            b.unwrap_or_else(|e| e)
        )),
    }
}

fn criterion8() -> Outcome {
    let g = catalog::example4();
    let sigmas = reproduce::exclusion_catalog(&g).map_err(|e| e.to_string())?;
    let rows = reproduce::exclusion_sweep(&g, &sigmas, 100_000, &reproduce::SWITCH_STAGES, 100, 1)
        .map_err(|e| e.to_string())?;
    let (name, least) = rows
        .iter()
        .map(|r| (r.strategy.clone(), r.best_distance()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    ensure(
        least >= 0.1 - 0.02,
        format!(
            "smallest max distance {least:.4} ({name}) over {} strategies",
            rows.len()
        ),
    )
}

fn random_markov(rng: &mut ChaCha8Rng, player: Player, n: usize, len: usize) -> MarkovStrategy {
    let mut mixed = || {
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect::<Vec<_>>()
    };
    let rows = (0..len).map(|_| mixed()).collect();
    MarkovStrategy::table("random", player, rows, mixed())
}

fn criterion9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let classes = [
        GameClass::NoQuitting,
        GameClass::BigMatchI,
        GameClass::BigMatchII,
        GameClass::General,
    ];
    let mut agree = 0;
    for pair in 0..50 {
        let (g, target) = suite::random_game(&mut rng, classes[pair % 4], 2, 3);
        let th = if pair % 2 == 0 {
            WeightSequence::cesaro(rng.random_range(5..60)).unwrap()
        } else {
            WeightSequence::discounted(rng.random_range(0.05..0.5)).unwrap()
        };
        let len = rng.random_range(1..30);
        let sigma = random_markov(&mut rng, Player::One, g.n1(), len);
        let tau = random_markov(&mut rng, Player::Two, g.n2(), len);
        let exact = evaluator::exact_markov(&g, &sigma, &tau, &th, &target, 1e-15)
            .map_err(|e| e.to_string())?;
        let mc = evaluator::mc_eval(&g, &sigma, &tau, &th, &target, 10_000, pair as u64, None)
            .map_err(|e| e.to_string())?;
        let se = mc.stderr.clone().unwrap();
        // the Monte Carlo truncation drops at most `tail_bound` of weight
        let ok = (0..g.dim())
            .all(|k| (mc.payoff[k] - exact.payoff[k]).abs() <= 3.0 * se[k] + mc.tail_bound + 1e-12);
        agree += usize::from(ok);
    }
    ensure(
        agree * 100 >= 95 * 50,
        format!("{agree}/50 pairs within 3 stderr"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 reference strategy identities", criterion1),
        ("2 non-approachability threshold and dominance", criterion2),
        ("3 continuous-time strategy", criterion3),
        ("4 calibration bound", criterion4),
        ("5 example verdict table", criterion5),
        ("6 structural properties on random games", criterion6),
        ("7 strategy guarantees", criterion7),
        ("8 exclusion bound", criterion8),
        ("9 exact vs Monte Carlo", criterion9),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let t = start.elapsed();
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d} [{t:.1?}]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{t:.1?}]");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
