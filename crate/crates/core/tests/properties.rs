use approach_lab::calibration::Calibrator;
use approach_lab::conditions::{self, CheckParams};
use approach_lab::evaluator::{self, exact_payoff};
use approach_lab::game::{norm, Action, GameClass, GameSpec, PlayHistory, Player, WeightSequence};
use approach_lab::geometry::{feasible_mixed, min_norm_point, Feasibility, SimplexGrid, TargetSet};
use approach_lab::strategies::MarkovStrategy;
use approach_lab::suite;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CLASSES: [GameClass; 4] = [
    GameClass::NoQuitting,
    GameClass::BigMatchI,
    GameClass::BigMatchII,
    GameClass::General,
];

fn game(seed: u64) -> (GameSpec, TargetSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    suite::random_game(&mut rng, CLASSES[(seed % 4) as usize], 2, 3)
}

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        if s <= 1e-12 {
            let mut e = vec![0.0; w.len()];
            e[0] = 1.0;
            e
        } else {
            w.iter().map(|v| v / s).collect()
        }
    })
}

fn mixed_pair(
    seed: u64,
) -> impl Strategy<Value = (GameSpec, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (g, _) = game(seed);
    let (n1, n2) = (g.n1(), g.n2());
    (simplex(n1), simplex(n2), simplex(n1), simplex(n2))
        .prop_map(move |(a, b, c, d)| (g.clone(), a, b, c, d))
}

fn box_target(d: usize) -> impl Strategy<Value = TargetSet> {
    (
        prop::collection::vec(-1.0..1.0f64, d),
        prop::collection::vec(0.0..0.5f64, d),
    )
        .prop_map(|(c, h)| {
            TargetSet::boxed(
                c.iter().zip(&h).map(|(c, h)| c - h).collect(),
                c.iter().zip(&h).map(|(c, h)| c + h).collect(),
            )
            .unwrap()
        })
}

fn polytope() -> impl Strategy<Value = TargetSet> {
    (
        3usize..7,
        0.2..1.0f64,
        0.0..std::f64::consts::PI,
        -0.3..0.3f64,
        -0.3..0.3f64,
    )
        .prop_map(|(m, r, phase, cx, cy)| {
            let a: Vec<Vec<f64>> = (0..m)
                .map(|k| {
                    let t = phase + 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            let b = a.iter().map(|row| r + row[0] * cx + row[1] * cy).collect();
            TargetSet::hpolytope(a, b).unwrap()
        })
}

fn random_markov(player: Player, rows: Vec<Vec<f64>>) -> MarkovStrategy {
    let tail = rows.last().unwrap().clone();
    MarkovStrategy::table("random", player, rows, tail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn absorption_probability_is_bilinear((g, x, y, x2, y2) in (0u64..1000).prop_flat_map(mixed_pair), s in 0.0..1.0f64) {
        let p = g.absorption_prob(&x, &y);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        let xm: Vec<f64> = x.iter().zip(&x2).map(|(a, b)| s * a + (1.0 - s) * b).collect();
        let ym: Vec<f64> = y.iter().zip(&y2).map(|(a, b)| s * a + (1.0 - s) * b).collect();
        let lhs = g.absorption_prob(&xm, &y);
        prop_assert!((lhs - (s * p + (1.0 - s) * g.absorption_prob(&x2, &y))).abs() < 1e-12);
        let rhs = g.absorption_prob(&x, &ym);
        prop_assert!((rhs - (s * p + (1.0 - s) * g.absorption_prob(&x, &y2))).abs() < 1e-12);
    }

    #[test]
    fn perturbed_points_stay_in_the_unit_ball(
        (g, x, y, a, b) in (0u64..1000).prop_flat_map(mixed_pair),
        sa in 0.0..50.0f64,
        sb in 0.0..50.0f64,
    ) {
        let alpha: Vec<f64> = a.iter().map(|v| v * sa).collect();
        let beta: Vec<f64> = b.iter().map(|v| v * sb).collect();
        prop_assert!(norm(&g.perturbed_point(&x, &alpha, &y, &beta)) <= 1.0 + 1e-12);
    }

    #[test]
    fn cesaro_payoff_is_the_stage_average(seed in 0u64..1000, moves in prop::collection::vec((0usize..3, 0usize..3), 1..40)) {
        let (g, _) = game(seed);
        let horizon = moves.len();
        let th = WeightSequence::cesaro(horizon).unwrap();
        let mut h = PlayHistory::new();
        let mut stages = Vec::new();
        for &(i, j) in &moves {
            let (i, j) = (i % g.n1(), j % g.n2());
            stages.push(g.g(i, j).to_vec());
            if h.push(&g, i, j).unwrap() {
                break;
            }
        }
        // an absorbed run repeats its last payoff
        while stages.len() < horizon {
            stages.push(stages.last().unwrap().clone());
        }
        let got = h.weighted_payoff(&g, &th);
        for k in 0..g.dim() {
            let mean = stages.iter().map(|v| v[k]).sum::<f64>() / horizon as f64;
            prop_assert!((got[k] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn discounted_tails_and_norm(lambda in 0.01..0.99f64, t in 1usize..200) {
        let th = WeightSequence::discounted(lambda).unwrap();
        prop_assert!((th.tail(t) - (1.0 - lambda).powi(t as i32 - 1)).abs() < 1e-10);
        let closed = lambda / (2.0 * lambda - lambda * lambda).sqrt();
        let numeric = (1..=20_000).map(|s| th.weight(s).powi(2)).sum::<f64>().sqrt();
        prop_assert!((th.l2_norm() - closed).abs() < 1e-10);
        prop_assert!((numeric - closed).abs() < 1e-10);
    }

    #[test]
    fn box_projection_is_consistent(c in box_target(3), z in prop::collection::vec(-3.0..3.0f64, 3)) {
        let p = c.project(&z);
        prop_assert!(c.distance(&p) < 1e-8);
        let gap = z.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!((gap - c.distance(&z)).abs() < 1e-8);
    }

    #[test]
    fn polytope_projection_is_consistent(c in polytope(), z in prop::collection::vec(-3.0..3.0f64, 2), probe in prop::collection::vec(0.0..1.0f64, 8)) {
        let p = c.project(&z);
        prop_assert!(c.distance(&p) < 1e-8);
        let gap = z.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!((gap - c.distance(&z)).abs() < 1e-8);
        let verts = c.vertices();
        let w: f64 = probe.iter().take(verts.len()).sum::<f64>().max(1e-12);
        let q: Vec<f64> = (0..2)
            .map(|k| verts.iter().zip(&probe).map(|(v, a)| v[k] * a / w).sum())
            .collect();
        let inner: f64 = (0..2).map(|k| (z[k] - p[k]) * (q[k] - p[k])).sum();
        prop_assert!(inner <= 1e-8);
    }

    #[test]
    fn grid_covers_the_simplex(n in 2usize..5, den in 1usize..12, p in prop::collection::vec(0.0..1.0f64, 5)) {
        let grid = SimplexGrid::with_denominator(n, den).unwrap();
        let s: f64 = p[..n].iter().sum::<f64>().max(1e-12);
        let p: Vec<f64> = p[..n].iter().map(|v| v / s).collect();
        let q = &grid.points[grid.nearest(&p)];
        let l1: f64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(l1 <= grid.covering_radius() + 1e-12);
    }

    #[test]
    fn min_norm_point_is_optimal(points in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 1..8)) {
        let r = min_norm_point(&points);
        prop_assert!(r.weights.iter().all(|w| *w >= -1e-12));
        prop_assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let x = &r.point;
        let xx: f64 = x.iter().map(|v| v * v).sum();
        for p in &points {
            let px: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
            prop_assert!(px - xx >= -1e-9);
        }
    }

    #[test]
    fn calibrator_is_deterministic(seed in 0u64..1000, states in prop::collection::vec(0usize..2, 1..60)) {
        let mut a = Calibrator::new(2, 0.25, seed).unwrap();
        let mut b = Calibrator::new(2, 0.25, seed).unwrap();
        for &w in &states {
            prop_assert_eq!(a.predict(), b.predict());
            a.update(w, 0.01).unwrap();
            b.update(w, 0.01).unwrap();
        }
    }
}

fn oracle_distance(vectors: &[Vec<f64>], target: &TargetSet) -> f64 {
    let steps = 1000usize;
    let mix = |w: &[f64]| -> Vec<f64> {
        (0..target.dim())
            .map(|k| vectors.iter().zip(w).map(|(v, a)| v[k] * a).sum())
            .collect()
    };
    let mut best = f64::INFINITY;
    if vectors.len() == 2 {
        for a in 0..=steps {
            let s = a as f64 / steps as f64;
            best = best.min(target.distance(&mix(&[s, 1.0 - s])));
        }
    } else {
        for a in 0..=steps {
            for b in 0..=steps - a {
                let w = [
                    a as f64 / steps as f64,
                    b as f64 / steps as f64,
                    (steps - a - b) as f64 / steps as f64,
                ];
                best = best.min(target.distance(&mix(&w)));
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn feasible_mixed_agrees_with_grid_oracle(
        n in 2usize..4,
        d in 1usize..3,
        raw in prop::collection::vec(-1.0..1.0f64, 6),
        c in (1usize..3).prop_flat_map(box_target),
    ) {
        prop_assume!(c.dim() == d);
        let vectors: Vec<Vec<f64>> = (0..n).map(|i| raw[i * 2..i * 2 + d].to_vec()).collect();
        let sol = feasible_mixed(&vectors, &c, &[]).unwrap();
        let best = oracle_distance(&vectors, &c);
        if best > 1e-2 {
            prop_assert_eq!(sol.status, Feasibility::Infeasible);
        }
        if best < 1e-6 {
            prop_assert!(sol.status != Feasibility::Infeasible);
            prop_assert!(sol.x.is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn condition_values_are_nested(seed in 0u64..100_000) {
        let (g, c) = game(seed);
        let p = CheckParams::with_eps(0.1);
        let r = conditions::conditions_12(&g, &c, &p).unwrap();
        let v3 = conditions::condition3(&g, &c, &p).unwrap().value;
        prop_assert!(r[1].value <= r[0].value + 1e-9);
        prop_assert!(v3 <= r[1].value + 2.0 * p.eps);
    }

    #[test]
    fn enlarging_the_target_never_raises_condition_values(seed in 0u64..100_000, grow in 0.0..0.3f64) {
        let (g, c) = game(seed);
        let TargetSet::Box { lower, upper } = &c else { unreachable!() };
        let big = TargetSet::boxed(
            lower.iter().map(|v| v - grow).collect(),
            upper.iter().map(|v| v + grow).collect(),
        ).unwrap();
        let p = CheckParams::with_eps(0.1);
        for which in [1u8, 2, 3] {
            let small = conditions::condition_value(&g, &c, which, &p).unwrap().value;
            let large = conditions::condition_value(&g, &big, which, &p).unwrap().value;
            prop_assert!(large <= small + 1e-9, "condition {}: {} -> {}", which, small, large);
        }
    }
}

fn markov_pair(
    seed: u64,
) -> impl Strategy<Value = (GameSpec, TargetSet, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (g, c) = game(seed);
    let (n1, n2) = (g.n1(), g.n2());
    (1usize..20).prop_flat_map(move |len| {
        let (g, c) = (g.clone(), c.clone());
        (
            prop::collection::vec(simplex(n1), len),
            prop::collection::vec(simplex(n2), len),
        )
            .prop_map(move |(a, b)| (g.clone(), c.clone(), a, b))
    })
}

fn scaled(g: &GameSpec, s: f64) -> GameSpec {
    let label = |a: &Action| Action::new(&a.label, a.quitting);
    let payoff = (0..g.n1())
        .map(|i| {
            (0..g.n2())
                .map(|j| g.g(i, j).iter().map(|v| v * s).collect())
                .collect()
        })
        .collect();
    GameSpec::new(
        g.dim(),
        g.p1().iter().map(label).collect(),
        g.p2().iter().map(label).collect(),
        payoff,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_evaluation_scales_with_payoffs((g, _c, a, b) in (0u64..1000).prop_flat_map(markov_pair), s in 0.0..1.0f64, horizon in 1usize..50) {
        let sigma = random_markov(Player::One, a);
        let tau = random_markov(Player::Two, b);
        let th = WeightSequence::cesaro(horizon).unwrap();
        let base = exact_payoff(&g, &sigma, &tau, &th, 0.0).0;
        let got = exact_payoff(&scaled(&g, s), &sigma, &tau, &th, 0.0).0;
        for (x, y) in base.iter().zip(&got) {
            prop_assert!((x * s - y).abs() < 1e-12);
        }
    }

    #[test]
    fn survival_is_nonincreasing_and_conserves_mass((g, _c, a, b) in (0u64..1000).prop_flat_map(markov_pair), horizon in 1usize..60) {
        // with unit absorbing payoffs and zero stage payoffs, the Cesaro
        // payoff is the average of the absorbed mass over the stages
        let label = |x: &Action| Action::new(&x.label, x.quitting);
        let payoff = (0..g.n1())
            .map(|i| (0..g.n2()).map(|j| vec![if g.is_absorbing(i, j) { 1.0 } else { 0.0 }]).collect())
            .collect();
        let ind = GameSpec::new(1, g.p1().iter().map(label).collect(), g.p2().iter().map(label).collect(), payoff).unwrap();
        let sigma = random_markov(Player::One, a);
        let tau = random_markov(Player::Two, b);
        let mut survival = 1.0f64;
        let mut absorbed = 0.0f64;
        let mut mean = 0.0;
        use approach_lab::strategies::Markov;
        for t in 1..=horizon {
            let p = g.absorption_prob(&sigma.mixed_at(t), &tau.mixed_at(t));
            let next = survival * (1.0 - p);
            prop_assert!(next <= survival + 1e-15 && (-1e-15..=1.0).contains(&next));
            absorbed += survival * p;
            survival = next;
            prop_assert!((survival + absorbed - 1.0).abs() < 1e-12);
            mean += absorbed / horizon as f64;
        }
        let th = WeightSequence::cesaro(horizon).unwrap();
        let got = exact_payoff(&ind, &sigma, &tau, &th, 0.0).0[0];
        prop_assert!((got - mean).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_reproducible((g, c, a, b) in (0u64..1000).prop_flat_map(markov_pair), seed in any::<u64>()) {
        let sigma = random_markov(Player::One, a);
        let tau = random_markov(Player::Two, b);
        let th = WeightSequence::cesaro(30).unwrap();
        let r1 = evaluator::mc_eval(&g, &sigma, &tau, &th, &c, 50, seed, None).unwrap();
        let r2 = evaluator::mc_eval(&g, &sigma as &dyn approach_lab::strategies::Strategy, &tau, &th, &c, 50, seed, None).unwrap();
        prop_assert_eq!(r1, r2);
    }
}
