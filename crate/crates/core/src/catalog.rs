//! Bundled games and targets.

use crate::error::{Error, Result};
use crate::game::{Action, GameSpec};
use crate::geometry::TargetSet;

const EX1: &str = include_str!("../catalog/ex1.json");
const EX2: &str = include_str!("../catalog/ex2.json");
const EX4: &str = include_str!("../catalog/ex4.json");
const EX5: &str = include_str!("../catalog/ex5.json");
const EX6: &str = include_str!("../catalog/ex6.json");
const BM2_BOX: &str = include_str!("../catalog/bm2_box.json");
const BM2_BOX_TARGET: &str = include_str!("../catalog/bm2_box_target.json");

fn bundled(text: &str) -> GameSpec {
    GameSpec::from_json(text, false)
        .expect("bundled game is valid")
        .0
}

/// T* and L quitting; row payoffs 1 and -1.
pub fn example1() -> GameSpec {
    bundled(EX1)
}

/// Every action quitting.
pub fn example2() -> GameSpec {
    bundled(EX2)
}

/// Only T quits.
pub fn example4() -> GameSpec {
    bundled(EX4)
}

/// Only L quits; g(T,R) = 1.
pub fn example5() -> GameSpec {
    bundled(EX5)
}

/// Only L quits; same payoffs as example 4.
pub fn example6() -> GameSpec {
    bundled(EX6)
}

/// Type-II game with rows T, B and columns L* (quitting), R1, R2 whose
/// box target is reachable by a y-dependent response inside the safe set.
pub fn bm2_box() -> (GameSpec, TargetSet) {
    (
        bundled(BM2_BOX),
        TargetSet::from_json(BM2_BOX_TARGET).expect("bundled target is valid"),
    )
}

/// The single-column family T: (1, p), B: (0, -1) with L* quitting,
/// divided by max(1, p) to respect the unit-norm bound.
pub fn p_game(p: f64) -> Result<GameSpec> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Shape(format!("p must be positive, got {p}")));
    }
    let s = p.max(1.0);
    GameSpec::new(
        1,
        vec![Action::new("T", false), Action::new("B", false)],
        vec![Action::new("L", true), Action::new("R", false)],
        vec![
            vec![vec![1.0 / s], vec![p / s]],
            vec![vec![0.0], vec![-1.0 / s]],
        ],
    )
}

/// Target {0} in dimension `d`.
pub fn zero_target(d: usize) -> TargetSet {
    TargetSet::point(vec![0.0; d])
}

/// Resolves `ex1`, `ex2`, `ex4`, `ex5`, `ex6`, `bm2_box` and `pgame:P`.
pub fn by_name(name: &str) -> Option<Result<GameSpec>> {
    Some(Ok(match name {
        "ex1" => example1(),
        "ex2" => example2(),
        "ex4" => example4(),
        "ex5" => example5(),
        "ex6" => example6(),
        "bm2_box" => bm2_box().0,
        _ => {
            let p = name.strip_prefix("pgame:")?;
            return Some(
                p.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad p in `{name}`")))
                    .and_then(p_game),
            );
        }
    }))
}

pub const NAMES: [&str; 7] = ["ex1", "ex2", "ex4", "ex5", "ex6", "bm2_box", "pgame:P"];
