//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{self, Nature};
use crate::catalog;
use crate::conditions::{self, CheckParams, Verdict};
use crate::error::{read_file, Error, Result};
use crate::evaluator::{self, DEFAULT_TAIL_TOL};
use crate::game::{GameSpec, Player, WeightSequence};
use crate::geometry::TargetSet;
use crate::reproduce;
use crate::strategies::{self, BuildContext};
use crate::suite;

/// Exit code for usage and runtime errors.
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "approach-lab",
    version,
    about = "Approachability in generalized quitting games"
)]
pub struct Cli {
    /// Worker threads (defaults to APPROACH_LAB_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate approachability conditions and print JSON reports.
    Check(CheckArgs),
    /// Run the scripted scenario for a worked example.
    Reproduce {
        /// One of 1, 2, 4, 5, 6, a1, a2, b.
        id: String,
    },
    /// Monte Carlo estimate of the expected weighted payoff.
    Simulate(PlayArgs),
    /// Exact expected payoff for two Markov strategies.
    EvalExact(PlayArgs),
    /// Calibration score against a chosen nature.
    CalibrateDemo(CalibrateArgs),
    /// Structural checks of the condition checkers on random games.
    PropertySuite {
        #[arg(long, default_value_t = 200)]
        games: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
}

#[derive(Debug, Args)]
pub struct GameArgs {
    /// Game JSON file or catalog name (ex1, ex2, ex4, ex5, ex6, bm2_box, pgame:P).
    #[arg(long)]
    pub game: String,
    /// Target JSON file, or `zero`.
    #[arg(long)]
    pub target: Option<String>,
    /// Divide payoffs and target by the largest payoff norm when it exceeds 1.
    #[arg(long)]
    pub rescale: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Checker name: 1, 2, 3, blackwell, suff_bmii, bmi_cond1, alt, alt_a, uniform_type2, as_uniform.
    #[arg(long)]
    pub which: String,
    #[arg(long, default_value_t = 0.02)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e3)]
    pub mass_cap: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long)]
    pub p1: String,
    #[arg(long)]
    pub p2: String,
    /// cesaro:T, discounted:LAMBDA or custom:@FILE.
    #[arg(long)]
    pub theta: String,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop each run after this many stages.
    #[arg(long)]
    pub horizon_cap: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 2)]
    pub states: usize,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    #[arg(long, default_value = "cesaro:10000")]
    pub theta: String,
    /// adversarial, iid or constant:K.
    #[arg(long, default_value = "adversarial")]
    pub nature: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub every: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Loads the game and its target. A bare catalog name picks its bundled
/// target; everything else defaults to the origin.
pub fn load(args: &GameArgs) -> Result<(GameSpec, TargetSet, String)> {
    let path = Path::new(&args.game);
    let (spec, factor, bundled_target) = if path.is_file() {
        let (spec, factor) = GameSpec::from_json(&read_file(path)?, args.rescale)?;
        (spec, factor, None)
    } else {
        let spec = catalog::by_name(&args.game).ok_or_else(|| {
            Error::Parse(format!(
                "`{}` is neither a file nor a catalog game ({})",
                args.game,
                catalog::NAMES.join(", ")
            ))
        })??;
        let target = (args.game == "bm2_box").then(|| catalog::bm2_box().1);
        (spec, 1.0, target)
    };
    let target = match args.target.as_deref() {
        Some("zero") => catalog::zero_target(spec.dim()),
        Some(p) => TargetSet::from_json(&read_file(Path::new(p))?)?.rescaled(factor),
        None => bundled_target.unwrap_or_else(|| catalog::zero_target(spec.dim())),
    };
    if target.dim() != spec.dim() {
        return Err(Error::Shape(format!(
            "game payoffs live in dimension {} but the target in {}",
            spec.dim(),
            target.dim()
        )));
    }
    let name = path
        .file_stem()
        .filter(|_| path.is_file())
        .map_or(args.game.clone(), |s| s.to_string_lossy().into_owned());
    Ok((spec, target, name))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())
                .and_then(|_| s.flush())
                .map_err(|source| Error::Io {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}

fn threads(requested: Option<usize>) -> Result<()> {
    let n =
        match requested {
            Some(n) => Some(n),
            None => match std::env::var("APPROACH_LAB_THREADS") {
                Ok(v) => Some(v.parse().map_err(|_| {
                    Error::Parse(format!("APPROACH_LAB_THREADS=`{v}` is not a count"))
                })?),
                Err(_) => None,
            },
        };
    if let Some(n) = n {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    threads(cli.threads)?;
    match cli.command {
        Command::Check(a) => check(a),
        Command::Reproduce { id } => {
            let results = reproduce::reproduce(&id)?;
            let mut text = String::new();
            for r in &results {
                text.push_str(&r.line());
                text.push('\n');
            }
            let failed = results.iter().filter(|r| !r.pass).count();
            text.push_str(&format!(
                "{} passed, {failed} failed\n",
                results.len() - failed
            ));
            emit(None, &text)?;
            Ok(i32::from(failed > 0))
        }
        Command::Simulate(a) => play(a, false),
        Command::EvalExact(a) => play(a, true),
        Command::CalibrateDemo(a) => {
            let theta = WeightSequence::parse(&a.theta)?;
            let nature = Nature::parse(&a.nature, a.states)?;
            let pts = calibration::run_demo(a.states, a.eps, &theta, &nature, a.seed, a.every)?;
            let mut text = String::from("t,score,bound\n");
            for p in pts {
                text.push_str(&format!("{},{},{}\n", p.t, p.score, p.bound));
            }
            emit(a.out.as_deref(), &text)?;
            Ok(0)
        }
        Command::PropertySuite { games, seed, eps } => {
            let s = suite::run(games, seed, eps)?;
            emit(None, &s.table())?;
            Ok(i32::from(s.violations() > 0))
        }
    }
}

fn check(a: CheckArgs) -> Result<i32> {
    let (spec, target, _) = load(&a.game)?;
    let params = CheckParams {
        mass_cap: a.mass_cap,
        ..CheckParams::with_eps(a.eps)
    };
    let reports = conditions::check_by_name(&spec, &target, &a.which, &params)?;
    let json = if reports.len() == 1 {
        reports[0].to_json()
    } else {
        serde_json::to_string_pretty(&reports)?
    };
    emit(a.out.as_deref(), &(json + "\n"))?;
    Ok(if reports.iter().all(|r| r.verdict == Verdict::Holds) {
        0
    } else if reports.iter().any(|r| r.verdict == Verdict::Fails) {
        1
    } else {
        2
    })
}

fn play(a: PlayArgs, exact: bool) -> Result<i32> {
    let (spec, target, name) = load(&a.game)?;
    let theta = WeightSequence::parse(&a.theta)?;
    let ctx = BuildContext {
        spec: &spec,
        target: &target,
        theta: &theta,
        opponent: None,
    };
    let sigma = strategies::build(&ctx, Player::One, &a.p1)?;
    let ctx = BuildContext {
        opponent: Some(sigma.as_ref()),
        ..ctx
    };
    let tau = strategies::build(&ctx, Player::Two, &a.p2)?;
    let r = if exact {
        evaluator::exact_markov(
            &spec,
            sigma.as_ref(),
            tau.as_ref(),
            &theta,
            &target,
            DEFAULT_TAIL_TOL,
        )?
    } else {
        evaluator::mc_eval(
            &spec,
            sigma.as_ref(),
            tau.as_ref(),
            &theta,
            &target,
            a.runs,
            a.seed,
            a.horizon_cap,
        )?
    };
    let text = format!(
        "{}\n{}\n",
        evaluator::csv_header(spec.dim()),
        evaluator::csv_row(&name, &a.p1, &a.p2, &theta, &r)
    );
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}
