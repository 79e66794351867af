//! `dlsolve offtree-experiment` — how well does depth-limited re-solving
//! answer an opponent bet size the abstraction never modeled? Sweeps the
//! number of opponent continuation strategies and reports exploitability
//! per point, next to a randomized-translation baseline and a blueprint
//! that had the bet in its abstraction all along.

use dlsolve::cfr::SolverConfig;
use dlsolve::game::{GameDescriptor, GameTree, NodeKind, Player, StateId};
use dlsolve::harness::{off_tree_experiment, OffTreeConfig};
use dlsolve::{Error, Result};

use crate::games::load_descriptor;
use crate::report::Report;
use crate::Ctx;

#[derive(clap::Args)]
pub struct Args {
    /// The opponent's unmodeled opening size, as a fraction of the pot
    /// after a call; must lie strictly between two abstraction sizes.
    #[arg(long, default_value_t = 0.75)]
    pub off_fraction: f64,

    /// Continuation-set sizes to sweep (comma-separated, increasing).
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 16])]
    pub value_counts: Vec<usize>,

    /// Sweep seeds; each point averages over all of them.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    pub seeds: Vec<u64>,

    /// Solver iterations for the blueprint each variant starts from.
    #[arg(long, default_value_t = 1000)]
    pub blueprint_iters: u32,

    /// Solver iterations for the reference equilibrium that anchors the
    /// exploitability scale.
    #[arg(long, default_value_t = 10_000)]
    pub reference_iters: u32,

    /// Skip the value-weakening step.
    #[arg(long)]
    pub no_weaken: bool,

    /// Solver iterations per self-generated continuation strategy.
    #[arg(long, default_value_t = 300)]
    pub selfgen_iters: u32,

    /// Solver iterations for the depth-limited solve of the off-tree
    /// subgame.
    #[arg(long, default_value_t = 400)]
    pub subgame_iters: u32,

    /// Solver iterations per endgame completion below the depth limit.
    #[arg(long, default_value_t = 400)]
    pub endgame_iters: u32,
}

/// First decision state of the game, skipping the dealing prefix.
fn opening_state(game: &GameTree) -> Result<StateId> {
    game.states()
        .find(|&s| matches!(game.kind(s), NodeKind::Decision(_)))
        .ok_or_else(|| Error::InvalidParameter("game has no decisions".into()))
}

/// The one opening label the real game has and the abstraction lacks.
fn off_label(real: &GameTree, abstraction: &GameTree) -> Result<String> {
    let menu = |game: &GameTree, s: StateId| -> Result<Vec<String>> {
        Ok(game
            .legal_actions(s)?
            .iter()
            .map(|&a| game.action(a).label.clone())
            .collect())
    };
    let known = menu(abstraction, opening_state(abstraction)?)?;
    let extra: Vec<String> = menu(real, opening_state(real)?)?
        .into_iter()
        .filter(|l| !known.contains(l))
        .collect();
    match extra.as_slice() {
        [only] => Ok(only.clone()),
        [] => Err(Error::InvalidParameter(
            "the off-tree size coincides with an abstraction opening".into(),
        )),
        many => Err(Error::InvalidParameter(format!(
            "expected one off-tree opening, found {}: {}",
            many.len(),
            many.join(",")
        ))),
    }
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let abstraction_descriptor = load_descriptor(&ctx.config)?;
    let GameDescriptor::Nlfh(params) = &abstraction_descriptor else {
        return Err(Error::InvalidParameter(
            "the off-tree experiment needs an nlfh config describing the abstraction".into(),
        ));
    };
    if !params.extra_opening_fractions.is_empty() {
        return Err(Error::InvalidParameter(
            "give the abstraction alone; the off-tree size comes from --off-fraction".into(),
        ));
    }
    let lo = params.bet_fractions.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = params.bet_fractions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(args.off_fraction > lo && args.off_fraction < hi) {
        return Err(Error::OutOfRange(format!(
            "--off-fraction {} must lie strictly between the abstraction sizes {lo} and {hi}",
            args.off_fraction
        )));
    }
    let real_descriptor = GameDescriptor::Nlfh(dlsolve::game::NlfhParams {
        extra_opening_fractions: vec![args.off_fraction],
        ..params.clone()
    });
    let abstraction = GameTree::build(&abstraction_descriptor)?;
    let real = GameTree::build(&real_descriptor)?;
    let label = off_label(&real, &abstraction)?;

    let solver = |iterations| SolverConfig { iterations, seed: ctx.seed, ..SolverConfig::default() };
    let cfg = OffTreeConfig {
        off_label: label.clone(),
        value_counts: args.value_counts.clone(),
        seeds: args.seeds.clone(),
        blueprint_iterations: args.blueprint_iters,
        reference_iterations: args.reference_iters,
        weaken: !args.no_weaken,
        selfgen_solver: solver(args.selfgen_iters),
        subgame_solver: solver(args.subgame_iters),
        endgame_solver: solver(args.endgame_iters),
    };
    let curve = off_tree_experiment(&real, &abstraction, &cfg)?;

    let mut report = Report::new("offtree-experiment");
    report
        .kv("game", real_descriptor.id())
        .kv("abstraction", abstraction_descriptor.id())
        .kv("off_label", &label)
        .kv("off_fraction", args.off_fraction)
        .kv("hero", Player::P2)
        .kv("seeds", args.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
        .kv("reference_value", curve.reference_value);
    for (n, mbbg) in &curve.points {
        report.line(format!("point: n={n} exploitability_mbbg={mbbg}"));
    }
    report
        .line(format!("baseline: rpat exploitability_mbbg={}", curve.rpat))
        .line(format!(
            "baseline: in_abstraction exploitability_mbbg={}",
            curve.in_abstraction
        ));
    let (n_last, last) = *curve.points.last().expect("validated non-empty");
    let (_, first) = curve.points[0];
    report.finish(
        format!(
            "facing the unmodeled {label} opening: exploitability {first:.1} mbb/g with 1 \
             continuation value, {last:.1} with {n_last}; translation baseline {:.1}, \
             in-abstraction baseline {:.1}",
            curve.rpat, curve.in_abstraction
        ),
        ctx.out.as_deref(),
    )
}
