//! `dlsolve match` — score two agents over duplicate hand pairs: every
//! deal is played twice with the seats swapped, so card luck cancels out
//! of the paired totals.

use dlsolve::cfr::SolverConfig;
use dlsolve::game::DepthLimit;
use dlsolve::harness::run_match;
use dlsolve::resolve::ResolverPolicy;
use dlsolve::Result;

use crate::agents::AgentSpec;
use crate::games::build_game;
use crate::report::Report;
use crate::Ctx;

#[derive(clap::Args)]
pub struct Args {
    /// First agent (totals are from its point of view); see --help for the
    /// agent grammar.
    #[arg(long)]
    pub first: String,

    /// Second agent.
    #[arg(long)]
    pub second: String,

    /// Hands to play; even and at least 2, so every deal is scored from
    /// both seats.
    #[arg(long)]
    pub hands: u64,

    /// Solver iterations per early-round depth-limited solve (resolver
    /// agents).
    #[arg(long, default_value_t = 400)]
    pub early_iters: u32,

    /// Solver iterations per endgame or gadget solve (resolver agents).
    #[arg(long, default_value_t = 400)]
    pub endgame_iters: u32,

    /// Depth limit of early-round solves, in betting rounds.
    #[arg(long, default_value_t = 1)]
    pub depth_rounds: u32,

    /// Extra opponent payoff added to gadget fallbacks (resolver agents).
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,

    /// Cap continuation values at the blueprint's before resolver solves.
    #[arg(long)]
    pub weaken: bool,
}

pub fn policy_from(
    early_iters: u32,
    endgame_iters: u32,
    depth_rounds: u32,
    margin: f64,
    weaken: bool,
    seed: u64,
) -> ResolverPolicy {
    let solver = |iterations| SolverConfig { iterations, seed, ..SolverConfig::default() };
    ResolverPolicy {
        early_depth: DepthLimit::Rounds(depth_rounds),
        early_solver: solver(early_iters),
        endgame_solver: solver(endgame_iters),
        margin,
        weaken,
    }
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let (descriptor, game) = build_game(&ctx.config)?;
    let policy = policy_from(
        args.early_iters,
        args.endgame_iters,
        args.depth_rounds,
        args.margin,
        args.weaken,
        ctx.seed,
    );
    let first_spec = AgentSpec::parse(&args.first)?;
    let second_spec = AgentSpec::parse(&args.second)?;
    let mut first = first_spec.build(&game, &policy)?;
    let mut second = second_spec.build(&game, &policy)?;

    let outcome = run_match(&game, &mut *first, &mut *second, args.hands, ctx.seed)?;

    let mut report = Report::new("match");
    report
        .kv("game", descriptor.id())
        .kv("first", &first_spec)
        .kv("second", &second_spec)
        .kv("hands", outcome.hands)
        .kv("seed", outcome.seed)
        .kv("big_blind", outcome.big_blind)
        .kv("chips", outcome.chips)
        .kv("mean_mbbg", outcome.mbb_per_game)
        .kv("ci95_mbb", outcome.ci95_mbb);
    for (seat, stats) in ["p1", "p2"].iter().zip(outcome.per_seat) {
        report.line(format!(
            "seat: {seat} hands={} chips={} mbbg={}",
            stats.hands, stats.chips, stats.mbb_per_game
        ));
    }
    report.finish(
        format!(
            "{} won {:.2} chips over {} duplicate hands vs {}: {:.2} ± {:.2} mbb/g",
            first_spec, outcome.chips, outcome.hands, second_spec,
            outcome.mbb_per_game, outcome.ci95_mbb
        ),
        ctx.out.as_deref(),
    )
}
