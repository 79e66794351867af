//! `dlsolve train` — compute a blueprint strategy with a regret-matching
//! solver, reporting exploitability at checkpoints along the way.

use std::path::PathBuf;
use std::str::FromStr;

use dlsolve::best_response::exploitability;
use dlsolve::cfr::{RegretStore, SolverConfig, Variant};
use dlsolve::harness::resume_with_checkpoints;
use dlsolve::{Error, Result};

use crate::games::build_game;
use crate::report::Report;
use crate::Ctx;

#[derive(clap::Args)]
pub struct Args {
    /// Total solver iterations (counted from zero even when resuming).
    #[arg(long)]
    pub iters: u32,

    /// Solver variant: vanilla, cfr+ (regret matching+ with discounting and
    /// delayed averaging), or mccfr (external sampling).
    #[arg(long, default_value = "cfr+")]
    pub variant: String,

    /// Fraction of iterations excluded from the averaged strategy.
    #[arg(long, default_value_t = 0.5)]
    pub skip_frac: f64,

    /// Iterations during which regrets shrink by sqrt(T)/sqrt(T+1) (cfr+).
    #[arg(long, default_value_t = 30)]
    pub discount_iters: u32,

    /// Iterations at which to measure and print exploitability
    /// (comma-separated, strictly increasing). Default: the quarter marks.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Vec<u32>,

    /// Also save the solver state here so the run can resume later.
    #[arg(long)]
    pub store: Option<PathBuf>,

    /// Continue from a previously saved solver state.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

/// Evenly spaced quarter marks ending at the budget, starting past `after`.
fn default_checkpoints(iterations: u32, after: u32) -> Vec<u32> {
    let mut marks: Vec<u32> = (1..=4).map(|q| iterations / 4 * q).collect();
    marks.push(iterations);
    marks.sort_unstable();
    marks.dedup();
    marks.retain(|&m| m > after);
    marks
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let out = ctx.out.as_deref().ok_or_else(|| {
        Error::InvalidParameter("train persists the blueprint; pass --out <file>".into())
    })?;
    let (descriptor, game) = build_game(&ctx.config)?;
    let config = SolverConfig {
        variant: Variant::from_str(&args.variant)?,
        iterations: args.iters,
        average_skip_fraction: args.skip_frac,
        discount_iterations: args.discount_iters,
        seed: ctx.seed,
    };
    let resumed = match &args.resume {
        Some(path) => Some(RegretStore::load(&game, path)?),
        None => None,
    };
    let start = resumed.as_ref().map_or(0, |s| s.iteration);
    let checkpoints = if args.checkpoints.is_empty() {
        default_checkpoints(args.iters, start)
    } else {
        args.checkpoints.clone()
    };

    let trained = resume_with_checkpoints(&game, &config, &checkpoints, resumed)?;
    let final_report = exploitability(&game, &trained.profile)?;
    trained.profile.save(out)?;
    if let Some(path) = &args.store {
        trained.store.save(&game, path)?;
    }

    let mut report = Report::new("train");
    report
        .kv("game", descriptor.id())
        .kv("variant", config.variant)
        .kv("iterations", config.iterations)
        .kv("resumed_from", start)
        .kv("seed", config.seed);
    for (iter, mbbg) in &trained.checkpoints {
        report.line(format!("checkpoint: iteration={iter} exploitability_mbbg={mbbg}"));
    }
    report
        .kv("final_exploitability_chips", final_report.chips)
        .kv("final_exploitability_mbbg", final_report.mbb_per_game)
        .kv("blueprint", out.display());
    if let Some(path) = &args.store {
        report.kv("solver_state", path.display());
    }
    report.finish(
        format!(
            "trained {} for {} {} iterations; final exploitability {:.4} mbb/g; blueprint saved to {}",
            descriptor.id(),
            config.iterations - start,
            config.variant,
            final_report.mbb_per_game,
            out.display()
        ),
        None,
    )
}
