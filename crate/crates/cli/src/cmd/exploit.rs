//! `dlsolve exploit` — exact best-response values against a stored
//! strategy profile, from both sides, with the symmetric exploitability
//! summary in chips and mbb/g.

use std::path::PathBuf;

use dlsolve::best_response::exploitability;
use dlsolve::strategy::StrategyProfile;
use dlsolve::Result;

use crate::games::build_game;
use crate::report::Report;
use crate::Ctx;

#[derive(clap::Args)]
pub struct Args {
    /// Strategy profile under the microscope.
    #[arg(long)]
    pub strategy: PathBuf,

    /// Take the P2 side from this second file instead.
    #[arg(long)]
    pub p2_from: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let (descriptor, game) = build_game(&ctx.config)?;
    let mut profile = StrategyProfile::load(&args.strategy)?;
    if let Some(path) = &args.p2_from {
        profile.p2 = StrategyProfile::load(path)?.p2;
    }
    let result = exploitability(&game, &profile)?;

    let mut report = Report::new("exploit");
    report
        .kv("game", descriptor.id())
        .kv("strategy", args.strategy.display())
        .kv("br_vs_p1", result.br_vs_p1)
        .kv("br_vs_p2", result.br_vs_p2)
        .kv("exploitability_chips", result.chips)
        .kv("exploitability_mbbg", result.mbb_per_game);
    report.finish(
        format!(
            "a best response earns {:.6} chips vs P1 and {:.6} vs P2; exploitability {:.4} mbb/g",
            result.br_vs_p1, result.br_vs_p2, result.mbb_per_game
        ),
        ctx.out.as_deref(),
    )
}
