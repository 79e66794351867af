//! `dlsolve values` — build the leaf value table of a depth-limited
//! subgame: one value per opponent continuation strategy at every cut
//! state, exactly or by seeded rollouts.

use std::path::PathBuf;

use dlsolve::cfr::SolverConfig;
use dlsolve::depth_limited::{
    compute_value_table, default_bias_specs, generate_bias_set, generate_self_play_set,
    rollout_estimate, weaken, ContinuationSet, Units, ValueTable, DEFAULT_ROLLOUT_SAMPLES,
};
use dlsolve::game::{DepthLimit, GameTree, Player, SubgameSpec};
use dlsolve::strategy::StrategyProfile;
use dlsolve::{Error, Result};

use crate::games::build_game;
use crate::report::Report;
use crate::Ctx;

#[derive(clap::Args)]
pub struct Args {
    /// Blueprint strategy file the table is computed around.
    #[arg(long)]
    pub blueprint: PathBuf,

    /// Seat whose values the table holds.
    #[arg(long, default_value = "p1")]
    pub hero: String,

    /// exact: traverse the whole remainder. rollout: seeded Monte-Carlo
    /// playouts per continuation.
    #[arg(long, default_value = "exact")]
    pub mode: String,

    /// Playouts per continuation in rollout mode.
    #[arg(long, default_value_t = DEFAULT_ROLLOUT_SAMPLES)]
    pub samples: usize,

    /// Continuation strategies in the set, the blueprint included.
    #[arg(long, default_value_t = 4)]
    pub k: usize,

    /// bias: blueprint plus fold/call/raise-amplified variants.
    /// selfgen: alternate best responses against the growing set.
    #[arg(long, default_value = "selfgen")]
    pub approach: String,

    /// Depth limit in betting rounds below the root.
    #[arg(long, default_value_t = 1)]
    pub depth_rounds: u32,

    /// Depth limit in player actions; overrides --depth-rounds.
    #[arg(long)]
    pub depth_actions: Option<u32>,

    /// chips or pot-fraction.
    #[arg(long, default_value = "chips")]
    pub units: String,

    /// Cap each continuation's values at the blueprint continuation's, per
    /// opponent infoset.
    #[arg(long)]
    pub weaken: bool,

    /// Solver iterations per self-generated best response.
    #[arg(long, default_value_t = 300)]
    pub selfgen_iters: u32,

    /// Also save the continuation set itself.
    #[arg(long)]
    pub set_out: Option<PathBuf>,

    /// Store the saved continuation set with one byte per action
    /// probability.
    #[arg(long)]
    pub quantize: bool,
}

pub fn parse_player(text: &str) -> Result<Player> {
    match text {
        "p1" | "P1" | "1" => Ok(Player::P1),
        "p2" | "P2" | "2" => Ok(Player::P2),
        other => Err(Error::InvalidParameter(format!("seat must be p1 or p2, got {other}"))),
    }
}

pub fn parse_units(text: &str) -> Result<Units> {
    match text {
        "chips" => Ok(Units::Chips),
        "pot-fraction" | "pot_fraction" => Ok(Units::PotFraction),
        other => Err(Error::InvalidParameter(format!(
            "units must be chips or pot-fraction, got {other}"
        ))),
    }
}

fn build_set(
    game: &GameTree,
    blueprint: &StrategyProfile,
    spec: &SubgameSpec,
    hero: Player,
    args: &Args,
    seed: u64,
    units: Units,
) -> Result<ContinuationSet> {
    if args.k < 1 {
        return Err(Error::InvalidParameter("--k must be at least 1".into()));
    }
    match args.approach.as_str() {
        "bias" => {
            let specs = default_bias_specs();
            let keep = (args.k - 1).min(specs.len());
            generate_bias_set(game, blueprint.get(hero.other()), &specs[..keep])
        }
        "selfgen" => generate_self_play_set(
            game,
            blueprint,
            spec,
            hero,
            args.k,
            &SolverConfig { iterations: args.selfgen_iters, seed, ..SolverConfig::default() },
            units,
            args.weaken,
        ),
        other => Err(Error::InvalidParameter(format!(
            "approach must be bias or selfgen, got {other}"
        ))),
    }
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let (descriptor, game) = build_game(&ctx.config)?;
    let hero = parse_player(&args.hero)?;
    let units = parse_units(&args.units)?;
    let blueprint = StrategyProfile::load(&args.blueprint)?;
    let depth = match args.depth_actions {
        Some(n) => DepthLimit::PlayerActions(n),
        None => DepthLimit::Rounds(args.depth_rounds),
    };
    let spec = SubgameSpec::whole_game(&game, depth);
    let (_, leaves) = spec.expand_members(&game);
    if leaves.is_empty() {
        return Err(Error::InvalidParameter(
            "the depth limit cuts nothing; deepen the game or lower the limit".into(),
        ));
    }

    let set = build_set(&game, &blueprint, &spec, hero, args, ctx.seed, units)?;
    let mut table = match args.mode.as_str() {
        "exact" => {
            compute_value_table(&game, hero, blueprint.get(hero), &set, &leaves, units)?
        }
        "rollout" => {
            let mut t = ValueTable::new(&game, hero, Units::Chips, set.labels());
            for &leaf in &leaves {
                let row = rollout_estimate(
                    &game,
                    hero,
                    blueprint.get(hero),
                    &set,
                    leaf,
                    args.samples,
                    ctx.seed,
                )?;
                t.set(leaf, row);
            }
            t.convert_units(&game, units)?;
            t
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "mode must be exact or rollout, got {other}"
            )))
        }
    };
    if args.weaken {
        weaken(&game, &mut table, blueprint.get(hero))?;
    }

    if let Some(path) = &ctx.out {
        table.save(&game, path)?;
    }
    if let Some(path) = &args.set_out {
        set.save(path, args.quantize)?;
    }

    let mut report = Report::new("values");
    report
        .kv("game", descriptor.id())
        .kv("hero", hero)
        .kv("approach", args.approach.as_str())
        .kv("mode", args.mode.as_str())
        .kv("continuations", set.labels().join(","))
        .kv("units", args.units.as_str())
        .kv("leaves", table.len())
        .kv("weakened", args.weaken);
    if let Some(path) = &ctx.out {
        report.kv("table", path.display());
    }
    if let Some(path) = &args.set_out {
        report.kv("continuation_set", path.display());
    }
    report.finish(
        format!(
            "computed {} {} values for {} at {} cut states ({} continuations)",
            args.mode, args.units, hero, table.len(), set.len()
        ),
        None,
    )
}
