//! Match play, training drivers, and the off-tree response experiment.
//!
//! [`run_match`] scores two agents over duplicate hand pairs: every deal is
//! played twice with the seats swapped, and scoring the paired sum cancels
//! most of the luck of the cards. [`train_with_checkpoints`] runs a solver
//! while recording its exploitability trajectory. [`off_tree_experiment`]
//! measures how well depth-limited resolving handles an opponent bet size
//! the hero's action abstraction never modeled, sweeping the number of
//! opponent continuation strategies and comparing against randomized
//! action translation and against a blueprint trained with the bet in its
//! abstraction from the start.

use std::collections::BTreeMap;

use crate::best_response::{best_response, exploitability};
use crate::cfr::{RegretStore, Solver, SolverConfig};
use crate::depth_limited::{
    compute_value_table, generate_self_play_set, weaken, ContinuationSet, Units, ValueProvider,
    ValueTable,
};
use crate::error::{Error, Result};
use crate::game::{DepthLimit, GameTree, NodeKind, Player, StateId, SubgameSpec};
use crate::resolve::{
    map_off_tree_leaves, path_labels, play_hand, raise_size, resolve_subgame,
    rpat_lower_probability, Agent, ResolveContext, ResolveMode,
};
use crate::strategy::{BehavioralStrategy, StrategyProfile};

// ---------------------------------------------------------------------------
// Duplicate matches
// ---------------------------------------------------------------------------

/// Chip and rate totals for one seating direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeatStats {
    /// Hands played in this seating.
    pub hands: u64,
    /// Chips the first agent won while seated this way.
    pub chips: f64,
    /// The same total as a rate, in milli-big-blinds per hand.
    pub mbb_per_game: f64,
}

/// Outcome of a duplicate match between two agents.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub hands: u64,
    pub seed: u64,
    pub big_blind: f64,
    /// Total chips the first agent won across all hands.
    pub chips: f64,
    /// The first agent's overall win rate: `chips * 1000 / (bb * hands)`.
    pub mbb_per_game: f64,
    /// Half-width of the 95% confidence interval on `mbb_per_game`, taken
    /// over duplicate-pair outcomes; infinite when only one pair was
    /// played, since a single sample has no spread.
    pub ci95_mbb: f64,
    /// Breakdown by the first agent's seat: `[as P1, as P2]`.
    pub per_seat: [SeatStats; 2],
}

/// SplitMix64 finalizer, spreading one match seed into per-pair hand seeds.
fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Plays `hands` hands between two agents with duplicate dealing: hand
/// `2k` seats `first` as P1, hand `2k+1` replays the same cards with the
/// seats swapped. All totals are from `first`'s point of view. `hands`
/// must be even (and at least 2) so every deal is scored from both seats.
pub fn run_match(
    game: &GameTree,
    first: &mut dyn Agent,
    second: &mut dyn Agent,
    hands: u64,
    seed: u64,
) -> Result<MatchReport> {
    if hands < 2 || hands % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "duplicate scoring needs an even number of hands, at least 2; got {hands}"
        )));
    }
    let pairs = hands / 2;
    let scale = 1000.0 / game.big_blind;
    let mut seat = [SeatStats { hands: 0, chips: 0.0, mbb_per_game: 0.0 }; 2];
    let mut pair_rates = Vec::with_capacity(pairs as usize);
    for i in 0..pairs {
        let hand_seed = mix_seed(seed, i);
        let forward = play_hand(game, first, second, hand_seed, None)?;
        let reverse = play_hand(game, second, first, hand_seed, None)?;
        let as_p1 = forward.chips_p1;
        let as_p2 = -reverse.chips_p1;
        seat[0].hands += 1;
        seat[0].chips += as_p1;
        seat[1].hands += 1;
        seat[1].chips += as_p2;
        pair_rates.push((as_p1 + as_p2) / 2.0 * scale);
    }
    for s in &mut seat {
        s.mbb_per_game = s.chips * scale / s.hands as f64;
    }
    let chips = seat[0].chips + seat[1].chips;
    let mbb_per_game = chips * 1000.0 / (game.big_blind * hands as f64);
    let ci95_mbb = if pairs >= 2 {
        let n = pairs as f64;
        let mean = pair_rates.iter().sum::<f64>() / n;
        let var =
            pair_rates.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        1.96 * (var / n).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(MatchReport {
        hands,
        seed,
        big_blind: game.big_blind,
        chips,
        mbb_per_game,
        ci95_mbb,
        per_seat: seat,
    })
}

// ---------------------------------------------------------------------------
// Training with checkpoints
// ---------------------------------------------------------------------------

/// A trained profile plus the exploitability trajectory observed while
/// training.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub profile: StrategyProfile,
    /// `(iteration, exploitability in mbb per hand)` at each checkpoint.
    pub checkpoints: Vec<(u32, f64)>,
    /// Final solver state, serializable so the run can resume later.
    pub store: RegretStore,
}

/// Runs the configured solver to completion, measuring exploitability of
/// the running average at each checkpoint iteration. Checkpoints must
/// increase strictly and stay within the configured iteration budget.
pub fn train_with_checkpoints(
    game: &GameTree,
    config: &SolverConfig,
    checkpoints: &[u32],
) -> Result<TrainReport> {
    resume_with_checkpoints(game, config, checkpoints, None)
}

/// [`train_with_checkpoints`], optionally continuing from a saved solver
/// state. The iteration budget counts from zero, so a resumed run performs
/// `config.iterations - store.iteration` further iterations, and
/// checkpoints must land in that remaining window.
pub fn resume_with_checkpoints(
    game: &GameTree,
    config: &SolverConfig,
    checkpoints: &[u32],
    store: Option<RegretStore>,
) -> Result<TrainReport> {
    if config.iterations == 0 {
        return Err(Error::InvalidParameter("training needs at least one iteration".into()));
    }
    let start = store.as_ref().map_or(0, |s| s.iteration);
    if start >= config.iterations {
        return Err(Error::InvalidParameter(format!(
            "resumed run is already past its budget: at iteration {start} of {}",
            config.iterations
        )));
    }
    let mut last = start;
    for &cp in checkpoints {
        if cp <= last || cp > config.iterations {
            return Err(Error::InvalidParameter(format!(
                "checkpoints must increase strictly within iterations {}..={}",
                start + 1,
                config.iterations
            )));
        }
        last = cp;
    }
    let mut solver = match store {
        Some(s) => Solver::resume(game, config.clone(), s)?,
        None => Solver::new(game, config.clone())?,
    };
    let mut curve = Vec::with_capacity(checkpoints.len());
    let mut done = start;
    for &cp in checkpoints {
        solver.run_iterations(cp - done)?;
        done = cp;
        let report = exploitability(game, &solver.average_profile())?;
        curve.push((cp, report.mbb_per_game));
    }
    if done < config.iterations {
        solver.run_iterations(config.iterations - done)?;
    }
    Ok(TrainReport {
        profile: solver.average_profile(),
        checkpoints: curve,
        store: solver.into_store(),
    })
}

/// Convenience: train a profile with default solver settings except the
/// iteration budget and seed.
pub fn solve_profile(game: &GameTree, iterations: u32, seed: u64) -> Result<StrategyProfile> {
    let config = SolverConfig { iterations, seed, ..SolverConfig::default() };
    let mut solver = Solver::new(game, config)?;
    solver.run_to_completion()?;
    Ok(solver.average_profile())
}

// ---------------------------------------------------------------------------
// Randomized action translation
// ---------------------------------------------------------------------------

/// A raise's size as a fraction of the pot after the pending bet is
/// called: `add / pot_after_call`. The pot after a call is read off the
/// call child, which every betting state has.
fn raise_fraction(game: &GameTree, s: StateId, add: f64) -> Option<f64> {
    let call = game.child_by_label(s, "c")?;
    let pot = game.pot(call);
    (pot > 0.0).then_some(add / pot)
}

/// Full-game strategy that answers unfamiliar bet sizes by randomized
/// translation. Infosets the blueprint covers play the blueprint row.
/// Every other infoset is mapped onto the abstraction by replaying its
/// action history there: an action label both trees share follows that
/// edge, while a bet size the abstraction lacks splits across the two
/// bracketing sizes with the pseudo-harmonic probability (or clamps to
/// the nearest edge outside their range). The blueprint rows at the image
/// infosets, blended by translation probability, are then mapped back
/// onto the real menu, unfamiliar sizes again going to the nearest size
/// by pot fraction.
pub fn rpat_strategy(
    real: &GameTree,
    abstraction: &GameTree,
    blueprint: &BehavioralStrategy,
) -> Result<BehavioralStrategy> {
    let hero = blueprint.player;
    let mut out = BehavioralStrategy::new(hero);
    for c in real.acting_classes(hero) {
        let class = real.class(c);
        let width = class.actions.len();
        match blueprint.lookup(&class.key) {
            Some(row) if row.len() == width => {
                out.table.insert(class.key.clone(), row.to_vec());
            }
            _ => {
                let row =
                    translated_row(real, abstraction, blueprint, class.states[0], width)?;
                out.table.insert(class.key.clone(), row);
            }
        }
    }
    Ok(out)
}

/// The translated action distribution for one uncovered real infoset,
/// represented by `rep`.
fn translated_row(
    real: &GameTree,
    abstraction: &GameTree,
    blueprint: &BehavioralStrategy,
    rep: StateId,
    width: usize,
) -> Result<Vec<f64>> {
    let hero = blueprint.player;
    let uniform = vec![1.0 / width as f64; width];

    // Follow the real action history through the abstraction, splitting
    // unfamiliar bets across their bracketing sizes.
    let mut images: Vec<(StateId, f64)> = vec![(abstraction.root(), 1.0)];
    let mut cursor = real.root();
    for label in path_labels(real, rep) {
        let parent = cursor;
        cursor = real.child_by_label(parent, &label).expect("path label leads to its child");
        let mut next: BTreeMap<StateId, f64> = BTreeMap::new();
        for &(img, w) in &images {
            if abstraction.is_terminal(img) {
                continue;
            }
            if let Some(child) = abstraction.child_by_label(img, &label) {
                *next.entry(child).or_insert(0.0) += w;
                continue;
            }
            let Some(add) = raise_size(&label) else { continue };
            let Some(x) = raise_fraction(real, parent, add as f64) else { continue };
            let mut below: Option<(f64, StateId)> = None;
            let mut above: Option<(f64, StateId)> = None;
            for (idx, child) in abstraction.children(img).enumerate() {
                let other = &abstraction.action(abstraction.legal_actions(img)?[idx]).label;
                let Some(m) = raise_size(other) else { continue };
                let Some(f) = raise_fraction(abstraction, img, m as f64) else { continue };
                if f <= x && below.is_none_or(|(b, _)| f > b) {
                    below = Some((f, child));
                }
                if f >= x && above.is_none_or(|(a, _)| f < a) {
                    above = Some((f, child));
                }
            }
            match (below, above) {
                (Some((lo, cl)), Some((hi, ch))) if cl != ch => {
                    let p = rpat_lower_probability(x, lo, hi)?;
                    *next.entry(cl).or_insert(0.0) += w * p;
                    *next.entry(ch).or_insert(0.0) += w * (1.0 - p);
                }
                (Some((_, cl)), _) => *next.entry(cl).or_insert(0.0) += w,
                (None, Some((_, ch))) => *next.entry(ch).or_insert(0.0) += w,
                (None, None) => {}
            }
        }
        images = next.into_iter().collect();
        if images.is_empty() {
            return Ok(uniform);
        }
    }

    // Blend the blueprint rows at the surviving images, mapping abstract
    // actions back onto the real menu.
    let menu = real.legal_actions(rep)?.to_vec();
    let mut row = vec![0.0; width];
    for &(img, w) in &images {
        if abstraction.is_terminal(img) || abstraction.kind(img) != NodeKind::Decision(hero) {
            continue;
        }
        let n_img = abstraction.num_actions(img);
        let img_uniform = vec![1.0 / n_img as f64; n_img];
        let img_row = match blueprint.lookup(abstraction.infoset_key(img, hero)) {
            Some(r) if r.len() == n_img => r,
            _ => &img_uniform[..],
        };
        for (idx, &aid) in abstraction.legal_actions(img)?.iter().enumerate() {
            let label = &abstraction.action(aid).label;
            if let Some(t) = real_action_target(real, rep, &menu, abstraction, img, label) {
                row[t] += w * img_row[idx];
            }
        }
    }
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        for v in &mut row {
            *v /= total;
        }
        Ok(row)
    } else {
        Ok(uniform)
    }
}

/// Maps one abstract action back onto the real menu: exact label match
/// first, then the raise nearest by pot fraction, then the call.
fn real_action_target(
    real: &GameTree,
    rep: StateId,
    menu: &[u16],
    abstraction: &GameTree,
    img: StateId,
    label: &str,
) -> Option<usize> {
    if let Some(i) = menu.iter().position(|&aid| real.action(aid).label == label) {
        return Some(i);
    }
    let add = raise_size(label)?;
    let f_img = raise_fraction(abstraction, img, add as f64)?;
    let mut best: Option<(f64, usize)> = None;
    for (i, &aid) in menu.iter().enumerate() {
        let Some(m) = raise_size(&real.action(aid).label) else { continue };
        let Some(f) = raise_fraction(real, rep, m as f64) else { continue };
        let d = (f - f_img).abs();
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
        .or_else(|| menu.iter().position(|&aid| real.action(aid).label == "c"))
}

// ---------------------------------------------------------------------------
// The off-tree response experiment
// ---------------------------------------------------------------------------

/// Settings for the off-tree response experiment.
#[derive(Debug, Clone)]
pub struct OffTreeConfig {
    /// The opening action present in the real game but absent from the
    /// hero's abstraction, e.g. `"r3"`.
    pub off_label: String,
    /// Continuation-set sizes to sweep, strictly increasing.
    pub value_counts: Vec<usize>,
    /// Seeds averaged at each sweep point.
    pub seeds: Vec<u64>,
    /// Training budget for the hero blueprint, and for the fully-trained
    /// baseline.
    pub blueprint_iterations: u32,
    /// Budget for the long solve that pins the real game's value.
    pub reference_iterations: u32,
    /// Cap opponent continuation values at the blueprint's before solving.
    pub weaken: bool,
    /// Solver for growing the opponent continuation set.
    pub selfgen_solver: SolverConfig,
    /// Solver for the depth-limited response subgame.
    pub subgame_solver: SolverConfig,
    /// Solver for the full-width completions below the cut.
    pub endgame_solver: SolverConfig,
}

impl Default for OffTreeConfig {
    fn default() -> OffTreeConfig {
        let solver = |iterations| SolverConfig { iterations, ..SolverConfig::default() };
        OffTreeConfig {
            off_label: "r3".into(),
            value_counts: vec![1, 2, 4, 8, 16],
            seeds: vec![1, 2, 3],
            blueprint_iterations: 1000,
            reference_iterations: 10_000,
            weaken: true,
            selfgen_solver: solver(300),
            subgame_solver: solver(400),
            endgame_solver: solver(400),
        }
    }
}

/// Exploitability sweep produced by the experiment. All exploitabilities
/// are in milli-big-blinds per hand against the shared reference value,
/// floored at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCurve {
    /// `(continuation count, exploitability)`, ascending in the count and
    /// averaged over the configured seeds.
    pub points: Vec<(usize, f64)>,
    /// Baseline: answering the unfamiliar bet by randomized translation
    /// onto the abstraction.
    pub rpat: f64,
    /// Baseline: training the same budget directly on the real game, so
    /// the bet is inside the abstraction from the start.
    pub in_abstraction: f64,
    /// Estimated value of the real game to P1, in chips.
    pub reference_value: f64,
}

/// Hero's (P2's) full real-game strategy after resolving the subgame an
/// off-tree opening creates. The opponent continuation set and the cut
/// values are abstraction objects — the hero has never modeled the
/// off-tree line, so everything it knows about play past the opening
/// round comes from the abstraction, carried over leaf by leaf through
/// nearest-size translation. The opening round is solved depth-limited
/// against `n` self-generated continuations; each reachable public
/// situation after the round boundary is then completed with a full-width
/// solve. Everywhere else the blueprint stands (infoset keys shared by
/// the two trees transfer as-is).
pub fn off_tree_response(
    real: &GameTree,
    abstraction: &GameTree,
    blueprint: &StrategyProfile,
    n: usize,
    seed: u64,
    cfg: &OffTreeConfig,
) -> Result<BehavioralStrategy> {
    let hero = Player::P2;
    let with_seed = |c: &SolverConfig| SolverConfig { seed: c.seed ^ seed, ..c.clone() };
    let selfgen = with_seed(&cfg.selfgen_solver);
    let subgame_solver = with_seed(&cfg.subgame_solver);
    let endgame_solver = with_seed(&cfg.endgame_solver);

    // Opponent continuations and the hero's cut values, both built in the
    // abstraction. Values are stored as pot fractions so they survive the
    // translation onto off-tree lines, whose pots differ.
    let spec_a = SubgameSpec::whole_game(abstraction, DepthLimit::Rounds(1));
    let set = generate_self_play_set(
        abstraction,
        blueprint,
        &spec_a,
        hero,
        n,
        &selfgen,
        Units::Chips,
        cfg.weaken,
    )?;
    let all_a: Vec<StateId> =
        abstraction.states().filter(|&s| !abstraction.is_terminal(s)).collect();
    let mut table_a = compute_value_table(
        abstraction,
        hero,
        blueprint.get(hero),
        &set,
        &all_a,
        Units::PotFraction,
    )?;
    if cfg.weaken {
        weaken(abstraction, &mut table_a, blueprint.get(hero))?;
    }

    // The public situation the off-tree opening creates: deal unseen,
    // opening bet observed. The blueprint has no row for the unfamiliar
    // opening menu, so the posterior over deals stays chance-weighted.
    let mut ctx = ResolveContext::new(real, hero);
    ctx.advance("?", blueprint)?;
    ctx.advance(&cfg.off_label, blueprint)?;

    // Depth-limited resolve through the rest of the opening round, cut
    // values translated from the abstraction.
    let spec_r = SubgameSpec { roots: ctx.states(), depth: DepthLimit::Rounds(1) };
    let (_, leaves_r) = spec_r.expand_members(real);
    let table_r = map_off_tree_leaves(real, &leaves_r, abstraction, &table_a)?;
    let resolved = resolve_subgame(
        &ctx,
        blueprint,
        &set,
        &ValueProvider::Exact(table_r),
        DepthLimit::Rounds(1),
        &subgame_solver,
        ResolveMode::Unsafe,
    )?;
    let mut hero_full = resolved.hero_full.clone();
    let villain_full = resolved.villain_full.clone();

    // Full-width completion below the cut: one solve per reachable public
    // situation at the round boundary, beliefs carried forward through
    // the depth-limited solution.
    let mut boundary: BTreeMap<String, StateId> = BTreeMap::new();
    for &leaf in &resolved.aug.leaves {
        if real.is_terminal(leaf) {
            continue;
        }
        for child in real.children(leaf) {
            let key = real.public(real.public_of(child)).key.clone();
            boundary.entry(key).or_insert(child);
        }
    }
    let empty = ValueProvider::Exact(ValueTable::new(
        real,
        hero,
        Units::Chips,
        vec!["blueprint".into()],
    ));
    for (_, entry) in boundary {
        let assumed = match hero {
            Player::P1 => StrategyProfile::new(hero_full.clone(), villain_full.clone()),
            Player::P2 => StrategyProfile::new(villain_full.clone(), hero_full.clone()),
        };
        let ctx2 = ResolveContext::at_state(real, hero, entry, &assumed)?;
        let finished = resolve_subgame(
            &ctx2,
            &assumed,
            &ContinuationSet::blueprint_only(villain_full.clone()),
            &empty,
            DepthLimit::None,
            &endgame_solver,
            ResolveMode::Unsafe,
        )?;
        hero_full = finished.hero_full;
    }

    // Safety net: any acting infoset still without a (well-formed) row
    // plays uniform, so downstream evaluation is total.
    for c in real.acting_classes(hero) {
        let class = real.class(c);
        let width = class.actions.len();
        if hero_full.lookup(&class.key).is_none_or(|row| row.len() != width) {
            hero_full.table.insert(class.key.clone(), vec![1.0 / width as f64; width]);
        }
    }
    Ok(hero_full)
}

/// Runs the experiment: sweeps the continuation-set size, scoring each
/// response strategy by what a best-responding opponent earns over the
/// reference value of the real game, and scores the two baselines the
/// same way.
pub fn off_tree_experiment(
    real: &GameTree,
    abstraction: &GameTree,
    cfg: &OffTreeConfig,
) -> Result<ExperimentCurve> {
    if cfg.value_counts.is_empty() {
        return Err(Error::InvalidParameter(
            "experiment needs at least one continuation count".into(),
        ));
    }
    if !cfg.value_counts.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter(
            "continuation counts must increase strictly".into(),
        ));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::InvalidParameter("experiment needs at least one seed".into()));
    }
    if cfg.blueprint_iterations == 0 || cfg.reference_iterations == 0 {
        return Err(Error::InvalidParameter("training budgets must be positive".into()));
    }
    let hero = Player::P2;

    // Hero's blueprint, trained in the abstraction.
    let blueprint = solve_profile(abstraction, cfg.blueprint_iterations, 0)?;

    // Reference value of the real game to P1, sandwiched between the two
    // one-sided best responses against a long solve.
    let reference = exploitability(real, &solve_profile(real, cfg.reference_iterations, 0)?)?;
    let reference_value = (reference.br_vs_p2 - reference.br_vs_p1) / 2.0;
    let to_mbb = |chips: f64| (chips * 1000.0 / real.big_blind).max(0.0);

    // Baseline: the same training budget spent directly on the real game.
    let full = solve_profile(real, cfg.blueprint_iterations, 0)?;
    let in_abstraction =
        to_mbb(best_response(real, full.get(hero), hero.other())?.value - reference_value);

    // Baseline: randomized translation of the unfamiliar bet.
    let translated = rpat_strategy(real, abstraction, blueprint.get(hero))?;
    let rpat =
        to_mbb(best_response(real, &translated, hero.other())?.value - reference_value);

    let mut points = Vec::with_capacity(cfg.value_counts.len());
    for &n in &cfg.value_counts {
        let mut acc = 0.0;
        for &seed in &cfg.seeds {
            let response = off_tree_response(real, abstraction, &blueprint, n, seed, cfg)?;
            acc += best_response(real, &response, hero.other())?.value;
        }
        points.push((n, to_mbb(acc / cfg.seeds.len() as f64 - reference_value)));
    }
    Ok(ExperimentCurve { points, rpat, in_abstraction, reference_value })
}
