//! Duplicate match scoring, training checkpoints, randomized action
//! translation, and the off-tree response experiment. Match arithmetic is
//! checked against hand-computed totals on deterministic agents, and the
//! translation blend against its closed form.

mod common;

use common::assert_close;
use dlsolve::best_response::best_response;
use dlsolve::cfr::SolverConfig;
use dlsolve::game::{GameDescriptor, GameTree, KuhnParams, NlfhParams, Player};
use dlsolve::harness::{
    off_tree_experiment, off_tree_response, rpat_strategy, run_match, solve_profile,
    train_with_checkpoints, OffTreeConfig,
};
use dlsolve::resolve::{rpat_lower_probability, PolicyAgent};
use dlsolve::strategy::{BehavioralStrategy, StrategyProfile};

fn rps() -> GameTree {
    GameTree::build(&GameDescriptor::RpsPlus).unwrap()
}

fn kuhn() -> GameTree {
    GameTree::build(&GameDescriptor::Kuhn(KuhnParams::default())).unwrap()
}

fn mini_nlfh(extra: &[f64]) -> GameTree {
    GameTree::build(&GameDescriptor::Nlfh(NlfhParams {
        extra_opening_fractions: extra.to_vec(),
        ..NlfhParams::default()
    }))
    .unwrap()
}

/// One-hot strategy choosing the action whose label passes `pick`, else the
/// first action.
fn prefer(game: &GameTree, player: Player, pick: impl Fn(&str) -> bool) -> BehavioralStrategy {
    let mut strat = BehavioralStrategy::new(player);
    for c in game.acting_classes(player) {
        let class = game.class(c);
        let idx = class
            .actions
            .iter()
            .position(|&a| pick(&game.action(a).label))
            .unwrap_or(0);
        let mut row = vec![0.0; class.actions.len()];
        row[idx] = 1.0;
        strat.set(class.key.clone(), row);
    }
    strat
}

/// Profile playing one fixed label on both seats (first action when the
/// label is not on the menu).
fn fixed_profile(game: &GameTree, label: &str) -> StrategyProfile {
    StrategyProfile::new(
        prefer(game, Player::P1, |l| l == label),
        prefer(game, Player::P2, |l| l == label),
    )
}

/// A small experiment configuration sized for unit tests.
fn tiny_config() -> OffTreeConfig {
    let solver = |iterations| SolverConfig { iterations, ..SolverConfig::default() };
    OffTreeConfig {
        off_label: "r3".into(),
        value_counts: vec![1, 2],
        seeds: vec![11],
        blueprint_iterations: 150,
        reference_iterations: 400,
        weaken: true,
        selfgen_solver: solver(60),
        subgame_solver: solver(100),
        endgame_solver: solver(100),
    }
}

/// Rock always loses one chip to Paper in the doubled-scissors matcher, so
/// a Rock agent against a Paper agent scores exactly -1000 mbb per hand
/// from both seats, with zero spread across duplicate pairs.
#[test]
fn duplicate_match_totals_match_hand_computation() {
    let game = rps();
    let mut rock = PolicyAgent::new(&game, fixed_profile(&game, "R"));
    let mut paper = PolicyAgent::new(&game, fixed_profile(&game, "P"));
    let report = run_match(&game, &mut rock, &mut paper, 4, 99).unwrap();

    assert_eq!(report.hands, 4);
    assert_eq!(report.big_blind, 1.0);
    // Forward hand: R vs P pays -1; reverse hand: P vs R pays +1 to the
    // paper seat, so rock loses a chip both ways. Four hands, four chips.
    assert_eq!(report.chips, -4.0);
    assert_eq!(report.mbb_per_game, -4.0 * 1000.0 / 4.0);
    assert_eq!(report.ci95_mbb, 0.0);
    for seat in report.per_seat {
        assert_eq!(seat.hands, 2);
        assert_eq!(seat.chips, -2.0);
        assert_eq!(seat.mbb_per_game, -1000.0);
    }
}

#[test]
fn identical_agents_cancel_out_exactly() {
    let game = kuhn();
    let profile = StrategyProfile::uniform(&game);
    let mut a = PolicyAgent::new(&game, profile.clone());
    let mut b = PolicyAgent::new(&game, profile);
    let report = run_match(&game, &mut a, &mut b, 20, 7).unwrap();

    // Each duplicate pair replays the same cards with seats swapped, and
    // identical deterministic agents mirror each other exactly.
    assert_eq!(report.chips, 0.0);
    assert_eq!(report.mbb_per_game, 0.0);
    assert_eq!(report.ci95_mbb, 0.0);
    assert_eq!(report.per_seat[0].chips, -report.per_seat[1].chips);
}

#[test]
fn odd_hand_counts_are_rejected() {
    let game = rps();
    for hands in [0, 1, 3] {
        let mut a = PolicyAgent::new(&game, fixed_profile(&game, "R"));
        let mut b = PolicyAgent::new(&game, fixed_profile(&game, "P"));
        let err = match run_match(&game, &mut a, &mut b, hands, 1) {
            Err(e) => e,
            Ok(_) => panic!("{hands} hands should not be playable"),
        };
        assert_eq!(err.category(), "invalid-parameter");
    }
}

/// A fold-whenever-possible agent seated as P1 folds its small blind
/// immediately every hand: that seat's rate is the blind-forfeiture rate,
/// one chip per hand, exactly -500 mbb under a 2-chip big blind.
#[test]
fn always_folding_forfeits_the_small_blind_exactly() {
    let game = mini_nlfh(&[]);
    let blueprint = solve_profile(&game, 300, 0).unwrap();
    let folder_profile = StrategyProfile::new(
        prefer(&game, Player::P1, |l| l == "f"),
        prefer(&game, Player::P2, |l| l == "f"),
    );
    let mut folder = PolicyAgent::new(&game, folder_profile);
    let mut opponent = PolicyAgent::new(&game, blueprint);
    let report = run_match(&game, &mut folder, &mut opponent, 60, 3).unwrap();

    assert_eq!(report.per_seat[0].chips, -30.0);
    assert_eq!(report.per_seat[0].mbb_per_game, -500.0);
    assert!(
        report.mbb_per_game < 0.0,
        "always folding should lose overall, got {}",
        report.mbb_per_game
    );
    assert!(report.ci95_mbb.is_finite());
}

#[test]
fn training_reports_exploitability_checkpoints() {
    let game = kuhn();
    let config = SolverConfig { iterations: 600, ..SolverConfig::default() };
    let report = train_with_checkpoints(&game, &config, &[200, 400, 600]).unwrap();

    assert_eq!(report.checkpoints.len(), 3);
    assert_eq!(
        report.checkpoints.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
        vec![200, 400, 600]
    );
    for &(_, e) in &report.checkpoints {
        assert!(e >= 0.0 && e.is_finite());
    }
    let first = report.checkpoints[0].1;
    let last = report.checkpoints[2].1;
    assert!(last < first, "training should reduce exploitability: {first} -> {last}");

    // The final profile is the one the last checkpoint measured.
    let via_profile = dlsolve::best_response::exploitability(&game, &report.profile).unwrap();
    assert_close(via_profile.mbb_per_game, last, 1e-9, "final checkpoint");

    for bad in [vec![0, 200], vec![200, 200], vec![200, 700]] {
        let err = match train_with_checkpoints(&game, &config, &bad) {
            Err(e) => e,
            Ok(_) => panic!("checkpoints {bad:?} should be rejected"),
        };
        assert_eq!(err.category(), "invalid-parameter");
    }
    let zero = SolverConfig { iterations: 0, ..SolverConfig::default() };
    let err = match train_with_checkpoints(&game, &zero, &[]) {
        Err(e) => e,
        Ok(_) => panic!("zero iterations should be rejected"),
    };
    assert_eq!(err.category(), "invalid-parameter");
}

/// Facing the unfamiliar 0.75-pot opening, translation splits it across
/// the 0.5-pot and 1-pot openings with the pseudo-harmonic weight
/// (upper - x)(1 + lower) / ((upper - lower)(1 + x)) = 3/7, and the raise
/// menus line up size-for-size, so the blended row is exactly
/// 3/7 * row(vs r2) + 4/7 * row(vs r4).
#[test]
fn translation_mixes_neighboring_sizes_by_the_closed_form() {
    let real = mini_nlfh(&[0.75]);
    let abstraction = mini_nlfh(&[]);
    let blueprint = solve_profile(&abstraction, 200, 0).unwrap();
    let hero = blueprint.get(Player::P2);
    let translated = rpat_strategy(&real, &abstraction, hero).unwrap();

    let p_lower = rpat_lower_probability(0.75, 0.5, 1.0).unwrap();
    assert_close(p_lower, 3.0 / 7.0, 1e-12, "pseudo-harmonic weight");

    let mut checked_off_tree = 0;
    let mut checked_on_tree = 0;
    for c in real.acting_classes(Player::P2) {
        let class = real.class(c);
        let row = translated.lookup(&class.key).expect("every real infoset has a row");
        assert_eq!(row.len(), class.actions.len());
        assert_close(row.iter().sum::<f64>(), 1.0, 1e-9, "row mass");
        assert!(row.iter().all(|&p| p >= 0.0));

        if let Some(bp_row) = hero.lookup(&class.key) {
            assert_eq!(row, bp_row, "covered infosets pass the blueprint through");
            checked_on_tree += 1;
        } else if class.key.ends_with("/r3") {
            let low = hero.lookup(&class.key.replace("/r3", "/r2")).unwrap();
            let high = hero.lookup(&class.key.replace("/r3", "/r4")).unwrap();
            for (i, &v) in row.iter().enumerate() {
                assert_close(v, p_lower * low[i] + (1.0 - p_lower) * high[i], 1e-9, "blend");
            }
            checked_off_tree += 1;
        }
    }
    assert_eq!(checked_off_tree, 6, "one first-to-act infoset per hole card");
    assert!(checked_on_tree > 50);
}

#[test]
fn off_tree_response_covers_the_unfamiliar_line() {
    let real = mini_nlfh(&[0.75]);
    let abstraction = mini_nlfh(&[]);
    let cfg = tiny_config();
    let blueprint = solve_profile(&abstraction, cfg.blueprint_iterations, 0).unwrap();

    let response = off_tree_response(&real, &abstraction, &blueprint, 2, 5, &cfg).unwrap();
    assert_eq!(response.player, Player::P2);

    let mut off_tree = 0;
    for c in real.acting_classes(Player::P2) {
        let class = real.class(c);
        let row = response.lookup(&class.key).expect("every real infoset has a row");
        assert_eq!(row.len(), class.actions.len());
        assert_close(row.iter().sum::<f64>(), 1.0, 1e-6, "row mass");
        if class.key.contains("/r3") {
            off_tree += 1;
        }
    }
    assert!(off_tree >= 3, "expected resolved rows along the unfamiliar line");

    // The response is a complete strategy, so the exact best response is
    // well-defined; its value is bounded by the stakes.
    let br = best_response(&real, &response, Player::P1).unwrap().value;
    assert!(br.is_finite() && br.abs() <= 20.0);

    // The whole pipeline is deterministic in its seed.
    let again = off_tree_response(&real, &abstraction, &blueprint, 2, 5, &cfg).unwrap();
    assert_eq!(response, again);
}

#[test]
fn experiment_curves_are_floored_and_validated() {
    let real = mini_nlfh(&[0.75]);
    let abstraction = mini_nlfh(&[]);
    let cfg = tiny_config();

    let curve = off_tree_experiment(&real, &abstraction, &cfg).unwrap();
    assert_eq!(
        curve.points.iter().map(|&(n, _)| n).collect::<Vec<_>>(),
        vec![1, 2]
    );
    for &(_, e) in &curve.points {
        assert!(e >= 0.0 && e.is_finite());
    }
    assert!(curve.rpat >= 0.0 && curve.rpat.is_finite());
    assert!(curve.in_abstraction >= 0.0 && curve.in_abstraction.is_finite());
    assert!(curve.reference_value.abs() < 20.0);

    let reject = |mutate: &dyn Fn(&mut OffTreeConfig)| {
        let mut bad = cfg.clone();
        mutate(&mut bad);
        let err = match off_tree_experiment(&real, &abstraction, &bad) {
            Err(e) => e,
            Ok(_) => panic!("invalid configuration should be rejected"),
        };
        assert_eq!(err.category(), "invalid-parameter");
    };
    reject(&|c| c.value_counts.clear());
    reject(&|c| c.value_counts = vec![2, 2]);
    reject(&|c| c.seeds.clear());
    reject(&|c| c.blueprint_iterations = 0);
}
