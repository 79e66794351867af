//! Exact best response and exploitability: the verification oracle used by
//! every solver in the crate.
//!
//! With one side's behavioral strategy fixed, the other side faces a
//! single-agent optimization. A forward pass collects chance-and-opponent
//! reach weights; a backward pass picks, per responder infoset, the action
//! maximizing the reach-weighted sum of action values, breaking ties toward
//! the lowest action index.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::game::{GameTree, NodeKind, Player};
use crate::strategy::{expected_value, BehavioralStrategy, PureStrategy, StrategyProfile};

/// Outcome of a best-response computation.
#[derive(Debug, Clone)]
pub struct BestResponseResult {
    /// The responding player.
    pub player: Player,
    /// Responder's expected value at the root, in chips.
    pub value: f64,
    /// Deterministic maximizing strategy, ties broken canonically.
    pub strategy: PureStrategy,
    /// Responder's value per responder infoset: the reach-weighted average
    /// of member-state values, normalized when the infoset is reachable
    /// under chance and the opponent, left as the raw weighted sum when it
    /// is not.
    pub infoset_values: HashMap<String, f64>,
}

/// Computes the exact best response for `responder` against `opponent`.
pub fn best_response(
    game: &GameTree,
    opponent: &BehavioralStrategy,
    responder: Player,
) -> Result<BestResponseResult> {
    if opponent.player == responder {
        return Err(Error::InvalidParameter(format!(
            "responder {responder} needs the other side's strategy, got \
             {responder}'s own"
        )));
    }
    let n = game.num_states();

    // Forward: chance-and-opponent reach; the responder's own actions
    // contribute nothing.
    let mut cf = vec![0.0; n];
    cf[game.root().0 as usize] = 1.0;
    for s in game.states() {
        let i = s.0 as usize;
        match game.kind(s) {
            NodeKind::Terminal => {}
            NodeKind::Chance => {
                let probs = game.chance_distribution(s)?;
                for (idx, c) in game.children(s).enumerate() {
                    cf[c.0 as usize] = cf[i] * probs[idx];
                }
            }
            NodeKind::Decision(p) if p == responder => {
                for c in game.children(s) {
                    cf[c.0 as usize] = cf[i];
                }
            }
            NodeKind::Decision(_) => {
                let row = opponent.probs_at(game, s)?;
                for (idx, c) in game.children(s).enumerate() {
                    cf[c.0 as usize] = cf[i] * row[idx];
                }
            }
        }
    }

    // Backward: values to the responder, deciding each responder infoset
    // the first time one of its members is reached. Acting infosets sit at
    // a single depth, so by then every member's subtree is finished.
    let mut v = vec![0.0; n];
    let mut choices: Vec<Option<usize>> = vec![None; game.num_classes()];
    for s in game.states().rev() {
        let i = s.0 as usize;
        match game.kind(s) {
            NodeKind::Terminal => v[i] = game.utility(s, responder)?,
            NodeKind::Chance => {
                let probs = game.chance_distribution(s)?;
                v[i] = game
                    .children(s)
                    .enumerate()
                    .map(|(idx, c)| probs[idx] * v[c.0 as usize])
                    .sum();
            }
            NodeKind::Decision(p) if p == responder => {
                let c = game.class_of(s, responder);
                let slot = &mut choices[c.0 as usize];
                if slot.is_none() {
                    let members = &game.class(c).states;
                    let num_actions = game.num_actions(s);
                    let mut q = vec![0.0; num_actions];
                    for &h in members {
                        for (idx, child) in game.children(h).enumerate() {
                            q[idx] += cf[h.0 as usize] * v[child.0 as usize];
                        }
                    }
                    let mut best = 0;
                    for (idx, &val) in q.iter().enumerate() {
                        if val > q[best] {
                            best = idx;
                        }
                    }
                    *slot = Some(best);
                    for &h in members {
                        v[h.0 as usize] = v[game.child(h, best).0 as usize];
                    }
                }
            }
            NodeKind::Decision(_) => {
                let row = opponent.probs_at(game, s)?;
                v[i] = game
                    .children(s)
                    .enumerate()
                    .map(|(idx, c)| row[idx] * v[c.0 as usize])
                    .sum();
            }
        }
    }

    // Per-infoset responder values over every responder class, acting or
    // observing.
    let mut infoset_values = HashMap::new();
    for (_, class) in game.classes().filter(|(_, class)| class.player == responder) {
        let mut total = 0.0;
        let mut weighted = 0.0;
        for &h in &class.states {
            total += cf[h.0 as usize];
            weighted += cf[h.0 as usize] * v[h.0 as usize];
        }
        let value = if total > 0.0 { weighted / total } else { weighted };
        infoset_values.insert(class.key.clone(), value);
    }

    let mut pure = PureStrategy { player: responder, choices: HashMap::new() };
    for c in game.acting_classes(responder) {
        pure.choices
            .insert(game.class(c).key.clone(), choices[c.0 as usize].unwrap_or(0));
    }

    Ok(BestResponseResult {
        player: responder,
        value: v[game.root().0 as usize],
        strategy: pure,
        infoset_values,
    })
}

/// Both one-sided best-response values plus the symmetric summary.
#[derive(Debug, Clone, Copy)]
pub struct ExploitabilityReport {
    /// What a best response earns against the profile's P1.
    pub br_vs_p1: f64,
    /// What a best response earns against the profile's P2.
    pub br_vs_p2: f64,
    /// `(br_vs_p1 + br_vs_p2) / 2`, in chips.
    pub chips: f64,
    /// Chips scaled by 1000 / big blind.
    pub mbb_per_game: f64,
}

/// Measures how far a profile is from equilibrium.
pub fn exploitability(game: &GameTree, profile: &StrategyProfile) -> Result<ExploitabilityReport> {
    let br_vs_p1 = best_response(game, &profile.p1, Player::P2)?.value;
    let br_vs_p2 = best_response(game, &profile.p2, Player::P1)?.value;
    let chips = (br_vs_p1 + br_vs_p2) / 2.0;
    Ok(ExploitabilityReport {
        br_vs_p1,
        br_vs_p2,
        chips,
        mbb_per_game: chips * 1000.0 / game.big_blind,
    })
}

/// Best-response values of `responder` at selected infosets, under beliefs
/// induced by chance and the opponent's strategy. Unreachable infosets get
/// the raw (unnormalized) weighted value, which is zero when the opponent
/// never plays into them.
pub fn root_infoset_br_values(
    game: &GameTree,
    opponent: &BehavioralStrategy,
    responder: Player,
    root_keys: &[String],
) -> Result<HashMap<String, f64>> {
    let result = best_response(game, opponent, responder)?;
    let mut out = HashMap::new();
    for key in root_keys {
        let value = result
            .infoset_values
            .get(key)
            .ok_or_else(|| Error::MissingInfoset(key.clone()))?;
        out.insert(key.clone(), *value);
    }
    Ok(out)
}

/// Verifies a best-response value by replaying the pure strategy through
/// the generic expected-value machinery.
pub fn recompute_value(
    game: &GameTree,
    opponent: &BehavioralStrategy,
    result: &BestResponseResult,
) -> Result<f64> {
    let behavioral = result.strategy.to_behavioral(game);
    let profile = match result.player {
        Player::P1 => StrategyProfile::new(behavioral, opponent.clone()),
        Player::P2 => StrategyProfile::new(opponent.clone(), behavioral),
    };
    Ok(result.player.sign() * expected_value(game, &profile)?)
}
