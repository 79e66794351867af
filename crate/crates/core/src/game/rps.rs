//! Rock-paper-scissors variant where any win involving Scissors pays 2
//! instead of 1. Player 1 commits a hidden move, player 2 responds.

use super::{build_from_rules, ActionClass, ActionDef, GameTree, NodeKind, Player, Rules};
use crate::error::Result;

const MOVES: [&str; 3] = ["R", "P", "S"];

/// Payoff to player 1 when P1 plays row and P2 plays column (R, P, S order).
pub const PAYOFF: [[f64; 3]; 3] =
    [[0.0, -1.0, 2.0], [1.0, 0.0, -2.0], [-2.0, 2.0, 0.0]];

#[derive(Clone)]
struct S {
    p1: Option<usize>,
    p2: Option<usize>,
}

struct Rps;

impl Rules for Rps {
    type S = S;

    fn name(&self) -> String {
        "rps+".to_string()
    }

    fn big_blind(&self) -> f64 {
        1.0
    }

    fn root(&self) -> S {
        S { p1: None, p2: None }
    }

    fn kind(&self, s: &S) -> NodeKind {
        match (s.p1, s.p2) {
            (None, _) => NodeKind::Decision(Player::P1),
            (Some(_), None) => NodeKind::Decision(Player::P2),
            (Some(_), Some(_)) => NodeKind::Terminal,
        }
    }

    fn util_p1(&self, s: &S) -> f64 {
        PAYOFF[s.p1.unwrap()][s.p2.unwrap()]
    }

    fn pot(&self, _s: &S) -> f64 {
        1.0
    }

    fn round(&self, _s: &S) -> u8 {
        0
    }

    fn expand(&self, s: &S) -> Vec<(ActionDef, f64, S)> {
        MOVES
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let (action, child) = if s.p1.is_none() {
                    (
                        ActionDef::hidden(m, ActionClass::Neutral, Player::P1),
                        S { p1: Some(i), p2: None },
                    )
                } else {
                    (ActionDef::public(m, ActionClass::Neutral), S { p1: s.p1, p2: Some(i) })
                };
                (action, 1.0, child)
            })
            .collect()
    }
}

pub fn build() -> Result<GameTree> {
    build_from_rules(&Rps)
}
