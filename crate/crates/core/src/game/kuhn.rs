//! Kuhn poker: three-card deck, one ante, a single one-chip bet round.

use super::descriptor::{card_label, KuhnParams};
use super::{build_from_rules, ActionClass, ActionDef, GameTree, NodeKind, Player, Rules};
use crate::error::Result;

#[derive(Clone)]
struct S {
    deal: Option<(u8, u8)>,
    /// Betting history: "" | "c" | "b" | "cb" | terminal sequences.
    hist: String,
}

struct Kuhn<'a> {
    p: &'a KuhnParams,
}

impl<'a> Kuhn<'a> {
    fn card(&self, rank: u8) -> String {
        card_label(rank, 0, 1)
    }
}

impl<'a> Rules for Kuhn<'a> {
    type S = S;

    fn name(&self) -> String {
        format!("kuhn{}", self.p.ranks)
    }

    fn big_blind(&self) -> f64 {
        self.p.ante as f64
    }

    fn root(&self) -> S {
        S { deal: None, hist: String::new() }
    }

    fn kind(&self, s: &S) -> NodeKind {
        if s.deal.is_none() {
            return NodeKind::Chance;
        }
        match s.hist.as_str() {
            "" | "cb" => NodeKind::Decision(Player::P1),
            "c" | "b" => NodeKind::Decision(Player::P2),
            _ => NodeKind::Terminal,
        }
    }

    fn util_p1(&self, s: &S) -> f64 {
        let (c1, c2) = s.deal.unwrap();
        let showdown = |stake: u32| -> f64 {
            if c1 > c2 {
                stake as f64
            } else {
                -(stake as f64)
            }
        };
        let ante = self.p.ante;
        let bet = self.p.bet;
        match s.hist.as_str() {
            "cc" => showdown(ante),
            "bc" | "cbc" => showdown(ante + bet),
            "bf" => ante as f64,
            "cbf" => -(ante as f64),
            h => panic!("non-terminal history {h:?}"),
        }
    }

    fn pot(&self, s: &S) -> f64 {
        let bets = s.hist.matches(|c| c == 'b').count() as f64
            + s.hist.matches("bc").count() as f64;
        2.0 * self.p.ante as f64 + bets * self.p.bet as f64
    }

    fn round(&self, _s: &S) -> u8 {
        0
    }

    fn expand(&self, s: &S) -> Vec<(ActionDef, f64, S)> {
        if s.deal.is_none() {
            let n = self.p.ranks;
            let prob = 1.0 / (n as f64 * (n - 1) as f64);
            let mut out = Vec::new();
            for c1 in 0..n {
                for c2 in 0..n {
                    if c1 == c2 {
                        continue;
                    }
                    let (l1, l2) = (self.card(c1), self.card(c2));
                    let action = ActionDef::deal(&format!("d:{l1}{l2}"), &l1, &l2, "?");
                    out.push((action, prob, S { deal: Some((c1, c2)), hist: String::new() }));
                }
            }
            return out;
        }
        let next = |a: char| {
            let mut hist = s.hist.clone();
            hist.push(a);
            S { deal: s.deal, hist }
        };
        match s.hist.as_str() {
            // No outstanding bet: check or bet.
            "" | "c" => vec![
                (ActionDef::public("c", ActionClass::CheckCall), 1.0, next('c')),
                (ActionDef::public("b", ActionClass::BetRaise), 1.0, next('b')),
            ],
            // Facing the bet: fold or call.
            "b" | "cb" => vec![
                (ActionDef::public("f", ActionClass::Fold), 1.0, next('f')),
                (ActionDef::public("c", ActionClass::CheckCall), 1.0, next('c')),
            ],
            h => panic!("cannot expand history {h:?}"),
        }
    }
}

pub fn build(p: &KuhnParams) -> Result<GameTree> {
    build_from_rules(&Kuhn { p })
}
