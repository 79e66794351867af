//! Scaled no-limit flop hold'em: one private card each from a paired deck,
//! blinds, a no-limit preflop round with pot-fraction raise sizes, a
//! multi-card board, one postflop round, then showdown.

use super::descriptor::{card_label, NlfhParams};
use super::{build_from_rules, ActionClass, ActionDef, GameTree, NodeKind, Player, Rules};
use crate::error::Result;

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    Predeal,
    Betting,
    BoardPending,
    FoldWin(u8),
    Showdown,
}

#[derive(Clone)]
struct S {
    phase: Phase,
    deal: Option<(u8, u8)>,
    board: Vec<u8>,
    round: u8,
    commit: [u32; 2],
    to_act: u8,
    actions_this_round: u8,
}

struct Nlfh<'a> {
    p: &'a NlfhParams,
    deck: Vec<(u8, String)>,
}

impl<'a> Nlfh<'a> {
    fn new(p: &'a NlfhParams) -> Self {
        let mut deck = Vec::new();
        for rank in 0..p.ranks {
            for copy in 0..p.copies {
                deck.push((rank, card_label(rank, copy, p.copies)));
            }
        }
        Nlfh { p, deck }
    }

    fn rank(&self, card: u8) -> u8 {
        self.deck[card as usize].0
    }

    fn strength(&self, card: u8, board: &[u8]) -> (u8, u8) {
        let r = self.rank(card);
        let paired = board.iter().any(|&b| self.rank(b) == r) as u8;
        (paired, r)
    }

    fn outstanding(&self, s: &S) -> u32 {
        s.commit[1 - s.to_act as usize] - s.commit[s.to_act as usize]
    }

    /// Chips added beyond the call for each available raise size, ascending.
    fn raise_amounts(&self, s: &S) -> Vec<u32> {
        let opp = s.commit[1 - s.to_act as usize];
        let pot_after_call = 2 * opp;
        let mut fractions: Vec<f64> = self.p.bet_fractions.clone();
        if s.round == 0 && s.actions_this_round == 0 {
            fractions.extend(&self.p.extra_opening_fractions);
        }
        let mut amounts: Vec<u32> = fractions
            .iter()
            .filter_map(|f| {
                let add = ((f * pot_after_call as f64).round() as u32).max(1);
                let capped = add.min(self.p.stack - opp);
                (capped > 0).then_some(capped)
            })
            .collect();
        amounts.sort_unstable();
        amounts.dedup();
        amounts
    }
}

impl<'a> Rules for Nlfh<'a> {
    type S = S;

    fn name(&self) -> String {
        use super::descriptor::GameDescriptor;
        GameDescriptor::Nlfh(self.p.clone()).id()
    }

    fn big_blind(&self) -> f64 {
        self.p.big_blind as f64
    }

    fn root(&self) -> S {
        S {
            phase: Phase::Predeal,
            deal: None,
            board: Vec::new(),
            round: 0,
            commit: [self.p.small_blind, self.p.big_blind],
            to_act: 0,
            actions_this_round: 0,
        }
    }

    fn kind(&self, s: &S) -> NodeKind {
        match s.phase {
            Phase::Predeal | Phase::BoardPending => NodeKind::Chance,
            Phase::Betting => NodeKind::Decision(if s.to_act == 0 { Player::P1 } else { Player::P2 }),
            Phase::FoldWin(_) | Phase::Showdown => NodeKind::Terminal,
        }
    }

    fn util_p1(&self, s: &S) -> f64 {
        match s.phase {
            Phase::FoldWin(folder) => {
                let lost = s.commit[folder as usize] as f64;
                if folder == 0 {
                    -lost
                } else {
                    lost
                }
            }
            Phase::Showdown => {
                let (c1, c2) = s.deal.unwrap();
                let s1 = self.strength(c1, &s.board);
                let s2 = self.strength(c2, &s.board);
                let stake = s.commit[0] as f64;
                match s1.cmp(&s2) {
                    std::cmp::Ordering::Greater => stake,
                    std::cmp::Ordering::Less => -stake,
                    std::cmp::Ordering::Equal => 0.0,
                }
            }
            _ => panic!("non-terminal state"),
        }
    }

    fn pot(&self, s: &S) -> f64 {
        (s.commit[0] + s.commit[1]) as f64
    }

    fn round(&self, s: &S) -> u8 {
        s.round
    }

    fn expand(&self, s: &S) -> Vec<(ActionDef, f64, S)> {
        match s.phase {
            Phase::Predeal => {
                let d = self.deck.len();
                let prob = 1.0 / (d * (d - 1)) as f64;
                let mut out = Vec::new();
                for c1 in 0..d as u8 {
                    for c2 in 0..d as u8 {
                        if c1 == c2 {
                            continue;
                        }
                        let l1 = &self.deck[c1 as usize].1;
                        let l2 = &self.deck[c2 as usize].1;
                        let action = ActionDef::deal(&format!("d:{l1}{l2}"), l1, l2, "?");
                        let mut next = s.clone();
                        next.phase = Phase::Betting;
                        next.deal = Some((c1, c2));
                        out.push((action, prob, next));
                    }
                }
                out
            }
            Phase::BoardPending => {
                let (c1, c2) = s.deal.unwrap();
                let remaining: Vec<u8> = (0..self.deck.len() as u8)
                    .filter(|&c| c != c1 && c != c2)
                    .collect();
                let boards = combinations(&remaining, self.p.board_cards as usize);
                let prob = 1.0 / boards.len() as f64;
                boards
                    .into_iter()
                    .map(|board| {
                        let mut label = String::from("*");
                        for &c in &board {
                            label.push_str(&self.deck[c as usize].1);
                        }
                        let action = ActionDef::public(&label, ActionClass::Neutral);
                        let mut next = s.clone();
                        next.board = board;
                        next.phase = Phase::Betting;
                        next.to_act = 0;
                        next.actions_this_round = 0;
                        (action, prob, next)
                    })
                    .collect()
            }
            Phase::Betting => {
                let mut out = Vec::new();
                let me = s.to_act as usize;
                let outstanding = self.outstanding(s);
                let advance = |next: &mut S| {
                    next.to_act ^= 1;
                    next.actions_this_round += 1;
                };
                let close = |next: &mut S| {
                    if next.round == 0 {
                        next.phase = Phase::BoardPending;
                        next.round = 1;
                    } else {
                        next.phase = Phase::Showdown;
                    }
                };
                if outstanding > 0 {
                    let mut next = s.clone();
                    next.phase = Phase::FoldWin(s.to_act);
                    out.push((ActionDef::public("f", ActionClass::Fold), 1.0, next));
                }
                {
                    let mut next = s.clone();
                    next.commit[me] += outstanding;
                    advance(&mut next);
                    if next.actions_this_round >= 2 {
                        close(&mut next);
                    }
                    out.push((ActionDef::public("c", ActionClass::CheckCall), 1.0, next));
                }
                for add in self.raise_amounts(s) {
                    let mut next = s.clone();
                    next.commit[me] = next.commit[1 - me] + add;
                    advance(&mut next);
                    let label = format!("r{add}");
                    out.push((ActionDef::public(&label, ActionClass::BetRaise), 1.0, next));
                }
                out
            }
            _ => panic!("cannot expand terminal state"),
        }
    }
}

/// All k-element subsets in index order.
fn combinations(items: &[u8], k: usize) -> Vec<Vec<u8>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn build(p: &NlfhParams) -> Result<GameTree> {
    build_from_rules(&Nlfh::new(p))
}
