//! Leduc hold'em: paired deck, one private card each, a fixed-size betting
//! round, one community card, then a second betting round with a larger bet.

use super::descriptor::{card_label, LeducParams};
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
    board: Option<u8>,
    round: u8,
    commit: [u32; 2],
    to_act: u8,
    outstanding: u32,
    raises: u8,
    actions_this_round: u8,
}

struct Leduc<'a> {
    p: &'a LeducParams,
    deck: Vec<(u8, String)>,
}

impl<'a> Leduc<'a> {
    fn new(p: &'a LeducParams) -> Self {
        let mut deck = Vec::new();
        for rank in 0..p.ranks {
            for copy in 0..p.copies {
                deck.push((rank, card_label(rank, copy, p.copies)));
            }
        }
        Leduc { p, deck }
    }

    fn rank(&self, card: u8) -> u8 {
        self.deck[card as usize].0
    }

    fn strength(&self, card: u8, board: u8) -> (u8, u8) {
        let r = self.rank(card);
        let paired = (r == self.rank(board)) as u8;
        (paired, r)
    }
}

impl<'a> Rules for Leduc<'a> {
    type S = S;

    fn name(&self) -> String {
        format!("leduc{}x{}", self.p.ranks, self.p.copies)
    }

    fn big_blind(&self) -> f64 {
        self.p.ante as f64
    }

    fn root(&self) -> S {
        let ante = self.p.ante;
        S {
            phase: Phase::Predeal,
            deal: None,
            board: None,
            round: 0,
            commit: [ante, ante],
            to_act: 0,
            outstanding: 0,
            raises: 0,
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
                let board = s.board.unwrap();
                let s1 = self.strength(c1, board);
                let s2 = self.strength(c2, board);
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
                let prob = 1.0 / remaining.len() as f64;
                remaining
                    .into_iter()
                    .map(|card| {
                        let label = format!("*{}", self.deck[card as usize].1);
                        let action = ActionDef::public(&label, ActionClass::Neutral);
                        let mut next = s.clone();
                        next.board = Some(card);
                        next.phase = Phase::Betting;
                        next.to_act = 0;
                        next.outstanding = 0;
                        next.raises = 0;
                        next.actions_this_round = 0;
                        (action, prob, next)
                    })
                    .collect()
            }
            Phase::Betting => {
                let mut out = Vec::new();
                let me = s.to_act as usize;
                let bet = self.p.bets[s.round as usize];
                let advance = |next: &mut S| {
                    next.to_act ^= 1;
                    next.actions_this_round += 1;
                };
                // Round is over once commitments are level and both players
                // have acted in it.
                let close = |next: &mut S| {
                    if next.round == 0 {
                        next.phase = Phase::BoardPending;
                        next.round = 1;
                    } else {
                        next.phase = Phase::Showdown;
                    }
                };
                if s.outstanding > 0 {
                    let mut next = s.clone();
                    next.phase = Phase::FoldWin(s.to_act);
                    out.push((ActionDef::public("f", ActionClass::Fold), 1.0, next));
                }
                {
                    let mut next = s.clone();
                    next.commit[me] += s.outstanding;
                    next.outstanding = 0;
                    advance(&mut next);
                    if next.actions_this_round >= 2 {
                        close(&mut next);
                    }
                    out.push((ActionDef::public("c", ActionClass::CheckCall), 1.0, next));
                }
                if s.raises < self.p.raise_cap {
                    let mut next = s.clone();
                    next.commit[me] += s.outstanding + bet;
                    next.outstanding = bet;
                    next.raises += 1;
                    advance(&mut next);
                    let label = format!("r{bet}");
                    out.push((ActionDef::public(&label, ActionClass::BetRaise), 1.0, next));
                }
                out
            }
            _ => panic!("cannot expand terminal state"),
        }
    }
}

pub fn build(p: &LeducParams) -> Result<GameTree> {
    build_from_rules(&Leduc::new(p))
}
