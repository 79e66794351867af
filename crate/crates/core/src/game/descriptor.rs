//! Declarative game parameters, loadable from TOML configuration files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which benchmark game to build, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameDescriptor {
    /// Rock-paper-scissors where any win involving Scissors pays double.
    RpsPlus,
    Kuhn(KuhnParams),
    Leduc(LeducParams),
    /// Scaled no-limit flop hold'em: one private card each, one board deal,
    /// two betting rounds with pot-fraction raise sizes.
    Nlfh(NlfhParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KuhnParams {
    /// Deck size; the classic game uses 3 ranks.
    pub ranks: u8,
    pub ante: u32,
    pub bet: u32,
}

impl Default for KuhnParams {
    fn default() -> Self {
        KuhnParams { ranks: 3, ante: 1, bet: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeducParams {
    pub ranks: u8,
    /// Copies of each rank in the deck.
    pub copies: u8,
    pub ante: u32,
    /// Fixed raise size per round.
    pub bets: Vec<u32>,
    /// Maximum raises per betting round.
    pub raise_cap: u8,
}

impl Default for LeducParams {
    fn default() -> Self {
        LeducParams { ranks: 3, copies: 2, ante: 1, bets: vec![2, 4], raise_cap: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlfhParams {
    pub ranks: u8,
    pub copies: u8,
    /// Starting stack per player, in chips.
    pub stack: u32,
    pub small_blind: u32,
    pub big_blind: u32,
    /// Raise sizes as fractions of the pot after calling.
    pub bet_fractions: Vec<f64>,
    /// Extra raise sizes available only at the very first decision of the
    /// game; used to stage off-tree opponent actions.
    pub extra_opening_fractions: Vec<f64>,
    /// Community cards dealt between the two betting rounds.
    pub board_cards: u8,
}

impl Default for NlfhParams {
    fn default() -> Self {
        NlfhParams {
            ranks: 3,
            copies: 2,
            stack: 20,
            small_blind: 1,
            big_blind: 2,
            bet_fractions: vec![0.5, 1.0],
            extra_opening_fractions: vec![],
            board_cards: 3,
        }
    }
}

impl GameDescriptor {
    /// Short identifier used in file headers and reports.
    pub fn id(&self) -> String {
        match self {
            GameDescriptor::RpsPlus => "rps+".to_string(),
            GameDescriptor::Kuhn(p) => format!("kuhn{}", p.ranks),
            GameDescriptor::Leduc(p) => format!("leduc{}x{}", p.ranks, p.copies),
            GameDescriptor::Nlfh(p) => {
                let bets: Vec<String> =
                    p.bet_fractions.iter().map(|b| format!("{}", (b * 100.0).round())).collect();
                let extra = if p.extra_opening_fractions.is_empty() {
                    String::new()
                } else {
                    let xs: Vec<String> = p
                        .extra_opening_fractions
                        .iter()
                        .map(|b| format!("{}", (b * 100.0).round()))
                        .collect();
                    format!("+{}", xs.join("_"))
                };
                format!(
                    "nlfh-d{}-s{}-b{}{}",
                    p.ranks * p.copies,
                    p.stack,
                    bets.join("_"),
                    extra
                )
            }
        }
    }

    pub fn big_blind(&self) -> f64 {
        match self {
            GameDescriptor::RpsPlus => 1.0,
            GameDescriptor::Kuhn(p) => p.ante as f64,
            GameDescriptor::Leduc(p) => p.ante as f64,
            GameDescriptor::Nlfh(p) => p.big_blind as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            GameDescriptor::RpsPlus => Ok(()),
            GameDescriptor::Kuhn(p) => {
                if p.ranks < 2 || p.ranks > 13 {
                    return bad(format!("kuhn ranks must be in 2..=13, got {}", p.ranks));
                }
                if p.ante == 0 || p.bet == 0 {
                    return bad("kuhn ante and bet must be positive".into());
                }
                Ok(())
            }
            GameDescriptor::Leduc(p) => {
                if p.ranks < 2 || p.copies < 2 || p.ranks * p.copies > 24 {
                    return bad(format!(
                        "leduc deck {}x{} out of range (need >= 2 ranks, >= 2 copies)",
                        p.ranks, p.copies
                    ));
                }
                if p.bets.len() != 2 || p.bets.iter().any(|&b| b == 0) {
                    return bad("leduc needs one positive raise size per round".into());
                }
                if p.ante == 0 || p.raise_cap == 0 {
                    return bad("leduc ante and raise cap must be positive".into());
                }
                Ok(())
            }
            GameDescriptor::Nlfh(p) => {
                let deck = p.ranks as u32 * p.copies as u32;
                if p.ranks < 2 || p.copies < 1 || deck > 24 {
                    return bad(format!("nlfh deck {}x{} out of range", p.ranks, p.copies));
                }
                if p.board_cards == 0 || (p.board_cards as u32) > deck - 2 {
                    return bad(format!(
                        "nlfh board of {} cards impossible with deck {deck}",
                        p.board_cards
                    ));
                }
                if p.small_blind == 0 || p.big_blind < p.small_blind {
                    return bad("nlfh blinds must satisfy 0 < small <= big".into());
                }
                if p.stack <= p.big_blind {
                    return bad("nlfh stack must exceed the big blind".into());
                }
                if p.bet_fractions.is_empty()
                    || p.bet_fractions
                        .iter()
                        .chain(&p.extra_opening_fractions)
                        .any(|&f| !(f > 0.0) || !f.is_finite())
                {
                    return bad("nlfh bet fractions must be positive".into());
                }
                Ok(())
            }
        }
    }

    pub fn from_toml(text: &str) -> Result<GameDescriptor> {
        #[derive(Deserialize)]
        struct Wrapper {
            game: GameDescriptor,
        }
        let w: Wrapper =
            toml::from_str(text).map_err(|e| Error::Parse(format!("game config: {e}")))?;
        w.game.validate()?;
        Ok(w.game)
    }

    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            game: &'a GameDescriptor,
        }
        toml::to_string_pretty(&Wrapper { game: self }).expect("descriptor serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<GameDescriptor> {
        GameDescriptor::from_toml(&std::fs::read_to_string(path)?)
    }
}

/// Rank letters in ascending strength: J < Q < K < A, then spillover for
/// larger decks. Only used for display; comparisons use rank indices.
const RANK_LETTERS: &[u8] = b"JQKA23456789T";

/// Card label: rank letter plus a suit letter when the deck holds multiple
/// copies of each rank ("Ja", "Jb", ...).
pub(crate) fn card_label(rank: u8, copy: u8, copies: u8) -> String {
    let r = RANK_LETTERS[rank as usize] as char;
    if copies == 1 {
        format!("{r}")
    } else {
        format!("{r}{}", (b'a' + copy) as char)
    }
}

pub(crate) fn card_rank(label: &str) -> u8 {
    RANK_LETTERS.iter().position(|&c| c == label.as_bytes()[0]).expect("rank letter") as u8
}
