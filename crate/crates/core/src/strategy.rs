//! Behavioral strategies, reach probabilities, and belief computations.
//!
//! A behavioral strategy maps each information-set key of one player to a
//! probability distribution over that infoset's action menu, in menu order.
//! Strategies are keyed by string so they transfer verbatim between a game
//! and any restriction or subgame built from it that preserves keys.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{ActionClass, ClassId, GameTree, NodeKind, Player, StateId};

/// One player's behavioral strategy, keyed by infoset key.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralStrategy {
    pub player: Player,
    pub table: HashMap<String, Vec<f64>>,
}

impl BehavioralStrategy {
    pub fn new(player: Player) -> BehavioralStrategy {
        BehavioralStrategy { player, table: HashMap::new() }
    }

    /// Uniform play at every acting infoset of `player`.
    pub fn uniform(game: &GameTree, player: Player) -> BehavioralStrategy {
        let mut s = BehavioralStrategy::new(player);
        for c in game.acting_classes(player) {
            let class = game.class(c);
            let n = class.actions.len();
            s.table.insert(class.key.clone(), vec![1.0 / n as f64; n]);
        }
        s
    }

    pub fn lookup(&self, key: &str) -> Option<&[f64]> {
        self.table.get(key).map(Vec::as_slice)
    }

    /// Action distribution at a state where this player acts.
    pub fn probs_at(&self, game: &GameTree, s: StateId) -> Result<&[f64]> {
        let key = game.infoset_key(s, self.player);
        self.lookup(key).ok_or_else(|| Error::MissingInfoset(key.to_string()))
    }

    pub fn set(&mut self, key: impl Into<String>, probs: Vec<f64>) {
        self.table.insert(key.into(), probs);
    }

    /// Scales the probability of every action whose class matches `target`
    /// by `multiplier`, renormalizing each row. Rows whose total mass would
    /// vanish are left unchanged.
    pub fn bias(&self, game: &GameTree, target: ActionClass, multiplier: f64) -> BehavioralStrategy {
        let mut out = BehavioralStrategy::new(self.player);
        for (key, row) in &self.table {
            let mut scaled = row.clone();
            if let Some(c) = game.class_by_key(key) {
                let class = game.class(c);
                for (p, &a) in scaled.iter_mut().zip(&class.actions) {
                    if game.action(a).class == target {
                        *p *= multiplier;
                    }
                }
            }
            let total: f64 = scaled.iter().sum();
            if total > 0.0 {
                for p in &mut scaled {
                    *p /= total;
                }
                out.table.insert(key.clone(), scaled);
            } else {
                out.table.insert(key.clone(), row.clone());
            }
        }
        out
    }

    /// Pointwise convex combination `(1 - t) * self + t * other`.
    pub fn mix(&self, other: &BehavioralStrategy, t: f64) -> Result<BehavioralStrategy> {
        if self.player != other.player {
            return Err(Error::ScopeMismatch(format!(
                "cannot mix strategies for {} and {}",
                self.player, other.player
            )));
        }
        let mut out = BehavioralStrategy::new(self.player);
        for (key, a) in &self.table {
            let b = other.table.get(key).ok_or_else(|| {
                Error::ScopeMismatch(format!("infoset {key} missing from the second strategy"))
            })?;
            if a.len() != b.len() {
                return Err(Error::ScopeMismatch(format!("menu size differs at {key}")));
            }
            out.table.insert(
                key.clone(),
                a.iter().zip(b).map(|(&x, &y)| (1.0 - t) * x + t * y).collect(),
            );
        }
        for key in other.table.keys() {
            if !self.table.contains_key(key) {
                return Err(Error::ScopeMismatch(format!(
                    "infoset {key} missing from the first strategy"
                )));
            }
        }
        Ok(out)
    }
}

/// A deterministic strategy: one chosen action index per infoset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureStrategy {
    pub player: Player,
    pub choices: HashMap<String, usize>,
}

impl PureStrategy {
    pub fn to_behavioral(&self, game: &GameTree) -> BehavioralStrategy {
        let mut s = BehavioralStrategy::new(self.player);
        for (key, &idx) in &self.choices {
            let n = game
                .class_by_key(key)
                .map(|c| game.class(c).actions.len())
                .unwrap_or(idx + 1);
            let mut row = vec![0.0; n.max(idx + 1)];
            row[idx] = 1.0;
            s.table.insert(key.clone(), row);
        }
        s
    }
}

/// A strategy for each player.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    pub p1: BehavioralStrategy,
    pub p2: BehavioralStrategy,
}

impl StrategyProfile {
    pub fn new(p1: BehavioralStrategy, p2: BehavioralStrategy) -> StrategyProfile {
        StrategyProfile { p1, p2 }
    }

    pub fn uniform(game: &GameTree) -> StrategyProfile {
        StrategyProfile {
            p1: BehavioralStrategy::uniform(game, Player::P1),
            p2: BehavioralStrategy::uniform(game, Player::P2),
        }
    }

    pub fn get(&self, player: Player) -> &BehavioralStrategy {
        match player {
            Player::P1 => &self.p1,
            Player::P2 => &self.p2,
        }
    }

    pub fn get_mut(&mut self, player: Player) -> &mut BehavioralStrategy {
        match player {
            Player::P1 => &mut self.p1,
            Player::P2 => &mut self.p2,
        }
    }

    /// Replaces one side of the profile.
    pub fn with(&self, strategy: BehavioralStrategy) -> StrategyProfile {
        let mut out = self.clone();
        let side = strategy.player;
        *out.get_mut(side) = strategy;
        out
    }

    /// Serializes to a deterministic, lossless text form: one `key\tp p p`
    /// line per infoset, sorted by key within per-player sections.
    pub fn to_text(&self) -> String {
        let mut out = String::from("format: strategy-profile v1\n");
        for strat in [&self.p1, &self.p2] {
            let _ = writeln!(out, "[{}]", strat.player);
            let mut keys: Vec<&String> = strat.table.keys().collect();
            keys.sort();
            for key in keys {
                let row = &strat.table[key];
                let probs: Vec<String> = row.iter().map(|p| format!("{p}")).collect();
                let _ = writeln!(out, "{key}\t{}", probs.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<StrategyProfile> {
        let mut lines = text.lines();
        match lines.next() {
            Some("format: strategy-profile v1") => {}
            other => {
                return Err(Error::Parse(format!(
                    "unrecognized strategy header {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut profile = StrategyProfile::new(
            BehavioralStrategy::new(Player::P1),
            BehavioralStrategy::new(Player::P2),
        );
        let mut current: Option<Player> = None;
        for line in lines {
            if line.is_empty() {
                continue;
            }
            match line {
                "[p1]" => current = Some(Player::P1),
                "[p2]" => current = Some(Player::P2),
                _ => {
                    let player = current
                        .ok_or_else(|| Error::Parse("strategy row before any [player] section".into()))?;
                    let (key, rest) = line
                        .split_once('\t')
                        .ok_or_else(|| Error::Parse(format!("malformed strategy row: {line}")))?;
                    let row: Vec<f64> = rest
                        .split(' ')
                        .map(|t| {
                            t.parse::<f64>()
                                .map_err(|e| Error::Parse(format!("bad probability {t}: {e}")))
                        })
                        .collect::<Result<_>>()?;
                    profile.get_mut(player).table.insert(key.to_string(), row);
                }
            }
        }
        Ok(profile)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<StrategyProfile> {
        StrategyProfile::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Per-state reach factors from the root, split by who contributed them:
/// `chance[s]` is the product of chance probabilities on the path to `s`,
/// `own[p][s]` the product of player p's action probabilities.
#[derive(Debug, Clone)]
pub struct ReachTable {
    pub chance: Vec<f64>,
    pub own: [Vec<f64>; 2],
}

impl ReachTable {
    /// Joint probability of reaching `s` under the profile.
    pub fn joint(&self, s: StateId) -> f64 {
        self.chance[s.0 as usize] * self.own[0][s.0 as usize] * self.own[1][s.0 as usize]
    }

    /// Everything except `player`'s own contribution: the counterfactual
    /// reach weight used for beliefs about `player`'s situation.
    pub fn counterfactual(&self, s: StateId, player: Player) -> f64 {
        self.chance[s.0 as usize] * self.own[player.other().index()][s.0 as usize]
    }
}

/// Computes reach factors for every state in one forward pass. States are
/// depth-ordered, so each parent is finished before its children.
pub fn reach_table(game: &GameTree, profile: &StrategyProfile) -> Result<ReachTable> {
    let n = game.num_states();
    let mut t = ReachTable { chance: vec![0.0; n], own: [vec![0.0; n], vec![0.0; n]] };
    let root = game.root().0 as usize;
    t.chance[root] = 1.0;
    t.own[0][root] = 1.0;
    t.own[1][root] = 1.0;
    for s in game.states() {
        if game.is_terminal(s) {
            continue;
        }
        let i = s.0 as usize;
        match game.kind(s) {
            NodeKind::Chance => {
                let probs = game.chance_distribution(s)?;
                for (idx, c) in game.children(s).enumerate() {
                    let j = c.0 as usize;
                    t.chance[j] = t.chance[i] * probs[idx];
                    t.own[0][j] = t.own[0][i];
                    t.own[1][j] = t.own[1][i];
                }
            }
            NodeKind::Decision(p) => {
                let probs = profile.get(p).probs_at(game, s)?;
                for (idx, c) in game.children(s).enumerate() {
                    let j = c.0 as usize;
                    t.chance[j] = t.chance[i];
                    t.own[p.index()][j] = t.own[p.index()][i] * probs[idx];
                    t.own[p.other().index()][j] = t.own[p.other().index()][i];
                }
            }
            NodeKind::Terminal => unreachable!(),
        }
    }
    Ok(t)
}

/// A belief distribution over a fixed list of states.
#[derive(Debug, Clone)]
pub struct BeliefState {
    pub states: Vec<StateId>,
    pub weights: Vec<f64>,
}

impl BeliefState {
    /// Normalizes the weights to a probability distribution.
    pub fn normalized(&self) -> Result<BeliefState> {
        let total: f64 = self.weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalBelief(format!("{} states", self.states.len())));
        }
        Ok(BeliefState {
            states: self.states.clone(),
            weights: self.weights.iter().map(|w| w / total).collect(),
        })
    }
}

/// Beliefs over the states of `player`'s infoset `class`, weighting each
/// state by chance reach times the opponent's reach.
pub fn infoset_beliefs(
    game: &GameTree,
    reach: &ReachTable,
    class: ClassId,
    player: Player,
) -> BeliefState {
    let states = game.class(class).states.clone();
    let weights = states.iter().map(|&s| reach.counterfactual(s, player)).collect();
    BeliefState { states, weights }
}

/// Expected utility to `player` of every state under the profile, computed
/// bottom-up in one backward pass.
pub fn state_values(game: &GameTree, profile: &StrategyProfile, player: Player) -> Result<Vec<f64>> {
    let n = game.num_states();
    let mut v = vec![0.0; n];
    for s in game.states().rev() {
        let i = s.0 as usize;
        match game.kind(s) {
            NodeKind::Terminal => v[i] = game.utility(s, player)?,
            NodeKind::Chance => {
                let probs = game.chance_distribution(s)?;
                v[i] = game
                    .children(s)
                    .enumerate()
                    .map(|(idx, c)| probs[idx] * v[c.0 as usize])
                    .sum();
            }
            NodeKind::Decision(p) => {
                let probs = profile.get(p).probs_at(game, s)?;
                v[i] = game
                    .children(s)
                    .enumerate()
                    .map(|(idx, c)| probs[idx] * v[c.0 as usize])
                    .sum();
            }
        }
    }
    Ok(v)
}

/// Root expected value to P1 under the profile, in chips.
pub fn expected_value(game: &GameTree, profile: &StrategyProfile) -> Result<f64> {
    Ok(state_values(game, profile, Player::P1)?[game.root().0 as usize])
}

/// Belief-weighted expected value of an infoset for `player`: the average
/// of its states' values under beliefs proportional to chance times the
/// opponent's reach.
pub fn infoset_value(
    game: &GameTree,
    values: &[f64],
    reach: &ReachTable,
    class: ClassId,
    player: Player,
) -> Result<f64> {
    let beliefs = infoset_beliefs(game, reach, class, player).normalized()?;
    Ok(beliefs
        .states
        .iter()
        .zip(&beliefs.weights)
        .map(|(&s, &w)| w * values[s.0 as usize])
        .sum())
}

/// Samples an index from a probability row.
pub fn sample_index(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let draw: f64 = rng.random_range(0.0..1.0);
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if draw < cum {
            return i;
        }
    }
    last_positive
}
