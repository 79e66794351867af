//! Depth-limited solving with opponent continuation choices.
//!
//! A depth cut truncates the game before its real end. Valuing the cut
//! states under a single fixed profile would let a best responder exploit
//! the implied assumption about play below the cut, so here each cut state
//! instead hands the opponent ("villain") one final decision: a choice
//! among N continuation strategies for the remainder of the game. The cut
//! state's payoff under choice n is the exact expected value of playing
//! (hero blueprint, villain continuation n) below it. All cut states the
//! villain cannot tell apart share one appended choice infoset, so the
//! villain commits to the same continuation everywhere inside an infoset,
//! while different infosets choose independently.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::best_response::best_response;
use crate::cfr::{solve, SolverConfig};
use crate::error::{Error, Result};
use crate::game::{
    ActionClass, ActionDef, GameTree, NodeKind, NodeSpec, Player, StateId, SubgameSpec,
    TreeBuilder,
};
use crate::strategy::{reach_table, state_values, BehavioralStrategy, StrategyProfile};

/// Default number of playouts per (cut state, continuation) estimate.
pub const DEFAULT_ROLLOUT_SAMPLES: usize = 3;

/// Key prefix of the appended villain choice infosets.
pub const CONT_PREFIX: &str = "cont|";
/// Key of the synthetic chance root used for multi-root subgames.
pub const ROOT_KEY: &str = "$root";
/// Key prefix of gadget decision infosets (used by the resolver).
pub const GADGET_PREFIX: &str = "gadget|";

/// True for infoset keys invented by subgame construction rather than
/// copied from the base game.
pub fn is_synthetic_key(key: &str) -> bool {
    key.starts_with(ROOT_KEY) || key.starts_with(CONT_PREFIX) || key.starts_with(GADGET_PREFIX)
}

/// Where a continuation strategy came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Blueprint,
    Bias { class: ActionClass, multiplier: f64 },
    SelfGenerated(u32),
    Imported(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Blueprint => write!(f, "blueprint"),
            Provenance::Bias { class, multiplier } => {
                let name = match class {
                    ActionClass::Fold => "fold",
                    ActionClass::CheckCall => "check-call",
                    ActionClass::BetRaise => "bet-raise",
                    ActionClass::Neutral => "neutral",
                };
                write!(f, "bias({name},{multiplier})")
            }
            Provenance::SelfGenerated(round) => write!(f, "self-generated({round})"),
            Provenance::Imported(label) => write!(f, "imported({label})"),
        }
    }
}

/// An ordered set of villain strategies for play below the depth limit.
/// Index 0 is always the blueprint.
#[derive(Debug, Clone)]
pub struct ContinuationSet {
    pub villain: Player,
    pub strategies: Vec<BehavioralStrategy>,
    pub provenance: Vec<Provenance>,
}

impl ContinuationSet {
    pub fn blueprint_only(blueprint: BehavioralStrategy) -> ContinuationSet {
        ContinuationSet {
            villain: blueprint.player,
            strategies: vec![blueprint],
            provenance: vec![Provenance::Blueprint],
        }
    }

    pub fn push(&mut self, strategy: BehavioralStrategy, provenance: Provenance) -> Result<()> {
        if strategy.player != self.villain {
            return Err(Error::ScopeMismatch(format!(
                "continuation for {} added to a {} set",
                strategy.player, self.villain
            )));
        }
        self.strategies.push(strategy);
        self.provenance.push(provenance);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        false // index 0 always exists
    }

    pub fn get(&self, n: usize) -> &BehavioralStrategy {
        &self.strategies[n]
    }

    pub fn labels(&self) -> Vec<String> {
        self.provenance.iter().map(|p| p.to_string()).collect()
    }

    /// Serializes the set. With `quantize`, probabilities are stored as
    /// single bytes (0..=255 per action, renormalized on load), trading at
    /// most 1/255 of per-action precision for four-fold smaller files.
    pub fn to_text(&self, quantize: bool) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "format: continuation-set v1{}",
            if quantize { "q" } else { "" }
        );
        let _ = writeln!(out, "villain: {}", self.villain);
        let _ = writeln!(out, "count: {}", self.len());
        for (i, (strat, prov)) in self.strategies.iter().zip(&self.provenance).enumerate() {
            let _ = writeln!(out, "[{i}] {prov}");
            let mut keys: Vec<&String> = strat.table.keys().collect();
            keys.sort();
            for key in keys {
                let row = &strat.table[key];
                let cells: Vec<String> = if quantize {
                    quantize_row(row).iter().map(|b| b.to_string()).collect()
                } else {
                    row.iter().map(|p| format!("{p}")).collect()
                };
                let _ = writeln!(out, "{key}\t{}", cells.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ContinuationSet> {
        let mut lines = text.lines();
        let quantized = match lines.next() {
            Some("format: continuation-set v1") => false,
            Some("format: continuation-set v1q") => true,
            other => {
                return Err(Error::Parse(format!(
                    "unrecognized continuation-set header {:?}",
                    other.unwrap_or("")
                )))
            }
        };
        let mut villain = None;
        let mut strategies: Vec<BehavioralStrategy> = Vec::new();
        let mut provenance = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(p) = line.strip_prefix("villain: ") {
                villain = Some(match p {
                    "p1" => Player::P1,
                    "p2" => Player::P2,
                    other => return Err(Error::Parse(format!("bad villain: {other}"))),
                });
            } else if line.starts_with("count: ") {
                // informational; verified at the end
            } else if line.starts_with('[') {
                let label = line
                    .split_once("] ")
                    .map(|(_, l)| l)
                    .ok_or_else(|| Error::Parse(format!("malformed section: {line}")))?;
                let v = villain.ok_or_else(|| Error::Parse("strategy before villain line".into()))?;
                strategies.push(BehavioralStrategy::new(v));
                provenance.push(parse_provenance(label));
            } else {
                let strat = strategies
                    .last_mut()
                    .ok_or_else(|| Error::Parse("row before any [n] section".into()))?;
                let (key, rest) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::Parse(format!("malformed row: {line}")))?;
                let row: Vec<f64> = if quantized {
                    let bytes: Vec<u16> = rest
                        .split(' ')
                        .map(|t| t.parse::<u16>().map_err(|e| Error::Parse(format!("bad byte {t}: {e}"))))
                        .collect::<Result<_>>()?;
                    dequantize_row(&bytes)
                } else {
                    rest.split(' ')
                        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad cell {t}: {e}"))))
                        .collect::<Result<_>>()?
                };
                strat.table.insert(key.to_string(), row);
            }
        }
        if strategies.is_empty() {
            return Err(Error::Parse("continuation set with no strategies".into()));
        }
        Ok(ContinuationSet {
            villain: villain.unwrap(),
            strategies,
            provenance,
        })
    }

    pub fn save(&self, path: &Path, quantize: bool) -> Result<()> {
        std::fs::write(path, self.to_text(quantize))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ContinuationSet> {
        ContinuationSet::from_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_provenance(label: &str) -> Provenance {
    if label == "blueprint" {
        Provenance::Blueprint
    } else if let Some(rest) = label.strip_prefix("self-generated(") {
        rest.trim_end_matches(')')
            .parse()
            .map(Provenance::SelfGenerated)
            .unwrap_or_else(|_| Provenance::Imported(label.to_string()))
    } else if let Some(rest) = label.strip_prefix("bias(") {
        let inner = rest.trim_end_matches(')');
        if let Some((name, mult)) = inner.split_once(',') {
            let class = match name {
                "fold" => Some(ActionClass::Fold),
                "check-call" => Some(ActionClass::CheckCall),
                "bet-raise" => Some(ActionClass::BetRaise),
                "neutral" => Some(ActionClass::Neutral),
                _ => None,
            };
            if let (Some(class), Ok(multiplier)) = (class, mult.parse()) {
                return Provenance::Bias { class, multiplier };
            }
        }
        Provenance::Imported(label.to_string())
    } else if let Some(rest) = label.strip_prefix("imported(") {
        Provenance::Imported(rest.trim_end_matches(')').to_string())
    } else {
        Provenance::Imported(label.to_string())
    }
}

fn quantize_row(row: &[f64]) -> Vec<u16> {
    row.iter().map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u16).collect()
}

fn dequantize_row(bytes: &[u16]) -> Vec<f64> {
    let total: f64 = bytes.iter().map(|&b| b as f64).sum();
    if total > 0.0 {
        bytes.iter().map(|&b| b as f64 / total).collect()
    } else {
        vec![1.0 / bytes.len() as f64; bytes.len()]
    }
}

/// Payoff units of a value table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Chips,
    PotFraction,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Chips => "chips",
            Units::PotFraction => "pot-fraction",
        })
    }
}

/// Exact values of cut states: entry n of a state's vector is the value to
/// P1 of playing (hero blueprint, villain continuation n) from that state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub hero: Player,
    pub units: Units,
    pub labels: Vec<String>,
    game_hash: String,
    entries: HashMap<StateId, Vec<f64>>,
}

impl ValueTable {
    /// An empty table bound to a game; fill it with `set`.
    pub fn new(game: &GameTree, hero: Player, units: Units, labels: Vec<String>) -> ValueTable {
        ValueTable {
            hero,
            units,
            labels,
            game_hash: game.tree_hash(),
            entries: HashMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, s: StateId) -> Option<&[f64]> {
        self.entries.get(&s).map(Vec::as_slice)
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The state's value vector in chips, whatever the storage units.
    pub fn chips(&self, game: &GameTree, s: StateId) -> Result<Vec<f64>> {
        let row = self
            .entries
            .get(&s)
            .ok_or_else(|| Error::UndefinedLeafValue(game.history(s)))?;
        Ok(match self.units {
            Units::Chips => row.clone(),
            Units::PotFraction => {
                let pot = game.pot(s);
                row.iter().map(|v| v * pot).collect()
            }
        })
    }

    pub fn set(&mut self, s: StateId, row: Vec<f64>) {
        self.entries.insert(s, row);
    }

    /// Converts storage units in place.
    pub fn convert_units(&mut self, game: &GameTree, units: Units) -> Result<()> {
        if self.units == units {
            return Ok(());
        }
        for (&s, row) in &mut self.entries {
            let pot = game.pot(s);
            if pot <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "cannot express values of zero-pot state {} as pot fractions",
                    game.history(s)
                )));
            }
            for v in row.iter_mut() {
                match units {
                    Units::Chips => *v *= pot,
                    Units::PotFraction => *v /= pot,
                }
            }
        }
        self.units = units;
        Ok(())
    }

    pub fn to_text(&self, game: &GameTree) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("format: value-table v1\n");
        let _ = writeln!(out, "game: {}", self.game_hash);
        let _ = writeln!(out, "hero: {}", self.hero);
        let _ = writeln!(out, "units: {}", self.units);
        let _ = writeln!(out, "count: {}", self.n());
        for (i, label) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "label {i}: {label}");
        }
        let mut rows: Vec<(String, &Vec<f64>)> = self
            .entries
            .iter()
            .map(|(&s, row)| (game.history(s), row))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        for (history, row) in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{history}\t{}", cells.join(" "));
        }
        out
    }

    pub fn from_text(game: &GameTree, text: &str) -> Result<ValueTable> {
        let mut lines = text.lines();
        match lines.next() {
            Some("format: value-table v1") => {}
            other => {
                return Err(Error::Parse(format!(
                    "unrecognized value-table header {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut table = ValueTable {
            hero: Player::P1,
            units: Units::Chips,
            labels: Vec::new(),
            game_hash: game.tree_hash(),
            entries: HashMap::new(),
        };
        for line in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(hash) = line.strip_prefix("game: ") {
                if hash != table.game_hash {
                    return Err(Error::Parse(format!(
                        "value table belongs to game {hash}, not {}",
                        table.game_hash
                    )));
                }
            } else if let Some(h) = line.strip_prefix("hero: ") {
                table.hero = match h {
                    "p1" => Player::P1,
                    "p2" => Player::P2,
                    other => return Err(Error::Parse(format!("bad hero: {other}"))),
                };
            } else if let Some(u) = line.strip_prefix("units: ") {
                table.units = match u {
                    "chips" => Units::Chips,
                    "pot-fraction" => Units::PotFraction,
                    other => return Err(Error::Parse(format!("bad units: {other}"))),
                };
            } else if line.starts_with("count: ") {
                // informational
            } else if let Some(rest) = line.strip_prefix("label ") {
                let (_, label) = rest
                    .split_once(": ")
                    .ok_or_else(|| Error::Parse(format!("malformed label line: {line}")))?;
                table.labels.push(label.to_string());
            } else {
                let (history, rest) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::Parse(format!("malformed value row: {line}")))?;
                let s = game
                    .state_by_history(history)
                    .ok_or_else(|| Error::Parse(format!("unknown state {history}")))?;
                let row: Vec<f64> = rest
                    .split(' ')
                    .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad cell {t}: {e}"))))
                    .collect::<Result<_>>()?;
                if row.len() != table.labels.len() {
                    return Err(Error::Parse(format!("row width mismatch at {history}")));
                }
                table.entries.insert(s, row);
            }
        }
        Ok(table)
    }

    pub fn save(&self, game: &GameTree, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text(game))?;
        Ok(())
    }

    pub fn load(game: &GameTree, path: &Path) -> Result<ValueTable> {
        ValueTable::from_text(game, &std::fs::read_to_string(path)?)
    }
}

/// Exact value vectors for every given cut state: one full-tree backward
/// pass per continuation under (hero blueprint, that continuation).
pub fn compute_value_table(
    game: &GameTree,
    hero: Player,
    hero_blueprint: &BehavioralStrategy,
    continuation: &ContinuationSet,
    leaves: &[StateId],
    units: Units,
) -> Result<ValueTable> {
    if continuation.villain == hero {
        return Err(Error::ScopeMismatch(format!(
            "hero {hero} cannot also own the continuation set"
        )));
    }
    let mut table = ValueTable {
        hero,
        units: Units::Chips,
        labels: continuation.labels(),
        game_hash: game.tree_hash(),
        entries: leaves.iter().map(|&s| (s, vec![0.0; continuation.len()])).collect(),
    };
    for n in 0..continuation.len() {
        let profile = match hero {
            Player::P1 => {
                StrategyProfile::new(hero_blueprint.clone(), continuation.get(n).clone())
            }
            Player::P2 => {
                StrategyProfile::new(continuation.get(n).clone(), hero_blueprint.clone())
            }
        };
        let values = state_values(game, &profile, Player::P1)?;
        for &leaf in leaves {
            table.entries.get_mut(&leaf).unwrap()[n] = values[leaf.0 as usize];
        }
    }
    table.convert_units(game, units)?;
    Ok(table)
}

/// Monte-Carlo estimate of one cut state's value vector (to P1, in chips):
/// `samples` playouts per continuation, all randomness from the seed, so
/// identical calls return identical vectors.
pub fn rollout_estimate(
    game: &GameTree,
    hero: Player,
    hero_blueprint: &BehavioralStrategy,
    continuation: &ContinuationSet,
    leaf: StateId,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if samples < 1 {
        return Err(Error::InvalidParameter("rollout samples must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(continuation.len());
    for n in 0..continuation.len() {
        let stream = seed
            ^ (leaf.0 as u64).wrapping_mul(0xA076_1D64_78BD_642F)
            ^ ((n as u64 + 1).wrapping_mul(0xE703_7ED1_A0B4_28DB));
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let villain_strategy = continuation.get(n);
        let mut total = 0.0;
        for _ in 0..samples {
            let mut s = leaf;
            loop {
                match game.kind(s) {
                    NodeKind::Terminal => {
                        total += game.utility(s, Player::P1)?;
                        break;
                    }
                    NodeKind::Chance => {
                        let probs = game.chance_distribution(s)?;
                        s = game.child(s, sample_from(&mut rng, probs));
                    }
                    NodeKind::Decision(p) => {
                        let row = if p == hero {
                            hero_blueprint.probs_at(game, s)?
                        } else {
                            villain_strategy.probs_at(game, s)?
                        };
                        s = game.child(s, sample_from(&mut rng, row));
                    }
                }
            }
        }
        out.push(total / samples as f64);
    }
    Ok(out)
}

fn sample_from(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
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

/// Numeric description of a cut state for the pluggable value predictor.
pub fn leaf_features(game: &GameTree, s: StateId) -> Vec<f64> {
    vec![
        game.pot(s),
        game.round(s) as f64,
        game.depth(s) as f64,
        game.player_depth(s) as f64,
    ]
}

/// Reference value predictor: a table of (feature vector, value vector)
/// anchors queried by inverse-squared-distance interpolation. Exact at
/// anchor points. Stands in for a trained model behind the same interface.
#[derive(Debug, Clone, Default)]
pub struct PredictorTable {
    pub anchors: Vec<(Vec<f64>, Vec<f64>)>,
}

impl PredictorTable {
    pub fn fit(anchors: Vec<(Vec<f64>, Vec<f64>)>) -> PredictorTable {
        PredictorTable { anchors }
    }

    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        if self.anchors.is_empty() {
            return Err(Error::InvalidParameter("predictor has no anchors".into()));
        }
        let mut num = vec![0.0; self.anchors[0].1.len()];
        let mut den = 0.0;
        for (anchor, value) in &self.anchors {
            let d2: f64 = anchor
                .iter()
                .zip(features)
                .map(|(a, f)| (a - f) * (a - f))
                .sum();
            if d2 == 0.0 {
                return Ok(value.clone());
            }
            let w = 1.0 / d2;
            den += w;
            for (acc, v) in num.iter_mut().zip(value) {
                *acc += w * v;
            }
        }
        Ok(num.into_iter().map(|x| x / den).collect())
    }
}

/// Everything needed to value a cut state.
pub struct LeafContext<'a> {
    pub game: &'a GameTree,
    pub hero: Player,
    pub hero_blueprint: &'a BehavioralStrategy,
    pub continuation: &'a ContinuationSet,
}

/// Source of cut-state value vectors.
pub enum ValueProvider {
    Exact(ValueTable),
    Rollout { samples: usize, seed: u64 },
    Predictor { table: PredictorTable, units: Units },
}

impl ValueProvider {
    /// Value vector (to P1, chips) for one cut state.
    pub fn values(&self, ctx: &LeafContext, leaf: StateId) -> Result<Vec<f64>> {
        match self {
            ValueProvider::Exact(table) => {
                if table.hero != ctx.hero {
                    return Err(Error::ScopeMismatch(format!(
                        "value table was built for hero {}, context has {}",
                        table.hero, ctx.hero
                    )));
                }
                if table.n() != ctx.continuation.len() {
                    return Err(Error::ScopeMismatch(format!(
                        "value table has {} entries per state, continuation set has {}",
                        table.n(),
                        ctx.continuation.len()
                    )));
                }
                table.chips(ctx.game, leaf)
            }
            ValueProvider::Rollout { samples, seed } => rollout_estimate(
                ctx.game,
                ctx.hero,
                ctx.hero_blueprint,
                ctx.continuation,
                leaf,
                *samples,
                *seed,
            ),
            ValueProvider::Predictor { table, units } => {
                let mut row = table.predict(&leaf_features(ctx.game, leaf))?;
                if row.len() != ctx.continuation.len() {
                    return Err(Error::ScopeMismatch(format!(
                        "predictor emits {} values, continuation set has {}",
                        row.len(),
                        ctx.continuation.len()
                    )));
                }
                if *units == Units::PotFraction {
                    let pot = ctx.game.pot(leaf);
                    for v in &mut row {
                        *v *= pot;
                    }
                }
                Ok(row)
            }
        }
    }
}

/// Summary of a weakening pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WeakenReport {
    /// (infoset, continuation) pairs whose values were lowered.
    pub adjustments: usize,
    /// Largest villain-value excess removed, in chips.
    pub max_delta: f64,
}

/// Caps each continuation's villain value at the blueprint continuation's
/// value, per villain cut infoset: wherever choice n would earn the
/// villain more than choice 0 under beliefs induced by chance and the hero
/// blueprint, the excess is subtracted from every state of that infoset.
/// Compensates for choice-0 play being only an approximate equilibrium,
/// which would otherwise make the appended choices too attractive and the
/// hero's subgame solution too pessimistic.
pub fn weaken(
    game: &GameTree,
    table: &mut ValueTable,
    hero_blueprint: &BehavioralStrategy,
) -> Result<WeakenReport> {
    let hero = table.hero;
    let villain = hero.other();
    let profile = match hero {
        Player::P1 => StrategyProfile::new(
            hero_blueprint.clone(),
            BehavioralStrategy::uniform(game, villain),
        ),
        Player::P2 => StrategyProfile::new(
            BehavioralStrategy::uniform(game, villain),
            hero_blueprint.clone(),
        ),
    };
    let reach = reach_table(game, &profile)?;

    let mut groups: HashMap<&str, Vec<StateId>> = HashMap::new();
    for &s in table.entries.keys() {
        groups.entry(game.infoset_key(s, villain)).or_default().push(s);
    }

    let n = table.n();
    let vsign = villain.sign();
    let mut report = WeakenReport::default();
    for (_, mut states) in groups {
        // Fixed accumulation order keeps the correction bit-for-bit
        // reproducible; map order would vary run to run.
        states.sort_unstable();
        let weights: Vec<f64> =
            states.iter().map(|&s| reach.counterfactual(s, villain)).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            continue; // unreachable under the blueprint: nothing to anchor on
        }
        // Belief-weighted villain value per continuation, in chips.
        let mut infoset_value = vec![0.0; n];
        for (&s, &w) in states.iter().zip(&weights) {
            let chips = table.chips(game, s)?;
            for (acc, v1) in infoset_value.iter_mut().zip(&chips) {
                *acc += w / total * vsign * v1;
            }
        }
        for idx in 1..n {
            let delta = infoset_value[idx] - infoset_value[0];
            if delta > 1e-12 {
                report.adjustments += 1;
                report.max_delta = report.max_delta.max(delta);
                for &s in &states {
                    let pot = game.pot(s);
                    let row = table.entries.get_mut(&s).unwrap();
                    let delta_stored = match table.units {
                        Units::Chips => delta,
                        Units::PotFraction => delta / pot,
                    };
                    // Lowering the villain's value raises P1's by vsign.
                    row[idx] -= vsign * delta_stored;
                }
            }
        }
    }
    Ok(report)
}

/// The default bias menu: amplify each poker action family tenfold.
pub fn default_bias_specs() -> Vec<(ActionClass, f64)> {
    vec![
        (ActionClass::Fold, 10.0),
        (ActionClass::CheckCall, 10.0),
        (ActionClass::BetRaise, 10.0),
    ]
}

/// Builds [blueprint, biased variants...] from a villain blueprint.
pub fn generate_bias_set(
    game: &GameTree,
    blueprint_villain: &BehavioralStrategy,
    specs: &[(ActionClass, f64)],
) -> Result<ContinuationSet> {
    let mut set = ContinuationSet::blueprint_only(blueprint_villain.clone());
    for &(class, multiplier) in specs {
        if multiplier <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bias multiplier must be positive, got {multiplier}"
            )));
        }
        set.push(
            blueprint_villain.bias(game, class, multiplier),
            Provenance::Bias { class, multiplier },
        )?;
    }
    Ok(set)
}

/// Every deterministic villain strategy, for exhaustive continuation sets
/// on tiny games.
pub fn enumerate_pure_behavioral(game: &GameTree, player: Player) -> Vec<BehavioralStrategy> {
    let mut keys: Vec<(String, usize)> = game
        .acting_classes(player)
        .map(|c| (game.class(c).key.clone(), game.class(c).actions.len()))
        .collect();
    keys.sort();
    let mut out = vec![BehavioralStrategy::new(player)];
    for (key, n) in keys {
        let mut next = Vec::with_capacity(out.len() * n);
        for strat in out {
            for a in 0..n {
                let mut copy = strat.clone();
                let mut row = vec![0.0; n];
                row[a] = 1.0;
                copy.set(key.clone(), row);
                next.push(copy);
            }
        }
        out = next;
    }
    out
}

/// Joint reach probability of each root under a profile, for weighting a
/// synthetic subgame root.
pub fn joint_root_weights(
    game: &GameTree,
    profile: &StrategyProfile,
    roots: &[StateId],
) -> Result<Vec<f64>> {
    let reach = reach_table(game, profile)?;
    Ok(roots.iter().map(|&s| reach.joint(s)).collect())
}

/// A playable depth-limited game plus its mapping back to the base game.
pub struct AugmentedSubgame {
    pub tree: GameTree,
    pub hero: Player,
    pub spec: SubgameSpec,
    /// Base-game state behind each augmented state; None for synthetic
    /// states (the chance root, choice terminals).
    pub base_of: Vec<Option<StateId>>,
    /// Base-game cut states that received continuation choices.
    pub leaves: Vec<StateId>,
    /// Villain infoset keys at the cut, sorted.
    pub frontier_keys: Vec<String>,
}

impl fmt::Debug for AugmentedSubgame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AugmentedSubgame")
            .field("game", &self.tree.name)
            .field("states", &self.tree.num_states())
            .field("hero", &self.hero)
            .field("cut_states", &self.leaves.len())
            .field("frontier_infosets", &self.frontier_keys.len())
            .finish()
    }
}


/// Builds the augmented depth-limited game: the subgame trunk copied with
/// its observation keys intact, terminals kept as terminals, and each
/// non-terminal cut state replaced by a villain choice among the
/// continuation values (collapsed to a plain terminal when the set has one
/// entry). Multi-root subgames get a synthetic chance root weighted by
/// `root_weights`.
pub fn build_depth_limited(
    ctx: &LeafContext,
    spec: &SubgameSpec,
    provider: &ValueProvider,
    root_weights: Option<&[f64]>,
) -> Result<AugmentedSubgame> {
    let game = ctx.game;
    let villain = ctx.hero.other();
    if ctx.continuation.villain != villain {
        return Err(Error::ScopeMismatch(format!(
            "continuation set belongs to {}, expected {villain}",
            ctx.continuation.villain
        )));
    }
    spec.validate(game)?;

    let mut builder = TreeBuilder::new(&format!("{}@dl", game.name), game.big_blind);
    // Queue of (base state, builder parent, edge action, edge probability).
    let mut queue: Vec<(StateId, Option<(u32, ActionDef, f64)>)> = Vec::new();
    let single_root = spec.roots.len() == 1;
    if single_root {
        queue.push((spec.roots[0], None));
    } else {
        let weights = root_weights.ok_or_else(|| {
            Error::InvalidParameter(
                "a multi-root subgame needs explicit root weights".into(),
            )
        })?;
        let root_id = add_synthetic_root(&mut builder, game, &spec.roots, weights)?;
        let total: f64 = weights.iter().sum();
        for (i, (&r, &w)) in spec.roots.iter().zip(weights).enumerate() {
            queue.push((
                r,
                Some((
                    root_id,
                    ActionDef::public(&format!("e{i}"), ActionClass::Neutral),
                    w / total,
                )),
            ));
        }
    }
    let body = copy_subgame_body(ctx, spec, provider, &mut builder, queue)?;
    finish_augmented(builder, ctx.hero, spec.clone(), body)
}

/// Adds the weighted synthetic chance root over a multi-root subgame,
/// validating the weights. Returns the builder id of the root.
pub(crate) fn add_synthetic_root(
    builder: &mut TreeBuilder,
    game: &GameTree,
    roots: &[StateId],
    weights: &[f64],
) -> Result<u32> {
    if weights.len() != roots.len() {
        return Err(Error::InvalidParameter(format!(
            "{} root weights for {} roots",
            weights.len(),
            roots.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroTotalReach("subgame root distribution".into()));
    }
    Ok(builder.add_root(NodeSpec {
        kind: NodeKind::Chance,
        util_p1: 0.0,
        pot: game.pot(roots[0]),
        round: game.round(roots[0]),
        keys: [Some(format!("{ROOT_KEY}:p1")), Some(format!("{ROOT_KEY}:p2"))],
        public_key: ROOT_KEY.to_string(),
    }))
}

/// Mapping and frontier bookkeeping produced while copying a subgame body.
pub(crate) struct CopiedBody {
    pub base_to_builder: Vec<(StateId, u32)>,
    pub leaves: Vec<StateId>,
    pub frontier_keys: Vec<String>,
}

/// Copies the subgame between `queue`'s entry points and the depth cut into
/// the builder: terminals verbatim, cut states as continuation choices (or
/// collapsed terminals when the set has one entry), everything else cloned
/// with its observation keys.
pub(crate) fn copy_subgame_body(
    ctx: &LeafContext,
    spec: &SubgameSpec,
    provider: &ValueProvider,
    builder: &mut TreeBuilder,
    mut queue: Vec<(StateId, Option<(u32, ActionDef, f64)>)>,
) -> Result<CopiedBody> {
    let game = ctx.game;
    let villain = ctx.hero.other();
    let n_cont = ctx.continuation.len();
    let mut base_to_builder: Vec<(StateId, u32)> = Vec::new();
    let mut leaves = Vec::new();
    let mut frontier_keys: Vec<String> = Vec::new();
    let mut qi = 0;
    while qi < queue.len() {
        let (s, attach) = queue[qi].clone();
        qi += 1;

        let public_key = game.public(game.public_of(s)).key.clone();
        // Classify the state: terminal copy, continuation choice at a cut
        // state, collapsed cut terminal (single continuation), or a plain
        // copy whose children get queued.
        let mut choice_values = None;
        let node_spec = if game.is_terminal(s) {
            NodeSpec::terminal(game.utility(s, Player::P1)?, game.pot(s), game.round(s), public_key)
        } else if spec.is_leaf(game, s) {
            let values = provider.values(ctx, s)?;
            if values.len() != n_cont {
                return Err(Error::ScopeMismatch(format!(
                    "{} values at cut state {}, continuation set has {n_cont}",
                    values.len(),
                    game.history(s)
                )));
            }
            leaves.push(s);
            if n_cont == 1 {
                NodeSpec::terminal(values[0], game.pot(s), game.round(s), public_key)
            } else {
                let key = game.infoset_key(s, villain);
                if !frontier_keys.iter().any(|k| k == key) {
                    frontier_keys.push(key.to_string());
                }
                let mut keys = [None, None];
                keys[ctx.hero.index()] = Some(game.infoset_key(s, ctx.hero).to_string());
                keys[villain.index()] = Some(format!("{CONT_PREFIX}{key}"));
                choice_values = Some(values);
                NodeSpec {
                    kind: NodeKind::Decision(villain),
                    util_p1: 0.0,
                    pot: game.pot(s),
                    round: game.round(s),
                    keys,
                    public_key,
                }
            }
        } else {
            NodeSpec {
                kind: game.kind(s),
                util_p1: 0.0,
                pot: game.pot(s),
                round: game.round(s),
                keys: [
                    Some(game.infoset_key(s, Player::P1).to_string()),
                    Some(game.infoset_key(s, Player::P2).to_string()),
                ],
                public_key,
            }
        };

        let copied = matches!(node_spec.kind, NodeKind::Decision(_) | NodeKind::Chance)
            && choice_values.is_none();
        let builder_id = match attach {
            None => builder.add_root(node_spec),
            Some((parent, action, prob)) => builder.add_child(parent, action, prob, node_spec),
        };
        base_to_builder.push((s, builder_id));

        if let Some(values) = choice_values {
            for (i, &v) in values.iter().enumerate() {
                builder.add_child(
                    builder_id,
                    ActionDef::public(&format!("n{i}"), ActionClass::Neutral),
                    1.0,
                    NodeSpec::terminal(
                        v,
                        game.pot(s),
                        game.round(s),
                        format!("{}|n{i}", game.public(game.public_of(s)).key),
                    ),
                );
            }
        } else if copied {
            let chance = matches!(game.kind(s), NodeKind::Chance)
                .then(|| game.chance_distribution(s))
                .transpose()?;
            for (idx, child) in game.children(s).enumerate() {
                let action = game.action(game.legal_actions(s)?[idx]).clone();
                let prob = chance.map_or(1.0, |d| d[idx]);
                queue.push((child, Some((builder_id, action, prob))));
            }
        }
    }

    frontier_keys.sort();
    Ok(CopiedBody { base_to_builder, leaves, frontier_keys })
}

/// Seals the builder and packages the result with its base-game mapping.
pub(crate) fn finish_augmented(
    builder: TreeBuilder,
    hero: Player,
    spec: SubgameSpec,
    body: CopiedBody,
) -> Result<AugmentedSubgame> {
    let (tree, id_map) = builder.finish()?;
    let mut base_of = vec![None; tree.num_states()];
    for (base, builder_id) in body.base_to_builder {
        base_of[id_map[builder_id as usize].0 as usize] = Some(base);
    }
    Ok(AugmentedSubgame {
        tree,
        hero,
        spec,
        base_of,
        leaves: body.leaves,
        frontier_keys: body.frontier_keys,
    })
}

impl AugmentedSubgame {
    /// Overlays the hero's subgame solution onto the blueprint: inside the
    /// subgame the solved rows replace the blueprint's, outside it the
    /// blueprint stands.
    pub fn stitch_hero(
        &self,
        blueprint: &BehavioralStrategy,
        solved_hero: &BehavioralStrategy,
    ) -> Result<BehavioralStrategy> {
        if blueprint.player != self.hero || solved_hero.player != self.hero {
            return Err(Error::ScopeMismatch("stitch needs two hero strategies".into()));
        }
        let mut out = blueprint.clone();
        for (key, row) in &solved_hero.table {
            debug_assert!(!is_synthetic_key(key), "hero never owns synthetic infosets");
            out.table.insert(key.clone(), row.clone());
        }
        Ok(out)
    }

    /// The villain's solved choice distribution per cut infoset key.
    pub fn continuation_choices(
        &self,
        solved_villain: &BehavioralStrategy,
    ) -> Result<HashMap<String, Vec<f64>>> {
        let mut out = HashMap::new();
        for key in &self.frontier_keys {
            let row = solved_villain
                .lookup(&format!("{CONT_PREFIX}{key}"))
                .ok_or_else(|| Error::MissingInfoset(format!("{CONT_PREFIX}{key}")))?;
            out.insert(key.clone(), row.to_vec());
        }
        Ok(out)
    }

    /// Expresses the villain's subgame solution as one full-game strategy:
    /// solved rows in the trunk, and below each cut infoset the
    /// realization-weighted mixture of the continuation strategies under
    /// the solved choice distribution. Outside the subgame the blueprint
    /// continuation stands.
    pub fn materialize_villain(
        &self,
        game: &GameTree,
        continuation: &ContinuationSet,
        solved_villain: &BehavioralStrategy,
    ) -> Result<BehavioralStrategy> {
        let villain = self.hero.other();
        if solved_villain.player != villain || continuation.villain != villain {
            return Err(Error::ScopeMismatch("villain-side inputs expected".into()));
        }
        let choices = self.continuation_choices(solved_villain)?;
        let mut out = continuation.get(0).clone();
        for (key, row) in &solved_villain.table {
            if !is_synthetic_key(key) {
                out.table.insert(key.clone(), row.clone());
            }
        }

        let leaf_set: std::collections::HashSet<StateId> = self.leaves.iter().copied().collect();
        for c in game.acting_classes(villain) {
            let class = game.class(c);
            let member = class.states[0];
            // Walk up from one member looking for a cut ancestor. The cut
            // state's own decision (when the villain acts there) is part of
            // the continuation, so it lands on the path too; a member that
            // is itself a cut state yields an empty path.
            let mut path: Vec<(String, usize, usize)> = Vec::new();
            let mut cut_key = None;
            let mut cur = member;
            loop {
                if leaf_set.contains(&cur) {
                    cut_key = Some(game.infoset_key(cur, villain).to_string());
                    break;
                }
                let Some((parent, action_id)) = game.parent(cur) else { break };
                if game.kind(parent) == NodeKind::Decision(villain) {
                    let menu = game.legal_actions(parent)?;
                    let pos = menu
                        .iter()
                        .position(|&a| a == action_id)
                        .expect("edge action is on the parent's menu");
                    path.push((game.infoset_key(parent, villain).to_string(), pos, menu.len()));
                }
                cur = parent;
            }
            let Some(cut_key) = cut_key else { continue };
            let Some(probs) = choices.get(&cut_key) else { continue };

            let n = class.actions.len();
            let uniform = vec![1.0 / n as f64; n];
            let mut mixed = vec![0.0; n];
            let mut total = 0.0;
            for (idx, strat) in continuation.strategies.iter().enumerate() {
                let mut w = probs[idx];
                for (key, action, width) in &path {
                    // A strategy silent at some infoset is read as uniform,
                    // matching how beliefs treat unknown infosets.
                    w *= match strat.lookup(key) {
                        Some(row) => row[*action],
                        None => 1.0 / *width as f64,
                    };
                }
                if w > 0.0 {
                    let row = strat.lookup(&class.key).unwrap_or(&uniform);
                    total += w;
                    for (m, &p) in mixed.iter_mut().zip(row) {
                        *m += w * p;
                    }
                }
            }
            if total > 0.0 {
                for m in &mut mixed {
                    *m /= total;
                }
                out.table.insert(class.key.clone(), mixed);
            } else {
                let row = continuation.get(0).lookup(&class.key).unwrap_or(&uniform);
                out.table.insert(class.key.clone(), row.to_vec());
            }
        }
        Ok(out)
    }
}

/// Grows a continuation set by repeated self-play: solve the depth-limited
/// subgame against the current set, stitch the hero's solution into the
/// blueprint, compute the villain's exact best response to the stitched
/// strategy, and append it. Stops when the set reaches `k` strategies.
#[allow(clippy::too_many_arguments)]
pub fn generate_self_play_set(
    game: &GameTree,
    blueprint: &StrategyProfile,
    spec: &SubgameSpec,
    hero: Player,
    k: usize,
    solver: &SolverConfig,
    units: Units,
    apply_weakening: bool,
) -> Result<ContinuationSet> {
    if k < 1 {
        return Err(Error::InvalidParameter("continuation set size must be at least 1".into()));
    }
    let villain = hero.other();
    let mut set = ContinuationSet::blueprint_only(blueprint.get(villain).clone());
    let (_, leaves) = spec.expand_members(game);
    let root_weights = if spec.roots.len() > 1 {
        Some(joint_root_weights(game, blueprint, &spec.roots)?)
    } else {
        None
    };
    for round in 1..k {
        let mut table = compute_value_table(
            game,
            hero,
            blueprint.get(hero),
            &set,
            &leaves,
            units,
        )?;
        if apply_weakening {
            weaken(game, &mut table, blueprint.get(hero))?;
        }
        let ctx = LeafContext {
            game,
            hero,
            hero_blueprint: blueprint.get(hero),
            continuation: &set,
        };
        let aug = build_depth_limited(&ctx, spec, &ValueProvider::Exact(table), root_weights.as_deref())?;
        let solved = solve(&aug.tree, solver)?;
        let combined = aug.stitch_hero(blueprint.get(hero), solved.profile.get(hero))?;
        let reply = best_response(game, &combined, villain)?;
        set.push(
            reply.strategy.to_behavioral(game),
            Provenance::SelfGenerated(round as u32),
        )?;
    }
    Ok(set)
}
