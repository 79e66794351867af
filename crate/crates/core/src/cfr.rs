//! Counterfactual-regret solvers: vanilla simultaneous updates, a modified
//! regret-matching+ variant with early regret discounting, and external
//! sampling over chance and opponent actions.
//!
//! All variants share one store of cumulative regrets and weighted average
//! accumulators per infoset, accumulate the average only after a
//! configurable skip window, and weight later iterations linearly.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ClassId, GameTree, NodeKind, Player, StateId};
use crate::strategy::{BehavioralStrategy, StrategyProfile};

/// Which solver runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    VanillaCfr,
    CfrPlusModified,
    MccfrExternal,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::VanillaCfr => "vanilla_cfr",
            Variant::CfrPlusModified => "cfr_plus_modified",
            Variant::MccfrExternal => "mccfr_external",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "vanilla_cfr" | "vanilla" => Ok(Variant::VanillaCfr),
            "cfr_plus_modified" | "cfr_plus" | "cfr+" => Ok(Variant::CfrPlusModified),
            "mccfr_external" | "mccfr" | "external" => Ok(Variant::MccfrExternal),
            other => Err(Error::Parse(format!("unknown solver variant: {other}"))),
        }
    }
}

/// Solver run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub variant: Variant,
    pub iterations: u32,
    /// Fraction of iterations excluded from the average strategy.
    pub average_skip_fraction: f64,
    /// Regrets shrink by sqrt(T)/sqrt(T+1) after each of the first this
    /// many iterations (regret-matching+ variant only).
    pub discount_iterations: u32,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            variant: Variant::CfrPlusModified,
            iterations: 1000,
            average_skip_fraction: 0.5,
            discount_iterations: 30,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.average_skip_fraction) {
            return Err(Error::InvalidParameter(
                "average_skip_fraction must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// First iteration whose strategy counts toward the average.
    pub fn skip_window(&self) -> u32 {
        (self.average_skip_fraction * self.iterations as f64).floor() as u32
    }
}

/// Distribution proportional to positive regret; uniform when none is
/// positive.
pub fn regret_matching(regrets: &[f64]) -> Vec<f64> {
    let total: f64 = regrets.iter().map(|&r| r.max(0.0)).sum();
    if total > 0.0 {
        regrets.iter().map(|&r| r.max(0.0) / total).collect()
    } else {
        vec![1.0 / regrets.len() as f64; regrets.len()]
    }
}

/// Cumulative regrets and weighted average-strategy accumulators, one row
/// per acting infoset, plus the iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretStore {
    regrets: Vec<Vec<f64>>,
    avg: Vec<Vec<f64>>,
    pub iteration: u32,
    game_hash: String,
}

impl RegretStore {
    pub fn new(game: &GameTree) -> RegretStore {
        let mut regrets = vec![Vec::new(); game.num_classes()];
        for (c, class) in game.classes() {
            if class.is_acting() {
                regrets[c.0 as usize] = vec![0.0; class.actions.len()];
            }
        }
        RegretStore {
            avg: regrets.clone(),
            regrets,
            iteration: 0,
            game_hash: game.tree_hash(),
        }
    }

    pub fn regrets(&self, c: ClassId) -> &[f64] {
        &self.regrets[c.0 as usize]
    }

    pub fn average_accumulator(&self, c: ClassId) -> &[f64] {
        &self.avg[c.0 as usize]
    }

    /// Current regret-matched policy at one infoset.
    pub fn policy(&self, c: ClassId) -> Vec<f64> {
        regret_matching(&self.regrets[c.0 as usize])
    }

    /// Smallest cumulative regret across a player's infosets.
    pub fn min_regret(&self, game: &GameTree, player: Player) -> f64 {
        game.acting_classes(player)
            .flat_map(|c| self.regrets[c.0 as usize].iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Normalized average strategy for one player; infosets never visited
    /// after the skip window fall back to uniform.
    pub fn average_strategy(&self, game: &GameTree, player: Player) -> BehavioralStrategy {
        let mut out = BehavioralStrategy::new(player);
        for c in game.acting_classes(player) {
            let row = &self.avg[c.0 as usize];
            let total: f64 = row.iter().sum();
            let probs = if total > 0.0 {
                row.iter().map(|&x| x / total).collect()
            } else {
                vec![1.0 / row.len() as f64; row.len()]
            };
            out.table.insert(game.class(c).key.clone(), probs);
        }
        out
    }

    pub fn average_profile(&self, game: &GameTree) -> StrategyProfile {
        StrategyProfile::new(
            self.average_strategy(game, Player::P1),
            self.average_strategy(game, Player::P2),
        )
    }

    /// Deterministic text form keyed by infoset key, restorable against the
    /// same game.
    pub fn to_text(&self, game: &GameTree) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("format: regret-store v1\n");
        let _ = writeln!(out, "game: {}", self.game_hash);
        let _ = writeln!(out, "iteration: {}", self.iteration);
        for (section, rows) in [("regrets", &self.regrets), ("average", &self.avg)] {
            let _ = writeln!(out, "[{section}]");
            let mut keyed: Vec<(&str, &Vec<f64>)> = game
                .classes()
                .filter(|(_, class)| class.is_acting())
                .map(|(c, class)| (class.key.as_str(), &rows[c.0 as usize]))
                .collect();
            keyed.sort_by_key(|&(k, _)| k);
            for (key, row) in keyed {
                let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
                let _ = writeln!(out, "{key}\t{}", cells.join(" "));
            }
        }
        out
    }

    pub fn from_text(game: &GameTree, text: &str) -> Result<RegretStore> {
        let mut store = RegretStore::new(game);
        let mut lines = text.lines();
        match lines.next() {
            Some("format: regret-store v1") => {}
            other => {
                return Err(Error::Parse(format!(
                    "unrecognized checkpoint header {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut section = "";
        for line in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(hash) = line.strip_prefix("game: ") {
                if hash != store.game_hash {
                    return Err(Error::Parse(format!(
                        "checkpoint belongs to game {hash}, not {}",
                        store.game_hash
                    )));
                }
            } else if let Some(iter) = line.strip_prefix("iteration: ") {
                store.iteration = iter
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad iteration counter: {e}")))?;
            } else if line.starts_with('[') {
                section = line;
            } else {
                let (key, rest) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::Parse(format!("malformed checkpoint row: {line}")))?;
                let c = game
                    .class_by_key(key)
                    .ok_or_else(|| Error::Parse(format!("checkpoint row for unknown infoset {key}")))?;
                let row: Vec<f64> = rest
                    .split(' ')
                    .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad cell {t}: {e}"))))
                    .collect::<Result<_>>()?;
                if row.len() != store.regrets[c.0 as usize].len() {
                    return Err(Error::Parse(format!("row size mismatch at {key}")));
                }
                match section {
                    "[regrets]" => store.regrets[c.0 as usize] = row,
                    "[average]" => store.avg[c.0 as usize] = row,
                    other => {
                        return Err(Error::Parse(format!("row outside a known section: {other}")))
                    }
                }
            }
        }
        Ok(store)
    }

    pub fn save(&self, game: &GameTree, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text(game))?;
        Ok(())
    }

    pub fn load(game: &GameTree, path: &Path) -> Result<RegretStore> {
        RegretStore::from_text(game, &std::fs::read_to_string(path)?)
    }
}

/// An in-progress solver run over one game tree.
pub struct Solver<'g> {
    game: &'g GameTree,
    config: SolverConfig,
    store: RegretStore,
}

impl<'g> Solver<'g> {
    pub fn new(game: &'g GameTree, config: SolverConfig) -> Result<Solver<'g>> {
        config.validate()?;
        Ok(Solver { game, store: RegretStore::new(game), config })
    }

    /// Continues a checkpointed run.
    pub fn resume(game: &'g GameTree, config: SolverConfig, store: RegretStore) -> Result<Solver<'g>> {
        config.validate()?;
        Ok(Solver { game, store, config })
    }

    pub fn store(&self) -> &RegretStore {
        &self.store
    }

    pub fn into_store(self) -> RegretStore {
        self.store
    }

    pub fn iteration(&self) -> u32 {
        self.store.iteration
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn average_profile(&self) -> StrategyProfile {
        self.store.average_profile(self.game)
    }

    /// Runs until the configured iteration count is reached.
    pub fn run_to_completion(&mut self) -> Result<()> {
        while self.store.iteration < self.config.iterations {
            self.step()?;
        }
        Ok(())
    }

    /// Runs at most `n` further iterations.
    pub fn run_iterations(&mut self, n: u32) -> Result<()> {
        for _ in 0..n {
            if self.store.iteration >= self.config.iterations {
                break;
            }
            self.step()?;
        }
        Ok(())
    }

    /// One solver iteration.
    pub fn step(&mut self) -> Result<()> {
        let t = self.store.iteration + 1;
        let skip = self.config.skip_window();
        // Full-width variants weight later iterations linearly, the usual
        // companion to regret-matching+; the sampled variant weights
        // uniformly because linear weights amplify late sampling noise.
        let weight = if t <= skip {
            0.0
        } else if self.config.variant == Variant::MccfrExternal {
            1.0
        } else {
            (t - skip) as f64
        };
        match self.config.variant {
            Variant::VanillaCfr => {
                let policies = self.snapshot_policies();
                self.full_width_update(&policies, weight, None, false)?;
            }
            Variant::CfrPlusModified => {
                let updating = if t % 2 == 1 { Player::P1 } else { Player::P2 };
                let policies = self.snapshot_policies();
                self.full_width_update(&policies, weight, Some(updating), true)?;
                if t <= self.config.discount_iterations {
                    let factor = (t as f64).sqrt() / ((t + 1) as f64).sqrt();
                    for row in &mut self.store.regrets {
                        for r in row {
                            *r *= factor;
                        }
                    }
                }
            }
            Variant::MccfrExternal => {
                // Per-iteration stream so resumed runs replay identically.
                let stream = self.config.seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let mut rng = ChaCha8Rng::seed_from_u64(stream);
                for p in [Player::P1, Player::P2] {
                    sample_traverse(
                        self.game,
                        &mut self.store,
                        self.game.root(),
                        p,
                        weight,
                        &mut rng,
                    )?;
                }
            }
        }
        self.store.iteration = t;
        Ok(())
    }

    /// Current regret-matched policy rows for every acting infoset.
    fn snapshot_policies(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![Vec::new(); self.game.num_classes()];
        for (c, class) in self.game.classes() {
            if class.is_acting() {
                rows[c.0 as usize] = self.store.policy(c);
            }
        }
        rows
    }

    /// Exact expected-value traversal shared by the full-width variants:
    /// forward reach pass, backward value pass, then per-infoset regret and
    /// average updates. `only` restricts the regret/average update to one
    /// player; `clamp` applies the nonnegative projection after updating.
    fn full_width_update(
        &mut self,
        policies: &[Vec<f64>],
        weight: f64,
        only: Option<Player>,
        clamp: bool,
    ) -> Result<()> {
        let game = self.game;
        let n = game.num_states();
        let mut chance = vec![0.0; n];
        let mut own = [vec![0.0; n], vec![0.0; n]];
        let root = game.root().0 as usize;
        chance[root] = 1.0;
        own[0][root] = 1.0;
        own[1][root] = 1.0;
        for s in game.states() {
            let i = s.0 as usize;
            match game.kind(s) {
                NodeKind::Terminal => {}
                NodeKind::Chance => {
                    let probs = game.chance_distribution(s)?;
                    for (idx, c) in game.children(s).enumerate() {
                        let j = c.0 as usize;
                        chance[j] = chance[i] * probs[idx];
                        own[0][j] = own[0][i];
                        own[1][j] = own[1][i];
                    }
                }
                NodeKind::Decision(p) => {
                    let row = &policies[game.class_of(s, p).0 as usize];
                    for (idx, c) in game.children(s).enumerate() {
                        let j = c.0 as usize;
                        chance[j] = chance[i];
                        own[p.index()][j] = own[p.index()][i] * row[idx];
                        own[p.other().index()][j] = own[p.other().index()][i];
                    }
                }
            }
        }

        // Values to P1 under the snapshot policies.
        let mut v1 = vec![0.0; n];
        for s in game.states().rev() {
            let i = s.0 as usize;
            match game.kind(s) {
                NodeKind::Terminal => v1[i] = game.utility(s, Player::P1)?,
                NodeKind::Chance => {
                    let probs = game.chance_distribution(s)?;
                    v1[i] = game
                        .children(s)
                        .enumerate()
                        .map(|(idx, c)| probs[idx] * v1[c.0 as usize])
                        .sum();
                }
                NodeKind::Decision(p) => {
                    let row = &policies[game.class_of(s, p).0 as usize];
                    v1[i] = game
                        .children(s)
                        .enumerate()
                        .map(|(idx, c)| row[idx] * v1[c.0 as usize])
                        .sum();
                }
            }
        }

        for player in [Player::P1, Player::P2] {
            if only.is_some_and(|p| p != player) {
                continue;
            }
            let sign = player.sign();
            for c in game.acting_classes(player) {
                let class_states: &[StateId] = &game.class(c).states;
                let row = &policies[c.0 as usize];
                let store_row = &mut self.store.regrets[c.0 as usize];
                let avg_row = &mut self.store.avg[c.0 as usize];
                for &h in class_states {
                    let i = h.0 as usize;
                    let cf = chance[i] * own[player.other().index()][i];
                    let here = sign * v1[i];
                    for (idx, child) in game.children(h).enumerate() {
                        let after = sign * v1[child.0 as usize];
                        store_row[idx] += cf * (after - here);
                    }
                    if weight > 0.0 {
                        let my_reach = own[player.index()][i];
                        for (idx, &p) in row.iter().enumerate() {
                            avg_row[idx] += weight * my_reach * p;
                        }
                    }
                }
                if clamp {
                    for r in store_row {
                        *r = r.max(0.0);
                    }
                }
            }
        }
        Ok(())
    }
}

/// External-sampling traversal for `traverser`: chance and opponent actions
/// are sampled, the traverser's actions are all explored. Returns the value
/// to the traverser. The opponent's current policy is folded into the
/// average accumulators at sampled opponent states.
fn sample_traverse(
    game: &GameTree,
    store: &mut RegretStore,
    s: StateId,
    traverser: Player,
    weight: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    match game.kind(s) {
        NodeKind::Terminal => game.utility(s, traverser),
        NodeKind::Chance => {
            let probs = game.chance_distribution(s)?;
            let idx = sample_from(rng, probs);
            sample_traverse(game, store, game.child(s, idx), traverser, weight, rng)
        }
        NodeKind::Decision(p) if p == traverser => {
            let c = game.class_of(s, p);
            let policy = store.policy(c);
            let children: Vec<StateId> = game.children(s).collect();
            let mut values = vec![0.0; children.len()];
            let mut here = 0.0;
            for (idx, &child) in children.iter().enumerate() {
                values[idx] = sample_traverse(game, store, child, traverser, weight, rng)?;
                here += policy[idx] * values[idx];
            }
            let row = &mut store.regrets[c.0 as usize];
            for (idx, &v) in values.iter().enumerate() {
                row[idx] += v - here;
            }
            Ok(here)
        }
        NodeKind::Decision(p) => {
            let c = game.class_of(s, p);
            let policy = store.policy(c);
            if weight > 0.0 {
                let avg_row = &mut store.avg[c.0 as usize];
                for (idx, &prob) in policy.iter().enumerate() {
                    avg_row[idx] += weight * prob;
                }
            }
            let idx = sample_from(rng, &policy);
            sample_traverse(game, store, game.child(s, idx), traverser, weight, rng)
        }
    }
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

/// Convenience one-shot run.
pub fn solve(game: &GameTree, config: &SolverConfig) -> Result<SolveResult> {
    let mut solver = Solver::new(game, config.clone())?;
    solver.run_to_completion()?;
    Ok(SolveResult { profile: solver.average_profile(), store: solver.into_store() })
}

/// A finished solve: the average profile and the raw accumulator state.
pub struct SolveResult {
    pub profile: StrategyProfile,
    pub store: RegretStore,
}

/// Iteration budgets keyed on how much of the stack is already in the pot:
/// cheap early situations get more iterations than deep-stacked all-in
/// ones, mirroring budget schedules that adapt to pot size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSchedule {
    /// `(pot_fraction_upper_bound, iterations)` sorted ascending.
    pub entries: Vec<(f64, u32)>,
    pub fallback: u32,
}

impl Default for IterationSchedule {
    fn default() -> IterationSchedule {
        IterationSchedule {
            entries: vec![(0.1, 1000), (0.25, 600), (0.5, 300)],
            fallback: 150,
        }
    }
}

impl IterationSchedule {
    pub fn iterations_for(&self, pot: f64, stack_total: f64) -> u32 {
        let fraction = if stack_total > 0.0 { pot / stack_total } else { 1.0 };
        for &(bound, iters) in &self.entries {
            if fraction <= bound {
                return iters;
            }
        }
        self.fallback
    }
}
