//! Nested subgame resolving during play.
//!
//! A playing agent repeatedly carves out the subgame around the current
//! public situation, solves it — depth-limited in early rounds, full-width
//! once the last round is reached — and acts from the refined strategy.
//! Beliefs over hidden states are carried forward by Bayes updates against
//! the strategies actually used. After the first full-width commitment,
//! later re-solves go through a resolve gadget that lets the opponent fall
//! back to the value the previous solution promised them, so refinements
//! cannot make the overall strategy more exploitable.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::best_response::best_response;
use crate::cfr::{Solver, SolverConfig};
use crate::depth_limited::{
    add_synthetic_root, compute_value_table, copy_subgame_body, finish_augmented, weaken,
    AugmentedSubgame, ContinuationSet, LeafContext, Units, ValueProvider, ValueTable,
    GADGET_PREFIX,
};
use crate::error::{Error, Result};
use crate::game::{
    ActionDef, ActionClass, DepthLimit, GameTree, NodeKind, NodeSpec, Player, StateId,
    SubgameSpec, TreeBuilder,
};
use crate::strategy::{
    expected_value, sample_index, BehavioralStrategy, StrategyProfile,
};

/// Salt for the chance stream so deals never share randomness with agents.
const CHANCE_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
/// Per-seat salts for agent action sampling.
const SEAT_SALT: [u64; 2] = [0x243F_6A88_85A3_08D3, 0x1319_8A2E_0370_7344];

// ---------------------------------------------------------------------------
// Belief tracking over public histories
// ---------------------------------------------------------------------------

/// One full-game state still consistent with the public action sequence,
/// with its reach probability factored by source: chance, P1's actions,
/// P2's actions. Keeping the factors separate lets the same tracker serve
/// posterior beliefs (all three) and gadget entry weights (chance times the
/// resolving player only).
#[derive(Debug, Clone)]
struct Candidate {
    state: StateId,
    chance: f64,
    own: [f64; 2],
}

/// Tracks every state consistent with the public observation sequence,
/// together with reach weights under the strategies each side is assumed
/// to play. Hidden actions (public view `"?"`) fan a candidate out over all
/// of its hidden children, so the candidate set is always the full public
/// situation — exactly the root set a resolve needs.
pub struct ResolveContext<'a> {
    game: &'a GameTree,
    pub hero: Player,
    candidates: Vec<Candidate>,
    /// Public view tokens observed so far, `"?"` included.
    pub tokens: Vec<String>,
}

impl fmt::Debug for ResolveContext<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResolveContext")
            .field("hero", &self.hero)
            .field("candidates", &self.candidates.len())
            .field("tokens", &self.tokens)
            .finish()
    }
}

impl<'a> ResolveContext<'a> {
    /// A fresh tracker at the root of the game.
    pub fn new(game: &'a GameTree, hero: Player) -> ResolveContext<'a> {
        ResolveContext {
            game,
            hero,
            candidates: vec![Candidate { state: game.root(), chance: 1.0, own: [1.0, 1.0] }],
            tokens: Vec::new(),
        }
    }

    /// A tracker advanced to `state`'s public situation: it replays the
    /// state's public history from the root, so the candidates are the full
    /// public class around `state` with beliefs under `assumed`.
    pub fn at_state(
        game: &'a GameTree,
        hero: Player,
        state: StateId,
        assumed: &StrategyProfile,
    ) -> Result<ResolveContext<'a>> {
        let mut tokens = Vec::new();
        let mut cur = state;
        while let Some((parent, action_id)) = game.parent(cur) {
            tokens.push(game.action(action_id).public_view.clone());
            cur = parent;
        }
        tokens.reverse();
        let mut ctx = ResolveContext::new(game, hero);
        for token in &tokens {
            ctx.advance(token, assumed)?;
        }
        Ok(ctx)
    }

    /// The states consistent with everything observed so far.
    pub fn states(&self) -> Vec<StateId> {
        self.candidates.iter().map(|c| c.state).collect()
    }

    /// The public key shared by the current candidates.
    pub fn public_key(&self) -> &str {
        self.game.public(self.game.public_of(self.candidates[0].state)).key.as_str()
    }

    /// Posterior over candidates: chance times both players' assumed action
    /// probabilities, normalized.
    pub fn beliefs(&self) -> Vec<f64> {
        let joints: Vec<f64> =
            self.candidates.iter().map(|c| c.chance * c.own[0] * c.own[1]).collect();
        let total: f64 = joints.iter().sum();
        if total > 0.0 {
            joints.into_iter().map(|j| j / total).collect()
        } else {
            vec![1.0 / joints.len() as f64; joints.len()]
        }
    }

    /// Unnormalized reach weights excluding `player`'s own actions: chance
    /// times the other side only. These weigh the entry nodes of a resolve
    /// gadget granting `player` the fallback choice.
    pub fn counterfactual_weights(&self, player: Player) -> Vec<f64> {
        self.candidates
            .iter()
            .map(|c| c.chance * c.own[player.other().index()])
            .collect()
    }

    /// Advances through one observed action by its public view token.
    /// Decision probabilities come from `assumed`; infosets the assumed
    /// strategies do not cover count as uniform, and if the whole candidate
    /// set ends up with zero weight — the observed action was impossible
    /// under the assumed play — the tracker falls back to a uniform belief
    /// over the states consistent with the public history rather than
    /// dividing by zero.
    pub fn advance(&mut self, token: &str, assumed: &StrategyProfile) -> Result<()> {
        let game = self.game;
        let mut next = Vec::new();
        for cand in &self.candidates {
            if game.is_terminal(cand.state) {
                continue;
            }
            let chance = matches!(game.kind(cand.state), NodeKind::Chance)
                .then(|| game.chance_distribution(cand.state))
                .transpose()?;
            for (idx, child) in game.children(cand.state).enumerate() {
                let action = game.action(game.legal_actions(cand.state)?[idx]);
                if action.public_view != token {
                    continue;
                }
                let mut c = Candidate { state: child, ..*cand };
                match game.kind(cand.state) {
                    NodeKind::Chance => c.chance *= chance.unwrap()[idx],
                    NodeKind::Decision(p) => {
                        let key = game.infoset_key(cand.state, p);
                        // A row of the wrong width comes from a strategy
                        // that never modeled this menu (say, a blueprint
                        // borrowed from a smaller action abstraction); it
                        // counts as unknown, like a missing row.
                        let prob = match assumed.get(p).lookup(key) {
                            Some(row) if row.len() == game.num_actions(cand.state) => row[idx],
                            _ => 1.0 / game.num_actions(cand.state) as f64,
                        };
                        c.own[p.index()] *= prob;
                    }
                    NodeKind::Terminal => unreachable!(),
                }
                next.push(c);
            }
        }
        if next.is_empty() {
            return Err(Error::NoCandidate(format!(
                "public token {token} after /{}",
                self.tokens.join("/")
            )));
        }
        if next.iter().map(|c| c.chance * c.own[0] * c.own[1]).sum::<f64>() <= 0.0 {
            for c in &mut next {
                c.chance = 1.0;
                c.own = [1.0, 1.0];
            }
        }
        self.candidates = next;
        self.tokens.push(token.to_string());
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// The resolve gadget
// ---------------------------------------------------------------------------

/// Builds the safe-resolving gadget over a subgame: a chance root picks an
/// entry state with probability proportional to `entry_weights` (chance and
/// resolving-player reach), then the opponent chooses between taking a
/// fixed `alt` payoff — the value their infoset was promised by the
/// previous solution, plus `margin` — and entering the subgame proper.
/// Solving the gadget therefore cannot hand the opponent more than they
/// already had, no matter how beliefs were estimated.
///
/// `alt_values` maps each root infoset key of the opponent to that promised
/// value, in chips from the opponent's point of view.
pub fn build_gadget(
    ctx: &LeafContext,
    spec: &SubgameSpec,
    provider: &ValueProvider,
    entry_weights: &[f64],
    alt_values: &HashMap<String, f64>,
    margin: f64,
) -> Result<AugmentedSubgame> {
    let game = ctx.game;
    let villain = ctx.hero.other();
    spec.validate(game)?;
    if ctx.continuation.villain != villain {
        return Err(Error::ScopeMismatch(format!(
            "continuation set belongs to {}, expected {villain}",
            ctx.continuation.villain
        )));
    }
    if entry_weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroTotalReach("gadget entry distribution".into()));
    }

    let mut builder = TreeBuilder::new(&format!("{}@gadget", game.name), game.big_blind);
    let root_id = add_synthetic_root(&mut builder, game, &spec.roots, entry_weights)?;
    let total: f64 = entry_weights.iter().sum();
    let mut queue = Vec::new();
    for (i, (&r, &w)) in spec.roots.iter().zip(entry_weights).enumerate() {
        let villain_key = game.infoset_key(r, villain);
        let alt = *alt_values
            .get(villain_key)
            .ok_or_else(|| Error::MissingAltValue(villain_key.to_string()))?;
        let public_key = &game.public(game.public_of(r)).key;
        let mut keys = [None, None];
        keys[ctx.hero.index()] =
            Some(format!("{GADGET_PREFIX}{}", game.infoset_key(r, ctx.hero)));
        keys[villain.index()] = Some(format!("{GADGET_PREFIX}{villain_key}"));
        let choice = builder.add_child(
            root_id,
            ActionDef::public(&format!("e{i}"), ActionClass::Neutral),
            w / total,
            NodeSpec {
                kind: NodeKind::Decision(villain),
                util_p1: 0.0,
                pot: game.pot(r),
                round: game.round(r),
                keys,
                public_key: format!("{GADGET_PREFIX}{public_key}"),
            },
        );
        builder.add_child(
            choice,
            ActionDef::public("alt", ActionClass::Neutral),
            1.0,
            NodeSpec::terminal(
                villain.sign() * (alt + margin),
                game.pot(r),
                game.round(r),
                format!("{GADGET_PREFIX}{public_key}|alt"),
            ),
        );
        queue.push((r, Some((choice, ActionDef::public("enter", ActionClass::Neutral), 1.0))));
    }
    let body = copy_subgame_body(ctx, spec, provider, &mut builder, queue)?;
    finish_augmented(builder, ctx.hero, spec.clone(), body)
}

// ---------------------------------------------------------------------------
// One resolve
// ---------------------------------------------------------------------------

/// How a subgame solve anchors the opponent's side.
pub enum ResolveMode<'m> {
    /// Root the subgame on the current posterior directly. Exact when the
    /// posterior is exact (for instance at the root of the game); otherwise
    /// the opponent may exploit belief errors.
    Unsafe,
    /// Wrap the subgame in the fallback gadget built from `alt_values`.
    SafeGadget { alt_values: &'m HashMap<String, f64>, margin: f64 },
}

/// A solved subgame expressed both locally and as full-game strategies.
pub struct ResolvedSubgame {
    pub aug: AugmentedSubgame,
    /// Average strategies on the augmented tree.
    pub solution: StrategyProfile,
    /// Hero's subgame rows overlaid on the blueprint.
    pub hero_full: BehavioralStrategy,
    /// The opponent model implied by the solve, as a full-game strategy.
    pub villain_full: BehavioralStrategy,
    /// Hero's expected value of the augmented game, in chips.
    pub value_hero: f64,
}

/// Carves the subgame rooted at the tracker's current candidates, solves
/// it, and stitches the result back into full-game strategies.
pub fn resolve_subgame(
    ctx: &ResolveContext,
    blueprint: &StrategyProfile,
    continuation: &ContinuationSet,
    provider: &ValueProvider,
    depth: DepthLimit,
    solver: &SolverConfig,
    mode: ResolveMode,
) -> Result<ResolvedSubgame> {
    let game = ctx.game;
    let hero = ctx.hero;
    let spec = SubgameSpec { roots: ctx.states(), depth };
    let leaf_ctx = LeafContext {
        game,
        hero,
        hero_blueprint: blueprint.get(hero),
        continuation,
    };
    let aug = match mode {
        ResolveMode::Unsafe => {
            let beliefs = ctx.beliefs();
            let weights = if spec.roots.len() == 1 { None } else { Some(&beliefs[..]) };
            crate::depth_limited::build_depth_limited(&leaf_ctx, &spec, provider, weights)?
        }
        ResolveMode::SafeGadget { alt_values, margin } => {
            let weights = ctx.counterfactual_weights(hero.other());
            build_gadget(&leaf_ctx, &spec, provider, &weights, alt_values, margin)?
        }
    };
    let mut engine = Solver::new(&aug.tree, solver.clone())?;
    engine.run_to_completion()?;
    let solution = engine.average_profile();
    let hero_full = aug.stitch_hero(blueprint.get(hero), solution.get(hero))?;
    let villain_full =
        aug.materialize_villain(game, continuation, solution.get(hero.other()))?;
    let value_hero = hero.sign() * expected_value(&aug.tree, &solution)?;
    Ok(ResolvedSubgame { aug, solution, hero_full, villain_full, value_hero })
}

// ---------------------------------------------------------------------------
// Off-tree leaf mapping and randomized action translation
// ---------------------------------------------------------------------------

/// Carries an abstract-game value table over to subgame leaves of the real
/// game. Each real leaf's action history is replayed in the abstract game;
/// a bet size the abstraction lacks branches to the nearest sizes on both
/// sides (their value vectors are averaged) or clamps to the nearest edge
/// when outside the abstraction's range. Histories that cannot be aligned
/// at all fail with `NoCandidate`.
pub fn map_off_tree_leaves(
    real: &GameTree,
    leaves: &[StateId],
    abstract_game: &GameTree,
    table: &ValueTable,
) -> Result<ValueTable> {
    let mut out = ValueTable::new(real, table.hero, table.units, table.labels.clone());
    for &leaf in leaves {
        let mut states = vec![abstract_game.root()];
        for label in path_labels(real, leaf) {
            let mut next = Vec::new();
            for s in &states {
                for t in translate_step(abstract_game, *s, &label)? {
                    if !next.contains(&t) {
                        next.push(t);
                    }
                }
            }
            states = next;
        }
        let mut row = vec![0.0; table.n()];
        for s in &states {
            let source = table.get(*s).ok_or_else(|| {
                Error::UndefinedLeafValue(abstract_game.history(*s))
            })?;
            for (acc, v) in row.iter_mut().zip(source) {
                *acc += v / states.len() as f64;
            }
        }
        out.set(leaf, row);
    }
    Ok(out)
}

/// Action labels from the root to `s`, root end first.
pub(crate) fn path_labels(game: &GameTree, s: StateId) -> Vec<String> {
    let mut labels = Vec::new();
    let mut cur = s;
    while let Some((parent, action_id)) = game.parent(cur) {
        labels.push(game.action(action_id).label.clone());
        cur = parent;
    }
    labels.reverse();
    labels
}

/// One translation step: the matching child when the label exists, the two
/// bracketing raise sizes (or the nearest one when outside their range)
/// otherwise.
fn translate_step(game: &GameTree, s: StateId, label: &str) -> Result<Vec<StateId>> {
    if let Some(child) = game.child_by_label(s, label) {
        return Ok(vec![child]);
    }
    let fail = || {
        Error::NoCandidate(format!(
            "no counterpart for action {label} at {}",
            game.history(s)
        ))
    };
    if game.is_terminal(s) {
        return Err(fail());
    }
    let size = raise_size(label).ok_or_else(fail)?;
    let mut below: Option<(i64, StateId)> = None;
    let mut above: Option<(i64, StateId)> = None;
    for (idx, child) in game.children(s).enumerate() {
        let other = &game.action(game.legal_actions(s)?[idx]).label;
        let Some(m) = raise_size(other) else { continue };
        if m <= size && below.is_none_or(|(b, _)| m > b) {
            below = Some((m, child));
        }
        if m >= size && above.is_none_or(|(a, _)| m < a) {
            above = Some((m, child));
        }
    }
    match (below, above) {
        (Some((_, b)), Some((_, a))) => Ok(if a == b { vec![b] } else { vec![b, a] }),
        (Some((_, b)), None) => Ok(vec![b]),
        (None, Some((_, a))) => Ok(vec![a]),
        (None, None) => Err(fail()),
    }
}

/// Numeric part of a raise label such as `"r12"`.
pub(crate) fn raise_size(label: &str) -> Option<i64> {
    label.strip_prefix('r')?.parse().ok()
}

/// Probability of mapping a bet of size `x` down to `lower` rather than up
/// to `upper` under the pseudo-harmonic rule: boundary sizes map to
/// themselves, and in between the smaller bet keeps
/// `(upper - x)(1 + lower) / ((upper - lower)(1 + x))` of the mass. Sizes
/// are pot fractions and must satisfy `0 <= lower <= x <= upper`.
pub fn rpat_lower_probability(x: f64, lower: f64, upper: f64) -> Result<f64> {
    if !(lower >= 0.0 && lower <= x && x <= upper) {
        return Err(Error::OutOfRange(format!(
            "bet size {x} not inside [{lower}, {upper}]"
        )));
    }
    if lower == upper {
        return Ok(1.0);
    }
    Ok((upper - x) * (1.0 + lower) / ((upper - lower) * (1.0 + x)))
}

/// Draws the translated size for an off-tree bet: `lower` with the
/// pseudo-harmonic probability, `upper` otherwise. Deterministic in `seed`.
pub fn rpat_map(x: f64, lower: f64, upper: f64, seed: u64) -> Result<f64> {
    let p = rpat_lower_probability(x, lower, upper)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(if rng.random::<f64>() < p { lower } else { upper })
}

// ---------------------------------------------------------------------------
// Agents
// ---------------------------------------------------------------------------

/// Who caused an observed action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    Chance,
    Seat(Player),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Chance => f.write_str("chance"),
            Actor::Seat(p) => write!(f, "{p}"),
        }
    }
}

/// What one seat is told about an executed action: who acted, the seat's
/// private view of it, and the public view. Hidden information shows up as
/// `"?"` tokens.
#[derive(Debug, Clone)]
pub struct Observation {
    pub actor: Actor,
    pub view: String,
    pub public: String,
}

/// A participant in a match. Drivers call `new_hand` once per hand, then
/// alternate `observe` for every executed action (the agent's own included)
/// with `act` whenever it is the agent's turn.
pub trait Agent {
    fn new_hand(&mut self, seed: u64, seat: Player) -> Result<()>;
    fn observe(&mut self, obs: &Observation) -> Result<()>;
    fn act(&mut self) -> Result<String>;
}

/// Advances a private-view candidate set through one observation.
fn advance_candidates(
    game: &GameTree,
    candidates: &[StateId],
    seat: Player,
    view: &str,
) -> Result<Vec<StateId>> {
    let mut next = Vec::new();
    for &s in candidates {
        if game.is_terminal(s) {
            continue;
        }
        for (idx, child) in game.children(s).enumerate() {
            if game.action(game.legal_actions(s)?[idx]).views[seat.index()] == view {
                next.push(child);
            }
        }
    }
    if next.is_empty() {
        return Err(Error::NoCandidate(format!("view token {view} for {seat}")));
    }
    Ok(next)
}

/// The state the agent must act at, after checking it really is on turn.
fn acting_state(game: &GameTree, candidates: &[StateId], seat: Player) -> Result<StateId> {
    let s = *candidates.first().ok_or_else(|| {
        Error::ProtocolViolation("act() before new_hand()".into())
    })?;
    if game.kind(s) != NodeKind::Decision(seat) {
        return Err(Error::ProtocolViolation(format!(
            "{seat} asked to act out of turn at {}",
            game.history(s)
        )));
    }
    Ok(s)
}

/// Plays a fixed strategy profile from either seat, tracking its infoset
/// through observed view tokens and sampling its stored rows.
pub struct PolicyAgent<'a> {
    game: &'a GameTree,
    profile: StrategyProfile,
    seat: Player,
    candidates: Vec<StateId>,
    rng: ChaCha8Rng,
}

impl<'a> PolicyAgent<'a> {
    pub fn new(game: &'a GameTree, profile: StrategyProfile) -> PolicyAgent<'a> {
        PolicyAgent {
            game,
            profile,
            seat: Player::P1,
            candidates: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }
}

impl Agent for PolicyAgent<'_> {
    fn new_hand(&mut self, seed: u64, seat: Player) -> Result<()> {
        self.seat = seat;
        self.candidates = vec![self.game.root()];
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ SEAT_SALT[seat.index()]);
        Ok(())
    }

    fn observe(&mut self, obs: &Observation) -> Result<()> {
        self.candidates =
            advance_candidates(self.game, &self.candidates, self.seat, &obs.view)?;
        Ok(())
    }

    fn act(&mut self) -> Result<String> {
        let s = acting_state(self.game, &self.candidates, self.seat)?;
        let row = self.profile.get(self.seat).probs_at(self.game, s)?;
        let idx = sample_index(&mut self.rng, row);
        Ok(self.game.action(self.game.legal_actions(s)?[idx]).label.clone())
    }
}

/// Replays a fixed list of action labels; for protocol tests.
pub struct ScriptedAgent {
    script: Vec<String>,
    next: usize,
}

impl ScriptedAgent {
    pub fn new<S: Into<String>>(script: Vec<S>) -> ScriptedAgent {
        ScriptedAgent { script: script.into_iter().map(Into::into).collect(), next: 0 }
    }
}

impl Agent for ScriptedAgent {
    fn new_hand(&mut self, _seed: u64, _seat: Player) -> Result<()> {
        self.next = 0;
        Ok(())
    }

    fn observe(&mut self, _obs: &Observation) -> Result<()> {
        Ok(())
    }

    fn act(&mut self) -> Result<String> {
        let label = self.script.get(self.next).ok_or_else(|| {
            Error::ProtocolViolation("script exhausted".into())
        })?;
        self.next += 1;
        Ok(label.clone())
    }
}

// ---------------------------------------------------------------------------
// The resolving agent
// ---------------------------------------------------------------------------

/// Knobs for the resolving agent's schedule and solvers.
#[derive(Debug, Clone)]
pub struct ResolverPolicy {
    /// Depth cut for early-round subgames.
    pub early_depth: DepthLimit,
    pub early_solver: SolverConfig,
    pub endgame_solver: SolverConfig,
    /// Extra opponent payoff added to gadget fallbacks.
    pub margin: f64,
    /// Cap leaf values at the blueprint continuation's before solving.
    pub weaken: bool,
}

impl Default for ResolverPolicy {
    fn default() -> ResolverPolicy {
        ResolverPolicy {
            early_depth: DepthLimit::Rounds(1),
            early_solver: SolverConfig { iterations: 400, ..SolverConfig::default() },
            endgame_solver: SolverConfig { iterations: 400, ..SolverConfig::default() },
            margin: 0.0,
            weaken: false,
        }
    }
}

/// Everything one seat needs: the opponent continuation set and exact leaf
/// values for every potential cut state, computed once up front.
struct SeatData {
    set: ContinuationSet,
    table: ValueTable,
}

/// One cached subgame solution keyed by the public situation it was solved
/// at. Identical public situations get identical solves, so the cache is
/// valid across hands.
struct SolvedEntry {
    resolved: ResolvedSubgame,
}

/// How many subgames of each kind an agent has actually solved (cache hits
/// not included).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResolveStats {
    /// Depth-limited solves in rounds before the last.
    pub early: usize,
    /// Full-width solves on first reaching the last round.
    pub endgame: usize,
    /// Gadget re-solves after later opponent actions.
    pub gadget: usize,
}

/// An agent that re-solves the game as it goes. Early rounds are solved
/// depth-limited (with multi-valued leaves and the opponent's fallback-free
/// posterior — solutions are cached per public situation); reaching the
/// last round triggers one full-width solve to the end of the game, and
/// any later opponent action triggers a gadget re-solve that holds the
/// opponent to the values the previous solution conceded.
pub struct ResolvingAgent<'a> {
    game: &'a GameTree,
    blueprint: StrategyProfile,
    policy: ResolverPolicy,
    seats: [SeatData; 2],
    final_round: u8,
    cache: HashMap<String, Rc<SolvedEntry>>,
    stats: ResolveStats,
    // Per-hand state.
    seat: Player,
    ctx: ResolveContext<'a>,
    candidates: Vec<StateId>,
    rng: ChaCha8Rng,
    active: Option<Rc<SolvedEntry>>,
    active_round: Option<u8>,
    endgame_committed: bool,
    villain_acted_since_solve: bool,
    assumed: StrategyProfile,
}

impl<'a> ResolvingAgent<'a> {
    /// Builds an agent whose opponent model at depth cuts is the blueprint
    /// alone.
    pub fn new(
        game: &'a GameTree,
        blueprint: StrategyProfile,
        policy: ResolverPolicy,
    ) -> Result<ResolvingAgent<'a>> {
        let sets = [
            ContinuationSet::blueprint_only(blueprint.p2.clone()),
            ContinuationSet::blueprint_only(blueprint.p1.clone()),
        ];
        ResolvingAgent::with_sets(game, blueprint, policy, sets)
    }

    /// Builds an agent with explicit opponent continuation sets, indexed by
    /// the seat the agent occupies (`sets[0]` when playing P1, so its
    /// villain is P2, and vice versa).
    pub fn with_sets(
        game: &'a GameTree,
        blueprint: StrategyProfile,
        policy: ResolverPolicy,
        sets: [ContinuationSet; 2],
    ) -> Result<ResolvingAgent<'a>> {
        let final_round = game.states().map(|s| game.round(s)).max().unwrap_or(0);
        let all_states: Vec<StateId> =
            game.states().filter(|&s| !game.is_terminal(s)).collect();
        let mut seat_data = Vec::new();
        for (i, set) in sets.into_iter().enumerate() {
            let hero = Player::from_index(i);
            if set.villain != hero.other() {
                return Err(Error::ScopeMismatch(format!(
                    "continuation set {i} must model {}",
                    hero.other()
                )));
            }
            let mut table = compute_value_table(
                game,
                hero,
                blueprint.get(hero),
                &set,
                &all_states,
                Units::Chips,
            )?;
            if policy.weaken {
                weaken(game, &mut table, blueprint.get(hero))?;
            }
            seat_data.push(SeatData { set, table });
        }
        let [d0, d1] = <[SeatData; 2]>::try_from(seat_data).ok().unwrap();
        Ok(ResolvingAgent {
            game,
            assumed: blueprint.clone(),
            blueprint,
            policy,
            seats: [d0, d1],
            final_round,
            cache: HashMap::new(),
            stats: ResolveStats::default(),
            seat: Player::P1,
            ctx: ResolveContext::new(game, Player::P1),
            candidates: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            active: None,
            active_round: None,
            endgame_committed: false,
            villain_acted_since_solve: false,
        })
    }

    /// Number of subgames solved so far (cache size).
    pub fn solves(&self) -> usize {
        self.cache.len()
    }

    /// Per-stage solve counts.
    pub fn stats(&self) -> ResolveStats {
        self.stats
    }

    /// The full-game strategy the agent is currently playing from, if a
    /// solve has replaced the blueprint this hand.
    pub fn active_strategy(&self) -> Option<&BehavioralStrategy> {
        self.active.as_ref().map(|e| &e.resolved.hero_full)
    }

    fn solve_here(&mut self, stage: Stage) -> Result<()> {
        let key = format!("{}@{}", self.seat, self.ctx.public_key());
        if let Some(entry) = self.cache.get(&key) {
            self.adopt(entry.clone());
            return Ok(());
        }
        let data = &self.seats[self.seat.index()];
        let provider = ValueProvider::Exact(data.table.clone());
        let alt;
        let (depth, solver, mode) = match stage {
            Stage::Early => {
                (self.policy.early_depth, &self.policy.early_solver, ResolveMode::Unsafe)
            }
            Stage::EndgameFirst => {
                (DepthLimit::None, &self.policy.endgame_solver, ResolveMode::Unsafe)
            }
            Stage::EndgameAgain => {
                let prev = self.active.as_ref().ok_or_else(|| {
                    Error::ProtocolViolation("gadget re-solve without a prior solve".into())
                })?;
                alt = self.promised_values(&prev.resolved)?;
                (
                    DepthLimit::None,
                    &self.policy.endgame_solver,
                    ResolveMode::SafeGadget { alt_values: &alt, margin: self.policy.margin },
                )
            }
        };
        let resolved = resolve_subgame(
            &self.ctx,
            &self.blueprint,
            &data.set,
            &provider,
            depth,
            solver,
            mode,
        )?;
        match stage {
            Stage::Early => self.stats.early += 1,
            Stage::EndgameFirst => self.stats.endgame += 1,
            Stage::EndgameAgain => self.stats.gadget += 1,
        }
        let entry = Rc::new(SolvedEntry { resolved });
        self.cache.insert(key, entry.clone());
        self.adopt(entry);
        Ok(())
    }

    fn adopt(&mut self, entry: Rc<SolvedEntry>) {
        self.assumed = match self.seat {
            Player::P1 => StrategyProfile::new(
                entry.resolved.hero_full.clone(),
                entry.resolved.villain_full.clone(),
            ),
            Player::P2 => StrategyProfile::new(
                entry.resolved.villain_full.clone(),
                entry.resolved.hero_full.clone(),
            ),
        };
        self.active = Some(entry);
        self.villain_acted_since_solve = false;
    }

    /// What the previous solution promised the opponent at each infoset of
    /// the current candidates: their best-response values inside the
    /// previously solved subgame against the hero strategy committed there.
    fn promised_values(&self, prev: &ResolvedSubgame) -> Result<HashMap<String, f64>> {
        let villain = self.seat.other();
        let br = best_response(&prev.aug.tree, prev.solution.get(self.seat), villain)?;
        let mut out = HashMap::new();
        for s in self.ctx.states() {
            let key = self.game.infoset_key(s, villain);
            let value = br
                .infoset_values
                .get(key)
                .ok_or_else(|| Error::MissingAltValue(key.to_string()))?;
            out.insert(key.to_string(), *value);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy)]
enum Stage {
    Early,
    EndgameFirst,
    EndgameAgain,
}

impl Agent for ResolvingAgent<'_> {
    fn new_hand(&mut self, seed: u64, seat: Player) -> Result<()> {
        self.seat = seat;
        self.ctx = ResolveContext::new(self.game, seat);
        self.candidates = vec![self.game.root()];
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ SEAT_SALT[seat.index()]);
        self.active = None;
        self.active_round = None;
        self.endgame_committed = false;
        self.villain_acted_since_solve = false;
        self.assumed = self.blueprint.clone();
        Ok(())
    }

    fn observe(&mut self, obs: &Observation) -> Result<()> {
        self.candidates =
            advance_candidates(self.game, &self.candidates, self.seat, &obs.view)?;
        self.ctx.advance(&obs.public, &self.assumed)?;
        if obs.actor == Actor::Seat(self.seat.other()) {
            self.villain_acted_since_solve = true;
        }
        Ok(())
    }

    fn act(&mut self) -> Result<String> {
        let s = acting_state(self.game, &self.candidates, self.seat)?;
        let round = self.game.round(s);
        if round < self.final_round {
            if self.active_round != Some(round) {
                self.solve_here(Stage::Early)?;
                self.active_round = Some(round);
            }
        } else if !self.endgame_committed {
            self.solve_here(Stage::EndgameFirst)?;
            self.endgame_committed = true;
            self.active_round = None;
        } else if self.villain_acted_since_solve {
            self.solve_here(Stage::EndgameAgain)?;
        }

        let strategy = match &self.active {
            Some(entry) => &entry.resolved.hero_full,
            None => self.blueprint.get(self.seat),
        };
        let key = self.game.infoset_key(s, self.seat);
        let n = self.game.num_actions(s);
        let uniform = vec![1.0 / n as f64; n];
        let row = strategy.lookup(key).unwrap_or(&uniform);
        let idx = sample_index(&mut self.rng, row);
        Ok(self.game.action(self.game.legal_actions(s)?[idx]).label.clone())
    }
}

// ---------------------------------------------------------------------------
// Driving one hand
// ---------------------------------------------------------------------------

/// One executed action, as recorded in a hand transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptStep {
    pub actor: Actor,
    pub label: String,
}

/// The outcome of one played hand.
#[derive(Debug, Clone)]
pub struct HandRecord {
    pub seed: u64,
    /// Chips won by the P1 seat (negative when P1 lost).
    pub chips_p1: f64,
    pub terminal_history: String,
    pub steps: Vec<TranscriptStep>,
}

/// Plays one hand between two agents on the real game tree. Chance outcomes
/// come from a dedicated stream seeded only by `seed` — replaying the same
/// seed with the seats swapped deals the same cards to each seat, which is
/// what duplicate scoring needs — unless `forced_chance` pins them
/// explicitly. Both agents observe every executed action, their own
/// included.
pub fn play_hand(
    game: &GameTree,
    p1: &mut dyn Agent,
    p2: &mut dyn Agent,
    seed: u64,
    forced_chance: Option<&[usize]>,
) -> Result<HandRecord> {
    p1.new_hand(seed, Player::P1)?;
    p2.new_hand(seed, Player::P2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ CHANCE_STREAM_SALT);
    let mut forced = forced_chance.map(|f| f.iter().copied());
    let mut s = game.root();
    let mut steps = Vec::new();
    while !game.is_terminal(s) {
        let (idx, actor) = match game.kind(s) {
            NodeKind::Chance => {
                let dist = game.chance_distribution(s)?;
                let idx = match forced.as_mut() {
                    Some(it) => {
                        let i = it.next().ok_or_else(|| {
                            Error::InvalidParameter(format!(
                                "forced chance outcomes exhausted at {}",
                                game.history(s)
                            ))
                        })?;
                        if i >= dist.len() {
                            return Err(Error::InvalidParameter(format!(
                                "forced chance outcome {i} out of range at {}",
                                game.history(s)
                            )));
                        }
                        i
                    }
                    None => sample_index(&mut rng, dist),
                };
                (idx, Actor::Chance)
            }
            NodeKind::Decision(p) => {
                let label = match p {
                    Player::P1 => p1.act()?,
                    Player::P2 => p2.act()?,
                };
                let idx = action_index(game, s, &label)?;
                (idx, Actor::Seat(p))
            }
            NodeKind::Terminal => unreachable!(),
        };
        let action = game.action(game.legal_actions(s)?[idx]).clone();
        p1.observe(&Observation {
            actor,
            view: action.views[0].clone(),
            public: action.public_view.clone(),
        })?;
        p2.observe(&Observation {
            actor,
            view: action.views[1].clone(),
            public: action.public_view.clone(),
        })?;
        steps.push(TranscriptStep { actor, label: action.label });
        s = game.child(s, idx);
    }
    Ok(HandRecord {
        seed,
        chips_p1: game.utility(s, Player::P1)?,
        terminal_history: game.history(s),
        steps,
    })
}

/// Menu position of `label` at `s`, or the protocol error naming the spot.
fn action_index(game: &GameTree, s: StateId, label: &str) -> Result<usize> {
    game.legal_actions(s)?
        .iter()
        .position(|&a| game.action(a).label == label)
        .ok_or_else(|| Error::IllegalAction {
            action: label.to_string(),
            at: game.history(s),
        })
}

/// Replays a transcript through the tree and returns the terminal reached,
/// verifying every step is legal.
pub fn replay(game: &GameTree, steps: &[TranscriptStep]) -> Result<StateId> {
    let mut s = game.root();
    for step in steps {
        let idx = action_index(game, s, &step.label)?;
        s = game.child(s, idx);
    }
    if !game.is_terminal(s) {
        return Err(Error::NonTerminalState(game.history(s)));
    }
    Ok(s)
}
