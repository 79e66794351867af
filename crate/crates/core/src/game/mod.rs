//! Game tree representation for two-player zero-sum imperfect-information games.
//!
//! A [`GameTree`] is an immutable arena of states built either from a
//! [`GameDescriptor`] (the built-in benchmark games) or assembled node by node
//! (augmented subgames). States are addressed by canonical history strings;
//! every non-terminal state carries one observation class per player (the
//! infoset) and one public class (the states an outside observer cannot tell
//! apart). Terminal payoffs are stored for player 1 only; player 2's payoff is
//! the exact negation.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub mod descriptor;
mod kuhn;
mod leduc;
mod nlfh;
mod rps;

pub use descriptor::{GameDescriptor, KuhnParams, LeducParams, NlfhParams};

/// The two strategic players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    P1,
    P2,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::P1 => 0,
            Player::P2 => 1,
        }
    }

    pub fn from_index(i: usize) -> Player {
        match i {
            0 => Player::P1,
            1 => Player::P2,
            _ => panic!("player index {i} out of range"),
        }
    }

    /// Sign of this player's payoff relative to the stored P1 payoff.
    pub fn sign(self) -> f64 {
        match self {
            Player::P1 => 1.0,
            Player::P2 => -1.0,
        }
    }
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Player::P1 => write!(f, "p1"),
            Player::P2 => write!(f, "p2"),
        }
    }
}

/// What happens at a state: a player decision, a chance event, or the end of
/// the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Decision(Player),
    Chance,
    Terminal,
}

/// Declarative label used by strategy-biasing: which broad class of move an
/// action represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionClass {
    Fold,
    CheckCall,
    BetRaise,
    Neutral,
}

/// An action edge: canonical label plus what each player (and the public)
/// observes when it is taken. Hidden moves and private deals use `"?"` as the
/// opponent/public view.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionDef {
    pub label: String,
    pub class: ActionClass,
    pub views: [String; 2],
    pub public_view: String,
}

impl ActionDef {
    /// An action all participants observe directly.
    pub fn public(label: &str, class: ActionClass) -> ActionDef {
        ActionDef {
            label: label.to_string(),
            class,
            views: [label.to_string(), label.to_string()],
            public_view: label.to_string(),
        }
    }

    /// A move by `actor` that the other player cannot see.
    pub fn hidden(label: &str, class: ActionClass, actor: Player) -> ActionDef {
        let mut views = ["?".to_string(), "?".to_string()];
        views[actor.index()] = label.to_string();
        ActionDef {
            label: label.to_string(),
            class,
            views,
            public_view: "?".to_string(),
        }
    }

    /// A chance outcome with explicit per-player views (private deals show each
    /// player only their own cards).
    pub fn deal(label: &str, view_p1: &str, view_p2: &str, public_view: &str) -> ActionDef {
        ActionDef {
            label: label.to_string(),
            class: ActionClass::Neutral,
            views: [view_p1.to_string(), view_p2.to_string()],
            public_view: public_view.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicId(pub u32);

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    parent: u32,
    action_from_parent: u16,
    kind: NodeKind,
    children: Vec<u32>,
    actions: Vec<u16>,
    chance: Vec<f64>,
    util_p1: f64,
    pot: f64,
    round: u8,
    depth: u16,
    player_depth: u16,
    class: [u32; 2],
    public: u32,
}

/// An observation class: the set of states one player cannot distinguish.
/// When `player` is the actor at its states this is a strategy-bearing
/// infoset and `actions` lists the shared legal actions in canonical order.
#[derive(Debug, Clone)]
pub struct ObsClass {
    pub player: Player,
    pub key: String,
    pub states: Vec<StateId>,
    pub actions: Vec<u16>,
    pub kind: NodeKind,
    pub public: PublicId,
}

impl ObsClass {
    pub fn is_acting(&self) -> bool {
        self.kind == NodeKind::Decision(self.player)
    }
}

/// A public situation: all states consistent with the publicly observable
/// action sequence.
#[derive(Debug, Clone)]
pub struct PublicClass {
    pub key: String,
    pub states: Vec<StateId>,
}

/// Immutable game tree arena. State ids are ordered by depth (parents before
/// children), which the backward-induction passes rely on.
pub struct GameTree {
    pub name: String,
    pub big_blind: f64,
    nodes: Vec<Node>,
    actions: Vec<ActionDef>,
    classes: Vec<ObsClass>,
    publics: Vec<PublicClass>,
    class_index: HashMap<String, u32>,
    public_index: HashMap<String, u32>,
}

impl GameTree {
    /// Build one of the benchmark games from its descriptor.
    pub fn build(descriptor: &GameDescriptor) -> Result<GameTree> {
        descriptor.validate()?;
        match descriptor {
            GameDescriptor::RpsPlus => rps::build(),
            GameDescriptor::Kuhn(p) => kuhn::build(p),
            GameDescriptor::Leduc(p) => leduc::build(p),
            GameDescriptor::Nlfh(p) => nlfh::build(p),
        }
    }

    pub fn root(&self) -> StateId {
        StateId(0)
    }

    pub fn num_states(&self) -> usize {
        self.nodes.len()
    }

    pub fn states(&self) -> impl DoubleEndedIterator<Item = StateId> + ExactSizeIterator {
        (0..self.nodes.len() as u32).map(StateId)
    }

    pub fn kind(&self, s: StateId) -> NodeKind {
        self.nodes[s.0 as usize].kind
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.kind(s) == NodeKind::Terminal
    }

    pub fn parent(&self, s: StateId) -> Option<(StateId, u16)> {
        let n = &self.nodes[s.0 as usize];
        if n.parent == NONE {
            None
        } else {
            Some((StateId(n.parent), n.action_from_parent))
        }
    }

    pub fn children(&self, s: StateId) -> impl Iterator<Item = StateId> + '_ {
        self.nodes[s.0 as usize].children.iter().map(|&c| StateId(c))
    }

    pub fn child(&self, s: StateId, idx: usize) -> StateId {
        StateId(self.nodes[s.0 as usize].children[idx])
    }

    /// Child reached by the action with the given label, if any.
    pub fn child_by_label(&self, s: StateId, label: &str) -> Option<StateId> {
        let n = &self.nodes[s.0 as usize];
        n.actions
            .iter()
            .position(|&a| self.actions[a as usize].label == label)
            .map(|i| StateId(n.children[i]))
    }

    /// Ordered actions available at a decision or chance state.
    pub fn legal_actions(&self, s: StateId) -> Result<&[u16]> {
        let n = &self.nodes[s.0 as usize];
        if n.kind == NodeKind::Terminal {
            return Err(Error::TerminalState(self.history(s)));
        }
        Ok(&n.actions)
    }

    pub fn action(&self, id: u16) -> &ActionDef {
        &self.actions[id as usize]
    }

    pub fn num_actions(&self, s: StateId) -> usize {
        self.nodes[s.0 as usize].actions.len()
    }

    /// Terminal payoff for `player` (exact zero-sum pair).
    pub fn utility(&self, s: StateId, player: Player) -> Result<f64> {
        let n = &self.nodes[s.0 as usize];
        if n.kind != NodeKind::Terminal {
            return Err(Error::NonTerminalState(self.history(s)));
        }
        Ok(player.sign() * n.util_p1)
    }

    /// Outcome probabilities at a chance state, aligned with `legal_actions`.
    pub fn chance_distribution(&self, s: StateId) -> Result<&[f64]> {
        let n = &self.nodes[s.0 as usize];
        if n.kind != NodeKind::Chance {
            return Err(Error::NonChanceState(self.history(s)));
        }
        Ok(&n.chance)
    }

    /// Observation class of `player` at a non-terminal state.
    pub fn class_of(&self, s: StateId, player: Player) -> ClassId {
        let n = &self.nodes[s.0 as usize];
        assert!(n.kind != NodeKind::Terminal, "terminal state has no infoset");
        ClassId(n.class[player.index()])
    }

    /// Canonical infoset key of `player` at a non-terminal state.
    pub fn infoset_key(&self, s: StateId, player: Player) -> &str {
        &self.classes[self.class_of(s, player).0 as usize].key
    }

    pub fn class(&self, c: ClassId) -> &ObsClass {
        &self.classes[c.0 as usize]
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> impl Iterator<Item = (ClassId, &ObsClass)> {
        self.classes.iter().enumerate().map(|(i, c)| (ClassId(i as u32), c))
    }

    pub fn class_by_key(&self, key: &str) -> Option<ClassId> {
        self.class_index.get(key).map(|&i| ClassId(i))
    }

    /// Strategy-bearing infosets of `player` (the states where they act).
    pub fn acting_classes(&self, player: Player) -> impl Iterator<Item = ClassId> + '_ {
        self.classes().filter(move |(_, c)| c.player == player && c.is_acting()).map(|(id, _)| id)
    }

    pub fn public_of(&self, s: StateId) -> PublicId {
        PublicId(self.nodes[s.0 as usize].public)
    }

    pub fn public(&self, p: PublicId) -> &PublicClass {
        &self.publics[p.0 as usize]
    }

    pub fn num_publics(&self) -> usize {
        self.publics.len()
    }

    pub fn public_by_key(&self, key: &str) -> Option<PublicId> {
        self.public_index.get(key).map(|&i| PublicId(i))
    }

    /// Chips already committed to the pot at this state.
    pub fn pot(&self, s: StateId) -> f64 {
        self.nodes[s.0 as usize].pot
    }

    /// Betting round index (0 for the whole game in abstract games).
    pub fn round(&self, s: StateId) -> u8 {
        self.nodes[s.0 as usize].round
    }

    pub fn depth(&self, s: StateId) -> u16 {
        self.nodes[s.0 as usize].depth
    }

    /// Number of player decisions on the path from the root to this state.
    pub fn player_depth(&self, s: StateId) -> u16 {
        self.nodes[s.0 as usize].player_depth
    }

    /// Canonical history string: "/" for the root, then "/"-joined action
    /// labels.
    pub fn history(&self, s: StateId) -> String {
        let mut labels = Vec::new();
        let mut cur = s;
        while let Some((p, a)) = self.parent(cur) {
            labels.push(self.actions[a as usize].label.as_str());
            cur = p;
        }
        if labels.is_empty() {
            return "/".to_string();
        }
        let mut out = String::new();
        for l in labels.iter().rev() {
            out.push('/');
            out.push_str(l);
        }
        out
    }

    /// State reached by following a canonical history string from the root.
    pub fn state_by_history(&self, history: &str) -> Option<StateId> {
        let mut cur = self.root();
        for label in history.split('/').filter(|l| !l.is_empty()) {
            cur = self.child_by_label(cur, label)?;
        }
        Some(cur)
    }

    /// Deterministic line-per-state dump: `history -> actor, actions` for
    /// interior states (chance outcomes carry their probability) and
    /// `history -> payoff` for terminals, sorted by history.
    pub fn canonical_serialization(&self) -> String {
        let mut lines: Vec<String> = Vec::with_capacity(self.nodes.len());
        for s in self.states() {
            let h = self.history(s);
            let n = &self.nodes[s.0 as usize];
            let line = match n.kind {
                NodeKind::Terminal => format!("{h} -> {}", fmt_num(n.util_p1)),
                NodeKind::Decision(p) => {
                    let acts: Vec<&str> =
                        n.actions.iter().map(|&a| self.actions[a as usize].label.as_str()).collect();
                    format!("{h} -> {p}, {}", acts.join(" "))
                }
                NodeKind::Chance => {
                    let acts: Vec<String> = n
                        .actions
                        .iter()
                        .zip(&n.chance)
                        .map(|(&a, &pr)| {
                            format!("{}@{}", self.actions[a as usize].label, fmt_num(pr))
                        })
                        .collect();
                    format!("{h} -> chance, {}", acts.join(" "))
                }
            };
            lines.push(line);
        }
        lines.sort_unstable();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// FNV-1a hash of the canonical serialization, as fixed-width hex. Used to
    /// tie persisted artifacts to the game they were computed on.
    pub fn tree_hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical_serialization().as_bytes()))
    }

    /// Copy of this tree keeping only the player actions `keep` admits
    /// (chance outcomes are always kept). Observation-class keys carry over
    /// verbatim, so strategies transfer between the trees by infoset key. The
    /// filter must treat every state of an infoset alike.
    pub fn restrict(&self, keep: &dyn Fn(StateId, u16) -> bool) -> Result<GameTree> {
        let mut b = TreeBuilder::new(&self.name, self.big_blind);
        let mut queue: Vec<(StateId, u32)> = Vec::new();
        let root_spec = self.spec_of(self.root());
        queue.push((self.root(), b.add_root(root_spec)));
        let mut qi = 0;
        while qi < queue.len() {
            let (s, bs) = queue[qi];
            qi += 1;
            let n = &self.nodes[s.0 as usize];
            for (i, &c) in n.children.iter().enumerate() {
                let aid = n.actions[i];
                if n.kind != NodeKind::Chance && !keep(s, aid) {
                    continue;
                }
                let prob = if n.kind == NodeKind::Chance { n.chance[i] } else { 1.0 };
                let child = StateId(c);
                let spec = self.spec_of(child);
                let bc = b.add_child(bs, self.actions[aid as usize].clone(), prob, spec);
                queue.push((child, bc));
            }
            if n.kind == NodeKind::Decision(Player::P1) || n.kind == NodeKind::Decision(Player::P2)
            {
                let kept = n.actions.iter().filter(|&&a| keep(s, a)).count();
                if kept == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "restriction removes every action at {}",
                        self.history(s)
                    )));
                }
            }
        }
        let (tree, _) = b.finish()?;
        Ok(tree)
    }

    fn spec_of(&self, s: StateId) -> NodeSpec {
        let n = &self.nodes[s.0 as usize];
        let keys = match n.kind {
            NodeKind::Terminal => [None, None],
            _ => [
                Some(self.classes[n.class[0] as usize].key.clone()),
                Some(self.classes[n.class[1] as usize].key.clone()),
            ],
        };
        NodeSpec {
            kind: n.kind,
            util_p1: n.util_p1,
            pot: n.pot,
            round: n.round,
            keys,
            public_key: self.publics[n.public as usize].key.clone(),
        }
    }
}

pub(crate) fn fmt_num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Construction

/// Everything the builder needs to know about one state.
#[derive(Debug, Clone)]
pub(crate) struct NodeSpec {
    pub kind: NodeKind,
    pub util_p1: f64,
    pub pot: f64,
    pub round: u8,
    /// Observation-class key per player; `None` only for terminals.
    pub keys: [Option<String>; 2],
    pub public_key: String,
}

impl NodeSpec {
    pub fn terminal(util_p1: f64, pot: f64, round: u8, public_key: String) -> NodeSpec {
        NodeSpec { kind: NodeKind::Terminal, util_p1, pot, round, keys: [None, None], public_key }
    }
}

struct BuildNode {
    spec: NodeSpec,
    parent: u32,
    action: Option<ActionDef>,
    prob: f64,
    children: Vec<u32>,
    depth: u16,
    player_depth: u16,
}

/// Node-by-node tree assembler with explicit observation keys. Used both by
/// the rules-driven walker and by the augmented-subgame builders.
pub(crate) struct TreeBuilder {
    name: String,
    big_blind: f64,
    nodes: Vec<BuildNode>,
}

impl TreeBuilder {
    pub fn new(name: &str, big_blind: f64) -> TreeBuilder {
        TreeBuilder { name: name.to_string(), big_blind, nodes: Vec::new() }
    }

    pub fn add_root(&mut self, spec: NodeSpec) -> u32 {
        assert!(self.nodes.is_empty(), "root must be the first node");
        self.nodes.push(BuildNode {
            spec,
            parent: NONE,
            action: None,
            prob: 1.0,
            children: Vec::new(),
            depth: 0,
            player_depth: 0,
        });
        0
    }

    pub fn add_child(&mut self, parent: u32, action: ActionDef, prob: f64, spec: NodeSpec) -> u32 {
        let id = self.nodes.len() as u32;
        let pdepth = {
            let p = &self.nodes[parent as usize];
            p.player_depth + matches!(p.spec.kind, NodeKind::Decision(_)) as u16
        };
        let depth = self.nodes[parent as usize].depth + 1;
        self.nodes.push(BuildNode {
            spec,
            parent,
            action: Some(action),
            prob,
            children: Vec::new(),
            depth,
            player_depth: pdepth,
        });
        self.nodes[parent as usize].children.push(id);
        id
    }

    /// Finalize: order states by depth, intern actions and observation
    /// classes, and validate structural invariants. Returns the tree plus the
    /// builder-id -> state-id mapping.
    pub fn finish(self) -> Result<(GameTree, Vec<StateId>)> {
        let n = self.nodes.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&i| (self.nodes[i as usize].depth, i));
        let mut remap = vec![0u32; n];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }

        let mut actions: Vec<ActionDef> = Vec::new();
        let mut action_index: HashMap<ActionDef, u16> = HashMap::new();
        let mut intern_action = |a: &ActionDef| -> u16 {
            if let Some(&id) = action_index.get(a) {
                return id;
            }
            let id = actions.len() as u16;
            assert!(actions.len() < u16::MAX as usize, "action table overflow");
            actions.push(a.clone());
            action_index.insert(a.clone(), id);
            id
        };

        let mut nodes: Vec<Node> = Vec::with_capacity(n);
        for &old in &order {
            let bn = &self.nodes[old as usize];
            let action_from_parent = bn.action.as_ref().map(&mut intern_action).unwrap_or(u16::MAX);
            nodes.push(Node {
                parent: if bn.parent == NONE { NONE } else { remap[bn.parent as usize] },
                action_from_parent,
                kind: bn.spec.kind,
                children: bn.children.iter().map(|&c| remap[c as usize]).collect(),
                actions: Vec::new(),
                chance: Vec::new(),
                util_p1: bn.spec.util_p1,
                pot: bn.spec.pot,
                round: bn.spec.round,
                depth: bn.depth,
                player_depth: bn.player_depth,
                class: [NONE, NONE],
                public: NONE,
            })
        }
        // Fill per-node action lists and chance probabilities from children.
        for i in 0..n {
            let children = nodes[i].children.clone();
            let mut acts = Vec::with_capacity(children.len());
            let mut probs = Vec::with_capacity(children.len());
            let mut labels: Vec<&str> = Vec::with_capacity(children.len());
            for &c in &children {
                let cn = &nodes[c as usize];
                acts.push(cn.action_from_parent);
                let bn = &self.nodes[order[c as usize] as usize];
                probs.push(bn.prob);
                labels.push(&actions[cn.action_from_parent as usize].label);
            }
            let node = &nodes[i];
            match node.kind {
                NodeKind::Terminal => {
                    if !children.is_empty() {
                        return Err(Error::InvalidParameter(
                            "terminal state with children".into(),
                        ));
                    }
                    if !node.util_p1.is_finite() {
                        return Err(Error::InvalidParameter("non-finite payoff".into()));
                    }
                }
                NodeKind::Decision(_) => {
                    if children.is_empty() {
                        return Err(Error::InvalidParameter(
                            "decision state without actions".into(),
                        ));
                    }
                }
                NodeKind::Chance => {
                    let total: f64 = probs.iter().sum();
                    if children.is_empty() || (total - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidParameter(format!(
                            "chance outcome probabilities sum to {total}"
                        )));
                    }
                    if probs.iter().any(|&p| !(p >= 0.0) || p > 1.0 + 1e-12) {
                        return Err(Error::InvalidParameter("bad chance probability".into()));
                    }
                }
            }
            {
                let mut sorted = labels.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != labels.len() {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate action label among {labels:?}"
                    )));
                }
            }
            let node = &mut nodes[i];
            node.actions = acts;
            if node.kind == NodeKind::Chance {
                node.chance = probs;
            }
        }

        // Intern observation classes and public classes.
        let mut classes: Vec<ObsClass> = Vec::new();
        let mut class_index: HashMap<String, u32> = HashMap::new();
        let mut publics: Vec<PublicClass> = Vec::new();
        let mut public_index: HashMap<String, u32> = HashMap::new();
        for i in 0..n {
            let spec = &self.nodes[order[i] as usize].spec;
            let pub_id = *public_index.entry(spec.public_key.clone()).or_insert_with(|| {
                publics.push(PublicClass { key: spec.public_key.clone(), states: Vec::new() });
                publics.len() as u32 - 1
            });
            publics[pub_id as usize].states.push(StateId(i as u32));
            nodes[i].public = pub_id;
            if nodes[i].kind == NodeKind::Terminal {
                continue;
            }
            for player in [Player::P1, Player::P2] {
                let key = spec.keys[player.index()]
                    .as_ref()
                    .unwrap_or_else(|| panic!("non-terminal state lacks {player} key"));
                let cid = *class_index.entry(key.clone()).or_insert_with(|| {
                    classes.push(ObsClass {
                        player,
                        key: key.clone(),
                        states: Vec::new(),
                        actions: Vec::new(),
                        kind: nodes[i].kind,
                        public: PublicId(pub_id),
                    });
                    classes.len() as u32 - 1
                });
                let class = &mut classes[cid as usize];
                if class.player != player {
                    return Err(Error::InvalidParameter(format!(
                        "observation key {key} used for both players"
                    )));
                }
                class.states.push(StateId(i as u32));
                nodes[i].class[player.index()] = cid;
            }
        }
        // Consistency: a class must contain states of one kind only, all in
        // the same public situation, and when its player is the actor all
        // members must offer the same ordered action labels.
        for class in &mut classes {
            let first = class.states[0];
            let kind = nodes[first.0 as usize].kind;
            let public = nodes[first.0 as usize].public;
            for &s in &class.states {
                let node = &nodes[s.0 as usize];
                if node.kind != kind {
                    return Err(Error::InvalidParameter(format!(
                        "observation class {} mixes node kinds",
                        class.key
                    )));
                }
                if node.public != public {
                    return Err(Error::InvalidParameter(format!(
                        "observation class {} spans public situations",
                        class.key
                    )));
                }
            }
            class.kind = kind;
            class.public = PublicId(public);
            if kind == NodeKind::Decision(class.player) {
                let acts = nodes[first.0 as usize].actions.clone();
                let depth = nodes[first.0 as usize].depth;
                for &s in &class.states {
                    if nodes[s.0 as usize].actions != acts {
                        return Err(Error::InvalidParameter(format!(
                            "infoset {} has inconsistent action menus",
                            class.key
                        )));
                    }
                    // Depth-ordered linear passes decide each infoset once
                    // all member subtrees are finished, which needs members
                    // at one depth.
                    if nodes[s.0 as usize].depth != depth {
                        return Err(Error::InvalidParameter(format!(
                            "infoset {} spans tree depths",
                            class.key
                        )));
                    }
                }
                class.actions = acts;
            }
        }

        let tree = GameTree {
            name: self.name,
            big_blind: self.big_blind,
            nodes,
            actions,
            classes,
            publics,
            class_index,
            public_index,
        };
        Ok((tree, remap.into_iter().map(StateId).collect()))
    }
}

// ---------------------------------------------------------------------------
// Rules-driven construction

/// Expansion interface the built-in games implement: the tree walker derives
/// observation keys by concatenating per-player action views along the path.
pub(crate) trait Rules {
    type S: Clone;
    fn name(&self) -> String;
    fn big_blind(&self) -> f64;
    fn root(&self) -> Self::S;
    fn kind(&self, s: &Self::S) -> NodeKind;
    fn util_p1(&self, s: &Self::S) -> f64;
    fn pot(&self, s: &Self::S) -> f64;
    fn round(&self, s: &Self::S) -> u8;
    /// Children in canonical action order; `prob` is the outcome probability
    /// at chance states and ignored elsewhere.
    fn expand(&self, s: &Self::S) -> Vec<(ActionDef, f64, Self::S)>;
}

pub(crate) fn build_from_rules<R: Rules>(rules: &R) -> Result<GameTree> {
    let mut b = TreeBuilder::new(&rules.name(), rules.big_blind());
    struct Item<S> {
        state: S,
        builder_id: u32,
        obs: [String; 2],
        public: String,
    }
    let root = rules.root();
    let root_spec = spec_from_rules(rules, &root, &[String::new(), String::new()], "");
    let root_id = b.add_root(root_spec);
    let mut queue = vec![Item {
        state: root,
        builder_id: root_id,
        obs: [String::new(), String::new()],
        public: String::new(),
    }];
    let mut qi = 0;
    while qi < queue.len() {
        let state = queue[qi].state.clone();
        let builder_id = queue[qi].builder_id;
        let obs = queue[qi].obs.clone();
        let public = queue[qi].public.clone();
        qi += 1;
        if rules.kind(&state) == NodeKind::Terminal {
            continue;
        }
        let is_chance = rules.kind(&state) == NodeKind::Chance;
        for (action, prob, child) in rules.expand(&state) {
            for v in action.views.iter().chain(std::iter::once(&action.public_view)) {
                assert!(!v.is_empty() && !v.contains('/'), "bad action view {v:?}");
            }
            let obs_child =
                [join_view(&obs[0], &action.views[0]), join_view(&obs[1], &action.views[1])];
            let public_child = join_view(&public, &action.public_view);
            let spec = spec_from_rules(rules, &child, &obs_child, &public_child);
            let prob = if is_chance { prob } else { 1.0 };
            let cid = b.add_child(builder_id, action, prob, spec);
            queue.push(Item { state: child, builder_id: cid, obs: obs_child, public: public_child });
        }
    }
    let (tree, _) = b.finish()?;
    Ok(tree)
}

fn spec_from_rules<R: Rules>(rules: &R, s: &R::S, obs: &[String; 2], public: &str) -> NodeSpec {
    let kind = rules.kind(s);
    let keys = match kind {
        NodeKind::Terminal => [None, None],
        _ => [Some(format!("p1:{}", obs[0])), Some(format!("p2:{}", obs[1]))],
    };
    NodeSpec {
        kind,
        util_p1: if kind == NodeKind::Terminal { rules.util_p1(s) } else { 0.0 },
        pot: rules.pot(s),
        round: rules.round(s),
        keys,
        public_key: format!("pub:{public}"),
    }
}

fn join_view(prefix: &str, view: &str) -> String {
    if prefix.is_empty() {
        view.to_string()
    } else if view.is_empty() {
        prefix.to_string()
    } else {
        format!("{prefix}/{view}")
    }
}

// ---------------------------------------------------------------------------
// Subgames

/// Depth bound for a subgame, measured from its roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DepthLimit {
    /// Solve to the end of the game.
    None,
    /// Cut after this many player decisions below the root (chance edges are
    /// free).
    PlayerActions(u32),
    /// Cut where the betting-round index has advanced by this much; the
    /// next-round chance node itself becomes the leaf.
    Rounds(u32),
}

/// A subgame: a set of root states (closed under both players' infosets)
/// plus a depth bound. The member set is every state between a root and the
/// depth cut.
#[derive(Debug, Clone)]
pub struct SubgameSpec {
    pub roots: Vec<StateId>,
    pub depth: DepthLimit,
}

impl SubgameSpec {
    /// Subgame spanning one public situation.
    pub fn from_public(game: &GameTree, public: PublicId, depth: DepthLimit) -> SubgameSpec {
        let mut roots = game.public(public).states.clone();
        roots.sort_unstable();
        SubgameSpec { roots, depth }
    }

    /// Whole game as a (possibly depth-limited) subgame.
    pub fn whole_game(game: &GameTree, depth: DepthLimit) -> SubgameSpec {
        SubgameSpec { roots: vec![game.root()], depth }
    }

    /// Check the closure conditions: roots are non-terminal, pairwise
    /// unrelated, and closed under infoset membership for both players.
    pub fn validate(&self, game: &GameTree) -> Result<()> {
        if self.roots.is_empty() {
            return Err(Error::InvalidParameter("subgame has no roots".into()));
        }
        let root_set: std::collections::HashSet<StateId> = self.roots.iter().copied().collect();
        if root_set.len() != self.roots.len() {
            return Err(Error::InvalidParameter("duplicate subgame roots".into()));
        }
        let r0 = self.roots[0];
        for &r in &self.roots {
            if game.is_terminal(r) {
                return Err(Error::InvalidParameter(format!(
                    "subgame root {} is terminal",
                    game.history(r)
                )));
            }
            if game.depth(r) != game.depth(r0)
                || game.player_depth(r) != game.player_depth(r0)
                || game.round(r) != game.round(r0)
            {
                return Err(Error::InvalidParameter(
                    "subgame roots lie at different depths".into(),
                ));
            }
            let mut cur = r;
            while let Some((p, _)) = game.parent(cur) {
                if root_set.contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "subgame root {} lies below root {}",
                        game.history(r),
                        game.history(p)
                    )));
                }
                cur = p;
            }
            for player in [Player::P1, Player::P2] {
                let class = game.class(game.class_of(r, player));
                for &s in &class.states {
                    if !root_set.contains(&s) {
                        return Err(Error::ClosureViolation(format!(
                            "state {} shares {player} infoset {} with root {} but is not a root",
                            game.history(s),
                            class.key,
                            game.history(r)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// All member states plus the non-terminal cut states ("leaves"). Roots
    /// appear in `members`; every leaf also appears in `members`.
    pub fn expand_members(&self, game: &GameTree) -> (Vec<StateId>, Vec<StateId>) {
        let mut members = Vec::new();
        let mut leaves = Vec::new();
        let mut stack: Vec<StateId> = self.roots.iter().rev().copied().collect();
        while let Some(s) = stack.pop() {
            members.push(s);
            if game.is_terminal(s) {
                continue;
            }
            if self.is_leaf(game, s) {
                leaves.push(s);
                continue;
            }
            for c in game.children(s) {
                stack.push(c);
            }
        }
        (members, leaves)
    }

    /// Whether a non-terminal member state sits on the depth cut.
    pub fn is_leaf(&self, game: &GameTree, s: StateId) -> bool {
        let root = self.roots[0];
        match self.depth {
            DepthLimit::None => false,
            DepthLimit::PlayerActions(k) => {
                (game.player_depth(s) - game.player_depth(root)) as u32 >= k
            }
            DepthLimit::Rounds(k) => (game.round(s) - game.round(root)) as u32 >= k,
        }
    }
}
