//! Building match participants from compact command-line descriptions.

use std::path::PathBuf;

use dlsolve::game::{GameTree, Player};
use dlsolve::resolve::{
    Agent, PolicyAgent, ResolverPolicy, ResolvingAgent, ScriptedAgent,
};
use dlsolve::strategy::{BehavioralStrategy, StrategyProfile};
use dlsolve::{Error, Result};

/// How one seat plays, written as `kind` or `kind:argument`:
///
/// * `blueprint:<strategy file>` — samples the stored profile directly.
/// * `resolver:<strategy file>`  — re-solves subgames as the hand unfolds,
///   with the stored profile as its blueprint.
/// * `uniform`                   — uniform random over every legal menu.
/// * `fold`                      — folds whenever possible, otherwise the
///   first legal action.
/// * `script:<a,b,c>`            — replays fixed labels; for protocol tests.
#[derive(Debug, Clone)]
pub enum AgentSpec {
    Blueprint(PathBuf),
    Resolver(PathBuf),
    Uniform,
    Fold,
    Script(Vec<String>),
}

impl AgentSpec {
    pub fn parse(text: &str) -> Result<AgentSpec> {
        let (kind, arg) = match text.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (text, None),
        };
        let needs = |what: &str| {
            Error::InvalidParameter(format!("agent kind {kind} needs :{what}"))
        };
        match kind {
            "blueprint" => Ok(AgentSpec::Blueprint(arg.ok_or_else(|| needs("file"))?.into())),
            "resolver" => Ok(AgentSpec::Resolver(arg.ok_or_else(|| needs("file"))?.into())),
            "uniform" => Ok(AgentSpec::Uniform),
            "fold" => Ok(AgentSpec::Fold),
            "script" => Ok(AgentSpec::Script(
                arg.ok_or_else(|| needs("labels"))?.split(',').map(str::to_string).collect(),
            )),
            other => Err(Error::InvalidParameter(format!(
                "unknown agent kind {other}; use blueprint:, resolver:, uniform, fold, or script:"
            ))),
        }
    }

    pub fn build<'a>(
        &self,
        game: &'a GameTree,
        policy: &ResolverPolicy,
    ) -> Result<Box<dyn Agent + 'a>> {
        Ok(match self {
            AgentSpec::Blueprint(path) => {
                Box::new(PolicyAgent::new(game, StrategyProfile::load(path)?))
            }
            AgentSpec::Resolver(path) => Box::new(ResolvingAgent::new(
                game,
                StrategyProfile::load(path)?,
                policy.clone(),
            )?),
            AgentSpec::Uniform => Box::new(PolicyAgent::new(
                game,
                StrategyProfile::new(
                    BehavioralStrategy::uniform(game, Player::P1),
                    BehavioralStrategy::uniform(game, Player::P2),
                ),
            )),
            AgentSpec::Fold => Box::new(PolicyAgent::new(game, folding_profile(game))),
            AgentSpec::Script(labels) => Box::new(ScriptedAgent::new(labels.clone())),
        })
    }
}

impl std::fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentSpec::Blueprint(p) => write!(f, "blueprint:{}", p.display()),
            AgentSpec::Resolver(p) => write!(f, "resolver:{}", p.display()),
            AgentSpec::Uniform => f.write_str("uniform"),
            AgentSpec::Fold => f.write_str("fold"),
            AgentSpec::Script(labels) => write!(f, "script:{}", labels.join(",")),
        }
    }
}

/// Deterministic profile that folds wherever the menu allows and otherwise
/// takes the first action.
fn folding_profile(game: &GameTree) -> StrategyProfile {
    let side = |player| {
        let mut strat = BehavioralStrategy::new(player);
        for c in game.acting_classes(player) {
            let class = game.class(c);
            let idx = class
                .actions
                .iter()
                .position(|&a| game.action(a).label == "f")
                .unwrap_or(0);
            let mut row = vec![0.0; class.actions.len()];
            row[idx] = 1.0;
            strat.set(class.key.clone(), row);
        }
        strat
    };
    StrategyProfile::new(side(Player::P1), side(Player::P2))
}
