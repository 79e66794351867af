//! `dlsolve resolve` — serve one re-solving agent over a newline-delimited
//! protocol on stdin/stdout, so external drivers can seat it in a match.
//!
//! Requests, one per line, space-separated:
//!
//! ```text
//! new_hand <seed> <p1|p2>          -> ok
//! observe <chance|p1|p2> <view> <public>  -> ok
//! act                              -> act <label>
//! quit                             -> ok (server exits)
//! ```
//!
//! Hidden information in an observation is the literal token `?`. Failed
//! requests answer `error category=<category>: <message>` and the server
//! keeps listening; the driver decides what to do. End of input ends the
//! session cleanly.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use dlsolve::resolve::{Actor, Agent, Observation, ResolvingAgent};
use dlsolve::strategy::StrategyProfile;
use dlsolve::{Error, Result};

use crate::cmd::matches::policy_from;
use crate::cmd::values::parse_player;
use crate::games::build_game;
use crate::Ctx;

#[derive(clap::Args)]
pub struct Args {
    /// Blueprint strategy file backing the agent.
    #[arg(long)]
    pub blueprint: PathBuf,

    /// Solver iterations per early-round depth-limited solve.
    #[arg(long, default_value_t = 400)]
    pub early_iters: u32,

    /// Solver iterations per endgame or gadget solve.
    #[arg(long, default_value_t = 400)]
    pub endgame_iters: u32,

    /// Depth limit of early-round solves, in betting rounds.
    #[arg(long, default_value_t = 1)]
    pub depth_rounds: u32,

    /// Extra opponent payoff added to gadget fallbacks.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,

    /// Cap continuation values at the blueprint's before solving.
    #[arg(long)]
    pub weaken: bool,

    /// Append every request and reply to this file.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

fn parse_actor(token: &str) -> Result<Actor> {
    if token == "chance" {
        Ok(Actor::Chance)
    } else {
        Ok(Actor::Seat(parse_player(token)?))
    }
}

fn dispatch(agent: &mut ResolvingAgent, line: &str) -> Result<String> {
    let mut parts = line.split_whitespace();
    let verb = parts
        .next()
        .ok_or_else(|| Error::ProtocolViolation("empty request".into()))?;
    let mut take = |what: &str| {
        parts.next().ok_or_else(|| {
            Error::ProtocolViolation(format!("{verb} is missing its {what} token"))
        })
    };
    let reply = match verb {
        "new_hand" => {
            let seed = take("seed")?
                .parse::<u64>()
                .map_err(|e| Error::Parse(format!("bad seed: {e}")))?;
            let seat = parse_player(take("seat")?)?;
            agent.new_hand(seed, seat)?;
            "ok".to_string()
        }
        "observe" => {
            let obs = Observation {
                actor: parse_actor(take("actor")?)?,
                view: take("view")?.to_string(),
                public: take("public")?.to_string(),
            };
            agent.observe(&obs)?;
            "ok".to_string()
        }
        "act" => format!("act {}", agent.act()?),
        "quit" => "ok".to_string(),
        other => {
            return Err(Error::ProtocolViolation(format!("unknown request {other}")))
        }
    };
    if parts.next().is_some() {
        return Err(Error::ProtocolViolation(format!("{verb} got extra tokens")));
    }
    Ok(reply)
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let (descriptor, game) = build_game(&ctx.config)?;
    let blueprint = StrategyProfile::load(&args.blueprint)?;
    let policy = policy_from(
        args.early_iters,
        args.endgame_iters,
        args.depth_rounds,
        args.margin,
        args.weaken,
        ctx.seed,
    );
    let mut agent = ResolvingAgent::new(&game, blueprint, policy)?;

    let mut log = match &args.transcript {
        Some(path) => Some(std::fs::File::create(path)?),
        None => None,
    };
    let mut note = |prefix: &str, line: &str| -> Result<()> {
        if let Some(f) = log.as_mut() {
            writeln!(f, "{prefix}{line}")?;
        }
        Ok(())
    };

    let stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "ready game={}", descriptor.id())?;
    stdout.flush()?;
    for line in stdin.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        note("< ", &line)?;
        let reply = match dispatch(&mut agent, &line) {
            Ok(reply) => reply,
            Err(e) => format!("error category={}: {e}", e.category()),
        };
        note("> ", &reply)?;
        writeln!(stdout, "{reply}")?;
        stdout.flush()?;
        if line.trim() == "quit" {
            break;
        }
    }
    Ok(())
}
