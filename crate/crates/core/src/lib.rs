//! Solver toolkit for two-player zero-sum imperfect-information games.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`game`] — immutable game trees for the built-in benchmark games
//!   (biased rock-paper-scissors, Kuhn, Leduc, scaled no-limit flop hold'em),
//!   addressed by canonical history strings.
//! * [`strategy`] — behavioral strategies, expected values, beliefs, biasing
//!   and mixing operations, and strategy persistence.
//! * [`cfr`] — regret-minimization solvers: vanilla CFR, a tuned CFR+ with
//!   regret discounting and delayed linear averaging, and external-sampling
//!   Monte Carlo CFR.
//! * [`best_response`] — exact best responses and exploitability reports.
//! * [`depth_limited`] — depth-limited subgames whose leaves are replaced by
//!   an opponent choice among continuation strategies, plus generators for
//!   those continuation sets and their value tables.
//! * [`resolve`] — safe (gadget-based) and unsafe nested subgame re-solving,
//!   off-tree action handling, and the agents built from these pieces.
//! * [`harness`] — duplicate-dealing match play and experiment drivers.

pub mod best_response;
pub mod cfr;
pub mod depth_limited;
pub mod error;
pub mod game;
pub mod harness;
pub mod resolve;
pub mod strategy;

pub use error::{Error, Result};
