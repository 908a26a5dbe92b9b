//! Consensus-based cheating detection.
//!
//! Clients run a detector against the players they can observe and submit
//! binary ballots ("is this player cheating?") to the server. The server
//! tracks two scores per player: *validity*, a trust weight in `[0, 1]` that
//! grows when a player's ballots agree with the majority and shrinks when
//! they do not, and *dubious*, a signed suspicion accumulator built from
//! validity-weighted ballots.
//!
//! Module map:
//!
//! - [`consensus`]: the base scoring rule and scoreboard.
//! - [`fps`]: the battle-oriented variant (self-ballot skip, gated and
//!   count-weighted dubious updates).
//! - [`detection`]: a stochastic detector oracle and the liar tactics.
//! - [`match_sim`]: single-match simulation and parameter sweeps.
//! - [`battle`]: event-log parsing, battle segmentation, voter eligibility,
//!   k-fold utilities and threshold selection.
//! - [`service`]: multi-day population simulation with cross-match policies.

pub mod battle;
pub mod consensus;
pub mod detection;
pub mod error;
pub mod fps;
pub mod match_sim;
pub mod seed;
pub mod service;
pub mod stats;
mod types;

pub use error::{Error, Result};
pub use types::{Ballot, Role, UserId, Verdict};
