//! Battle-log evaluation pipeline.
//!
//! A match log is sliced into battle windows around `fire` events; users
//! present long enough in a window may vote on the users their detectors
//! flagged. Per-match dubious scores are then split into folds by match,
//! and each fold gets the accuracy-maximizing threshold.

mod events;
pub mod fixture;
mod kfold;
mod segment;
mod threshold;
mod votes;

pub use events::{parse_event_log, write_event_log, EventKind, EventRecord, EVENT_LOG_HEADER};
pub use kfold::kfold_split;
pub use segment::{
    eligible_voters, segment_battles, BattleWindow, EligibilityConfig, MinParticipation,
    Participant,
};
pub use threshold::{select_threshold, standardize, ThresholdChoice};
pub use votes::{run_battle_votes, BallotSource, DetectorPanel};
