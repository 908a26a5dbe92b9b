//! Client-side detector model and adversarial ballot tactics.
//!
//! The detector is a Bernoulli oracle: it reports a target's true role with
//! probability `model_acc` and the opposite otherwise. Cheating clients may
//! then tamper with what they submit, according to a [`Tactic`]. A tampered
//! ("rigged") ballot is a knowing lie: it asserts the opposite of the
//! target's true role, whatever the detector said.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fps::FpsVoteRound;
use crate::types::{Ballot, Role, UserId, Verdict};

/// How cheating clients treat their ballots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tactic {
    /// Every ballot is the honest detector output.
    #[serde(rename = "none", alias = "without_liar")]
    WithoutLiar,
    /// Each ballot is independently rigged with probability 1/2; the other
    /// half is the honest detector output.
    #[serde(rename = "random", alias = "random_liar")]
    RandomLiar,
    /// A cheater always claims to be normal when judging itself.
    #[serde(rename = "tactical", alias = "tactical_liar")]
    TacticalLiar,
}

impl Tactic {
    pub const ALL: [Tactic; 3] = [Tactic::WithoutLiar, Tactic::RandomLiar, Tactic::TacticalLiar];

    pub fn as_str(self) -> &'static str {
        match self {
            Tactic::WithoutLiar => "none",
            Tactic::RandomLiar => "random",
            Tactic::TacticalLiar => "tactical",
        }
    }
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tactic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "without" | "without_liar" => Ok(Tactic::WithoutLiar),
            "random" | "random_liar" => Ok(Tactic::RandomLiar),
            "tactical" | "tactical_liar" => Ok(Tactic::TacticalLiar),
            other => Err(Error::config(format!(
                "unknown tactic {other:?} (expected none, random or tactical)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    model_acc: f64,
    pub seed: u64,
}

impl DetectorConfig {
    /// Accuracy must lie in `[0.5, 1.0]`; a worse-than-coin detector is
    /// rejected.
    pub fn new(model_acc: f64, seed: u64) -> Result<Self> {
        validate_accuracy(model_acc)?;
        Ok(DetectorConfig { model_acc, seed })
    }

    pub fn model_acc(&self) -> f64 {
        self.model_acc
    }
}

pub(crate) fn validate_accuracy(model_acc: f64) -> Result<()> {
    if (0.5..=1.0).contains(&model_acc) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "model accuracy {model_acc} outside [0.5, 1.0]"
        )))
    }
}

/// One detector evaluation of a target whose true role is `target_role`.
pub fn oracle_detect<R: Rng + ?Sized>(cfg: &DetectorConfig, target_role: Role, rng: &mut R) -> Verdict {
    let truth = target_role.verdict();
    if rng.random_bool(cfg.model_acc) {
        truth
    } else {
        truth.inverted()
    }
}

/// Turns an honest detector output into the ballot a voter submits.
///
/// Exactly one coin is drawn per call whatever the tactic or role, so runs
/// that differ only in tactic see identical detector draws under one seed.
pub fn apply_tactic<R: Rng + ?Sized>(
    tactic: Tactic,
    voter_role: Role,
    target_role: Role,
    is_self: bool,
    honest: Verdict,
    rng: &mut R,
) -> Verdict {
    let rig = rng.random_bool(0.5);
    if voter_role == Role::Normal {
        return honest;
    }
    match tactic {
        Tactic::WithoutLiar => honest,
        Tactic::RandomLiar if rig => target_role.verdict().inverted(),
        Tactic::RandomLiar => honest,
        Tactic::TacticalLiar if is_self => Verdict::Normal,
        Tactic::TacticalLiar => honest,
    }
}

/// Detector evaluation followed by the voter's tactic.
pub(crate) fn ballot_verdict<R: Rng + ?Sized>(
    cfg: &DetectorConfig,
    tactic: Tactic,
    voter_role: Role,
    target_role: Role,
    is_self: bool,
    rng: &mut R,
) -> Verdict {
    let honest = oracle_detect(cfg, target_role, rng);
    apply_tactic(tactic, voter_role, target_role, is_self, honest, rng)
}

/// Every participant ballots on every target, self included. Ballots in
/// each round are ordered by voter id.
pub fn cast_ballots<R: Rng + ?Sized>(
    participants: &[(UserId, Role)],
    targets: &[UserId],
    cfg: &DetectorConfig,
    tactic: Tactic,
    rng: &mut R,
) -> Result<Vec<FpsVoteRound>> {
    let mut voters = participants.to_vec();
    voters.sort_by_key(|&(u, _)| u);
    let role_of = |u: UserId| {
        voters
            .binary_search_by_key(&u, |&(v, _)| v)
            .map(|i| voters[i].1)
            .map_err(|_| Error::UnknownUser(u))
    };
    targets
        .iter()
        .map(|&target| {
            let target_role = role_of(target)?;
            let ballots = voters
                .iter()
                .map(|&(voter, voter_role)| {
                    let verdict =
                        ballot_verdict(cfg, tactic, voter_role, target_role, voter == target, rng);
                    Ballot::new(voter, target, verdict)
                })
                .collect();
            FpsVoteRound::new(target, ballots)
        })
        .collect()
}
