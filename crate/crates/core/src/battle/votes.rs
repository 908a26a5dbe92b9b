use std::collections::BTreeMap;

use rand::Rng;

use crate::consensus::{Scoreboard, Weights};
use crate::detection::{apply_tactic, oracle_detect, DetectorConfig, Tactic};
use crate::error::{Error, Result};
use crate::fps::{fps_do_vote, Tally};
use crate::types::{Ballot, Role, UserId, Verdict};

use super::segment::{eligible_voters, BattleWindow, EligibilityConfig};

/// Supplies what a voter submits about a target; `None` is an abstention.
pub trait BallotSource {
    fn ballot(&mut self, voter: UserId, target: UserId) -> Option<Verdict>;
}

impl<F: FnMut(UserId, UserId) -> Option<Verdict>> BallotSource for F {
    fn ballot(&mut self, voter: UserId, target: UserId) -> Option<Verdict> {
        self(voter, target)
    }
}

/// One vote round per flagged participant, with eligible voters only.
/// Targets need not be eligible themselves. Rounds run in user order.
pub fn run_battle_votes<S: BallotSource + ?Sized>(
    window: &BattleWindow,
    flags: &BTreeMap<UserId, bool>,
    board: &mut Scoreboard,
    source: &mut S,
    cfg: &EligibilityConfig,
    w: &Weights,
) -> Result<Vec<(UserId, Tally)>> {
    let voters = eligible_voters(window, cfg);
    let mut out = Vec::new();
    for target in window.users() {
        if !flags.get(&target).copied().unwrap_or(false) {
            continue;
        }
        let ballots = voters
            .iter()
            .filter_map(|&v| source.ballot(v, target).map(|verdict| Ballot::new(v, target, verdict)))
            .collect();
        out.push((target, fps_do_vote(board, target, ballots, w)?));
    }
    Ok(out)
}

/// Every voter's detector run on every participant of one battle.
///
/// Flags come from honest detector outputs; submitted ballots go through the
/// voter's tactic.
#[derive(Clone, Debug, Default)]
pub struct DetectorPanel {
    honest: BTreeMap<(UserId, UserId), Verdict>,
    submitted: BTreeMap<(UserId, UserId), Verdict>,
}

impl DetectorPanel {
    pub fn evaluate<R: Rng + ?Sized>(
        voters: &[UserId],
        targets: &[UserId],
        roles: &BTreeMap<UserId, Role>,
        cfg: &DetectorConfig,
        tactic: Tactic,
        rng: &mut R,
    ) -> Result<Self> {
        let role = |u: UserId| roles.get(&u).copied().ok_or(Error::UnknownUser(u));
        let mut panel = DetectorPanel::default();
        for &v in voters {
            let voter_role = role(v)?;
            for &t in targets {
                let target_role = role(t)?;
                let honest = oracle_detect(cfg, target_role, rng);
                let sent = apply_tactic(tactic, voter_role, target_role, v == t, honest, rng);
                panel.honest.insert((v, t), honest);
                panel.submitted.insert((v, t), sent);
            }
        }
        Ok(panel)
    }

    /// A user is flagged when any other voter's detector called it a cheater.
    pub fn flags(&self) -> BTreeMap<UserId, bool> {
        let mut flags = BTreeMap::new();
        for (&(v, t), &verdict) in &self.honest {
            let f = flags.entry(t).or_insert(false);
            *f |= v != t && verdict.is_cheater();
        }
        flags
    }
}

impl BallotSource for DetectorPanel {
    fn ballot(&mut self, voter: UserId, target: UserId) -> Option<Verdict> {
        self.submitted.get(&(voter, target)).copied()
    }
}
