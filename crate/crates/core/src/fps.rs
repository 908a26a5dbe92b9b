//! Battle-oriented consensus variant.
//!
//! Differences from [`crate::consensus`]:
//!
//! - a target's ballot about itself is ignored everywhere;
//! - only users who actually cast a ballot count (abstention is omission);
//! - the target's dubious score moves only when cheater ballots hold a
//!   strict majority *and* at least three non-self ballots were cast;
//! - when it moves, each cheater ballot adds `c/(c+n) · V` and each normal
//!   ballot subtracts `n/(c+n) · V`, so the majority side weighs more.
//!
//! Validity updates happen for every non-self voter whether or not the
//! dubious gate opens.

use std::collections::BTreeSet;

use crate::consensus::{Scoreboard, Weights};
use crate::error::{Error, Result};
use crate::types::{Ballot, UserId, Verdict};

/// Minimum number of non-self ballots (exclusive) before dubious may move.
pub const MIN_VOTERS_EXCLUSIVE: u32 = 2;

/// Result of counting a round's non-self ballots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tally {
    /// Cheater ballots.
    pub c_cnt: u32,
    /// Normal ballots.
    pub n_cnt: u32,
    pub ground_truth: Verdict,
}

impl Tally {
    pub fn total(&self) -> u32 {
        self.c_cnt + self.n_cnt
    }

    /// Whether this round may change the target's dubious score.
    pub fn gate_open(&self) -> bool {
        self.c_cnt > self.n_cnt && self.total() > MIN_VOTERS_EXCLUSIVE
    }
}

/// Ballots about one flagged target, counted at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct FpsVoteRound {
    target: UserId,
    ballots: Vec<Ballot>,
    tally: Tally,
}

impl FpsVoteRound {
    /// Ballots may include the target's own ballot; it is kept but skipped.
    pub fn new(target: impl Into<UserId>, ballots: Vec<Ballot>) -> Result<Self> {
        let target = target.into();
        let mut seen = BTreeSet::new();
        for b in &ballots {
            if b.target != target {
                return Err(Error::MixedTargets {
                    voter: b.voter,
                    expected: target,
                    found: b.target,
                });
            }
            if !seen.insert(b.voter) {
                return Err(Error::DuplicateBallot {
                    voter: b.voter,
                    target,
                });
            }
        }
        let tally = tally_ballots(target, &ballots);
        Ok(FpsVoteRound {
            target,
            ballots,
            tally,
        })
    }

    pub fn target(&self) -> UserId {
        self.target
    }

    pub fn ballots(&self) -> &[Ballot] {
        &self.ballots
    }

    pub fn tally(&self) -> Tally {
        self.tally
    }

    pub fn c_cnt(&self) -> u32 {
        self.tally.c_cnt
    }

    pub fn n_cnt(&self) -> u32 {
        self.tally.n_cnt
    }

    fn voters(&self) -> impl Iterator<Item = &Ballot> {
        self.ballots.iter().filter(|b| !b.is_self())
    }
}

fn tally_ballots(target: UserId, ballots: &[Ballot]) -> Tally {
    let (mut c_cnt, mut n_cnt) = (0, 0);
    for b in ballots.iter().filter(|b| b.voter != target) {
        match b.verdict {
            Verdict::Cheater => c_cnt += 1,
            Verdict::Normal => n_cnt += 1,
        }
    }
    Tally {
        c_cnt,
        n_cnt,
        ground_truth: Verdict::from_bool(c_cnt > n_cnt),
    }
}

/// Counts a round's ballots, skipping the self-ballot.
pub fn tally(round: &FpsVoteRound) -> Tally {
    round.tally
}

/// Applies one round. Atomic with respect to unknown users.
pub fn fps_score_evaluation(
    board: &mut Scoreboard,
    round: &FpsVoteRound,
    w: &Weights,
) -> Result<()> {
    if !board.contains(round.target) {
        return Err(Error::UnknownUser(round.target));
    }
    if let Some(b) = round.voters().find(|b| !board.contains(b.voter)) {
        return Err(Error::UnknownUser(b.voter));
    }
    let t = round.tally;
    let gate = t.gate_open();
    let total = f64::from(t.total());
    for b in round.voters() {
        let voter = board.record_mut(b.voter)?;
        voter.record_vote(b.verdict == t.ground_truth, w);
        let v = voter.validity;
        if gate {
            let target = board.record_mut(round.target)?;
            match b.verdict {
                Verdict::Cheater => target.dubious += f64::from(t.c_cnt) / total * v,
                Verdict::Normal => target.dubious -= f64::from(t.n_cnt) / total * v,
            }
        }
    }
    Ok(())
}

/// Runs a single vote round on a flagged target.
pub fn fps_do_vote(
    board: &mut Scoreboard,
    target: impl Into<UserId>,
    ballots: Vec<Ballot>,
    w: &Weights,
) -> Result<Tally> {
    let round = FpsVoteRound::new(target, ballots)?;
    fps_score_evaluation(board, &round, w)?;
    Ok(round.tally)
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: Verdict = Verdict::Cheater;
    const N: Verdict = Verdict::Normal;

    fn round(target: u32, votes: &[(u32, Verdict)]) -> FpsVoteRound {
        let ballots = votes
            .iter()
            .map(|&(v, verdict)| Ballot::new(v, target, verdict))
            .collect();
        FpsVoteRound::new(target, ballots).unwrap()
    }

    fn dubious(board: &Scoreboard, u: u32) -> f64 {
        board.get(UserId(u)).unwrap().dubious
    }

    #[test]
    fn tally_skips_self() {
        let t = tally(&round(9, &[(9, N), (1, C), (2, C)]));
        assert_eq!((t.c_cnt, t.n_cnt, t.ground_truth), (2, 0, C));
        let t = tally(&round(9, &[(1, C), (2, N)]));
        assert_eq!((t.c_cnt, t.n_cnt, t.ground_truth), (1, 1, N));
        let t = tally(&round(9, &[]));
        assert_eq!((t.c_cnt, t.n_cnt, t.ground_truth), (0, 0, N));
    }

    #[test]
    fn two_to_one_majority_weights() {
        let mut board = Scoreboard::new([1u32, 2, 3, 9]).unwrap();
        fps_score_evaluation(&mut board, &round(9, &[(1, C), (2, C), (3, N)]), &Weights::DEFAULT)
            .unwrap();
        // voter 3 disagreed, so it is counted at 0.95
        let expected = 2.0 / 3.0 + 2.0 / 3.0 - 1.0 / 3.0 * 0.95;
        assert!((dubious(&board, 9) - expected).abs() < 1e-12);
    }

    #[test]
    fn two_to_one_with_unit_validities() {
        // validity of the dissenting voter sits at 1.0 after its update when
        // its history is long enough
        let mut board = Scoreboard::new([1u32, 2, 3, 9]).unwrap();
        let w = Weights::DEFAULT;
        {
            let r = board.record_mut(UserId(3)).unwrap();
            for _ in 0..10 {
                r.record_vote(true, &w);
            }
        }
        fps_score_evaluation(&mut board, &round(9, &[(1, C), (2, C), (3, N)]), &w).unwrap();
        assert_eq!(board.get(UserId(3)).unwrap().validity, 1.0);
        assert!((dubious(&board, 9) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_closes_gate_but_updates_validity() {
        let mut board = Scoreboard::new([1u32, 2, 9]).unwrap();
        fps_score_evaluation(&mut board, &round(9, &[(1, C), (2, N)]), &Weights::DEFAULT)
            .unwrap();
        assert_eq!(dubious(&board, 9), 0.0);
        assert_eq!(board.get(UserId(1)).unwrap().validity, 0.95);
        assert_eq!(board.get(UserId(2)).unwrap().validity, 1.0);
    }

    #[test]
    fn unanimous_three() {
        let mut board = Scoreboard::new([1u32, 2, 3, 9]).unwrap();
        fps_score_evaluation(&mut board, &round(9, &[(1, C), (2, C), (3, C)]), &Weights::DEFAULT)
            .unwrap();
        assert_eq!(dubious(&board, 9), 3.0);
    }

    #[test]
    fn self_ballot_touches_nothing() {
        let mut board = Scoreboard::new([1u32, 2, 3, 9]).unwrap();
        let before = board.get(UserId(9)).unwrap().clone();
        fps_score_evaluation(&mut board, &round(9, &[(9, N), (1, C), (2, C), (3, C)]), &Weights::DEFAULT)
            .unwrap();
        let after = board.get(UserId(9)).unwrap();
        assert_eq!(after.validity, before.validity);
        assert_eq!(after.history, before.history);
    }

    #[test]
    fn single_voter_gates_off() {
        let mut board = Scoreboard::new([1u32, 9]).unwrap();
        let t = fps_do_vote(&mut board, 9u32, vec![Ballot::new(1, 9, C)], &Weights::DEFAULT)
            .unwrap();
        assert_eq!(t.ground_truth, C);
        assert!(!t.gate_open());
        assert_eq!(dubious(&board, 9), 0.0);
        assert_eq!(board.get(UserId(1)).unwrap().history.len(), 1);
    }

    #[test]
    fn unknown_voter_errors() {
        let mut board = Scoreboard::new([1u32, 9]).unwrap();
        let err = fps_do_vote(
            &mut board,
            9u32,
            vec![Ballot::new(1, 9, C), Ballot::new(4, 9, C)],
            &Weights::DEFAULT,
        );
        assert!(matches!(err, Err(Error::UnknownUser(UserId(4)))));
    }
}
