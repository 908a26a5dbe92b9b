//! Validity/dubious scoring over majority-decided vote rounds.
//!
//! Each vote round collects ballots about one target. The majority of those
//! ballots is taken as ground truth. Every voter's validity then moves by
//! `±w_v` depending on agreement, corrected by `hist · w_h` where `hist` is
//! the voter's (agreements − disagreements) over its last ten rounds. The
//! target's dubious score receives `+V` for every "cheater" ballot and `−V`
//! for every "normal" ballot, `V` being the voter's freshly updated validity.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Ballot, Role, UserId, Verdict};

/// Number of past agreements/disagreements remembered per user.
pub const HISTORY_CAPACITY: usize = 10;

/// Step sizes of the validity update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Reward/penalty for agreeing/disagreeing with the majority.
    pub w_v: f64,
    /// Per-unit weight of the history balance.
    pub w_h: f64,
}

impl Weights {
    /// Tuned so that a user with eight agreements and two disagreements in
    /// the queue keeps the same validity after one more disagreement.
    pub const DEFAULT: Weights = Weights { w_v: 0.05, w_h: 0.01 };

    pub fn new(w_v: f64, w_h: f64) -> Result<Self> {
        if !(w_v > 0.0 && w_h > 0.0 && w_v.is_finite() && w_h.is_finite()) {
            return Err(Error::config("weights must be finite and strictly positive"));
        }
        if w_h > w_v {
            return Err(Error::config("history weight must not exceed validity weight"));
        }
        Ok(Weights { w_v, w_h })
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::DEFAULT
    }
}

/// Bounded FIFO of past agreement flags, oldest first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History(VecDeque<bool>);

impl History {
    pub fn new() -> Self {
        History(VecDeque::with_capacity(HISTORY_CAPACITY))
    }

    /// Appends a flag, evicting the oldest entry when full.
    pub fn push(&mut self, agreed: bool) {
        if self.0.len() == HISTORY_CAPACITY {
            self.0.pop_front();
        }
        self.0.push_back(agreed);
    }

    /// Agreements minus disagreements.
    pub fn balance(&self) -> i32 {
        self.0
            .iter()
            .map(|&agreed| if agreed { 1 } else { -1 })
            .sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    /// `T`/`F` string, oldest first.
    pub fn to_tf_string(&self) -> String {
        self.iter().map(|a| if a { 'T' } else { 'F' }).collect()
    }

    pub fn from_tf_str(s: &str) -> Option<Self> {
        let mut h = History::new();
        for c in s.chars() {
            match c {
                'T' => h.push(true),
                'F' => h.push(false),
                _ => return None,
            }
        }
        (s.len() <= HISTORY_CAPACITY).then_some(h)
    }
}

/// One user's scores within a match.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRecord {
    pub validity: f64,
    pub dubious: f64,
    pub history: History,
}

impl ScoreRecord {
    pub fn fresh() -> Self {
        ScoreRecord {
            validity: 1.0,
            dubious: 0.0,
            history: History::new(),
        }
    }

    /// Applies one validity update for a ballot that agreed (or not) with
    /// the round's ground truth.
    pub fn record_vote(&mut self, agreed: bool, w: &Weights) {
        let hist = f64::from(self.history.balance());
        let step = if agreed { w.w_v } else { -w.w_v };
        self.validity = (self.validity + step + hist * w.w_h).clamp(0.0, 1.0);
        self.history.push(agreed);
    }
}

impl Default for ScoreRecord {
    fn default() -> Self {
        ScoreRecord::fresh()
    }
}

/// Per-user score records for one match.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Scoreboard {
    records: BTreeMap<UserId, ScoreRecord>,
}

impl Scoreboard {
    /// Fresh records for every user. Rejects an empty or repeated user list.
    pub fn new<I>(users: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<UserId>,
    {
        let mut records = BTreeMap::new();
        for u in users {
            let u = u.into();
            if records.insert(u, ScoreRecord::fresh()).is_some() {
                return Err(Error::DuplicateUser(u));
            }
        }
        if records.is_empty() {
            return Err(Error::config("a scoreboard needs at least one user"));
        }
        Ok(Scoreboard { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, user: UserId) -> bool {
        self.records.contains_key(&user)
    }

    pub fn get(&self, user: UserId) -> Option<&ScoreRecord> {
        self.records.get(&user)
    }

    pub(crate) fn record_mut(&mut self, user: UserId) -> Result<&mut ScoreRecord> {
        self.records.get_mut(&user).ok_or(Error::UnknownUser(user))
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserId, &ScoreRecord)> {
        self.records.iter().map(|(&u, r)| (u, r))
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.records.keys().copied()
    }

    pub fn dubious_scores(&self) -> BTreeMap<UserId, f64> {
        self.iter().map(|(u, r)| (u, r.dubious)).collect()
    }

    /// Writes the `user_id,validity,dubious,history` table.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "user_id,validity,dubious,history")?;
        for (u, r) in self.iter() {
            writeln!(
                out,
                "{},{:.6},{:.6},{}",
                u,
                r.validity,
                r.dubious,
                r.history.to_tf_string()
            )?;
        }
        Ok(())
    }

    /// Reads a table written by [`Scoreboard::write_csv`]. Scores come back
    /// rounded to six decimals.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next().transpose()? {
            Some(h) if h.trim_end() == "user_id,validity,dubious,history" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: "expected header user_id,validity,dubious,history".into(),
                })
            }
        }
        let mut records = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: &str| Error::Parse {
                line: lineno,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let user = UserId(fields[0].parse().map_err(|_| bad("bad user_id"))?);
            let validity: f64 = fields[1].parse().map_err(|_| bad("bad validity"))?;
            let dubious: f64 = fields[2].parse().map_err(|_| bad("bad dubious"))?;
            let history = History::from_tf_str(fields[3]).ok_or_else(|| bad("bad history"))?;
            if !(0.0..=1.0).contains(&validity) {
                return Err(bad("validity out of [0,1]"));
            }
            let rec = ScoreRecord {
                validity,
                dubious,
                history,
            };
            if records.insert(user, rec).is_some() {
                return Err(Error::DuplicateUser(user));
            }
        }
        Ok(Scoreboard { records })
    }
}

/// Majority verdict: cheater only on a strict majority of cheater ballots.
/// Ties and empty input resolve to normal.
pub fn ground_truth(ballots: &[Ballot]) -> Result<Verdict> {
    if let Some(first) = ballots.first() {
        if let Some(b) = ballots.iter().find(|b| b.target != first.target) {
            return Err(Error::MixedTargets {
                voter: b.voter,
                expected: first.target,
                found: b.target,
            });
        }
    }
    let cheater = ballots.iter().filter(|b| b.verdict.is_cheater()).count();
    Ok(Verdict::from_bool(cheater > ballots.len() - cheater))
}

/// All ballots about one target plus their majority verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteRound {
    target: UserId,
    ballots: Vec<Ballot>,
    ground_truth: Verdict,
}

impl VoteRound {
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
        let ground_truth = ground_truth(&ballots)?;
        Ok(VoteRound {
            target,
            ballots,
            ground_truth,
        })
    }

    /// Caller guarantees one target and distinct voters.
    pub(crate) fn from_valid_ballots(target: UserId, ballots: Vec<Ballot>) -> Self {
        debug_assert!(ballots.iter().all(|b| b.target == target));
        let cheater = ballots.iter().filter(|b| b.verdict.is_cheater()).count();
        let ground_truth = Verdict::from_bool(cheater > ballots.len() - cheater);
        VoteRound {
            target,
            ballots,
            ground_truth,
        }
    }

    pub fn target(&self) -> UserId {
        self.target
    }

    pub fn ballots(&self) -> &[Ballot] {
        &self.ballots
    }

    pub fn ground_truth(&self) -> Verdict {
        self.ground_truth
    }
}

/// Applies one round to the board. Either every update happens or, on an
/// unknown user, none does.
pub fn score_evaluation(board: &mut Scoreboard, round: &VoteRound, w: &Weights) -> Result<()> {
    if !board.contains(round.target) {
        return Err(Error::UnknownUser(round.target));
    }
    if let Some(b) = round.ballots.iter().find(|b| !board.contains(b.voter)) {
        return Err(Error::UnknownUser(b.voter));
    }
    for b in &round.ballots {
        let voter = board.record_mut(b.voter)?;
        voter.record_vote(b.verdict == round.ground_truth, w);
        let v = voter.validity;
        let target = board.record_mut(round.target)?;
        if b.verdict.is_cheater() {
            target.dubious += v;
        } else {
            target.dubious -= v;
        }
    }
    Ok(())
}

/// Applies rounds in order.
pub fn do_vote(board: &mut Scoreboard, rounds: &[VoteRound], w: &Weights) -> Result<()> {
    rounds
        .iter()
        .try_for_each(|round| score_evaluation(board, round, w))
}

/// Labels every user: cheater iff its dubious score is strictly above the
/// threshold.
pub fn classify(board: &Scoreboard, threshold: f64) -> BTreeMap<UserId, Role> {
    board
        .iter()
        .map(|(u, r)| (u, label(r.dubious, threshold)))
        .collect()
}

/// [`classify`] over a bare score map.
pub fn classify_scores(scores: &BTreeMap<UserId, f64>, threshold: f64) -> BTreeMap<UserId, Role> {
    scores
        .iter()
        .map(|(&u, &d)| (u, label(d, threshold)))
        .collect()
}

fn label(dubious: f64, threshold: f64) -> Role {
    if dubious > threshold {
        Role::Cheater
    } else {
        Role::Normal
    }
}
