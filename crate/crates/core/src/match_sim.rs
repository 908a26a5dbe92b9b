//! Independent-match simulation and the two parameter sweeps.
//!
//! In every vote of a simulated match each user is a target and every other
//! user submits a ballot on it; a user's ballot about itself is drawn but
//! discarded. Scores start fresh for every match.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{classify, score_evaluation, Scoreboard, VoteRound, Weights};
use crate::detection::{ballot_verdict, validate_accuracy, DetectorConfig, Tactic};
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::Summary;
use crate::types::{Ballot, Role, UserId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub vote_count: u32,
    pub benign_num: u32,
    pub cheater_num: u32,
    pub model_acc: f64,
    pub tactic: Tactic,
    pub seed: u64,
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vote_count == 0 {
            return Err(Error::config("vote_count must be at least 1"));
        }
        if self.benign_num + self.cheater_num < 2 {
            return Err(Error::config("a match needs at least two users"));
        }
        validate_accuracy(self.model_acc)
    }

    /// Normal users take ids `0..benign_num`, cheaters the ids after them.
    pub fn roster(&self) -> Vec<(UserId, Role)> {
        roster(self.benign_num, self.cheater_num)
    }
}

pub(crate) fn roster(benign: u32, cheaters: u32) -> Vec<(UserId, Role)> {
    (0..benign)
        .map(|u| (UserId(u), Role::Normal))
        .chain((benign..benign + cheaters).map(|u| (UserId(u), Role::Cheater)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchOutcome {
    pub board: Scoreboard,
    pub roles: BTreeMap<UserId, Role>,
    /// Threshold-zero labels.
    pub labels: BTreeMap<UserId, Role>,
}

impl MatchOutcome {
    pub fn accuracy(&self) -> f64 {
        accuracy(&self.labels, &self.roles).expect("labels cover the roster")
    }

    /// Final dubious scores split by true role: `(cheaters, normals)`.
    pub fn dubious_by_role(&self) -> (Vec<f64>, Vec<f64>) {
        let mut cheaters = Vec::new();
        let mut normals = Vec::new();
        for (u, r) in self.board.iter() {
            match self.roles[&u] {
                Role::Cheater => cheaters.push(r.dubious),
                Role::Normal => normals.push(r.dubious),
            }
        }
        (cheaters, normals)
    }

    /// Writes `user_id,role,validity,dubious,label`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "user_id,role,validity,dubious,label")?;
        for (u, r) in self.board.iter() {
            writeln!(
                out,
                "{},{},{:.6},{:.6},{}",
                u, self.roles[&u], r.validity, r.dubious, self.labels[&u]
            )?;
        }
        Ok(())
    }
}

/// Plays `vote_count` rounds on a fresh board. `vote_count == 0` returns the
/// fresh board untouched.
pub fn play_match<R: Rng + ?Sized>(
    roster: &[(UserId, Role)],
    vote_count: u32,
    detector: &DetectorConfig,
    tactic: Tactic,
    weights: &Weights,
    rng: &mut R,
) -> Result<Scoreboard> {
    let mut board = Scoreboard::new(roster.iter().map(|&(u, _)| u))?;
    let mut users = roster.to_vec();
    users.sort_by_key(|&(u, _)| u);
    let mut ballots = Vec::with_capacity(users.len());
    for _ in 0..vote_count {
        for &(target, target_role) in &users {
            // Same draw sequence as `cast_ballots`: the self-ballot is drawn, then dropped.
            ballots.clear();
            for &(voter, voter_role) in &users {
                let is_self = voter == target;
                let verdict = ballot_verdict(detector, tactic, voter_role, target_role, is_self, rng);
                if !is_self {
                    ballots.push(Ballot::new(voter, target, verdict));
                }
            }
            let round = VoteRound::from_valid_ballots(target, ballots.clone());
            score_evaluation(&mut board, &round, weights)?;
        }
    }
    Ok(board)
}

pub fn run_match(cfg: &MatchConfig) -> Result<MatchOutcome> {
    cfg.validate()?;
    let roster = cfg.roster();
    let detector = DetectorConfig::new(cfg.model_acc, cfg.seed)?;
    let mut rng = seed::stream(cfg.seed, "match", 0);
    let board = play_match(
        &roster,
        cfg.vote_count,
        &detector,
        cfg.tactic,
        &Weights::DEFAULT,
        &mut rng,
    )?;
    let labels = classify(&board, 0.0);
    Ok(MatchOutcome {
        board,
        roles: roster.into_iter().collect(),
        labels,
    })
}

/// Fraction of users whose label equals their true role.
pub fn accuracy(labels: &BTreeMap<UserId, Role>, truth: &BTreeMap<UserId, Role>) -> Result<f64> {
    if labels.len() != truth.len() || labels.keys().ne(truth.keys()) {
        return Err(Error::KeyMismatch);
    }
    if labels.is_empty() {
        return Err(Error::config("accuracy of an empty population"));
    }
    let correct = labels
        .iter()
        .zip(truth.values())
        .filter(|((_, l), t)| l == t)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Final-dubious distributions per role for one (accuracy, tactic) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationRow {
    pub model_acc: f64,
    pub tactic: Tactic,
    pub matches: u32,
    pub cheater: Summary,
    pub normal: Summary,
    /// Threshold-zero misclassifications over all users and matches.
    pub misclassified: u64,
}

/// Two normal users against one cheater, one vote per match. Match `i` of
/// every cell uses the same derived seed.
pub fn experiment_q1_1(
    acc_grid: &[f64],
    matches_per_cell: u32,
    tactics: &[Tactic],
    seed: u64,
) -> Result<Vec<SeparationRow>> {
    for &acc in acc_grid {
        validate_accuracy(acc)?;
    }
    if matches_per_cell == 0 {
        return Err(Error::config("matches_per_cell must be positive"));
    }
    let mut rows = Vec::new();
    for &tactic in tactics {
        for &model_acc in acc_grid {
            let outcomes: Vec<MatchOutcome> = (0..matches_per_cell)
                .into_par_iter()
                .map(|i| {
                    run_match(&MatchConfig {
                        vote_count: 1,
                        benign_num: 2,
                        cheater_num: 1,
                        model_acc,
                        tactic,
                        seed: seed::derive(seed, "q1_1", u64::from(i)),
                    })
                })
                .collect::<Result<_>>()?;
            let mut cheater = Vec::new();
            let mut normal = Vec::new();
            let mut misclassified = 0u64;
            for o in &outcomes {
                let (c, n) = o.dubious_by_role();
                cheater.extend(c);
                normal.extend(n);
                misclassified += o.labels.iter().filter(|(u, l)| o.roles[u] != **l).count() as u64;
            }
            rows.push(SeparationRow {
                model_acc,
                tactic,
                matches: matches_per_cell,
                cheater: Summary::of(&cheater).expect("one cheater per match"),
                normal: Summary::of(&normal).expect("two normals per match"),
                misclassified,
            });
        }
    }
    Ok(rows)
}

/// Parameters of the accuracy-grid sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracySweep {
    pub acc_grid: Vec<f64>,
    pub ratio_grid: Vec<f64>,
    pub total_users: u32,
    pub vote_count: u32,
    pub matches_per_cell: u32,
    pub tactics: Vec<Tactic>,
    pub seed: u64,
}

impl AccuracySweep {
    pub fn new(acc_grid: Vec<f64>, ratio_grid: Vec<f64>, tactics: Vec<Tactic>, seed: u64) -> Self {
        AccuracySweep {
            acc_grid,
            ratio_grid,
            total_users: 100,
            vote_count: 1,
            matches_per_cell: 200,
            tactics,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub model_acc: f64,
    pub cheater_ratio: f64,
    pub tactic: Tactic,
    pub cheaters: u32,
    pub matches: u32,
    pub mean_accuracy: f64,
}

/// Number of cheaters for a ratio of a population, rounded to nearest.
pub fn cheater_count(ratio: f64, total: u32) -> u32 {
    (ratio * f64::from(total)).round() as u32
}

/// Mean threshold-zero accuracy per (accuracy, ratio, tactic) cell. Match
/// `i` of every cell uses the same derived seed.
pub fn experiment_q1_2(sweep: &AccuracySweep) -> Result<Vec<AccuracyRow>> {
    for &acc in &sweep.acc_grid {
        validate_accuracy(acc)?;
    }
    for &r in &sweep.ratio_grid {
        if !(0.0..=0.5).contains(&r) {
            return Err(Error::config(format!("cheater ratio {r} outside [0, 0.5]")));
        }
    }
    if sweep.matches_per_cell == 0 {
        return Err(Error::config("matches_per_cell must be positive"));
    }
    let mut rows = Vec::new();
    for &tactic in &sweep.tactics {
        for &cheater_ratio in &sweep.ratio_grid {
            let cheaters = cheater_count(cheater_ratio, sweep.total_users);
            for &model_acc in &sweep.acc_grid {
                let accs: Vec<f64> = (0..sweep.matches_per_cell)
                    .into_par_iter()
                    .map(|i| {
                        run_match(&MatchConfig {
                            vote_count: sweep.vote_count,
                            benign_num: sweep.total_users - cheaters,
                            cheater_num: cheaters,
                            model_acc,
                            tactic,
                            seed: seed::derive(sweep.seed, "q1_2", u64::from(i)),
                        })
                        .map(|o| o.accuracy())
                    })
                    .collect::<Result<_>>()?;
                rows.push(AccuracyRow {
                    model_acc,
                    cheater_ratio,
                    tactic,
                    cheaters,
                    matches: sweep.matches_per_cell,
                    mean_accuracy: crate::stats::mean(&accs),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_separation_csv<W: Write>(rows: &[SeparationRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "model_acc,tactic,matches,cheater_q1,cheater_median,cheater_q3,normal_q1,normal_median,normal_q3,misclassified"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:.4},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.model_acc,
            r.tactic,
            r.matches,
            r.cheater.q1,
            r.cheater.median,
            r.cheater.q3,
            r.normal.q1,
            r.normal.median,
            r.normal.q3,
            r.misclassified
        )?;
    }
    Ok(())
}

pub fn write_accuracy_csv<W: Write>(rows: &[AccuracyRow], mut out: W) -> Result<()> {
    writeln!(out, "model_acc,cheater_ratio,tactic,cheaters,matches,mean_accuracy")?;
    for r in rows {
        writeln!(
            out,
            "{:.4},{:.4},{},{},{},{:.6}",
            r.model_acc, r.cheater_ratio, r.tactic, r.cheaters, r.matches, r.mean_accuracy
        )?;
    }
    Ok(())
}
