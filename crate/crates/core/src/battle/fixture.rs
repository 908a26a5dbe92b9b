//! Synthetic match logs with planted cheaters, and the end-to-end scoring
//! flow over them.
//!
//! A fixture directory holds one `match_NN.csv` event log per match plus a
//! `roles.csv` with header `match_id,user_id,role`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::consensus::{Scoreboard, Weights};
use crate::detection::{validate_accuracy, DetectorConfig, Tactic};
use crate::error::{Error, Result};
use crate::seed::{self, SimRng};
use crate::types::{Role, UserId};

use super::events::{parse_event_log, write_event_log, EventKind, EventRecord};
use super::kfold::kfold_split;
use super::segment::{eligible_voters, segment_battles, EligibilityConfig};
use super::threshold::{select_threshold, standardize};
use super::votes::{run_battle_votes, DetectorPanel};

pub const ROLES_HEADER: &str = "match_id,user_id,role";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub matches: u32,
    pub min_players: u32,
    pub max_players: u32,
    pub cheaters_per_match: u32,
    pub battles_per_match: u32,
    pub sample_interval_ms: i64,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            matches: 28,
            min_players: 8,
            max_players: 10,
            cheaters_per_match: 2,
            battles_per_match: 15,
            sample_interval_ms: 100,
            seed: 0,
        }
    }
}

impl FixtureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.matches == 0 {
            return Err(Error::config("fixture needs at least one match"));
        }
        if self.min_players < 4 || self.min_players > self.max_players || self.max_players > 99 {
            return Err(Error::config("players per match must satisfy 4 <= min <= max <= 99"));
        }
        if self.cheaters_per_match >= self.min_players {
            return Err(Error::config("every match needs at least one normal player"));
        }
        if self.battles_per_match == 0 || self.sample_interval_ms < 1 {
            return Err(Error::config("battles and sample interval must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchLog {
    pub match_id: u32,
    pub events: Vec<EventRecord>,
    pub roles: BTreeMap<UserId, Role>,
}

/// User ids are `match_id * 100 + slot`, unique across the fixture.
pub fn generate_fixture(cfg: &FixtureConfig) -> Result<Vec<MatchLog>> {
    cfg.validate()?;
    Ok((0..cfg.matches)
        .map(|m| generate_match(cfg, m, &mut seed::stream(cfg.seed, "fixture", u64::from(m))))
        .collect())
}

fn generate_match(cfg: &FixtureConfig, match_id: u32, rng: &mut SimRng) -> MatchLog {
    let players = rng.random_range(cfg.min_players..=cfg.max_players);
    let users: Vec<UserId> = (0..players).map(|i| UserId(match_id * 100 + i)).collect();
    let cheater_slots = sample(rng, players as usize, cfg.cheaters_per_match as usize);
    let mut roles: BTreeMap<UserId, Role> = users.iter().map(|&u| (u, Role::Normal)).collect();
    for i in cheater_slots {
        roles.insert(users[i], Role::Cheater);
    }

    let mut events = Vec::new();
    let mut pos: Vec<[f64; 3]> = users
        .iter()
        .map(|_| [rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), 0.0])
        .collect();
    let mut aim: Vec<[f64; 3]> = users.iter().map(|_| [0.0; 3]).collect();
    let mut t: i64 = 5_000;
    for _ in 0..cfg.battles_per_match {
        let duration: i64 = rng.random_range(10_000..20_000);
        let max_size = players.min(7) as usize;
        let size = rng.random_range(4..=max_size);
        for slot in sample(rng, players as usize, size) {
            let user = users[slot];
            let cheater = roles[&user] == Role::Cheater;
            let join = t + rng.random_range(0..duration / 20);
            let dies_early = rng.random_bool(0.15);
            let leave = if dies_early {
                join + rng.random_range(0..duration / 4)
            } else {
                t + duration - rng.random_range(0..duration / 20)
            };
            let mut ts = join;
            while ts <= leave {
                let p = &mut pos[slot];
                p[0] += rng.random_range(-1.0..1.0);
                p[1] += rng.random_range(-1.0..1.0);
                let a = &mut aim[slot];
                let swing = if cheater && rng.random_bool(0.05) { 90.0 } else { 3.0 };
                a[0] = (a[0] + rng.random_range(-swing..swing)).rem_euclid(360.0);
                a[1] = (a[1] + rng.random_range(-1.0..1.0)).clamp(-89.0, 89.0);
                let last = ts + cfg.sample_interval_ms > leave;
                let event = if last && dies_early {
                    EventKind::Dead
                } else if rng.random_bool(0.1) {
                    EventKind::Fire
                } else if rng.random_bool(0.03) {
                    EventKind::Hit
                } else {
                    EventKind::None
                };
                events.push(EventRecord {
                    timestamp_ms: ts,
                    user,
                    position: round3(*p),
                    aim: round3(*a),
                    event,
                });
                ts += cfg.sample_interval_ms;
            }
        }
        t += duration + rng.random_range(8_000..20_000);
    }
    events.sort_by_key(|e| (e.timestamp_ms, e.user));
    MatchLog {
        match_id,
        events,
        roles,
    }
}

fn round3(v: [f64; 3]) -> [f64; 3] {
    v.map(|x| (x * 1000.0).round() / 1000.0)
}

pub fn write_fixture(dir: &Path, logs: &[MatchLog]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut roles = BufWriter::new(fs::File::create(dir.join("roles.csv"))?);
    writeln!(roles, "{ROLES_HEADER}")?;
    for log in logs {
        let f = BufWriter::new(fs::File::create(dir.join(format!("match_{:02}.csv", log.match_id)))?);
        write_event_log(&log.events, f)?;
        for (u, r) in &log.roles {
            writeln!(roles, "{},{u},{r}", log.match_id)?;
        }
    }
    roles.flush()?;
    Ok(())
}

/// Reads every `match_*.csv` in `dir` (ordered by match id) with the roles
/// from `roles.csv`.
pub fn read_fixture(dir: &Path) -> Result<Vec<MatchLog>> {
    let roles = read_roles(&dir.join("roles.csv"))?;
    let mut logs = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let Some(id) = name
            .strip_prefix("match_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<u32>().ok())
        else {
            continue;
        };
        let events = parse_event_log(BufReader::new(fs::File::open(&path)?)).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{name}: {message}"),
            },
            other => other,
        })?;
        let roles = roles.get(&id).cloned().unwrap_or_default();
        if let Some(e) = events.iter().find(|e| !roles.contains_key(&e.user)) {
            return Err(Error::UnknownUser(e.user));
        }
        logs.push(MatchLog {
            match_id: id,
            events,
            roles,
        });
    }
    if logs.is_empty() {
        return Err(Error::config(format!("no match_*.csv logs in {}", dir.display())));
    }
    logs.sort_by_key(|l| l.match_id);
    Ok(logs)
}

fn read_roles(path: &Path) -> Result<BTreeMap<u32, BTreeMap<UserId, Role>>> {
    let mut lines = BufReader::new(fs::File::open(path)?).lines();
    if lines.next().transpose()?.as_deref().map(str::trim_end) != Some(ROLES_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("roles file: expected header {ROLES_HEADER:?}"),
        });
    }
    let mut out: BTreeMap<u32, BTreeMap<UserId, Role>> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: i + 2,
            message: format!("roles file: {message}"),
        };
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", f.len())));
        }
        let m: u32 = f[0].parse().map_err(|_| bad(format!("bad match id {:?}", f[0])))?;
        let u: u32 = f[1].parse().map_err(|_| bad(format!("bad user id {:?}", f[1])))?;
        let r: Role = f[2].parse().map_err(|_| bad(format!("bad role {:?}", f[2])))?;
        if out.entry(m).or_default().insert(UserId(u), r).is_some() {
            return Err(bad(format!("user {u} listed twice in match {m}")));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub eligibility: EligibilityConfig,
    pub model_acc: f64,
    pub tactic: Tactic,
    pub weights: Weights,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eligibility: EligibilityConfig::default(),
            model_acc: 0.9,
            tactic: Tactic::RandomLiar,
            weights: Weights::DEFAULT,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredMatch {
    pub match_id: u32,
    pub board: Scoreboard,
    pub roles: BTreeMap<UserId, Role>,
    pub windows: usize,
    pub rounds: usize,
}

/// Segments one match, lets eligible voters judge every participant of each
/// battle, and votes on the flagged ones.
pub fn score_match(log: &MatchLog, cfg: &PipelineConfig) -> Result<ScoredMatch> {
    validate_accuracy(cfg.model_acc)?;
    let detector = DetectorConfig::new(cfg.model_acc, cfg.seed)?;
    let mut rng = seed::stream(cfg.seed, "pipeline", u64::from(log.match_id));
    let mut board = Scoreboard::new(log.roles.keys().copied())?;
    let windows = segment_battles(&log.events, &cfg.eligibility)?;
    let mut rounds = 0;
    for w in &windows {
        let voters = eligible_voters(w, &cfg.eligibility);
        let targets: Vec<UserId> = w.users().collect();
        let mut panel =
            DetectorPanel::evaluate(&voters, &targets, &log.roles, &detector, cfg.tactic, &mut rng)?;
        let flags = panel.flags();
        rounds += run_battle_votes(w, &flags, &mut board, &mut panel, &cfg.eligibility, &cfg.weights)?.len();
    }
    Ok(ScoredMatch {
        match_id: log.match_id,
        board,
        roles: log.roles.clone(),
        windows: windows.len(),
        rounds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredUser {
    pub match_id: u32,
    pub user: UserId,
    pub role: Role,
    pub dubious: f64,
    pub standardized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub match_ids: Vec<u32>,
    /// Accuracy-maximizing threshold over this fold's users.
    pub threshold: f64,
    pub accuracy: f64,
    /// This fold scored with the threshold fitted on the other folds.
    pub holdout_threshold: f64,
    pub holdout_accuracy: f64,
    pub users: Vec<ScoredUser>,
}

type Keyed<T> = BTreeMap<(u32, UserId), T>;

fn keyed(matches: &[&ScoredMatch]) -> (Keyed<f64>, Keyed<Role>) {
    let mut scores = BTreeMap::new();
    let mut truth = BTreeMap::new();
    for m in matches {
        for (u, rec) in m.board.iter() {
            scores.insert((m.match_id, u), rec.dubious);
        }
        for (&u, &r) in &m.roles {
            truth.insert((m.match_id, u), r);
        }
    }
    (scores, truth)
}

/// Match-based k-fold evaluation of final dubious scores.
pub fn cross_validate(scored: &[ScoredMatch], k: usize, seed: u64) -> Result<Vec<FoldReport>> {
    let ids: Vec<u32> = scored.iter().map(|m| m.match_id).collect();
    let folds = kfold_split(&ids, k, seed)?;
    folds
        .iter()
        .enumerate()
        .map(|(fold, members)| {
            let (inside, outside): (Vec<&ScoredMatch>, Vec<&ScoredMatch>) =
                scored.iter().partition(|m| members.contains(&m.match_id));
            let (scores, truth) = keyed(&inside);
            let fit = select_threshold(&scores, &truth)?;
            let (train_scores, train_truth) = keyed(&outside);
            let holdout = select_threshold(&train_scores, &train_truth)?;
            let holdout_hits = scores
                .iter()
                .filter(|(key, &s)| (s > holdout.threshold) == (truth[key] == Role::Cheater))
                .count();
            let shifted = standardize(&scores, fit.threshold);
            let mut match_ids = members.clone();
            match_ids.sort_unstable();
            Ok(FoldReport {
                fold,
                match_ids,
                threshold: fit.threshold,
                accuracy: fit.accuracy,
                holdout_threshold: holdout.threshold,
                holdout_accuracy: holdout_hits as f64 / scores.len() as f64,
                users: scores
                    .iter()
                    .map(|(&(match_id, user), &dubious)| ScoredUser {
                        match_id,
                        user,
                        role: truth[&(match_id, user)],
                        dubious,
                        standardized: shifted[&(match_id, user)],
                    })
                    .collect(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FixtureConfig {
        FixtureConfig {
            matches: 4,
            battles_per_match: 6,
            seed: 3,
            ..FixtureConfig::default()
        }
    }

    #[test]
    fn generated_shape() {
        let logs = generate_fixture(&small()).unwrap();
        assert_eq!(logs.len(), 4);
        for log in &logs {
            let n = log.roles.len() as u32;
            assert!((8..=10).contains(&n));
            assert_eq!(log.roles.values().filter(|&&r| r == Role::Cheater).count(), 2);
            assert!(log.events.iter().all(|e| log.roles.contains_key(&e.user)));
            let windows = segment_battles(&log.events, &EligibilityConfig::default()).unwrap();
            assert_eq!(windows.len(), 6);
            assert!(windows.iter().all(|w| w.participants.len() >= 4));
        }
        assert_eq!(logs, generate_fixture(&small()).unwrap());
    }

    #[test]
    fn fixture_round_trip_on_disk() {
        let dir = std::env::temp_dir().join(format!("cheatvote-fixture-{}", std::process::id()));
        let logs = generate_fixture(&small()).unwrap();
        write_fixture(&dir, &logs).unwrap();
        let back = read_fixture(&dir).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(back, logs);
    }

    #[test]
    fn perfect_detectors_separate_every_match() {
        let logs = generate_fixture(&small()).unwrap();
        let cfg = PipelineConfig {
            model_acc: 1.0,
            tactic: Tactic::WithoutLiar,
            ..PipelineConfig::default()
        };
        for log in &logs {
            let m = score_match(log, &cfg).unwrap();
            assert!(m.rounds > 0);
            for (u, rec) in m.board.iter() {
                match m.roles[&u] {
                    Role::Cheater => assert!(rec.dubious > 0.0, "cheater {u} at {}", rec.dubious),
                    Role::Normal => assert_eq!(rec.dubious, 0.0),
                }
            }
        }
    }

    #[test]
    fn folds_cover_all_users() {
        let logs = generate_fixture(&small()).unwrap();
        let scored: Vec<_> = logs
            .iter()
            .map(|l| score_match(l, &PipelineConfig::default()).unwrap())
            .collect();
        let reports = cross_validate(&scored, 2, 1).unwrap();
        assert_eq!(reports.len(), 2);
        let users: usize = reports.iter().map(|r| r.users.len()).sum();
        assert_eq!(users, logs.iter().map(|l| l.roles.len()).sum::<usize>());
        for r in &reports {
            for u in &r.users {
                assert!((u.standardized - (u.dubious - r.threshold)).abs() < 1e-12);
            }
        }
    }
}
