//! Multi-day game-service simulation.
//!
//! A synthetic population plays a random number of matches every day. Users
//! may start or stop cheating between days; honest users are more likely to
//! start after meeting cheaters. After each match a user receives a
//! `(validity, dubious)` pair, either drawn from a [`ScorePool`] (Game1,
//! team matches) or produced by a simulated 1 vs 1 match (Game2). The
//! adding and counting policies accumulate those pairs per user.

mod policy;
mod pool;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::battle::{select_threshold, ThresholdChoice};
use crate::consensus::Weights;
use crate::detection::{validate_accuracy, DetectorConfig, Tactic};
use crate::error::{Error, Result};
use crate::match_sim::play_match;
use crate::seed::{self, SimRng};
use crate::types::{Role, UserId};

pub use policy::{policy_adding, policy_counting, MatchRecord, HIGH_DUBIOUS, LOW_VALIDITY};
pub use pool::{PoolSpec, ScorePool, POOL_HEADER};

pub const REPORT_HEADER: &str =
    "user_id,role,days_cheating,sum_validity,sum_dubious,count_low_validity,count_high_dubious";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    /// Team against team; scores drawn from a pool.
    Game1,
    /// One against one; scores from a simulated match.
    Game2,
}

/// Flat configuration; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub population: u32,
    /// Inclusive range each user's daily match count is drawn from.
    pub matches_per_day: [u32; 2],
    pub team_size: u32,
    pub days: u32,
    pub p_initial: f64,
    pub p_base: f64,
    pub p_contagion: f64,
    pub p_quit: f64,
    pub game: Game,
    pub model_acc: f64,
    pub vote_count_max: u32,
    pub tactic: Tactic,
    pub ability_mean: f64,
    pub ability_sd: f64,
    pub seed: u64,
    /// Game1 pool file; when absent one is simulated from `pool_spec`.
    pub score_pool: Option<PathBuf>,
    pub pool_spec: PoolSpec,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            population: 10_000,
            matches_per_day: [1, 9],
            team_size: 3,
            days: 1,
            p_initial: 0.05,
            p_base: 0.001,
            p_contagion: 0.05,
            p_quit: 0.01,
            game: Game::Game1,
            model_acc: 0.8,
            vote_count_max: 5,
            tactic: Tactic::RandomLiar,
            ability_mean: 1500.0,
            ability_sd: 300.0,
            seed: 0,
            score_pool: None,
            pool_spec: PoolSpec::default(),
        }
    }
}

impl ServiceConfig {
    /// Players per team; Game2 is always 1 vs 1.
    pub fn effective_team_size(&self) -> u32 {
        match self.game {
            Game::Game1 => self.team_size,
            Game::Game2 => 1,
        }
    }

    pub fn adoption(&self) -> Adoption {
        Adoption {
            p_base: self.p_base,
            p_contagion: self.p_contagion,
            p_quit: self.p_quit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.team_size == 0 {
            return Err(Error::config("team_size must be at least 1"));
        }
        let need = 2 * self.effective_team_size();
        if self.population < need {
            return Err(Error::config(format!(
                "population {} smaller than one match ({need})",
                self.population
            )));
        }
        let [lo, hi] = self.matches_per_day;
        if lo > hi {
            return Err(Error::config("matches_per_day must be [min, max] with min <= max"));
        }
        for (name, p) in [
            ("p_initial", self.p_initial),
            ("p_base", self.p_base),
            ("p_contagion", self.p_contagion),
            ("p_quit", self.p_quit),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !self.ability_mean.is_finite() || !(self.ability_sd >= 0.0 && self.ability_sd.is_finite()) {
            return Err(Error::config("ability distribution needs finite mean and sd >= 0"));
        }
        validate_accuracy(self.model_acc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adoption {
    pub p_base: f64,
    pub p_contagion: f64,
    pub p_quit: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheatState {
    Honest,
    Cheating,
}

impl CheatState {
    pub fn role(self) -> Role {
        match self {
            CheatState::Honest => Role::Normal,
            CheatState::Cheating => Role::Cheater,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationUser {
    pub id: UserId,
    pub ability: f64,
    pub state: CheatState,
    pub days_cheating: u32,
    pub matches_played: u32,
    pub sum_validity: f64,
    pub sum_dubious: f64,
    pub count_low_validity: u32,
    pub count_high_dubious: u32,
}

impl PopulationUser {
    pub fn role(&self) -> Role {
        self.state.role()
    }
}

/// Users `0..population` with normally distributed abilities.
pub fn generate_population(cfg: &ServiceConfig) -> Result<Vec<PopulationUser>> {
    cfg.validate()?;
    let ability = Normal::new(cfg.ability_mean, cfg.ability_sd)
        .map_err(|e| Error::config(format!("ability distribution: {e}")))?;
    let mut rng = seed::stream(cfg.seed, "population", 0);
    Ok((0..cfg.population)
        .map(|i| {
            let a = ability.sample(&mut rng);
            let cheating = rng.random_bool(cfg.p_initial);
            PopulationUser {
                id: UserId(i),
                ability: a,
                state: if cheating { CheatState::Cheating } else { CheatState::Honest },
                days_cheating: 0,
                matches_played: 0,
                sum_validity: 0.0,
                sum_dubious: 0.0,
                count_low_validity: 0,
                count_high_dubious: 0,
            }
        })
        .collect())
}

/// Moves users between honest and cheating. `encountered[i]` is the share of
/// cheaters among the people user `i` met the previous day.
pub fn adoption_step<R: Rng + ?Sized>(
    population: &mut [PopulationUser],
    encountered: &[f64],
    params: &Adoption,
    rng: &mut R,
) -> Result<()> {
    if encountered.len() != population.len() {
        return Err(Error::config("one encounter share per user required"));
    }
    for (u, &f) in population.iter_mut().zip(encountered) {
        u.state = match u.state {
            CheatState::Honest => {
                let p = (params.p_base + params.p_contagion * f).clamp(0.0, 1.0);
                if rng.random_bool(p) {
                    CheatState::Cheating
                } else {
                    CheatState::Honest
                }
            }
            CheatState::Cheating => {
                if rng.random_bool(params.p_quit) {
                    CheatState::Honest
                } else {
                    CheatState::Cheating
                }
            }
        };
    }
    Ok(())
}

/// Two teams of equal size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matchup {
    pub teams: [Vec<UserId>; 2],
}

impl Matchup {
    pub fn players(&self) -> impl Iterator<Item = UserId> + '_ {
        self.teams.iter().flatten().copied()
    }
}

/// Sorts by ability, cuts consecutive blocks of `2 * team_size` and splits
/// each block randomly into two teams. Users left over sit out.
pub fn matchmake<R: Rng + ?Sized>(pool: &[(UserId, f64)], team_size: u32, rng: &mut R) -> Vec<Matchup> {
    let team = team_size.max(1) as usize;
    let mut sorted = pool.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    sorted
        .chunks_exact(2 * team)
        .map(|block| {
            let mut ids: Vec<UserId> = block.iter().map(|p| p.0).collect();
            ids.shuffle(rng);
            let b = ids.split_off(team);
            Matchup { teams: [ids, b] }
        })
        .collect()
}

/// Everything that happened in one simulated day.
#[derive(Clone, Debug, PartialEq)]
pub struct DayRecords {
    pub records: Vec<MatchRecord>,
    pub matches: usize,
    /// Per user (indexed by id): share of cheaters among everyone met.
    pub encountered: Vec<f64>,
}

fn run_day<F>(population: &[PopulationUser], cfg: &ServiceConfig, day: u32, play: F) -> Result<DayRecords>
where
    F: Fn(&Matchup, &mut SimRng) -> Result<Vec<MatchRecord>> + Sync,
{
    cfg.validate()?;
    for (i, u) in population.iter().enumerate() {
        if u.id.0 as usize != i {
            return Err(Error::config("population ids must be 0..n in order"));
        }
    }
    let day_seed = seed::derive(cfg.seed, "day", u64::from(day));
    let [lo, hi] = cfg.matches_per_day;
    let mut sched = seed::stream(day_seed, "schedule", 0);
    let wanted: Vec<u32> = population.iter().map(|_| sched.random_range(lo..=hi)).collect();

    let mut records = Vec::new();
    let mut met = vec![(0u32, 0u32); population.len()];
    let mut matches = 0;
    for slot in 0..hi {
        let entrants: Vec<(UserId, f64)> = population
            .iter()
            .zip(&wanted)
            .filter(|(_, &w)| w > slot)
            .map(|(u, _)| (u.id, u.ability))
            .collect();
        let mut mm = seed::stream(day_seed, "matchmake", u64::from(slot));
        let matchups = matchmake(&entrants, cfg.effective_team_size(), &mut mm);
        let played: Vec<Vec<MatchRecord>> = matchups
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                let mut rng = seed::stream(day_seed, "match", (u64::from(slot) << 32) | i as u64);
                play(m, &mut rng)
            })
            .collect::<Result<_>>()?;
        for m in &matchups {
            let cheaters = m
                .players()
                .filter(|u| population[u.0 as usize].state == CheatState::Cheating)
                .count() as u32;
            let size = m.players().count() as u32;
            for u in m.players() {
                let me = u32::from(population[u.0 as usize].state == CheatState::Cheating);
                let e = &mut met[u.0 as usize];
                e.0 += cheaters - me;
                e.1 += size - 1;
            }
        }
        matches += matchups.len();
        records.extend(played.into_iter().flatten());
    }
    let encountered = met
        .into_iter()
        .map(|(c, n)| if n == 0 { 0.0 } else { f64::from(c) / f64::from(n) })
        .collect();
    Ok(DayRecords {
        records,
        matches,
        encountered,
    })
}

/// Team matches; every player draws a score pair from the pool of their
/// current role.
pub fn simulate_day_game1(
    population: &[PopulationUser],
    pool: &ScorePool,
    cfg: &ServiceConfig,
    day: u32,
) -> Result<DayRecords> {
    for role in [Role::Normal, Role::Cheater] {
        if pool.scores(role).is_empty() && population.iter().any(|u| u.role() == role) {
            return Err(Error::EmptyPool(role.as_str()));
        }
    }
    run_day(population, cfg, day, |m, rng| {
        m.players()
            .map(|u| {
                let role = population[u.0 as usize].role();
                let (validity, dubious) = pool.sample(role, rng)?;
                Ok(MatchRecord {
                    user: u,
                    role,
                    validity,
                    dubious,
                })
            })
            .collect()
    })
}

/// 1 vs 1 matches played through the match simulator with a random number
/// of votes in `0..=vote_count_max`.
pub fn simulate_day_game2(population: &[PopulationUser], cfg: &ServiceConfig, day: u32) -> Result<DayRecords> {
    let detector = DetectorConfig::new(cfg.model_acc, cfg.seed)?;
    run_day(population, cfg, day, |m, rng| {
        let roster: Vec<(UserId, Role)> =
            m.players().map(|u| (u, population[u.0 as usize].role())).collect();
        let votes = rng.random_range(0..=cfg.vote_count_max);
        let board = play_match(&roster, votes, &detector, cfg.tactic, &Weights::DEFAULT, rng)?;
        Ok(roster
            .iter()
            .map(|&(u, role)| {
                let rec = board.get(u).expect("roster user");
                MatchRecord {
                    user: u,
                    role,
                    validity: rec.validity,
                    dubious: rec.dubious,
                }
            })
            .collect())
    })
}

/// Per-day figures, computed over the users' cumulative counters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaySummary {
    /// Day number, starting at 1.
    pub day: u32,
    pub cheaters: u32,
    pub cheating_fraction: f64,
    pub matches: usize,
    /// Best cut on summed dubious.
    pub adding: ThresholdChoice,
    /// Best cut on the number of high-dubious matches.
    pub counting: ThresholdChoice,
    pub mean_high_dubious_cheaters: Option<f64>,
    pub mean_high_dubious_normals: Option<f64>,
    pub mean_low_validity_cheaters: Option<f64>,
    pub mean_low_validity_normals: Option<f64>,
}

/// A running simulation; each [`ServiceSim::step`] plays one day.
#[derive(Clone, Debug)]
pub struct ServiceSim {
    cfg: ServiceConfig,
    population: Vec<PopulationUser>,
    pool: Option<ScorePool>,
    day: u32,
    encountered: Vec<f64>,
}

impl ServiceSim {
    /// Game1 takes the given pool, or simulates one when `pool` is `None`.
    pub fn new(cfg: ServiceConfig, pool: Option<ScorePool>) -> Result<Self> {
        let population = generate_population(&cfg)?;
        let pool = match (cfg.game, pool) {
            (Game::Game2, _) => None,
            (Game::Game1, Some(p)) => Some(p),
            (Game::Game1, None) => Some(ScorePool::from_match_sim(
                &cfg.pool_spec,
                seed::derive(cfg.seed, "pool", 0),
            )?),
        };
        let encountered = vec![0.0; population.len()];
        Ok(ServiceSim {
            cfg,
            population,
            pool,
            day: 0,
            encountered,
        })
    }

    pub fn population(&self) -> &[PopulationUser] {
        &self.population
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn step(&mut self) -> Result<DaySummary> {
        let day = self.day;
        if day > 0 {
            let mut rng = seed::stream(self.cfg.seed, "adoption", u64::from(day));
            adoption_step(&mut self.population, &self.encountered, &self.cfg.adoption(), &mut rng)?;
        }
        for u in &mut self.population {
            if u.state == CheatState::Cheating {
                u.days_cheating += 1;
            }
        }
        let out = match &self.pool {
            Some(pool) => simulate_day_game1(&self.population, pool, &self.cfg, day)?,
            None => simulate_day_game2(&self.population, &self.cfg, day)?,
        };
        let sums = policy_adding(&out.records);
        let counts = policy_counting(&out.records, LOW_VALIDITY, HIGH_DUBIOUS);
        let mut played: BTreeMap<UserId, u32> = BTreeMap::new();
        for r in &out.records {
            *played.entry(r.user).or_default() += 1;
        }
        for u in &mut self.population {
            if let Some(&(v, d)) = sums.get(&u.id) {
                u.sum_validity += v;
                u.sum_dubious += d;
            }
            if let Some(&(low, high)) = counts.get(&u.id) {
                u.count_low_validity += low;
                u.count_high_dubious += high;
            }
            u.matches_played += played.get(&u.id).copied().unwrap_or(0);
        }
        self.encountered = out.encountered;
        self.day += 1;
        self.summarize(day + 1, out.matches)
    }

    fn summarize(&self, day: u32, matches: usize) -> Result<DaySummary> {
        let truth: BTreeMap<UserId, Role> = self.population.iter().map(|u| (u.id, u.role())).collect();
        let by = |f: fn(&PopulationUser) -> f64| -> BTreeMap<UserId, f64> {
            self.population.iter().map(|u| (u.id, f(u))).collect()
        };
        let adding = select_threshold(&by(|u| u.sum_dubious), &truth)?;
        let counting = select_threshold(&by(|u| f64::from(u.count_high_dubious)), &truth)?;
        let mean_of = |role: Role, f: fn(&PopulationUser) -> u32| {
            let xs: Vec<f64> = self
                .population
                .iter()
                .filter(|u| u.role() == role)
                .map(|u| f64::from(f(u)))
                .collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        let cheaters = self.population.iter().filter(|u| u.role() == Role::Cheater).count() as u32;
        Ok(DaySummary {
            day,
            cheaters,
            cheating_fraction: f64::from(cheaters) / self.population.len() as f64,
            matches,
            adding,
            counting,
            mean_high_dubious_cheaters: mean_of(Role::Cheater, |u| u.count_high_dubious),
            mean_high_dubious_normals: mean_of(Role::Normal, |u| u.count_high_dubious),
            mean_low_validity_cheaters: mean_of(Role::Cheater, |u| u.count_low_validity),
            mean_low_validity_normals: mean_of(Role::Normal, |u| u.count_low_validity),
        })
    }
}

/// One row per user, ordered by id.
pub fn write_report<W: Write>(population: &[PopulationUser], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    let mut rows: Vec<&PopulationUser> = population.iter().collect();
    rows.sort_by_key(|u| u.id);
    for u in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{}",
            u.id,
            u.role(),
            u.days_cheating,
            u.sum_validity,
            u.sum_dubious,
            u.count_low_validity,
            u.count_high_dubious
        )?;
    }
    Ok(())
}
