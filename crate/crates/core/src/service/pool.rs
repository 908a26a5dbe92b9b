use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::consensus::Weights;
use crate::detection::{DetectorConfig, Tactic};
use crate::error::{Error, Result};
use crate::match_sim::{play_match, roster};
use crate::seed;
use crate::types::Role;

pub const POOL_HEADER: &str = "role,validity,dubious";

/// Per-match `(validity, dubious)` pairs observed for each role.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScorePool {
    normal: Vec<(f64, f64)>,
    cheater: Vec<(f64, f64)>,
}

/// Match settings used to fill a pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolSpec {
    pub benign_num: u32,
    pub cheater_num: u32,
    pub vote_count: u32,
    pub model_acc: f64,
    pub tactic: Tactic,
    pub matches: u32,
}

impl Default for PoolSpec {
    fn default() -> Self {
        PoolSpec {
            benign_num: 2,
            cheater_num: 1,
            vote_count: 1,
            model_acc: 0.8,
            tactic: Tactic::RandomLiar,
            matches: 1000,
        }
    }
}

impl ScorePool {
    pub fn new(normal: Vec<(f64, f64)>, cheater: Vec<(f64, f64)>) -> Self {
        ScorePool { normal, cheater }
    }

    pub fn push(&mut self, role: Role, validity: f64, dubious: f64) {
        self.side_mut(role).push((validity, dubious));
    }

    pub fn scores(&self, role: Role) -> &[(f64, f64)] {
        match role {
            Role::Normal => &self.normal,
            Role::Cheater => &self.cheater,
        }
    }

    fn side_mut(&mut self, role: Role) -> &mut Vec<(f64, f64)> {
        match role {
            Role::Normal => &mut self.normal,
            Role::Cheater => &mut self.cheater,
        }
    }

    /// Final scores of every user of `spec.matches` simulated matches.
    pub fn from_match_sim(spec: &PoolSpec, seed: u64) -> Result<Self> {
        if spec.vote_count == 0 || spec.matches == 0 {
            return Err(Error::config("pool needs at least one match and one vote"));
        }
        if spec.benign_num == 0 || spec.cheater_num == 0 {
            return Err(Error::config("pool matches need both roles"));
        }
        let detector = DetectorConfig::new(spec.model_acc, seed)?;
        let roster = roster(spec.benign_num, spec.cheater_num);
        let mut pool = ScorePool::default();
        for i in 0..spec.matches {
            let mut rng = seed::stream(seed, "pool", u64::from(i));
            let board = play_match(&roster, spec.vote_count, &detector, spec.tactic, &Weights::DEFAULT, &mut rng)?;
            for &(u, role) in &roster {
                let rec = board.get(u).expect("roster user");
                pool.push(role, rec.validity, rec.dubious);
            }
        }
        Ok(pool)
    }

    pub fn sample<R: Rng + ?Sized>(&self, role: Role, rng: &mut R) -> Result<(f64, f64)> {
        let side = self.scores(role);
        if side.is_empty() {
            return Err(Error::EmptyPool(role.as_str()));
        }
        Ok(side[rng.random_range(0..side.len())])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{POOL_HEADER}")?;
        for role in [Role::Normal, Role::Cheater] {
            for (v, d) in self.scores(role) {
                writeln!(out, "{role},{v},{d}")?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        if lines.next().transpose()?.as_deref().map(str::trim_end) != Some(POOL_HEADER) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {POOL_HEADER:?}"),
            });
        }
        let mut pool = ScorePool::default();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { line: i + 2, message };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", f.len())));
            }
            let role: Role = f[0].parse().map_err(|_| bad(format!("bad role {:?}", f[0])))?;
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| bad(format!("not a number: {s:?}")))
            };
            let v = num(f[1])?;
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(format!("validity {v} outside [0, 1]")));
            }
            pool.push(role, v, num(f[2])?);
        }
        Ok(pool)
    }
}
