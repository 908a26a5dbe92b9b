use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cheatvote::battle::fixture::{FixtureConfig, PipelineConfig};
use cheatvote::battle::{EligibilityConfig, MinParticipation};
use cheatvote::consensus::Weights;
use cheatvote::detection::Tactic;
use cheatvote::match_sim::{AccuracySweep, MatchConfig};
use cheatvote::service::{Game, ServiceConfig};

use crate::grid::parse_grid;
use crate::plan::{Format, Plan, ReplayLogPlan, SweepPlan};

#[derive(Parser, Debug)]
#[command(name = "cheatvote", version, about = "Consensus-based cheating detection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Play one independent match and label every user.
    SimulateMatch(SimulateMatchArgs),
    /// Run a grid of matches: score separation or classification accuracy.
    Sweep(SweepArgs),
    /// Score a directory of battle logs, optionally with k-fold thresholds.
    ReplayLog(ReplayLogArgs),
    /// Simulate days of a game service and apply the cross-match policies.
    ServiceSim(ServiceSimArgs),
    /// Write a synthetic directory of battle logs with planted cheaters.
    GenFixture(GenFixtureArgs),
    /// Re-run a recorded manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed for every random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SimulateMatchArgs {
    #[arg(long)]
    pub benign: u32,
    #[arg(long)]
    pub cheaters: u32,
    /// Votes per match.
    #[arg(long, default_value_t = 1)]
    pub votes: u32,
    /// Detector accuracy in [0.5, 1].
    #[arg(long)]
    pub acc: f64,
    /// none, random or tactical.
    #[arg(long)]
    pub tactic: Tactic,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Dubious quartiles of 2 normal users vs 1 cheater.
    Separation,
    /// Mean threshold-zero accuracy over accuracy x cheater ratio.
    Accuracy,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Experiment::Accuracy)]
    pub experiment: Experiment,
    /// Detector accuracies: start:stop:step, list or value.
    #[arg(long)]
    pub acc: String,
    /// Cheater ratios (accuracy experiment only).
    #[arg(long)]
    pub ratio: Option<String>,
    /// Comma list of tactics, or "all".
    #[arg(long, default_value = "all")]
    pub tactic: String,
    /// Users per match (accuracy experiment only).
    #[arg(long, default_value_t = 100)]
    pub users: u32,
    /// Votes per match (accuracy experiment only).
    #[arg(long, default_value_t = 1)]
    pub votes: u32,
    /// Matches per cell [default: 1000 for separation, 200 for accuracy].
    #[arg(long)]
    pub matches: Option<u32>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ReplayLogArgs {
    /// Directory with match_NN.csv logs and roles.csv.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of match-based folds.
    #[arg(long)]
    pub kfold: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    pub acc: f64,
    #[arg(long, default_value = "random")]
    pub tactic: Tactic,
    #[arg(long, default_value_t = 2000)]
    pub pad_ms: i64,
    #[arg(long, default_value_t = 1000)]
    pub merge_gap_ms: i64,
    /// Minimum presence as a fraction of the window [default: 0.5].
    #[arg(long, conflicts_with = "min_presence_ms")]
    pub min_presence_frac: Option<f64>,
    /// Minimum presence in milliseconds.
    #[arg(long)]
    pub min_presence_ms: Option<i64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ServiceSimArgs {
    /// Flat JSON configuration; unspecified fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub days: Option<u32>,
    #[arg(long, value_parser = parse_game)]
    pub game: Option<Game>,
    #[arg(long)]
    pub population: Option<u32>,
    /// Game1 score pool (role,validity,dubious).
    #[arg(long)]
    pub score_pool: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct GenFixtureArgs {
    #[arg(long, default_value_t = 28)]
    pub matches: u32,
    #[arg(long, default_value_t = 8)]
    pub min_players: u32,
    #[arg(long, default_value_t = 10)]
    pub max_players: u32,
    #[arg(long, default_value_t = 2)]
    pub cheaters: u32,
    #[arg(long, default_value_t = 15)]
    pub battles: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory [default: the manifest's directory].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn parse_game(s: &str) -> Result<Game, String> {
    match s {
        "game1" => Ok(Game::Game1),
        "game2" => Ok(Game::Game2),
        other => Err(format!("unknown game {other:?} (expected game1 or game2)")),
    }
}

fn parse_tactics(s: &str) -> Result<Vec<Tactic>> {
    if s == "all" {
        return Ok(Tactic::ALL.to_vec());
    }
    s.split(',')
        .map(|t| t.trim().parse::<Tactic>().map_err(Into::into))
        .collect()
}

impl Command {
    /// Turns flags into a plan; `None` for `replay`.
    pub fn resolve(self) -> Result<Option<(Plan, Common)>> {
        Ok(Some(match self {
            Command::SimulateMatch(a) => {
                let cfg = MatchConfig {
                    vote_count: a.votes,
                    benign_num: a.benign,
                    cheater_num: a.cheaters,
                    model_acc: a.acc,
                    tactic: a.tactic,
                    seed: a.common.seed.unwrap_or(0),
                };
                cfg.validate()?;
                (Plan::SimulateMatch(cfg), a.common)
            }
            Command::Sweep(a) => {
                let acc_grid = parse_grid(&a.acc).context("--acc")?;
                let tactics = parse_tactics(&a.tactic).context("--tactic")?;
                let seed = a.common.seed.unwrap_or(0);
                let plan = match a.experiment {
                    Experiment::Separation => {
                        if a.ratio.is_some() {
                            bail!("--ratio applies to the accuracy experiment only");
                        }
                        SweepPlan::Separation {
                            acc_grid,
                            matches_per_cell: a.matches.unwrap_or(1000),
                            tactics,
                            seed,
                        }
                    }
                    Experiment::Accuracy => {
                        let ratio = a.ratio.context("--ratio is required for the accuracy experiment")?;
                        let mut s = AccuracySweep::new(acc_grid, parse_grid(&ratio).context("--ratio")?, tactics, seed);
                        s.total_users = a.users;
                        s.vote_count = a.votes;
                        if let Some(m) = a.matches {
                            s.matches_per_cell = m;
                        }
                        SweepPlan::Accuracy(s)
                    }
                };
                (Plan::Sweep(plan), a.common)
            }
            Command::ReplayLog(a) => {
                let input = a
                    .input
                    .canonicalize()
                    .with_context(|| format!("input {}", a.input.display()))?;
                let min_participation = match (a.min_presence_ms, a.min_presence_frac) {
                    (Some(ms), _) => MinParticipation::Millis(ms),
                    (None, f) => MinParticipation::FractionOfWindow(f.unwrap_or(0.5)),
                };
                let eligibility = EligibilityConfig {
                    min_participation,
                    merge_gap_ms: a.merge_gap_ms,
                    window_pad_ms: a.pad_ms,
                };
                eligibility.validate()?;
                cheatvote::detection::DetectorConfig::new(a.acc, 0)?;
                let pipeline = PipelineConfig {
                    eligibility,
                    model_acc: a.acc,
                    tactic: a.tactic,
                    weights: Weights::DEFAULT,
                    seed: a.common.seed.unwrap_or(0),
                };
                (Plan::ReplayLog(ReplayLogPlan { input, kfold: a.kfold, pipeline }), a.common)
            }
            Command::ServiceSim(a) => {
                let mut cfg: ServiceConfig = match &a.config {
                    Some(path) => {
                        let text = std::fs::read_to_string(path)
                            .with_context(|| format!("reading {}", path.display()))?;
                        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
                    }
                    None => ServiceConfig::default(),
                };
                if let Some(d) = a.days {
                    cfg.days = d;
                }
                if let Some(g) = a.game {
                    cfg.game = g;
                }
                if let Some(p) = a.population {
                    cfg.population = p;
                }
                if let Some(s) = a.common.seed {
                    cfg.seed = s;
                }
                if let Some(p) = a.score_pool {
                    cfg.score_pool = Some(p);
                }
                if let Some(p) = &cfg.score_pool {
                    cfg.score_pool = Some(p.canonicalize().with_context(|| format!("score pool {}", p.display()))?);
                }
                cfg.validate()?;
                (Plan::ServiceSim(cfg), a.common)
            }
            Command::GenFixture(a) => {
                let cfg = FixtureConfig {
                    matches: a.matches,
                    min_players: a.min_players,
                    max_players: a.max_players,
                    cheaters_per_match: a.cheaters,
                    battles_per_match: a.battles,
                    seed: a.common.seed.unwrap_or(0),
                    ..FixtureConfig::default()
                };
                cfg.validate()?;
                (Plan::GenFixture(cfg), a.common)
            }
            Command::Replay(_) => return Ok(None),
        }))
    }
}
