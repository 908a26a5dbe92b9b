//! Fully resolved runs. A plan holds everything needed to produce a run's
//! outputs except the output directory, so it can be stored in a manifest
//! and executed again.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use cheatvote::battle::fixture::{
    cross_validate, generate_fixture, read_fixture, score_match, write_fixture, FixtureConfig,
    PipelineConfig, ScoredMatch,
};
use cheatvote::battle::select_threshold;
use cheatvote::detection::Tactic;
use cheatvote::match_sim::{
    experiment_q1_1, experiment_q1_2, run_match, write_accuracy_csv, write_separation_csv,
    AccuracySweep, MatchConfig,
};
use cheatvote::service::{write_report, DaySummary, ServiceConfig, ServiceSim, ScorePool};
use cheatvote::{Role, UserId};

use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepPlan {
    Separation {
        acc_grid: Vec<f64>,
        matches_per_cell: u32,
        tactics: Vec<Tactic>,
        seed: u64,
    },
    Accuracy(AccuracySweep),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayLogPlan {
    pub input: PathBuf,
    pub kfold: Option<usize>,
    pub pipeline: PipelineConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum Plan {
    SimulateMatch(MatchConfig),
    Sweep(SweepPlan),
    ReplayLog(ReplayLogPlan),
    ServiceSim(ServiceConfig),
    GenFixture(FixtureConfig),
}

impl Plan {
    pub fn command(&self) -> &'static str {
        match self {
            Plan::SimulateMatch(_) => "simulate-match",
            Plan::Sweep(_) => "sweep",
            Plan::ReplayLog(_) => "replay-log",
            Plan::ServiceSim(_) => "service-sim",
            Plan::GenFixture(_) => "gen-fixture",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Plan::SimulateMatch(c) => c.seed,
            Plan::Sweep(SweepPlan::Separation { seed, .. }) => *seed,
            Plan::Sweep(SweepPlan::Accuracy(s)) => s.seed,
            Plan::ReplayLog(p) => p.pipeline.seed,
            Plan::ServiceSim(c) => c.seed,
            Plan::GenFixture(c) => c.seed,
        }
    }

    /// Runs the plan, writing into `out`. Returns the written file names,
    /// relative to `out`, in write order.
    pub fn execute(&self, out: &Path, format: Format) -> Result<Vec<String>> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let mut sink = Sink { dir: out, written: Vec::new() };
        match self {
            Plan::SimulateMatch(cfg) => simulate_match(cfg, &mut sink, format)?,
            Plan::Sweep(plan) => sweep(plan, &mut sink, format)?,
            Plan::ReplayLog(plan) => replay_log(plan, &mut sink, format)?,
            Plan::ServiceSim(cfg) => service_sim(cfg, &mut sink, format)?,
            Plan::GenFixture(cfg) => {
                let logs = generate_fixture(cfg)?;
                write_fixture(out, &logs)?;
                sink.written.push("roles.csv".into());
                sink.written
                    .extend(logs.iter().map(|l| format!("match_{:02}.csv", l.match_id)));
                println!("generated {} matches", logs.len());
            }
        }
        Ok(sink.written)
    }
}

struct Sink<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        body(&mut w)?;
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

#[derive(Serialize)]
struct UserRow {
    user_id: UserId,
    role: Role,
    validity: f64,
    dubious: f64,
    history: String,
    label: Role,
}

fn simulate_match(cfg: &MatchConfig, sink: &mut Sink, format: Format) -> Result<()> {
    let outcome = run_match(cfg)?;
    let name = format!("outcome.{}", format.ext());
    match format {
        Format::Csv => sink.write(&name, |w| Ok(outcome.write_csv(w)?))?,
        Format::Json => {
            let rows: Vec<UserRow> = outcome
                .board
                .iter()
                .map(|(u, r)| UserRow {
                    user_id: u,
                    role: outcome.roles[&u],
                    validity: r.validity,
                    dubious: r.dubious,
                    history: r.history.to_tf_string(),
                    label: outcome.labels[&u],
                })
                .collect();
            sink.json(&name, &rows)?
        }
    }
    println!("accuracy {:.4}", outcome.accuracy());
    Ok(())
}

fn sweep(plan: &SweepPlan, sink: &mut Sink, format: Format) -> Result<()> {
    match plan {
        SweepPlan::Separation { acc_grid, matches_per_cell, tactics, seed } => {
            let rows = experiment_q1_1(acc_grid, *matches_per_cell, tactics, *seed)?;
            let name = format!("separation.{}", format.ext());
            match format {
                Format::Csv => sink.write(&name, |w| Ok(write_separation_csv(&rows, w)?))?,
                Format::Json => sink.json(&name, &rows)?,
            }
            println!("{} cells", rows.len());
        }
        SweepPlan::Accuracy(s) => {
            let rows = experiment_q1_2(s)?;
            let name = format!("accuracy.{}", format.ext());
            match format {
                Format::Csv => sink.write(&name, |w| Ok(write_accuracy_csv(&rows, w)?))?,
                Format::Json => sink.json(&name, &rows)?,
            }
            println!("{} cells", rows.len());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ScoreRow {
    fold: Option<usize>,
    match_id: u32,
    user_id: UserId,
    role: Role,
    validity: f64,
    dubious: f64,
    standardized: f64,
}

#[derive(Serialize)]
struct ThresholdRow {
    fold: Option<usize>,
    match_ids: Vec<u32>,
    users: usize,
    threshold: f64,
    accuracy: f64,
    holdout_threshold: Option<f64>,
    holdout_accuracy: Option<f64>,
}

fn opt(v: Option<impl std::fmt::Display>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn replay_log(plan: &ReplayLogPlan, sink: &mut Sink, format: Format) -> Result<()> {
    let logs = read_fixture(&plan.input)?;
    let scored: Vec<ScoredMatch> = logs
        .par_iter()
        .map(|l| score_match(l, &plan.pipeline))
        .collect::<Result<_, _>>()?;
    let validity = |m: u32, u: UserId| {
        let sm = scored.iter().find(|s| s.match_id == m).expect("scored match");
        sm.board.get(u).expect("scored user").validity
    };

    let mut scores = Vec::new();
    let mut thresholds = Vec::new();
    match plan.kfold {
        Some(k) => {
            for f in cross_validate(&scored, k, plan.pipeline.seed)? {
                for u in &f.users {
                    scores.push(ScoreRow {
                        fold: Some(f.fold),
                        match_id: u.match_id,
                        user_id: u.user,
                        role: u.role,
                        validity: validity(u.match_id, u.user),
                        dubious: u.dubious,
                        standardized: u.standardized,
                    });
                }
                thresholds.push(ThresholdRow {
                    fold: Some(f.fold),
                    match_ids: f.match_ids,
                    users: f.users.len(),
                    threshold: f.threshold,
                    accuracy: f.accuracy,
                    holdout_threshold: Some(f.holdout_threshold),
                    holdout_accuracy: Some(f.holdout_accuracy),
                });
            }
        }
        None => {
            let mut dubious = std::collections::BTreeMap::new();
            let mut truth = std::collections::BTreeMap::new();
            for m in &scored {
                for (u, r) in m.board.iter() {
                    dubious.insert((m.match_id, u), r.dubious);
                    truth.insert((m.match_id, u), m.roles[&u]);
                }
            }
            let fit = select_threshold(&dubious, &truth)?;
            for (&(match_id, user_id), &d) in &dubious {
                scores.push(ScoreRow {
                    fold: None,
                    match_id,
                    user_id,
                    role: truth[&(match_id, user_id)],
                    validity: validity(match_id, user_id),
                    dubious: d,
                    standardized: d - fit.threshold,
                });
            }
            thresholds.push(ThresholdRow {
                fold: None,
                match_ids: scored.iter().map(|m| m.match_id).collect(),
                users: dubious.len(),
                threshold: fit.threshold,
                accuracy: fit.accuracy,
                holdout_threshold: None,
                holdout_accuracy: None,
            });
        }
    }

    let ext = format.ext();
    match format {
        Format::Csv => {
            sink.write(&format!("scores.{ext}"), |w| {
                writeln!(w, "fold,match_id,user_id,role,validity,dubious,standardized")?;
                for r in &scores {
                    writeln!(
                        w,
                        "{},{},{},{},{:.6},{:.6},{:.6}",
                        opt(r.fold), r.match_id, r.user_id, r.role, r.validity, r.dubious, r.standardized
                    )?;
                }
                Ok(())
            })?;
            sink.write(&format!("thresholds.{ext}"), |w| {
                writeln!(w, "fold,match_ids,users,threshold,accuracy,holdout_threshold,holdout_accuracy")?;
                for t in &thresholds {
                    let ids: Vec<String> = t.match_ids.iter().map(u32::to_string).collect();
                    writeln!(
                        w,
                        "{},{},{},{:.6},{:.6},{},{}",
                        opt(t.fold),
                        ids.join(" "),
                        t.users,
                        t.threshold,
                        t.accuracy,
                        opt(t.holdout_threshold.map(|x| format!("{x:.6}"))),
                        opt(t.holdout_accuracy.map(|x| format!("{x:.6}")))
                    )?;
                }
                Ok(())
            })?;
        }
        Format::Json => {
            sink.json(&format!("scores.{ext}"), &scores)?;
            sink.json(&format!("thresholds.{ext}"), &thresholds)?;
        }
    }
    for t in &thresholds {
        let fold = t.fold.map_or_else(|| "all".to_string(), |f| f.to_string());
        println!("fold {fold}: threshold {:.4} accuracy {:.4}", t.threshold, t.accuracy);
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    user_id: UserId,
    role: Role,
    days_cheating: u32,
    sum_validity: f64,
    sum_dubious: f64,
    count_low_validity: u32,
    count_high_dubious: u32,
}

fn service_sim(cfg: &ServiceConfig, sink: &mut Sink, format: Format) -> Result<()> {
    let pool = match &cfg.score_pool {
        Some(path) => Some(
            ScorePool::read_csv(BufReader::new(
                File::open(path).with_context(|| format!("opening {}", path.display()))?,
            ))
            .with_context(|| format!("reading {}", path.display()))?,
        ),
        None => None,
    };
    let mut sim = ServiceSim::new(cfg.clone(), pool)?;
    let mut days: Vec<DaySummary> = Vec::new();
    for _ in 0..cfg.days {
        let summary = sim.step()?;
        let name = format!("day_{:03}.{}", summary.day, format.ext());
        match format {
            Format::Csv => sink.write(&name, |w| Ok(write_report(sim.population(), w)?))?,
            Format::Json => {
                let rows: Vec<ReportRow> = sim
                    .population()
                    .iter()
                    .map(|u| ReportRow {
                        user_id: u.id,
                        role: u.role(),
                        days_cheating: u.days_cheating,
                        sum_validity: u.sum_validity,
                        sum_dubious: u.sum_dubious,
                        count_low_validity: u.count_low_validity,
                        count_high_dubious: u.count_high_dubious,
                    })
                    .collect();
                sink.json(&name, &rows)?
            }
        }
        println!(
            "day {}: {:.2}% cheating, adding accuracy {:.4}, counting accuracy {:.4}",
            summary.day,
            summary.cheating_fraction * 100.0,
            summary.adding.accuracy,
            summary.counting.accuracy
        );
        days.push(summary);
    }
    let name = format!("summary.{}", format.ext());
    match format {
        Format::Csv => sink.write(&name, |w| {
            writeln!(
                w,
                "day,cheaters,cheating_fraction,matches,adding_threshold,adding_accuracy,counting_threshold,counting_accuracy,mean_high_dubious_cheaters,mean_high_dubious_normals,mean_low_validity_cheaters,mean_low_validity_normals"
            )?;
            for d in &days {
                let f = |x: Option<f64>| opt(x.map(|v| format!("{v:.6}")));
                writeln!(
                    w,
                    "{},{},{:.6},{},{:.6},{:.6},{:.6},{:.6},{},{},{},{}",
                    d.day,
                    d.cheaters,
                    d.cheating_fraction,
                    d.matches,
                    d.adding.threshold,
                    d.adding.accuracy,
                    d.counting.threshold,
                    d.counting.accuracy,
                    f(d.mean_high_dubious_cheaters),
                    f(d.mean_high_dubious_normals),
                    f(d.mean_low_validity_cheaters),
                    f(d.mean_low_validity_normals)
                )?;
            }
            Ok(())
        })?,
        Format::Json => sink.json(&name, &days)?,
    }
    Ok(())
}
