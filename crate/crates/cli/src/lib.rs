//! Command-line front end: every run resolves its flags into a [`Plan`],
//! executes it and records a [`Manifest`] beside the outputs.

pub mod args;
pub mod grid;
pub mod manifest;
pub mod plan;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub use args::{Cli, Command};
pub use manifest::{Manifest, MANIFEST_FILE};
pub use plan::{Format, Plan};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Replay(r) => {
            let manifest = Manifest::read(&r.manifest)?;
            if manifest.version != env!("CARGO_PKG_VERSION") {
                eprintln!(
                    "warning: manifest written by version {}, replaying with {}",
                    manifest.version,
                    env!("CARGO_PKG_VERSION")
                );
            }
            let out = match r.out {
                Some(o) => o,
                None => r
                    .manifest
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            };
            with_jobs(r.jobs, || record(&manifest.plan, &out, manifest.format))
        }
        other => {
            let (plan, common) = other.resolve()?.expect("not a replay");
            with_jobs(common.jobs, || record(&plan, &common.out, common.format))
        }
    }
}

fn record(plan: &Plan, out: &Path, format: Format) -> Result<()> {
    let outputs = plan.execute(out, format)?;
    Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: plan.seed(),
        format,
        plan: plan.clone(),
        outputs,
    }
    .write(out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(0) => bail!("--jobs must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")?
            .install(f),
    }
}
