#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde::Serialize;

use carleman_lab::Error as LabError;
use config::{Cli, ConfigError, RunConfig};
use output::OutputDir;

const THREADS_VAR: &str = "CARLEMAN_LAB_THREADS";

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("cannot configure {n} threads: {e}")))
}

/// Bad input from the user maps to exit code 2.
fn is_config_error(e: &anyhow::Error) -> bool {
    if e.downcast_ref::<ConfigError>().is_some() {
        return true;
    }
    matches!(
        e.downcast_ref::<LabError>(),
        Some(LabError::InvalidParameter(_) | LabError::OutOfRegime(_) | LabError::Aliasing { .. })
    )
}

#[derive(Serialize)]
struct Meta<'a> {
    #[serde(flatten)]
    base: output::Metadata<'a, RunConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<serde_json::Value>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let cfg = match configure_threads().and_then(|_| RunConfig::resolve(cli.command, cli.flags)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = OutputDir::create(&cfg.out).and_then(|out| {
        let outcome = commands::run(&cfg, &out)?;
        let meta = Meta {
            base: output::Metadata {
                command: cfg.command.name(),
                version: env!("CARGO_PKG_VERSION"),
                started: started.to_rfc3339(),
                elapsed_seconds: clock.elapsed().as_secs_f64(),
                threads: rayon::current_num_threads(),
                config: &cfg,
                artifacts: outcome.artifacts.clone(),
            },
            timings: outcome.extra.clone(),
        };
        out.write_json(&format!("{}.meta.json", cfg.command.name()), &meta)?;
        Ok((out, outcome))
    });
    match result {
        Ok((out, outcome)) => {
            for a in &outcome.artifacts {
                println!("wrote {}", out.path(a).display());
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &outcome.failures {
                    eprintln!("assertion failed: {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
        }
    }
}
