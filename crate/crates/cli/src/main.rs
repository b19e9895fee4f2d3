//! `harassment`: batch entry points for the review-mining pipeline.

mod args;
mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::Parser;
use serde_json::json;
use tracing_subscriber::EnvFilter;

use args::Cli;
use config::PipelineConfig;
use error::CliError;

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let name = cli.command.name();
    let started = Utc::now();
    let run_summary = cli.run_summary.clone();
    let result = load_config(&cli).and_then(|cfg| commands::run(cli.command, &cfg).map(|o| (o, cfg.rng_seed)));
    let finished = Utc::now();
    let stamp = |t: chrono::DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Millis, true);
    let (summary, code) = match result {
        Ok((outcome, seed)) => (
            json!({
                "command": name,
                "status": "ok",
                "rng_seed": seed,
                "started_at": stamp(started),
                "finished_at": stamp(finished),
                "artifacts": outcome.artifacts,
                "details": outcome.details,
            }),
            0,
        ),
        Err(e) => {
            eprintln!("error: {e}");
            (
                json!({
                    "command": name,
                    "status": "error",
                    "exit_code": e.exit_code(),
                    "error": e.to_string(),
                    "started_at": stamp(started),
                    "finished_at": stamp(finished),
                }),
                e.exit_code(),
            )
        }
    };
    if code == 0 {
        println!("{summary}");
    }
    if let Some(path) = run_summary {
        if let Err(e) = io::write_json(&path, &summary) {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    }
    ExitCode::from(code)
}
