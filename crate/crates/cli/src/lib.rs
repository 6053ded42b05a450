//! Command-line front end: config ingestion, subcommand dispatch and file
//! emission with run manifests.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::path::Path;

use gravcorr::montecarlo::desk_preset;

use crate::args::{Cli, Command};
use crate::commands::Payload;
use crate::config::{parse_config, ResolvedConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{now_utc, RunManifest, STDOUT, TOOL_VERSION};

/// Rendered outputs of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Main output text (also written to `--out` when given).
    pub text: String,
    pub manifest: RunManifest,
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e))
}

/// Loads the input configuration: the given file, or the built-in preset
/// for `command` (the desk-scale boosted set for `montecarlo`, the
/// gram-scale reference otherwise).
fn load_config(cli: &Cli) -> CliResult<(ResolvedConfig, String)> {
    match &cli.config {
        Some(p) => Ok((parse_config(p)?, p.display().to_string())),
        None => match cli.command {
            Command::Montecarlo(_) => Ok((
                ResolvedConfig::from_system(&desk_preset()?)?,
                "builtin:desk".into(),
            )),
            _ => Ok((ResolvedConfig::reference(), "builtin:reference".into())),
        },
    }
}

/// Runs a parsed command line, writing `--out` and any side files.
pub fn run(cli: &Cli, argv: Vec<String>) -> CliResult<RunOutput> {
    let started_utc = now_utc();
    let (mut config, config_source) = load_config(cli)?;
    if let Command::Montecarlo(a) = &cli.command {
        commands::montecarlo_overrides(&mut config, a);
    }
    let sys = config.to_system()?;
    let payload = match &cli.command {
        Command::Spectra(a) => commands::spectra(&sys, a)?,
        Command::Snr(a) => Payload::Report(commands::snr(&sys, a)?),
        Command::Tau(a) => Payload::Report(commands::tau(&sys, a)?),
        Command::Negativity(a) => Payload::Report(commands::negativity(&sys, a)?),
        Command::Threshold(a) => Payload::Report(commands::threshold(&sys, a)?),
        Command::Formfactor(a) => commands::formfactor(sys.density(), a)?,
        Command::Montecarlo(a) => commands::montecarlo(&sys, cli.seed, a)?,
        Command::Sweep(a) => commands::sweep(&config, a)?,
    };
    let trials_path = match &cli.command {
        Command::Montecarlo(a) => a.trials_csv.clone(),
        _ => None,
    };
    let mut outputs = vec![cli
        .out
        .as_ref()
        .map_or(STDOUT.to_string(), |p| p.display().to_string())];
    outputs.extend(trials_path.iter().map(|p| p.display().to_string()));
    let seeds = match cli.command {
        Command::Montecarlo(_) => vec![cli.seed],
        _ => Vec::new(),
    };
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        argv,
        tool_version: TOOL_VERSION.to_string(),
        config_source,
        seeds,
        started_utc,
        finished_utc: now_utc(),
        outputs,
        params_echo: config,
    };
    let format = cli.format.unwrap_or(cli.command.default_format());
    let text = output::render(&payload, format, &manifest);
    if let Some(p) = &cli.out {
        write_file(p, &text)?;
    }
    if let (Some(p), Payload::Ensemble { trials, .. }) = (&trials_path, &payload) {
        write_file(p, &output::trials_csv(trials, &manifest))?;
    }
    Ok(RunOutput { text, manifest })
}

/// JSON value of a rendered JSON document, for callers that post-process.
pub fn parse_json_output(out: &RunOutput) -> CliResult<serde_json::Value> {
    serde_json::from_str(&out.text).map_err(|e| CliError::Parse {
        path: STDOUT.into(),
        message: e.to_string(),
    })
}
