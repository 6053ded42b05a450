//! Run provenance attached to every output file.

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::config::ResolvedConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stdout is listed as `-`.
pub const STDOUT: &str = "-";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    /// Config file path, or `builtin:<preset>`.
    pub config_source: String,
    pub seeds: Vec<u64>,
    pub started_utc: String,
    pub finished_utc: String,
    pub outputs: Vec<String>,
    /// Resolved input parameters; a valid config file in its own right.
    pub params_echo: ResolvedConfig,
}

pub fn now_utc() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    /// `#`-prefixed header lines for CSV outputs. The echo is one line of
    /// JSON.
    pub fn comment_lines(&self) -> Vec<String> {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        vec![
            format!("gravcorr {} {}", self.tool_version, self.command),
            format!("argv: {}", self.argv.join(" ")),
            format!("config_source: {}", self.config_source),
            format!("seeds: {}", seeds.join(",")),
            format!("started_utc: {}", self.started_utc),
            format!("finished_utc: {}", self.finished_utc),
            format!("outputs: {}", self.outputs.join(",")),
            format!(
                "params_echo: {}",
                serde_json::to_string(&self.params_echo).expect("config serialises")
            ),
        ]
    }

    /// Recovers the echo from CSV header lines written by
    /// [`comment_lines`](Self::comment_lines).
    pub fn echo_from_csv(text: &str) -> Option<ResolvedConfig> {
        text.lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# params_echo: "))
            .and_then(|json| serde_json::from_str(json).ok())
    }
}
