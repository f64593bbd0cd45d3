//! Front end of the `mq` command: configuration parsing, subcommand drivers
//! and deterministic artifact output.

pub mod commands;
pub mod config;
pub mod output;

use commands::{execute, Command, VerdictEntry};
use config::RunConfig;
use serde::Serialize;
use std::path::Path;

/// Record of one run, written as `manifest.json` next to the artifacts.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub verdicts: Vec<VerdictEntry>,
    pub outputs: Vec<String>,
    /// Wall-clock seconds; the only non-reproducible field.
    pub timings: Vec<(String, f64)>,
    pub error: Option<String>,
}

impl RunManifest {
    /// Whether the run succeeded: no error and every verdict passed.
    pub fn success(&self) -> bool {
        self.error.is_none() && self.verdicts.iter().all(|v| v.passed)
    }
}

/// Runs `cmd` and writes its artifacts and `manifest.json` into `out`.
pub fn run(cfg: &RunConfig, cmd: &Command, out: &Path) -> RunManifest {
    let mut manifest = RunManifest {
        tool: "mq",
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        seed: cfg.seed,
        config: cfg.clone(),
        verdicts: Vec::new(),
        outputs: Vec::new(),
        timings: Vec::new(),
        error: None,
    };
    match execute(cfg, cmd, out) {
        Ok(o) => {
            manifest.verdicts = o.verdicts;
            manifest.outputs = o.outputs;
            manifest.timings = o.timings;
        }
        Err(e) => manifest.error = Some(e.to_string()),
    }
    if let Err(e) = output::write_json(out, "manifest.json", &manifest) {
        manifest.error.get_or_insert(format!("writing manifest: {e}"));
    }
    manifest
}
