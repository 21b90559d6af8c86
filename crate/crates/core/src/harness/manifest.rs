use std::path::PathBuf;

use sha2::{Digest, Sha256};

use super::config::HarnessConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceSource {
    Generated { seed: u64 },
    Csv(PathBuf),
}

/// Provenance record written next to the reports of one `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario: String,
    pub resolved: String,
    pub trace_source: TraceSource,
    pub outputs: Vec<PathBuf>,
    pub config_hash: String,
}

/// SHA-256 of the canonical resolved configuration, hex encoded.
pub fn config_hash(cfg: &HarnessConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(cfg: &HarnessConfig, trace_source: TraceSource, outputs: Vec<PathBuf>) -> Self {
        Self {
            scenario: cfg.scenario.clone(),
            resolved: cfg.canonical(),
            trace_source,
            outputs,
            config_hash: config_hash(cfg),
        }
    }

    pub fn render(&self) -> String {
        let source = match &self.trace_source {
            TraceSource::Generated { seed } => format!("generated seed={seed}"),
            TraceSource::Csv(p) => format!("csv {}", p.display()),
        };
        let mut out = format!(
            "scenario: {}\nconfig_hash: {}\ntrace: {source}\noutputs:\n",
            self.scenario, self.config_hash
        );
        for o in &self.outputs {
            out.push_str(&format!("  {}\n", o.display()));
        }
        out.push_str("resolved:\n");
        for line in self.resolved.lines() {
            out.push_str(&format!("  {line}\n"));
        }
        out
    }
}
