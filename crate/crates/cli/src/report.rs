//! JSON report envelope.

use std::io::Write;
use std::path::Path;

use epfit_core::fisher::{FisherMatrix, Variances};
use epfit_core::select::Volume;
use epfit_core::{EpdParams, FitConfig, FitResult, ScoreFamily, SelectionReport, SimulationReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEcho {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Inputs {
    pub files: Vec<FileDigest>,
    pub seed: Option<u64>,
    /// Observations used after any augmentation.
    pub n: Option<usize>,
    pub outliers_added: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

// one payload per report; boxing buys nothing
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Fit {
        config: FitConfig,
        result: FitResult,
    },
    Tune {
        selection: SelectionReport,
    },
    Simulate {
        simulation: SimulationReport,
    },
    Fisher {
        family: ScoreFamily,
        params: EpdParams,
        fisher: FisherMatrix,
        variances: Variances,
        volume: Volume,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub command: CommandEcho,
    pub inputs: Inputs,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl Report {
    pub fn new(command: CommandEcho, inputs: Inputs, payload: Payload) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command,
            inputs,
            payload,
            timing: None,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Computation(format!("report serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn digest(role: &str, path: &Path, bytes: &[u8]) -> FileDigest {
    FileDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: sha256_hex(bytes),
    }
}

/// Write to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                // a closed reader (e.g. `| head`) is not a failure
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| CliError::Computation(format!("stdout: {e}"))),
            }
        }
    }
}
