use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::config_hash;
use crate::CliError;

/// Every report carries the inputs needed to reproduce it.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub config: &'a C,
    pub result: R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(seed: u64, config: &'a C, result: R) -> Self {
        Envelope {
            tool: "entsim",
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config_hash: config_hash(config),
            config,
            result,
        }
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
