use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::{resolve, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

pub mod char;
pub mod claim5;
pub mod dichotomy;
pub mod lambda;
pub mod lemmac;
pub mod map_diag;
pub mod profile;

pub use lambda::parse_point;

/// Resolved run context shared by all commands.
pub struct Ctx {
    pub config: ExperimentConfig,
}

impl Ctx {
    pub fn resolve<P>(name: &str, seed: u64, out: Option<PathBuf>, file: Option<&Value>, flags: &Value) -> CliResult<(Self, P)>
    where
        P: Serialize + DeserializeOwned + Default,
    {
        let p: P = resolve(file, flags)?;
        let params = serde_json::to_value(&p).expect("params serialize");
        Ok((Self { config: ExperimentConfig { command: name.to_string(), seed, out, params } }, p))
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// `--out`, or `nevlab-out/<command>`.
    pub fn out_root(&self) -> PathBuf {
        self.config.out.clone().unwrap_or_else(|| Path::new("nevlab-out").join(&self.config.command))
    }

    pub fn out_dir(&self) -> CliResult<OutDir> {
        OutDir::create(&self.out_root())
    }

    pub fn finish(&self, out: OutDir) -> CliResult<()> {
        let m = out.finish(&self.config)?;
        println!("manifest: {}", m.display());
        Ok(())
    }
}

/// A named pass/fail entry in a diagnostics bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

/// Exit-5 error naming every failed check, if any.
pub fn failed(checks: &[Check]) -> CliResult<()> {
    let bad: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(bad.join(", ")))
    }
}

pub fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
}
