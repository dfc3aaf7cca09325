use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Human,
}

/// Settings shared by every subcommand. Echoed into each artifact.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    /// Largest working precision in decimal digits.
    #[arg(long, global = true, env = "ROBIN_PRECISION", default_value_t = 200)]
    pub precision: u32,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "ROBIN_THREADS")]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,

    /// Largest integer a bulk scan may reach.
    #[arg(long, global = true, default_value_t = 1_000_000_000)]
    pub scan_cap: u64,

    /// Largest n_alpha the exception enumerator accepts.
    #[arg(long, global = true, default_value_t = 1_000_000_000)]
    pub enum_cap: u64,

    /// Candidates the exception enumerator may visit before stopping.
    #[arg(long, global = true, default_value_t = 20_000_000)]
    pub candidate_cap: u64,

    /// Largest log log n the CA verifier may be asked for.
    #[arg(long, global = true, default_value_t = 22.0)]
    pub loglog_cap: f64,

    /// Directory for beta-max checkpoints.
    #[arg(long, global = true, env = "ROBIN_CHECKPOINT_DIR")]
    pub checkpoint_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn threads(&self) -> usize {
        self.threads.unwrap_or_else(robin_core::par::default_threads).max(1)
    }

    pub fn validate(&self) -> robin_core::Result<()> {
        use robin_core::Error;
        if self.precision < 30 {
            return Err(Error::InvalidArgument(format!("precision must be at least 30, got {}", self.precision)));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be positive".into()));
        }
        if self.scan_cap == 0 || self.enum_cap == 0 || self.candidate_cap == 0 || !(self.loglog_cap > 0.0) {
            return Err(Error::InvalidArgument("caps must be positive".into()));
        }
        Ok(())
    }

    /// The form written into artifacts: thread count resolved.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["threads"] = self.threads().into();
        v
    }
}
