//! Output directories and their `manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gp_core::grid::write_gpf_file;
use gp_core::{Field, Grid2D};
use serde::Serialize;

use crate::format;
use crate::Failure;

pub const MANIFEST: &str = "manifest.json";

/// No subcommand draws random numbers; the seed is recorded so that any
/// future perturbation has a single documented source.
pub const SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NonConvergence,
    InsufficientData,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridInfo {
    pub half_width: f64,
    pub n: usize,
    pub dx: f64,
}

impl From<&Grid2D> for GridInfo {
    fn from(g: &Grid2D) -> Self {
        Self {
            half_width: g.half_width(),
            n: g.n(),
            dx: g.dx(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub grid: Option<GridInfo>,
    pub critical_coupling: Option<f64>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// A directory being filled by one run. Every file goes through here so the
/// manifest lists exactly what was written.
pub struct OutDir {
    root: PathBuf,
    started: Instant,
    command: String,
    pub config: BTreeMap<String, String>,
    pub grid: Option<GridInfo>,
    pub critical_coupling: Option<f64>,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path, command: &str) -> Result<Self, Failure> {
        std::fs::create_dir_all(root)
            .map_err(|e| Failure::Other(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            started: Instant::now(),
            command: command.to_string(),
            config: BTreeMap::new(),
            grid: None,
            critical_coupling: None,
            written: Vec::new(),
        })
    }

    fn record(&mut self, name: &str) -> PathBuf {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), Failure> {
        let path = self.record(name);
        std::fs::write(&path, body).map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))
    }

    pub fn field(&mut self, name: &str, u: &Field) -> Result<(), Failure> {
        let path = self.record(name);
        write_gpf_file(&path, u).map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))
    }

    pub fn finish(self, status: Status, message: Option<String>) -> Result<(), Failure> {
        let m = RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: self.config,
            grid: self.grid,
            critical_coupling: self.critical_coupling,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.written,
            seed: SEED,
            status,
            message,
        };
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, format::json(&m)?)
            .map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))
    }
}
