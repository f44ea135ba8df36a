//! Sweep configuration files.
//!
//! ```text
//! # harmonic trap approaching a*
//! potential  = power_well h0=1 p=2
//! L          = 16
//! n          = 512
//! a_schedule = geom:0.1,0.5,6
//! tol        = 1e-7
//! max_iters  = 20000
//! out_dir    = report
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gp_core::potentials::PotentialSpec;
use gp_core::Grid2D;

use crate::Failure;

const KEYS: [&str; 7] = ["potential", "L", "n", "a_schedule", "tol", "max_iters", "out_dir"];

/// Couplings to visit, possibly relative to `a*`.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    /// Absolute couplings.
    Absolute(Vec<f64>),
    /// Fractions `a/a*`.
    Fractions(Vec<f64>),
    /// `a_k = a*·(1 - start·ratio^k)` for `k = 0..count`.
    Geometric { start: f64, ratio: f64, count: usize },
}

impl Schedule {
    pub fn couplings(&self, a_star: f64) -> Vec<f64> {
        match self {
            Schedule::Absolute(v) => v.clone(),
            Schedule::Fractions(v) => v.iter().map(|f| f * a_star).collect(),
            Schedule::Geometric { start, ratio, count } => (0..*count)
                .map(|k| a_star * (1.0 - start * ratio.powi(k as i32)))
                .collect(),
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        let list = |body: &str| -> Result<Vec<f64>, String> {
            body.split(',').map(|t| number(t.trim())).collect()
        };
        if let Some(body) = s.strip_prefix("geom:") {
            let parts = list(body)?;
            let [start, ratio, count] = parts[..] else {
                return Err(format!("geom schedule needs start,ratio,count; got {body:?}"));
            };
            if !(start > 0.0 && start < 1.0) || !(ratio > 0.0 && ratio < 1.0) {
                return Err("geom start and ratio must lie in (0, 1)".into());
            }
            if count < 1.0 || count.fract() != 0.0 {
                return Err(format!("geom count must be a positive integer, got {count}"));
            }
            return Ok(Schedule::Geometric {
                start,
                ratio,
                count: count as usize,
            });
        }
        if let Some(body) = s.strip_prefix("frac:") {
            let v = list(body)?;
            if v.iter().any(|f| !(*f >= 0.0 && *f < 1.0)) {
                return Err("fractions of a* must lie in [0, 1)".into());
            }
            return Ok(Schedule::Fractions(v));
        }
        let v = list(s)?;
        if v.iter().any(|a| !(*a >= 0.0)) {
            return Err("couplings must be nonnegative".into());
        }
        Ok(Schedule::Absolute(v))
    }
}

fn number(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("not a finite number: {s:?}")),
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    pub potential: PotentialSpec,
    pub half_width: f64,
    pub n: usize,
    pub schedule: Schedule,
    pub tol: f64,
    pub max_iters: usize,
    pub out_dir: Option<PathBuf>,
    /// The key/value pairs as written.
    pub echo: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut echo = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected `key = value`", lineno + 1));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(format!("line {}: unknown key {key:?}", lineno + 1));
            }
            if echo.insert(key.to_string(), value.to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key:?}", lineno + 1));
            }
        }
        let get = |k: &str| echo.get(k).map(String::as_str).ok_or(format!("missing key {k:?}"));

        let potential: PotentialSpec = get("potential")?.parse().map_err(|e| format!("potential: {e}"))?;
        let half_width = number(get("L")?).map_err(|e| format!("L: {e}"))?;
        let n: usize = get("n")?.parse().map_err(|_| format!("n: not a sample count: {:?}", echo["n"]))?;
        Grid2D::new(half_width, n).map_err(|e| e.to_string())?;
        let schedule = Schedule::parse(get("a_schedule")?).map_err(|e| format!("a_schedule: {e}"))?;
        let tol = match echo.get("tol") {
            Some(t) => number(t).map_err(|e| format!("tol: {e}"))?,
            None => 1e-7,
        };
        if !(tol > 0.0) {
            return Err("tol must be positive".into());
        }
        let max_iters = match echo.get("max_iters") {
            Some(m) => m.parse().map_err(|_| format!("max_iters: not a count: {m:?}"))?,
            None => 20_000,
        };
        let out_dir = echo.get("out_dir").map(PathBuf::from);
        Ok(Self {
            potential,
            half_width,
            n,
            schedule,
            tol,
            max_iters,
            out_dir,
            echo,
        })
    }

    /// Ratio exponent for warm starts: `1/(p+2)` in a power well, else the
    /// harmonic value.
    pub fn width_exponent(&self) -> f64 {
        match self.potential {
            PotentialSpec::PowerWell { p, .. } => 1.0 / (p + 2.0),
            _ => 0.25,
        }
    }
}
