//! External potentials: construction from a textual spec, the essential
//! infimum, and the check that `V ∗ |u|²` attains its minimum.
//!
//! Spec grammar (whitespace separated, parameters as `key=value`):
//!
//! ```text
//! zero
//! constant c=0.5
//! power_well h0=1 p=2 rcut=8     # rcut defaults to L/2
//! lattice s=0.5 period=1         # s·(cos 2πx/T + cos 2πy/T)
//! sinc                           # sin|x| / |x|
//! file:path/to/v.gpf
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{convolve_potential, read_gpf_file, Field, Grid2D};

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Zero,
    Constant { value: f64 },
    /// `h0·|x|^p`, held constant beyond `rcut`.
    PowerWell { h0: f64, p: f64, rcut: Option<f64> },
    /// `s·(cos(2πx/T) + cos(2πy/T))`.
    Lattice { amplitude: f64, period: f64 },
    Sinc,
    File(PathBuf),
}

/// How an essential infimum was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssInf {
    pub value: f64,
    /// Modulus-of-continuity allowance already subtracted from a sampled minimum.
    pub allowance: f64,
    pub analytic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct V2Report {
    pub conv_min_value: f64,
    pub conv_min_location: (f64, f64),
    pub attained_interior: bool,
    /// `conv_min_value - (ess_inf + eps)`.
    pub margin: f64,
    pub eps: f64,
    pub ess_inf: f64,
    /// The convolution is constant, so the minimum is attained everywhere.
    pub degenerate_flat: bool,
    /// Change of the minimum when the box is doubled, when that check was possible.
    pub doubling_shift: Option<f64>,
}

/// Relative stability of the convolution minimum under box doubling.
pub const DOUBLING_TOL: f64 = 1e-3;

fn parse_params(kind: &str, words: &[&str], allowed: &[&str]) -> Result<Vec<Option<f64>>> {
    let mut out = vec![None; allowed.len()];
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("{kind}: expected key=value, got `{w}`")))?;
        let slot = allowed
            .iter()
            .position(|a| *a == k)
            .ok_or_else(|| Error::InvalidArgument(format!("{kind}: unknown parameter `{k}`")))?;
        let x: f64 = v
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{kind}: `{v}` is not a number")))?;
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("{kind}: `{k}` must be finite")));
        }
        if out[slot].replace(x).is_some() {
            return Err(Error::InvalidArgument(format!("{kind}: `{k}` given twice")));
        }
    }
    Ok(out)
}

fn required(kind: &str, name: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidArgument(format!("{kind}: missing `{name}`")))
}

impl FromStr for PotentialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::InvalidArgument("file: missing path".into()));
            }
            return Ok(Self::File(PathBuf::from(path)));
        }
        let words: Vec<&str> = s.split_whitespace().collect();
        let (&kind, rest) = words
            .split_first()
            .ok_or_else(|| Error::InvalidArgument("empty potential spec".into()))?;
        let spec = match kind {
            "zero" => {
                parse_params(kind, rest, &[])?;
                Self::Zero
            }
            "sinc" => {
                parse_params(kind, rest, &[])?;
                Self::Sinc
            }
            "constant" => {
                let p = parse_params(kind, rest, &["c"])?;
                Self::Constant {
                    value: required(kind, "c", p[0])?,
                }
            }
            "power_well" => {
                let p = parse_params(kind, rest, &["h0", "p", "rcut"])?;
                Self::PowerWell {
                    h0: required(kind, "h0", p[0])?,
                    p: required(kind, "p", p[1])?,
                    rcut: p[2],
                }
            }
            "lattice" => {
                let p = parse_params(kind, rest, &["s", "period"])?;
                Self::Lattice {
                    amplitude: required(kind, "s", p[0])?,
                    period: p[1].unwrap_or(1.0),
                }
            }
            _ => return Err(Error::InvalidArgument(format!("unknown potential kind `{kind}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Constant { value } => write!(f, "constant c={value}"),
            Self::PowerWell { h0, p, rcut } => {
                write!(f, "power_well h0={h0} p={p}")?;
                if let Some(r) = rcut {
                    write!(f, " rcut={r}")?;
                }
                Ok(())
            }
            Self::Lattice { amplitude, period } => write!(f, "lattice s={amplitude} period={period}"),
            Self::Sinc => write!(f, "sinc"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// `sin r / r` with the removable singularity filled in.
pub fn sinc(r: f64) -> f64 {
    if r.abs() < 1e-4 {
        1.0 - r * r / 6.0
    } else {
        r.sin() / r
    }
}

/// Global minimum of `sin r / r`, at the first positive root of `tan r = r`.
pub fn sinc_minimum() -> f64 {
    // Newton on g(r) = sin r - r cos r, g' = r sin r
    let mut r: f64 = 4.5;
    for _ in 0..50 {
        let step = (r.sin() - r * r.cos()) / (r * r.sin());
        r -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    r.cos()
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::PowerWell { h0, p, rcut } => {
                if !(h0 > 0.0) {
                    return Err(Error::InvalidArgument("power_well: h0 must be positive".into()));
                }
                if !(p > 0.0 && p <= 4.0) {
                    return Err(Error::InvalidArgument("power_well: p must lie in (0, 4]".into()));
                }
                if let Some(r) = rcut {
                    if !(r > 0.0) {
                        return Err(Error::InvalidArgument("power_well: rcut must be positive".into()));
                    }
                }
            }
            Self::Lattice { period, .. } if !(period > 0.0) => {
                return Err(Error::InvalidArgument("lattice: period must be positive".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Fills grid-dependent defaults (the power-well cut-off `L/2`) so that
    /// the same potential can be realized on a larger box.
    pub fn resolved(&self, grid: &Grid2D) -> Self {
        match *self {
            Self::PowerWell { h0, p, rcut: None } => Self::PowerWell {
                h0,
                p,
                rcut: Some(grid.half_width() / 2.0),
            },
            _ => self.clone(),
        }
    }

    pub fn is_periodic_lattice(&self) -> bool {
        matches!(self, Self::Lattice { .. })
    }

    /// Samples the potential on `grid`.
    pub fn realize(&self, grid: &Grid2D) -> Result<Field> {
        self.validate()?;
        match self.resolved(grid) {
            Self::Zero => Ok(Field::zeros(grid)),
            Self::Constant { value } => Ok(Field::constant(grid, value)),
            Self::PowerWell { h0, p, rcut } => {
                let rc = rcut.unwrap_or(grid.half_width() / 2.0);
                Ok(Field::from_fn(grid, |x, y| h0 * (x * x + y * y).min(rc * rc).powf(0.5 * p)))
            }
            Self::Lattice { amplitude, period } => {
                let cells = 2.0 * grid.half_width() / period;
                if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "lattice period {period} does not tile the box of width {}",
                        2.0 * grid.half_width()
                    )));
                }
                let k = 2.0 * PI / period;
                Ok(Field::from_fn(grid, |x, y| amplitude * ((k * x).cos() + (k * y).cos())))
            }
            Self::Sinc => Ok(Field::from_fn(grid, |x, y| sinc((x * x + y * y).sqrt()))),
            Self::File(path) => {
                let v = read_gpf_file(&path).map_err(|e| match e {
                    Error::Io(io) => Error::FileFormat(format!("{}: {io}", path.display())),
                    other => other,
                })?;
                if !v.grid().same_as(grid) {
                    return Err(Error::FileFormat(format!(
                        "{}: grid (L={}, n={}) differs from the run grid (L={}, n={})",
                        path.display(),
                        v.grid().half_width(),
                        v.grid().n(),
                        grid.half_width(),
                        grid.n()
                    )));
                }
                Ok(Field::from_raw(grid, v.into_values()))
            }
        }
    }

    /// Essential infimum: analytic for every built-in kind, otherwise the
    /// sampled minimum of `v` lowered by a continuity allowance.
    pub fn ess_inf(&self, v: &Field) -> EssInf {
        let analytic = |value| EssInf {
            value,
            allowance: 0.0,
            analytic: true,
        };
        match *self {
            Self::Zero => analytic(0.0),
            Self::Constant { value } => analytic(value),
            Self::PowerWell { .. } => analytic(0.0),
            Self::Lattice { amplitude, .. } => analytic(-2.0 * amplitude.abs()),
            Self::Sinc => analytic(sinc_minimum()),
            Self::File(_) => sampled_ess_inf(v),
        }
    }
}

/// Grid minimum minus half the largest jump between neighboring samples.
pub fn sampled_ess_inf(v: &Field) -> EssInf {
    let n = v.grid().n();
    let vals = v.values();
    let mut jump: f64 = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let c = vals[iy * n + ix];
            jump = jump
                .max((vals[iy * n + (ix + 1) % n] - c).abs())
                .max((vals[((iy + 1) % n) * n + ix] - c).abs());
        }
    }
    let allowance = 0.5 * jump;
    EssInf {
        value: v.min() - allowance,
        allowance,
        analytic: false,
    }
}

/// Parabolic refinement of a grid minimum along both axes; returns the
/// location offset in cells and the refined value.
fn refine_minimum(f: &Field, ix: usize, iy: usize) -> ((f64, f64), f64) {
    let n = f.grid().n();
    let at = |dx: isize, dy: isize| {
        let x = (ix as isize + dx).rem_euclid(n as isize) as usize;
        let y = (iy as isize + dy).rem_euclid(n as isize) as usize;
        f.at(x, y)
    };
    let f0 = at(0, 0);
    let axis = |m: f64, p: f64| {
        let curv = m - 2.0 * f0 + p;
        if curv > 0.0 {
            let t = (0.5 * (m - p) / curv).clamp(-0.5, 0.5);
            (t, -0.25 * (m - p) * t)
        } else {
            (0.0, 0.0)
        }
    };
    let (tx, dx) = axis(at(-1, 0), at(1, 0));
    let (ty, dy) = axis(at(0, -1), at(0, 1));
    ((tx, ty), f0 + dx + dy)
}

fn conv_minimum(v: &Field, u: &Field) -> Result<(f64, (f64, f64), bool)> {
    let dens = u.map(|x| x * x);
    let conv = convolve_potential(v, &dens)?;
    let (ix, iy) = conv.argmin();
    let flat = conv.max() - conv.min() <= 1e-12 * (1.0 + conv.min().abs());
    let g = u.grid();
    if flat {
        return Ok((conv.min(), (g.coord(ix), g.coord(iy)), true));
    }
    let ((tx, ty), value) = refine_minimum(&conv, ix, iy);
    let loc = (
        g.wrap(g.coord(ix) + tx * g.dx()),
        g.wrap(g.coord(iy) + ty * g.dx()),
    );
    Ok((value, loc, false))
}

/// Evaluates the minimum of `V ∗ |u|²` for one density and judges whether it is
/// attained away from the artificial box boundary.
///
/// A periodic lattice always attains its minimum. Otherwise the minimizer must
/// sit more than two cells from the boundary and its value must survive
/// doubling the box to [`DOUBLING_TOL`]; potentials read from file cannot be
/// re-realized on a larger box, so for them only the boundary distance is used.
pub fn check_v2(spec: &PotentialSpec, u: &Field, eps: f64) -> Result<V2Report> {
    let grid = u.grid();
    let mass = u.mass();
    if (mass - 1.0).abs() > crate::energy::MASS_TOL {
        return Err(Error::UnnormalizedInput { mass });
    }
    let spec = spec.resolved(grid);
    let v = spec.realize(grid)?;
    let ess_inf = spec.ess_inf(&v).value;
    let (value, loc, flat) = conv_minimum(&v, u)?;

    let mut doubling_shift = None;
    let attained_interior = if flat || spec.is_periodic_lattice() {
        true
    } else {
        let edge = grid.half_width() - 2.0 * grid.dx();
        let inside = loc.0.abs() < edge && loc.1.abs() < edge;
        if matches!(spec, PotentialSpec::File(_)) {
            inside
        } else {
            let big = Grid2D::new(2.0 * grid.half_width(), 2 * grid.n())?;
            let (v_big, _, _) = conv_minimum(&spec.realize(&big)?, &u.embed(&big, 0.0)?)?;
            let shift = (v_big - value).abs();
            doubling_shift = Some(shift);
            inside && shift <= DOUBLING_TOL * value.abs().max(1.0)
        }
    };
    Ok(V2Report {
        conv_min_value: value,
        conv_min_location: loc,
        attained_interior,
        margin: value - (ess_inf + eps),
        eps,
        ess_inf,
        degenerate_flat: flat,
        doubling_shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_round_trips() {
        for s in [
            "zero",
            "constant c=0.5",
            "power_well h0=1 p=2 rcut=8",
            "power_well h0=2 p=1.5",
            "lattice s=0.5 period=1",
            "sinc",
            "file:some/v.gpf",
        ] {
            let spec: PotentialSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn grammar_rejects_bad_input() {
        for s in [
            "",
            "well",
            "sinc x=1",
            "constant",
            "power_well h0=1",
            "power_well h0=-1 p=2",
            "power_well h0=1 p=5",
            "lattice s=1 period=0",
            "lattice s=1 s=2",
            "constant c=abc",
        ] {
            assert!(s.parse::<PotentialSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn sinc_minimum_value() {
        let m = sinc_minimum();
        assert!((m + 0.217_234).abs() < 1e-6, "{m}");
        // no sample of sinc goes below it
        for i in 0..10_000 {
            assert!(sinc(i as f64 * 0.002) >= m);
        }
    }

    #[test]
    fn power_well_values() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let v = PotentialSpec::PowerWell {
            h0: 1.0,
            p: 2.0,
            rcut: None,
        }
        .realize(&g)
        .unwrap();
        // x = -8 + 20·0.5 = 2, y = 0
        assert_eq!(v.at(20, 16), 4.0);
        assert_eq!(v.at(0, 0), 16.0);
    }

    #[test]
    fn lattice_must_tile_the_box() {
        let g = Grid2D::new(8.0, 64).unwrap();
        let spec = PotentialSpec::Lattice {
            amplitude: 1.0,
            period: 3.0,
        };
        assert!(spec.realize(&g).is_err());
    }

    #[test]
    fn sampled_infimum_lies_below_the_samples() {
        let g = Grid2D::new(8.0, 64).unwrap();
        let v = Field::from_fn(&g, |x, y| (x * x + y * y).sqrt().sin());
        let e = sampled_ess_inf(&v);
        assert!(!e.analytic);
        assert!(e.value < v.min() && e.value > -1.0 - 2.0 * e.allowance);
    }

    #[test]
    fn parabolic_refinement_recovers_offset() {
        let g = Grid2D::new(8.0, 64).unwrap();
        let (x0, y0) = (0.1, -0.07);
        let f = Field::from_fn(&g, |x, y| (x - x0).powi(2) + 2.0 * (y - y0).powi(2) - 1.0);
        let (ix, iy) = f.argmin();
        let ((tx, ty), value) = refine_minimum(&f, ix, iy);
        assert!((g.coord(ix) + tx * g.dx() - x0).abs() < 1e-12);
        assert!((g.coord(iy) + ty * g.dx() - y0).abs() < 1e-12);
        assert!((value + 1.0).abs() < 1e-12);
    }
}
