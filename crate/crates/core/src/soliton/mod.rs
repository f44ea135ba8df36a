//! The Townes soliton: the positive radial solution of `-ΔQ + Q - Q³ = 0`.
//!
//! `Q` is computed by shooting on the amplitude `Q(0)`. In radial form the
//! equation reads `Q'' + Q'/r = Q - Q³`; amplitudes below the root turn back
//! up before reaching zero (undershoot), amplitudes above it cross zero
//! (overshoot). Bisection narrows the bracket, after which the profile is
//! tabulated on a radial mesh up to the radius where the two bracket
//! trajectories start to separate and continued by the decaying tail
//! `c·e^{-r}/√r`.
//!
//! The critical coupling `a* = ∫Q²` and every moment are derived from the
//! computed profile, never hard-coded.

mod ode;
mod profile;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use ode::Dopri;

pub use profile::{RadialProfile, IDENTITY_TOL};

/// Tolerances and bounds of the shooting solver.
#[derive(Clone, Debug)]
pub struct RadialOptions {
    /// Spacing of the tabulated core mesh.
    pub mesh_step: f64,
    /// Relative tolerance of the ODE integrator.
    pub rtol: f64,
    /// Initial amplitude bracket.
    pub bracket: (f64, f64),
    pub max_bisections: usize,
    /// The core ends where the bracket trajectories differ by this fraction of `Q`.
    pub divergence_tol: f64,
    /// Hard cap on the core radius.
    pub max_core_radius: f64,
    /// Outer radius of the tabulated tail.
    pub r_max: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            mesh_step: 0.02,
            rtol: 1e-13,
            bracket: (1.0, 4.0),
            max_bisections: 200,
            divergence_tol: 1e-4,
            max_core_radius: 16.0,
            r_max: 24.0,
        }
    }
}

/// Result of integrating one shooting trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shot {
    /// `Q` turns back up while still positive: the amplitude is too small.
    Undershoot,
    /// `Q` crosses zero: the amplitude is too large.
    Overshoot,
}

const SHOOT_RADIUS: f64 = 40.0;
const ATOL: f64 = 1e-18;

fn rhs(r: f64, y: &[f64; 2]) -> [f64; 2] {
    [y[1], y[0] - y[0] * y[0] * y[0] - y[1] / r]
}

fn nonlinearity(q: f64) -> f64 {
    q - q * q * q
}

/// Series start at small `r`: `Q ≈ A + b r² + c r⁴` with `b = f(A)/4` and
/// `c = f'(A) b / 16`, `f(Q) = Q - Q³`.
fn series_start(amplitude: f64, r: f64) -> [f64; 2] {
    let b = nonlinearity(amplitude) / 4.0;
    let c = (1.0 - 3.0 * amplitude * amplitude) * b / 16.0;
    let r2 = r * r;
    [amplitude + b * r2 + c * r2 * r2, 2.0 * b * r + 4.0 * c * r2 * r]
}

fn series_radius(mesh_step: f64) -> f64 {
    (mesh_step / 10.0).min(1e-3)
}

/// Integrates the shooting ODE from `r = 0` and classifies the trajectory.
pub fn classify_amplitude(amplitude: f64, opts: &RadialOptions) -> Result<Shot> {
    let r0 = series_radius(opts.mesh_step);
    let mut y = series_start(amplitude, r0);
    let mut solver = Dopri::new(opts.rtol, ATOL, 0.1);
    let verdict = solver.integrate_until(&rhs, r0, &mut y, SHOOT_RADIUS, |_, y| {
        if y[0] < 0.0 {
            Some(Shot::Overshoot)
        } else if y[1] > 0.0 {
            Some(Shot::Undershoot)
        } else {
            None
        }
    })?;
    // a trajectory that neither crosses nor turns (e.g. the constant
    // solution Q ≡ 1) stays positive
    Ok(verdict.map_or(Shot::Undershoot, |(_, s)| s))
}

/// Bisects the shooting amplitude until the bracket is narrower than `tol`.
pub fn bisect_amplitude(tol: f64, opts: &RadialOptions) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = opts.bracket;
    if classify_amplitude(lo, opts)? != Shot::Undershoot
        || classify_amplitude(hi, opts)? != Shot::Overshoot
    {
        return Err(Error::BracketNotFound { lo, hi });
    }
    for _ in 0..opts.max_bisections {
        if hi - lo < tol {
            return Ok((lo, hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket is at floating-point resolution
            return Ok((lo, hi));
        }
        match classify_amplitude(mid, opts)? {
            Shot::Undershoot => lo = mid,
            Shot::Overshoot => hi = mid,
        }
    }
    Err(Error::NonConvergence {
        what: "shooting bisection".into(),
        iterations: opts.max_bisections,
    })
}

/// Solves for the Townes profile with bracket width `tol`, using default options.
pub fn solve_townes(tol: f64) -> Result<RadialProfile> {
    solve_townes_with(tol, &RadialOptions::default())
}

pub fn solve_townes_with(tol: f64, opts: &RadialOptions) -> Result<RadialProfile> {
    if !(1e-14..=1e-4).contains(&tol) {
        return Err(Error::InvalidArgument(format!(
            "shooting tolerance {tol} outside [1e-14, 1e-4]"
        )));
    }
    if !(opts.mesh_step > 0.0 && opts.mesh_step <= 0.25) {
        return Err(Error::InvalidArgument("mesh step must lie in (0, 0.25]".into()));
    }
    let (lo, hi) = bisect_amplitude(tol, opts)?;
    let amplitude = 0.5 * (lo + hi);
    let h = opts.mesh_step;

    // March the midpoint and both bracket ends across the core mesh.
    let r0 = series_radius(h);
    let mut states = [lo, amplitude, hi].map(|a| series_start(a, r0));
    let mut solvers = [0; 3].map(|_| Dopri::new(opts.rtol, ATOL, h));
    let mut r = vec![0.0];
    let mut q = vec![amplitude];
    let mut qp = vec![0.0];
    let mut r_prev = r0;
    let max_j = (opts.max_core_radius / h).floor() as usize;
    for j in 1..=max_j {
        let rj = j as f64 * h;
        for (s, y) in solvers.iter_mut().zip(states.iter_mut()) {
            s.advance(&rhs, r_prev, y, rj)?;
        }
        r_prev = rj;
        let [y_lo, y_mid, y_hi] = states;
        let separated = (y_hi[0] - y_lo[0]).abs() > opts.divergence_tol * y_mid[0];
        if y_mid[0] <= 0.0 || y_mid[1] >= 0.0 || separated {
            break;
        }
        r.push(rj);
        q.push(y_mid[0]);
        qp.push(y_mid[1]);
    }
    if r.len() < 3 {
        return Err(Error::InvalidProfile(
            "shooting bracket too wide to resolve the soliton core".into(),
        ));
    }
    let core_radius = *r.last().unwrap();
    let tail_coefficient = q.last().unwrap() * core_radius.exp() * core_radius.sqrt();

    // tail nodes with growing spacing
    let mut rt = core_radius;
    let mut step = h;
    while rt < opts.r_max {
        step = (step * 1.1).min(0.25);
        rt = (rt + step).min(opts.r_max);
        let (qt, qpt) = profile::tail(tail_coefficient, rt);
        r.push(rt);
        q.push(qt);
        qp.push(qpt);
    }

    RadialProfile::assemble(r, q, qp, amplitude, h, core_radius, tail_coefficient)
}

/// The critical coupling `a* = ∫Q²`, after checking the profile invariants.
pub fn critical_coupling(profile: &RadialProfile) -> Result<f64> {
    profile.validate()?;
    Ok(profile.mass)
}

/// `∫ |x|^p Q(x)² dx` including the tail.
pub fn radial_moment(profile: &RadialProfile, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 4.0) {
        return Err(Error::InvalidArgument(format!("moment order {p} outside (0, 4]")));
    }
    Ok(profile.integrate(|r, q, _| r.powf(p) * q * q))
}

/// Samples `Q₀ = Q/‖Q‖` centered at `center` (minimum-image distance) and
/// renormalizes to unit mass on the grid.
pub fn lift_to_grid(profile: &RadialProfile, grid: &Grid2D, center: (f64, f64)) -> Result<Field> {
    lift_scaled(profile, grid, center, 1.0)
}

/// Samples the dilated soliton `Q₀((x - c)/w)/w`, renormalized on the grid.
pub fn lift_scaled(
    profile: &RadialProfile,
    grid: &Grid2D,
    center: (f64, f64),
    width: f64,
) -> Result<Field> {
    if width.is_nan() || width <= 0.0 {
        return Err(Error::InvalidArgument(format!("width must be positive, got {width}")));
    }
    let core = profile.core_radius * width;
    if grid.half_width() < core {
        return Err(Error::BoxTooSmall {
            half_width: grid.half_width(),
            core_radius: core,
        });
    }
    let norm = profile.mass.sqrt();
    let mut u = Field::from_fn(grid, |x, y| {
        let dx = grid.periodic_offset(x, center.0);
        let dy = grid.periodic_offset(y, center.1);
        let rho = (dx * dx + dy * dy).sqrt() / width;
        profile.eval(rho).0 / (norm * width)
    });
    u.normalize()?;
    Ok(u)
}

/// Mass, kinetic and quartic integrals `2π∫(·) r dr` of the tabulated profile.
pub(crate) fn moments(profile: &RadialProfile) -> (f64, f64, f64) {
    let mass = profile.integrate(|_, q, _| q * q);
    let kinetic = profile.integrate(|_, _, qp| qp * qp);
    let quartic = profile.integrate(|_, q, _| q * q * q * q);
    (mass, kinetic, quartic)
}
