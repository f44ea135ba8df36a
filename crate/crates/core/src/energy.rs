//! The Gross–Pitaevskii functional
//! `𝓔_a(u) = ∫ |∇u|² + V|u|² - (a/2)|u|⁴`, its first variation, the
//! Gagliardo–Nirenberg quotient, and the two scaling constructions used to
//! probe the infimum from above (dilations and the cut-off soliton trial state).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, resample, Field, Grid2D, Outside};
use crate::soliton::RadialProfile;

/// Inputs to [`energy`] must have unit mass to this tolerance.
pub const MASS_TOL: f64 = 1e-8;

/// A dilated or trial state must be at least this many grid spacings wide.
pub const MIN_WIDTH_CELLS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `∫|∇u|²`
    pub kinetic: f64,
    /// `∫V|u|²`
    pub potential: f64,
    /// `∫|u|⁴`
    pub quartic: f64,
    /// `kinetic + potential - (a/2)·quartic`
    pub total: f64,
    pub coupling: f64,
}

impl EnergyBreakdown {
    pub fn from_parts(kinetic: f64, potential: f64, quartic: f64, coupling: f64) -> Self {
        Self {
            kinetic,
            potential,
            quartic,
            total: kinetic + potential - 0.5 * coupling * quartic,
            coupling,
        }
    }
}

/// Evaluates the functional without the unit-mass precondition.
pub fn functional(u: &Field, v: &Field, a: f64) -> EnergyBreakdown {
    let potential = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(x, w)| w * x * x)
        .sum::<f64>()
        * u.grid().cell_area();
    EnergyBreakdown::from_parts(grid::kinetic(u), potential, grid::integrate_power(u, 4.0), a)
}

/// `𝓔_a(u)` split into its parts; `u` must be normalized and `V` finite.
pub fn energy(u: &Field, v: &Field, a: f64) -> Result<EnergyBreakdown> {
    u.grid().check_same(v.grid())?;
    let mass = u.mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::UnnormalizedInput { mass });
    }
    if !v.is_finite() || !u.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(functional(u, v, a))
}

/// Half the first variation of `𝓔_a`: `g = -Δu + Vu - a u³`, so that
/// `⟨g, δ⟩ = ½ d/dt 𝓔_a(u + tδ)|₀`. The factor 2 is dropped so that at
/// `V = 0` the Euler–Lagrange residual is literally `-Δu - a u³ - μu`.
pub fn energy_gradient(u: &Field, v: &Field, a: f64) -> Result<Field> {
    u.grid().check_same(v.grid())?;
    let lap = grid::laplacian_apply(u)?;
    Ok(gradient_from_laplacian(u, v, a, &lap))
}

pub(crate) fn gradient_from_laplacian(u: &Field, v: &Field, a: f64, lap: &Field) -> Field {
    let vals = u
        .values()
        .iter()
        .zip(v.values())
        .zip(lap.values())
        .map(|((&x, &w), &l)| -l + w * x - a * x * x * x)
        .collect();
    Field::from_raw(u.grid(), vals)
}

/// Energy and mass differences between two states, with a rounding bound.
pub(crate) struct Difference {
    pub energy: f64,
    pub mass: f64,
    /// Magnitude of the summed terms times machine epsilon: differences below
    /// this are indistinguishable from rounding.
    pub floor: f64,
}

/// `𝓔_a(new) - 𝓔_a(old)` and `mass(new) - mass(old)` evaluated in difference
/// form so that both are accurate relative to the differences themselves
/// rather than to the energies.
pub(crate) fn energy_difference(
    new: &Field,
    old: &Field,
    old_spectrum: &[rustfft::num_complex::Complex64],
    v: &Field,
    a: f64,
) -> Difference {
    let grid = new.grid();
    let delta: Vec<f64> = new.values().iter().zip(old.values()).map(|(x, y)| x - y).collect();
    let dspec = grid.forward(&delta);
    let spectral = grid.cell_area() / grid.len() as f64;
    let (mut kin, mut kin_abs) = (0.0, 0.0);
    for ((d, o), &k2) in dspec.iter().zip(old_spectrum).zip(grid.k_squared()) {
        let t = k2 * (2.0 * (d * o.conj()).re + d.norm_sqr());
        kin += t;
        kin_abs += k2 * 2.0 * d.norm() * o.norm();
    }
    let mut mass = 0.0;
    let mut pot = 0.0;
    let mut quart = 0.0;
    let mut abs = 0.0;
    for (((&d, &x), &y), &w) in delta.iter().zip(new.values()).zip(old.values()).zip(v.values()) {
        let dsq = d * (x + y); // x² - y²
        mass += dsq;
        pot += w * dsq;
        quart += dsq * (x * x + y * y);
        abs += dsq.abs() * (w.abs() + a * (x * x + y * y));
    }
    let area = grid.cell_area();
    Difference {
        energy: kin * spectral + pot * area - 0.5 * a * quart * area,
        mass: mass * area,
        floor: 64.0 * f64::EPSILON * (kin_abs * spectral + abs * area),
    }
}

/// `∫|∇u|²·∫|u|² / (½∫|u|⁴)`; bounded below by the critical coupling.
pub fn gn_quotient(u: &Field) -> Result<f64> {
    let quartic = grid::integrate_power(u, 4.0);
    if !(quartic > 0.0) {
        return Err(Error::DegenerateField);
    }
    Ok(grid::kinetic(u) * u.mass() / (0.5 * quartic))
}

/// Length scale `‖∇u‖⁻¹` of a normalized field.
pub fn width(u: &Field) -> f64 {
    grid::kinetic(u).sqrt().recip()
}

/// `u_ℓ(x) = ℓ u(ℓx)` by spectral interpolation, renormalized on the grid.
/// Samples that map outside the box are zero.
pub fn dilate(u: &Field, scale: f64) -> Result<Field> {
    if !(scale >= 1.0) {
        return Err(Error::InvalidArgument(format!("dilation scale {scale} < 1")));
    }
    let grid = u.grid();
    let limit = MIN_WIDTH_CELLS * grid.dx();
    let w = width(u) / scale;
    if w < limit {
        return Err(Error::ResolutionExceeded { width: w, limit });
    }
    let pts: Vec<f64> = grid.coords().iter().map(|x| scale * x).collect();
    let vals = resample(u, &pts, &pts, Outside::Zero);
    let mut out = Field::from_raw(grid, vals);
    out.scale(scale);
    out.normalize()?;
    Ok(out)
}

/// `𝓔_a(u_ℓ)` for every scale; with `V = 0` kinetic and quartic parts scale as `ℓ²`.
pub fn dilation_scan(u: &Field, v: &Field, a: f64, scales: &[f64]) -> Result<Vec<EnergyBreakdown>> {
    u.grid().check_same(v.grid())?;
    let mass = u.mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::UnnormalizedInput { mass });
    }
    scales
        .iter()
        .map(|&l| energy(&dilate(u, l)?, v, a))
        .collect()
}

/// Smooth radial cut-off: 1 on `|x| ≤ 1`, 0 on `|x| ≥ 2`, quintic smoothstep between.
pub fn bump(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let s = r - 1.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// The cut-off concentrated soliton `A_ℓ φ(x - x₀) ℓ Q₀(ℓ(x - x₀))`, normalized on the grid.
pub fn trial_state(grid: &Grid2D, profile: &RadialProfile, x0: (f64, f64), scale: f64) -> Result<Field> {
    if !(scale >= 1.0) {
        return Err(Error::InvalidArgument(format!("trial scale {scale} < 1")));
    }
    if grid.half_width() < 2.0 {
        return Err(Error::BoxTooSmall {
            half_width: grid.half_width(),
            core_radius: 2.0,
        });
    }
    let limit = MIN_WIDTH_CELLS * grid.dx();
    if 1.0 / scale < limit {
        return Err(Error::ResolutionExceeded {
            width: 1.0 / scale,
            limit,
        });
    }
    let norm = profile.mass.sqrt();
    let mut u = Field::from_fn(grid, |x, y| {
        let dx = grid.periodic_offset(x, x0.0);
        let dy = grid.periodic_offset(y, x0.1);
        let r = (dx * dx + dy * dy).sqrt();
        bump(r) * scale * profile.eval(scale * r).0 / norm
    });
    u.normalize()?;
    Ok(u)
}

/// `𝓔_a` of [`trial_state`]; an upper bound for `E_a`.
pub fn trial_state_energy(
    grid: &Grid2D,
    profile: &RadialProfile,
    v: &Field,
    a: f64,
    x0: (f64, f64),
    scale: f64,
) -> Result<f64> {
    let u = trial_state(grid, profile, x0, scale)?;
    Ok(energy(&u, v, a)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn breakdown_total_is_consistent() {
        let b = EnergyBreakdown::from_parts(1.5, -0.25, 0.3, 2.0);
        assert_eq!(b.total, 1.5 - 0.25 - 0.3);
    }

    #[test]
    fn constant_potential_shifts_the_energy() {
        let g = Grid2D::new(8.0, 64).unwrap();
        let u = Field::gaussian(&g, (0.5, -1.0), 1.3);
        let e = energy(&u, &Field::constant(&g, 0.75), 0.0).unwrap();
        assert!((e.total - (e.kinetic + 0.75)).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let mut u = Field::gaussian(&g, (0.0, 0.0), 1.0);
        u.scale(1.01);
        assert!(matches!(
            energy(&u, &Field::zeros(&g), 1.0),
            Err(Error::UnnormalizedInput { .. })
        ));
    }

    #[test]
    fn linear_gradient_is_minus_laplacian() {
        let g = Grid2D::new(8.0, 64).unwrap();
        let u = Field::gaussian(&g, (0.0, 1.0), 1.1);
        let grad = energy_gradient(&u, &Field::zeros(&g), 0.0).unwrap();
        let lap = grid::laplacian_apply(&u).unwrap();
        for (a, b) in grad.values().iter().zip(lap.values()) {
            assert_eq!(*a, -b);
        }
    }

    #[test]
    fn gaussian_quotient_is_four_pi() {
        // closed form for e^{-r²/2}/√π: mass 1, kinetic 1, quartic 1/(2π)
        let g = Grid2D::new(12.0, 128).unwrap();
        let u = Field::from_fn(&g, |x, y| (-(x * x + y * y) / 2.0).exp() / PI.sqrt());
        assert!((u.mass() - 1.0).abs() < 1e-12);
        assert!((grid::kinetic(&u) - 1.0).abs() < 1e-12);
        assert!((grid::integrate_power(&u, 4.0) - 0.5 / PI).abs() < 1e-12);
        assert!((gn_quotient(&u).unwrap() - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn zero_field_is_degenerate() {
        let g = Grid2D::new(8.0, 16).unwrap();
        assert!(matches!(gn_quotient(&Field::zeros(&g)), Err(Error::DegenerateField)));
    }

    #[test]
    fn difference_form_matches_direct_evaluation() {
        let g = Grid2D::new(8.0, 64).unwrap();
        let v = Field::from_fn(&g, |x, y| (0.3 * x).cos() * (0.2 * y).sin());
        let u0 = Field::gaussian(&g, (0.0, 0.0), 1.0);
        let u1 = Field::gaussian(&g, (0.2, -0.1), 1.05);
        let a = 3.0;
        let direct = functional(&u1, &v, a).total - functional(&u0, &v, a).total;
        let spec = g.forward(u0.values());
        let d = energy_difference(&u1, &u0, &spec, &v, a);
        assert!((direct - d.energy).abs() < 1e-12, "{direct} vs {}", d.energy);
        assert!(d.mass.abs() < 1e-12);
        assert!(d.floor > 0.0 && d.floor < 1e-10);
    }

    #[test]
    fn bump_is_smooth_at_the_joints() {
        assert_eq!(bump(0.5), 1.0);
        assert_eq!(bump(2.5), 0.0);
        assert!((bump(1.5) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        assert!((bump(1.0 + h) - 1.0).abs() < 1e-15);
        assert!(bump(2.0 - h) < 1e-15);
    }

    #[test]
    fn dilation_rejects_small_scales_and_under_resolution() {
        let g = Grid2D::new(8.0, 64).unwrap();
        let u = Field::gaussian(&g, (0.0, 0.0), 1.0);
        assert!(dilate(&u, 0.5).is_err());
        assert!(matches!(dilate(&u, 4.0), Err(Error::ResolutionExceeded { .. })));
    }
}
