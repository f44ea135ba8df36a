use rustfft::num_complex::Complex64;

use super::Field;
use crate::error::{Error, Result};

/// Spectral Laplacian `Δu`: multiply every mode by `-|k|²`.
///
/// The Nyquist modes keep their `-|k|²` factor, so the operator is
/// symmetric and `-⟨Δu, u⟩` equals [`kinetic`] exactly.
pub fn laplacian_apply(u: &Field) -> Result<Field> {
    if !u.is_finite() {
        return Err(Error::NonFinite);
    }
    let grid = u.grid();
    Ok(Field::from_raw(grid, grid.apply_radial_symbol(u.values(), |k2| -k2)))
}

/// `∫|∇u|²` via Parseval: `dx²/n² · Σ |k|² |û_k|²`.
pub fn kinetic(u: &Field) -> f64 {
    let grid = u.grid();
    grid.kinetic_of_spectrum(&grid.forward(u.values()))
}

/// `Σ |u|^q dx²`.
pub fn integrate_power(u: &Field, q: f64) -> f64 {
    let sum: f64 = if q == 2.0 {
        u.values().iter().map(|v| v * v).sum()
    } else if q == 4.0 {
        u.values().iter().map(|v| (v * v) * (v * v)).sum()
    } else {
        u.values().iter().map(|v| v.abs().powf(q)).sum()
    };
    sum * u.grid().cell_area()
}

/// Spectral first derivatives `(∂ₓu, ∂ᵧu)` with the Nyquist modes removed.
pub fn spectral_gradient(u: &Field) -> (Field, Field) {
    let grid = u.grid();
    let n = grid.n();
    let k = grid.wavenumbers();
    let spec = grid.forward(u.values());
    let mut sx = spec.clone();
    let mut sy = spec;
    for iy in 0..n {
        for ix in 0..n {
            let idx = iy * n + ix;
            let kx = if ix == n / 2 { 0.0 } else { k[ix] };
            let ky = if iy == n / 2 { 0.0 } else { k[iy] };
            sx[idx] *= Complex64::new(0.0, kx);
            sy[idx] *= Complex64::new(0.0, ky);
        }
    }
    (
        Field::from_raw(grid, grid.inverse_real(sx)),
        Field::from_raw(grid, grid.inverse_real(sy)),
    )
}

/// Periodic convolution `(V ∗ ρ)(y) = Σᵢ V(y - xᵢ) ρ(xᵢ) dx²`, evaluated at
/// every grid point `y`.
///
/// Since `y_m - x_i = (m - i)·dx` lands on grid index `m - i + n/2`, the
/// circular convolution of the sample arrays is read back with an `n/2`
/// shift along each axis.
pub fn convolve_potential(v: &Field, dens: &Field) -> Result<Field> {
    let grid = v.grid();
    grid.check_same(dens.grid())?;
    let n = grid.n();
    let mut spec = grid.forward(v.values());
    let ds = grid.forward(dens.values());
    for (a, b) in spec.iter_mut().zip(&ds) {
        *a *= b;
    }
    let circ = grid.inverse_real(spec);
    let w = grid.cell_area();
    let half = n / 2;
    let mut out = vec![0.0; grid.len()];
    for iy in 0..n {
        let sy = (iy + half) % n;
        for ix in 0..n {
            let sx = (ix + half) % n;
            out[iy * n + ix] = circ[sy * n + sx] * w;
        }
    }
    Ok(Field::from_raw(grid, out))
}
