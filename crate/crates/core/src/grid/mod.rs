//! Periodic square grids with Fourier-spectral differentiation.
//!
//! The plane is modeled as the torus `[-L, L)²` sampled at `n × n` points
//! `x_i = -L + i·dx`. Integrals use the periodic trapezoid rule (uniform
//! weight `dx²`), derivatives are taken in Fourier space.

mod field;
mod gpf;
mod ops;
mod resample;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use field::Field;
pub use gpf::{read_gpf, read_gpf_file, write_gpf, write_gpf_file, GPF_MAGIC};
pub use ops::{convolve_potential, integrate_power, kinetic, laplacian_apply, spectral_gradient};
pub use resample::{resample, Outside};

/// Smallest supported number of samples per side.
pub const MIN_SAMPLES: usize = 16;

/// Immutable description of a periodic grid. Cloning is cheap and clones
/// share the FFT plans.
#[derive(Clone)]
pub struct Grid2D {
    inner: Arc<Inner>,
}

struct Inner {
    half_width: f64,
    n: usize,
    dx: f64,
    wavenumbers: Vec<f64>,
    k2: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Grid2D {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if n % 2 == 1 {
            return Err(Error::OddSampleCount(n));
        }
        if n < MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_SAMPLES} samples per side, got {n}"
            )));
        }
        let dx = 2.0 * half_width / n as f64;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                PI * m / half_width
            })
            .collect();
        let mut k2 = Vec::with_capacity(n * n);
        for ky in &wavenumbers {
            for kx in &wavenumbers {
                k2.push(kx * kx + ky * ky);
            }
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(Inner {
                half_width,
                n,
                dx,
                wavenumbers,
                k2,
                fft,
                ifft,
            }),
        })
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    /// Samples per side.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Total number of samples, `n²`.
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of every sample.
    pub fn cell_area(&self) -> f64 {
        self.inner.dx * self.inner.dx
    }

    /// Coordinate of sample index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.inner.half_width + i as f64 * self.inner.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.coord(i)).collect()
    }

    /// Per-axis wavenumbers in DFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Nyquist wavenumber `π n / (2L)`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * (self.inner.n / 2) as f64 / self.inner.half_width
    }

    /// `|k|²` for every mode, row-major like the samples.
    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k2
    }

    /// Minimum-image displacement `x - c` on the torus, per axis.
    pub fn periodic_offset(&self, x: f64, c: f64) -> f64 {
        let period = 2.0 * self.inner.half_width;
        let d = x - c;
        d - period * (d / period).round()
    }

    /// Wraps a coordinate back into `[-L, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.inner.half_width;
        let period = 2.0 * l;
        let mut y = (x + l).rem_euclid(period) - l;
        if y >= l {
            y -= period;
        }
        y
    }

    /// Index of the sample nearest to `x` (after wrapping).
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((self.wrap(x) + self.half_width()) / self.dx()).round() as usize;
        i % self.n()
    }

    pub fn same_as(&self, other: &Grid2D) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.half_width == other.inner.half_width)
    }

    pub(crate) fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Forward 2D DFT of real samples (unnormalized).
    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.inner.fft);
        buf
    }

    /// Inverse 2D DFT keeping the real part, including the `1/n²` factor.
    pub(crate) fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.inner.ifft);
        let scale = 1.0 / self.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Multiplies the spectrum of `values` by `symbol(|k|²)` and transforms back.
    pub(crate) fn apply_radial_symbol(&self, values: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (c, &k2) in spec.iter_mut().zip(&self.inner.k2) {
            *c *= symbol(k2);
        }
        self.inverse_real(spec)
    }

    /// `∫|∇u|²` from a precomputed spectrum.
    pub(crate) fn kinetic_of_spectrum(&self, spectrum: &[Complex64]) -> f64 {
        let sum: f64 = spectrum
            .iter()
            .zip(&self.inner.k2)
            .map(|(c, &k2)| k2 * c.norm_sqr())
            .sum();
        sum * self.cell_area() / self.len() as f64
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.inner.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        plan.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("half_width", &self.inner.half_width)
            .field("n", &self.inner.n)
            .field("dx", &self.inner.dx)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}
