use super::Grid2D;
use crate::error::{Error, Result};

/// Real samples on a [`Grid2D`], row-major (`values[iy * n + ix]`).
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Builds a field from an unchecked sample vector. Callers guarantee the
    /// length; finiteness is the responsibility of the producing operation.
    pub(crate) fn from_raw(grid: &Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid2D, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let xs = grid.coords();
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..n {
            for &x in &xs {
                values.push(f(x, xs[iy]));
            }
        }
        Self::from_raw(grid, values)
    }

    /// Unit-mass Gaussian `exp(-|x-c|²/(2w²))` using minimum-image distances.
    pub fn gaussian(grid: &Grid2D, center: (f64, f64), width: f64) -> Self {
        let mut u = Self::from_fn(grid, |x, y| {
            let dx = grid.periodic_offset(x, center.0);
            let dy = grid.periodic_offset(y, center.1);
            (-(dx * dx + dy * dy) / (2.0 * width * width)).exp()
        });
        u.normalize().expect("gaussian has positive mass");
        u
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.n() + ix]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `Σ u² dx²`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// Discrete `L²` inner product.
    pub fn inner(&self, other: &Field) -> f64 {
        debug_assert!(self.grid.same_as(&other.grid));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area()
    }

    /// Rescales to unit mass. The result satisfies `|mass - 1| ≤ 1e-12`.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::UnnormalizedInput { mass });
        }
        let s = mass.sqrt().recip();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, s: f64, other: &Field) {
        debug_assert!(self.grid.same_as(&other.grid));
        self.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += s * b);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert!(self.grid.same_as(&other.grid));
        Field::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Index `(ix, iy)` of the smallest sample; ties go to the first in row-major order.
    pub fn argmin(&self) -> (usize, usize) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
        (i % self.grid.n(), i / self.grid.n())
    }

    pub fn argmax(&self) -> (usize, usize) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        (i % self.grid.n(), i / self.grid.n())
    }

    /// Periodic translation by `(sx, sy)` grid cells: `out(x) = u(x - s·dx)`.
    pub fn shifted(&self, sx: isize, sy: isize) -> Field {
        let n = self.grid.n() as isize;
        let mut out = vec![0.0; self.values.len()];
        for iy in 0..n {
            let src_y = (iy - sy).rem_euclid(n);
            for ix in 0..n {
                let src_x = (ix - sx).rem_euclid(n);
                out[(iy * n + ix) as usize] = self.values[(src_y * n + src_x) as usize];
            }
        }
        Field::from_raw(&self.grid, out)
    }

    /// Copies the samples into a larger grid with the same spacing, keeping
    /// coordinates fixed and filling the new region with `fill`.
    pub fn embed(&self, target: &Grid2D, fill: f64) -> Result<Field> {
        let (n, m) = (self.grid.n(), target.n());
        if m < n || (m - n) % 2 != 0 || (target.dx() - self.grid.dx()).abs() > 1e-12 * self.grid.dx() {
            return Err(Error::GridMismatch);
        }
        let off = (m - n) / 2;
        let mut out = vec![fill; m * m];
        for iy in 0..n {
            let row = (iy + off) * m + off;
            out[row..row + n].copy_from_slice(&self.values[iy * n..(iy + 1) * n]);
        }
        Ok(Field::from_raw(target, out))
    }
}
