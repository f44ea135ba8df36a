use std::f64::consts::PI;

use ndarray::Array2;

use super::{Field, Grid2D};

/// What to do with sample points that fall outside the fundamental box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outside {
    /// Evaluate the periodic interpolant (the field lives on a torus).
    Periodic,
    /// Treat the field as zero outside `[-L, L)²`.
    Zero,
}

/// Evaluates the trigonometric interpolant of `u` on the tensor product of
/// `xs × ys` and returns the samples row-major (`ys.len()` rows).
///
/// Each axis uses the periodic sinc kernel of an even-length grid, which is
/// the band-limited interpolant with the Nyquist mode split symmetrically.
/// Evaluating at the grid's own points reproduces `u` exactly.
pub fn resample(u: &Field, xs: &[f64], ys: &[f64], outside: Outside) -> Vec<f64> {
    let grid = u.grid();
    let n = grid.n();
    let mx = kernel_matrix(grid, xs, outside);
    let my = kernel_matrix(grid, ys, outside);
    let samples = Array2::from_shape_vec((n, n), u.values().to_vec()).expect("square field");
    // rows are y, columns are x
    let partial = samples.dot(&mx.t());
    let out = my.dot(&partial);
    out.iter().copied().collect()
}

fn kernel_matrix(grid: &Grid2D, points: &[f64], outside: Outside) -> Array2<f64> {
    let n = grid.n();
    let l = grid.half_width();
    let dx = grid.dx();
    let mut m = Array2::zeros((points.len(), n));
    for (p, &x) in points.iter().enumerate() {
        if outside == Outside::Zero && !(-l..l).contains(&x) {
            continue;
        }
        for i in 0..n {
            let t = grid.periodic_offset(x, grid.coord(i));
            m[[p, i]] = periodic_sinc(t, dx, l, n);
        }
    }
    m
}

fn periodic_sinc(t: f64, dx: f64, half_width: f64, n: usize) -> f64 {
    if t.abs() < 1e-12 * dx {
        return 1.0;
    }
    (PI * t / dx).sin() / (n as f64 * (PI * t / (2.0 * half_width)).tan())
}
