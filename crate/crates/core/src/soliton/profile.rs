use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of the identities `∫Q² = ∫|∇Q|² = ½∫Q⁴`.
pub const IDENTITY_TOL: f64 = 1e-6;

/// Extent of the tail integration beyond the core radius.
const TAIL_SPAN: f64 = 40.0;
const TAIL_PANEL: f64 = 0.25;

/// Six-point Gauss–Legendre rule on `[0, 1]`.
const GAUSS_NODES: [f64; 6] = [
    0.033_765_242_898_423_99,
    0.169_395_306_766_867_74,
    0.380_690_406_958_401_5,
    0.619_309_593_041_598_5,
    0.830_604_693_233_132_3,
    0.966_234_757_101_576,
];
const GAUSS_WEIGHTS: [f64; 6] = [
    0.085_662_246_189_585_17,
    0.180_380_786_524_069_3,
    0.233_956_967_286_345_5,
    0.233_956_967_286_345_5,
    0.180_380_786_524_069_3,
    0.085_662_246_189_585_17,
];

/// The Townes soliton `Q(r)` tabulated on a radial mesh.
///
/// The mesh is uniform with spacing `mesh_step` on the core `[0, core_radius]`
/// where the shooting solution is reliable, and coarsens over the tail where
/// `Q = c·e^{-r}/√r`. Between core nodes `Q` is reconstructed by quintic
/// Hermite interpolation using `Q'' = Q - Q³ - Q'/r` from the equation itself.
/// The integrals `mass`, `kinetic` and `quartic` are `2π∫(·) r dr` over
/// `[0, ∞)` including the analytic tail.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub shoot_amplitude: f64,
    pub mesh_step: f64,
    pub core_radius: f64,
    pub tail_coefficient: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub quartic: f64,
}

/// Tail model `c·e^{-r}/√r` and its derivative.
pub(crate) fn tail(c: f64, r: f64) -> (f64, f64) {
    let e = c * (-r).exp();
    let s = r.sqrt();
    (e / s, -e * (1.0 / s + 0.5 / (s * r)))
}

impl RadialProfile {
    pub(crate) fn assemble(
        r: Vec<f64>,
        q: Vec<f64>,
        q_prime: Vec<f64>,
        shoot_amplitude: f64,
        mesh_step: f64,
        core_radius: f64,
        tail_coefficient: f64,
    ) -> Result<Self> {
        let mut p = Self {
            r,
            q,
            q_prime,
            shoot_amplitude,
            mesh_step,
            core_radius,
            tail_coefficient,
            mass: 0.0,
            kinetic: 0.0,
            quartic: 0.0,
        };
        p.check_structure()?;
        let (mass, kinetic, quartic) = super::moments(&p);
        p.mass = mass;
        p.kinetic = kinetic;
        p.quartic = quartic;
        Ok(p)
    }

    /// Outer radius of the tabulated mesh.
    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap_or(&0.0)
    }

    fn core_nodes(&self) -> usize {
        (self.core_radius / self.mesh_step).round() as usize + 1
    }

    /// Consistency of the stored arrays (what a deserialized profile must satisfy
    /// before any evaluation).
    pub fn check_structure(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProfile(m.to_string()));
        if self.r.len() != self.q.len() || self.r.len() != self.q_prime.len() {
            return bad("array lengths differ");
        }
        if !(self.mesh_step > 0.0) || !(self.core_radius > 0.0) {
            return bad("mesh step and core radius must be positive");
        }
        let nc = self.core_nodes();
        if nc < 3 || self.r.len() < nc {
            return bad("core mesh too short");
        }
        for j in 0..nc {
            if (self.r[j] - j as f64 * self.mesh_step).abs() > 1e-9 {
                return bad("core mesh is not uniform");
            }
        }
        if self.r.windows(2).any(|w| w[1] <= w[0]) {
            return bad("radii are not increasing");
        }
        if self.r.iter().chain(&self.q).chain(&self.q_prime).any(|v| !v.is_finite()) {
            return bad("non-finite samples");
        }
        Ok(())
    }

    /// Checks every profile invariant: positivity, monotone decay, `Q'(0) = 0`,
    /// a negligible value at `r_max ≥ 20`, and the three integral identities.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if self.q.iter().any(|&v| v <= 0.0) {
            return bad("profile is not positive".into());
        }
        if self.q[1..].windows(2).any(|w| w[1] >= w[0]) {
            return bad("profile is not strictly decreasing".into());
        }
        if self.q_prime[0] != 0.0 {
            return bad("Q'(0) must vanish".into());
        }
        if self.r_max() < 20.0 || *self.q.last().unwrap() >= 1e-8 {
            return bad(format!("tail not resolved (r_max = {})", self.r_max()));
        }
        let (dk, dq) = self.identity_residuals();
        if dk >= IDENTITY_TOL || dq >= IDENTITY_TOL {
            return bad(format!(
                "integral identities violated: |m-k|/m = {dk:.3e}, |m-q/2|/m = {dq:.3e}"
            ));
        }
        Ok(())
    }

    /// `(|mass - kinetic|/mass, |mass - quartic/2|/mass)`.
    pub fn identity_residuals(&self) -> (f64, f64) {
        (
            (self.mass - self.kinetic).abs() / self.mass,
            (self.mass - 0.5 * self.quartic).abs() / self.mass,
        )
    }

    fn second_derivative(&self, j: usize) -> f64 {
        let q = self.q[j];
        if j == 0 {
            0.5 * (q - q * q * q)
        } else {
            q - q * q * q - self.q_prime[j] / self.r[j]
        }
    }

    /// `(Q(r), Q'(r))` for any `r ≥ 0`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        if r >= self.core_radius {
            return tail(self.tail_coefficient, r);
        }
        let h = self.mesh_step;
        let nc = self.core_nodes();
        let j = ((r / h).floor() as usize).min(nc - 2);
        let t = (r - self.r[j]) / h;
        let (y0, d0, s0) = (self.q[j], self.q_prime[j], self.second_derivative(j));
        let (y1, d1, s1) = (self.q[j + 1], self.q_prime[j + 1], self.second_derivative(j + 1));

        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
        let value = h00 * y0 + h10 * h * d0 + h20 * h * h * s0 + h01 * y1 + h11 * h * d1 + h21 * h * h * s1;

        let g00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let g10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let g20 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
        let g01 = -g00;
        let g11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
        let g21 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
        let slope = (g00 * y0 + g10 * h * d0 + g20 * h * h * s0 + g01 * y1 + g11 * h * d1 + g21 * h * h * s1) / h;
        (value, slope)
    }

    /// `2π ∫₀^∞ f(r, Q, Q') r dr` by Gauss–Legendre on every core interval and
    /// on fixed panels over the analytic tail.
    pub fn integrate(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let mut sum = 0.0;
        let mut panel = |a: f64, b: f64| {
            let w = b - a;
            let mut s = 0.0;
            for (x, wt) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let r = a + w * x;
                let (q, qp) = self.eval(r);
                s += wt * f(r, q, qp) * r;
            }
            sum += s * w;
        };
        let nc = self.core_nodes();
        for j in 0..nc - 1 {
            panel(self.r[j], self.r[j + 1]);
        }
        let panels = (TAIL_SPAN / TAIL_PANEL) as usize;
        for k in 0..panels {
            let a = self.core_radius + k as f64 * TAIL_PANEL;
            panel(a, a + TAIL_PANEL);
        }
        2.0 * PI * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_degree_eleven() {
        let s: f64 = GAUSS_NODES
            .iter()
            .zip(GAUSS_WEIGHTS)
            .map(|(x, w)| w * x.powi(11))
            .sum();
        assert!((s - 1.0 / 12.0).abs() < 1e-15);
        let total: f64 = GAUSS_WEIGHTS.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tail_derivative_matches_finite_difference() {
        let (c, r, h) = (3.5, 9.0, 1e-6);
        let (_, d) = tail(c, r);
        let fd = (tail(c, r + h).0 - tail(c, r - h).0) / (2.0 * h);
        assert!((d - fd).abs() / d.abs() < 1e-8);
    }
}
