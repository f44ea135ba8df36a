//! Constrained minimization of `𝓔_a` on the unit-mass sphere.
//!
//! Each iteration takes the half-gradient `g`, projects it onto the tangent
//! space of the sphere at `u` (`r = g - ⟨g,u⟩u`), applies the Sobolev
//! preconditioner `(α - Δ)⁻¹`, mixes in the previous direction
//! (Polak–Ribière, restarted whenever it stops being a descent direction) and
//! steps `u ← normalize(|u + τp|)`. The step `τ` comes from one quadratic
//! model of the energy along `p` followed by backtracking; a step is only
//! accepted when the energy strictly decreases. Energy differences are
//! evaluated in difference form so that the decrease test stays meaningful
//! long after the energy itself has converged to machine precision.
//!
//! Setting `conjugate = false` and `precondition = false` recovers plain
//! projected gradient descent.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::energy::{self, energy_difference, gradient_from_laplacian, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{resample, Field, Grid2D, Outside};
use crate::potentials::PotentialSpec;

/// Couplings above `a*·(1 - CRITICAL_MARGIN)` are refused.
pub const CRITICAL_MARGIN: f64 = 1e-4;

/// Upper bound on the trial step; the preconditioned problem has unit scale.
const MAX_STEP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Unit-width Gaussian at the grid minimum of `V`.
    Gaussian,
    /// Lifted soliton supplied by the caller.
    Townes,
    /// Previous sweep entry dilated by the predicted width ratio.
    PriorRescaled,
    /// Field read from a file by the caller.
    FromFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizerOptions {
    /// Stop once `‖g - ⟨g,u⟩u‖` drops to this value.
    pub tol_residual: f64,
    pub max_iters: usize,
    pub step_init: f64,
    pub backtrack_factor: f64,
    pub init_kind: InitKind,
    pub precondition: bool,
    /// Shift `α` of the preconditioner; by default the current kinetic energy
    /// (floored at 0.1), which matches the Lagrange multiplier's scale.
    pub preconditioner_shift: Option<f64>,
    /// Polak–Ribière momentum.
    pub conjugate: bool,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-7,
            max_iters: 20_000,
            step_init: 0.5,
            backtrack_factor: 0.5,
            init_kind: InitKind::Gaussian,
            precondition: true,
            preconditioner_shift: None,
            conjugate: true,
        }
    }
}

impl MinimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidArgument("tol_residual must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidArgument("backtrack_factor must lie in (0, 1)".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.step_init > 0.0) {
            return Err(Error::InvalidArgument("step_init must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MinimizerResult {
    pub u: Field,
    pub coupling: f64,
    pub energy: EnergyBreakdown,
    /// Norm of the projected gradient at `u`.
    pub residual: f64,
    /// Lagrange multiplier `⟨g, u⟩`.
    pub mu: f64,
    pub iters: usize,
    pub converged: bool,
    /// `1/√kinetic(u)`.
    pub eps: f64,
    /// `eps < 4·dx`: the state is narrower than the grid can represent faithfully.
    pub under_resolved: bool,
    pub init_kind: InitKind,
    /// Energy after every accepted step, starting with the initial state.
    pub trace: Vec<f64>,
}

impl MinimizerResult {
    /// `E_a` of the returned state.
    pub fn e(&self) -> f64 {
        self.energy.total
    }
}

struct State {
    u: Field,
    spec: Vec<Complex64>,
    g: Field,
    kinetic: f64,
}

impl State {
    fn new(u: Field, v: &Field, a: f64) -> Self {
        let grid = u.grid().clone();
        let spec = grid.forward(u.values());
        let kinetic = grid.kinetic_of_spectrum(&spec);
        let lap_spec: Vec<Complex64> = spec.iter().zip(grid.k_squared()).map(|(c, &k2)| -c * k2).collect();
        let lap = Field::from_raw(&grid, grid.inverse_real(lap_spec));
        let g = gradient_from_laplacian(&u, v, a, &lap);
        Self { u, spec, g, kinetic }
    }
}

fn tangent(g: &Field, u: &Field) -> (Field, f64) {
    let mu = g.inner(u);
    let mut r = g.clone();
    r.add_scaled(-mu, u);
    (r, mu)
}

fn retract(u: &Field, p: &Field, tau: f64) -> Option<Field> {
    let vals = u.values().iter().zip(p.values()).map(|(&x, &d)| x + tau * d).collect();
    Field::from_raw(u.grid(), vals).normalized().ok()
}

/// Initial state for the default Gaussian start: unit width at the grid minimum of `V`.
pub fn gaussian_start(v: &Field) -> Field {
    let g = v.grid();
    let (ix, iy) = v.argmin();
    Field::gaussian(g, (g.coord(ix), g.coord(iy)), 1.0)
}

/// Minimizes `𝓔_a` over normalized fields on the grid of `v`.
///
/// `a_star` is the critical coupling (pass `f64::INFINITY` for the linear
/// problem). Without `init` the start is the Gaussian of [`gaussian_start`],
/// which requires `opts.init_kind == Gaussian`. Hitting `max_iters` or a
/// stalled line search is not an error: the last iterate is returned with
/// `converged = false`.
pub fn minimize(
    v: &Field,
    a: f64,
    a_star: f64,
    opts: &MinimizerOptions,
    init: Option<&Field>,
) -> Result<MinimizerResult> {
    opts.validate()?;
    if !v.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(a >= 0.0) {
        return Err(Error::InvalidArgument(format!("coupling must be nonnegative, got {a}")));
    }
    if a >= a_star * (1.0 - CRITICAL_MARGIN) {
        return Err(Error::CriticalCouplingGuard { a, critical: a_star });
    }
    let grid = v.grid().clone();
    let start = match init {
        Some(u) => {
            grid.check_same(u.grid())?;
            u.map(f64::abs).normalized()?
        }
        None if opts.init_kind == InitKind::Gaussian => gaussian_start(v),
        None => {
            return Err(Error::InvalidArgument(format!(
                "initial state of kind {:?} must be supplied",
                opts.init_kind
            )))
        }
    };

    let mut s = State::new(start, v, a);
    let mut e_run = energy::functional(&s.u, v, a).total;
    let mut trace = vec![e_run];
    let (mut r, mut mu) = tangent(&s.g, &s.u);
    let mut residual = r.norm();
    let mut tau = opts.step_init;
    let mut prev: Option<(Field, f64, Field)> = None; // (direction, ⟨r,d⟩, d)
    let mut iters = 0;
    let mut converged = residual <= opts.tol_residual;

    while !converged && iters < opts.max_iters {
        iters += 1;
        let d = if opts.precondition {
            let alpha = opts.preconditioner_shift.unwrap_or(s.kinetic.max(0.1));
            precondition(&grid, &r, alpha, &damping(v, alpha))
        } else {
            r.clone()
        };
        let rd = r.inner(&d);
        let mut p = d.clone();
        p.scale(-1.0);
        if let (true, Some((p_old, rd_old, d_old))) = (opts.conjugate, prev.as_ref()) {
            let mut diff = d.clone();
            diff.add_scaled(-1.0, d_old);
            let beta = (r.inner(&diff) / rd_old).max(0.0);
            if beta > 0.0 {
                p.add_scaled(beta, p_old);
                let along = p.inner(&s.u);
                p.add_scaled(-along, &s.u);
            }
        }
        let mut slope = 2.0 * r.inner(&p);
        if !(slope < 0.0) {
            p = d.clone();
            p.scale(-1.0);
            slope = -2.0 * rd;
        }
        if !(slope < 0.0) {
            break;
        }

        let Some((u_new, de, tau_used)) = line_search(&s, &p, slope, tau, v, a, mu, opts) else {
            break;
        };
        tau = (2.0 * tau_used).min(MAX_STEP);
        e_run += de;
        trace.push(e_run);
        s = State::new(u_new, v, a);
        (r, mu) = tangent(&s.g, &s.u);
        residual = r.norm();
        converged = residual <= opts.tol_residual;
        prev = Some((p, rd, d));
    }

    // The spectral minimizer can carry tiny negative ringing in its tails.
    // Fold it away only when that does not cost convergence.
    if s.u.values().iter().any(|&x| x < 0.0) {
        let folded = State::new(s.u.map(f64::abs).normalized()?, v, a);
        let (r_f, mu_f) = tangent(&folded.g, &folded.u);
        let res_f = r_f.norm();
        if res_f <= opts.tol_residual.max(residual) {
            s = folded;
            mu = mu_f;
            residual = res_f;
            converged = residual <= opts.tol_residual;
        }
    }
    let energy = energy::energy(&s.u, v, a)?;
    let eps = s.kinetic.sqrt().recip();
    Ok(MinimizerResult {
        under_resolved: eps < energy::MIN_WIDTH_CELLS * grid.dx(),
        u: s.u,
        coupling: a,
        energy,
        residual,
        mu,
        iters,
        converged,
        eps,
        init_kind: if init.is_some() { opts.init_kind } else { InitKind::Gaussian },
        trace,
    })
}

/// `S (α - Δ)⁻¹ S r` scaled by `α`, with the diagonal `S = (α/(α + V - min V))^{1/2}`.
/// The Fourier factor handles the kinetic stiffness, the diagonal one keeps
/// smoothed corrections out of regions where the potential is large.
fn precondition(grid: &Grid2D, r: &Field, alpha: f64, damping: &[f64]) -> Field {
    let scaled: Vec<f64> = r.values().iter().zip(damping).map(|(x, s)| x * s).collect();
    let mut out = grid.apply_radial_symbol(&scaled, |k2| alpha / (alpha + k2));
    out.iter_mut().zip(damping).for_each(|(x, s)| *x *= s);
    Field::from_raw(grid, out)
}

fn damping(v: &Field, alpha: f64) -> Vec<f64> {
    let vmin = v.min();
    v.values().iter().map(|w| (alpha / (alpha + w - vmin)).sqrt()).collect()
}

/// Picks a step along `p`: the minimizer of the quadratic model through the
/// trial step when that model is convex, otherwise the trial step, shrinking
/// until the energy decreases by at least a small fraction of the predicted
/// amount. Once the predicted decrease is below the rounding floor of the
/// energy difference, a step is accepted as long as it does not raise the
/// energy by more than that floor.
#[allow(clippy::too_many_arguments)]
fn line_search(
    s: &State,
    p: &Field,
    slope: f64,
    tau0: f64,
    v: &Field,
    a: f64,
    mu: f64,
    opts: &MinimizerOptions,
) -> Option<(Field, f64, f64)> {
    const ARMIJO: f64 = 1e-4;
    const MAX_SHRINK: usize = 60;
    // (state, change of 𝓔 - μ·mass, rounding floor)
    let eval = |tau: f64| -> Option<(Field, f64, f64)> {
        let u = retract(&s.u, p, tau)?;
        // On the sphere 𝓔 and 𝓔 - μ·(mass - 1) agree; the latter is
        // insensitive to the rounding of the normalization.
        let d = energy_difference(&u, &s.u, &s.spec, v, a);
        let de = d.energy - mu * d.mass;
        de.is_finite().then_some((u, de, d.floor))
    };
    let acceptable = |tau: f64, de: f64, floor: f64| {
        (de < 0.0 && de <= ARMIJO * slope * tau) || (-slope * tau <= floor && de <= floor)
    };

    let mut tau = tau0;
    let mut best: Option<(Field, f64, f64)> = None;
    if let Some((u0, d0, f0)) = eval(tau) {
        let curv = (d0 - slope * tau) / (tau * tau);
        let resolved = -slope * tau > f0;
        if resolved && curv > 0.0 {
            let tq = (-slope / (2.0 * curv)).clamp(0.1 * tau, 10.0 * tau);
            if let Some((uq, dq, fq)) = eval(tq) {
                if dq < d0 && acceptable(tq, dq, fq) {
                    best = Some((uq, dq, tq));
                }
            }
        }
        if best.is_none() && acceptable(tau, d0, f0) {
            best = Some((u0, d0, tau));
        }
        if best.is_none() && resolved && curv > 0.0 {
            tau = (-slope / (2.0 * curv)).min(tau * opts.backtrack_factor);
        } else {
            tau *= opts.backtrack_factor;
        }
    } else {
        tau *= opts.backtrack_factor;
    }
    let mut shrinks = 0;
    while best.is_none() && shrinks < MAX_SHRINK {
        if let Some((u, de, floor)) = eval(tau) {
            if acceptable(tau, de, floor) {
                best = Some((u, de, tau));
                break;
            }
        }
        tau *= opts.backtrack_factor;
        shrinks += 1;
    }
    best
}

/// `ρ⁻¹ u(c + (x - c)/ρ)` renormalized, with `c` the density maximum: narrows
/// `u` by the factor `ρ` about its peak.
pub fn rescaled_about_peak(u: &Field, ratio: f64) -> Result<Field> {
    if !(ratio > 0.0) {
        return Err(Error::InvalidArgument(format!("width ratio must be positive, got {ratio}")));
    }
    let g = u.grid();
    let (ix, iy) = u.map(f64::abs).argmax();
    let (cx, cy) = (g.coord(ix), g.coord(iy));
    let l = g.half_width();
    let offsets = |c: f64| -> Vec<f64> { g.coords().iter().map(|&x| g.periodic_offset(x, c) / ratio).collect() };
    let (ox, oy) = (offsets(cx), offsets(cy));
    let xs: Vec<f64> = ox.iter().map(|o| cx + o).collect();
    let ys: Vec<f64> = oy.iter().map(|o| cy + o).collect();
    let mut vals = resample(&u.map(f64::abs), &xs, &ys, Outside::Periodic);
    // a narrowed state must not pick up periodic images of itself
    let n = g.n();
    for (iy, dy) in oy.iter().enumerate() {
        for (ix, dx) in ox.iter().enumerate() {
            let v = &mut vals[iy * n + ix];
            *v = if dx.abs() >= l || dy.abs() >= l { 0.0 } else { v.abs() };
        }
    }
    Field::from_raw(g, vals).normalized()
}

/// One sweep entry: the coupling and its outcome.
#[derive(Debug)]
pub struct SweepEntry {
    pub coupling: f64,
    pub result: Result<MinimizerResult>,
}

/// Runs [`minimize`] along an ascending schedule, warm-starting each entry
/// from the last successful one narrowed by the predicted width ratio
/// `((a* - a_next)/(a* - a_prev))^width_exponent`. Failures are recorded
/// per entry and do not stop the sweep.
pub fn continuation_sweep(
    v: &Field,
    schedule: &[f64],
    a_star: f64,
    opts: &MinimizerOptions,
    first_init: Option<&Field>,
    width_exponent: f64,
) -> Result<Vec<SweepEntry>> {
    if schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("schedule must be strictly increasing".into()));
    }
    if let Some(&last) = schedule.last() {
        if last >= a_star * (1.0 - CRITICAL_MARGIN) {
            return Err(Error::CriticalCouplingGuard { a: last, critical: a_star });
        }
    }
    let mut out = Vec::with_capacity(schedule.len());
    let mut prior: Option<(f64, Field)> = None;
    for (k, &a) in schedule.iter().enumerate() {
        let result = match (&prior, k) {
            (Some((a_prev, u_prev)), _) => {
                let ratio = ((a_star - a) / (a_star - a_prev)).powf(width_exponent);
                rescaled_about_peak(u_prev, ratio).and_then(|init| {
                    let o = MinimizerOptions {
                        init_kind: InitKind::PriorRescaled,
                        ..opts.clone()
                    };
                    minimize(v, a, a_star, &o, Some(&init))
                })
            }
            (None, _) => minimize(v, a, a_star, opts, first_init),
        };
        if let Ok(res) = &result {
            prior = Some((a, res.u.clone()));
        }
        out.push(SweepEntry { coupling: a, result });
    }
    Ok(out)
}

/// Sensitivity of a minimizer to the box size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCheck {
    pub half_width: f64,
    pub doubled_half_width: f64,
    pub energy_shift: f64,
    pub eps_shift: f64,
    pub converged: bool,
}

/// Re-minimizes on the box of twice the half-width (same spacing), warm
/// started from `result` embedded in the larger box, and reports how much
/// `E_a` and `eps` move.
pub fn box_doubling_check(
    spec: &PotentialSpec,
    result: &MinimizerResult,
    a_star: f64,
    opts: &MinimizerOptions,
) -> Result<BoxCheck> {
    let grid = result.u.grid();
    let spec = spec.resolved(grid);
    let big = Grid2D::new(2.0 * grid.half_width(), 2 * grid.n())?;
    let v = spec.realize(&big)?;
    let init = result.u.embed(&big, 0.0)?;
    let o = MinimizerOptions {
        init_kind: InitKind::PriorRescaled,
        ..opts.clone()
    };
    let res = minimize(&v, result.coupling, a_star, &o, Some(&init))?;
    Ok(BoxCheck {
        half_width: grid.half_width(),
        doubled_half_width: big.half_width(),
        energy_shift: res.e() - result.e(),
        eps_shift: res.eps - result.eps,
        converged: res.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn options_are_validated() {
        let bad = [
            MinimizerOptions { tol_residual: 0.0, ..Default::default() },
            MinimizerOptions { backtrack_factor: 1.0, ..Default::default() },
            MinimizerOptions { max_iters: 0, ..Default::default() },
        ];
        for o in bad {
            assert!(o.validate().is_err());
        }
    }

    #[test]
    fn guard_refuses_near_critical_coupling() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let v = Field::zeros(&g);
        let r = minimize(&v, 0.99995, 1.0, &MinimizerOptions::default(), None);
        assert!(matches!(r, Err(Error::CriticalCouplingGuard { .. })));
    }

    #[test]
    fn supplied_kind_needs_a_field() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let o = MinimizerOptions { init_kind: InitKind::Townes, ..Default::default() };
        assert!(minimize(&Field::zeros(&g), 0.0, 10.0, &o, None).is_err());
    }

    #[test]
    fn flat_potential_gives_the_constant_state() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let r = minimize(&Field::zeros(&g), 0.0, f64::INFINITY, &MinimizerOptions::default(), None).unwrap();
        assert!(r.converged, "residual {}", r.residual);
        assert!(r.e().abs() < 1e-8);
        let c = 1.0 / 16.0; // 1/√(area)
        assert!(r.u.values().iter().all(|x| (x - c).abs() < 1e-6));
    }

    #[test]
    fn rescaling_narrows_about_the_peak() {
        let g = Grid2D::new(8.0, 64).unwrap();
        let u = Field::gaussian(&g, (1.0, -0.5), 1.0);
        let w = rescaled_about_peak(&u, 0.5).unwrap();
        assert!((energy::width(&w) - 0.5 * energy::width(&u)).abs() < 1e-3);
        assert_eq!(w.argmax(), u.argmax());
    }
}
