//! Blow-up analysis of near-critical minimizers and concentration diagnostics.
//!
//! A minimizer `u` is brought to the soliton's scale by `eps·u(x₀ + eps·x)`
//! with `eps = ‖∇u‖⁻¹` and `x₀` its peak, then compared with `Q₀` on a fixed
//! comparison grid. Sweeps are summarized by a log–log fit of `eps` against
//! `a* - a`. The concentration function `R ↦ sup_y ∫_{B_R(y)} |u|²` feeds a
//! heuristic classifier of sequences into compact, vanishing and dichotomy
//! behavior; it is advisory only.

use serde::{Deserialize, Serialize};

use crate::energy::MASS_TOL;
use crate::error::{Error, Result};
use crate::grid::{self, convolve_potential, resample, Field, Grid2D, Outside};
use crate::minimizer::MinimizerResult;
use crate::soliton::{critical_coupling, lift_to_grid, radial_moment, RadialProfile};

/// Default comparison grid for aligned profiles.
pub const COMPARISON_HALF_WIDTH: f64 = 12.0;
pub const COMPARISON_SAMPLES: usize = 128;

/// Threshold of the trichotomy classifier.
pub const DEFAULT_DELTA: f64 = 0.05;

pub fn comparison_grid() -> Grid2D {
    Grid2D::new(COMPARISON_HALF_WIDTH, COMPARISON_SAMPLES).expect("valid comparison grid")
}

#[derive(Clone, Debug)]
pub struct Aligned {
    pub field: Field,
    pub eps: f64,
    pub center: (f64, f64),
}

/// Value of the spectral interpolant of `u` on a 3×3 stencil of spacing `h`.
fn stencil(u: &Field, c: (f64, f64), h: f64) -> [[f64; 3]; 3] {
    let xs = [c.0 - h, c.0, c.0 + h];
    let ys = [c.1 - h, c.1, c.1 + h];
    let v = resample(u, &xs, &ys, Outside::Periodic);
    let mut out = [[0.0; 3]; 3];
    for j in 0..3 {
        for i in 0..3 {
            out[j][i] = v[3 * j + i];
        }
    }
    out
}

/// Newton step towards the stationary point of the 3×3 stencil's quadratic model.
fn newton_offset(s: &[[f64; 3]; 3], h: f64) -> Option<(f64, f64)> {
    let gx = (s[1][2] - s[1][0]) / (2.0 * h);
    let gy = (s[2][1] - s[0][1]) / (2.0 * h);
    let hxx = (s[1][2] - 2.0 * s[1][1] + s[1][0]) / (h * h);
    let hyy = (s[2][1] - 2.0 * s[1][1] + s[0][1]) / (h * h);
    let hxy = (s[2][2] - s[2][0] - s[0][2] + s[0][0]) / (4.0 * h * h);
    let det = hxx * hyy - hxy * hxy;
    // only a local maximum qualifies
    if !(hxx < 0.0 && det > 0.0) {
        return None;
    }
    Some(((-hyy * gx + hxy * gy) / det, (hxy * gx - hxx * gy) / det))
}

/// Peak of `|u|`: the grid argmax, moved by a quadratic fit through its
/// neighbors and then polished by Newton steps on the spectral interpolant.
pub fn locate_peak(u: &Field) -> (f64, f64) {
    let g = u.grid();
    let a = u.map(f64::abs);
    let (ix, iy) = a.argmax();
    let mut c = (g.coord(ix), g.coord(iy));
    let dx = g.dx();
    if let Some((ox, oy)) = newton_offset(&stencil(&a, c, dx), dx) {
        c = (c.0 + ox.clamp(-dx, dx), c.1 + oy.clamp(-dx, dx));
    }
    let h = 1e-3 * dx;
    for _ in 0..4 {
        match newton_offset(&stencil(&a, c, h), h) {
            Some((ox, oy)) => {
                c = (c.0 + ox.clamp(-dx, dx), c.1 + oy.clamp(-dx, dx));
                if ox.hypot(oy) < 1e-10 * dx {
                    break;
                }
            }
            None => break,
        }
    }
    (g.wrap(c.0), g.wrap(c.1))
}

/// `eps·u(center + eps·x)` on `target`, where `eps = ‖∇u‖⁻¹` and `center` is
/// the peak of `u`. Points further than `L` from the center (in the box of `u`)
/// read as zero so that periodic images are never pulled in. The result is
/// not renormalized; its mass measures how much of `u` the window captures.
pub fn rescale_and_align(u: &Field, target: &Grid2D) -> Result<Aligned> {
    let g = u.grid();
    let mass = u.mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::UnnormalizedInput { mass });
    }
    let eps = grid::kinetic(u).sqrt().recip();
    let limit = 2.0 * g.dx();
    if !(eps >= limit) {
        return Err(Error::UnderResolved { eps, limit });
    }
    let center = locate_peak(u);
    let l = g.half_width();
    let offs: Vec<f64> = target.coords().iter().map(|x| eps * x).collect();
    let xs: Vec<f64> = offs.iter().map(|o| center.0 + o).collect();
    let ys: Vec<f64> = offs.iter().map(|o| center.1 + o).collect();
    let mut vals = resample(&u.map(f64::abs), &xs, &ys, Outside::Periodic);
    let n = target.n();
    for (iy, oy) in offs.iter().enumerate() {
        for (ix, ox) in offs.iter().enumerate() {
            let v = &mut vals[iy * n + ix];
            *v = if ox.abs() >= l || oy.abs() >= l { 0.0 } else { eps * *v };
        }
    }
    Ok(Aligned {
        field: Field::from_raw(target, vals),
        eps,
        center,
    })
}

/// `(‖f - q‖_{L²}, ‖f - q‖_{H¹})` on a common grid.
pub fn distances(f: &Field, q: &Field) -> Result<(f64, f64)> {
    f.grid().check_same(q.grid())?;
    let d = f.zip_map(q, |a, b| a - b);
    let l2 = d.mass();
    Ok((l2.sqrt(), (l2 + grid::kinetic(&d)).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub a: f64,
    pub energy: f64,
    pub eps: f64,
    pub center: (f64, f64),
    pub l2_dist: f64,
    pub h1_dist: f64,
    /// `eps ≥ 4·dx` on the grid the minimizer ran on.
    pub resolved: bool,
    pub converged: bool,
    pub residual: f64,
}

impl SweepRecord {
    /// Resolved and converged entries are the only ones used for fits.
    pub fn usable(&self) -> bool {
        self.resolved && self.converged
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    /// Slope of `log eps` against `log(a* - a)`.
    pub exponent: f64,
    /// `exp(intercept)`.
    pub prefactor: f64,
    /// `1/(p + 2)` for a trapping well `h₀|x|^p`; none for other potentials.
    pub predicted_exponent: Option<f64>,
    /// `(p·h₀/2 · ∫|x|^p Q²)^{-1/(p+2)}` for a trapping well.
    pub predicted_prefactor: Option<f64>,
    /// Indices of the entries entering the fit.
    pub window: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub critical_coupling: f64,
    pub entries: Vec<SweepRecord>,
    pub fit: Option<BlowupFit>,
}

/// Record of one minimizer after alignment onto `target` and comparison with `Q₀`.
pub fn sweep_record(res: &MinimizerResult, q0: &Field) -> Result<(SweepRecord, Aligned)> {
    let al = rescale_and_align(&res.u, q0.grid())?;
    let (l2, h1) = distances(&al.field, q0)?;
    Ok((
        SweepRecord {
            a: res.coupling,
            energy: res.e(),
            eps: res.eps,
            center: al.center,
            l2_dist: l2,
            h1_dist: h1,
            resolved: !res.under_resolved,
            converged: res.converged,
            residual: res.residual,
        },
        al,
    ))
}

/// Which fit [`sweep_report`] attaches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fit {
    Skip,
    /// Slope and prefactor only.
    Free,
    /// Also the predicted law of the well `h₀|x|^p`.
    PowerWell { p: f64, h0: f64 },
}

/// Least-squares fit of `log eps = exponent·log(a* - a) + log prefactor` over
/// the usable entries, compared with the trapping-well law for `h₀|x|^p`
/// when `law = Some((p, h₀))`.
pub fn blowup_fit(entries: &[SweepRecord], profile: &RadialProfile, law: Option<(f64, f64)>) -> Result<BlowupFit> {
    let a_star = critical_coupling(profile)?;
    let window: Vec<usize> = entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.usable() && e.a < a_star && e.eps > 0.0)
        .map(|(i, _)| i)
        .collect();
    if window.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            found: window.len(),
        });
    }
    let pts: Vec<(f64, f64)> = window
        .iter()
        .map(|&i| ((a_star - entries[i].a).ln(), entries[i].eps.ln()))
        .collect();
    let (slope, intercept) = least_squares(&pts);
    let (predicted_exponent, predicted_prefactor) = match law {
        Some((p, h0)) => {
            let moment = radial_moment(profile, p)?;
            (Some(1.0 / (p + 2.0)), Some((0.5 * p * h0 * moment).powf(-1.0 / (p + 2.0))))
        }
        None => (None, None),
    };
    Ok(BlowupFit {
        exponent: slope,
        prefactor: intercept.exp(),
        predicted_exponent,
        predicted_prefactor,
        window,
    })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Builds the sweep report: every minimizer is aligned and compared with `Q₀`
/// on `target`, then the requested fit is attached.
pub fn sweep_report(
    results: &[&MinimizerResult],
    profile: &RadialProfile,
    target: &Grid2D,
    fit: Fit,
) -> Result<(SweepReport, Vec<Option<Aligned>>)> {
    let q0 = lift_to_grid(profile, target, (0.0, 0.0))?;
    let mut entries = Vec::with_capacity(results.len());
    let mut aligned = Vec::with_capacity(results.len());
    for res in results {
        match sweep_record(res, &q0) {
            Ok((rec, al)) => {
                entries.push(rec);
                aligned.push(Some(al));
            }
            // too narrow to rescale onto the target: keep the row, drop the comparison
            Err(Error::UnderResolved { .. }) => {
                entries.push(SweepRecord {
                    a: res.coupling,
                    energy: res.e(),
                    eps: res.eps,
                    center: locate_peak(&res.u),
                    l2_dist: f64::NAN,
                    h1_dist: f64::NAN,
                    resolved: false,
                    converged: res.converged,
                    residual: res.residual,
                });
                aligned.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let fit = match fit {
        Fit::Skip => None,
        Fit::Free => Some(blowup_fit(&entries, profile, None)?),
        Fit::PowerWell { p, h0 } => Some(blowup_fit(&entries, profile, Some((p, h0)))?),
    };
    Ok((
        SweepReport {
            critical_coupling: profile.mass,
            entries,
            fit,
        },
        aligned,
    ))
}

/// Slack on the onset comparison; minimizer energies carry errors of order
/// the squared residual.
pub const ONSET_TOL: f64 = 1e-8;

/// Energy of a spread-out state on the box: `λ₀` plus the quartic gain of a
/// flat state of unit mass, `-a/(2·area)`.
pub fn vanishing_benchmark(lambda0: f64, a: f64, grid: &Grid2D) -> f64 {
    let area = 4.0 * grid.half_width() * grid.half_width();
    lambda0 - 0.5 * a / area
}

/// Smallest coupling of a sweep, given as `(a, E_a)` pairs, whose energy
/// beats [`vanishing_benchmark`] by more than [`ONSET_TOL`]. This locates a
/// binding onset along the schedule only; it is not a threshold estimate.
pub fn existence_onset(sweep: &[(f64, f64)], lambda0: f64, grid: &Grid2D) -> Option<f64> {
    sweep
        .iter()
        .filter(|(a, e)| *e < vanishing_benchmark(lambda0, *a, grid) - ONSET_TOL)
        .map(|(a, _)| *a)
        .min_by(f64::total_cmp)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Compact,
    Vanishing,
    Dichotomy,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCurve {
    pub radii: Vec<f64>,
    /// `sup_y ∫_{B_R(y)} |u|²` for every radius.
    pub values: Vec<f64>,
    /// Masses of the heaviest disk of the largest radius and of the heaviest
    /// disjoint disk of the same radius.
    pub split: (f64, f64),
    pub classification: Classification,
}

fn disk(grid: &Grid2D, r: f64) -> Field {
    Field::from_fn(grid, |x, y| if x * x + y * y <= r * r { 1.0 } else { 0.0 })
}

fn best_disk(dens: &Field, r: f64) -> Result<(f64, (usize, usize))> {
    let conv = convolve_potential(&disk(dens.grid(), r), dens)?;
    let (ix, iy) = conv.argmax();
    Ok((conv.at(ix, iy), (ix, iy)))
}

/// Concentration function of `|u|²` at ascending `radii`, via the DFT
/// convolution of the density with disk indicators.
pub fn concentration_curve(u: &Field, radii: &[f64], delta: f64) -> Result<ConcentrationCurve> {
    let mass = u.mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::UnnormalizedInput { mass });
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be positive and ascending".into()));
    }
    let g = u.grid();
    let dens = u.map(|x| x * x);
    let mut values = Vec::with_capacity(radii.len());
    let mut running: f64 = 0.0;
    for &r in radii {
        let (m, _) = best_disk(&dens, r)?;
        running = running.max(m.clamp(0.0, 1.0));
        values.push(running);
    }

    let r_split = *radii.last().unwrap();
    let (l1, (cx, cy)) = best_disk(&dens, r_split)?;
    let (x0, y0) = (g.coord(cx), g.coord(cy));
    let rest = Field::from_fn(g, |x, y| {
        let dx = g.periodic_offset(x, x0);
        let dy = g.periodic_offset(y, y0);
        if dx * dx + dy * dy <= r_split * r_split {
            0.0
        } else {
            1.0
        }
    })
    .zip_map(&dens, |m, d| m * d);
    let (l2, _) = best_disk(&rest, r_split)?;
    let split = (l1.clamp(0.0, 1.0), l2.clamp(0.0, 1.0));

    let top = *values.last().unwrap();
    let small = split.0.min(split.1);
    let classification = if top >= 1.0 - delta {
        Classification::Compact
    } else if small > delta && split.0 + split.1 >= 1.0 - delta {
        Classification::Dichotomy
    } else if top < delta {
        Classification::Vanishing
    } else {
        Classification::Inconclusive
    };
    Ok(ConcentrationCurve {
        radii: radii.to_vec(),
        values,
        split,
        classification,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceClass {
    pub classification: Classification,
    /// Estimated mass of the lighter cluster, for dichotomy.
    pub lambda: Option<f64>,
}

/// Heuristic trichotomy for a sequence of concentration curves sharing radii:
///
/// * compact: the last curve holds at least `1 - δ` of the mass within its largest radius;
/// * dichotomy: the last two curves split into two clusters that together
///   hold `1 - δ`, with the lighter one in `(δ, 1 - δ)` and stable to `δ`;
/// * vanishing: at every radius the values strictly decrease along the
///   sequence and the last value at the largest radius is below half the first;
/// * inconclusive otherwise, including sequences shorter than three.
pub fn classify_sequence(curves: &[ConcentrationCurve], delta: f64) -> SequenceClass {
    let inconclusive = SequenceClass {
        classification: Classification::Inconclusive,
        lambda: None,
    };
    if curves.len() < 3 || curves.iter().any(|c| c.radii != curves[0].radii) {
        return inconclusive;
    }
    let last = &curves[curves.len() - 1];
    let before = &curves[curves.len() - 2];
    let top = |c: &ConcentrationCurve| *c.values.last().unwrap();
    if top(last) >= 1.0 - delta {
        return SequenceClass {
            classification: Classification::Compact,
            lambda: None,
        };
    }
    let lighter = |c: &ConcentrationCurve| c.split.0.min(c.split.1);
    let holds = |c: &ConcentrationCurve| c.split.0 + c.split.1 >= 1.0 - delta;
    let lam = lighter(last);
    if holds(last) && holds(before) && lam > delta && lam < 1.0 - delta && (lam - lighter(before)).abs() < delta {
        return SequenceClass {
            classification: Classification::Dichotomy,
            lambda: Some(lam),
        };
    }
    let decreasing = (0..last.radii.len()).all(|k| curves.windows(2).all(|w| w[1].values[k] < w[0].values[k]));
    if decreasing && top(last) < 0.5 * top(&curves[0]) {
        return SequenceClass {
            classification: Classification::Vanishing,
            lambda: None,
        };
    }
    inconclusive
}
