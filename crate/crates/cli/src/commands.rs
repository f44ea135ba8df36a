use std::path::{Path, PathBuf};

use gp_core::diagnostics::{blowup_fit, existence_onset, comparison_grid, sweep_report, BlowupFit, Fit};
use gp_core::energy::{self, EnergyBreakdown};
use gp_core::grid::read_gpf_file;
use gp_core::minimizer::{continuation_sweep, InitKind, MinimizerOptions, MinimizerResult, SweepEntry};
use gp_core::potentials::{self, PotentialSpec};
use gp_core::soliton::{critical_coupling, radial_moment, solve_townes, RadialProfile, IDENTITY_TOL};
use gp_core::spectrum;
use gp_core::{Error, Field, Grid2D};
use serde::Serialize;

use crate::config::Config;
use crate::format::{self, float, Csv};
use crate::manifest::{GridInfo, OutDir, Status};
use crate::Failure;

/// Accuracy of the soliton behind `a*` when a command needs it.
const SOLITON_TOL: f64 = 1e-12;

fn parse_potential(s: &str) -> Result<PotentialSpec, Failure> {
    match s.parse::<PotentialSpec>() {
        Ok(p) => Ok(p),
        Err(_) if s.ends_with(".gpf") => Ok(PotentialSpec::File(s.into())),
        Err(e) => Err(Failure::Config(format!("potential {s:?}: {e}"))),
    }
}

fn read_field(path: &Path) -> Result<Field, Failure> {
    read_gpf_file(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn make_grid(half_width: f64, n: usize) -> Result<Grid2D, Failure> {
    Grid2D::new(half_width, n).map_err(|e| Failure::Config(e.to_string()))
}

fn realize(spec: &PotentialSpec, grid: &Grid2D) -> Result<(PotentialSpec, Field), Failure> {
    let spec = spec.resolved(grid);
    let v = spec.realize(grid)?;
    Ok((spec, v))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    print!("{}", format::json(value)?);
    Ok(())
}

/// Directory and file name of a single-file output.
fn split_out(out: &Path) -> Result<(PathBuf, String), Failure> {
    let name = out
        .file_name()
        .ok_or_else(|| Failure::Config(format!("{} is not a file path", out.display())))?;
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    Ok((dir, name.to_string_lossy().into_owned()))
}

#[derive(Serialize)]
struct Identities {
    mass: f64,
    kinetic: f64,
    half_quartic: f64,
    kinetic_rel_err: f64,
    quartic_rel_err: f64,
    tol: f64,
}

#[derive(Serialize)]
struct SolitonOut<'a> {
    #[serde(flatten)]
    profile: &'a RadialProfile,
    critical_coupling: f64,
    moment_1: f64,
    moment_2: f64,
    identities: Identities,
}

pub fn soliton(tol: f64, out: &Path) -> Result<(), Failure> {
    let (dir, name) = split_out(out)?;
    let profile = solve_townes(tol)?;
    let a_star = critical_coupling(&profile)?;
    let half = 0.5 * profile.quartic;
    let body = SolitonOut {
        profile: &profile,
        critical_coupling: a_star,
        moment_1: radial_moment(&profile, 1.0)?,
        moment_2: radial_moment(&profile, 2.0)?,
        identities: Identities {
            mass: profile.mass,
            kinetic: profile.kinetic,
            half_quartic: half,
            kinetic_rel_err: (profile.mass - profile.kinetic).abs() / profile.mass,
            quartic_rel_err: (profile.mass - half).abs() / profile.mass,
            tol: IDENTITY_TOL,
        },
    };
    let mut dir = OutDir::create(&dir, "soliton")?;
    dir.config.insert("tol".into(), float(tol));
    dir.critical_coupling = Some(a_star);
    dir.text(&name, &format::json(&body)?)?;
    dir.finish(Status::Ok, None)
}

pub fn energy(field: &Path, potential: &str, a: f64) -> Result<(), Failure> {
    let u = read_field(field)?;
    let (_, v) = realize(&parse_potential(potential)?, u.grid())?;
    print_json(&energy::energy(&u, &v, a)?)
}

pub struct MinimizeArgs<'a> {
    pub potential: &'a str,
    pub a: f64,
    pub half_width: f64,
    pub n: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub init: Option<&'a Path>,
    pub out: &'a Path,
    pub field: Option<&'a str>,
}

#[derive(Serialize)]
struct MinimizeOut {
    potential: String,
    grid: GridInfo,
    critical_coupling: f64,
    coupling: f64,
    energy: EnergyBreakdown,
    residual: f64,
    mu: f64,
    iters: usize,
    converged: bool,
    eps: f64,
    under_resolved: bool,
    init_kind: InitKind,
}

fn options(tol: f64, max_iters: usize) -> MinimizerOptions {
    MinimizerOptions {
        tol_residual: tol,
        max_iters,
        ..MinimizerOptions::default()
    }
}

pub fn minimize(args: MinimizeArgs) -> Result<(), Failure> {
    let (dir, name) = split_out(args.out)?;
    let grid = make_grid(args.half_width, args.n)?;
    let (spec, v) = realize(&parse_potential(args.potential)?, &grid)?;
    let init = args.init.map(read_field).transpose()?;
    let a_star = solve_townes(SOLITON_TOL)?.mass;
    let opts = MinimizerOptions {
        init_kind: if init.is_some() { InitKind::FromFile } else { InitKind::Gaussian },
        ..options(args.tol, args.max_iters)
    };
    let res = gp_core::minimizer::minimize(&v, args.a, a_star, &opts, init.as_ref())?;

    let mut out = OutDir::create(&dir, "minimize")?;
    out.config.insert("potential".into(), spec.to_string());
    out.config.insert("a".into(), float(args.a));
    out.config.insert("tol".into(), float(args.tol));
    out.config.insert("max_iters".into(), args.max_iters.to_string());
    if let Some(p) = args.init {
        out.config.insert("init".into(), p.display().to_string());
    }
    out.grid = Some(GridInfo::from(&grid));
    out.critical_coupling = Some(a_star);
    let body = MinimizeOut {
        potential: spec.to_string(),
        grid: GridInfo::from(&grid),
        critical_coupling: a_star,
        coupling: res.coupling,
        energy: res.energy,
        residual: res.residual,
        mu: res.mu,
        iters: res.iters,
        converged: res.converged,
        eps: res.eps,
        under_resolved: res.under_resolved,
        init_kind: res.init_kind,
    };
    out.text(&name, &format::json(&body)?)?;
    if let Some(f) = args.field {
        out.field(f, &res.u)?;
    }
    finish_convergence(out, res.converged, res.iters)
}

fn finish_convergence(out: OutDir, converged: bool, iters: usize) -> Result<(), Failure> {
    if converged {
        out.finish(Status::Ok, None)
    } else {
        let msg = format!("residual tolerance not reached after {iters} iterations");
        out.finish(Status::NonConvergence, Some(msg.clone()))?;
        Err(Failure::Numerics(msg))
    }
}

/// Potential, grid and couplings shared by `sweep` and `blowup`.
struct Prepared {
    config: Config,
    spec: PotentialSpec,
    grid: Grid2D,
    v: Field,
    out_dir: PathBuf,
    entries: Vec<SweepEntry>,
}

fn run_sweep(config_path: &Path, out: Option<&Path>, a_star: f64) -> Result<Prepared, Failure> {
    let config = Config::load(config_path)?;
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| Failure::Config("no output directory: pass --out or set out_dir".into()))?;
    let grid = make_grid(config.half_width, config.n)?;
    let (spec, v) = realize(&config.potential, &grid)?;
    let schedule = config.schedule.couplings(a_star);
    let opts = options(config.tol, config.max_iters);
    let entries = continuation_sweep(&v, &schedule, a_star, &opts, None, config.width_exponent())?;
    Ok(Prepared {
        config,
        spec,
        grid,
        v,
        out_dir,
        entries,
    })
}

fn open_dir(p: &Prepared, command: &str, a_star: f64) -> Result<OutDir, Failure> {
    let mut out = OutDir::create(&p.out_dir, command)?;
    out.config = p.config.echo.clone();
    out.grid = Some(GridInfo::from(&p.grid));
    out.critical_coupling = Some(a_star);
    Ok(out)
}

/// Entries that did not produce a converged minimizer, as a message.
fn failures(entries: &[SweepEntry]) -> Option<String> {
    let bad: Vec<String> = entries
        .iter()
        .enumerate()
        .filter_map(|(k, e)| match &e.result {
            Ok(r) if r.converged => None,
            Ok(_) => Some(format!("entry {k} (a = {}) did not converge", float(e.coupling))),
            Err(err) => Some(format!("entry {k} (a = {}) failed: {err}", float(e.coupling))),
        })
        .collect();
    (!bad.is_empty()).then(|| bad.join("; "))
}

pub const SWEEP_COLUMNS: [&str; 14] = [
    "index",
    "a",
    "a_ratio",
    "energy",
    "kinetic",
    "potential",
    "quartic",
    "eps",
    "residual",
    "mu",
    "iters",
    "converged",
    "resolved",
    "status",
];

#[derive(Serialize)]
struct SweepSummary {
    critical_coupling: f64,
    potential: String,
    /// `inf σ(-Δ+V)` on the grid.
    lambda0: f64,
    /// Smallest converged coupling that binds below the spread-out benchmark.
    existence_onset: Option<f64>,
}

pub fn sweep(config_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    // validate the config before paying for the soliton
    Config::load(config_path)?;
    let a_star = solve_townes(SOLITON_TOL)?.mass;
    let p = run_sweep(config_path, out, a_star)?;
    let mut dir = open_dir(&p, "sweep", a_star)?;
    let mut csv = Csv::new(&SWEEP_COLUMNS);
    for (k, e) in p.entries.iter().enumerate() {
        let row = match &e.result {
            Ok(r) => {
                dir.field(&format!("u_{k:03}.gpf"), &r.u)?;
                vec![
                    k.to_string(),
                    float(e.coupling),
                    float(e.coupling / a_star),
                    float(r.energy.total),
                    float(r.energy.kinetic),
                    float(r.energy.potential),
                    float(r.energy.quartic),
                    float(r.eps),
                    float(r.residual),
                    float(r.mu),
                    r.iters.to_string(),
                    r.converged.to_string(),
                    (!r.under_resolved).to_string(),
                    if r.converged { "ok" } else { "not_converged" }.to_string(),
                ]
            }
            Err(_) => {
                let mut row = vec![k.to_string(), float(e.coupling), float(e.coupling / a_star)];
                row.extend(std::iter::repeat_n(float(f64::NAN), 7));
                row.extend(["0", "false", "false", "failed"].map(String::from));
                row
            }
        };
        csv.row(&row);
    }
    dir.text("entries.csv", &csv.into_string())?;

    let lambda0 = spectrum::ground_energy(&p.v, 1e-9)?.lambda0;
    let pairs: Vec<(f64, f64)> = p
        .entries
        .iter()
        .filter_map(|e| e.result.as_ref().ok().filter(|r| r.converged).map(|r| (e.coupling, r.e())))
        .collect();
    let summary = SweepSummary {
        critical_coupling: a_star,
        potential: p.spec.to_string(),
        lambda0,
        existence_onset: existence_onset(&pairs, lambda0, &p.grid),
    };
    dir.text("summary.json", &format::json(&summary)?)?;
    match failures(&p.entries) {
        None => dir.finish(Status::Ok, None),
        Some(msg) => {
            dir.finish(Status::NonConvergence, Some(msg.clone()))?;
            Err(Failure::Numerics(msg))
        }
    }
}

pub const BLOWUP_COLUMNS: [&str; 7] = ["a", "E", "eps", "L2_dist", "H1_dist", "resolved", "converged"];

#[derive(Serialize)]
struct FitOut<'a> {
    critical_coupling: f64,
    potential: String,
    #[serde(flatten)]
    fit: &'a BlowupFit,
}

fn load_profile(path: &Path) -> Result<RadialProfile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read profile {}: {e}", path.display())))?;
    let profile: RadialProfile = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("{}: not a soliton profile: {e}", path.display())))?;
    critical_coupling(&profile)?;
    Ok(profile)
}

pub fn blowup(config_path: &Path, profile_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    Config::load(config_path)?;
    let profile = load_profile(profile_path)?;
    let a_star = profile.mass;
    let p = run_sweep(config_path, out, a_star)?;
    let mut dir = open_dir(&p, "blowup", a_star)?;
    dir.config.insert("profile".into(), profile_path.display().to_string());

    let results: Vec<(usize, &MinimizerResult)> = p
        .entries
        .iter()
        .enumerate()
        .filter_map(|(k, e)| e.result.as_ref().ok().map(|r| (k, r)))
        .collect();
    let refs: Vec<&MinimizerResult> = results.iter().map(|(_, r)| *r).collect();
    let (report, aligned) = sweep_report(&refs, &profile, &comparison_grid(), Fit::Skip)?;

    let mut csv = Csv::new(&BLOWUP_COLUMNS);
    let mut next = report.entries.iter().zip(&aligned).zip(&results).peekable();
    for (k, e) in p.entries.iter().enumerate() {
        match next.peek() {
            Some(((rec, al), (idx, _))) if *idx == k => {
                if let Some(al) = al {
                    dir.field(&format!("aligned_{k:03}.gpf"), &al.field)?;
                }
                csv.row(&[
                    float(rec.a),
                    float(rec.energy),
                    float(rec.eps),
                    float(rec.l2_dist),
                    float(rec.h1_dist),
                    rec.resolved.to_string(),
                    rec.converged.to_string(),
                ]);
                next.next();
            }
            _ => {
                let nan = float(f64::NAN);
                csv.row(&[float(e.coupling), nan.clone(), nan.clone(), nan.clone(), nan, "false".into(), "false".into()]);
            }
        }
    }
    dir.text("entries.csv", &csv.into_string())?;

    let law = match p.spec {
        PotentialSpec::PowerWell { h0, p, .. } => Some((p, h0)),
        _ => None,
    };
    match blowup_fit(&report.entries, &profile, law) {
        Ok(fit) => {
            let body = FitOut {
                critical_coupling: a_star,
                potential: p.spec.to_string(),
                fit: &fit,
            };
            dir.text("fit.json", &format::json(&body)?)?;
        }
        Err(e @ Error::InsufficientData { .. }) => {
            let msg = e.to_string();
            dir.finish(Status::InsufficientData, Some(msg.clone()))?;
            return Err(Failure::Numerics(msg));
        }
        Err(e) => return Err(e.into()),
    }
    match failures(&p.entries) {
        None => dir.finish(Status::Ok, None),
        Some(msg) => {
            dir.finish(Status::NonConvergence, Some(msg.clone()))?;
            Err(Failure::Numerics(msg))
        }
    }
}

pub fn check_v1(potential: &str, half_width: f64, n: usize, tol: f64) -> Result<(), Failure> {
    let grid = make_grid(half_width, n)?;
    let (spec, v) = realize(&parse_potential(potential)?, &grid)?;
    print_json(&spectrum::check_v1(&v, spec.ess_inf(&v), tol)?)
}

pub fn check_v2(potential: &str, field: &Path, eps: f64) -> Result<(), Failure> {
    let u = read_field(field)?;
    let spec = parse_potential(potential)?.resolved(u.grid());
    print_json(&potentials::check_v2(&spec, &u, eps)?)
}
