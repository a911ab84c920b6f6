use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::Matrix4;
use ncfield::dressing::canonicity_residual;
use ncfield::dynamics::{
    fields_csv, free_hamiltonian, max_trajectory_deviation, trajectory_csv, transfer_matrix, uniform_grid,
    CIRCLE_LENGTH,
};
use ncfield::output::format_float;
use ncfield::spectrum::{hamiltonian_operator, spectrum_entry};
use ncfield::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RouteChoice {
    Deformed,
    Dressed,
    Both,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct SpectrumDocument<'a> {
    theta: f64,
    theta_bar: f64,
    n_max: u32,
    dressing: &'a DressingCoefficients,
    entries: &'a [SpectrumEntry],
    degeneracy: &'a DegeneracyReport,
}

/// Writes `spectrum.csv`, `spectrum.json` and `degeneracy.csv`.
pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let params = cfg.params();
    let coeffs = solve_dressing(&params)?;
    let table = spectrum_table(&params, &coeffs, cfg.n_max);
    let report = degeneracy_report(&table);

    write(out, "spectrum.csv", &table.to_csv())?;
    let doc = SpectrumDocument {
        theta: params.theta,
        theta_bar: params.theta_bar,
        n_max: cfg.n_max,
        dressing: &coeffs,
        entries: &table.entries,
        degeneracy: &report,
    };
    write(out, "spectrum.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    let mut deg = String::from("n,splitting,degenerate\n");
    for s in &report.splittings {
        let flag = report.degenerate.contains(&s.n);
        let _ = writeln!(deg, "{},{},{}", s.n, format_float(s.splitting), flag);
    }
    write(out, "degeneracy.csv", &deg)?;

    Ok(vec![
        format!(
            "spectrum: theta = {}, theta_bar = {}, modes 0..={} written to {}",
            params.theta,
            params.theta_bar,
            cfg.n_max,
            out.display()
        ),
        format!(
            "degenerate modes: {} of {} (tolerance {:e})",
            report.degenerate.len(),
            report.splittings.len(),
            report.tolerance
        ),
    ])
}

fn evolution_config(cfg: &RunConfig, route: Route) -> EvolutionConfig {
    EvolutionConfig {
        dt: cfg.dt,
        t_final: cfg.t_final,
        integrator: cfg.integrator,
        route,
        sample_stride: cfg.sample_stride,
    }
}

fn initial_state(cfg: &RunConfig, seed: u64) -> Result<ModeState> {
    match cfg.initial_state(seed) {
        None => bail!("config error: initial_state is required for evolve"),
        Some(s) => Ok(s?),
    }
}

/// Closed-form oscillator solution of the undeformed theory.
fn undeformed_exact(s0: &ModeState, t: f64, c: Coordinate) -> Complex64 {
    let n = c.mode.value().unsigned_abs() as f64;
    let q0 = s0.q(c.component, c.mode);
    let p0 = s0.p(c.component, c.mode);
    match (c.kind, n == 0.0) {
        (Kind::Q, true) => q0 + p0 * t,
        (Kind::P, true) => p0,
        (Kind::Q, false) => q0 * (n * t).cos() + p0 * ((n * t).sin() / n),
        (Kind::P, false) => p0 * (n * t).cos() - q0 * (n * (n * t).sin()),
    }
}

/// Writes one trajectory CSV per route and a field snapshot at the final time.
pub fn cmd_evolve(cfg: &RunConfig, route: RouteChoice, seed: u64, out: &Path) -> Result<Vec<String>> {
    let params = cfg.params();
    let s0 = initial_state(cfg, seed)?;
    let routes: &[(Route, &str)] = match route {
        RouteChoice::Deformed => &[(Route::DeformedBrackets, "deformed")],
        RouteChoice::Dressed => &[(Route::DressedClosedForm, "dressed")],
        RouteChoice::Both => &[(Route::DeformedBrackets, "deformed"), (Route::DressedClosedForm, "dressed")],
    };
    let grid = uniform_grid(cfg.field_points);
    let e0 = free_hamiltonian(&s0);
    let mut lines = Vec::new();
    let mut runs = Vec::new();
    for (r, name) in routes {
        let traj = evolve(&s0, &params, &evolution_config(cfg, *r))?;
        write(out, &format!("trajectory_{name}.csv"), &trajectory_csv(&traj))?;
        let last = traj.last().expect("at least the initial sample");
        write(out, &format!("fields_{name}.csv"), &fields_csv(&reconstruct_fields(&last.state, &grid)?))?;
        let drift = traj.iter().map(|s| (s.energy_h0 - e0).abs()).fold(0.0, f64::max);
        lines.push(format!(
            "route {name}: {} samples to t = {}, energy_H0 = {}, max drift {:.3e}",
            traj.len(),
            last.time,
            format_float(e0),
            drift
        ));
        runs.push(traj);
    }
    if params.is_undeformed() {
        let mut worst = 0.0f64;
        for traj in &runs {
            for smp in traj {
                for c in smp.state.coordinates() {
                    worst = worst.max((smp.state.get(c)? - undeformed_exact(&s0, smp.time, c)).norm());
                }
            }
        }
        lines.push(format!("closed-form oscillator comparison: max |z - z_exact| = {worst:.3e}"));
    }
    if let [a, b] = runs.as_slice() {
        let d = max_trajectory_deviation(a, b)?;
        lines.push(format!(
            "max deviation between routes: {d:.3e} (tolerance {:e})",
            cfg.tolerance("route_equivalence")
        ));
    }
    let mut summary = lines.join("\n");
    summary.push('\n');
    write(out, "evolve_summary.txt", &summary)?;
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.passed).map(|r| r.name).collect()
    }

    pub fn table(&self) -> Vec<String> {
        let mut lines = vec![format!("{:<22} {:<6} {:>11} {:>11}  detail", "check", "status", "value", "tolerance")];
        for r in &self.rows {
            lines.push(format!(
                "{:<22} {:<6} {:>11.3e} {:>11.1e}  {}",
                r.name,
                if r.passed { "PASS" } else { "FAIL" },
                r.value,
                r.tolerance,
                r.detail
            ));
        }
        lines
    }
}

fn row(name: &'static str, value: f64, tolerance: f64, detail: String) -> CheckRow {
    CheckRow {
        name,
        passed: value < tolerance,
        value,
        tolerance,
        detail,
    }
}

fn failed(name: &'static str, tolerance: f64, err: impl std::fmt::Display) -> CheckRow {
    CheckRow {
        name,
        passed: false,
        value: f64::INFINITY,
        tolerance,
        detail: err.to_string(),
    }
}

fn parameter_sample(seed: u64) -> Vec<DeformationParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(200);
    while out.len() < 200 {
        let t: f64 = rng.random_range(-2.0..2.0);
        let tb: f64 = rng.random_range(-2.0..2.0);
        if (1.0 + t * tb).abs() > 0.1 {
            out.push(DeformationParams::new(t, tb));
        }
    }
    out
}

fn check_brackets(cfg: &RunConfig, seed: u64) -> CheckRow {
    let tol = cfg.tolerance("bracket");
    let kinds = [(Kind::Q, 0), (Kind::Q, 1), (Kind::P, 0), (Kind::P, 1)];
    let mut worst = 0.0f64;
    let mut sample = parameter_sample(seed);
    sample.push(cfg.params());
    for p in &sample {
        let s = match build_symplectic_structure(p) {
            Ok(s) => s,
            Err(e) => return failed("bracket_oracle", tol, e),
        };
        let inv = s.omega_inv();
        for (r, &(ka, i)) in kinds.iter().enumerate() {
            for (c, &(kb, j)) in kinds.iter().enumerate() {
                worst = worst.max((s.bracket_entry(ka, i, kb, j) + inv[(r, c)]).abs());
            }
        }
    }
    row(
        "bracket_oracle",
        worst,
        tol,
        format!("closed form vs inverted two-form, {} points", sample.len()),
    )
}

fn check_canonicity(cfg: &RunConfig, seed: u64) -> CheckRow {
    let tol = cfg.tolerance("canonicity");
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut sample = parameter_sample(seed);
    sample.push(cfg.params());
    for p in sample.iter().filter(|p| p.scale() > 0.1) {
        let r = solve_dressing(p).and_then(|k| {
            let push = canonicity_residual(p, &k)?;
            Ok(k.constraint_residuals().iter().fold(push, |m, r| m.max(r.abs())))
        });
        match r {
            Ok(v) => worst = worst.max(v),
            Err(e) => return failed("dressing_canonicity", tol, e),
        }
        count += 1;
    }
    row(
        "dressing_canonicity",
        worst,
        tol,
        format!("pushed tensor and constraints, {count} points with real dressing"),
    )
}

fn check_commutators(cfg: &RunConfig, inject_fault: bool) -> CheckRow {
    let tol = cfg.tolerance("commutator");
    let params = cfg.params();
    let modes = ModeSet::new(cfg.n_max.min(4)).expect("n_max >= 1");
    let options = VerifyOptions {
        inject_sign_fault: inject_fault,
    };
    match solve_dressing(&params).and_then(|k| verify_deformed_commutators(&params, &k, modes, options)) {
        Ok(r) => row(
            "commutator_algebra",
            r.max_residual.max(r.max_quantization_residual),
            tol,
            format!("{} pairs on |n| <= {}", r.pairs_checked, modes.n_max()),
        ),
        Err(e) => failed("commutator_algebra", tol, e),
    }
}

fn check_diagonalization(cfg: &RunConfig) -> CheckRow {
    let tol = cfg.tolerance("diagonalization");
    let params = cfg.params();
    let modes = ModeSet::new(cfg.n_max.min(8)).expect("n_max >= 1");
    let coeffs = match solve_dressing(&params) {
        Ok(k) => k,
        Err(e) => return failed("diagonalization", tol, e),
    };
    let h = hamiltonian_operator(&params, &coeffs, modes);
    let mut worst = 0.0f64;
    let mut skipped = 0;
    for n in modes.modes() {
        let e = spectrum_entry(&params, &coeffs, n);
        if e.free {
            skipped += 1;
            continue;
        }
        let ladder = match build_ladder(&params, &coeffs, modes, n) {
            Ok(l) => l,
            Err(e) => return failed("diagonalization", tol, e),
        };
        for (a, w) in ladder.big_a.iter().zip([e.omega_minus, e.omega_plus]) {
            worst = worst.max(h.commutator_from_left(a).distance(&(a * w)));
        }
    }
    row(
        "diagonalization",
        worst,
        tol,
        format!("[A, H] = w A for |n| <= {}, {skipped} free modes skipped", modes.n_max()),
    )
}

fn check_orthogonality(cfg: &RunConfig) -> CheckRow {
    let tol = cfg.tolerance("orthogonality");
    let mut mismatches = 0;
    for i in 0..21 {
        for j in 0..21 {
            let p = DeformationParams::new(0.1 * i as f64, 0.1 * j as f64);
            match ncfield::dressing::orthogonality_report_with(&p, tol) {
                Ok(r) => {
                    if r.conformal != (i == j) || r.is_orthogonal != (i == 0 && j == 0) {
                        mismatches += 1;
                    }
                }
                Err(e) => return failed("orthogonality_scan", tol, e),
            }
        }
    }
    let here = match ncfield::dressing::orthogonality_report_with(&cfg.params(), tol) {
        Ok(r) if r.is_orthogonal => format!("({}, {}): orthogonal", cfg.theta, cfg.theta_bar),
        Ok(r) if r.conformal => format!(
            "({}, {}): orthogonal up to uniform scale {:.6}",
            cfg.theta, cfg.theta_bar, r.scale
        ),
        Ok(_) => format!("({}, {}): not orthogonal", cfg.theta, cfg.theta_bar),
        Err(e) => format!("({}, {}): {e}", cfg.theta, cfg.theta_bar),
    };
    CheckRow {
        name: "orthogonality_scan",
        passed: mismatches == 0,
        value: mismatches as f64,
        tolerance: tol,
        detail: format!("21x21 grid, {mismatches} points off (conformal iff theta = theta_bar); {here}"),
    }
}

fn check_dynamics(cfg: &RunConfig, seed: u64) -> Vec<CheckRow> {
    let route_tol = cfg.tolerance("route_equivalence");
    let energy_tol = cfg.tolerance("energy_drift");
    let params = cfg.params();
    let s0 = match cfg.initial_state(seed).unwrap_or_else(|| {
        let mut c = cfg.clone();
        c.initial_state = Some(crate::config::InitialState::Random);
        c.initial_state(seed).expect("random state")
    }) {
        Ok(s) => s,
        Err(e) => {
            return vec![
                failed("route_equivalence", route_tol, &e),
                failed("energy_conservation", energy_tol, &e),
                failed("reality_and_fields", 1e-10, &e),
            ]
        }
    };
    let a = evolve(&s0, &params, &evolution_config(cfg, Route::DeformedBrackets));
    let b = evolve(&s0, &params, &evolution_config(cfg, Route::DressedClosedForm));
    let (a, b) = match (a, b) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return vec![
                failed("route_equivalence", route_tol, &e),
                failed("energy_conservation", energy_tol, &e),
                failed("reality_and_fields", 1e-10, &e),
            ]
        }
    };
    let mut rows = Vec::new();
    rows.push(match max_trajectory_deviation(&a, &b) {
        Ok(d) => row(
            "route_equivalence",
            d,
            route_tol,
            format!("deformed vs dressed, t in [0, {}], dt = {}", cfg.t_final, cfg.dt),
        ),
        Err(e) => failed("route_equivalence", route_tol, e),
    });
    let e0 = free_hamiltonian(&s0);
    let drift = a.iter().map(|s| (s.energy_h0 - e0).abs()).fold(0.0, f64::max);
    rows.push(row(
        "energy_conservation",
        drift,
        energy_tol,
        format!("H0 along the deformed route, E0 = {e0:.6}"),
    ));

    let grid = uniform_grid(cfg.field_points.max(2 * cfg.n_max as usize + 1));
    let dx = CIRCLE_LENGTH / grid.len() as f64;
    let mut worst = 0.0f64;
    for smp in a.iter().chain(&b) {
        worst = worst.max(smp.state.reality_defect().0);
        match reconstruct_fields(&smp.state, &grid) {
            Ok(f) => {
                worst = worst.max(f.iter().map(|x| x.max_imag).fold(0.0, f64::max));
                let lhs: f64 = f.iter().map(|x| x.phi[0] * x.phi[0]).sum::<f64>() * dx;
                let rhs: f64 = smp.state.modes().modes().map(|n| smp.state.q(0, n).norm_sqr()).sum();
                worst = worst.max((lhs - rhs).abs());
            }
            Err(e) => return [rows, vec![failed("reality_and_fields", 1e-10, e)]].concat(),
        }
    }
    rows.push(row(
        "reality_and_fields",
        worst,
        1e-10,
        "pairing, imaginary field parts and Parseval on every sample".into(),
    ));
    rows
}

fn check_symplecticity(cfg: &RunConfig) -> CheckRow {
    let tol = cfg.tolerance("symplecticity");
    let params = cfg.params();
    let s = match build_symplectic_structure(&params) {
        Ok(s) => s,
        Err(e) => return failed("flow_symplecticity", tol, e),
    };
    let omega = Matrix4::from_iterator(s.omega().iter().copied());
    let mut worst = 0.0f64;
    for n in 0..=i64::from(cfg.n_max) {
        match transfer_matrix(&s, ModeIndex(n), cfg.dt, Integrator::ImplicitMidpoint) {
            Ok(m) => {
                let d = m.transpose() * omega * m - omega;
                let inf = d.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
                worst = worst.max(inf);
            }
            Err(e) => return failed("flow_symplecticity", tol, e),
        }
    }
    row(
        "flow_symplecticity",
        worst,
        tol,
        "implicit-midpoint transfer matrix preserves the two-form".into(),
    )
}

/// Runs every check; `inject_fault` flips a sign in the inverse dressing.
pub fn cmd_verify(cfg: &RunConfig, seed: u64, inject_fault: bool) -> VerifyReport {
    let mut rows = vec![
        check_brackets(cfg, seed),
        check_canonicity(cfg, seed),
        check_commutators(cfg, inject_fault),
        check_diagonalization(cfg),
        check_orthogonality(cfg),
    ];
    rows.extend(check_dynamics(cfg, seed));
    rows.push(check_symplecticity(cfg));
    VerifyReport { rows }
}

/// The nine mode brackets `{x^i_n, y^j_-n}` for `x, y in {q, p}` and
/// component pairs (1,1), (1,2), (2,2).
pub fn cmd_brackets(params: &DeformationParams, n: i64) -> Result<Vec<String>> {
    let structure = build_symplectic_structure(params)?;
    let modes = ModeSet::new(n.unsigned_abs().max(1) as u32)?;
    let space = PhaseSpace::new(structure, modes);
    let mut lines = vec![format!("theta = {}, theta_bar = {}, n = {n}", params.theta, params.theta_bar)];
    type Label = fn(usize, i64) -> Coordinate;
    let makers: [(&str, Label, Label); 3] = [
        ("qq", Coordinate::q, Coordinate::q),
        ("qp", Coordinate::q, Coordinate::p),
        ("pp", Coordinate::p, Coordinate::p),
    ];
    for (_, x, y) in makers {
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let a = x(i, n);
            let b = y(j, -n);
            lines.push(format!("{{{a}, {b}}} = {}", format_float(space.mode_bracket(a, b)?)));
        }
    }
    Ok(lines)
}
