//! Classical evolution of mode states and field reconstruction.
//!
//! Two independent routes are provided. [`evolve_deformed`] integrates
//! `dz/dt = {z, H0}` with the deformed brackets; its per-mode generator is
//! obtained by feeding basis states through
//! [`PhaseSpace::hamiltonian_vector_field`] rather than written out by hand.
//! [`evolve_dressed`] maps to canonical variables, rotates the chiral ladder
//! amplitudes by their exact phases and maps back.
//!
//! Modes do not couple, so each mode's 4-vector `(q1, q2, p1, p2)` is stepped
//! on its own.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dressing::{dress, undress, DressingCoefficients};
use crate::error::{Error, Result};
use crate::modes::{Coordinate, Kind, ModeIndex, ModeSet, ModeState, REALITY_TOLERANCE};
use crate::output::format_float;
use crate::spectrum::{hamiltonian_coefficients, spectrum_entry, spectrum_table};
use crate::symplectic::{DeformationParams, Gradient, PhaseSpace, SymplecticStructure};

type C = Complex64;
type Cvec = Vector4<C>;

const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4,
    ImplicitMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    DeformedBrackets,
    DressedClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    pub route: Route,
    /// Keep every `sample_stride`-th step; the final time is always kept.
    pub sample_stride: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 10.0,
            integrator: Integrator::Rk4,
            route: Route::DeformedBrackets,
            sample_stride: 1,
        }
    }
}

impl EvolutionConfig {
    /// Checks the step parameters and the resolution condition
    /// `dt < 2 pi / max |w_n^+-|` over the retained modes.
    pub fn validate(&self, params: &DeformationParams, coeffs: &DressingCoefficients, modes: ModeSet) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig("sample_stride must be at least 1".into()));
        }
        let w = spectrum_table(params, coeffs, modes.n_max()).max_frequency();
        if w > 0.0 {
            let limit = 2.0 * PI / w;
            if self.dt >= limit {
                return Err(Error::StepTooLarge { dt: self.dt, limit });
            }
        }
        Ok(())
    }

    /// Number of steps and the uniform step that lands exactly on `t_final`.
    fn grid(&self) -> (usize, f64) {
        let steps = (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize;
        if steps == 0 {
            (0, self.dt)
        } else {
            (steps, self.t_final / steps as f64)
        }
    }

    fn sample_indices(&self) -> impl Iterator<Item = usize> {
        let (steps, _) = self.grid();
        let stride = self.sample_stride;
        (0..=steps).filter(move |k| k % stride == 0 || *k == steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub state: ModeState,
    pub energy_h0: f64,
}

/// `H0 = 1/2 sum_{i,n} (p^i_n p^i_{-n} + n^2 q^i_n q^i_{-n})`, real on
/// states with the reality pairing.
pub fn free_hamiltonian(state: &ModeState) -> f64 {
    let mut h = ZERO;
    for i in 0..state.components() {
        for n in state.modes().modes() {
            h += state.p(i, n) * state.p(i, n.neg()) + n.squared() * state.q(i, n) * state.q(i, n.neg());
        }
    }
    0.5 * h.re
}

/// `dH0/dp^i_m = p^i_{-m}`, `dH0/dq^i_m = m^2 q^i_{-m}`.
pub fn free_hamiltonian_gradient(state: &ModeState) -> Gradient {
    Gradient::from_fn(state.modes(), state.components(), |c| match c.kind {
        Kind::P => state.p(c.component, c.mode.neg()),
        Kind::Q => c.mode.squared() * state.q(c.component, c.mode.neg()),
    })
}

/// The real 4x4 matrix `K_n` with `d/dt (q1, q2, p1, p2)_n = K_n (q1, q2, p1, p2)_n`
/// under the flow of `H0`, read off column by column from the Hamiltonian
/// vector field of basis states.
pub fn mode_generator(structure: &SymplecticStructure, n: ModeIndex) -> Result<Matrix4<f64>> {
    if structure.num_components() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "mode dynamics needs two components, got {}",
            structure.num_components()
        )));
    }
    let modes = ModeSet::new(n.value().unsigned_abs().max(1) as u32)?;
    let space = PhaseSpace::new(structure.clone(), modes);
    let mut k = Matrix4::zeros();
    for col in 0..4 {
        let mut basis = ModeState::zeros(2, modes);
        let kind = if col < 2 { Kind::Q } else { Kind::P };
        basis.set_raw(kind, col % 2, n, C::new(1.0, 0.0));
        let field = space.hamiltonian_vector_field(&free_hamiltonian_gradient(&basis))?;
        for row in 0..4 {
            let kind = if row < 2 { Kind::Q } else { Kind::P };
            let v = field.get(Coordinate {
                kind,
                component: row % 2,
                mode: n,
            });
            k[(row, col)] = v.re;
        }
    }
    Ok(k)
}

/// One-step transfer matrix of the chosen integrator applied to `K_n`.
pub fn transfer_matrix(structure: &SymplecticStructure, n: ModeIndex, dt: f64, integrator: Integrator) -> Result<Matrix4<f64>> {
    let k = mode_generator(structure, n)?;
    let id = Matrix4::identity();
    Ok(match integrator {
        Integrator::Rk4 => {
            let hk = k * dt;
            let hk2 = hk * hk;
            let hk3 = hk2 * hk;
            id + hk + hk2 / 2.0 + hk3 / 6.0 + hk3 * hk / 24.0
        }
        Integrator::ImplicitMidpoint => implicit_midpoint(&k, dt)?,
    })
}

fn implicit_midpoint(k: &Matrix4<f64>, dt: f64) -> Result<Matrix4<f64>> {
    let id = Matrix4::identity();
    let lhs = id - k * (dt / 2.0);
    let inv = lhs
        .try_inverse()
        .ok_or_else(|| Error::InvalidConfig(format!("implicit midpoint is singular at dt = {dt}")))?;
    Ok(inv * (id + k * (dt / 2.0)))
}

fn complexify(m: &Matrix4<f64>) -> Matrix4<C> {
    m.map(|x| C::new(x, 0.0))
}

fn rk4_step(k: &Matrix4<C>, z: &Cvec, h: f64) -> Cvec {
    let k1 = k * z;
    let k2 = k * (z + k1 * C::new(h / 2.0, 0.0));
    let k3 = k * (z + k2 * C::new(h / 2.0, 0.0));
    let k4 = k * (z + k3 * C::new(h, 0.0));
    z + (k1 + k2 * C::new(2.0, 0.0) + k3 * C::new(2.0, 0.0) + k4) * C::new(h / 6.0, 0.0)
}

fn mode_vec(state: &ModeState, n: ModeIndex) -> Cvec {
    Cvec::from_column_slice(&state.mode_vector(n))
}

fn check_input(state: &ModeState) -> Result<()> {
    if state.components() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "evolution acts on two-component states, got {}",
            state.components()
        )));
    }
    state.check_reality(REALITY_TOLERANCE)
}

fn sample(state: ModeState, time: f64) -> TrajectorySample {
    let mut state = state;
    state.time = time;
    let energy_h0 = free_hamiltonian(&state);
    TrajectorySample { time, state, energy_h0 }
}

/// Integrates Hamilton's equations for `H0` with the deformed brackets.
pub fn evolve_deformed(state0: &ModeState, params: &DeformationParams, config: &EvolutionConfig) -> Result<Vec<TrajectorySample>> {
    check_input(state0)?;
    let structure = SymplecticStructure::specialized(params, crate::symplectic::NONDEGENERACY_TOLERANCE)?;
    let coeffs = crate::dressing::solve_dressing(params)?;
    let modes = state0.modes();
    config.validate(params, &coeffs, modes)?;
    let (steps, h) = config.grid();

    let mut stepper = Vec::with_capacity(modes.len());
    for n in modes.modes() {
        let k = mode_generator(&structure, n)?;
        let m = match config.integrator {
            Integrator::Rk4 => complexify(&k),
            Integrator::ImplicitMidpoint => complexify(&implicit_midpoint(&k, h)?),
        };
        stepper.push((n, m, mode_vec(state0, n)));
    }

    let mut out = Vec::new();
    let mut state = state0.clone();
    let stride = config.sample_stride;
    for step in 0..=steps {
        if step % stride == 0 || step == steps {
            for (n, _, z) in &stepper {
                state.set_mode_vector(*n, z.as_slice());
            }
            out.push(sample(state.clone(), step as f64 * h));
        }
        if step == steps {
            break;
        }
        for (_, m, z) in stepper.iter_mut() {
            *z = match config.integrator {
                Integrator::Rk4 => rk4_step(m, z, h),
                Integrator::ImplicitMidpoint => *m * *z,
            };
        }
    }
    Ok(out)
}

/// `Lambda_n^+-= 1/sqrt(Delta_n) +- (theta / 2a^2) sqrt(Delta_n)`.
pub fn lambda_pm(coeffs: &DressingCoefficients, delta: f64) -> (f64, f64) {
    let m = coeffs.theta / (2.0 * coeffs.a * coeffs.a) * delta.sqrt();
    let r = 1.0 / delta.sqrt();
    (r + m, r - m)
}

/// Chiral ladder amplitudes `(A^1_n, A^2_n)` of a canonical state.
pub fn chiral_amplitudes(canonical: &ModeState, n: ModeIndex, delta: f64) -> (C, C) {
    let root = (delta / 2.0).sqrt();
    let a1 = root * (canonical.q(0, n) + I * canonical.p(0, n) / delta);
    let a2 = root * (canonical.q(1, n) + I * canonical.p(1, n) / delta);
    ((a1 - I * a2) * FRAC_1_SQRT_2, (a1 + I * a2) * FRAC_1_SQRT_2)
}

/// Per-mode data of the closed-form route.
enum ModePlan {
    Oscillating {
        n: ModeIndex,
        delta: f64,
        omega_minus: f64,
        omega_plus: f64,
        /// `A^1_n, A^2_n, A^1_{-n}, A^2_{-n}` at `t = 0`.
        amps: [C; 4],
    },
    Free {
        n: ModeIndex,
        rate: f64,
        q0: [C; 2],
        p0: [C; 2],
    },
}

fn dressed_state_at(plan: &[ModePlan], coeffs: &DressingCoefficients, template: &ModeState, t: f64) -> Result<ModeState> {
    let pre = coeffs.a / coeffs.params().scale().sqrt();
    let mut canonical = template.clone();
    let mut deformed_q: Vec<(ModeIndex, [C; 2])> = Vec::new();
    for p in plan {
        match *p {
            ModePlan::Oscillating {
                n,
                delta,
                omega_minus,
                omega_plus,
                amps,
            } => {
                let r1 = C::from_polar(1.0, -omega_minus * t);
                let r2 = C::from_polar(1.0, -omega_plus * t);
                let (b1, b2) = (amps[0] * r1, amps[1] * r2);
                let (c1, c2) = ((amps[2] * r1).conj(), (amps[3] * r2).conj());
                let (lp, lm) = lambda_pm(coeffs, delta);
                let q1 = pre * 0.5 * (lp * (b1 + c1) + lm * (b2 + c2));
                let q2 = pre * 0.5 * I * (lp * (b1 - c1) - lm * (b2 - c2));
                deformed_q.push((n, [q1, q2]));

                // Canonical (Q, P) from the same amplitudes; undressed below for p.
                let a1 = (b1 + b2) * FRAC_1_SQRT_2;
                let a2 = I * (b1 - b2) * FRAC_1_SQRT_2;
                let a1m = (c1 + c2) * FRAC_1_SQRT_2;
                let a2m = -I * (c1 - c2) * FRAC_1_SQRT_2;
                let qn = 1.0 / (2.0 * delta).sqrt();
                let pn = -I * (delta / 2.0).sqrt();
                canonical.set_raw(Kind::Q, 0, n, qn * (a1 + a1m));
                canonical.set_raw(Kind::Q, 1, n, qn * (a2 + a2m));
                canonical.set_raw(Kind::P, 0, n, pn * (a1 - a1m));
                canonical.set_raw(Kind::P, 1, n, pn * (a2 - a2m));
            }
            ModePlan::Free { n, rate, q0, p0 } => {
                for i in 0..2 {
                    canonical.set_raw(Kind::Q, i, n, q0[i] + rate * p0[i] * t);
                    canonical.set_raw(Kind::P, i, n, p0[i]);
                }
            }
        }
    }
    let mut state = undress(&canonical, coeffs)?;
    for (n, q) in deformed_q {
        state.set_raw(Kind::Q, 0, n, q[0]);
        state.set_raw(Kind::Q, 1, n, q[1]);
    }
    Ok(state)
}

/// Closed-form evolution through the dressed Hamiltonian: exact phases on
/// the chiral ladder amplitudes, `q` from the `Lambda^+-` normal-mode form
/// and `p` through the inverse dressing.
pub fn evolve_dressed(state0: &ModeState, params: &DeformationParams, config: &EvolutionConfig) -> Result<Vec<TrajectorySample>> {
    check_input(state0)?;
    let coeffs = crate::dressing::solve_dressing(params)?;
    let modes = state0.modes();
    config.validate(params, &coeffs, modes)?;
    let canonical0 = dress(state0, &coeffs)?;

    let mut plan = Vec::with_capacity(modes.len());
    for n in modes.modes() {
        let e = spectrum_entry(params, &coeffs, n);
        if e.free {
            let c = hamiltonian_coefficients(params, &coeffs, n);
            plan.push(ModePlan::Free {
                n,
                rate: 2.0 * c.c_pp,
                q0: [canonical0.q(0, n), canonical0.q(1, n)],
                p0: [canonical0.p(0, n), canonical0.p(1, n)],
            });
        } else {
            let (x1, x2) = chiral_amplitudes(&canonical0, n, e.delta);
            let (y1, y2) = chiral_amplitudes(&canonical0, n.neg(), e.delta);
            plan.push(ModePlan::Oscillating {
                n,
                delta: e.delta,
                omega_minus: e.omega_minus,
                omega_plus: e.omega_plus,
                amps: [x1, x2, y1, y2],
            });
        }
    }

    let (_, h) = config.grid();
    config
        .sample_indices()
        .map(|k| {
            let t = k as f64 * h;
            dressed_state_at(&plan, &coeffs, state0, t).map(|s| sample(s, t))
        })
        .collect()
}

/// Dispatches on `config.route`.
pub fn evolve(state0: &ModeState, params: &DeformationParams, config: &EvolutionConfig) -> Result<Vec<TrajectorySample>> {
    match config.route {
        Route::DeformedBrackets => evolve_deformed(state0, params, config),
        Route::DressedClosedForm => evolve_dressed(state0, params, config),
    }
}

/// Max state distance between two trajectories sampled at the same times.
pub fn max_trajectory_deviation(a: &[TrajectorySample], b: &[TrajectorySample]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("trajectories have {} and {} samples", a.len(), b.len())));
    }
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        if (x.time - y.time).abs() > 1e-12 * (1.0 + x.time.abs()) {
            return Err(Error::ShapeMismatch(format!("sample times {} and {} differ", x.time, y.time)));
        }
        worst = worst.max(x.state.distance(&y.state));
    }
    Ok(worst)
}

/// Field values at one point of the circle. `max_imag` is the largest
/// imaginary part discarded from the four sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: f64,
    pub phi: [f64; 2],
    pub pi: [f64; 2],
    pub max_imag: f64,
}

/// Circle length used by the mode expansion.
pub const CIRCLE_LENGTH: f64 = 2.0 * PI;

/// `Phi^i(x) = (2 pi)^{-1/2} sum_n q^i_n e^{-inx}`, likewise `Pi^i` from `p`.
pub fn reconstruct_fields(state: &ModeState, x_grid: &[f64]) -> Result<Vec<FieldSample>> {
    state.check_reality(REALITY_TOLERANCE)?;
    if state.components() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "field reconstruction expects two components, got {}",
            state.components()
        )));
    }
    let norm = 1.0 / CIRCLE_LENGTH.sqrt();
    Ok(x_grid
        .iter()
        .map(|&x| {
            let mut sums = [ZERO; 4];
            for n in state.modes().modes() {
                let w = C::from_polar(norm, -(n.value() as f64) * x);
                sums[0] += state.q(0, n) * w;
                sums[1] += state.q(1, n) * w;
                sums[2] += state.p(0, n) * w;
                sums[3] += state.p(1, n) * w;
            }
            FieldSample {
                x,
                phi: [sums[0].re, sums[1].re],
                pi: [sums[2].re, sums[3].re],
                max_imag: sums.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
            }
        })
        .collect())
}

/// `m` equally spaced points `2 pi k / m`.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    (0..m).map(|k| CIRCLE_LENGTH * k as f64 / m as f64).collect()
}

/// CSV with `t`, real and imaginary parts of every stored amplitude and `energy_H0`.
pub fn trajectory_csv(samples: &[TrajectorySample]) -> String {
    let mut out = String::from("t");
    let Some(first) = samples.first() else {
        out.push_str(",energy_H0\n");
        return out;
    };
    let coords: Vec<Coordinate> = first.state.coordinates().collect();
    for c in &coords {
        let _ = write!(out, ",re_{c},im_{c}");
    }
    out.push_str(",energy_H0\n");
    for s in samples {
        out.push_str(&format_float(s.time));
        for c in &coords {
            let z = s.state.get(*c).expect("same mode set throughout");
            let _ = write!(out, ",{},{}", format_float(z.re), format_float(z.im));
        }
        let _ = writeln!(out, ",{}", format_float(s.energy_h0));
    }
    out
}

pub fn fields_csv(samples: &[FieldSample]) -> String {
    let mut out = String::from("x,phi1,phi2,pi1,pi2\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(s.x),
            format_float(s.phi[0]),
            format_float(s.phi[1]),
            format_float(s.pi[0]),
            format_float(s.pi[1]),
        );
    }
    out
}
