//! Dressed Hamiltonian, its diagonal spectrum and the degeneracy lifting.
//!
//! Substituting the inverse dressing into `H0` gives, per mode,
//!
//! ```text
//!   H = K sum_{i,n} [ c_PP P^i_n P^i_{-n} / K + c_QQ Q^i_n Q^i_{-n} / K
//!                     + c_PQ / K sum_j eps_ij P^i_{-n} Q^j_n ]
//!   K = a^2 / (2 (1 + theta theta_bar))
//! ```
//!
//! The ladders `a^i_n` with `Delta_n = sqrt(c_QQ / c_PP)` and the chiral
//! combinations `A^1`, `A^2` diagonalize it:
//! `H = sum_n [w_n + (w_n - wbar_n) A^1+ A^1 + (w_n + wbar_n) A^2+ A^2]` with
//!
//! ```text
//!   w_n    = sqrt((tb^2 + 4a^4 n^2)(4a^4 + t^2 n^2)) / (4 a^2 (1 + t tb))
//!   wbar_n = (tb - t n^2) / (2 (1 + t tb))
//! ```
//!
//! Each `n > 0` row of a table stands for the pair `(n, -n)`; everything
//! depends on `n` only through `n^2`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dressing::DressingCoefficients;
use crate::error::{Error, Result};
use crate::modes::{Coordinate, ModeIndex, ModeSet};
use crate::operator_algebra::{QuadraticOperator, SINGULAR_TOLERANCE};
use crate::output::format_float;
use crate::symplectic::{eps, DeformationParams};

/// Splittings below this count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianCoefficients {
    pub n: ModeIndex,
    pub c_pp: f64,
    pub c_qq: f64,
    pub c_pq: f64,
}

pub fn hamiltonian_coefficients(
    params: &DeformationParams,
    coeffs: &DressingCoefficients,
    n: ModeIndex,
) -> HamiltonianCoefficients {
    let (th, tb) = (params.theta, params.theta_bar);
    let a2 = coeffs.a * coeffs.a;
    let a4 = a2 * a2;
    let n2 = n.squared();
    let k = a2 / (2.0 * params.scale());
    HamiltonianCoefficients {
        n,
        c_pp: k * (1.0 + th * th * n2 / (4.0 * a4)),
        c_qq: k * (tb * tb / (4.0 * a4) + n2),
        c_pq: k * (tb - th * n2) / a2,
    }
}

/// The dressed Hamiltonian as a quadratic form in the canonical generators.
pub fn hamiltonian_operator(
    params: &DeformationParams,
    coeffs: &DressingCoefficients,
    modes: ModeSet,
) -> QuadraticOperator {
    let mut h = QuadraticOperator::new();
    for n in modes.modes() {
        let c = hamiltonian_coefficients(params, coeffs, n);
        let m = n.value();
        for i in 0..2 {
            h.add_symmetrized(Coordinate::p(i, m), Coordinate::p(i, -m), Complex64::new(c.c_pp, 0.0));
            h.add_symmetrized(Coordinate::q(i, m), Coordinate::q(i, -m), Complex64::new(c.c_qq, 0.0));
            for j in 0..2 {
                let e = eps(i, j);
                if e != 0.0 {
                    h.add_symmetrized(
                        Coordinate::p(i, -m),
                        Coordinate::q(j, m),
                        Complex64::new(c.c_pq * e, 0.0),
                    );
                }
            }
        }
    }
    h
}

/// `Delta_n = sqrt((tb^2 + 4a^4 n^2) / (4a^4 + t^2 n^2))`.
pub fn delta(params: &DeformationParams, coeffs: &DressingCoefficients, n: ModeIndex) -> f64 {
    let a4 = coeffs.a.powi(4);
    let n2 = n.squared();
    let (th, tb) = (params.theta, params.theta_bar);
    ((tb * tb + 4.0 * a4 * n2) / (4.0 * a4 + th * th * n2)).sqrt()
}

pub fn omega(params: &DeformationParams, coeffs: &DressingCoefficients, n: ModeIndex) -> f64 {
    let a2 = coeffs.a * coeffs.a;
    let a4 = a2 * a2;
    let n2 = n.squared();
    let (th, tb) = (params.theta, params.theta_bar);
    ((tb * tb + 4.0 * a4 * n2) * (4.0 * a4 + th * th * n2)).sqrt() / (4.0 * a2 * params.scale())
}

pub fn omega_bar(params: &DeformationParams, n: ModeIndex) -> f64 {
    (params.theta_bar - params.theta * n.squared()) / (2.0 * params.scale())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub n: ModeIndex,
    pub delta: f64,
    pub omega: f64,
    pub omega_bar: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// Vacuum contribution of mode `n`.
    pub ground: f64,
    /// `Delta_n` vanishes: a free (non-oscillating) mode, excluded from the ladders.
    pub free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub theta: f64,
    pub theta_bar: f64,
    pub n_max: u32,
    pub entries: Vec<SpectrumEntry>,
}

pub fn spectrum_entry(params: &DeformationParams, coeffs: &DressingCoefficients, n: ModeIndex) -> SpectrumEntry {
    let d = delta(params, coeffs, n);
    let w = omega(params, coeffs, n);
    let wb = omega_bar(params, n);
    SpectrumEntry {
        n,
        delta: d,
        omega: w,
        omega_bar: wb,
        omega_plus: w + wb,
        omega_minus: w - wb,
        ground: w,
        free: d.is_nan() || d <= SINGULAR_TOLERANCE,
    }
}

/// Entries for `n = 0..=n_max`.
pub fn spectrum_table(params: &DeformationParams, coeffs: &DressingCoefficients, n_max: u32) -> SpectrumTable {
    let entries = (0..=i64::from(n_max))
        .map(|n| spectrum_entry(params, coeffs, ModeIndex(n)))
        .collect();
    SpectrumTable {
        theta: params.theta,
        theta_bar: params.theta_bar,
        n_max,
        entries,
    }
}

impl SpectrumTable {
    pub fn entry(&self, n: ModeIndex) -> Option<&SpectrumEntry> {
        let k = n.value().unsigned_abs() as usize;
        self.entries.get(k)
    }

    /// Largest branch frequency over the table.
    pub fn max_frequency(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.omega_plus.abs().max(e.omega_minus.abs()))
            .fold(0.0, f64::max)
    }

    /// Sum of `w_n` over `n = -n_max..=n_max`.
    pub fn vacuum_energy(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| if e.n.value() == 0 { e.ground } else { 2.0 * e.ground })
            .sum()
    }

    /// CSV with columns `n,delta,omega,omega_bar,omega_minus,omega_plus,ground`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,delta,omega,omega_bar,omega_minus,omega_plus,ground\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.n,
                format_float(e.delta),
                format_float(e.omega),
                format_float(e.omega_bar),
                format_float(e.omega_minus),
                format_float(e.omega_plus),
                format_float(e.ground),
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub n: ModeIndex,
    /// The gap `|w_n^+ - w_n^-|`, evaluated as `2 |wbar_n|`.
    pub splitting: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub tolerance: f64,
    pub splittings: Vec<Splitting>,
    pub degenerate: Vec<ModeIndex>,
}

pub fn degeneracy_report(table: &SpectrumTable) -> DegeneracyReport {
    degeneracy_report_with(table, DEGENERACY_TOLERANCE)
}

pub fn degeneracy_report_with(table: &SpectrumTable, tolerance: f64) -> DegeneracyReport {
    let splittings: Vec<_> = table
        .entries
        .iter()
        .map(|e| Splitting {
            n: e.n,
            splitting: 2.0 * e.omega_bar.abs(),
        })
        .collect();
    let degenerate = splittings
        .iter()
        .filter(|s| s.splitting < tolerance)
        .map(|s| s.n)
        .collect();
    DegeneracyReport {
        tolerance,
        splittings,
        degenerate,
    }
}

/// Branch occupations `(N^1_n, N^2_n)` keyed by signed mode.
pub type Occupations = BTreeMap<ModeIndex, [i64; 2]>;

/// `sum_n w_n + (w_n - wbar_n) N^1_n + (w_n + wbar_n) N^2_n` over the
/// retained modes `-n_max..=n_max`.
pub fn energy(occupations: &Occupations, table: &SpectrumTable) -> Result<f64> {
    let modes = ModeSet::new(table.n_max)?;
    for (n, occ) in occupations {
        if !modes.contains(*n) {
            return Err(Error::IndexMismatch(format!("occupation for mode {n} outside n_max {}", table.n_max)));
        }
        for (branch, &v) in occ.iter().enumerate() {
            if v < 0 {
                return Err(Error::NegativeOccupation {
                    n: *n,
                    branch: branch as u8 + 1,
                    value: v,
                });
            }
        }
    }
    let mut total = table.vacuum_energy();
    for (n, [n1, n2]) in occupations {
        let e = table.entry(*n).expect("mode checked above");
        total += e.omega_minus * *n1 as f64 + e.omega_plus * *n2 as f64;
    }
    Ok(total)
}
