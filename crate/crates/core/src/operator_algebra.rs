//! Exact commutator algebra in the span of the canonical generators.
//!
//! Every operator used here is a linear combination of `Q^i_n`, `P^i_n` plus a
//! c-number, so commutators are scalars fixed by
//! `[Q^i_n, P^j_m] = i delta_ij delta_{n+m,0}`. No Fock space is truncated,
//! so the identities are checked without truncation error.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dressing::DressingCoefficients;
use crate::error::{Error, Result};
use crate::modes::{Coordinate, Kind, ModeIndex, ModeSet};
use crate::spectrum;
use crate::symplectic::{eps, DeformationParams, FieldKind, SymplecticStructure, NONDEGENERACY_TOLERANCE};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Residual allowed by [`verify_deformed_commutators`].
pub const COMMUTATOR_TOLERANCE: f64 = 1e-13;

/// Residual allowed on ladder normalization.
pub const LADDER_TOLERANCE: f64 = 1e-12;

/// `Delta_n` at or below this makes the ladder construction singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// `[g_a, g_b]` for two canonical generators.
pub fn canonical_commutator(a: Coordinate, b: Coordinate) -> Complex64 {
    if a.component != b.component || a.mode.value() + b.mode.value() != 0 {
        return ZERO;
    }
    match (a.kind, b.kind) {
        (Kind::Q, Kind::P) => I,
        (Kind::P, Kind::Q) => -I,
        _ => ZERO,
    }
}

/// A c-number plus a finite combination of canonical generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorVector {
    modes: ModeSet,
    coefficients: BTreeMap<Coordinate, Complex64>,
    pub constant_term: Complex64,
}

impl GeneratorVector {
    pub fn zero(modes: ModeSet) -> Self {
        Self {
            modes,
            coefficients: BTreeMap::new(),
            constant_term: ZERO,
        }
    }

    /// A single canonical generator `Q^i_n` or `P^i_n`.
    pub fn generator(modes: ModeSet, g: Coordinate) -> Self {
        let mut v = Self::zero(modes);
        v.add_term(g, Complex64::new(1.0, 0.0));
        v
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn add_term(&mut self, g: Coordinate, c: Complex64) {
        let slot = self.coefficients.entry(g).or_insert(ZERO);
        *slot += c;
    }

    pub fn coefficient(&self, g: Coordinate) -> Complex64 {
        self.coefficients.get(&g).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Coordinate, Complex64)> + '_ {
        self.coefficients.iter().map(|(g, c)| (*g, *c))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            modes: self.modes,
            coefficients: self.coefficients.iter().map(|(g, c)| (*g, c * s)).collect(),
            constant_term: self.constant_term * s,
        }
    }

    /// Hermitian conjugate under `Q^i_n^+ = Q^i_{-n}`, `P^i_n^+ = P^i_{-n}`.
    pub fn adjoint(&self) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .map(|(g, c)| {
                (
                    Coordinate {
                        mode: g.mode.neg(),
                        ..*g
                    },
                    c.conj(),
                )
            })
            .collect();
        Self {
            modes: self.modes,
            coefficients,
            constant_term: self.constant_term.conj(),
        }
    }

    /// Largest coefficient distance to `other`, constant term included.
    pub fn distance(&self, other: &Self) -> f64 {
        let diff = self - other;
        diff.coefficients
            .values()
            .map(|c| c.norm())
            .fold(diff.constant_term.norm(), f64::max)
    }

    fn same_modes(&self, other: &Self) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::ModeSetMismatch {
                left: self.modes.n_max(),
                right: other.modes.n_max(),
            });
        }
        Ok(())
    }

    /// `[self, g]` for a single generator.
    fn commutator_with_generator(&self, g: Coordinate) -> Complex64 {
        let partner = Coordinate {
            kind: match g.kind {
                Kind::Q => Kind::P,
                Kind::P => Kind::Q,
            },
            mode: g.mode.neg(),
            ..g
        };
        self.coefficient(partner) * canonical_commutator(partner, g)
    }
}

impl Add for &GeneratorVector {
    type Output = GeneratorVector;
    fn add(self, rhs: &GeneratorVector) -> GeneratorVector {
        let mut out = self.clone();
        for (g, c) in rhs.terms() {
            out.add_term(g, c);
        }
        out.constant_term += rhs.constant_term;
        out
    }
}

impl Sub for &GeneratorVector {
    type Output = GeneratorVector;
    fn sub(self, rhs: &GeneratorVector) -> GeneratorVector {
        self + &(-rhs)
    }
}

impl Neg for &GeneratorVector {
    type Output = GeneratorVector;
    fn neg(self) -> GeneratorVector {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &GeneratorVector {
    type Output = GeneratorVector;
    fn mul(self, rhs: Complex64) -> GeneratorVector {
        self.scale(rhs)
    }
}

impl Mul<f64> for &GeneratorVector {
    type Output = GeneratorVector;
    fn mul(self, rhs: f64) -> GeneratorVector {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// `[x, y] = sum_ab x_a y_b [g_a, g_b]`.
pub fn commutator(x: &GeneratorVector, y: &GeneratorVector) -> Result<Complex64> {
    x.same_modes(y)?;
    Ok(y.terms().map(|(g, c)| c * x.commutator_with_generator(g)).sum())
}

/// A quadratic form in the generators, stored as symmetrized products
/// `(g_a g_b + g_b g_a)/2` on unordered pairs. C-number parts are dropped;
/// they never enter a commutator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadraticOperator {
    terms: BTreeMap<(Coordinate, Coordinate), Complex64>,
}

impl QuadraticOperator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_symmetrized(&mut self, a: Coordinate, b: Coordinate, c: Complex64) {
        let key = if a <= b { (a, b) } else { (b, a) };
        *self.terms.entry(key).or_insert(ZERO) += c;
    }

    /// Adds `x y` (symmetrized).
    pub fn add_product(&mut self, x: &GeneratorVector, y: &GeneratorVector, c: Complex64) {
        for (ga, ca) in x.terms() {
            for (gb, cb) in y.terms() {
                self.add_symmetrized(ga, gb, c * ca * cb);
            }
        }
    }

    /// Coefficient of the symmetrized product of `a` and `b`.
    pub fn coefficient(&self, a: Coordinate, b: Coordinate) -> Complex64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.terms.get(&key).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((Coordinate, Coordinate), Complex64)> + '_ {
        self.terms.iter().map(|(k, c)| (*k, *c))
    }

    /// `[x, H]`, again a linear combination of generators.
    pub fn commutator_from_left(&self, x: &GeneratorVector) -> GeneratorVector {
        let mut out = GeneratorVector::zero(x.modes());
        for ((ga, gb), c) in self.terms() {
            let ca = x.commutator_with_generator(ga);
            let cb = x.commutator_with_generator(gb);
            if ca != ZERO {
                out.add_term(gb, c * ca);
            }
            if cb != ZERO {
                out.add_term(ga, c * cb);
            }
        }
        out
    }
}

/// The deformed operators `q^i_n`, `p^i_n` written in the canonical span.
/// `flip_sign` reverses the mixing sign in the `q` relation; it exists so the
/// verification suite can prove it detects a wrong inverse.
pub fn deformed_generators(
    coeffs: &DressingCoefficients,
    modes: ModeSet,
    component: usize,
    n: ModeIndex,
    flip_sign: bool,
) -> (GeneratorVector, GeneratorVector) {
    let a = coeffs.a;
    let pre = a / coeffs.params().scale().sqrt();
    let sign = if flip_sign { -1.0 } else { 1.0 };
    let qmix = sign * coeffs.theta / (2.0 * a * a);
    let pmix = coeffs.theta_bar / (2.0 * a * a);
    let mut q = GeneratorVector::generator(modes, Coordinate::q(component, n.value()));
    let mut p = GeneratorVector::generator(modes, Coordinate::p(component, n.value()));
    for k in 0..2 {
        let e = eps(component, k);
        if e != 0.0 {
            q.add_term(Coordinate::p(k, n.value()), Complex64::new(qmix * e, 0.0));
            p.add_term(Coordinate::q(k, n.value()), Complex64::new(pmix * e, 0.0));
        }
    }
    (q.scale(Complex64::new(pre, 0.0)), p.scale(Complex64::new(pre, 0.0)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Test hook: flip a sign in the inverse dressing.
    pub inject_sign_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub theta: f64,
    pub theta_bar: f64,
    pub pairs_checked: usize,
    /// Max distance to the closed-form deformed commutators.
    pub max_residual: f64,
    /// Max distance between each commutator and `i` times the classical bracket.
    pub max_quantization_residual: f64,
    pub worst_pair: String,
}

/// Closed-form `[x^i_n, y^j_m]` of the deformed algebra.
fn expected_commutator(params: &DeformationParams, a: Coordinate, b: Coordinate) -> Complex64 {
    if a.mode.value() + b.mode.value() != 0 {
        return ZERO;
    }
    let s = params.scale();
    let (i, j) = (a.component, b.component);
    let delta = if i == j { 1.0 } else { 0.0 };
    let v = match (a.kind, b.kind) {
        (Kind::Q, Kind::Q) => -params.theta / s * eps(i, j),
        (Kind::P, Kind::P) => params.theta_bar / s * eps(i, j),
        (Kind::Q, Kind::P) => delta / s,
        (Kind::P, Kind::Q) => -delta / s,
    };
    I * v
}

/// Builds `q`, `p` through the inverse dressing and checks every pairwise
/// commutator on `modes` against the deformed algebra and against `i` times
/// the classical brackets.
pub fn verify_deformed_commutators(
    params: &DeformationParams,
    coeffs: &DressingCoefficients,
    modes: ModeSet,
    options: VerifyOptions,
) -> Result<CommutatorReport> {
    let structure = SymplecticStructure::specialized(params, NONDEGENERACY_TOLERANCE)?;
    let mut ops = Vec::new();
    for n in modes.modes() {
        for i in 0..2 {
            let (q, p) = deformed_generators(coeffs, modes, i, n, options.inject_sign_fault);
            ops.push((Coordinate::q(i, n.value()), q));
            ops.push((Coordinate::p(i, n.value()), p));
        }
    }
    let mut report = CommutatorReport {
        theta: params.theta,
        theta_bar: params.theta_bar,
        pairs_checked: 0,
        max_residual: 0.0,
        max_quantization_residual: 0.0,
        worst_pair: String::new(),
    };
    for (la, x) in &ops {
        for (lb, y) in &ops {
            let got = commutator(x, y)?;
            let residual = (got - expected_commutator(params, *la, *lb)).norm();
            let classical = if la.mode.value() + lb.mode.value() == 0 {
                structure.bracket_entry(la.kind, la.component, lb.kind, lb.component)
            } else {
                0.0
            };
            let quant = (got - I * classical).norm();
            report.pairs_checked += 1;
            if residual > report.max_residual {
                report.max_residual = residual;
                report.worst_pair = format!("[{la}, {lb}]");
            }
            report.max_quantization_residual = report.max_quantization_residual.max(quant);
        }
    }
    let worst = report.max_residual.max(report.max_quantization_residual);
    if worst > COMMUTATOR_TOLERANCE {
        return Err(Error::VerificationFailure {
            pair: report.worst_pair.clone(),
            residual: worst,
            tolerance: COMMUTATOR_TOLERANCE,
        });
    }
    Ok(report)
}

/// Coefficient of `delta(x - x')` in the equal-time field commutator.
///
/// With `Phi^i(x) = l^{-1/2} sum_n q^i_n e^{-inx}`, the commutator is
/// `l^-1 sum_n [q^i_n, q^j_{-n}] e^{-in(x-x')}`; it is a multiple of the
/// delta function exactly when that mode commutator is the same for every
/// `n`, and the common value is the coefficient.
pub fn field_commutator(
    coeffs: &DressingCoefficients,
    modes: ModeSet,
    a: FieldKind,
    i: usize,
    b: FieldKind,
    j: usize,
) -> Result<Complex64> {
    if i > 1 || j > 1 {
        return Err(Error::IndexMismatch(format!("field components ({i}, {j}) outside 0..2")));
    }
    let pick = |kind: FieldKind, (q, p): (GeneratorVector, GeneratorVector)| match kind {
        FieldKind::Phi => q,
        FieldKind::Pi => p,
    };
    let mut common: Option<Complex64> = None;
    for n in modes.modes() {
        let x = pick(a, deformed_generators(coeffs, modes, i, n, false));
        let y = pick(b, deformed_generators(coeffs, modes, j, n.neg(), false));
        let c = commutator(&x, &y)?;
        match common {
            None => common = Some(c),
            Some(prev) if (prev - c).norm() > COMMUTATOR_TOLERANCE => {
                return Err(Error::VerificationFailure {
                    pair: format!("field commutator Fourier weight at n = {n}"),
                    residual: (prev - c).norm(),
                    tolerance: COMMUTATOR_TOLERANCE,
                });
            }
            Some(_) => {}
        }
    }
    Ok(common.unwrap_or(ZERO))
}

/// Oscillator ladders of one mode: `a^i_n`, their adjoints and the
/// diagonalizing combinations `A^1_n = (a^1 - i a^2)/sqrt 2`,
/// `A^2_n = (a^1 + i a^2)/sqrt 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub n: ModeIndex,
    pub delta: f64,
    pub a: [GeneratorVector; 2],
    pub a_dag: [GeneratorVector; 2],
    pub big_a: [GeneratorVector; 2],
    pub big_a_dag: [GeneratorVector; 2],
}

pub fn build_ladder(
    params: &DeformationParams,
    coeffs: &DressingCoefficients,
    modes: ModeSet,
    n: ModeIndex,
) -> Result<Ladder> {
    if !modes.contains(n) {
        return Err(Error::IndexMismatch(format!("mode {n} outside n_max {}", modes.n_max())));
    }
    let delta = spectrum::delta(params, coeffs, n);
    if delta.is_nan() || delta <= SINGULAR_TOLERANCE {
        return Err(Error::SingularMode { n, delta });
    }
    let root = (delta / 2.0).sqrt();
    let make = |i: usize| {
        let mut v = GeneratorVector::zero(modes);
        v.add_term(Coordinate::q(i, n.value()), Complex64::new(root, 0.0));
        v.add_term(Coordinate::p(i, n.value()), Complex64::new(0.0, root / delta));
        v
    };
    let a = [make(0), make(1)];
    let a_dag = [a[0].adjoint(), a[1].adjoint()];
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let big_a = [
        &(&a[0] - &(&a[1] * I)) * inv_sqrt2,
        &(&a[0] + &(&a[1] * I)) * inv_sqrt2,
    ];
    let big_a_dag = [big_a[0].adjoint(), big_a[1].adjoint()];

    for i in 0..2 {
        for j in 0..2 {
            let expect = if i == j { 1.0 } else { 0.0 };
            for (label, x, y) in [
                ("a", &a[i], &a_dag[j]),
                ("A", &big_a[i], &big_a_dag[j]),
            ] {
                let got = commutator(x, y)?;
                let r = (got - expect).norm();
                if r > LADDER_TOLERANCE {
                    return Err(Error::VerificationFailure {
                        pair: format!("[{label}{}_{n}, {label}{}_{n}^+]", i + 1, j + 1),
                        residual: r,
                        tolerance: LADDER_TOLERANCE,
                    });
                }
            }
            let r = commutator(&a[i], &a[j])?.norm();
            if r > LADDER_TOLERANCE {
                return Err(Error::VerificationFailure {
                    pair: format!("[a{}_{n}, a{}_{n}]", i + 1, j + 1),
                    residual: r,
                    tolerance: LADDER_TOLERANCE,
                });
            }
        }
    }
    Ok(Ladder {
        n,
        delta,
        a,
        a_dag,
        big_a,
        big_a_dag,
    })
}
