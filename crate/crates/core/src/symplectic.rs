//! Deformed symplectic two-form and the Poisson brackets it induces.
//!
//! Per mode the two-form is the `2N x 2N` block matrix
//!
//! ```text
//!         | -B   I |
//!   Omega = |        |      ordering (Phi^1..Phi^N, Pi^1..Pi^N)
//!         | -I   E |
//! ```
//!
//! and the coordinate brackets are the entries of the Poisson tensor
//! `{xi^I, xi^J} = (Omega^-1)^JI = -(Omega^-1)^IJ`. In closed form
//!
//! ```text
//!   {q^i_n, q^j_m} = -(w1^-1 E)_ij   delta_{n+m,0}
//!   {p^i_n, p^j_m} = +(w2^-1 B)_ij   delta_{n+m,0}
//!   {q^i_n, p^j_m} =  (w1^-1)_ij     delta_{n+m,0}
//! ```
//!
//! with `w1 = I - E B` and `w2 = I - B E = w1^T`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{Coordinate, Kind, ModeSet};

/// Tolerance on `|det(I - E B)|` below which the two-form is treated as degenerate.
pub const NONDEGENERACY_TOLERANCE: f64 = 1e-10;

/// The scalar deformation `E = theta * eps`, `B = theta_bar * eps` of a
/// two-component field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub theta: f64,
    pub theta_bar: f64,
}

impl DeformationParams {
    pub fn new(theta: f64, theta_bar: f64) -> Self {
        Self { theta, theta_bar }
    }

    pub fn undeformed() -> Self {
        Self::new(0.0, 0.0)
    }

    /// `theta * theta_bar`.
    pub fn product(&self) -> f64 {
        self.theta * self.theta_bar
    }

    /// `1 + theta * theta_bar`, the scalar value of `w1 = w2`.
    pub fn scale(&self) -> f64 {
        1.0 + self.product()
    }

    pub fn is_undeformed(&self) -> bool {
        self.theta == 0.0 && self.theta_bar == 0.0
    }

    pub fn tensors(&self) -> DeformationTensors {
        DeformationTensors {
            e: epsilon() * self.theta,
            b: epsilon() * self.theta_bar,
        }
    }
}

/// The 2x2 antisymmetric tensor with `eps_12 = -eps_21 = 1`.
pub fn epsilon() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// `eps_ij` for zero-based component indices in `{0, 1}`.
pub fn eps(i: usize, j: usize) -> f64 {
    match (i, j) {
        (0, 1) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    }
}

/// General antisymmetric deformation tensors for `N` components.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationTensors {
    e: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl DeformationTensors {
    pub fn new(e: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = e.nrows();
        if n == 0 || e.shape() != (n, n) || b.shape() != (n, n) {
            return Err(Error::TensorShape {
                e: e.shape(),
                b: b.shape(),
                expected: n.max(1),
            });
        }
        for (name, m) in [("E", &e), ("B", &b)] {
            let defect = (m + m.transpose()).amax();
            if defect != 0.0 {
                return Err(Error::NotAntisymmetric { name, defect });
            }
        }
        Ok(Self { e, b })
    }

    pub fn num_components(&self) -> usize {
        self.e.nrows()
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
}

/// The per-mode two-form, its inverse, and the auxiliary matrices `w1`, `w2`.
#[derive(Debug, Clone)]
pub struct SymplecticStructure {
    tensors: DeformationTensors,
    scalars: Option<DeformationParams>,
    omega: DMatrix<f64>,
    omega_inv: DMatrix<f64>,
    omega1: DMatrix<f64>,
    omega2: DMatrix<f64>,
    omega1_inv: DMatrix<f64>,
    omega2_inv: DMatrix<f64>,
}

/// Builds the structure for the scalar `(theta, theta_bar)` deformation with
/// the default nondegeneracy tolerance.
pub fn build_symplectic_structure(params: &DeformationParams) -> Result<SymplecticStructure> {
    SymplecticStructure::specialized(params, NONDEGENERACY_TOLERANCE)
}

impl SymplecticStructure {
    pub fn specialized(params: &DeformationParams, tolerance: f64) -> Result<Self> {
        let mut s = Self::assemble(params.tensors(), tolerance)?;
        s.scalars = Some(*params);
        Ok(s)
    }

    pub fn from_tensors(tensors: DeformationTensors, tolerance: f64) -> Result<Self> {
        Self::assemble(tensors, tolerance)
    }

    fn assemble(tensors: DeformationTensors, tolerance: f64) -> Result<Self> {
        let n = tensors.num_components();
        let id = DMatrix::<f64>::identity(n, n);
        let omega1 = &id - &tensors.e * &tensors.b;
        let omega2 = &id - &tensors.b * &tensors.e;
        let det = omega1.determinant();
        if det.is_nan() || det.abs() <= tolerance {
            return Err(Error::DegenerateDeformation { det, tolerance });
        }
        let omega1_inv = omega1
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateDeformation { det, tolerance })?;
        let omega2_inv = omega2
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateDeformation { det, tolerance })?;

        let mut omega = DMatrix::<f64>::zeros(2 * n, 2 * n);
        omega.view_mut((0, 0), (n, n)).copy_from(&(-&tensors.b));
        omega.view_mut((0, n), (n, n)).copy_from(&id);
        omega.view_mut((n, 0), (n, n)).copy_from(&(-&id));
        omega.view_mut((n, n), (n, n)).copy_from(&tensors.e);
        let omega_inv = omega
            .clone()
            .try_inverse()
            .ok_or(Error::DegenerateDeformation { det, tolerance })?;

        Ok(Self {
            tensors,
            scalars: None,
            omega,
            omega_inv,
            omega1,
            omega2,
            omega1_inv,
            omega2_inv,
        })
    }

    pub fn num_components(&self) -> usize {
        self.tensors.num_components()
    }

    pub fn tensors(&self) -> &DeformationTensors {
        &self.tensors
    }

    /// The scalar parameters, when built through the specialized path.
    pub fn params(&self) -> Option<DeformationParams> {
        self.scalars
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    /// Numerical inverse of `omega`.
    pub fn omega_inv(&self) -> &DMatrix<f64> {
        &self.omega_inv
    }

    pub fn omega1(&self) -> &DMatrix<f64> {
        &self.omega1
    }

    pub fn omega2(&self) -> &DMatrix<f64> {
        &self.omega2
    }

    pub fn omega1_inv(&self) -> &DMatrix<f64> {
        &self.omega1_inv
    }

    pub fn omega2_inv(&self) -> &DMatrix<f64> {
        &self.omega2_inv
    }

    /// Closed-form coordinate bracket `{kind_a^i, kind_b^j}` for a mode pair
    /// with `n + m = 0`.
    pub fn bracket_entry(&self, kind_a: Kind, i: usize, kind_b: Kind, j: usize) -> f64 {
        if let Some(p) = self.scalars {
            let s = p.scale();
            let delta = if i == j { 1.0 } else { 0.0 };
            return match (kind_a, kind_b) {
                (Kind::Q, Kind::Q) => -p.theta / s * eps(i, j),
                (Kind::P, Kind::P) => p.theta_bar / s * eps(i, j),
                (Kind::Q, Kind::P) => delta / s,
                (Kind::P, Kind::Q) => -delta / s,
            };
        }
        match (kind_a, kind_b) {
            (Kind::Q, Kind::Q) => -(&self.omega1_inv * &self.tensors.e)[(i, j)],
            (Kind::P, Kind::P) => (&self.omega2_inv * &self.tensors.b)[(i, j)],
            (Kind::Q, Kind::P) => self.omega1_inv[(i, j)],
            (Kind::P, Kind::Q) => -self.omega1_inv[(j, i)],
        }
    }

    /// The closed-form Poisson tensor in the ordering of [`Self::omega`].
    pub fn poisson_tensor(&self) -> DMatrix<f64> {
        let n = self.num_components();
        let kinds = |k: usize| if k < n { (Kind::Q, k) } else { (Kind::P, k - n) };
        DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (ka, i) = kinds(r);
            let (kb, j) = kinds(c);
            self.bracket_entry(ka, i, kb, j)
        })
    }

    /// Coefficient of `delta(x - x')` in the equal-time field bracket.
    pub fn field_bracket(&self, a: FieldKind, i: usize, b: FieldKind, j: usize) -> Result<f64> {
        let n = self.num_components();
        if i >= n || j >= n {
            return Err(Error::IndexMismatch(format!(
                "field components ({i}, {j}) outside 0..{n}"
            )));
        }
        Ok(self.bracket_entry(a.kind(), i, b.kind(), j))
    }
}

/// Field or conjugate momentum density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Phi,
    Pi,
}

impl FieldKind {
    fn kind(self) -> Kind {
        match self {
            FieldKind::Phi => Kind::Q,
            FieldKind::Pi => Kind::P,
        }
    }
}

/// Partial derivatives of a functional with respect to every mode coordinate,
/// the coordinates `z_n` and `z_{-n}` treated as independent.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    modes: ModeSet,
    components: usize,
    entries: BTreeMap<Coordinate, Complex64>,
}

impl Gradient {
    /// Requires an entry for every coordinate of the mode set.
    pub fn from_map(
        modes: ModeSet,
        components: usize,
        entries: BTreeMap<Coordinate, Complex64>,
    ) -> Result<Self> {
        let g = Self {
            modes,
            components,
            entries,
        };
        if let Some(missing) = g.all_coordinates().find(|c| !g.entries.contains_key(c)) {
            return Err(Error::ShapeMismatch(format!("no derivative for {missing}")));
        }
        if let Some(extra) = g.entries.keys().find(|c| {
            c.component >= components || !modes.contains(c.mode)
        }) {
            return Err(Error::ShapeMismatch(format!("{extra} is outside the mode set")));
        }
        Ok(g)
    }

    pub fn from_fn(
        modes: ModeSet,
        components: usize,
        mut f: impl FnMut(Coordinate) -> Complex64,
    ) -> Self {
        let entries = coordinates(modes, components).map(|c| (c, f(c))).collect();
        Self {
            modes,
            components,
            entries,
        }
    }

    pub fn zero(modes: ModeSet, components: usize) -> Self {
        Self::from_fn(modes, components, |_| Complex64::new(0.0, 0.0))
    }

    pub fn get(&self, c: Coordinate) -> Complex64 {
        self.entries
            .get(&c)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn components(&self) -> usize {
        self.components
    }

    fn all_coordinates(&self) -> impl Iterator<Item = Coordinate> {
        coordinates(self.modes, self.components)
    }
}

fn coordinates(modes: ModeSet, components: usize) -> impl Iterator<Item = Coordinate> {
    [Kind::Q, Kind::P].into_iter().flat_map(move |kind| {
        (0..components).flat_map(move |component| {
            modes.modes().map(move |mode| Coordinate {
                kind,
                component,
                mode,
            })
        })
    })
}

/// A symplectic structure on a concrete truncated mode set.
#[derive(Debug, Clone)]
pub struct PhaseSpace {
    structure: SymplecticStructure,
    modes: ModeSet,
}

impl PhaseSpace {
    pub fn new(structure: SymplecticStructure, modes: ModeSet) -> Self {
        Self { structure, modes }
    }

    pub fn structure(&self) -> &SymplecticStructure {
        &self.structure
    }

    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    pub fn components(&self) -> usize {
        self.structure.num_components()
    }

    fn check(&self, c: Coordinate) -> Result<()> {
        if c.component >= self.components() || !self.modes.contains(c.mode) {
            return Err(Error::IndexMismatch(format!(
                "{c} outside {} components, n_max {}",
                self.components(),
                self.modes.n_max()
            )));
        }
        Ok(())
    }

    /// `{a, b}` for two coordinate functions.
    pub fn mode_bracket(&self, a: Coordinate, b: Coordinate) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        if a.mode.value() + b.mode.value() != 0 {
            return Ok(0.0);
        }
        Ok(self
            .structure
            .bracket_entry(a.kind, a.component, b.kind, b.component))
    }

    /// `{F, G} = sum_ab dF/dz_a {z_a, z_b} dG/dz_b`.
    pub fn poisson_bracket(&self, df: &Gradient, dg: &Gradient) -> Result<Complex64> {
        self.check_gradient(df)?;
        self.check_gradient(dg)?;
        let mut total = Complex64::new(0.0, 0.0);
        for a in coordinates(self.modes, self.components()) {
            let fa = df.get(a);
            if fa == Complex64::new(0.0, 0.0) {
                continue;
            }
            for kind in [Kind::Q, Kind::P] {
                for j in 0..self.components() {
                    let b = Coordinate {
                        kind,
                        component: j,
                        mode: a.mode.neg(),
                    };
                    let w = self.structure.bracket_entry(a.kind, a.component, kind, j);
                    if w != 0.0 {
                        total += fa * w * dg.get(b);
                    }
                }
            }
        }
        Ok(total)
    }

    /// Components of the Hamiltonian vector field, `dz_a/dt = {z_a, G}`.
    pub fn hamiltonian_vector_field(&self, dg: &Gradient) -> Result<Gradient> {
        self.check_gradient(dg)?;
        let mut entries = BTreeMap::new();
        for a in coordinates(self.modes, self.components()) {
            let mut v = Complex64::new(0.0, 0.0);
            for kind in [Kind::Q, Kind::P] {
                for j in 0..self.components() {
                    let b = Coordinate {
                        kind,
                        component: j,
                        mode: a.mode.neg(),
                    };
                    v += self.structure.bracket_entry(a.kind, a.component, kind, j) * dg.get(b);
                }
            }
            entries.insert(a, v);
        }
        Ok(Gradient {
            modes: self.modes,
            components: self.components(),
            entries,
        })
    }

    fn check_gradient(&self, g: &Gradient) -> Result<()> {
        if g.modes != self.modes || g.components != self.components() {
            return Err(Error::ShapeMismatch(format!(
                "gradient over n_max {} / {} components, phase space has n_max {} / {}",
                g.modes.n_max(),
                g.components,
                self.modes.n_max(),
                self.components()
            )));
        }
        Ok(())
    }
}
