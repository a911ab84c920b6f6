//! The dressing map from deformed modes `(q, p)` to canonical modes `(Q, P)`.
//!
//! ```text
//!   Q^i_n = a q^i_n + (b theta / 2)     sum_k eps_ki p^k_n
//!   P^i_n = c p^i_n + (d theta_bar / 2) sum_k eps_ki q^k_n
//! ```
//!
//! The map is canonical iff `(a, b, c, d)` solve three quadratic constraints;
//! [`solve_dressing`] returns the branch `a = c = 1/b = 1/d`.

use nalgebra::{Matrix4, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{Kind, ModeState};
use crate::symplectic::{eps, DeformationParams, SymplecticStructure, NONDEGENERACY_TOLERANCE};

/// `1 + theta theta_bar` must exceed this for a real dressing.
pub const DRESSING_TOLERANCE: f64 = 1e-10;

/// Constraint residuals accepted by [`DressingCoefficients::validate`].
pub const CONSTRAINT_TOLERANCE: f64 = 1e-12;

/// Tolerance on the orthogonality residuals.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressingCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub theta: f64,
    pub theta_bar: f64,
}

/// The closed-form branch `a = c = 1/b = 1/d = sqrt((1 + sqrt(1 + theta theta_bar)) / 2)`.
pub fn solve_dressing(params: &DeformationParams) -> Result<DressingCoefficients> {
    let scale = params.scale();
    if scale.is_nan() || scale <= DRESSING_TOLERANCE {
        return Err(Error::NoRealSolution {
            value: scale,
            tolerance: DRESSING_TOLERANCE,
        });
    }
    let a = ((1.0 + scale.sqrt()) / 2.0).sqrt();
    let coeffs = DressingCoefficients {
        a,
        b: 1.0 / a,
        c: a,
        d: 1.0 / a,
        theta: params.theta,
        theta_bar: params.theta_bar,
    };
    coeffs.validate(CONSTRAINT_TOLERANCE * (1.0 + params.product().abs()))?;
    Ok(coeffs)
}

impl DressingCoefficients {
    /// The identity dressing of the undeformed theory.
    pub fn identity() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            d: 1.0,
            theta: 0.0,
            theta_bar: 0.0,
        }
    }

    pub fn params(&self) -> DeformationParams {
        DeformationParams::new(self.theta, self.theta_bar)
    }

    /// Residuals of
    /// `4a^2 - 4ab - t b^2 = 0`, `4c^2 - 4cd - t d^2 = 0`,
    /// `4ac + 2t(ad + bc) - t bd = 4(1 + t)` with `t = theta theta_bar`.
    pub fn constraint_residuals(&self) -> [f64; 3] {
        let Self { a, b, c, d, .. } = *self;
        let t = self.theta * self.theta_bar;
        [
            4.0 * a * a - 4.0 * a * b - t * b * b,
            4.0 * c * c - 4.0 * c * d - t * d * d,
            4.0 * a * c + 2.0 * t * (a * d + b * c) - t * b * d - 4.0 * (1.0 + t),
        ]
    }

    /// Checks a (possibly user-supplied) branch against the constraints.
    pub fn validate(&self, tolerance: f64) -> Result<()> {
        for (index, r) in self.constraint_residuals().into_iter().enumerate() {
            if r.is_nan() || r.abs() > tolerance {
                return Err(Error::ConstraintViolation { index, residual: r });
            }
        }
        Ok(())
    }

    /// The per-mode linear map in the basis `(q^1, q^2, p^1, p^2)`.
    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        let qmix = self.b * self.theta / 2.0;
        let pmix = self.d * self.theta_bar / 2.0;
        for i in 0..2 {
            m[(i, i)] = self.a;
            m[(2 + i, 2 + i)] = self.c;
            for k in 0..2 {
                m[(i, 2 + k)] += qmix * eps(k, i);
                m[(2 + i, k)] += pmix * eps(k, i);
            }
        }
        m
    }

    /// `T T^T` for the matrix of [`Self::matrix`].
    pub fn gram(&self) -> Matrix4<f64> {
        let m = self.matrix();
        m * m.transpose()
    }
}

fn require_two_components(state: &ModeState) -> Result<()> {
    if state.components() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "dressing acts on two-component states, got {}",
            state.components()
        )));
    }
    Ok(())
}

/// Deformed `(q, p)` to canonical `(Q, P)`, mode by mode.
pub fn dress(state: &ModeState, coeffs: &DressingCoefficients) -> Result<ModeState> {
    require_two_components(state)?;
    let qmix = coeffs.b * coeffs.theta / 2.0;
    let pmix = coeffs.d * coeffs.theta_bar / 2.0;
    let mut out = state.clone();
    for n in state.modes().modes() {
        for i in 0..2 {
            let mut big_q = coeffs.a * state.q(i, n);
            let mut big_p = coeffs.c * state.p(i, n);
            for k in 0..2 {
                big_q += qmix * eps(k, i) * state.p(k, n);
                big_p += pmix * eps(k, i) * state.q(k, n);
            }
            out.set_raw(Kind::Q, i, n, big_q);
            out.set_raw(Kind::P, i, n, big_p);
        }
    }
    Ok(out)
}

/// Canonical `(Q, P)` back to deformed `(q, p)`. Valid for the
/// `a = c = 1/b = 1/d` branch returned by [`solve_dressing`].
pub fn undress(state: &ModeState, coeffs: &DressingCoefficients) -> Result<ModeState> {
    require_two_components(state)?;
    let a = coeffs.a;
    let pre = a / coeffs.params().scale().sqrt();
    let qmix = coeffs.theta / (2.0 * a * a);
    let pmix = coeffs.theta_bar / (2.0 * a * a);
    let mut out = state.clone();
    for n in state.modes().modes() {
        for i in 0..2 {
            let mut q: Complex64 = state.q(i, n);
            let mut p: Complex64 = state.p(i, n);
            for k in 0..2 {
                q += qmix * eps(i, k) * state.p(k, n);
                p += pmix * eps(i, k) * state.q(k, n);
            }
            out.set_raw(Kind::Q, i, n, pre * q);
            out.set_raw(Kind::P, i, n, pre * p);
        }
    }
    Ok(out)
}

/// Max entrywise distance between `T P T^T` and the canonical tensor, where
/// `P` is the deformed Poisson tensor of `params`.
pub fn canonicity_residual(params: &DeformationParams, coeffs: &DressingCoefficients) -> Result<f64> {
    let s = SymplecticStructure::specialized(params, NONDEGENERACY_TOLERANCE)?;
    let p = SMatrix::<f64, 4, 4>::from_fn(|r, c| s.poisson_tensor()[(r, c)]);
    let t = coeffs.matrix();
    let pushed = t * p * t.transpose();
    let canonical = Matrix4::new(
        0., 0., 1., 0., //
        0., 0., 0., 1., //
        -1., 0., 0., 0., //
        0., -1., 0., 0.,
    );
    Ok((pushed - canonical).amax())
}

/// Orthogonality diagnostics for the dressing map of `params`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub theta: f64,
    pub theta_bar: f64,
    /// Residuals of `a^2 + theta^2 b^2/4 = 1`, `c^2 + theta_bar^2 d^2/4 = 1`,
    /// `b c theta = a d theta_bar`.
    pub residuals: [f64; 3],
    /// All three residuals below tolerance, i.e. `T T^T = I`.
    pub is_orthogonal: bool,
    /// Only the third (relative angle) condition holds.
    pub angle_condition: bool,
    /// `T T^T = scale * I`: orthogonal up to a uniform rescaling.
    pub conformal: bool,
    pub scale: f64,
    pub conformal_defect: f64,
    pub tolerance: f64,
}

pub fn orthogonality_report(params: &DeformationParams) -> Result<OrthogonalityReport> {
    orthogonality_report_with(params, ORTHOGONALITY_TOLERANCE)
}

pub fn orthogonality_report_with(params: &DeformationParams, tolerance: f64) -> Result<OrthogonalityReport> {
    let k = solve_dressing(params)?;
    let (th, tb) = (params.theta, params.theta_bar);
    let residuals = [
        k.a * k.a + 0.25 * th * th * k.b * k.b - 1.0,
        k.c * k.c + 0.25 * tb * tb * k.d * k.d - 1.0,
        k.b * k.c * th - k.a * k.d * tb,
    ];
    let gram = k.gram();
    let scale = gram.trace() / 4.0;
    let conformal_defect = (gram - Matrix4::identity() * scale).amax();
    Ok(OrthogonalityReport {
        theta: th,
        theta_bar: tb,
        residuals,
        is_orthogonal: residuals.iter().all(|r| r.abs() < tolerance),
        angle_condition: residuals[2].abs() < tolerance,
        conformal: conformal_defect < tolerance,
        scale,
        conformal_defect,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Coordinate, ModeIndex, ModeSet};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn random_state(seed: u64, n_max: u32) -> ModeState {
        // Small deterministic generator; keeps this module free of rand.
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let modes = ModeSet::new(n_max).unwrap();
        let mut s = ModeState::zeros(2, modes);
        for n in 0..=i64::from(n_max) {
            for i in 0..2 {
                let im = |v: f64| if n == 0 { 0.0 } else { v };
                s.set_pair(Coordinate::q(i, n), Complex64::new(next(), im(next()))).unwrap();
                s.set_pair(Coordinate::p(i, n), Complex64::new(next(), im(next()))).unwrap();
            }
        }
        s
    }

    #[test]
    fn undeformed_coefficients_are_one() {
        let k = solve_dressing(&DeformationParams::undeformed()).unwrap();
        assert_eq!((k.a, k.b, k.c, k.d), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn unit_deformation_coefficients() {
        let k = solve_dressing(&DeformationParams::new(1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(k.a, 1.098_684_113_467_81, epsilon = 1e-12);
        assert_eq!(k.a, k.c);
        assert_eq!(k.b, 1.0 / k.a);
        // a^2 = (1 + sqrt 2)/2 makes 4a^4 - 4a^2 - 1 vanish; all three
        // constraints reduce to it on this branch.
        for r in k.constraint_residuals() {
            assert!(r.abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn negative_region_has_no_real_dressing() {
        let err = solve_dressing(&DeformationParams::new(3.0, -1.0)).unwrap_err();
        assert!(matches!(err, Error::NoRealSolution { .. }));
    }

    #[test]
    fn alternate_branch_is_checked() {
        let mut k = solve_dressing(&DeformationParams::new(0.5, 0.2)).unwrap();
        k.b *= 1.01;
        assert!(matches!(
            k.validate(CONSTRAINT_TOLERANCE),
            Err(Error::ConstraintViolation { index: 0, .. })
        ));
    }

    #[test]
    fn undeformed_dressing_is_identity() {
        let s = random_state(3, 2);
        let k = solve_dressing(&DeformationParams::undeformed()).unwrap();
        assert_eq!(dress(&s, &k).unwrap(), s);
        assert_eq!(undress(&s, &k).unwrap(), s);
    }

    #[test]
    fn single_field_mode_dresses_to_a() {
        let mut s = ModeState::zeros(2, ModeSet::new(1).unwrap());
        s.set_pair(Coordinate::q(0, 1), Complex64::new(1.0, 0.0)).unwrap();
        let k = solve_dressing(&DeformationParams::new(1.0, 0.0)).unwrap();
        let d = dress(&s, &k).unwrap();
        assert_eq!(d.q(0, ModeIndex(1)), Complex64::new(k.a, 0.0));
        assert_eq!(d.q(1, ModeIndex(1)), Complex64::new(0.0, 0.0));
        for i in 0..2 {
            assert_eq!(d.p(i, ModeIndex(1)), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn undress_single_canonical_mode() {
        let params = DeformationParams::new(1.0, 1.0);
        let k = solve_dressing(&params).unwrap();
        let mut s = ModeState::zeros(2, ModeSet::new(1).unwrap());
        s.set_pair(Coordinate::q(0, 1), Complex64::new(1.0, 0.0)).unwrap();
        let u = undress(&s, &k).unwrap();

        let inv = k.matrix().try_inverse().unwrap();
        let n = ModeIndex(1);
        let got = [u.q(0, n), u.q(1, n), u.p(0, n), u.p(1, n)];
        for r in 0..4 {
            assert_abs_diff_eq!(got[r].re, inv[(r, 0)], epsilon = 1e-14);
            assert_eq!(got[r].im, 0.0);
        }
        let a2 = (1.0 + 2f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(u.q(0, n).re, a2.sqrt() / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(u.p(1, n).re, -1.0 / (2.0 * a2.sqrt() * 2f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn round_trip_hundred_states() {
        let k = solve_dressing(&DeformationParams::new(0.7, 0.7)).unwrap();
        let mut worst = 0.0f64;
        for seed in 0..100 {
            let s = random_state(seed, 3);
            let back = undress(&dress(&s, &k).unwrap(), &k).unwrap();
            worst = worst.max(back.distance(&s));
            let fwd = dress(&undress(&s, &k).unwrap(), &k).unwrap();
            worst = worst.max(fwd.distance(&s));
        }
        assert!(worst < 1e-13, "{worst}");
    }

    #[test]
    fn dressing_keeps_reality() {
        let k = solve_dressing(&DeformationParams::new(0.5, 0.5)).unwrap();
        let d = dress(&random_state(11, 3), &k).unwrap();
        assert!(d.check_reality(0.0).is_ok());
    }

    #[test]
    fn determinant_is_one_plus_theta_theta_bar() {
        for (th, tb) in [(0.0, 0.0), (0.5, 0.5), (1.3, -0.4), (-0.2, 2.0)] {
            let p = DeformationParams::new(th, tb);
            let k = solve_dressing(&p).unwrap();
            let det = k.matrix().determinant();
            assert_abs_diff_eq!(det.abs(), p.scale(), epsilon = 1e-13);
        }
    }

    #[test]
    fn orthogonality_cases() {
        let r = orthogonality_report(&DeformationParams::undeformed()).unwrap();
        assert!(r.is_orthogonal && r.conformal && r.angle_condition);

        // Equal strengths: only the relative-angle condition and the
        // conformal property hold; the first two residuals are sqrt(1+t^2)-1.
        let r = orthogonality_report(&DeformationParams::new(0.8, 0.8)).unwrap();
        assert!(r.angle_condition);
        assert!(r.conformal);
        assert_abs_diff_eq!(r.scale, (1.0f64 + 0.64).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.residuals[0], (1.64f64).sqrt() - 1.0, epsilon = 1e-14);
        assert!(!r.is_orthogonal);

        let r = orthogonality_report(&DeformationParams::new(0.8, 0.2)).unwrap();
        assert!(!r.is_orthogonal && !r.conformal && !r.angle_condition);
        assert!(r.residuals[2].abs() > 0.1);
    }

    #[test]
    fn conformal_exactly_on_diagonal() {
        for i in 0..=20 {
            for j in 0..=20 {
                let p = DeformationParams::new(0.1 * i as f64, 0.1 * j as f64);
                let r = orthogonality_report(&p).unwrap();
                assert_eq!(r.conformal, i == j, "{i} {j}");
                assert_eq!(r.angle_condition, i == j, "{i} {j}");
                assert_eq!(r.is_orthogonal, i == 0 && j == 0, "{i} {j}");
            }
        }
    }

    #[test]
    fn coefficients_continuous_at_origin() {
        let k = solve_dressing(&DeformationParams::new(1e-6, 1e-6)).unwrap();
        assert_abs_diff_eq!(k.a, 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn eq48_branch_is_canonical(theta in -3.0f64..3.0, theta_bar in -3.0f64..3.0) {
            let p = DeformationParams::new(theta, theta_bar);
            prop_assume!(p.scale() > 0.1);
            let k = solve_dressing(&p).unwrap();
            for r in k.constraint_residuals() {
                prop_assert!(r.abs() < 1e-12, "{}", r);
            }
            let res = canonicity_residual(&p, &k).unwrap();
            prop_assert!(res < 1e-12, "{}", res);
        }
    }
}
