//! Two-component scalar fields on a circle with a constant deformation of
//! the symplectic structure.
//!
//! The crate covers the deformed brackets ([`symplectic`]), the linear
//! change of variables to canonical ones ([`dressing`]), exact commutator
//! checks in the canonical operator span ([`operator_algebra`]), the normal
//! mode spectrum ([`spectrum`]) and classical evolution by two independent
//! routes ([`dynamics`]).

pub mod dressing;
pub mod dynamics;
pub mod error;
pub mod modes;
pub mod operator_algebra;
pub mod output;
pub mod spectrum;
pub mod symplectic;

pub use dressing::{dress, orthogonality_report, solve_dressing, undress, DressingCoefficients, OrthogonalityReport};
pub use dynamics::{
    evolve, evolve_deformed, evolve_dressed, reconstruct_fields, EvolutionConfig, FieldSample, Integrator, Route,
    TrajectorySample,
};
pub use error::{Error, Result};
pub use modes::{Coordinate, Kind, ModeIndex, ModeSet, ModeState};
pub use operator_algebra::{build_ladder, verify_deformed_commutators, CommutatorReport, Ladder, VerifyOptions};
pub use spectrum::{degeneracy_report, spectrum_table, DegeneracyReport, SpectrumEntry, SpectrumTable};
pub use symplectic::{build_symplectic_structure, DeformationParams, FieldKind, Gradient, PhaseSpace, SymplecticStructure};
