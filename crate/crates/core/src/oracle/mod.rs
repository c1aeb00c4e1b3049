//! Exactly solvable linear problems.
//!
//! [`solve_coupled_harmonic`] solves the coupled harmonic pair on the unit half balls with
//! matching `v₋ = Pv₊` and the adjoint flux condition on `Γ₁`, in orthonormal frames frozen
//! at base points `a± ∈ M±`. [`blowup_consistency_check`] rescales a minimizer about an
//! interface point and measures how far it is from that linear model.

mod blowup;
mod transmission;

pub use blowup::{blowup_consistency_check, blowup_consistency_check_with, BlowupReport, ScaleReport};
pub use transmission::{
    reflection_identities, solve_coupled_harmonic, trace_residuals, CoupledSolution, FramePair,
    LinearTransmissionProblem, NeumannCombination, ReflectionReport, SphereData, TraceReport, NEUMANN_ZERO,
};
