//! Energy minimizers in the admissible class and the constructive comparison maps.
//!
//! A field is admissible when it takes the Dirichlet data on `Σ±`, lies on `N±`, has interface
//! traces on `M±`, and satisfies `u⁻ = Φ⁺(u⁺)` on `Γ`. The minimizer only ever moves the plus
//! trace and recomputes the minus trace, so the flux condition is a diagnostic, not a constraint.

mod comparison;
mod extension;
mod flux;
mod init;
mod minimize;
mod problem;
pub(crate) mod tangent;

pub use comparison::radial_comparison;
pub use extension::{
    homogeneous_cylinder_extension, interpolation_extension_2d, CylinderExtension, CylinderTraces,
    DiscExtension, ExtensionParams,
};
pub use flux::flux_residual;
pub use init::initialize_admissible;
pub use minimize::{minimize, DescentLedger, DescentMetric, DescentRecord, MinimizeOptions, Minimized};
pub use problem::{AdmissibleProblem, AngleProfile, BoundaryForm, Compatibility, EdgeViolation};

