//! Target manifolds, interface submanifolds, the matching map and local charts.
//!
//! Every target is an embedded submanifold of at most three-dimensional Euclidean space and
//! is accessed through its nearest-point projection. The interface map `Φ⁺: M⁺ → M⁻`
//! carries both the Dirichlet matching `u⁻ = Φ⁺(u⁺)` and, through its adjoint, the flux
//! transmission condition.

mod chart;
mod interface;
mod manifold;
mod submanifold;

pub use chart::{
    condition_number, mixed_block_norm, AngleChart, Chart, Christoffel, GraphChart, ProjectionChart,
    DEFAULT_MAX_CONDITION,
};
pub use interface::{AxisRotation, Coupling, Identity, InterfaceMap, Scaling};
pub use manifold::{
    distance_to, project_to_manifold, projected_chord_length, second_form_eval, Circle, CustomManifold,
    Frame, GraphSurface, Manifold, ProjectionFn, Sphere, Torus, Vec3, TANGENCY_TOL,
};
pub use submanifold::SubmanifoldPair;

/// `interface_flux_transfer`: `(DΦ⁺(a))ᵗ(wᵀ)`.
pub fn interface_flux_transfer(coupling: &Coupling, a: &Vec3, w: &Vec3) -> Vec3 {
    coupling.flux_transfer(a, w)
}

/// `christoffel_eval` with the default condition bound.
pub fn christoffel_eval(chart: &dyn Chart, u: &[f64]) -> crate::Result<Christoffel> {
    chart.christoffel(u, DEFAULT_MAX_CONDITION)
}
