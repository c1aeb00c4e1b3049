//! Split tensor grids, two-sided fields and discrete calculus.
//!
//! The box is cut by the plane `xₙ = 0`. Each side keeps its own closed sub-grid, so every
//! interface node appears twice and carries the two one-sided traces. Side-local indices
//! use the depth `|xₙ|/h` as the last axis; the interface layer therefore has the same
//! indices on both sides.

mod calculus;
mod field;
mod split;

pub use calculus::{
    ball_restriction, check_ball, discrete_energy, discrete_gradient, dist, interpolate,
    normal_derivative_at_interface, scalar_laplacian, side_gradient, sphere_points, BallRestriction,
    GridOperators, SideOps,
};
pub use field::{Carrier, CoupledField, Membership, TraceField};
pub use split::{Adjacency, NodeKind, Side, SideGrid, SplitGrid};
