//! Harmonic maps and harmonic map heat flows on a split domain `Ω = Ω⁺ ∪ Γ ∪ Ω⁻`.
//!
//! The two halves map into targets `N±`; on the interface `Γ = {xₙ = 0}` the traces lie in
//! submanifolds `M±` and are matched by a diffeomorphism, `u⁻ = Φ⁺(u⁺)`. The crate computes
//! energy minimizers, evolves the heat flow, solves the linearized transmission problem
//! exactly, and evaluates monotonicity and regularity diagnostics.
//!
//! * [`geometry`]: targets, interface map, charts
//! * [`grid`]: split grids, fields, discrete calculus
//! * [`elliptic`]: admissible initialization, constrained minimization, comparison maps
//! * [`parabolic`]: semi-implicit flow, energy ledger, Picard iteration in charts
//! * [`oracle`]: coupled linear harmonic problem and blow-up checks
//! * [`diagnostics`]: monotonicity curves, Struwe quantity, small-energy detection
//! * [`scenario`]: configuration files and run orchestration

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod elliptic;
mod error;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod oracle;
pub mod parabolic;
pub mod scenario;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/minimizers.md")]
    mod minimizers {}
    #[doc = include_str!("../../../book/src/heat-flow.md")]
    mod heat_flow {}
    #[doc = include_str!("../../../book/src/linear-oracle.md")]
    mod linear_oracle {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
