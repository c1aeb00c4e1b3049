//! Monotone quantities and regularity indicators.
//!
//! Ball energies are edge sums of squared intrinsic distances with a one-cell ramp at the
//! sphere, so the singular cell of a homogeneous map contributes its arc length rather than
//! its chord.

mod density;
mod monotonicity;
mod regularity;
mod struwe;

pub use monotonicity::{energy_decay_ratio, renormalized_energy, static_monotonicity_curve, MonotonicityCurve};
pub use regularity::{singular_set_detect, NodeEnergy, RegularityMap, HOLDER_EXPONENT};
pub use struwe::{backward_heat_kernel, struwe_curve, StruweQuantity};

/// Default small-energy threshold `ε₀`.
pub const DEFAULT_EPS0: f64 = 0.5;
