//! Harmonic map heat flow with a static interface.
//!
//! [`HeatFlow`] advances the field by backward-Euler steps on the tangent planes followed by
//! nearest-point retraction, and records an [`EnergyLedger`]. [`picard_chart_solve`] solves
//! the same flow in a single chart pair by iterating the linear transmission problem with
//! a frozen curvature source, and reports the measured contraction.

mod flow;
mod ledger;
mod picard;

pub use flow::{semi_implicit_step, FlowOptions, FlowRun, FlowState, Frame, HeatFlow, Trajectory};
pub use ledger::{energy_inequality_check, EnergyLedger, LedgerSample, SlackReport};
pub use picard::{picard_chart_solve, proxy_norm, PicardConfig, PicardRun};
