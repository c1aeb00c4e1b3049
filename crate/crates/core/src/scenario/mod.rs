//! Scenario files and run orchestration.
//!
//! A [`Scenario`] is read from TOML. [`run`] builds the problem, evolves or minimizes, and writes
//! fields, ledgers, diagnostics, `summary.json` and a `manifest.json` with SHA-256 digests of
//! the configuration and of every output. Output bytes depend only on the scenario and seed.

mod config;
mod output;
mod run;

pub use config::{
    DiagnosticsSpec, GridSpec, InitialSource, InitialSpec, InterfaceSpec, MapKind, RunKind, Scenario, Slice,
    TargetKind, TargetSpec, Targets,
};
pub use output::{field_csv, field_file_name, read_field, Measured, OutputFile};
pub use run::{diagnose, initial_field, run, validate, Manifest, RunOutcome, Summary, ValidationReport};
