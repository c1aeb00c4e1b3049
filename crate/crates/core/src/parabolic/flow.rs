use serde::{Deserialize, Serialize};

use super::ledger::{EnergyLedger, LedgerSample};
use crate::elliptic::tangent::{retract, TangentSpace};
use crate::elliptic::{flux_residual, AdmissibleProblem};
use crate::error::{Error, Result};
use crate::grid::{CoupledField, GridOperators, Side};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Largest admissible `dt / h²`.
    pub stability: f64,
    /// Keep every `record_every`-th step as a trajectory frame.
    pub record_every: usize,
    /// Moving-interface constant of the energy inequality; 0 for a static interface.
    pub energy_constant: f64,
    /// Initial flux residuals above this are flagged.
    pub flux_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            dt: 1e-4,
            t_end: 0.1,
            stability: 0.2,
            record_every: 1,
            energy_constant: 0.0,
            flux_tol: 1e-2,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self, h: f64) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::config("flow.dt", "must be positive"));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::config("flow.t_end", "must be nonnegative"));
        }
        if self.record_every == 0 {
            return Err(Error::config("flow.record_every", "must be at least 1"));
        }
        if !(self.energy_constant >= 0.0) {
            return Err(Error::config("flow.energy_constant", "must be nonnegative"));
        }
        let bound = self.stability * h * h;
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::config(
                "flow.dt",
                format!("dt = {:e} exceeds the stability bound {:e} (stability·h²)", self.dt, bound),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub field: CoupledField,
    pub previous: Option<CoupledField>,
}

impl FlowState {
    pub fn initial(field: CoupledField) -> Self {
        FlowState {
            t: 0.0,
            field,
            previous: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub field: CoupledField,
}

/// Recorded frames of a run, in increasing time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn first_time(&self) -> f64 {
        self.frames.first().map_or(f64::NAN, |f| f.t)
    }

    pub fn last(&self) -> Option<&Frame> {
        self.frames.last()
    }

    /// The frame whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<&Frame> {
        self.frames
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

#[derive(Clone, Debug)]
pub struct FlowRun {
    pub trajectory: Trajectory,
    pub ledger: EnergyLedger,
    /// Flux residual of the initial data.
    pub initial_flux: f64,
    /// Whether the initial data violate flux compatibility beyond `flux_tol`.
    pub flux_flagged: bool,
}

/// `Σ m|a − b|²` over both sides.
pub(crate) fn mass_distance2(ops: &GridOperators, a: &CoupledField, b: &CoupledField) -> f64 {
    Side::BOTH
        .iter()
        .map(|&s| {
            ops.side(s)
                .masses
                .iter()
                .zip(a.side(s).iter().zip(b.side(s)))
                .map(|(m, (x, y))| m * (x - y).norm_squared())
                .sum::<f64>()
        })
        .sum()
}

/// Harmonic map heat flow with the interface fixed at `xₙ = 0`.
pub struct HeatFlow<'a> {
    problem: &'a AdmissibleProblem,
    ops: GridOperators,
    opts: FlowOptions,
}

impl<'a> HeatFlow<'a> {
    pub fn new(problem: &'a AdmissibleProblem, opts: FlowOptions) -> Result<Self> {
        opts.validate(problem.grid.spacing())?;
        Ok(HeatFlow {
            problem,
            ops: GridOperators::new(&problem.grid),
            opts,
        })
    }

    pub fn operators(&self) -> &GridOperators {
        &self.ops
    }

    /// One backward-Euler step on the tangent planes at the current field, then retraction.
    ///
    /// Solves `(M/dt + L) δ = −L u` over admissible variations `δ = Bc` and sets
    /// `u ← R(u + δ)`. Curvature enters through the tangent restriction and the projection.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        let u = &state.field;
        let space = TangentSpace::new(self.problem, u);
        let next = if space.len() == 0 {
            u.clone()
        } else {
            let g = space.gradient(&self.ops, u);
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let c = space.solve(&self.ops, 1.0 / dt, &rhs)?;
            retract(self.problem, u, &space.lift(&c), 1.0)?
        };
        Ok(FlowState {
            t: state.t + dt,
            field: next,
            previous: Some(u.clone()),
        })
    }

    /// Integrates from `u0` at `t = 0` to `t_end`, recording the energy ledger at every step.
    pub fn run(&self, u0: &CoupledField) -> Result<FlowRun> {
        let membership = u0.membership(&self.problem.coupling).max();
        if membership > self.problem.constraint_tol {
            return Err(Error::invalid(format!(
                "initial field is not admissible: constraint residual {membership:.3e}"
            )));
        }
        let initial_flux = flux_residual(&self.problem.coupling, u0).max_norm();
        let opts = &self.opts;
        let mut state = FlowState::initial(u0.clone());
        let mut energy = self.ops.energy(u0);
        let mut samples = vec![LedgerSample {
            t: 0.0,
            energy,
            dissipation: 0.0,
            slack: 0.0,
        }];
        let mut trajectory = Trajectory {
            frames: vec![Frame {
                t: 0.0,
                field: u0.clone(),
            }],
        };
        let steps = (opts.t_end / opts.dt - 1e-9).ceil().max(0.0) as usize;
        for k in 1..=steps {
            let dt = opts.dt.min(opts.t_end - state.t);
            if dt <= 0.0 {
                break;
            }
            let next = self.step(&state, dt)?;
            let dissipation = mass_distance2(&self.ops, &next.field, &state.field) / dt;
            energy = self.ops.energy(&next.field);
            samples.push(LedgerSample {
                t: next.t,
                energy,
                dissipation,
                slack: 0.0,
            });
            if k % opts.record_every == 0 || k == steps {
                trajectory.frames.push(Frame {
                    t: next.t,
                    field: next.field.clone(),
                });
            }
            state = next;
        }
        let mut ledger = EnergyLedger {
            samples,
            constant: opts.energy_constant,
        };
        ledger.fill_slack();
        Ok(FlowRun {
            trajectory,
            ledger,
            initial_flux,
            flux_flagged: initial_flux > opts.flux_tol,
        })
    }
}

/// A single step without reusing operators.
pub fn semi_implicit_step(problem: &AdmissibleProblem, state: &FlowState, dt: f64) -> Result<FlowState> {
    let opts = FlowOptions {
        dt,
        ..Default::default()
    };
    HeatFlow::new(problem, opts)?.step(state, dt)
}
