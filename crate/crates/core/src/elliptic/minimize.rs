use serde::{Deserialize, Serialize};

use super::problem::AdmissibleProblem;
use super::tangent::{retract, TangentSpace};
use crate::error::{Error, Result};
use crate::grid::{CoupledField, GridOperators};
use crate::linalg::dot;

/// Metric in which the descent direction is taken.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentMetric {
    /// Preconditioned by the grid Laplacian on the tangent bundle, initial step 1.
    H1,
    /// Mass-normalized explicit gradient, initial step `h²/4`.
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Stop once the relative energy decrease of an accepted step falls below this.
    pub energy_tol: f64,
    /// Stop once the mass-normalized tangential gradient falls below this.
    pub gradient_tol: f64,
    pub constraint_tol: f64,
    pub metric: DescentMetric,
    /// Backtracking halvings before giving up.
    pub max_halvings: usize,
    /// Armijo constant.
    pub armijo: f64,
    /// Zeroth-order weight of the metric.
    pub shift: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iterations: 500,
            energy_tol: 1e-14,
            gradient_tol: 1e-9,
            constraint_tol: 1e-9,
            metric: DescentMetric::H1,
            max_halvings: 40,
            armijo: 1e-4,
            shift: 1.0,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::config("minimize.max_iterations", "must be at least 1"));
        }
        for (path, v) in [
            ("minimize.energy_tol", self.energy_tol),
            ("minimize.gradient_tol", self.gradient_tol),
            ("minimize.constraint_tol", self.constraint_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(path, "tolerance must be positive"));
            }
        }
        Ok(())
    }
}

/// One accepted descent step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentRecord {
    pub iteration: usize,
    pub energy: f64,
    pub step: f64,
    pub gradient: f64,
    pub constraint: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DescentLedger {
    pub records: Vec<DescentRecord>,
    pub converged: bool,
}

impl DescentLedger {
    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.energy)
    }

    /// Whether the accepted energies never increase.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].energy <= w[0].energy)
    }
}

#[derive(Clone, Debug)]
pub struct Minimized {
    pub field: CoupledField,
    pub ledger: DescentLedger,
}

fn gradient_size(g: &[f64], mass: &[f64]) -> f64 {
    g.iter()
        .zip(mass)
        .map(|(gi, mi)| (gi / mi).abs())
        .fold(0.0, f64::max)
}

/// Projected descent of the Dirichlet energy over the admissible class.
///
/// Each step solves for a tangent direction, backtracks on the Armijo condition, and retracts
/// by nearest-point projection. Interface unknowns live on `M⁺`; the minus trace follows `Φ⁺`.
pub fn minimize(problem: &AdmissibleProblem, u0: &CoupledField, opts: &MinimizeOptions) -> Result<Minimized> {
    opts.validate()?;
    let ops = GridOperators::new(&problem.grid);
    let membership = u0.membership(&problem.coupling).max();
    if membership > opts.constraint_tol.max(problem.constraint_tol) {
        return Err(Error::invalid(format!(
            "initial field is not admissible: constraint residual {membership:.3e}"
        )));
    }
    let h = problem.grid.spacing();
    let mut u = u0.clone();
    let mut energy = ops.energy(&u);
    let mut ledger = DescentLedger::default();
    ledger.records.push(DescentRecord {
        iteration: 0,
        energy,
        step: 0.0,
        gradient: f64::NAN,
        constraint: membership,
    });
    for iteration in 1..=opts.max_iterations {
        let space = TangentSpace::new(problem, &u);
        if space.len() == 0 {
            ledger.converged = true;
            break;
        }
        let g = space.gradient(&ops, &u);
        let mass = space.masses(&ops);
        let gsize = gradient_size(&g, &mass);
        if let Some(last) = ledger.records.last_mut() {
            last.gradient = gsize;
        }
        if gsize <= opts.gradient_tol {
            ledger.converged = true;
            break;
        }
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let (c, alpha0) = match opts.metric {
            DescentMetric::H1 => (space.solve(&ops, opts.shift, &neg)?, 1.0),
            DescentMetric::L2 => (
                neg.iter().zip(&mass).map(|(v, m)| v / m).collect(),
                0.25 * h * h,
            ),
        };
        let slope = dot(&g, &c);
        if !(slope < 0.0) {
            ledger.converged = true;
            break;
        }
        let delta = space.lift(&c);
        let mut alpha = alpha0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            if let Ok(trial) = retract(problem, &u, &delta, alpha) {
                let e = ops.energy(&trial);
                if e <= energy + opts.armijo * alpha * slope {
                    accepted = Some((trial, e));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, e)) = accepted else {
            return Err(Error::StepFailure {
                iteration,
                halvings: opts.max_halvings,
            });
        };
        let decrease = energy - e;
        u = next;
        energy = e;
        ledger.records.push(DescentRecord {
            iteration,
            energy,
            step: alpha,
            gradient: f64::NAN,
            constraint: u.matching_residual(&problem.coupling),
        });
        if decrease <= opts.energy_tol * energy.abs().max(f64::MIN_POSITIVE) {
            ledger.converged = true;
            break;
        }
    }
    Ok(Minimized { field: u, ledger })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::elliptic::{flux_residual, initialize_admissible, AngleProfile, BoundaryForm};
    use crate::geometry::{AxisRotation, Circle, Coupling, SubmanifoldPair};
    use crate::grid::{Side, SplitGrid};

    fn circle_coupling(beta: f64) -> Coupling {
        let pair = SubmanifoldPair::whole(Arc::new(Circle::new(1.0)));
        Coupling::new(pair.clone(), pair, Arc::new(AxisRotation::new(beta)))
    }

    fn geodesic_problem(h: f64) -> AdmissibleProblem {
        let form = BoundaryForm::AngleLinear {
            radius: 1.0,
            plus: AngleProfile::constant(0.0),
            minus: AngleProfile::constant(PI / 2.0),
        };
        AdmissibleProblem::new(SplitGrid::cube(1, 1.0, h).unwrap(), circle_coupling(PI / 6.0), form).unwrap()
    }

    #[test]
    fn geodesic_matching_reaches_closed_form() {
        let problem = geodesic_problem(1.0 / 256.0);
        let u0 = initialize_admissible(&problem).unwrap();
        let out = minimize(&problem, &u0, &MinimizeOptions::default()).unwrap();
        assert!(out.ledger.converged);
        assert!(out.ledger.is_monotone());
        let e = out.ledger.final_energy();
        assert!((e - (PI / 6.0).powi(2)).abs() < 1e-5, "energy {e}");
        let flux = flux_residual(&problem.coupling, &out.field);
        assert!(flux.max_norm() < 1e-6, "flux {}", flux.max_norm());
        let m = out.field.value(Side::Plus, 0);
        assert!((m.y.atan2(m.x) - PI / 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_data_stays_constant() {
        let a = Circle::new(1.0).point(0.3);
        let coupling = circle_coupling(0.4);
        let b = coupling.map.forward(&a);
        let form = BoundaryForm::Constant {
            plus: a.into(),
            minus: b.into(),
        };
        let problem = AdmissibleProblem::new(SplitGrid::cube(2, 1.0, 0.25).unwrap(), coupling, form).unwrap();
        let u0 = initialize_admissible(&problem).unwrap();
        let out = minimize(&problem, &u0, &MinimizeOptions::default()).unwrap();
        assert!(out.ledger.final_energy() < 1e-24);
    }
}
