use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{InitialSource, RunKind, Scenario, TargetKind};
use super::output::{field_csv, field_file_name, read_field, table_csv, Measured, OutputDir, OutputFile};
use crate::diagnostics::{energy_decay_ratio, singular_set_detect, static_monotonicity_curve, struwe_curve};
use crate::elliptic::{flux_residual, initialize_admissible, minimize, AdmissibleProblem, Compatibility};
use crate::error::{Error, Result};
use crate::geometry::{project_to_manifold, AngleChart, Chart, GraphChart, Vec3};
use crate::grid::{discrete_energy, CoupledField, Side};
use crate::oracle::{blowup_consistency_check_with, BlowupReport};
use crate::parabolic::{energy_inequality_check, picard_chart_solve, HeatFlow, Trajectory};

/// Result of checking a scenario without running it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub config_sha256: String,
    pub compatibility: Compatibility,
    pub compatible: bool,
    /// Flux residual of the initial field, for flow runs.
    pub initial_flux: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub kind: RunKind,
    pub measured: Measured,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: Scenario,
    pub outputs: Vec<OutputFile>,
    pub measured: Measured,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub field: CoupledField,
    pub summary: Summary,
    pub manifest: Manifest,
}

pub fn validate(scenario: &Scenario) -> Result<ValidationReport> {
    let problem = scenario.problem()?;
    let compatibility = problem.compatibility();
    let compatible = problem.check_compatible().is_ok();
    let mut warnings = Vec::new();
    for v in &compatibility.violations {
        warnings.push(format!(
            "matching violated at edge node {} ({:?}) by {:.3e}",
            v.node, v.position, v.magnitude
        ));
    }
    let mut initial_flux = None;
    if compatible && scenario.kind == RunKind::Flow {
        let u0 = initial_field(scenario, &problem)?;
        let flux = flux_residual(&problem.coupling, &u0).max_norm();
        if flux > scenario.flow.flux_tol {
            warnings.push(format!(
                "initial data violate flux compatibility: residual {flux:.3e} > {:.3e}",
                scenario.flow.flux_tol
            ));
        }
        initial_flux = Some(flux);
    }
    Ok(ValidationReport {
        name: scenario.name.clone(),
        config_sha256: scenario.digest(),
        compatibility,
        compatible,
        initial_flux,
        warnings,
    })
}

/// The starting field: initializer or closed form, then the seeded perturbation.
pub fn initial_field(scenario: &Scenario, problem: &AdmissibleProblem) -> Result<CoupledField> {
    let mut u = match scenario.initial.source {
        InitialSource::Initializer => initialize_admissible(problem)?,
        InitialSource::ClosedForm => {
            problem.check_compatible()?;
            problem.boundary.field(problem.grid)
        }
    };
    let amp = scenario.initial.perturbation;
    if amp > 0.0 {
        perturb(problem, &mut u, amp, scenario.seed)?;
    }
    Ok(u)
}

fn perturb(problem: &AdmissibleProblem, u: &mut CoupledField, amp: f64, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coupling = &problem.coupling;
    for s in Side::BOTH {
        let sg = problem.grid.side(s);
        let pair = match s {
            Side::Plus => &coupling.plus,
            Side::Minus => &coupling.minus,
        };
        for i in 0..sg.len() {
            let kind = sg.kind(i);
            if kind.is_fixed() || (s == Side::Minus && kind.on_interface()) {
                continue;
            }
            let kick = Vec3::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp));
            let m = if kind.on_interface() { pair.inner.as_ref() } else { pair.ambient.as_ref() };
            let mut p = u.side(s)[i] + kick;
            if m.ambient_dim() == 2 {
                p.z = 0.0;
            }
            u.side_mut(s)[i] = project_to_manifold(&p, m).map_err(|e| Error::ProjectionFailure {
                side: s.tag(),
                node: i,
                source: Box::new(e),
            })?;
        }
    }
    let sg = problem.grid.side(Side::Plus);
    for i in sg.interface_nodes() {
        if !sg.kind(i).is_fixed() {
            let image = coupling.map.forward(&u.side(Side::Plus)[i]);
            u.side_mut(Side::Minus)[i] = image;
        }
    }
    Ok(())
}

fn picard_chart(scenario: &Scenario, problem: &AdmissibleProblem, u0: &CoupledField) -> Result<Box<dyn Chart>> {
    let sg = problem.grid.side(Side::Plus);
    let layer = sg.interface_nodes();
    let mean = layer.iter().map(|&i| u0.side(Side::Plus)[i]).sum::<Vec3>() / layer.len().max(1) as f64;
    let center = project_to_manifold(&mean, problem.coupling.plus.inner.as_ref())?;
    let target = &scenario.targets.plus;
    let scale = scenario.picard.chart_scale;
    match target.kind {
        TargetKind::Circle => Ok(Box::new(AngleChart::new(center.y.atan2(center.x), target.radius, scale))),
        TargetKind::Sphere => Ok(Box::new(GraphChart::sphere(&center, target.radius, scale)?)),
        TargetKind::Torus => Err(Error::config("targets.plus.kind", "chart iteration supports circles and spheres")),
    }
}

/// Runs a scenario and writes every output into `out`.
pub fn run(scenario: &Scenario, out: &Path) -> Result<RunOutcome> {
    let problem = scenario.problem()?;
    let mut dir = OutputDir::create(out, None)?;
    let mut measured = Measured::new();
    let mut warnings = Vec::new();
    let u0 = initial_field(scenario, &problem)?;
    measured.insert("initial_energy".into(), discrete_energy(&u0));
    let mut trajectory = None;

    let field = match scenario.kind {
        RunKind::Diagnose => u0,
        RunKind::Minimize => {
            let result = minimize(&problem, &u0, &scenario.minimize)?;
            let ledger = &result.ledger;
            let rows = ledger.records.iter().map(|r| {
                vec![r.iteration as f64, r.energy, r.step, r.gradient, r.constraint]
            });
            dir.write(
                "descent.csv",
                table_csv(&["iteration", "energy", "step", "gradient", "constraint"], rows).as_bytes(),
            )?;
            measured.insert("iterations".into(), ledger.records.len() as f64);
            measured.insert("converged".into(), f64::from(u8::from(ledger.converged)));
            measured.insert("monotone".into(), f64::from(u8::from(ledger.is_monotone())));
            if !ledger.converged {
                warnings.push("minimization stopped before reaching its tolerances".into());
            }
            result.field
        }
        RunKind::Flow => {
            let flow = HeatFlow::new(&problem, scenario.flow)?;
            let result = flow.run(&u0)?;
            let rows = result
                .ledger
                .samples
                .iter()
                .map(|s| vec![s.t, s.energy, s.dissipation, s.slack]);
            dir.write(
                "ledger.csv",
                table_csv(&["t", "energy", "dissipation", "slack"], rows).as_bytes(),
            )?;
            let check = energy_inequality_check(&result.ledger, scenario.flow.energy_constant, 1e-10);
            measured.insert("initial_flux".into(), result.initial_flux);
            measured.insert("min_slack".into(), check.min_slack);
            measured.insert("identity_defect".into(), check.identity_defect);
            measured.insert("max_step_increase".into(), check.max_step_increase);
            if result.flux_flagged {
                warnings.push(format!(
                    "initial data violate flux compatibility: residual {:.3e}",
                    result.initial_flux
                ));
            }
            if !check.ok {
                warnings.push(format!("energy inequality slack {:.3e} below tolerance", check.min_slack));
            }
            let last = result.trajectory.last().expect("a flow records its initial frame").field.clone();
            measured.insert("final_time".into(), result.trajectory.last().map_or(0.0, |f| f.t));
            trajectory = Some(result.trajectory);
            last
        }
        RunKind::Picard => {
            let chart = picard_chart(scenario, &problem, &u0)?;
            let result = picard_chart_solve(&problem, &u0, chart.as_ref(), &scenario.picard)?;
            let rows = result.differences.iter().enumerate().map(|(k, d)| {
                let ratio = if k == 0 { f64::NAN } else { result.ratios.get(k - 1).copied().unwrap_or(f64::NAN) };
                vec![(k + 1) as f64, *d, ratio]
            });
            dir.write("picard.csv", table_csv(&["sweep", "difference", "ratio"], rows).as_bytes())?;
            measured.insert("contraction".into(), result.contraction);
            measured.insert("sweeps".into(), result.sweeps as f64);
            measured.insert("residual".into(), result.residual);
            measured.insert("converged".into(), f64::from(u8::from(result.converged)));
            if !result.converged {
                warnings.push("Picard iteration stopped before reaching its tolerance".into());
            }
            result.trajectory.last().expect("at least one time level").field.clone()
        }
    };

    for s in Side::BOTH {
        dir.write(&field_file_name(s), &field_csv(&field, s)?)?;
    }
    record_field(&problem, &field, &mut measured);
    diagnostics(scenario, &problem, &field, trajectory.as_ref(), &mut dir, &mut measured, &mut warnings)?;

    let summary = Summary {
        name: scenario.name.clone(),
        kind: scenario.kind,
        measured: measured.clone(),
        warnings,
    };
    dir.write_json("summary.json", &summary)?;
    let manifest = Manifest {
        name: scenario.name.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: scenario.seed,
        config_sha256: scenario.digest(),
        config: scenario.clone(),
        outputs: dir.finish(),
        measured,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    let path = out.join("manifest.json");
    std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(RunOutcome {
        field,
        summary,
        manifest,
    })
}

/// Re-reads the fields saved by [`run`] and writes diagnostics into `out/diagnostics`.
pub fn diagnose(scenario: &Scenario, out: &Path) -> Result<Summary> {
    let problem = scenario.problem()?;
    let field = read_field(out, problem.grid)?;
    let mut dir = OutputDir::create(out, Some("diagnostics"))?;
    let mut measured = Measured::new();
    let mut warnings = Vec::new();
    record_field(&problem, &field, &mut measured);
    if !scenario.diagnostics.struwe_radii.is_empty() {
        warnings.push("the Struwe quantity needs a trajectory and is only computed by `run`".into());
    }
    diagnostics(scenario, &problem, &field, None, &mut dir, &mut measured, &mut warnings)?;
    let summary = Summary {
        name: scenario.name.clone(),
        kind: RunKind::Diagnose,
        measured,
        warnings,
    };
    dir.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn record_field(problem: &AdmissibleProblem, u: &CoupledField, measured: &mut Measured) {
    measured.insert("energy".into(), discrete_energy(u));
    measured.insert("membership".into(), u.membership(&problem.coupling).max());
    measured.insert("matching".into(), u.matching_residual(&problem.coupling));
    measured.insert("flux_residual".into(), flux_residual(&problem.coupling, u).max_norm());
}

fn diagnostics(
    scenario: &Scenario,
    problem: &AdmissibleProblem,
    u: &CoupledField,
    trajectory: Option<&Trajectory>,
    dir: &mut OutputDir,
    measured: &mut Measured,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let spec = &scenario.diagnostics;
    let coupling = &problem.coupling;
    for (k, x0) in spec.centers.iter().enumerate() {
        if !spec.radii.is_empty() {
            let curve = static_monotonicity_curve(coupling, u, x0, &spec.radii, spec.constant)?;
            dir.write(&format!("monotonicity_{k}.csv"), curve.to_csv().as_bytes())?;
            measured.insert(format!("monotonicity_{k}_max"), curve.max_value());
            measured.insert(format!("monotonicity_{k}_violation"), curve.violation);
            if curve.violation > 0.0 {
                warnings.push(format!("monotonicity curve {k} decreases by {:.3e}", curve.violation));
            }
        }
        if !spec.blowup_scales.is_empty() {
            let report = blowup_consistency_check_with(coupling, u, x0, &spec.blowup_scales, spec.eps0)?;
            dir.write(&format!("blowup_{k}.csv"), blowup_csv(&report).as_bytes())?;
            if let Some(c) = report.scales.last().and_then(|s| s.closeness) {
                measured.insert(format!("blowup_{k}_closeness"), c);
            }
        }
        if let (false, Some(traj)) = (spec.struwe_radii.is_empty(), trajectory) {
            let t0 = spec.struwe_t0.unwrap_or_else(|| traj.last().map_or(0.0, |f| f.t));
            let q = struwe_curve(coupling, traj, x0, t0, &spec.struwe_radii)?;
            dir.write(&format!("struwe_{k}.csv"), q.to_csv().as_bytes())?;
            measured.insert(format!("struwe_{k}_violation"), q.violation);
            measured.insert(format!("struwe_{k}_mass_defect"), q.mass_defect);
        }
    }
    if let Some(r) = spec.decay_radius {
        let rows = spec
            .centers
            .iter()
            .map(|x0| {
                let ratio = energy_decay_ratio(coupling, u, x0, r, spec.theta)?;
                Ok(vec![x0[0], x0[1], x0[2], r, spec.theta, ratio])
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, row) in rows.iter().enumerate() {
            measured.insert(format!("decay_{k}"), row[5]);
        }
        dir.write("decay.csv", table_csv(&["x0", "x1", "x2", "r", "theta", "ratio"], rows).as_bytes())?;
    }
    for (j, &r) in spec.detect_scales.iter().enumerate() {
        let map = singular_set_detect(coupling, u, r, spec.eps0)?;
        dir.write(&format!("regularity_{j}.csv"), map.to_csv().as_bytes())?;
        measured.insert(format!("regularity_{j}_flagged"), map.flagged_count() as f64);
    }
    Ok(())
}

fn blowup_csv(report: &BlowupReport) -> String {
    let rows = report.scales.iter().map(|s| {
        let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
        vec![
            s.r,
            s.energy,
            f64::from(u8::from(s.below_threshold)),
            opt(s.closeness),
            opt(s.trace.as_ref().map(|t| t.value)),
            opt(s.trace.as_ref().map(|t| t.normal)),
            opt(s.trace.as_ref().map(|t| t.flux)),
        ]
    });
    table_csv(&["r", "energy", "below_threshold", "closeness", "trace_value", "trace_normal", "trace_flux"], rows)
}
