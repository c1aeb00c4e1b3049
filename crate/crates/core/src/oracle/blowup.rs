use serde::{Deserialize, Serialize};

use super::transmission::{
    reflection_identities, solve_coupled_harmonic, trace_residuals, LinearTransmissionProblem, NeumannCombination,
    TraceReport,
};
use crate::diagnostics::{renormalized_energy, DEFAULT_EPS0};
use crate::error::{Error, Result};
use crate::geometry::{project_to_manifold, Coupling, Vec3};
use crate::grid::{check_ball, interpolate, CoupledField, Side};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub r: f64,
    /// `Θ̃(r) = r^{2−n}∫_{B_r}|∇u|²`.
    pub energy: f64,
    pub below_threshold: bool,
    /// `a⁺ = Π_{M⁺}(mean of u⁺ over Γ ∩ B_r)`, absent when the projection is undefined.
    pub base_point: Option<[f64; 3]>,
    /// `max |v − V|` over the unit half balls, `V` the linear solution with the same sphere data.
    pub closeness: Option<f64>,
    /// Linearized transmission residuals of the rescaled pair itself.
    pub trace: Option<TraceReport>,
    pub neumann: Option<NeumannCombination>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub center: [f64; 3],
    pub eps0: f64,
    pub scales: Vec<ScaleReport>,
    /// `Θ̃(r_{j+1})/Θ̃(r_j)`, and `0` when both vanish.
    pub decay_ratios: Vec<f64>,
}

/// Rescales `u` about `x₀ ∈ Γ` at each scale, `v± = (u±(x₀ + r·) − a±)/ε` with `ε² = Θ̃(r)`,
/// and compares with the coupled linear problem in the frozen frames at `a±`.
pub fn blowup_consistency_check(
    coupling: &Coupling,
    u: &CoupledField,
    x0: &[f64; 3],
    scales: &[f64],
) -> Result<BlowupReport> {
    blowup_consistency_check_with(coupling, u, x0, scales, DEFAULT_EPS0)
}

pub fn blowup_consistency_check_with(
    coupling: &Coupling,
    u: &CoupledField,
    x0: &[f64; 3],
    scales: &[f64],
    eps0: f64,
) -> Result<BlowupReport> {
    let grid = u.grid();
    let h = grid.spacing();
    let n = grid.dim() - 1;
    if x0[n].abs() > 1e-12 {
        return Err(Error::invalid("the center must lie on the interface"));
    }
    if scales.is_empty() {
        return Err(Error::invalid("at least one scale is required"));
    }
    let mut reports = Vec::with_capacity(scales.len());
    for &r in scales {
        if r < 4.0 * h * (1.0 - 1e-12) {
            return Err(Error::ScaleBelowGrid { radius: r, min: 4.0 * h });
        }
        check_ball(grid, x0, r)?;
        reports.push(one_scale(coupling, u, x0, r, eps0)?);
    }
    let decay_ratios = reports
        .windows(2)
        .map(|w| if w[0].energy == 0.0 { 0.0 } else { w[1].energy / w[0].energy })
        .collect();
    Ok(BlowupReport {
        center: *x0,
        eps0,
        scales: reports,
        decay_ratios,
    })
}

fn base_point(coupling: &Coupling, u: &CoupledField, x0: &[f64; 3], r: f64) -> Option<Vec3> {
    let sg = u.grid().side(Side::Plus);
    let values = u.side(Side::Plus);
    let mut sum = Vec3::zeros();
    let mut count = 0usize;
    for i in sg.interface_nodes() {
        if crate::grid::dist(&sg.position(i), x0) <= r + 1e-12 {
            sum += values[i];
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    project_to_manifold(&(sum / count as f64), coupling.plus.inner.as_ref()).ok()
}

fn one_scale(coupling: &Coupling, u: &CoupledField, x0: &[f64; 3], r: f64, eps0: f64) -> Result<ScaleReport> {
    let grid = u.grid();
    let dim = grid.dim();
    let energy = renormalized_energy(coupling, u, x0, r)?;
    let mut report = ScaleReport {
        r,
        energy,
        below_threshold: energy <= eps0 * eps0,
        base_point: None,
        closeness: None,
        trace: None,
        neumann: None,
    };
    let Some(a_plus) = base_point(coupling, u, x0, r) else {
        return Ok(report);
    };
    report.base_point = Some(a_plus.into());
    let a_minus = coupling.map.forward(&a_plus);
    let eps = energy.sqrt();
    let cells = (r / grid.spacing()).round() as usize;
    let h_unit = 1.0 / cells as f64;
    let (lower, upper) = (grid.lower().to_vec(), grid.upper().to_vec());
    let rescaled = |s: Side, y: &[f64; 3]| -> Vec3 {
        if eps == 0.0 {
            return Vec3::zeros();
        }
        let mut x = [0.0; 3];
        for a in 0..dim {
            x[a] = (x0[a] + r * y[a]).clamp(lower[a], upper[a]);
        }
        let value = interpolate(&grid.side(s), u.side(s), &x);
        let base = match s {
            Side::Plus => a_plus,
            Side::Minus => a_minus,
        };
        (value - base) / eps
    };
    let prob = LinearTransmissionProblem::at_base_point(dim, h_unit, coupling, &a_plus, rescaled)?;
    let frames = prob.frames.clone().expect("frames are set at a base point");
    let unit = prob.grid()?;
    let v = CoupledField::from_fn(unit, |s, y| frames.coordinates(s, &rescaled(s, y)));
    let sol = solve_coupled_harmonic(&prob)?;
    let closeness = Side::BOTH
        .iter()
        .flat_map(|&s| {
            let sg = unit.side(s);
            let (vs, ws) = (v.side(s), sol.field.side(s));
            (0..sg.len())
                .filter(move |&i| crate::grid::dist(&sg.position(i), &[0.0; 3]) < 1.0)
                .map(move |i| (vs[i] - ws[i]).norm())
        })
        .fold(0.0, f64::max);
    report.closeness = Some(closeness);
    report.trace = Some(trace_residuals(&prob, &v)?);
    report.neumann = reflection_identities(&prob, &sol)?.matched;
    Ok(report)
}
