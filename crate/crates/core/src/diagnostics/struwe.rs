use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::density::EdgeDensity;
use super::monotonicity::{check_on_interface, check_radii};
use crate::error::{Error, Result};
use crate::geometry::Coupling;
use crate::grid::{discrete_gradient, CoupledField, Side};
use crate::parabolic::Trajectory;

/// Backward heat kernel `(4πs)^{−n/2} e^{−|x−x₀|²/4s}` with `s = t₀ − t`.
pub fn backward_heat_kernel(dim: usize, x0: &[f64; 3], s: f64, x: &[f64; 3]) -> f64 {
    let r2: f64 = (0..dim).map(|a| (x[a] - x0[a]).powi(2)).sum();
    (4.0 * PI * s).powf(-(dim as f64) / 2.0) * (-r2 / (4.0 * s)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StruweQuantity {
    pub center: [f64; 3],
    pub t0: f64,
    pub radii: Vec<f64>,
    /// `E(R) = R² ∫|∇u|² G` at the slice nearest `t₀ − R²`.
    pub values: Vec<f64>,
    pub slice_times: Vec<f64>,
    /// Discrete mass `Σ m G` of the kernel at each radius.
    pub kernel_mass: Vec<f64>,
    /// `max |1 − Σ m G|`.
    pub mass_defect: f64,
    /// `(E(R_{j+1}) − E(R_j))/(R_{j+1} − R_j)`.
    pub derivative: Vec<f64>,
    /// `R⁻¹ ∫|(x−x₀)·∇u − 2R²∂ₜu|² G`, where a previous slice is available.
    pub rhs: Vec<Option<f64>>,
    pub violation: f64,
}

impl StruweQuantity {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,value,t,mass,rhs,violation\n");
        for j in 0..self.radii.len() {
            let drop = if j == 0 { 0.0 } else { (self.values[j - 1] - self.values[j]).max(0.0) };
            let rhs = self.rhs[j].map_or(String::new(), |v| format!("{v:.17e}"));
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{rhs},{drop:.17e}\n",
                self.radii[j], self.values[j], self.slice_times[j], self.kernel_mass[j]
            ));
        }
        out
    }
}

fn kernel_mass(u: &CoupledField, x0: &[f64; 3], s: f64) -> f64 {
    let grid = u.grid();
    Side::BOTH
        .iter()
        .map(|&side| {
            let sg = grid.side(side);
            (0..sg.len())
                .map(|p| sg.mass(p) * backward_heat_kernel(sg.dim, x0, s, &sg.position(p)))
                .sum::<f64>()
        })
        .sum()
}

fn scaling_defect(u: &CoupledField, prev: &CoupledField, dt: f64, x0: &[f64; 3], r: f64) -> f64 {
    let grid = u.grid();
    let s = r * r;
    let mut total = 0.0;
    for side in Side::BOTH {
        let sg = grid.side(side);
        let grad = discrete_gradient(u, side);
        let (now, before) = (u.side(side), prev.side(side));
        for (p, g) in grad.iter().enumerate() {
            let x = sg.position(p);
            let mut v = (now[p] - before[p]) * (-2.0 * s / dt);
            for a in 0..sg.dim {
                v += g[a] * (x[a] - x0[a]);
            }
            total += sg.mass(p) * backward_heat_kernel(sg.dim, x0, s, &x) * v.norm_squared();
        }
    }
    total / r
}

/// Struwe's quantity along a flow trajectory about `(x₀, t₀)`.
pub fn struwe_curve(
    coupling: &Coupling,
    traj: &Trajectory,
    x0: &[f64; 3],
    t0: f64,
    radii: &[f64],
) -> Result<StruweQuantity> {
    check_radii(radii)?;
    let first = traj
        .frames
        .first()
        .ok_or_else(|| Error::invalid("the trajectory has no frames"))?;
    check_on_interface(&first.field, x0)?;
    let dt_frames = traj
        .frames
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .fold(0.0, f64::max);
    let earliest = traj.first_time();
    let r_max = radii[radii.len() - 1];
    let needed = t0 - r_max * r_max;
    if needed < earliest - 0.5 * dt_frames - 1e-12 {
        return Err(Error::InsufficientHistory { needed, earliest });
    }
    let mut values = Vec::with_capacity(radii.len());
    let mut slice_times = Vec::with_capacity(radii.len());
    let mut masses = Vec::with_capacity(radii.len());
    let mut rhs = Vec::with_capacity(radii.len());
    for &r in radii {
        let s = r * r;
        let k = nearest_index(traj, t0 - s);
        let frame = &traj.frames[k];
        let dim = frame.field.grid().dim();
        let density = EdgeDensity::new(coupling, &frame.field);
        values.push(s * density.weighted(|x| backward_heat_kernel(dim, x0, s, x)));
        slice_times.push(frame.t);
        masses.push(kernel_mass(&frame.field, x0, s));
        rhs.push((k > 0).then(|| {
            let prev = &traj.frames[k - 1];
            scaling_defect(&frame.field, &prev.field, frame.t - prev.t, x0, r)
        }));
    }
    let derivative = radii
        .windows(2)
        .zip(values.windows(2))
        .map(|(r, e)| (e[1] - e[0]) / (r[1] - r[0]))
        .collect();
    let violation = values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let mass_defect = masses.iter().map(|m| (1.0 - m).abs()).fold(0.0, f64::max);
    Ok(StruweQuantity {
        center: *x0,
        t0,
        radii: radii.to_vec(),
        values,
        slice_times,
        kernel_mass: masses,
        mass_defect,
        derivative,
        rhs,
        violation,
    })
}

fn nearest_index(traj: &Trajectory, t: f64) -> usize {
    let mut best = 0;
    for (k, f) in traj.frames.iter().enumerate() {
        if (f.t - t).abs() < (traj.frames[best].t - t).abs() {
            best = k;
        }
    }
    best
}
