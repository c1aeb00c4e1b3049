use serde::{Deserialize, Serialize};

use super::density::{ball_weight, EdgeDensity};
use crate::error::{Error, Result};
use crate::geometry::Coupling;
use crate::grid::{check_ball, discrete_gradient, dist, CoupledField, Side};

/// Samples of `Θ(r) = e^{Cr} r^{2−n} ∫_{B_r(x₀)}|∇u|²` over both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCurve {
    pub center: [f64; 3],
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub constant: f64,
    /// `∫_{B_{r_{j+1}}∖B_{r_j}} |x−x₀|^{2−n} |∂u/∂ρ|²`, one entry per consecutive pair.
    pub deficits: Vec<f64>,
    /// `max(0, max_j Θ(r_j) − Θ(r_{j+1}))`.
    pub violation: f64,
}

impl MonotonicityCurve {
    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Rows `r, value, deficit, violation`, the deficit of a row covering `(r_{j−1}, r_j)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value,deficit,violation\n");
        for (j, (r, v)) in self.radii.iter().zip(&self.values).enumerate() {
            let deficit = if j == 0 { 0.0 } else { self.deficits[j - 1] };
            let drop = if j == 0 { 0.0 } else { (self.values[j - 1] - v).max(0.0) };
            out.push_str(&format!("{r:.17e},{v:.17e},{deficit:.17e},{drop:.17e}\n"));
        }
        out
    }
}

pub(crate) fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::invalid("at least one radius is required"));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be positive and strictly increasing"));
    }
    Ok(())
}

pub(crate) fn check_on_interface(u: &CoupledField, x0: &[f64; 3]) -> Result<()> {
    let n = u.grid().dim() - 1;
    if x0[n].abs() > 1e-12 {
        return Err(Error::invalid("the center must lie on the interface"));
    }
    Ok(())
}

/// `Θ̃(r) = r^{2−n} ∫_{B_r(x₀)}|∇u|²`.
pub fn renormalized_energy(coupling: &Coupling, u: &CoupledField, x0: &[f64; 3], r: f64) -> Result<f64> {
    check_ball(u.grid(), x0, r)?;
    let n = u.grid().dim() as i32;
    Ok(r.powi(2 - n) * EdgeDensity::new(coupling, u).ball(x0, r))
}

fn radial_deficit(u: &CoupledField, x0: &[f64; 3], r1: f64, r2: f64) -> f64 {
    let grid = u.grid();
    let n = grid.dim();
    let h = grid.spacing();
    let mut total = 0.0;
    for s in Side::BOTH {
        let sg = grid.side(s);
        let grad = discrete_gradient(u, s);
        for (p, g) in grad.iter().enumerate() {
            let x = sg.position(p);
            let rho = dist(&x, x0);
            if rho < 0.5 * h {
                continue;
            }
            let w = ball_weight(r2, rho, h) - ball_weight(r1, rho, h);
            if w <= 0.0 {
                continue;
            }
            let mut dr = g[0] * 0.0;
            for a in 0..n {
                dr += g[a] * ((x[a] - x0[a]) / rho);
            }
            total += sg.mass(p) * w * rho.powi(2 - n as i32) * dr.norm_squared();
        }
    }
    total
}

/// Boundary monotonicity curve at `x₀ ∈ Γ` with distortion constant `c`.
pub fn static_monotonicity_curve(
    coupling: &Coupling,
    u: &CoupledField,
    x0: &[f64; 3],
    radii: &[f64],
    c: f64,
) -> Result<MonotonicityCurve> {
    check_radii(radii)?;
    check_on_interface(u, x0)?;
    for &r in radii {
        check_ball(u.grid(), x0, r)?;
    }
    let density = EdgeDensity::new(coupling, u);
    let n = u.grid().dim() as i32;
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| (c * r).exp() * r.powi(2 - n) * density.ball(x0, r))
        .collect();
    let deficits = radii
        .windows(2)
        .map(|w| radial_deficit(u, x0, w[0], w[1]))
        .collect();
    let violation = values
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0, f64::max);
    Ok(MonotonicityCurve {
        center: *x0,
        radii: radii.to_vec(),
        values,
        constant: c,
        deficits,
        violation,
    })
}

/// `Θ̃(θr)/Θ̃(r)`, and `0` when both vanish.
pub fn energy_decay_ratio(coupling: &Coupling, u: &CoupledField, x0: &[f64; 3], r: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::invalid("θ must lie in (0, 1)"));
    }
    check_ball(u.grid(), x0, r)?;
    let density = EdgeDensity::new(coupling, u);
    let n = u.grid().dim() as i32;
    let outer = r.powi(2 - n) * density.ball(x0, r);
    let inner = (theta * r).powi(2 - n) * density.ball(x0, theta * r);
    Ok(if outer == 0.0 { 0.0 } else { inner / outer })
}
