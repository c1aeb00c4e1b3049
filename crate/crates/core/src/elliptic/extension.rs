use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::init::project_nodes;
use crate::error::{Error, Result};
use crate::geometry::{distance_to, project_to_manifold, Coupling, Vec3};
use crate::grid::{CoupledField, Side, SideGrid, SplitGrid};
use crate::linalg::harmonic_fill;

/// Constants of the small-oscillation hypothesis `D·W ≤ δ²εᵠ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtensionParams {
    pub epsilon: f64,
    pub q: f64,
    pub delta: f64,
}

impl Default for ExtensionParams {
    fn default() -> Self {
        ExtensionParams {
            epsilon: 0.1,
            q: 2.0,
            delta: 0.05,
        }
    }
}

impl ExtensionParams {
    pub fn threshold(&self) -> f64 {
        self.delta * self.delta * self.epsilon.powf(self.q)
    }
}

/// Result of the two-dimensional interpolation extension, per side `[plus, minus]`.
#[derive(Clone, Debug)]
pub struct DiscExtension {
    pub field: CoupledField,
    /// `∫_{B₁±}|∇ω±|²`.
    pub energy: [f64; 2],
    /// `∫_{S₁±}|∇_tan η±|²`.
    pub trace_energy: [f64; 2],
    /// `∫_{S₁±}|η± − p±|² + Σ_{∂Γ₁}|η± − p±|²`.
    pub deviation: [f64; 2],
    pub oscillation: [f64; 2],
    pub threshold: f64,
    /// Smallest `C` with `E ≤ ε·D + C ε^{-q}·W`.
    pub constant: [f64; 2],
    /// `max |ω⁻ − Φ⁺(ω⁺)|` over interface nodes of the disc.
    pub matching: f64,
    /// `max dist(ω⁺, M⁺)` over interface nodes of the disc.
    pub slice: f64,
}

const TRACE_SAMPLES: usize = 4096;

fn half_circle_stats(eta: &dyn Fn(f64) -> Vec3, from: f64) -> (f64, f64) {
    let d_theta = PI / TRACE_SAMPLES as f64;
    let samples: Vec<Vec3> = (0..=TRACE_SAMPLES).map(|j| eta(from + j as f64 * d_theta)).collect();
    let energy: f64 = samples
        .windows(2)
        .map(|w| (w[1] - w[0]).norm_squared() / d_theta)
        .sum();
    let mids: Vec<Vec3> = samples.windows(2).map(|w| (w[0] + w[1]) * 0.5).collect();
    let p = mids.iter().sum::<Vec3>() / mids.len() as f64;
    let interior: f64 = mids.iter().map(|v| (v - p).norm_squared() * d_theta).sum();
    let ends = (samples[0] - p).norm_squared() + (samples[TRACE_SAMPLES] - p).norm_squared();
    (energy, interior + ends)
}

fn angle_on_side(s: Side, x: &[f64; 3]) -> f64 {
    let (a, b) = (x[0], x[1]);
    match s {
        Side::Plus => b.abs().atan2(a),
        Side::Minus => -(b.abs().atan2(a)),
    }
}

fn energy_where(sg: &SideGrid, values: &[Vec3], inside: impl Fn(&[f64; 3]) -> bool) -> f64 {
    sg.edges()
        .into_iter()
        .filter(|&(a, b, _)| {
            let (pa, pb) = (sg.position(a), sg.position(b));
            inside(&[(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, (pa[2] + pb[2]) / 2.0])
        })
        .map(|(a, b, w)| w * (values[a] - values[b]).norm_squared())
        .sum()
}

/// Extension of half-circle traces `η±` into the unit disc with `Γ₁ = {x₂ = 0}`.
///
/// `eta_plus` is parametrized by the angle on `[0, π]` and `eta_minus` on `[−π, 0]`. The
/// diameter is filled by linear interpolation of `η⁺(±1, 0)` projected to `M⁺`, each half-disc
/// harmonically, and the result projected to `N±`; the minus diameter is the image under `Φ⁺`.
/// Nodes outside the disc carry `η±(x/|x|)`.
pub fn interpolation_extension_2d(
    coupling: &Coupling,
    eta_plus: &dyn Fn(f64) -> Vec3,
    eta_minus: &dyn Fn(f64) -> Vec3,
    h: f64,
    params: &ExtensionParams,
) -> Result<DiscExtension> {
    let tol = 1e-8;
    for (theta_p, theta_m) in [(0.0, 0.0), (PI, -PI)] {
        let a = eta_plus(theta_p);
        if distance_to(&a, coupling.plus.inner.as_ref()) > tol {
            return Err(Error::invalid("η⁺ must end on M⁺"));
        }
        if (eta_minus(theta_m) - coupling.map.forward(&a)).norm() > tol {
            return Err(Error::invalid("η⁻ must equal Φ⁺(η⁺) at the ends of the diameter"));
        }
    }
    let stats = [half_circle_stats(eta_plus, 0.0), half_circle_stats(eta_minus, -PI)];
    let threshold = params.threshold();
    let oscillation = stats.map(|(d, w)| d * w);
    for &o in &oscillation {
        if o > threshold {
            return Err(Error::OscillationTooLarge { measured: o, threshold });
        }
    }

    let grid = SplitGrid::cube(2, 1.0, h)?;
    let in_disc = |x: &[f64; 3]| x[0] * x[0] + x[1] * x[1] < 1.0 - 1e-12;
    let left = eta_plus(PI);
    let right = eta_plus(0.0);
    let mut field = CoupledField::constant(grid, Vec3::zeros(), Vec3::zeros());
    for s in Side::BOTH {
        let sg = grid.side(s);
        let eta: &dyn Fn(f64) -> Vec3 = match s {
            Side::Plus => eta_plus,
            Side::Minus => eta_minus,
        };
        let target = match s {
            Side::Plus => coupling.plus.ambient.as_ref(),
            Side::Minus => coupling.minus.ambient.as_ref(),
        };
        let mut fixed = vec![false; sg.len()];
        let values = field.side_mut(s);
        for i in 0..sg.len() {
            let x = sg.position(i);
            if !in_disc(&x) {
                values[i] = eta(angle_on_side(s, &x));
                fixed[i] = true;
            } else if sg.multi(i)[1] == 0 {
                let t = x[0];
                let w = left * ((1.0 - t) / 2.0) + right * ((1.0 + t) / 2.0);
                let m = project_to_manifold(&w, coupling.plus.inner.as_ref())?;
                values[i] = match s {
                    Side::Plus => m,
                    Side::Minus => coupling.map.forward(&m),
                };
                fixed[i] = true;
            }
        }
        harmonic_fill(&sg.adjacency(), &fixed, values)?;
        project_nodes(values, (0..sg.len()).filter(|&i| !fixed[i]), target, s)?;
    }

    let plus_grid = grid.side(Side::Plus);
    let mut matching: f64 = 0.0;
    let mut slice: f64 = 0.0;
    for i in plus_grid.interface_nodes() {
        if !in_disc(&plus_grid.position(i)) {
            continue;
        }
        let a = field.value(Side::Plus, i);
        matching = matching.max((field.value(Side::Minus, i) - coupling.map.forward(&a)).norm());
        slice = slice.max(distance_to(&a, coupling.plus.inner.as_ref()));
    }
    let energy = Side::BOTH.map(|s| energy_where(&grid.side(s), field.side(s), in_disc));
    let mut constant = [0.0; 2];
    for k in 0..2 {
        let (d, w) = stats[k];
        let excess = (energy[k] - params.epsilon * d).max(0.0);
        constant[k] = if excess == 0.0 {
            0.0
        } else if w > 0.0 {
            excess * params.epsilon.powf(params.q) / w
        } else {
            f64::INFINITY
        };
    }
    Ok(DiscExtension {
        field,
        energy,
        trace_energy: stats.map(|s| s.0),
        deviation: stats.map(|s| s.1),
        oscillation,
        threshold,
        constant,
        matching,
        slice,
    })
}

/// Boundary data on the half cylinders `C±_δ = B±_δ × [−δ, δ]`.
///
/// Coordinates are `(x₁, t, x₃)` with the cylinder axis along `x₂ = t` and `Γ = {x₃ = 0}`.
pub struct CylinderTraces<'a> {
    /// `u±(x₁, x₃)` on the end face `t = ±δ`; the second argument is the sign of `t`.
    pub faces: &'a dyn Fn(Side, f64, [f64; 2]) -> Vec3,
    /// `u₀±(φ)` on the lateral half circle, constant in `t`; `φ ∈ [0, π]` on the plus side
    /// and `[−π, 0]` on the minus side.
    pub lateral: &'a dyn Fn(Side, f64) -> Vec3,
}

#[derive(Clone, Debug)]
pub struct CylinderExtension {
    pub field: CoupledField,
    pub delta: f64,
    /// `∫_{C±}|∇ū±|²`.
    pub energy: [f64; 2],
    /// `δ[E_δ(u₁) + E_δ(u₂) + δE(u₀)]`.
    pub bound: [f64; 2],
    /// `energy / bound`.
    pub constant: [f64; 2],
    pub matching: f64,
    pub slice: f64,
}

const FACE_RINGS: usize = 200;

fn face_energy(f: &dyn Fn([f64; 2]) -> Vec3, delta: f64, sign: f64) -> f64 {
    let dr = delta / FACE_RINGS as f64;
    let dphi = PI / FACE_RINGS as f64;
    let eps = 1e-6 * delta;
    let mut total = 0.0;
    for i in 0..FACE_RINGS {
        let r = (i as f64 + 0.5) * dr;
        for j in 0..FACE_RINGS {
            let phi = sign * (j as f64 + 0.5) * dphi;
            let (x, z) = (r * phi.cos(), r * phi.sin());
            let gx = (f([x + eps, z]) - f([x - eps, z])) / (2.0 * eps);
            let gz = (f([x, z + eps]) - f([x, z - eps])) / (2.0 * eps);
            total += (gx.norm_squared() + gz.norm_squared()) * r * dr * dphi;
        }
    }
    total
}

fn arc_energy(f: &dyn Fn(f64) -> Vec3, delta: f64, sign: f64) -> f64 {
    let count = 4 * FACE_RINGS;
    let dphi = PI / count as f64;
    (0..count)
        .map(|j| {
            let a = f(sign * j as f64 * dphi);
            let b = f(sign * (j + 1) as f64 * dphi);
            (b - a).norm_squared() / (dphi * delta)
        })
        .sum()
}

/// Degree-zero extension of cylinder boundary data by radial projection from the center.
///
/// `cells` is the number of grid cells across `δ`.
pub fn homogeneous_cylinder_extension(
    coupling: &Coupling,
    traces: &CylinderTraces,
    delta: f64,
    cells: usize,
) -> Result<CylinderExtension> {
    if !(delta > 0.0) || cells < 2 {
        return Err(Error::invalid("cylinder needs δ > 0 and at least two cells"));
    }
    let h = delta / cells as f64;
    let grid = SplitGrid::cube(3, delta, h)?;
    let tol = 1e-12 * delta;
    let boundary_value = |s: Side, x: &[f64; 3]| {
        let rho = x[0].hypot(x[2]);
        let mu = (rho / delta).max(x[1].abs() / delta);
        if mu < 1e-14 {
            return (traces.lateral)(s, 0.0);
        }
        let y = [x[0] / mu, x[1] / mu, x[2] / mu];
        if y[1].abs() >= delta - tol {
            (traces.faces)(s, y[1].signum(), [y[0], y[2]])
        } else {
            let phi = match s {
                Side::Plus => y[2].abs().atan2(y[0]),
                Side::Minus => -(y[2].abs().atan2(y[0])),
            };
            (traces.lateral)(s, phi)
        }
    };
    let field = CoupledField::from_fn(grid, boundary_value);
    let inside = |x: &[f64; 3]| x[0].hypot(x[2]) < delta && x[1].abs() < delta;
    let energy = Side::BOTH.map(|s| energy_where(&grid.side(s), field.side(s), inside));
    let bound = Side::BOTH.map(|s| {
        let sign = s.sign();
        let top = |p: [f64; 2]| (traces.faces)(s, 1.0, p);
        let bottom = |p: [f64; 2]| (traces.faces)(s, -1.0, p);
        let lateral = |phi: f64| (traces.lateral)(s, phi);
        delta
            * (face_energy(&top, delta, sign)
                + face_energy(&bottom, delta, sign)
                + delta * arc_energy(&lateral, delta, sign))
    });
    let constant = [0, 1].map(|k| if bound[k] > 0.0 { energy[k] / bound[k] } else { 0.0 });
    let sg = grid.side(Side::Plus);
    let mut matching: f64 = 0.0;
    let mut slice: f64 = 0.0;
    for i in sg.interface_nodes() {
        let a = field.value(Side::Plus, i);
        matching = matching.max((field.value(Side::Minus, i) - coupling.map.forward(&a)).norm());
        slice = slice.max(distance_to(&a, coupling.plus.inner.as_ref()));
    }
    Ok(CylinderExtension {
        field,
        delta,
        energy,
        bound,
        constant,
        matching,
        slice,
    })
}
