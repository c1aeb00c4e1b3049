use std::ops::{Add, Mul, Sub};

use super::field::{Carrier, CoupledField, TraceField};
use super::split::{Adjacency, NodeKind, Side, SideGrid, SplitGrid};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Per-side operators shared by the solvers.
#[derive(Clone, Debug)]
pub struct SideOps {
    pub grid: SideGrid,
    pub edges: Vec<(usize, usize, f64)>,
    pub adjacency: Adjacency,
    pub masses: Vec<f64>,
    pub kinds: Vec<NodeKind>,
}

impl SideOps {
    pub fn new(grid: SideGrid) -> Self {
        let edges = grid.edges();
        SideOps {
            adjacency: Adjacency::from_edges(grid.len(), &edges),
            masses: grid.masses(),
            kinds: (0..grid.len()).map(|i| grid.kind(i)).collect(),
            edges,
            grid,
        }
    }

    /// `½ Σ_e w_e |u_a − u_b|²`, the Dirichlet energy of the piecewise multilinear interpolant
    /// with trapezoidal weights across each edge.
    pub fn energy(&self, u: &[Vec3]) -> f64 {
        0.5 * self
            .edges
            .iter()
            .map(|&(a, b, w)| w * (u[a] - u[b]).norm_squared())
            .sum::<f64>()
    }
}

/// Operators for both sides of a split grid.
#[derive(Clone, Debug)]
pub struct GridOperators {
    pub plus: SideOps,
    pub minus: SideOps,
}

impl GridOperators {
    pub fn new(grid: &SplitGrid) -> Self {
        GridOperators {
            plus: SideOps::new(grid.side(Side::Plus)),
            minus: SideOps::new(grid.side(Side::Minus)),
        }
    }

    pub fn side(&self, s: Side) -> &SideOps {
        match s {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn energy(&self, u: &CoupledField) -> f64 {
        self.plus.energy(u.side(Side::Plus)) + self.minus.energy(u.side(Side::Minus))
    }
}

/// Discrete Dirichlet energy `½∫_{Ω⁺}|∇u|² + ½∫_{Ω⁻}|∇u|²`.
pub fn discrete_energy(u: &CoupledField) -> f64 {
    GridOperators::new(u.grid()).energy(u)
}

fn axis_derivative<T>(grid: &SideGrid, idx: usize, axis: usize, f: &impl Fn(usize) -> T) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let c = grid.counts[axis];
    let h = grid.h;
    let m = grid.multi(idx);
    let at = |k: usize| {
        let mut q = m;
        q[axis] = k;
        f(grid.index(q))
    };
    let i = m[axis];
    let d = if c < 2 {
        f(idx) * 0.0
    } else if i > 0 && i + 1 < c {
        (at(i + 1) - at(i - 1)) * (0.5 / h)
    } else if c == 2 {
        (at(1) - at(0)) * (1.0 / h)
    } else if i == 0 {
        (at(1) * 4.0 - at(0) * 3.0 - at(2)) * (0.5 / h)
    } else {
        (at(i) * 3.0 - at(i - 1) * 4.0 + at(i - 2)) * (0.5 / h)
    };
    if axis == grid.dim - 1 {
        d * grid.side.sign()
    } else {
        d
    }
}

/// Central differences inside, one-sided second-order stencils on the faces of the side.
pub fn side_gradient<T>(grid: &SideGrid, f: impl Fn(usize) -> T) -> Vec<[T; 3]>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    (0..grid.len())
        .map(|idx| {
            let zero = f(idx) * 0.0;
            let mut g = [zero; 3];
            for (a, ga) in g.iter_mut().enumerate().take(grid.dim) {
                *ga = axis_derivative(grid, idx, a, &f);
            }
            g
        })
        .collect()
}

/// Per-node `∂u/∂x_a` for `a < n`.
pub fn discrete_gradient(u: &CoupledField, side: Side) -> Vec<[Vec3; 3]> {
    let values = u.side(side);
    side_gradient(&u.grid().side(side), |i| values[i])
}

/// One-sided second-order `∂u/∂xₙ` on `Γ` from the given side.
pub fn normal_derivative_at_interface(u: &CoupledField, side: Side) -> TraceField {
    let sg = u.grid().side(side);
    let values = u.side(side);
    let n = sg.dim - 1;
    let nodes = sg.interface_nodes();
    let derivs = nodes
        .iter()
        .map(|&i| axis_derivative(&sg, i, n, &|j| values[j]))
        .collect();
    TraceField {
        carrier: Carrier::Interface(side),
        points: nodes.iter().map(|&i| sg.position(i)).collect(),
        sides: vec![side; nodes.len()],
        values: derivs,
        nodes,
    }
}

/// Mass-normalized `Δ_h f = −(L f)/m` for a scalar grid function on one side.
pub fn scalar_laplacian(grid: &SideGrid, f: &[f64]) -> Vec<f64> {
    let adj = grid.adjacency();
    let mut lf = vec![0.0; f.len()];
    adj.apply(f, &mut lf);
    lf.iter()
        .enumerate()
        .map(|(i, v)| -v / grid.mass(i))
        .collect()
}

/// Multilinear interpolation of side values at a point of the closed side box.
pub fn interpolate<T>(grid: &SideGrid, values: &[T], x: &[f64; 3]) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let t = grid.grid_coords(x);
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..grid.dim {
        let c = grid.counts[a];
        let ta = t[a].clamp(0.0, (c - 1) as f64);
        let i = (ta.floor() as usize).min(c - 2);
        base[a] = i;
        frac[a] = ta - i as f64;
    }
    let mut acc: Option<T> = None;
    for corner in 0..(1usize << grid.dim) {
        let mut m = base;
        let mut w = 1.0;
        for a in 0..grid.dim {
            if corner >> a & 1 == 1 {
                m[a] += 1;
                w *= frac[a];
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if w == 0.0 {
            continue;
        }
        let term = values[grid.index(m)] * w;
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    acc.unwrap_or_else(|| values[grid.index(base)] * 1.0)
}

/// Quasi-uniform sample points on the sphere `∂B_r(x₀)`.
pub fn sphere_points(dim: usize, center: &[f64; 3], radius: f64, h: f64) -> Vec<[f64; 3]> {
    let n = dim - 1;
    let at = |dir: [f64; 3]| {
        let mut p = *center;
        for a in 0..dim {
            p[a] += radius * dir[a];
        }
        p
    };
    match dim {
        1 => vec![at([-1.0, 0.0, 0.0]), at([1.0, 0.0, 0.0])],
        2 => {
            let count = ((4.0 * std::f64::consts::PI * radius / h).ceil() as usize).max(32);
            let count = count + count % 2;
            (0..count)
                .map(|j| {
                    let th = std::f64::consts::TAU * j as f64 / count as f64;
                    let mut d = [0.0; 3];
                    d[0] = th.cos();
                    d[n] = th.sin();
                    at(d)
                })
                .collect()
        }
        _ => {
            let count = ((8.0 * std::f64::consts::PI * radius * radius / (h * h)).ceil() as usize).max(200);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    at([rho * phi.cos(), rho * phi.sin(), z])
                })
                .collect()
        }
    }
}

/// Nodes inside a ball centered on `Γ` and interpolated traces on its boundary sphere.
#[derive(Clone, Debug)]
pub struct BallRestriction {
    pub center: [f64; 3],
    pub radius: f64,
    pub plus_nodes: Vec<usize>,
    pub minus_nodes: Vec<usize>,
    pub sphere: TraceField,
    /// Set when the radius is below one grid spacing.
    pub degenerate: bool,
}

impl BallRestriction {
    pub fn nodes(&self, s: Side) -> &[usize] {
        match s {
            Side::Plus => &self.plus_nodes,
            Side::Minus => &self.minus_nodes,
        }
    }
}

pub fn check_ball(grid: &SplitGrid, center: &[f64; 3], radius: f64) -> Result<()> {
    if !grid.contains_ball(center, radius) {
        return Err(Error::BallExceedsDomain {
            center: *center,
            radius,
        });
    }
    Ok(())
}

pub fn ball_restriction(u: &CoupledField, center: &[f64; 3], radius: f64) -> Result<BallRestriction> {
    let grid = u.grid();
    let n = grid.dim() - 1;
    if center[n] != 0.0 {
        return Err(Error::invalid("ball centers must lie on the interface"));
    }
    check_ball(grid, center, radius)?;
    let h = grid.spacing();
    let inside = |s: Side| {
        let sg = grid.side(s);
        (0..sg.len())
            .filter(|&i| dist(&sg.position(i), center) <= radius + 1e-12 * h)
            .collect::<Vec<_>>()
    };
    let mut sphere = TraceField {
        carrier: Carrier::Sphere {
            center: *center,
            radius,
        },
        nodes: Vec::new(),
        points: Vec::new(),
        sides: Vec::new(),
        values: Vec::new(),
    };
    for p in sphere_points(grid.dim(), center, radius, h) {
        for s in Side::BOTH {
            if s.sign() * p[n] >= 0.0 {
                let sg = grid.side(s);
                sphere.points.push(p);
                sphere.sides.push(s);
                sphere.values.push(interpolate(&sg, u.side(s), &p));
            }
        }
    }
    Ok(BallRestriction {
        center: *center,
        radius,
        plus_nodes: inside(Side::Plus),
        minus_nodes: inside(Side::Minus),
        sphere,
        degenerate: radius < h,
    })
}

pub fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
