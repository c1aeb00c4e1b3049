use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_to, Coupling, Vec3};
use crate::grid::{Carrier, CoupledField, NodeKind, Side, SplitGrid, TraceField};

/// An angle `θ(x) = offset + gradient·x + quadratic·(x₁² − xₙ²)` on one side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AngleProfile {
    pub offset: f64,
    #[serde(default)]
    pub gradient: [f64; 3],
    #[serde(default)]
    pub quadratic: f64,
}

impl AngleProfile {
    pub fn constant(offset: f64) -> Self {
        AngleProfile {
            offset,
            ..Default::default()
        }
    }

    pub fn angle(&self, x: &[f64; 3], dim: usize) -> f64 {
        let lin: f64 = (0..dim).map(|a| self.gradient[a] * x[a]).sum();
        let n = dim - 1;
        self.offset + lin + self.quadratic * (x[0] * x[0] - x[n] * x[n])
    }

    /// `∇θ` at `x`.
    pub fn gradient_at(&self, x: &[f64; 3], dim: usize) -> [f64; 3] {
        let mut g = self.gradient;
        let n = dim - 1;
        if n > 0 {
            g[0] += 2.0 * self.quadratic * x[0];
            g[n] -= 2.0 * self.quadratic * x[n];
        }
        g
    }
}

/// Named closed-form boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum BoundaryForm {
    Constant { plus: [f64; 3], minus: [f64; 3] },
    /// `ρ(cos θ±, sin θ±, 0)` with affine-plus-harmonic-quadratic angles.
    AngleLinear {
        radius: f64,
        plus: AngleProfile,
        minus: AngleProfile,
    },
    /// `ρ·x/|x|`, with the origin sent to `ρe₁`.
    RadialProjection { radius: f64 },
    /// Longitude and latitude profiles on a sphere, in that order.
    SphereAngles {
        radius: f64,
        plus: [AngleProfile; 2],
        minus: [AngleProfile; 2],
    },
}

impl BoundaryForm {
    pub fn eval(&self, side: Side, x: &[f64; 3], dim: usize) -> Vec3 {
        match self {
            BoundaryForm::Constant { plus, minus } => match side {
                Side::Plus => Vec3::from(*plus),
                Side::Minus => Vec3::from(*minus),
            },
            BoundaryForm::AngleLinear { radius, plus, minus } => {
                let th = match side {
                    Side::Plus => plus.angle(x, dim),
                    Side::Minus => minus.angle(x, dim),
                };
                Vec3::new(th.cos(), th.sin(), 0.0) * *radius
            }
            BoundaryForm::RadialProjection { radius } => {
                let mut v = Vec3::zeros();
                for a in 0..dim {
                    v[a] = x[a];
                }
                let r = v.norm();
                if r == 0.0 {
                    Vec3::x() * *radius
                } else {
                    v * (*radius / r)
                }
            }
            BoundaryForm::SphereAngles { radius, plus, minus } => {
                let [lon, lat] = match side {
                    Side::Plus => plus,
                    Side::Minus => minus,
                }
                .map(|p| p.angle(x, dim));
                Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()) * *radius
            }
        }
    }

    /// The closed form evaluated at every node.
    pub fn field(&self, grid: SplitGrid) -> CoupledField {
        let dim = grid.dim();
        CoupledField::from_fn(grid, |s, x| self.eval(s, x, dim))
    }
}

/// One node where the boundary data breaks the matching at `Σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeViolation {
    pub node: usize,
    pub position: [f64; 3],
    pub magnitude: f64,
}

/// Residuals of the boundary data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    /// `max dist(g±, N±)` over `Σ±`.
    pub target_plus: f64,
    pub target_minus: f64,
    /// `max dist(g±, M±)` over `∂Γ`.
    pub slice_plus: f64,
    pub slice_minus: f64,
    /// `max |g⁻ − Φ⁺(g⁺)|` over `∂Γ`.
    pub matching: f64,
    /// Edge nodes whose matching residual exceeds the tolerance.
    pub violations: Vec<EdgeViolation>,
}

impl Compatibility {
    pub fn max(&self) -> f64 {
        [
            self.target_plus,
            self.target_minus,
            self.slice_plus,
            self.slice_minus,
            self.matching,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Minimization in the admissible class: grid, targets, matching map and Dirichlet data.
#[derive(Clone, Debug)]
pub struct AdmissibleProblem {
    pub grid: SplitGrid,
    pub coupling: Coupling,
    pub boundary: BoundaryForm,
    pub constraint_tol: f64,
    data: [TraceField; 2],
}

impl AdmissibleProblem {
    pub fn new(grid: SplitGrid, coupling: Coupling, boundary: BoundaryForm) -> Result<Self> {
        let dim = grid.dim();
        for (s, pair) in [(Side::Plus, &coupling.plus), (Side::Minus, &coupling.minus)] {
            if pair.ambient.ambient_dim() < 2 {
                return Err(Error::invalid(format!("{} target must live in ℝ² or ℝ³", s.tag())));
            }
        }
        let data = Side::BOTH.map(|s| {
            let sg = grid.side(s);
            let nodes: Vec<usize> = (0..sg.len()).filter(|&i| sg.kind(i).is_fixed()).collect();
            let points: Vec<[f64; 3]> = nodes.iter().map(|&i| sg.position(i)).collect();
            TraceField {
                carrier: Carrier::Boundary(s),
                values: points.iter().map(|x| boundary.eval(s, x, dim)).collect(),
                sides: vec![s; nodes.len()],
                nodes,
                points,
            }
        });
        Ok(AdmissibleProblem {
            grid,
            coupling,
            boundary,
            constraint_tol: 1e-9,
            data,
        })
    }

    pub fn with_constraint_tol(mut self, tol: f64) -> Self {
        self.constraint_tol = tol;
        self
    }

    /// The Dirichlet data `g±` on `Σ±`, including the edge `∂Γ`.
    pub fn boundary_data(&self, s: Side) -> &TraceField {
        match s {
            Side::Plus => &self.data[0],
            Side::Minus => &self.data[1],
        }
    }

    pub fn fixed_mask(&self, s: Side) -> Vec<bool> {
        let sg = self.grid.side(s);
        (0..sg.len()).map(|i| sg.kind(i).is_fixed()).collect()
    }

    /// Overwrites the Dirichlet nodes of `u` with `g`.
    pub fn impose_boundary(&self, u: &mut CoupledField) {
        for s in Side::BOTH {
            let data = self.boundary_data(s);
            let values = u.side_mut(s);
            for (&i, v) in data.nodes.iter().zip(&data.values) {
                values[i] = *v;
            }
        }
    }

    /// Residuals of the data against the targets and the matching at `Σ`.
    pub fn compatibility(&self) -> Compatibility {
        let mut c = Compatibility::default();
        let sg = self.grid.side(Side::Plus);
        let plus = self.boundary_data(Side::Plus);
        let minus = self.boundary_data(Side::Minus);
        c.target_plus = max_distance(&plus.values, self.coupling.plus.ambient.as_ref());
        c.target_minus = max_distance(&minus.values, self.coupling.minus.ambient.as_ref());
        let tol = self.constraint_tol.max(1e3 * self.coupling.minus.inner.membership_tol());
        for (k, &i) in plus.nodes.iter().enumerate() {
            if sg.kind(i) != NodeKind::InterfaceEdge {
                continue;
            }
            let gp = plus.values[k];
            let gm = minus
                .nodes
                .iter()
                .position(|&j| j == i)
                .map(|j| minus.values[j])
                .expect("edge node present on both sides");
            c.slice_plus = c.slice_plus.max(distance_to(&gp, self.coupling.plus.inner.as_ref()));
            c.slice_minus = c.slice_minus.max(distance_to(&gm, self.coupling.minus.inner.as_ref()));
            let r = (gm - self.coupling.map.forward(&gp)).norm();
            c.matching = c.matching.max(r);
            if r > tol {
                c.violations.push(EdgeViolation {
                    node: i,
                    position: sg.position(i),
                    magnitude: r,
                });
            }
        }
        c
    }

    /// Errors unless the data is compatible within the constraint tolerance.
    pub fn check_compatible(&self) -> Result<Compatibility> {
        let c = self.compatibility();
        let tol = self.constraint_tol.max(1e3 * self.coupling.plus.ambient.membership_tol());
        if c.max() > tol {
            return Err(Error::invalid(format!(
                "boundary data incompatible: residual {:.3e} ({} edge violations)",
                c.max(),
                c.violations.len()
            )));
        }
        Ok(c)
    }
}

fn max_distance(values: &[Vec3], m: &dyn crate::geometry::Manifold) -> f64 {
    values.iter().map(|v| distance_to(v, m)).fold(0.0, f64::max)
}
