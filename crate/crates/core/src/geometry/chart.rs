use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::manifold::{Manifold, Vec3};
use crate::error::{Error, Result};

/// Default bound on the metric condition number.
pub const DEFAULT_MAX_CONDITION: f64 = 1e8;

/// Christoffel symbols `Γᵏᵢⱼ` of a chart at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    values: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel {
            dim,
            values: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.values[(k * self.dim + i) * self.dim + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Γ(U)(∇U, ∇U)`, where `grad[α][i] = ∂_α Uⁱ`.
    pub fn contract(&self, grad: &[[f64; 3]], out: &mut [f64]) {
        let d = self.dim;
        for (k, o) in out.iter_mut().enumerate().take(d) {
            let mut s = 0.0;
            for g in grad {
                for i in 0..d {
                    for j in 0..d {
                        s += self.get(k, i, j) * g[i] * g[j];
                    }
                }
            }
            *o = s;
        }
    }
}

/// Local coordinates `U = (U¹, U²) ∈ B₁ᵏ × B₁ᵐ` on a target.
///
/// The first `k` coordinates run along `M`, the last `m` across it.
pub trait Chart: Send + Sync + fmt::Debug {
    fn center(&self) -> Vec3;

    /// `(k, m)`.
    fn split(&self) -> (usize, usize);

    fn to_manifold(&self, u: &[f64]) -> Vec3;

    #[allow(clippy::wrong_self_convention)]
    fn from_manifold(&self, p: &Vec3) -> Option<Vec<f64>>;

    /// Columns `∂ᵢφ(U)`.
    fn jacobian(&self, u: &[f64]) -> Vec<Vec3>;

    /// `∂ᵢ∂ⱼφ(U)`, row-major in `(i, j)`.
    fn hessian(&self, u: &[f64]) -> Vec<Vec3>;

    /// Whether points with `U² = 0` land on `M`.
    fn m_slice_is_u2_zero(&self) -> bool;

    fn dim(&self) -> usize {
        let (k, m) = self.split();
        k + m
    }

    fn metric(&self, u: &[f64]) -> DMatrix<f64> {
        let j = self.jacobian(u);
        let d = j.len();
        DMatrix::from_fn(d, d, |a, b| j[a].dot(&j[b]))
    }

    /// `Γᵏᵢⱼ = hᵏˡ⟨∂ᵢ∂ⱼφ, ∂ₗφ⟩`, the Levi-Civita symbols of the induced metric.
    fn christoffel(&self, u: &[f64], max_condition: f64) -> Result<Christoffel> {
        let jac = self.jacobian(u);
        let hess = self.hessian(u);
        let d = jac.len();
        let h = DMatrix::from_fn(d, d, |a, b| jac[a].dot(&jac[b]));
        let condition = condition_number(&h);
        if !(condition <= max_condition) {
            return Err(Error::SingularMetric { condition });
        }
        let hinv = h
            .try_inverse()
            .ok_or(Error::SingularMetric { condition: f64::INFINITY })?;
        let mut out = Christoffel::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let lowered = DVector::from_fn(d, |l, _| hess[i * d + j].dot(&jac[l]));
                let raised = &hinv * lowered;
                for k in 0..d {
                    out.set(k, i, j, raised[k]);
                }
            }
        }
        Ok(out)
    }
}

pub fn condition_number(h: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(h.clone());
    let max = eig.eigenvalues.iter().fold(f64::MIN, |m, v| m.max(*v));
    let min = eig.eigenvalues.iter().fold(f64::MAX, |m, v| m.min(*v));
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest `|h_ij|` over the mixed `M`/normal blocks.
pub fn mixed_block_norm(h: &DMatrix<f64>, k: usize) -> f64 {
    let d = h.nrows();
    let mut m: f64 = 0.0;
    for i in 0..k {
        for j in k..d {
            m = m.max(h[(i, j)].abs());
        }
    }
    m
}

/// Graph coordinates over the tangent plane of a round sphere or circle.
///
/// `φ(U) = ĉ·sqrt(ρ² − s²|U|²) + s·Σ Uⁱ tᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphChart {
    direction: Vec3,
    radius: f64,
    scale: f64,
    tangents: Vec<Vec3>,
    k: usize,
    slice: bool,
}

impl GraphChart {
    /// Chart on the sphere of radius `radius` centered at `center`.
    ///
    /// A center on the equator `z = 0` orders the tangents as (equator, `e_z`) with `k = 1`,
    /// so the slice `U² = 0` is the equator. Other centers give `k = 2`.
    pub fn sphere(center: &Vec3, radius: f64, scale: f64) -> Result<Self> {
        Self::check_scale(radius, scale)?;
        let c = center.normalize();
        if c.z.abs() < 1e-12 {
            let t1 = Vec3::z().cross(&c).normalize();
            return Ok(GraphChart {
                direction: c,
                radius,
                scale,
                tangents: vec![t1, Vec3::z()],
                k: 1,
                slice: true,
            });
        }
        let axis = if c.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let t1 = (axis - c * c.dot(&axis)).normalize();
        let t2 = c.cross(&t1);
        Ok(GraphChart {
            direction: c,
            radius,
            scale,
            tangents: vec![t1, t2],
            k: 2,
            slice: false,
        })
    }

    /// Chart on the circle of radius `radius` in the plane `z = 0`, with `M` the whole circle.
    pub fn circle(center: &Vec3, radius: f64, scale: f64) -> Result<Self> {
        Self::check_scale(radius, scale)?;
        let c = Vec3::new(center.x, center.y, 0.0).normalize();
        Ok(GraphChart {
            direction: c,
            radius,
            scale,
            tangents: vec![Vec3::z().cross(&c)],
            k: 1,
            slice: true,
        })
    }

    fn check_scale(radius: f64, scale: f64) -> Result<()> {
        if !(scale > 0.0 && scale < radius) {
            return Err(Error::invalid(format!(
                "graph chart scale {scale} must lie in (0, {radius})"
            )));
        }
        Ok(())
    }

    /// The same chart construction around a new center.
    pub fn recentered(&self, p: &Vec3) -> Result<Self> {
        if self.tangents.len() == 1 {
            GraphChart::circle(p, self.radius, self.scale)
        } else {
            GraphChart::sphere(p, self.radius, self.scale)
        }
    }

    fn root(&self, u: &[f64]) -> f64 {
        let u2: f64 = u.iter().map(|x| x * x).sum();
        (self.radius * self.radius - self.scale * self.scale * u2).sqrt()
    }
}

impl Chart for GraphChart {
    fn center(&self) -> Vec3 {
        self.direction * self.radius
    }

    fn split(&self) -> (usize, usize) {
        (self.k, self.tangents.len() - self.k)
    }

    fn to_manifold(&self, u: &[f64]) -> Vec3 {
        let tangential: Vec3 = self.tangents.iter().zip(u).map(|(t, x)| t * *x).sum();
        self.direction * self.root(u) + tangential * self.scale
    }

    fn from_manifold(&self, p: &Vec3) -> Option<Vec<f64>> {
        if p.dot(&self.direction) <= 0.0 {
            return None;
        }
        Some(self.tangents.iter().map(|t| t.dot(p) / self.scale).collect())
    }

    fn jacobian(&self, u: &[f64]) -> Vec<Vec3> {
        let s = self.root(u);
        let r2 = self.scale * self.scale;
        self.tangents
            .iter()
            .zip(u)
            .map(|(t, x)| t * self.scale - self.direction * (r2 * x / s))
            .collect()
    }

    fn hessian(&self, u: &[f64]) -> Vec<Vec3> {
        let s = self.root(u);
        let r2 = self.scale * self.scale;
        let d = u.len();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                out.push(-self.direction * r2 * (delta / s + r2 * u[i] * u[j] / (s * s * s)));
            }
        }
        out
    }

    fn m_slice_is_u2_zero(&self) -> bool {
        self.slice
    }
}

/// Angle coordinate on a circle: `φ(U) = ρ(cos(θ_c + sU), sin(θ_c + sU), 0)`. Flat.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleChart {
    pub theta_center: f64,
    pub radius: f64,
    pub scale: f64,
}

impl AngleChart {
    pub fn new(theta_center: f64, radius: f64, scale: f64) -> Self {
        AngleChart {
            theta_center,
            radius,
            scale,
        }
    }
}

impl Chart for AngleChart {
    fn center(&self) -> Vec3 {
        self.to_manifold(&[0.0])
    }

    fn split(&self) -> (usize, usize) {
        (1, 0)
    }

    fn to_manifold(&self, u: &[f64]) -> Vec3 {
        let t = self.theta_center + self.scale * u[0];
        Vec3::new(t.cos(), t.sin(), 0.0) * self.radius
    }

    fn from_manifold(&self, p: &Vec3) -> Option<Vec<f64>> {
        let raw = p.y.atan2(p.x) - self.theta_center;
        let wrapped = raw - std::f64::consts::TAU * (raw / std::f64::consts::TAU).round();
        Some(vec![wrapped / self.scale])
    }

    fn jacobian(&self, u: &[f64]) -> Vec<Vec3> {
        let t = self.theta_center + self.scale * u[0];
        vec![Vec3::new(-t.sin(), t.cos(), 0.0) * (self.radius * self.scale)]
    }

    fn hessian(&self, u: &[f64]) -> Vec<Vec3> {
        let t = self.theta_center + self.scale * u[0];
        vec![Vec3::new(-t.cos(), -t.sin(), 0.0) * (self.radius * self.scale * self.scale)]
    }

    fn m_slice_is_u2_zero(&self) -> bool {
        true
    }
}

/// Chart `φ(U) = Π(p + s·Σ Uⁱ tᵢ)` on an arbitrary manifold, differentiated numerically.
#[derive(Clone, Debug)]
pub struct ProjectionChart {
    manifold: Arc<dyn Manifold>,
    center: Vec3,
    tangents: Vec<Vec3>,
    scale: f64,
    k: usize,
}

impl ProjectionChart {
    pub fn new(manifold: Arc<dyn Manifold>, center: Vec3, scale: f64) -> Self {
        let tangents = manifold.tangent_frame(&center).vectors().to_vec();
        let k = tangents.len();
        ProjectionChart {
            manifold,
            center,
            tangents,
            scale,
            k,
        }
    }

    fn eval(&self, u: &[f64]) -> Vec3 {
        let q = self.center
            + self
                .tangents
                .iter()
                .zip(u)
                .map(|(t, x)| t * (*x * self.scale))
                .sum::<Vec3>();
        self.manifold.closest_point(&q).unwrap_or(q)
    }
}

impl Chart for ProjectionChart {
    fn center(&self) -> Vec3 {
        self.center
    }

    fn split(&self) -> (usize, usize) {
        (self.k, self.tangents.len() - self.k)
    }

    fn to_manifold(&self, u: &[f64]) -> Vec3 {
        self.eval(u)
    }

    fn from_manifold(&self, p: &Vec3) -> Option<Vec<f64>> {
        let d = self.tangents.len();
        let mut u: Vec<f64> = self
            .tangents
            .iter()
            .map(|t| t.dot(&(p - self.center)) / self.scale)
            .collect();
        for _ in 0..50 {
            let r = p - self.eval(&u);
            if r.norm() < 1e-15 {
                break;
            }
            let jac = self.jacobian(&u);
            let h = DMatrix::from_fn(d, d, |a, b| jac[a].dot(&jac[b]));
            let g = DVector::from_fn(d, |a, _| jac[a].dot(&r));
            let step = h.lu().solve(&g)?;
            for (ui, si) in u.iter_mut().zip(step.iter()) {
                *ui += si;
            }
        }
        ((p - self.eval(&u)).norm() < 1e-9).then_some(u)
    }

    fn jacobian(&self, u: &[f64]) -> Vec<Vec3> {
        let eps = 1e-6;
        (0..u.len())
            .map(|i| {
                let mut a = u.to_vec();
                let mut b = u.to_vec();
                a[i] += eps;
                b[i] -= eps;
                (self.eval(&a) - self.eval(&b)) / (2.0 * eps)
            })
            .collect()
    }

    fn hessian(&self, u: &[f64]) -> Vec<Vec3> {
        let eps = 1e-4;
        let d = u.len();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let shifted = |si: f64, sj: f64| {
                    let mut v = u.to_vec();
                    v[i] += si * eps;
                    v[j] += sj * eps;
                    self.eval(&v)
                };
                out.push(
                    (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0))
                        / (4.0 * eps * eps),
                );
            }
        }
        out
    }

    fn m_slice_is_u2_zero(&self) -> bool {
        false
    }
}
