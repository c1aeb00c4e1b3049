use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};

/// Ambient vectors. Every target manifold sits in at most three dimensions.
pub type Vec3 = Vector3<f64>;

/// Relative tolerance for the tangency check in [`second_form_eval`].
pub const TANGENCY_TOL: f64 = 1e-8;

/// An orthonormal tangent frame with at most three vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    vectors: [Vec3; 3],
    len: usize,
}

impl Frame {
    pub fn new(vectors: &[Vec3]) -> Self {
        assert!(vectors.len() <= 3, "a frame holds at most three vectors");
        let mut out = [Vec3::zeros(); 3];
        out[..vectors.len()].copy_from_slice(vectors);
        Frame {
            vectors: out,
            len: vectors.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors[..self.len]
    }

    /// Orthogonal projection onto the span of the frame.
    pub fn project(&self, v: &Vec3) -> Vec3 {
        self.vectors().iter().map(|e| e * e.dot(v)).sum()
    }

    pub fn combine(&self, coeffs: &[f64]) -> Vec3 {
        self.vectors()
            .iter()
            .zip(coeffs)
            .map(|(e, c)| e * *c)
            .sum()
    }
}

/// An embedded target manifold with its nearest-point projection.
pub trait Manifold: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn ambient_dim(&self) -> usize;

    fn dim(&self) -> usize;

    /// Radius of the neighborhood on which the nearest-point projection is smooth.
    fn tubular_radius(&self) -> f64;

    fn membership_tol(&self) -> f64;

    /// Raw nearest point, `None` where it is undefined.
    fn closest_point(&self, p: &Vec3) -> Option<Vec3>;

    /// Whether `p`, at the given distance, lies in the region where the projection is smooth.
    fn projection_defined(&self, _p: &Vec3, distance: f64) -> bool {
        distance < self.tubular_radius()
    }

    /// Orthonormal basis of the tangent space at a point of the manifold.
    fn tangent_frame(&self, p: &Vec3) -> Frame;

    fn tangent_project(&self, p: &Vec3, v: &Vec3) -> Vec3 {
        self.tangent_frame(p).project(v)
    }

    /// Second fundamental form, with `A(p)(X, X) = |X|^2 p` on the unit sphere.
    fn second_form(&self, p: &Vec3, x: &Vec3, y: &Vec3) -> Vec3;

    /// Length of the projected chord between two points of the manifold.
    fn intrinsic_distance(&self, a: &Vec3, b: &Vec3) -> f64 {
        projected_chord_length(self, a, b, 16)
    }

    /// Deterministic points on the manifold, for inclusion checks and tests.
    fn sample_points(&self, _count: usize) -> Vec<Vec3> {
        Vec::new()
    }
}

/// Polyline length of `t -> Π((1-t)a + tb)`, falling back to the chord when the
/// segment leaves the tubular neighborhood.
pub fn projected_chord_length<M: Manifold + ?Sized>(m: &M, a: &Vec3, b: &Vec3, pieces: usize) -> f64 {
    let chord = (b - a).norm();
    if chord == 0.0 {
        return 0.0;
    }
    let radius = m.tubular_radius();
    let mut prev = *a;
    let mut total = 0.0;
    for i in 1..=pieces {
        let t = i as f64 / pieces as f64;
        let q = a * (1.0 - t) + b * t;
        let Some(p) = m.closest_point(&q) else {
            return chord;
        };
        if (p - q).norm() >= radius {
            return chord;
        }
        total += (p - prev).norm();
        prev = p;
    }
    total
}

/// Nearest-point projection with the tubular-neighborhood check.
pub fn project_to_manifold<M: Manifold + ?Sized>(p: &Vec3, m: &M) -> Result<Vec3> {
    let radius = m.tubular_radius();
    let Some(q) = m.closest_point(p) else {
        return Err(Error::OutsideTubularNeighborhood {
            distance: f64::INFINITY,
            radius,
        });
    };
    let distance = (q - p).norm();
    if !distance.is_finite() || !m.projection_defined(p, distance) {
        return Err(Error::OutsideTubularNeighborhood { distance, radius });
    }
    Ok(q)
}

pub fn distance_to<M: Manifold + ?Sized>(p: &Vec3, m: &M) -> f64 {
    m.closest_point(p)
        .map(|q| (q - p).norm())
        .unwrap_or(f64::INFINITY)
}

/// Checked evaluation of the second fundamental form.
pub fn second_form_eval<M: Manifold + ?Sized>(p: &Vec3, x: &Vec3, y: &Vec3, m: &M) -> Result<Vec3> {
    for v in [x, y] {
        let residual = (v - m.tangent_project(p, v)).norm();
        if residual > TANGENCY_TOL * v.norm().max(1.0) {
            return Err(Error::NonTangentInput { residual });
        }
    }
    Ok(m.second_form(p, x, y))
}

fn unit_perpendicular(p: &Vec3) -> Vec3 {
    let axis = if p.x.abs() <= p.y.abs() && p.x.abs() <= p.z.abs() {
        Vec3::x()
    } else if p.y.abs() <= p.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (axis - p * (p.dot(&axis) / p.norm_squared())).normalize()
}

/// Circle of radius `radius` about the origin in the plane `z = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Circle {
    pub radius: f64,
    ambient_dim: usize,
}

impl Circle {
    /// A planar circle target (ambient dimension 2).
    pub fn new(radius: f64) -> Self {
        Circle {
            radius,
            ambient_dim: 2,
        }
    }

    /// The same circle regarded as a curve in three dimensions, e.g. an equator.
    pub fn in_space(radius: f64) -> Self {
        Circle {
            radius,
            ambient_dim: 3,
        }
    }

    pub fn point(&self, theta: f64) -> Vec3 {
        Vec3::new(theta.cos(), theta.sin(), 0.0) * self.radius
    }

    pub fn angle(&self, p: &Vec3) -> f64 {
        p.y.atan2(p.x)
    }
}

impl Manifold for Circle {
    fn name(&self) -> String {
        format!("circle(r={})", self.radius)
    }

    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    fn dim(&self) -> usize {
        1
    }

    fn tubular_radius(&self) -> f64 {
        self.radius
    }

    fn membership_tol(&self) -> f64 {
        2e-9 * self.radius
    }

    fn closest_point(&self, p: &Vec3) -> Option<Vec3> {
        let rho = p.x.hypot(p.y);
        if rho < 1e-300 {
            return None;
        }
        Some(Vec3::new(p.x, p.y, 0.0) * (self.radius / rho))
    }

    fn projection_defined(&self, p: &Vec3, distance: f64) -> bool {
        distance < self.radius || p.x.hypot(p.y) >= self.radius
    }

    fn tangent_frame(&self, p: &Vec3) -> Frame {
        Frame::new(&[Vec3::new(-p.y, p.x, 0.0).normalize()])
    }

    fn second_form(&self, p: &Vec3, x: &Vec3, y: &Vec3) -> Vec3 {
        p * (x.dot(y) / (self.radius * self.radius))
    }

    fn intrinsic_distance(&self, a: &Vec3, b: &Vec3) -> f64 {
        let half = ((b - a).norm() / (2.0 * self.radius)).min(1.0);
        2.0 * self.radius * half.asin()
    }

    fn sample_points(&self, count: usize) -> Vec<Vec3> {
        (0..count)
            .map(|i| self.point(std::f64::consts::TAU * (i as f64 + 0.25) / count as f64))
            .collect()
    }
}

/// Round sphere about the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Sphere {
    pub radius: f64,
}

impl Sphere {
    pub fn new(radius: f64) -> Self {
        Sphere { radius }
    }
}

impl Manifold for Sphere {
    fn name(&self) -> String {
        format!("sphere(r={})", self.radius)
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn dim(&self) -> usize {
        2
    }

    fn tubular_radius(&self) -> f64 {
        self.radius
    }

    fn membership_tol(&self) -> f64 {
        2e-9 * self.radius
    }

    fn closest_point(&self, p: &Vec3) -> Option<Vec3> {
        let n = p.norm();
        (n > 1e-300).then(|| p * (self.radius / n))
    }

    fn projection_defined(&self, p: &Vec3, distance: f64) -> bool {
        distance < self.radius || p.norm() >= self.radius
    }

    fn tangent_frame(&self, p: &Vec3) -> Frame {
        let t1 = unit_perpendicular(p);
        let t2 = p.normalize().cross(&t1);
        Frame::new(&[t1, t2])
    }

    fn tangent_project(&self, p: &Vec3, v: &Vec3) -> Vec3 {
        v - p * (p.dot(v) / p.norm_squared())
    }

    fn second_form(&self, p: &Vec3, x: &Vec3, y: &Vec3) -> Vec3 {
        p * (x.dot(y) / (self.radius * self.radius))
    }

    fn intrinsic_distance(&self, a: &Vec3, b: &Vec3) -> f64 {
        let half = ((b - a).norm() / (2.0 * self.radius)).min(1.0);
        2.0 * self.radius * half.asin()
    }

    fn sample_points(&self, count: usize) -> Vec<Vec3> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                Vec3::new(rho * phi.cos(), rho * phi.sin(), z) * self.radius
            })
            .collect()
    }
}

/// Torus of revolution about the z-axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Torus {
    pub major: f64,
    pub minor: f64,
}

impl Torus {
    pub fn new(major: f64, minor: f64) -> Self {
        assert!(major > minor && minor > 0.0, "torus needs major > minor > 0");
        Torus { major, minor }
    }

    pub fn point(&self, phi: f64, psi: f64) -> Vec3 {
        let rho = self.major + self.minor * psi.cos();
        Vec3::new(rho * phi.cos(), rho * phi.sin(), self.minor * psi.sin())
    }

    fn core(&self, p: &Vec3) -> Option<(Vec3, f64)> {
        let rho = p.x.hypot(p.y);
        (rho > 1e-300).then(|| (Vec3::new(p.x, p.y, 0.0) * (self.major / rho), rho))
    }
}

impl Manifold for Torus {
    fn name(&self) -> String {
        format!("torus(R={}, r={})", self.major, self.minor)
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn dim(&self) -> usize {
        2
    }

    fn tubular_radius(&self) -> f64 {
        self.minor.min(self.major - self.minor)
    }

    fn membership_tol(&self) -> f64 {
        2e-9 * (self.major + self.minor)
    }

    fn closest_point(&self, p: &Vec3) -> Option<Vec3> {
        let (c, _) = self.core(p)?;
        let d = p - c;
        let n = d.norm();
        (n > 1e-300).then(|| c + d * (self.minor / n))
    }

    fn tangent_frame(&self, p: &Vec3) -> Frame {
        let (c, rho) = self.core(p).expect("torus frame requested on the axis");
        let normal = (p - c).normalize();
        let e_phi = Vec3::new(-p.y / rho, p.x / rho, 0.0);
        Frame::new(&[e_phi, normal.cross(&e_phi)])
    }

    fn second_form(&self, p: &Vec3, x: &Vec3, y: &Vec3) -> Vec3 {
        let (c, rho) = self.core(p).expect("torus second form requested on the axis");
        let normal = (p - c).normalize();
        let e = Vec3::new(p.x / rho, p.y / rho, 0.0);
        let xh = Vec3::new(x.x, x.y, 0.0);
        let dc = (xh - e * e.dot(&xh)) * (self.major / rho);
        normal * ((x - dc).dot(y) / self.minor)
    }

    fn sample_points(&self, count: usize) -> Vec<Vec3> {
        let side = (count as f64).sqrt().ceil().max(1.0) as usize;
        (0..count)
            .map(|i| {
                let phi = std::f64::consts::TAU * ((i % side) as f64 + 0.3) / side as f64;
                let psi = std::f64::consts::TAU * ((i / side) as f64 + 0.7) / side as f64;
                self.point(phi, psi)
            })
            .collect()
    }
}

/// Graph surface `z = ½(a x² + 2b xy + c y²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSurface {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl GraphSurface {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        GraphSurface { a, b, c }
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        0.5 * (self.a * x * x + 2.0 * self.b * x * y + self.c * y * y)
    }

    fn slope(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y, self.b * x + self.c * y)
    }

    fn hessian_form(&self, x: &Vec3, y: &Vec3) -> f64 {
        self.a * x.x * y.x + self.b * (x.x * y.y + x.y * y.x) + self.c * x.y * y.y
    }

    fn max_curvature(&self) -> f64 {
        let mean = 0.5 * (self.a + self.c);
        let dev = (0.25 * (self.a - self.c).powi(2) + self.b * self.b).sqrt();
        (mean.abs() + dev).max(1e-12)
    }
}

impl Manifold for GraphSurface {
    fn name(&self) -> String {
        format!("graph(a={}, b={}, c={})", self.a, self.b, self.c)
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn dim(&self) -> usize {
        2
    }

    fn tubular_radius(&self) -> f64 {
        0.5 / self.max_curvature()
    }

    fn membership_tol(&self) -> f64 {
        1e-10
    }

    fn closest_point(&self, q: &Vec3) -> Option<Vec3> {
        let (mut x, mut y) = (q.x, q.y);
        for _ in 0..60 {
            let f = self.height(x, y) - q.z;
            let (fx, fy) = self.slope(x, y);
            let gx = x - q.x + f * fx;
            let gy = y - q.y + f * fy;
            let hxx = 1.0 + fx * fx + f * self.a;
            let hxy = fx * fy + f * self.b;
            let hyy = 1.0 + fy * fy + f * self.c;
            let det = hxx * hyy - hxy * hxy;
            if det <= 0.0 {
                return None;
            }
            let dx = (hyy * gx - hxy * gy) / det;
            let dy = (hxx * gy - hxy * gx) / det;
            x -= dx;
            y -= dy;
            if dx.abs().max(dy.abs()) < 1e-16 {
                break;
            }
        }
        Some(Vec3::new(x, y, self.height(x, y)))
    }

    fn tangent_frame(&self, p: &Vec3) -> Frame {
        let (fx, fy) = self.slope(p.x, p.y);
        let t1 = Vec3::new(1.0, 0.0, fx).normalize();
        let t2 = Vec3::new(0.0, 1.0, fy);
        let t2 = (t2 - t1 * t1.dot(&t2)).normalize();
        Frame::new(&[t1, t2])
    }

    fn second_form(&self, p: &Vec3, x: &Vec3, y: &Vec3) -> Vec3 {
        let (fx, fy) = self.slope(p.x, p.y);
        let w = (1.0 + fx * fx + fy * fy).sqrt();
        let nu = Vec3::new(-fx, -fy, 1.0) / w;
        nu * (-self.hessian_form(x, y) / w)
    }

    fn sample_points(&self, count: usize) -> Vec<Vec3> {
        (0..count)
            .map(|i| {
                let t = i as f64 / count.max(1) as f64;
                let x = 0.4 * (7.0 * t).sin();
                let y = 0.4 * (11.0 * t).cos();
                Vec3::new(x, y, self.height(x, y))
            })
            .collect()
    }
}

pub type ProjectionFn = Arc<dyn Fn(&Vec3) -> Option<Vec3> + Send + Sync>;

/// A manifold known only through its nearest-point projection.
///
/// Tangent projector and second fundamental form come from finite differences of the
/// projection: `P = DΠ(p)` and `A(X, Y) = -D²Π(p)(X, Y)`.
#[derive(Clone)]
pub struct CustomManifold {
    name: String,
    dim: usize,
    ambient_dim: usize,
    tubular_radius: f64,
    membership_tol: f64,
    step: f64,
    projection: ProjectionFn,
    samples: Vec<Vec3>,
}

impl fmt::Debug for CustomManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomManifold")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("ambient_dim", &self.ambient_dim)
            .field("tubular_radius", &self.tubular_radius)
            .finish()
    }
}

impl CustomManifold {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        ambient_dim: usize,
        tubular_radius: f64,
        projection: ProjectionFn,
    ) -> Self {
        CustomManifold {
            name: name.into(),
            dim,
            ambient_dim,
            tubular_radius,
            membership_tol: 1e-9,
            step: 1e-4,
            projection,
            samples: Vec::new(),
        }
    }

    pub fn with_samples(mut self, samples: Vec<Vec3>) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_membership_tol(mut self, tol: f64) -> Self {
        self.membership_tol = tol;
        self
    }

    fn proj(&self, p: &Vec3) -> Vec3 {
        (self.projection)(p).unwrap_or(*p)
    }

    /// Finite-difference tangent projector `DΠ(p)`, symmetrized.
    pub fn projector_matrix(&self, p: &Vec3) -> Matrix3<f64> {
        let eps = self.step * 0.1;
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            let e = Vec3::ith(i, eps);
            let col = (self.proj(&(p + e)) - self.proj(&(p - e))) / (2.0 * eps);
            m.set_column(i, &col);
        }
        (m + m.transpose()) * 0.5
    }
}

impl Manifold for CustomManifold {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn tubular_radius(&self) -> f64 {
        self.tubular_radius
    }

    fn membership_tol(&self) -> f64 {
        self.membership_tol
    }

    fn closest_point(&self, p: &Vec3) -> Option<Vec3> {
        (self.projection)(p)
    }

    fn tangent_frame(&self, p: &Vec3) -> Frame {
        let eig = SymmetricEigen::new(self.projector_matrix(p));
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let vectors: Vec<Vec3> = order[..self.dim]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        Frame::new(&vectors)
    }

    fn second_form(&self, p: &Vec3, x: &Vec3, y: &Vec3) -> Vec3 {
        let eps = self.step;
        let d2 = (self.proj(&(p + x * eps + y * eps)) - self.proj(&(p + x * eps - y * eps))
            - self.proj(&(p - x * eps + y * eps))
            + self.proj(&(p - x * eps - y * eps)))
            / (4.0 * eps * eps);
        let normal = -d2;
        normal - self.tangent_project(p, &normal)
    }

    fn sample_points(&self, count: usize) -> Vec<Vec3> {
        self.samples.iter().take(count).copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_projection_is_radial() {
        let s = Sphere::new(1.0);
        let q = project_to_manifold(&Vec3::new(0.0, 0.0, 2.0), &s).unwrap();
        assert_eq!(q, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn points_on_the_manifold_are_fixed() {
        let s = Sphere::new(1.0);
        let p = Vec3::new(0.6, 0.0, 0.8);
        assert_eq!(project_to_manifold(&p, &s).unwrap(), p);
    }

    #[test]
    fn center_of_sphere_is_outside_the_neighborhood() {
        let s = Sphere::new(1.0);
        assert!(matches!(
            project_to_manifold(&Vec3::zeros(), &s),
            Err(Error::OutsideTubularNeighborhood { .. })
        ));
    }

    #[test]
    fn unit_sphere_second_form() {
        let s = Sphere::new(1.0);
        let p = Vec3::new(1.0, 0.0, 0.0);
        let x = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(second_form_eval(&p, &x, &x, &s).unwrap(), p);
        assert_eq!(second_form_eval(&p, &Vec3::zeros(), &x, &s).unwrap(), Vec3::zeros());
        assert!(matches!(
            second_form_eval(&p, &p, &x, &s),
            Err(Error::NonTangentInput { .. })
        ));
    }

    #[test]
    fn torus_geodesic_outer_equator() {
        let t = Torus::new(2.0, 0.5);
        let p = t.point(0.3, 0.0);
        let v = Vec3::new(-(0.3f64).sin(), 0.3f64.cos(), 0.0);
        let accel = -p / (2.5 * 2.5);
        let residual = accel + t.second_form(&p, &v, &v);
        assert!(residual.norm() < 1e-14);
    }

    #[test]
    fn circle_arc_distance() {
        let c = Circle::new(2.0);
        let d = c.intrinsic_distance(&c.point(0.1), &c.point(0.6));
        assert!((d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn custom_projection_reproduces_sphere() {
        let custom = CustomManifold::new(
            "sphere",
            2,
            3,
            1.0,
            Arc::new(|p: &Vec3| Some(p.normalize())),
        );
        let p = Vec3::new(0.0, 0.6, 0.8);
        let x = Vec3::new(1.0, 0.0, 0.0);
        let a = custom.second_form(&p, &x, &x);
        assert!((a - p).norm() < 1e-6, "{a}");
        let f = custom.tangent_frame(&p);
        assert_eq!(f.len(), 2);
        assert!(f.vectors().iter().all(|e| e.dot(&p).abs() < 1e-8));
    }
}
