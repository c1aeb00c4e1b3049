use std::fmt;
use std::sync::Arc;

use nalgebra::Rotation3;

use super::manifold::Vec3;
use super::submanifold::SubmanifoldPair;

/// The matching diffeomorphism `Φ⁺: M⁺ → M⁻` with a tubular extension.
pub trait InterfaceMap: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn forward(&self, a: &Vec3) -> Vec3;

    fn inverse(&self, b: &Vec3) -> Vec3;

    /// `DΦ⁺(a) v` for `v` tangent to `M⁺` at `a`.
    fn derivative(&self, a: &Vec3, v: &Vec3) -> Vec3;

    /// Extension of `Φ⁺` to a neighborhood of `M⁺` in `N⁺`.
    fn tubular_forward(&self, p: &Vec3) -> Vec3 {
        self.forward(p)
    }

    fn tubular_inverse(&self, q: &Vec3) -> Vec3 {
        self.inverse(q)
    }

    fn is_isometry(&self) -> bool;

    /// `Φ⁻ = (Φ⁺)⁻¹` as a map in its own right.
    fn inverse_map(&self) -> Arc<dyn InterfaceMap>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Identity;

impl InterfaceMap for Identity {
    fn name(&self) -> String {
        "identity".into()
    }

    fn forward(&self, a: &Vec3) -> Vec3 {
        *a
    }

    fn inverse(&self, b: &Vec3) -> Vec3 {
        *b
    }

    fn derivative(&self, _a: &Vec3, v: &Vec3) -> Vec3 {
        *v
    }

    fn is_isometry(&self) -> bool {
        true
    }

    fn inverse_map(&self) -> Arc<dyn InterfaceMap> {
        Arc::new(Identity)
    }
}

/// Rotation by `angle` about the z-axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisRotation {
    pub angle: f64,
}

impl AxisRotation {
    pub fn new(angle: f64) -> Self {
        AxisRotation { angle }
    }

    fn rotate(&self, v: &Vec3, angle: f64) -> Vec3 {
        Rotation3::from_axis_angle(&Vec3::z_axis(), angle) * v
    }
}

impl InterfaceMap for AxisRotation {
    fn name(&self) -> String {
        format!("rotation({})", self.angle)
    }

    fn forward(&self, a: &Vec3) -> Vec3 {
        self.rotate(a, self.angle)
    }

    fn inverse(&self, b: &Vec3) -> Vec3 {
        self.rotate(b, -self.angle)
    }

    fn derivative(&self, _a: &Vec3, v: &Vec3) -> Vec3 {
        self.rotate(v, self.angle)
    }

    fn is_isometry(&self) -> bool {
        true
    }

    fn inverse_map(&self) -> Arc<dyn InterfaceMap> {
        Arc::new(AxisRotation::new(-self.angle))
    }
}

/// Homothety `a ↦ factor·a`, e.g. between concentric circles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaling {
    pub factor: f64,
}

impl Scaling {
    pub fn new(factor: f64) -> Self {
        assert!(factor > 0.0, "scaling factor must be positive");
        Scaling { factor }
    }
}

impl InterfaceMap for Scaling {
    fn name(&self) -> String {
        format!("scaling({})", self.factor)
    }

    fn forward(&self, a: &Vec3) -> Vec3 {
        a * self.factor
    }

    fn inverse(&self, b: &Vec3) -> Vec3 {
        b / self.factor
    }

    fn derivative(&self, _a: &Vec3, v: &Vec3) -> Vec3 {
        v * self.factor
    }

    fn is_isometry(&self) -> bool {
        self.factor == 1.0
    }

    fn inverse_map(&self) -> Arc<dyn InterfaceMap> {
        Arc::new(Scaling::new(1.0 / self.factor))
    }
}

/// Both target pairs and the matching map.
#[derive(Clone, Debug)]
pub struct Coupling {
    pub plus: SubmanifoldPair,
    pub minus: SubmanifoldPair,
    pub map: Arc<dyn InterfaceMap>,
}

impl Coupling {
    pub fn new(plus: SubmanifoldPair, minus: SubmanifoldPair, map: Arc<dyn InterfaceMap>) -> Self {
        Coupling { plus, minus, map }
    }

    /// `(DΦ⁺(a))ᵗ w` for `w` tangent to `M⁻` at `Φ⁺(a)`, as the ambient adjoint.
    pub fn adjoint_derivative(&self, a: &Vec3, w: &Vec3) -> Vec3 {
        self.plus
            .inner
            .tangent_frame(a)
            .vectors()
            .iter()
            .map(|e| e * self.map.derivative(a, e).dot(w))
            .sum()
    }

    /// Transfer of a minus-side flux: `(DΦ⁺(a))ᵗ(wᵀ)` with `ᵀ` the projection onto `Tan(Φ⁺(a), M⁻)`.
    pub fn flux_transfer(&self, a: &Vec3, w: &Vec3) -> Vec3 {
        let b = self.map.forward(a);
        let wt = self.minus.inner.tangent_project(&b, w);
        self.adjoint_derivative(a, &wt)
    }

    /// The same coupling seen from the other side: sides and `Φ±` swapped.
    pub fn swapped(&self) -> Coupling {
        Coupling {
            plus: self.minus.clone(),
            minus: self.plus.clone(),
            map: self.map.inverse_map(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Circle;

    fn circles(map: Arc<dyn InterfaceMap>, r_minus: f64) -> Coupling {
        Coupling::new(
            SubmanifoldPair::whole(Arc::new(Circle::new(1.0))),
            SubmanifoldPair::whole(Arc::new(Circle::new(r_minus))),
            map,
        )
    }

    #[test]
    fn identity_transfer_is_tangential_projection() {
        let c = circles(Arc::new(Identity), 1.0);
        let a = Vec3::new(1.0, 0.0, 0.0);
        let w = Vec3::new(0.4, 0.7, 0.0);
        assert!((c.flux_transfer(&a, &w) - Vec3::new(0.0, 0.7, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rotation_transfer_rotates_back() {
        let beta = 0.7;
        let c = circles(Arc::new(AxisRotation::new(beta)), 1.0);
        let a = Vec3::new(0.6, 0.8, 0.0);
        let b = c.map.forward(&a);
        let w = Vec3::new(-b.y, b.x, 0.0) * 1.5;
        let expected = AxisRotation::new(-beta).forward(&w);
        assert!((c.flux_transfer(&a, &w) - expected).norm() < 1e-14);
    }

    #[test]
    fn scaling_transfer_doubles() {
        let c = circles(Arc::new(Scaling::new(2.0)), 2.0);
        let a = Vec3::new(0.0, 1.0, 0.0);
        let w = Vec3::new(0.3, 0.0, 0.0);
        assert!((c.flux_transfer(&a, &w) - w * 2.0).norm() < 1e-15);
    }

    #[test]
    fn swapped_map_round_trips() {
        let c = circles(Arc::new(AxisRotation::new(0.4)), 1.0);
        let s = c.swapped();
        let a = Vec3::new(0.0, 1.0, 0.0);
        assert!((s.map.forward(&c.map.forward(&a)) - a).norm() < 1e-15);
    }
}
