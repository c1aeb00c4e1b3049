use std::sync::Arc;

use super::manifold::{distance_to, Frame, Manifold, Vec3};
use crate::error::{Error, Result};

/// A target `N` together with its distinguished interface submanifold `M ⊂ N`.
#[derive(Clone, Debug)]
pub struct SubmanifoldPair {
    pub ambient: Arc<dyn Manifold>,
    pub inner: Arc<dyn Manifold>,
}

impl SubmanifoldPair {
    /// Pairs `N` with `M`, checking that sample points of `M` lie on `N`.
    pub fn new(ambient: Arc<dyn Manifold>, inner: Arc<dyn Manifold>) -> Result<Self> {
        if inner.dim() > ambient.dim() {
            return Err(Error::invalid(format!(
                "{} has larger dimension than {}",
                inner.name(),
                ambient.name()
            )));
        }
        let tol = 10.0 * ambient.membership_tol().max(inner.membership_tol());
        for p in inner.sample_points(32) {
            let d = distance_to(&p, ambient.as_ref());
            if d > tol {
                return Err(Error::invalid(format!(
                    "{} is not contained in {}: sample at distance {d:.3e}",
                    inner.name(),
                    ambient.name()
                )));
            }
        }
        Ok(SubmanifoldPair { ambient, inner })
    }

    /// The pair with `M = N`.
    pub fn whole(ambient: Arc<dyn Manifold>) -> Self {
        SubmanifoldPair {
            inner: ambient.clone(),
            ambient,
        }
    }

    pub fn is_whole(&self) -> bool {
        Arc::ptr_eq(&self.ambient, &self.inner)
    }

    /// Projector onto `Nor(a, M) ∩ Tan(a, N)`.
    pub fn normal_in_n_project(&self, a: &Vec3, v: &Vec3) -> Vec3 {
        self.ambient.tangent_project(a, v) - self.inner.tangent_project(a, v)
    }

    /// Orthonormal frame of `Tan(a, M)` followed by `Nor(a, M) ∩ Tan(a, N)`.
    pub fn split_frame(&self, a: &Vec3) -> (Frame, Frame) {
        let tan = self.inner.tangent_frame(a);
        let mut normals: Vec<Vec3> = Vec::new();
        for e in self.ambient.tangent_frame(a).vectors() {
            let mut v = e - tan.project(e);
            for n in &normals {
                v -= n * n.dot(&v);
            }
            if v.norm() > 1e-8 {
                normals.push(v.normalize());
            }
        }
        normals.truncate(self.ambient.dim() - self.inner.dim());
        (tan, Frame::new(&normals))
    }

    /// `|P_M v + P_Nor v - P_N v|`.
    pub fn direct_sum_residual(&self, a: &Vec3, v: &Vec3) -> f64 {
        let sum = self.inner.tangent_project(a, v) + self.normal_in_n_project(a, v);
        (sum - self.ambient.tangent_project(a, v)).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Circle, Sphere};

    #[test]
    fn equator_in_sphere() {
        let pair = SubmanifoldPair::new(Arc::new(Sphere::new(1.0)), Arc::new(Circle::in_space(1.0)))
            .unwrap();
        let a = Vec3::new(0.0, 1.0, 0.0);
        let (tan, nor) = pair.split_frame(&a);
        assert_eq!(tan.len(), 1);
        assert_eq!(nor.len(), 1);
        assert!((nor.vectors()[0].z.abs() - 1.0).abs() < 1e-14);
        let v = Vec3::new(0.3, -0.2, 0.5);
        assert!(pair.direct_sum_residual(&a, &v) < 1e-15);
    }

    #[test]
    fn rejects_non_inclusion() {
        let r = SubmanifoldPair::new(Arc::new(Sphere::new(1.0)), Arc::new(Circle::in_space(0.5)));
        assert!(r.is_err());
    }
}
