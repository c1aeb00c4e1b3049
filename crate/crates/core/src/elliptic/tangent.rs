//! Tangent-plane unknowns `c ↦ δu = Bc` and the system `(σM + BᵀLB) c = r`.
//!
//! Free interior nodes carry coordinates in a frame of `Tan(u, N±)`. A free interface node
//! carries coordinates in `Tan(m, M⁺)`; the same coordinates move the minus trace by
//! `DΦ⁺(m)`, so every displacement respects the linearized matching.

use rayon::prelude::*;

use super::init::{project_nodes, projection_failure};
use super::problem::AdmissibleProblem;
use crate::error::Result;
use crate::geometry::{project_to_manifold, Vec3};
use crate::grid::{CoupledField, GridOperators, NodeKind, Side};
use crate::linalg::{conjugate_gradient, SOLVE_TOL};

#[derive(Clone, Copy, Debug)]
struct NodeBasis {
    start: usize,
    count: usize,
    vectors: [Vec3; 3],
}

const FIXED: NodeBasis = NodeBasis {
    start: 0,
    count: 0,
    vectors: [Vec3::new(0.0, 0.0, 0.0); 3],
};

fn slot(s: Side) -> usize {
    match s {
        Side::Plus => 0,
        Side::Minus => 1,
    }
}

#[derive(Clone, Debug)]
pub(crate) struct TangentSpace {
    sides: [Vec<NodeBasis>; 2],
    len: usize,
}

impl TangentSpace {
    pub fn new(problem: &AdmissibleProblem, u: &CoupledField) -> Self {
        let coupling = &problem.coupling;
        let mut len = 0;
        let mut sides = [Vec::new(), Vec::new()];
        let plus_grid = problem.grid.side(Side::Plus);
        let mut plus = vec![FIXED; plus_grid.len()];
        let mut minus_gamma = vec![FIXED; plus_grid.len()];
        for (i, b) in plus.iter_mut().enumerate() {
            let a = u.value(Side::Plus, i);
            let frame = match plus_grid.kind(i) {
                NodeKind::Interior => coupling.plus.ambient.tangent_frame(&a),
                NodeKind::Interface => coupling.plus.inner.tangent_frame(&a),
                _ => continue,
            };
            let mut vectors = [Vec3::zeros(); 3];
            vectors[..frame.len()].copy_from_slice(frame.vectors());
            *b = NodeBasis {
                start: len,
                count: frame.len(),
                vectors,
            };
            if plus_grid.kind(i) == NodeKind::Interface {
                let mut image = [Vec3::zeros(); 3];
                for (k, e) in frame.vectors().iter().enumerate() {
                    image[k] = coupling.map.derivative(&a, e);
                }
                minus_gamma[i] = NodeBasis {
                    vectors: image,
                    ..*b
                };
            }
            len += frame.len();
        }
        let minus_grid = problem.grid.side(Side::Minus);
        let mut minus = vec![FIXED; minus_grid.len()];
        for (i, b) in minus.iter_mut().enumerate() {
            match minus_grid.kind(i) {
                NodeKind::Interior => {
                    let frame = coupling.minus.ambient.tangent_frame(&u.value(Side::Minus, i));
                    let mut vectors = [Vec3::zeros(); 3];
                    vectors[..frame.len()].copy_from_slice(frame.vectors());
                    *b = NodeBasis {
                        start: len,
                        count: frame.len(),
                        vectors,
                    };
                    len += frame.len();
                }
                NodeKind::Interface => *b = minus_gamma[i],
                _ => {}
            }
        }
        sides[0] = plus;
        sides[1] = minus;
        TangentSpace { sides, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// `Bc` on both sides.
    pub fn lift(&self, c: &[f64]) -> [Vec<Vec3>; 2] {
        let lift_side = |basis: &[NodeBasis]| {
            basis
                .par_iter()
                .map(|b| {
                    (0..b.count)
                        .map(|k| b.vectors[k] * c[b.start + k])
                        .sum::<Vec3>()
                })
                .collect::<Vec<_>>()
        };
        [lift_side(&self.sides[0]), lift_side(&self.sides[1])]
    }

    /// `Bᵀ` applied to ambient vectors on both sides.
    pub fn restrict(&self, plus: &[Vec3], minus: &[Vec3]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (basis, values) in [(&self.sides[0], plus), (&self.sides[1], minus)] {
            for (b, v) in basis.iter().zip(values) {
                for k in 0..b.count {
                    out[b.start + k] += b.vectors[k].dot(v);
                }
            }
        }
        out
    }

    /// Diagonal of `σ BᵀMB + BᵀLB` with `L` replaced by its degrees.
    pub fn diagonal(&self, ops: &GridOperators, sigma: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for s in Side::BOTH {
            let so = ops.side(s);
            for (p, b) in self.sides[slot(s)].iter().enumerate() {
                let w = so.adjacency.degree(p) + sigma * so.masses[p];
                for k in 0..b.count {
                    out[b.start + k] += w * b.vectors[k].norm_squared();
                }
            }
        }
        out
    }

    /// Diagonal of `BᵀMB`.
    pub fn masses(&self, ops: &GridOperators) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for s in Side::BOTH {
            let so = ops.side(s);
            for (p, b) in self.sides[slot(s)].iter().enumerate() {
                for k in 0..b.count {
                    out[b.start + k] += so.masses[p] * b.vectors[k].norm_squared();
                }
            }
        }
        out
    }

    /// `BᵀLu`, the tangential energy gradient.
    pub fn gradient(&self, ops: &GridOperators, u: &CoupledField) -> Vec<f64> {
        let lu = Side::BOTH.map(|s| {
            let values = u.side(s);
            let mut out = vec![Vec3::zeros(); values.len()];
            ops.side(s).adjacency.apply(values, &mut out);
            out
        });
        self.restrict(&lu[0], &lu[1])
    }

    /// Solves `(σ BᵀMB + BᵀLB) c = rhs`.
    pub fn solve(&self, ops: &GridOperators, sigma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let apply = |c: &[f64], out: &mut [f64]| {
            let d = self.lift(c);
            let ad = Side::BOTH.map(|s| {
                let so = ops.side(s);
                let ds = &d[slot(s)];
                let mut l = vec![Vec3::zeros(); ds.len()];
                so.adjacency.apply(ds, &mut l);
                l.par_iter_mut()
                    .zip(ds.par_iter().zip(so.masses.par_iter()))
                    .for_each(|(li, (di, mi))| *li += di * (sigma * mi));
                l
            });
            out.copy_from_slice(&self.restrict(&ad[0], &ad[1]));
        };
        let diag = self.diagonal(ops, sigma);
        let mut c = vec![0.0; self.len];
        conjugate_gradient(apply, rhs, &diag, &mut c, SOLVE_TOL, 20 * self.len + 100)?;
        Ok(c)
    }
}

/// `u + α·δ` mapped back into the admissible class: interior nodes through `Π_{N±}`, the
/// interface through `Π_{M⁺}` with the minus trace slaved by `Φ⁺`.
pub(crate) fn retract(
    problem: &AdmissibleProblem,
    u: &CoupledField,
    delta: &[Vec<Vec3>; 2],
    alpha: f64,
) -> Result<CoupledField> {
    let coupling = &problem.coupling;
    let mut out = u.clone();
    for s in Side::BOTH {
        let sg = problem.grid.side(s);
        let values = out.side_mut(s);
        for (v, d) in values.iter_mut().zip(&delta[slot(s)]) {
            *v += d * alpha;
        }
        let target = match s {
            Side::Plus => coupling.plus.ambient.as_ref(),
            Side::Minus => coupling.minus.ambient.as_ref(),
        };
        project_nodes(
            values,
            (0..sg.len()).filter(|&i| sg.kind(i) == NodeKind::Interior),
            target,
            s,
        )?;
    }
    let sg = problem.grid.side(Side::Plus);
    for i in sg.interface_nodes() {
        if sg.kind(i) != NodeKind::Interface {
            continue;
        }
        let m = project_to_manifold(&out.value(Side::Plus, i), coupling.plus.inner.as_ref())
            .map_err(|e| projection_failure(Side::Plus, i, e))?;
        out.side_mut(Side::Plus)[i] = m;
        out.side_mut(Side::Minus)[i] = coupling.map.forward(&m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::elliptic::{initialize_admissible, AngleProfile, BoundaryForm};
    use crate::geometry::{AxisRotation, Circle, Coupling, SubmanifoldPair};
    use crate::grid::SplitGrid;
    use crate::linalg::dot;

    fn problem(h: f64) -> AdmissibleProblem {
        let pair = SubmanifoldPair::whole(Arc::new(Circle::new(1.0)));
        let coupling = Coupling::new(pair.clone(), pair, Arc::new(AxisRotation::new(0.4)));
        let profile = |offset| AngleProfile {
            offset,
            gradient: [0.5, -0.3, 0.0],
            quadratic: 0.4,
        };
        let form = BoundaryForm::AngleLinear {
            radius: 1.0,
            plus: profile(0.1),
            minus: profile(0.5),
        };
        AdmissibleProblem::new(SplitGrid::cube(2, 1.0, h).unwrap(), coupling, form).unwrap()
    }

    #[test]
    fn first_variation_matches_central_difference() {
        let p = problem(0.25);
        let u = initialize_admissible(&p).unwrap();
        let ops = GridOperators::new(&p.grid);
        let space = TangentSpace::new(&p, &u);
        let g = space.gradient(&ops, &u);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let c: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let delta = space.lift(&c);
            let t = 1e-4;
            let ep = ops.energy(&retract(&p, &u, &delta, t).unwrap());
            let em = ops.energy(&retract(&p, &u, &delta, -t).unwrap());
            let fd = (ep - em) / (2.0 * t);
            let exact = dot(&g, &c);
            assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn metric_solve_gives_descent() {
        let p = problem(0.125);
        let u = initialize_admissible(&p).unwrap();
        let ops = GridOperators::new(&p.grid);
        let space = TangentSpace::new(&p, &u);
        let g = space.gradient(&ops, &u);
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let c = space.solve(&ops, 1.0, &neg).unwrap();
        assert!(dot(&g, &c) < 0.0);
    }

    #[test]
    fn restrict_is_adjoint_of_lift() {
        let p = problem(0.25);
        let u = initialize_admissible(&p).unwrap();
        let space = TangentSpace::new(&p, &u);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = Side::BOTH.map(|s| {
            (0..p.grid.side(s).len())
                .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()))
                .collect::<Vec<_>>()
        });
        let bc = space.lift(&c);
        let lhs: f64 = (0..2).map(|k| bc[k].iter().zip(&w[k]).map(|(a, b)| a.dot(b)).sum::<f64>()).sum();
        let rhs = dot(&c, &space.restrict(&w[0], &w[1]));
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn retraction_stays_admissible(seed in any::<u64>(), alpha in -0.5f64..0.5) {
            let p = problem(0.25);
            let u = initialize_admissible(&p).unwrap();
            let space = TangentSpace::new(&p, &u);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<f64> = (0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = retract(&p, &u, &space.lift(&c), alpha).unwrap();
            prop_assert!(v.membership(&p.coupling).max() < 1e-12);
            for s in Side::BOTH {
                let sg = p.grid.side(s);
                for i in 0..sg.len() {
                    if sg.kind(i).is_fixed() {
                        prop_assert_eq!(v.value(s, i), u.value(s, i));
                    }
                }
            }
        }
    }
}
