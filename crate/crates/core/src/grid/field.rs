use serde::{Deserialize, Serialize};

use super::split::{Side, SplitGrid};
use crate::error::{Error, Result};
use crate::geometry::{distance_to, Coupling, Vec3};

/// A two-sided manifold-valued field. Each side stores its closed half grid, so the
/// depth-zero layers hold the one-sided traces `u±` on `Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledField {
    grid: SplitGrid,
    plus: Vec<Vec3>,
    minus: Vec<Vec3>,
}

impl CoupledField {
    pub fn new(grid: SplitGrid, plus: Vec<Vec3>, minus: Vec<Vec3>) -> Result<Self> {
        if plus.len() != grid.side(Side::Plus).len() || minus.len() != grid.side(Side::Minus).len() {
            return Err(Error::invalid("field length does not match the grid"));
        }
        Ok(CoupledField { grid, plus, minus })
    }

    pub fn from_fn(grid: SplitGrid, f: impl Fn(Side, &[f64; 3]) -> Vec3) -> Self {
        let eval = |s: Side| {
            let sg = grid.side(s);
            (0..sg.len()).map(|i| f(s, &sg.position(i))).collect()
        };
        CoupledField {
            plus: eval(Side::Plus),
            minus: eval(Side::Minus),
            grid,
        }
    }

    pub fn constant(grid: SplitGrid, plus: Vec3, minus: Vec3) -> Self {
        CoupledField::from_fn(grid, |s, _| match s {
            Side::Plus => plus,
            Side::Minus => minus,
        })
    }

    pub fn grid(&self) -> &SplitGrid {
        &self.grid
    }

    pub fn side(&self, s: Side) -> &[Vec3] {
        match s {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn side_mut(&mut self, s: Side) -> &mut [Vec3] {
        match s {
            Side::Plus => &mut self.plus,
            Side::Minus => &mut self.minus,
        }
    }

    pub fn value(&self, s: Side, idx: usize) -> Vec3 {
        self.side(s)[idx]
    }

    pub fn trace(&self, s: Side) -> TraceField {
        let sg = self.grid.side(s);
        let nodes = sg.interface_nodes();
        TraceField {
            carrier: Carrier::Interface(s),
            points: nodes.iter().map(|&i| sg.position(i)).collect(),
            sides: vec![s; nodes.len()],
            values: nodes.iter().map(|&i| self.side(s)[i]).collect(),
            nodes,
        }
    }

    /// `max |u⁻ − Φ⁺(u⁺)|` over all interface nodes.
    pub fn matching_residual(&self, coupling: &Coupling) -> f64 {
        self.grid
            .side(Side::Plus)
            .interface_nodes()
            .into_iter()
            .map(|i| (self.minus[i] - coupling.map.forward(&self.plus[i])).norm())
            .fold(0.0, f64::max)
    }

    pub fn membership(&self, coupling: &Coupling) -> Membership {
        let mut m = Membership::default();
        for s in Side::BOTH {
            let pair = match s {
                Side::Plus => &coupling.plus,
                Side::Minus => &coupling.minus,
            };
            let sg = self.grid.side(s);
            let values = self.side(s);
            let on_n = values
                .iter()
                .map(|v| distance_to(v, pair.ambient.as_ref()))
                .fold(0.0, f64::max);
            let on_m = sg
                .interface_nodes()
                .into_iter()
                .map(|i| distance_to(&values[i], pair.inner.as_ref()))
                .fold(0.0, f64::max);
            match s {
                Side::Plus => {
                    m.target_plus = on_n;
                    m.interface_plus = on_m;
                }
                Side::Minus => {
                    m.target_minus = on_n;
                    m.interface_minus = on_m;
                }
            }
        }
        m.matching = self.matching_residual(coupling);
        m
    }

    /// The field on the reflected grid, with the sides exchanged.
    pub fn mirrored(&self) -> CoupledField {
        CoupledField {
            grid: self.grid.mirrored(),
            plus: self.minus.clone(),
            minus: self.plus.clone(),
        }
    }

    pub fn max_distance(&self, other: &CoupledField) -> f64 {
        Side::BOTH
            .iter()
            .flat_map(|&s| self.side(s).iter().zip(other.side(s)).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max)
    }

    pub fn map_values(&self, f: impl Fn(Side, usize, &Vec3) -> Vec3) -> CoupledField {
        let apply = |s: Side| {
            self.side(s)
                .iter()
                .enumerate()
                .map(|(i, v)| f(s, i, v))
                .collect()
        };
        CoupledField {
            grid: self.grid,
            plus: apply(Side::Plus),
            minus: apply(Side::Minus),
        }
    }
}

/// Constraint residuals of a field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub target_plus: f64,
    pub target_minus: f64,
    pub interface_plus: f64,
    pub interface_minus: f64,
    pub matching: f64,
}

impl Membership {
    pub fn max(&self) -> f64 {
        [
            self.target_plus,
            self.target_minus,
            self.interface_plus,
            self.interface_minus,
            self.matching,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Where a trace lives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Carrier {
    Interface(Side),
    Boundary(Side),
    Sphere { center: [f64; 3], radius: f64 },
}

/// Values on a node subset or on sample points of a sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceField {
    pub carrier: Carrier,
    /// Side-local node indices; empty for sphere samples.
    pub nodes: Vec<usize>,
    pub points: Vec<[f64; 3]>,
    pub sides: Vec<Side>,
    pub values: Vec<Vec3>,
}

impl TraceField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisRotation, Circle, SubmanifoldPair};
    use std::sync::Arc;

    #[test]
    fn rotated_constant_is_matched() {
        let grid = SplitGrid::cube(2, 1.0, 0.25).unwrap();
        let circle = Arc::new(Circle::new(1.0));
        let coupling = Coupling::new(
            SubmanifoldPair::whole(circle.clone()),
            SubmanifoldPair::whole(circle.clone()),
            Arc::new(AxisRotation::new(0.5)),
        );
        let p = circle.point(0.1);
        let f = CoupledField::constant(grid, p, circle.point(0.6));
        assert!(f.matching_residual(&coupling) < 1e-15);
        assert!(f.membership(&coupling).max() < 1e-15);
        let t = f.trace(Side::Minus);
        assert_eq!(t.len(), 9);
        assert!(t.points.iter().all(|x| x[1] == 0.0));
    }
}
