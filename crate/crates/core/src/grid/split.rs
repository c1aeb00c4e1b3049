use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which half of the split domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `xₙ > 0`.
    Plus,
    /// `xₙ < 0`.
    Minus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Plus, Side::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Classification of a node within one side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    /// On `Σ±`, carries Dirichlet data.
    Boundary,
    /// On `Γ`, away from `∂Ω`.
    Interface,
    /// On `Γ ∩ ∂Ω`.
    InterfaceEdge,
}

impl NodeKind {
    pub fn is_fixed(self) -> bool {
        matches!(self, NodeKind::Boundary | NodeKind::InterfaceEdge)
    }

    pub fn on_interface(self) -> bool {
        matches!(self, NodeKind::Interface | NodeKind::InterfaceEdge)
    }
}

/// Tensor grid on a box split by the plane `xₙ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitGrid {
    dim: usize,
    h: f64,
    lower: [f64; 3],
    upper: [f64; 3],
    counts: [usize; 3],
    gamma: usize,
}

fn cells(len: f64, h: f64, path: &str) -> Result<usize> {
    let c = len / h;
    let r = c.round();
    if r < 1.0 || (c - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::config(path, format!("spacing {h} does not divide length {len}")));
    }
    Ok(r as usize)
}

impl SplitGrid {
    pub fn new(dim: usize, h: f64, lower: &[f64], upper: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::config("grid.dim", "dimension must be 1, 2 or 3"));
        }
        if !(h > 0.0) {
            return Err(Error::config("grid.h", "spacing must be positive"));
        }
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::config("grid.lower", "extents must have one entry per axis"));
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        let mut counts = [1; 3];
        for a in 0..dim {
            if !(upper[a] > lower[a]) {
                return Err(Error::config("grid.upper", "upper extent must exceed lower"));
            }
            lo[a] = lower[a];
            hi[a] = upper[a];
            counts[a] = cells(upper[a] - lower[a], h, "grid.h")? + 1;
        }
        let n = dim - 1;
        if !(lower[n] < 0.0 && upper[n] > 0.0) {
            return Err(Error::config("grid.lower", "the last axis must straddle the interface xₙ = 0"));
        }
        let gamma = cells(-lower[n], h, "grid.lower")?;
        if gamma < 2 || counts[n] - 1 - gamma < 2 {
            return Err(Error::config("grid.h", "each side needs at least two cells across"));
        }
        if counts[..n].iter().any(|&c| c < 3) {
            return Err(Error::config("grid.h", "each tangential axis needs at least three nodes"));
        }
        Ok(SplitGrid {
            dim,
            h,
            lower: lo,
            upper: hi,
            counts,
            gamma,
        })
    }

    /// The cube `[-half, half]ⁿ`.
    pub fn cube(dim: usize, half: f64, h: f64) -> Result<Self> {
        SplitGrid::new(dim, h, &vec![-half; dim], &vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn side(&self, side: Side) -> SideGrid {
        let n = self.dim - 1;
        let mut counts = self.counts;
        counts[n] = match side {
            Side::Plus => self.counts[n] - self.gamma,
            Side::Minus => self.gamma + 1,
        };
        SideGrid {
            side,
            dim: self.dim,
            h: self.h,
            counts,
            lower: self.lower,
        }
    }

    pub fn node_count(&self) -> usize {
        self.side(Side::Plus).len() + self.side(Side::Minus).len()
    }

    /// Grid reflected through `xₙ = 0`.
    pub fn mirrored(&self) -> SplitGrid {
        let n = self.dim - 1;
        let mut g = *self;
        g.lower[n] = -self.upper[n];
        g.upper[n] = -self.lower[n];
        g.gamma = self.counts[n] - 1 - self.gamma;
        g
    }

    /// Whether the closed ball lies in the closed box.
    pub fn contains_ball(&self, center: &[f64; 3], radius: f64) -> bool {
        let tol = 1e-12 * self.h;
        (0..self.dim).all(|a| {
            center[a] - radius >= self.lower[a] - tol && center[a] + radius <= self.upper[a] + tol
        })
    }
}

/// One closed half of the split grid, indexed with the depth `|xₙ|/h` as last axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SideGrid {
    pub side: Side,
    pub dim: usize,
    pub h: f64,
    pub counts: [usize; 3],
    lower: [f64; 3],
}

impl SideGrid {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn depth_axis(&self) -> usize {
        self.dim - 1
    }

    pub fn index(&self, m: [usize; 3]) -> usize {
        m[0] + self.counts[0] * (m[1] + self.counts[1] * m[2])
    }

    pub fn multi(&self, idx: usize) -> [usize; 3] {
        let i0 = idx % self.counts[0];
        let rest = idx / self.counts[0];
        [i0, rest % self.counts[1], rest / self.counts[1]]
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let m = self.multi(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = if a == self.dim - 1 {
                self.side.sign() * m[a] as f64 * self.h
            } else {
                self.lower[a] + m[a] as f64 * self.h
            };
        }
        x
    }

    /// Grid coordinate along each axis, depth measured away from `Γ`.
    pub fn grid_coords(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut t = [0.0; 3];
        for a in 0..self.dim {
            t[a] = if a == self.dim - 1 {
                self.side.sign() * x[a] / self.h
            } else {
                (x[a] - self.lower[a]) / self.h
            };
        }
        t
    }

    fn on_face(&self, axis: usize, i: usize) -> bool {
        i == 0 || i + 1 == self.counts[axis]
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        let m = self.multi(idx);
        let n = self.dim - 1;
        let lateral = (0..n).any(|a| self.on_face(a, m[a]));
        match (m[n] == 0, lateral || m[n] + 1 == self.counts[n]) {
            (true, _) if lateral => NodeKind::InterfaceEdge,
            (true, _) => NodeKind::Interface,
            (false, true) => NodeKind::Boundary,
            (false, false) => NodeKind::Interior,
        }
    }

    /// Trapezoidal weight of a node along one axis.
    pub fn face_weight(&self, axis: usize, i: usize) -> f64 {
        if self.on_face(axis, i) {
            0.5
        } else {
            1.0
        }
    }

    /// Lumped trapezoidal mass `hⁿ Π weights`.
    pub fn mass(&self, idx: usize) -> f64 {
        let m = self.multi(idx);
        (0..self.dim)
            .map(|a| self.face_weight(a, m[a]))
            .product::<f64>()
            * self.h.powi(self.dim as i32)
    }

    pub fn masses(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.mass(i)).collect()
    }

    /// Indices of the depth-zero layer, which is the same on both sides.
    pub fn interface_nodes(&self) -> Vec<usize> {
        let layer: usize = self.counts[..self.dim - 1].iter().product();
        (0..layer).collect()
    }

    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let mut m = self.multi(idx);
        if forward {
            if m[axis] + 1 >= self.counts[axis] {
                return None;
            }
            m[axis] += 1;
        } else {
            if m[axis] == 0 {
                return None;
            }
            m[axis] -= 1;
        }
        Some(self.index(m))
    }

    /// Every edge once, with the energy weight `hⁿ⁻² Π transverse weights`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let scale = self.h.powi(self.dim as i32 - 2);
        let mut out = Vec::with_capacity(self.len() * self.dim);
        for idx in 0..self.len() {
            let m = self.multi(idx);
            for a in 0..self.dim {
                if m[a] + 1 >= self.counts[a] {
                    continue;
                }
                let w: f64 = (0..self.dim)
                    .filter(|&b| b != a)
                    .map(|b| self.face_weight(b, m[b]))
                    .product();
                let mut q = m;
                q[a] += 1;
                out.push((idx, self.index(q), w * scale));
            }
        }
        out
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_edges(self.len(), &self.edges())
    }
}

/// Weighted undirected graph in compressed rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl Adjacency {
    /// Builds rows from an edge list; repeated edges have their weights summed.
    pub fn from_edges(nodes: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes];
        for &(a, b, w) in edges {
            rows[a].push((b, w));
            rows[b].push((a, w));
        }
        let mut offsets = Vec::with_capacity(nodes + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (q, w) in row {
                if last == Some(q) {
                    *weights.last_mut().unwrap() += w;
                } else {
                    neighbors.push(q);
                    weights.push(w);
                    last = Some(q);
                }
            }
            offsets.push(neighbors.len());
        }
        Adjacency {
            offsets,
            neighbors,
            weights,
        }
    }

    pub fn nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[p]..self.offsets[p + 1];
        self.neighbors[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn degree(&self, p: usize) -> f64 {
        self.weights[self.offsets[p]..self.offsets[p + 1]].iter().sum()
    }

    /// `(L f)_p = Σ_q w_pq (f_p − f_q)` for any vector-space valued `f`.
    pub fn apply<T>(&self, f: &[T], out: &mut [T])
    where
        T: Copy
            + Send
            + Sync
            + std::ops::Sub<Output = T>
            + std::ops::Add<Output = T>
            + std::ops::Mul<f64, Output = T>,
    {
        out.par_iter_mut().enumerate().for_each(|(p, o)| {
            let mut acc = f[p] * 0.0;
            for (q, w) in self.row(p) {
                acc = acc + (f[p] - f[q]) * w;
            }
            *o = acc;
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_classes_partition_each_side() {
        let g = SplitGrid::cube(2, 1.0, 0.25).unwrap();
        for s in Side::BOTH {
            let sg = g.side(s);
            assert_eq!(sg.len(), 9 * 5);
            let gamma = (0..sg.len()).filter(|&i| sg.kind(i) == NodeKind::Interface).count();
            let edge = (0..sg.len()).filter(|&i| sg.kind(i) == NodeKind::InterfaceEdge).count();
            let bnd = (0..sg.len()).filter(|&i| sg.kind(i) == NodeKind::Boundary).count();
            let int = (0..sg.len()).filter(|&i| sg.kind(i) == NodeKind::Interior).count();
            assert_eq!((gamma, edge, bnd, int), (7, 2, 15, 21));
            assert_eq!(gamma + edge + bnd + int, sg.len());
        }
    }

    #[test]
    fn masses_sum_to_volume() {
        let g = SplitGrid::new(3, 0.25, &[-1.0, 0.0, -0.5], &[1.0, 0.5, 1.0]).unwrap();
        let total: f64 = Side::BOTH.iter().map(|&s| g.side(s).masses().iter().sum::<f64>()).sum();
        assert!((total - 2.0 * 0.5 * 1.5).abs() < 1e-14);
    }

    #[test]
    fn positions_straddle_the_interface() {
        let g = SplitGrid::cube(1, 1.0, 0.5).unwrap();
        let p = g.side(Side::Plus);
        let m = g.side(Side::Minus);
        assert_eq!(p.position(2)[0], 1.0);
        assert_eq!(m.position(2)[0], -1.0);
        assert_eq!(p.kind(0), NodeKind::Interface);
        assert_eq!(m.kind(2), NodeKind::Boundary);
    }

    #[test]
    fn rejects_misaligned_spacing() {
        assert!(SplitGrid::cube(2, 1.0, 0.3).is_err());
        assert!(SplitGrid::new(1, 0.25, &[0.25], &[1.0]).is_err());
    }

    #[test]
    fn mirrored_grid_swaps_side_shapes() {
        let g = SplitGrid::new(2, 0.25, &[-1.0, -0.5], &[1.0, 1.0]).unwrap();
        let m = g.mirrored();
        assert_eq!(g.side(Side::Plus).counts, m.side(Side::Minus).counts);
    }
}
