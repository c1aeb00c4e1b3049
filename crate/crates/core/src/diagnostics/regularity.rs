use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::EdgeDensity;
use crate::error::{Error, Result};
use crate::geometry::Coupling;
use crate::grid::{dist, CoupledField, Side};

/// Exponent of the reported Hölder quotient.
pub const HOLDER_EXPONENT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeEnergy {
    /// Interface nodes are listed once, under [`Side::Plus`].
    pub side: Side,
    pub node: usize,
    pub position: [f64; 3],
    /// `r^{2−n} ∫_{B_r(x)}|∇u|²`.
    pub energy: f64,
    pub flagged: bool,
    /// `max d(u(x), u(y))/|x−y|^α` over same-side nodes `y` with `|x−y| ≤ r`, unflagged nodes only.
    pub holder: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityMap {
    pub r: f64,
    pub eps0: f64,
    pub threshold: f64,
    pub alpha: f64,
    /// Every node whose ball fits inside the domain.
    pub nodes: Vec<NodeEnergy>,
}

impl RegularityMap {
    pub fn flagged(&self) -> impl Iterator<Item = &NodeEnergy> {
        self.nodes.iter().filter(|e| e.flagged)
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged().count()
    }

    pub fn is_flagged(&self, side: Side, node: usize) -> bool {
        self.nodes
            .iter()
            .any(|e| e.flagged && e.side == side && e.node == node)
    }

    pub fn energy_at(&self, x: &[f64; 3]) -> Option<f64> {
        self.nodes
            .iter()
            .find(|e| dist(&e.position, x) < 1e-12)
            .map(|e| e.energy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("side,node,x0,x1,x2,energy,flagged,holder\n");
        for e in &self.nodes {
            let holder = e.holder.map_or(String::new(), |v| format!("{v:.17e}"));
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{},{holder}\n",
                e.side.tag(),
                e.node,
                e.position[0],
                e.position[1],
                e.position[2],
                e.energy,
                u8::from(e.flagged)
            ));
        }
        out
    }
}

fn holder_quotient(u: &CoupledField, side: Side, p: usize, r: f64, alpha: f64) -> f64 {
    let sg = u.grid().side(side);
    let values = u.side(side);
    let m = sg.multi(p);
    let reach = (r / sg.h).floor() as usize;
    let x = sg.position(p);
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..sg.dim {
        lo[a] = m[a].saturating_sub(reach);
        hi[a] = (m[a] + reach).min(sg.counts[a] - 1);
    }
    let mut best: f64 = 0.0;
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let q = sg.index([i, j, k]);
                if q == p {
                    continue;
                }
                let d = dist(&x, &sg.position(q));
                if d <= r + 1e-12 {
                    best = best.max((values[p] - values[q]).norm() / d.powf(alpha));
                }
            }
        }
    }
    best
}

/// Small-energy criterion at scale `r` on every node whose ball fits in the domain.
pub fn singular_set_detect(coupling: &Coupling, u: &CoupledField, r: f64, eps0: f64) -> Result<RegularityMap> {
    let grid = u.grid();
    let h = grid.spacing();
    if r < 4.0 * h * (1.0 - 1e-12) {
        return Err(Error::ScaleBelowGrid { radius: r, min: 4.0 * h });
    }
    if !(eps0 > 0.0) {
        return Err(Error::invalid("ε₀ must be positive"));
    }
    let density = EdgeDensity::new(coupling, u);
    let n = grid.dim() as i32;
    let threshold = eps0 * eps0;
    let mut candidates = Vec::new();
    for side in Side::BOTH {
        let sg = grid.side(side);
        for p in 0..sg.len() {
            if side == Side::Minus && sg.kind(p).on_interface() {
                continue;
            }
            let x = sg.position(p);
            if grid.contains_ball(&x, r) {
                candidates.push((side, p, x));
            }
        }
    }
    let nodes = candidates
        .into_par_iter()
        .map(|(side, node, position)| {
            let energy = r.powi(2 - n) * density.ball(&position, r);
            let flagged = energy > threshold;
            let holder = (!flagged).then(|| holder_quotient(u, side, node, r, HOLDER_EXPONENT));
            NodeEnergy {
                side,
                node,
                position,
                energy,
                flagged,
                holder,
            }
        })
        .collect();
    Ok(RegularityMap {
        r,
        eps0,
        threshold,
        alpha: HOLDER_EXPONENT,
        nodes,
    })
}
