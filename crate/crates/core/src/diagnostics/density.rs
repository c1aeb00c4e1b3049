use crate::geometry::{Coupling, Manifold};
use crate::grid::{CoupledField, Side, SideGrid};

/// Weighted squared intrinsic edge lengths `w·d_N(u_p, u_q)²` of every forward edge, so that
/// a sum over edges approximates `∫|∇u|²`.
pub(crate) struct EdgeDensity {
    sides: [SideEdges; 2],
}

struct SideEdges {
    grid: SideGrid,
    dens: Vec<[f64; 3]>,
    mids: Vec<[[f64; 3]; 3]>,
}

fn ramp(radius: f64, rho: f64, h: f64) -> f64 {
    ((radius - rho) / h + 0.5).clamp(0.0, 1.0)
}

impl EdgeDensity {
    pub fn new(coupling: &Coupling, u: &CoupledField) -> Self {
        let build = |s: Side| {
            let sg = u.grid().side(s);
            let target: &dyn Manifold = match s {
                Side::Plus => coupling.plus.ambient.as_ref(),
                Side::Minus => coupling.minus.ambient.as_ref(),
            };
            let values = u.side(s);
            let scale = sg.h.powi(sg.dim as i32 - 2);
            let dens = (0..sg.len())
                .map(|p| {
                    let m = sg.multi(p);
                    let mut out = [0.0; 3];
                    for (a, slot) in out.iter_mut().enumerate().take(sg.dim) {
                        let Some(q) = sg.neighbor(p, a, true) else { continue };
                        let w: f64 = (0..sg.dim)
                            .filter(|&b| b != a)
                            .map(|b| sg.face_weight(b, m[b]))
                            .product();
                        let d = target.intrinsic_distance(&values[p], &values[q]);
                        *slot = w * scale * d * d;
                    }
                    out
                })
                .collect();
            let mids = (0..sg.len())
                .map(|p| [0, 1, 2].map(|a| if a < sg.dim { Self::midpoint(&sg, p, a) } else { [0.0; 3] }))
                .collect();
            SideEdges { grid: sg, dens, mids }
        };
        EdgeDensity {
            sides: [build(Side::Plus), build(Side::Minus)],
        }
    }

    fn midpoint(sg: &SideGrid, p: usize, axis: usize) -> [f64; 3] {
        let mut x = sg.position(p);
        let dir = if axis == sg.dim - 1 { sg.side.sign() } else { 1.0 };
        x[axis] += 0.5 * dir * sg.h;
        x
    }

    /// `∫_{B_r(x₀)} |∇u|²` over both sides, with a linear ramp across one cell at the sphere.
    pub fn ball(&self, center: &[f64; 3], radius: f64) -> f64 {
        let mut total = 0.0;
        for SideEdges { grid: sg, dens, mids } in &self.sides {
            let outer = (radius + 0.5 * sg.h).powi(2);
            let inner = (radius - 0.5 * sg.h).max(0.0).powi(2);
            let t = sg.grid_coords(center);
            let reach = radius / sg.h + 1.5;
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            for a in 0..sg.dim {
                let c = sg.counts[a] as f64 - 1.0;
                lo[a] = (t[a] - reach).floor().clamp(0.0, c) as usize;
                hi[a] = (t[a] + reach).ceil().clamp(0.0, c) as usize;
            }
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let p = sg.index([i, j, k]);
                        for a in 0..sg.dim {
                            let e = dens[p][a];
                            if e == 0.0 {
                                continue;
                            }
                            let mid = &mids[p][a];
                            let d2 = (mid[0] - center[0]).powi(2)
                                + (mid[1] - center[1]).powi(2)
                                + (mid[2] - center[2]).powi(2);
                            if d2 >= outer {
                                continue;
                            }
                            total += if d2 <= inner { e } else { e * ramp(radius, d2.sqrt(), sg.h) };
                        }
                    }
                }
            }
        }
        total
    }

    /// `Σ_edges w d² f(midpoint)` over the whole grid.
    pub fn weighted(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        let mut total = 0.0;
        for side in &self.sides {
            for (p, row) in side.dens.iter().enumerate() {
                for (a, &e) in row.iter().enumerate().take(side.grid.dim) {
                    if e != 0.0 {
                        total += e * f(&side.mids[p][a]);
                    }
                }
            }
        }
        total
    }
}

/// Radial cutoff used for annuli: `1` inside `radius − h/2`, `0` outside `radius + h/2`.
pub(crate) fn ball_weight(radius: f64, rho: f64, h: f64) -> f64 {
    ramp(radius, rho, h)
}
