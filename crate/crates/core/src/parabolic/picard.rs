use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::{Frame, Trajectory};
use crate::elliptic::AdmissibleProblem;
use crate::error::{Error, Result};
use crate::geometry::{Chart, Vec3, DEFAULT_MAX_CONDITION};
use crate::grid::{side_gradient, Adjacency, CoupledField, GridOperators, Side, SideGrid};
use crate::linalg::solve_dirichlet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    /// Time horizon `T`.
    pub t_end: f64,
    pub dt: f64,
    /// Hölder exponent of the proxy norm.
    pub alpha: f64,
    /// Largest acceptable successive-difference ratio.
    pub theta_target: f64,
    pub max_sweeps: usize,
    /// Stop once successive iterates differ by less than this in the proxy norm.
    pub tol: f64,
    /// Chart scale `r₀`.
    pub chart_scale: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            t_end: 0.05,
            dt: 1e-3,
            alpha: 0.5,
            theta_target: 0.9,
            max_sweeps: 60,
            tol: 1e-10,
            chart_scale: 0.5,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) {
            return Err(Error::config("picard.t_end", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_end) {
            return Err(Error::config("picard.dt", "must lie in (0, t_end]"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("picard.alpha", "must lie in (0, 1)"));
        }
        if !(self.theta_target > 0.0 && self.theta_target < 1.0) {
            return Err(Error::config("picard.theta_target", "must lie in (0, 1)"));
        }
        if self.max_sweeps < 1 {
            return Err(Error::config("picard.max_sweeps", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("picard.tol", "must be positive"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }
}

#[derive(Clone, Debug)]
pub struct PicardRun {
    /// The limit trajectory mapped back to the targets, one frame per time step.
    pub trajectory: Trajectory,
    /// Proxy norms of successive differences `‖V_{j} − V_{j−1}‖`.
    pub differences: Vec<f64>,
    /// `differences[j+1] / differences[j]` while both are above round-off.
    pub ratios: Vec<f64>,
    /// Largest measured ratio, 0 when the map reached its fixed point at once.
    pub contraction: f64,
    pub sweeps: usize,
    /// Sup-norm change in the last sweep.
    pub residual: f64,
    pub converged: bool,
}

/// Chart coordinates on both sides for every time level; `Vec3` holds up to three components.
type Coords = [Vec<Vec3>; 2];

struct Layout {
    grids: [SideGrid; 2],
    ops: GridOperators,
    /// Merged index of every minus node; interface nodes share the plus index.
    minus_global: Vec<usize>,
    merged: Adjacency,
    merged_mass: Vec<f64>,
    merged_fixed: Vec<bool>,
    side_fixed: [Vec<bool>; 2],
    k: usize,
    m: usize,
}

impl Layout {
    fn new(problem: &AdmissibleProblem, k: usize, m: usize) -> Self {
        let grid = &problem.grid;
        let ops = GridOperators::new(grid);
        let grids = [grid.side(Side::Plus), grid.side(Side::Minus)];
        let np = grids[0].len();
        let mut next = np;
        let minus_global: Vec<usize> = (0..grids[1].len())
            .map(|i| {
                if grids[1].kind(i).on_interface() {
                    i
                } else {
                    next += 1;
                    next - 1
                }
            })
            .collect();
        let total = next;
        let mut edges = ops.plus.edges.clone();
        edges.extend(ops.minus.edges.iter().map(|&(a, b, w)| (minus_global[a], minus_global[b], w)));
        let merged = Adjacency::from_edges(total, &edges);
        let mut merged_mass = ops.plus.masses.clone();
        merged_mass.resize(total, 0.0);
        let mut merged_fixed = vec![false; total];
        for (slot, kind) in merged_fixed.iter_mut().zip(&ops.plus.kinds[..np]) {
            *slot = kind.is_fixed();
        }
        for (i, &g) in minus_global.iter().enumerate() {
            merged_mass[g] += ops.minus.masses[i];
            merged_fixed[g] |= ops.minus.kinds[i].is_fixed();
        }
        let side_fixed = [&ops.plus, &ops.minus].map(|so| {
            so.kinds
                .iter()
                .map(|kd| kd.is_fixed() || kd.on_interface())
                .collect::<Vec<_>>()
        });
        Layout {
            grids,
            ops,
            minus_global,
            merged,
            merged_mass,
            merged_fixed,
            side_fixed,
            k,
            m,
        }
    }

    fn np(&self) -> usize {
        self.grids[0].len()
    }

    fn masses(&self, s: usize) -> &[f64] {
        &self.ops.side(if s == 0 { Side::Plus } else { Side::Minus }).masses
    }
}

/// `Γ(U)(∇U, ∇U)` at every node of one side.
fn source(chart: &dyn Chart, grid: &SideGrid, u: &[Vec3], d: usize) -> Result<Vec<Vec3>> {
    let grads = side_gradient(grid, |i| u[i]);
    u.par_iter()
        .zip(grads.par_iter())
        .map(|(ui, g)| {
            let gamma = chart.christoffel(&ui.as_slice()[..d], DEFAULT_MAX_CONDITION)?;
            let rows: Vec<[f64; 3]> = g.iter().map(|v| [v.x, v.y, v.z]).collect();
            let mut out = [0.0; 3];
            gamma.contract(&rows, &mut out[..d]);
            Ok(Vec3::new(out[0], out[1], out[2]))
        })
        .collect()
}

/// One application of `V = 𝕋(U)`: backward Euler for `∂ₜV − ΔV = Γ(U)(∇U,∇U)`.
///
/// `V¹` solves one merged problem in which interface nodes are shared, which imposes
/// continuity and the natural flux match. `V²` solves each side with zero interface data.
fn apply_map(layout: &Layout, chart: &dyn Chart, u: &[Coords], dt: f64, initial: &Coords) -> Result<Vec<Coords>> {
    let d = layout.k + layout.m;
    let mut out = Vec::with_capacity(u.len());
    out.push(initial.clone());
    for level in u.iter().skip(1) {
        let prev = out.last().expect("initial level present");
        let src = [
            source(chart, &layout.grids[0], &level[0], d)?,
            source(chart, &layout.grids[1], &level[1], d)?,
        ];
        let mut next: Coords = prev.clone();
        for c in 0..layout.k {
            let total = layout.merged.nodes();
            let mut rhs = vec![0.0; total];
            let mut x = vec![0.0; total];
            let shift: Vec<f64> = layout.merged_mass.iter().map(|m| m / dt).collect();
            for (i, (p, s)) in prev[0].iter().zip(&src[0]).enumerate() {
                rhs[i] += layout.masses(0)[i] * (p[c] / dt + s[c]);
                x[i] = initial[0][i][c];
            }
            for (i, (p, s)) in prev[1].iter().zip(&src[1]).enumerate() {
                let g = layout.minus_global[i];
                rhs[g] += layout.masses(1)[i] * (p[c] / dt + s[c]);
                if g >= layout.np() {
                    x[g] = initial[1][i][c];
                }
            }
            solve_dirichlet(&layout.merged, &shift, &layout.merged_fixed, &rhs, &mut x)?;
            for (i, v) in next[0].iter_mut().enumerate() {
                v[c] = x[i];
            }
            for (i, v) in next[1].iter_mut().enumerate() {
                v[c] = x[layout.minus_global[i]];
            }
        }
        for c in layout.k..d {
            for s in 0..2 {
                let masses = layout.masses(s);
                let adj = &layout.ops.side(if s == 0 { Side::Plus } else { Side::Minus }).adjacency;
                let shift: Vec<f64> = masses.iter().map(|m| m / dt).collect();
                let rhs: Vec<f64> = (0..masses.len())
                    .map(|i| masses[i] * (prev[s][i][c] / dt + src[s][i][c]))
                    .collect();
                let mut x: Vec<f64> = (0..masses.len())
                    .map(|i| {
                        if layout.grids[s].kind(i).on_interface() {
                            0.0
                        } else {
                            initial[s][i][c]
                        }
                    })
                    .collect();
                solve_dirichlet(adj, &shift, &layout.side_fixed[s], &rhs, &mut x)?;
                for (v, xi) in next[s].iter_mut().zip(&x) {
                    v[c] = *xi;
                }
            }
        }
        out.push(next);
    }
    Ok(out)
}

/// Discrete `𝒞^{1+α,(1+α)/2}` proxy: the largest of the sup norm, the gradient sup norm,
/// dyadic spatial Hölder quotients of the gradient, and dyadic time quotients of the field
/// (exponent `(1+α)/2`) and of its gradient (exponent `α/2`).
pub fn proxy_norm(grids: &[SideGrid; 2], levels: &[Coords], dt: f64, alpha: f64) -> f64 {
    let mut norm = 0.0f64;
    let grads: Vec<[Vec<[Vec3; 3]>; 2]> = levels
        .iter()
        .map(|lv| [0, 1].map(|s| side_gradient(&grids[s], |i| lv[s][i])))
        .collect();
    for (lv, gr) in levels.iter().zip(&grads) {
        for s in 0..2 {
            let sg = &grids[s];
            for (i, v) in lv[s].iter().enumerate() {
                norm = norm.max(v.norm());
                let g = &gr[s][i];
                norm = norm.max(g.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt());
                for axis in 0..sg.dim {
                    let mut step = 1usize;
                    while step < sg.counts[axis] {
                        let mut q = sg.multi(i);
                        q[axis] += step;
                        if q[axis] >= sg.counts[axis] {
                            break;
                        }
                        let j = sg.index(q);
                        let diff: f64 = (0..3).map(|a| (g[a] - gr[s][j][a]).norm_squared()).sum::<f64>().sqrt();
                        norm = norm.max(diff / (step as f64 * sg.h).powf(alpha));
                        step *= 2;
                    }
                }
            }
        }
    }
    let mut lag = 1usize;
    while lag < levels.len() {
        let tau = lag as f64 * dt;
        for t in 0..levels.len() - lag {
            for s in 0..2 {
                for i in 0..levels[t][s].len() {
                    let dv = (levels[t + lag][s][i] - levels[t][s][i]).norm();
                    norm = norm.max(dv / tau.powf(0.5 * (1.0 + alpha)));
                    let dg: f64 = (0..3)
                        .map(|a| (grads[t + lag][s][i][a] - grads[t][s][i][a]).norm_squared())
                        .sum::<f64>()
                        .sqrt();
                    norm = norm.max(dg / tau.powf(0.5 * alpha));
                }
            }
        }
        lag *= 2;
    }
    norm
}

fn difference(a: &[Coords], b: &[Coords]) -> Vec<Coords> {
    a.iter()
        .zip(b)
        .map(|(x, y)| [0, 1].map(|s| x[s].iter().zip(&y[s]).map(|(p, q)| p - q).collect()))
        .collect()
}

fn sup(levels: &[Coords]) -> f64 {
    levels
        .iter()
        .flat_map(|lv| lv.iter().flat_map(|s| s.iter().map(|v| v.norm())))
        .fold(0.0, f64::max)
}

/// Largest coordinate-block norm `max(|U¹|, |U²|)` over all nodes and levels.
fn block_norm(levels: &[Coords], k: usize, d: usize) -> f64 {
    let mut worst = 0.0f64;
    for lv in levels {
        for s in lv {
            for v in s {
                let a = (0..k).map(|c| v[c] * v[c]).sum::<f64>().sqrt();
                let b = (k..d).map(|c| v[c] * v[c]).sum::<f64>().sqrt();
                worst = worst.max(a).max(b);
            }
        }
    }
    worst
}

/// Picard iteration `U ↦ 𝕋(U)` in a single chart pair `φ⁺ = φ`, `φ⁻ = Φ⁺∘φ`.
///
/// Each sweep solves the linear transmission system over the whole horizon with the
/// curvature source frozen at the previous iterate. Requires `Φ⁺` to be an isometry and the
/// slice `U² = 0` of the chart to be `M⁺`.
pub fn picard_chart_solve(
    problem: &AdmissibleProblem,
    u0: &CoupledField,
    chart: &dyn Chart,
    cfg: &PicardConfig,
) -> Result<PicardRun> {
    cfg.validate()?;
    let coupling = &problem.coupling;
    if !coupling.map.is_isometry() {
        return Err(Error::invalid("chart iteration needs an isometric interface map"));
    }
    if !chart.m_slice_is_u2_zero() {
        return Err(Error::invalid("chart slice U² = 0 does not parameterize M⁺"));
    }
    let (k, m) = chart.split();
    let d = k + m;
    if d > 3 {
        return Err(Error::invalid("chart dimension exceeds three"));
    }
    let layout = Layout::new(problem, k, m);
    let to_coords = |s: Side, i: usize, v: &Vec3| -> Result<Vec3> {
        let p = match s {
            Side::Plus => *v,
            Side::Minus => coupling.map.tubular_inverse(v),
        };
        let c = chart.from_manifold(&p).ok_or(Error::ChartExit {
            sweep: 0,
            norm: f64::INFINITY,
        })?;
        let mut out = Vec3::zeros();
        out.as_mut_slice()[..d].copy_from_slice(&c);
        let back = chart.to_manifold(&c);
        if (back - p).norm() > 1e-9 * p.norm().max(1.0) {
            return Err(Error::invalid(format!(
                "{} node {i} is not represented by the chart (defect {:.3e})",
                s.tag(),
                (back - p).norm()
            )));
        }
        Ok(out)
    };
    let initial: Coords = [Side::Plus, Side::Minus].map(|s| {
        u0.side(s)
            .iter()
            .enumerate()
            .map(|(i, v)| to_coords(s, i, v))
            .collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .try_into()
    .expect("two sides");
    let norm0 = block_norm(std::slice::from_ref(&initial), k, d);
    if norm0 > 1.0 {
        return Err(Error::ChartExit { sweep: 0, norm: norm0 });
    }
    let steps = cfg.steps();
    let dt = cfg.t_end / steps as f64;
    let mut current: Vec<Coords> = vec![initial.clone(); steps + 1];
    let mut differences = Vec::new();
    let mut ratios = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut sweeps = 0;
    let floor = 1e3 * cfg.tol;
    for sweep in 1..=cfg.max_sweeps {
        sweeps = sweep;
        let next = apply_map(&layout, chart, &current, dt, &initial)?;
        let norm = block_norm(&next, k, d);
        if norm > 1.0 {
            return Err(Error::ChartExit { sweep, norm });
        }
        let diff = difference(&next, &current);
        let dn = proxy_norm(&layout.grids, &diff, dt, cfg.alpha);
        residual = sup(&diff);
        if let Some(&last) = differences.last() {
            if last > floor && dn > floor {
                let ratio: f64 = dn / last;
                ratios.push(ratio);
                if ratio > cfg.theta_target {
                    return Err(Error::NoContraction { ratio });
                }
            }
        }
        differences.push(dn);
        current = next;
        if dn <= cfg.tol {
            converged = true;
            break;
        }
    }
    let contraction = ratios.iter().cloned().fold(0.0, f64::max);
    let frames = current
        .iter()
        .enumerate()
        .map(|(n, lv)| {
            let plus = lv[0].iter().map(|v| chart.to_manifold(&v.as_slice()[..d])).collect();
            let minus = lv[1]
                .iter()
                .map(|v| coupling.map.tubular_forward(&chart.to_manifold(&v.as_slice()[..d])))
                .collect();
            Ok(Frame {
                t: n as f64 * dt,
                field: CoupledField::new(problem.grid, plus, minus)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PicardRun {
        trajectory: Trajectory { frames },
        differences,
        ratios,
        contraction,
        sweeps,
        residual,
        converged,
    })
}
