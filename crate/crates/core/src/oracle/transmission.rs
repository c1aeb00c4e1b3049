use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Coupling, Vec3};
use crate::grid::{normal_derivative_at_interface, Adjacency, CoupledField, Side, SideGrid, SplitGrid};
use crate::linalg::solve_dirichlet;

/// Orthonormal frames at the base points, as rows of ambient vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePair {
    pub base_plus: [f64; 3],
    pub base_minus: [f64; 3],
    pub plus: Vec<[f64; 3]>,
    pub minus: Vec<[f64; 3]>,
}

impl FramePair {
    /// Frame coordinates of an ambient vector at `a±`.
    pub fn coordinates(&self, side: Side, v: &Vec3) -> Vec3 {
        let frame = match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        };
        let mut c = Vec3::zeros();
        for (i, e) in frame.iter().enumerate() {
            c[i] = Vec3::from(*e).dot(v);
        }
        c
    }
}

/// Prescribed values at the nodes with `|x| ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereData {
    pub nodes: Vec<usize>,
    pub values: Vec<[f64; 3]>,
}

/// The coupled linear harmonic problem on the half balls `B₁±`, in frame coordinates:
/// components `0..k` are tangent to `M±`, components `k..k+m` span `Nor(a±, M±) ∩ Tan(a±, N±)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearTransmissionProblem {
    pub dim: usize,
    pub h: f64,
    pub tangent_dim: usize,
    pub normal_dim: usize,
    /// `P = DΦ⁺(a⁺)` on `Tan(a⁺, M⁺)`, row-major `k × k`.
    pub coupling: Vec<f64>,
    pub frames: Option<FramePair>,
    pub plus: SphereData,
    pub minus: SphereData,
}

/// The grid `[−1,1]ⁿ` and the nodes it treats as unknowns.
fn layout(dim: usize, h: f64) -> Result<(SplitGrid, SideGrid, Vec<bool>)> {
    let grid = SplitGrid::cube(dim, 1.0, h)?;
    let sg = grid.side(Side::Plus);
    let inside = (0..sg.len()).map(|i| norm(&sg.position(i)) < 1.0 - 1e-12).collect();
    Ok((grid, sg, inside))
}

fn norm(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn smallest_singular_value(p: &DMatrix<f64>) -> (f64, f64) {
    if p.is_empty() {
        return (1.0, 1.0);
    }
    let s = p.clone().svd(false, false).singular_values;
    (s.min(), s.max())
}

impl LinearTransmissionProblem {
    /// Samples `data(side, x)` outside the unit ball for an explicit `P`.
    pub fn from_matrix(
        dim: usize,
        h: f64,
        p: &DMatrix<f64>,
        normal_dim: usize,
        data: impl Fn(Side, &[f64; 3]) -> Vec3,
    ) -> Result<Self> {
        let k = p.nrows();
        if p.ncols() != k || k + normal_dim > 3 {
            return Err(Error::invalid("P must be square with k + m ≤ 3"));
        }
        let (_, sg, inside) = layout(dim, h)?;
        let sample = |s: Side| {
            let nodes: Vec<usize> = (0..sg.len()).filter(|&i| !inside[i]).collect();
            let values = nodes
                .iter()
                .map(|&i| {
                    let mut x = sg.position(i);
                    x[dim - 1] *= s.sign();
                    data(s, &x).into()
                })
                .collect();
            SphereData { nodes, values }
        };
        Ok(LinearTransmissionProblem {
            dim,
            h,
            tangent_dim: k,
            normal_dim,
            coupling: p.transpose().iter().cloned().collect(),
            frames: None,
            plus: sample(Side::Plus),
            minus: sample(Side::Minus),
        })
    }

    /// Frozen frames at `a⁺` and `a⁻ = Φ⁺(a⁺)`, with `P_ij = ⟨e⁻_i, DΦ⁺(a⁺)e⁺_j⟩`.
    /// `data` returns ambient vectors, which are expressed in the frames.
    pub fn at_base_point(
        dim: usize,
        h: f64,
        coupling: &Coupling,
        a_plus: &Vec3,
        data: impl Fn(Side, &[f64; 3]) -> Vec3,
    ) -> Result<Self> {
        let a_minus = coupling.map.forward(a_plus);
        let (tp, np) = coupling.plus.split_frame(a_plus);
        let (tm, nm) = coupling.minus.split_frame(&a_minus);
        if tp.len() != tm.len() || np.len() != nm.len() {
            return Err(Error::invalid("the two targets have different splittings at the base points"));
        }
        let k = tp.len();
        let p = DMatrix::from_fn(k, k, |i, j| {
            tm.vectors()[i].dot(&coupling.map.derivative(a_plus, &tp.vectors()[j]))
        });
        let rows = |t: &crate::geometry::Frame, n: &crate::geometry::Frame| -> Vec<[f64; 3]> {
            t.vectors().iter().chain(n.vectors()).map(|v| (*v).into()).collect()
        };
        let frames = FramePair {
            base_plus: (*a_plus).into(),
            base_minus: a_minus.into(),
            plus: rows(&tp, &np),
            minus: rows(&tm, &nm),
        };
        let mut prob = LinearTransmissionProblem::from_matrix(dim, h, &p, np.len(), |s, x| {
            frames.coordinates(s, &data(s, x))
        })?;
        prob.frames = Some(frames);
        Ok(prob)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.tangent_dim, self.tangent_dim, &self.coupling)
    }

    pub fn grid(&self) -> Result<SplitGrid> {
        SplitGrid::cube(self.dim, 1.0, self.h)
    }

    pub fn is_orthogonal(&self) -> bool {
        let p = self.matrix();
        let k = self.tangent_dim;
        (p.transpose() * &p - DMatrix::identity(k, k)).amax() < 1e-12
    }
}

/// The two tangential combinations that could carry zero Neumann data on `Γ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeumannCombination {
    /// `v₊ᵗ − Pᵗṽ₋ᵗ`.
    Difference,
    /// `v₊ᵗ + Pᵗṽ₋ᵗ`.
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionReport {
    /// `max |ṽ₋ᵗ − Pv₊ᵗ|` on `Γ₁`.
    pub dirichlet_defect: f64,
    /// `max |Δ_h(ṽ₋ᵗ − Pv₊ᵗ)|` over interior unknowns off `Γ`.
    pub harmonic_residual: f64,
    /// Discrete Neumann residuals `max |L c|/hⁿ⁻¹` on `Γ₁`.
    pub neumann_difference: f64,
    pub neumann_sum: f64,
    /// The combination with vanishing residual, when exactly one vanishes.
    pub matched: Option<NeumannCombination>,
    /// `max ||ṽ₋ᵗ − Pv₊ᵗ| − |Pᵗṽ₋ᵗ − v₊ᵗ||`, for orthogonal `P` only.
    pub orthogonal_defect: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    /// `max |v₋ᵗ − Pv₊ᵗ|` on `Γ₁`.
    pub value: f64,
    /// `max |v±ⁿ|` on `Γ₁`.
    pub normal: f64,
    /// `max |∂ₙv₊ᵗ − Pᵗ∂ₙv₋ᵗ|` on `Γ₁`, one-sided second-order differences.
    pub flux: f64,
}

/// Solution values in frame coordinates on the closed half grids.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledSolution {
    pub field: CoupledField,
    pub tangent_dim: usize,
    pub normal_dim: usize,
}

/// Threshold below which a Neumann residual counts as zero.
pub const NEUMANN_ZERO: f64 = 1e-8;

struct Workspace {
    sg: SideGrid,
    adj: Adjacency,
    inside: Vec<bool>,
    gamma: Vec<bool>,
}

impl Workspace {
    fn new(dim: usize, h: f64) -> Result<Self> {
        let (_, sg, inside) = layout(dim, h)?;
        let gamma = (0..sg.len()).map(|i| sg.kind(i).on_interface()).collect();
        Ok(Workspace {
            adj: sg.adjacency(),
            sg,
            inside,
            gamma,
        })
    }

    fn solve(&self, dirichlet_on_gamma: bool, mut x: Vec<f64>) -> Result<Vec<f64>> {
        let fixed: Vec<bool> = (0..x.len())
            .map(|i| !self.inside[i] || (dirichlet_on_gamma && self.gamma[i]))
            .collect();
        for i in 0..x.len() {
            if fixed[i] && self.inside[i] {
                x[i] = 0.0;
            }
        }
        let zero = vec![0.0; x.len()];
        solve_dirichlet(&self.adj, &zero, &fixed, &zero, &mut x)?;
        Ok(x)
    }

    fn gamma_one(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.sg.len()).filter(|&i| self.gamma[i] && self.inside[i])
    }

    fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.adj.apply(f, &mut out);
        out
    }
}

fn full(data: &SphereData, len: usize) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); len];
    for (&i, v) in data.nodes.iter().zip(&data.values) {
        out[i] = Vec3::from(*v);
    }
    out
}

fn tangential(v: &Vec3, k: usize) -> DVector<f64> {
    DVector::from_fn(k, |i, _| v[i])
}

/// Solves the coupled pair by even reflection of the minus side onto `B₁⁺`.
///
/// Normal parts solve zero-Dirichlet problems on each half ball. Tangential parts split into
/// `w₁ = ṽ₋ − Pv₊` with zero Dirichlet data on `Γ₁` and `w₂ = v₊ + Pᵗṽ₋` with natural Neumann
/// data, and are recovered from `v₊ = (I + PᵗP)⁻¹(w₂ − Pᵗw₁)`, `ṽ₋ = w₁ + Pv₊`.
pub fn solve_coupled_harmonic(prob: &LinearTransmissionProblem) -> Result<CoupledSolution> {
    let k = prob.tangent_dim;
    let p = prob.matrix();
    let (sigma_min, sigma_max) = smallest_singular_value(&p);
    if sigma_min < 1e-10 * sigma_max.max(1.0) {
        return Err(Error::SingularCoupling { sigma_min });
    }
    let ws = Workspace::new(prob.dim, prob.h)?;
    let len = ws.sg.len();
    let gp = full(&prob.plus, len);
    let gm = full(&prob.minus, len);
    let mut vp = gp.clone();
    let mut vm = gm.clone();

    for c in k..k + prob.normal_dim {
        for (g, v) in [(&gp, &mut vp), (&gm, &mut vm)] {
            let x = ws.solve(true, g.iter().map(|g| g[c]).collect())?;
            for (vi, xi) in v.iter_mut().zip(x) {
                vi[c] = xi;
            }
        }
    }

    if k > 0 {
        let pt = p.transpose();
        let mut w1 = vec![DVector::zeros(k); len];
        let mut w2 = vec![DVector::zeros(k); len];
        for i in 0..len {
            let (a, b) = (tangential(&gp[i], k), tangential(&gm[i], k));
            w1[i] = &b - &p * &a;
            w2[i] = &a + &pt * &b;
        }
        for c in 0..k {
            let x1 = ws.solve(true, w1.iter().map(|w| w[c]).collect())?;
            let x2 = ws.solve(false, w2.iter().map(|w| w[c]).collect())?;
            for i in 0..len {
                w1[i][c] = x1[i];
                w2[i][c] = x2[i];
            }
        }
        let gram = DMatrix::identity(k, k) + &pt * &p;
        let lu = gram.lu();
        for i in (0..len).filter(|&i| ws.inside[i]) {
            let a = lu
                .solve(&(&w2[i] - &pt * &w1[i]))
                .ok_or(Error::SingularCoupling { sigma_min })?;
            let b = &w1[i] + &p * &a;
            for c in 0..k {
                vp[i][c] = a[c];
                vm[i][c] = b[c];
            }
        }
    }

    let grid = prob.grid()?;
    Ok(CoupledSolution {
        field: CoupledField::new(grid, vp, vm)?,
        tangent_dim: k,
        normal_dim: prob.normal_dim,
    })
}

/// Reflection identities and both Neumann combinations for a computed solution.
pub fn reflection_identities(prob: &LinearTransmissionProblem, sol: &CoupledSolution) -> Result<ReflectionReport> {
    let k = prob.tangent_dim;
    let p = prob.matrix();
    let pt = p.transpose();
    let ws = Workspace::new(prob.dim, prob.h)?;
    let len = ws.sg.len();
    let vp = sol.field.side(Side::Plus);
    let vm = sol.field.side(Side::Minus);
    let a: Vec<DVector<f64>> = vp.iter().map(|v| tangential(v, k)).collect();
    let b: Vec<DVector<f64>> = vm.iter().map(|v| tangential(v, k)).collect();
    let w1: Vec<DVector<f64>> = (0..len).map(|i| &b[i] - &p * &a[i]).collect();
    let sum: Vec<DVector<f64>> = (0..len).map(|i| &a[i] + &pt * &b[i]).collect();
    let diff: Vec<DVector<f64>> = (0..len).map(|i| &a[i] - &pt * &b[i]).collect();

    let laplace = |f: &[DVector<f64>]| -> Vec<DVector<f64>> {
        let mut out = vec![DVector::zeros(k); len];
        for c in 0..k {
            let lc = ws.laplacian(&f.iter().map(|v| v[c]).collect::<Vec<_>>());
            for (o, l) in out.iter_mut().zip(lc) {
                o[c] = l;
            }
        }
        out
    };
    let scale = prob.h.powi(prob.dim as i32 - 1);
    let neumann = |f: &[DVector<f64>]| {
        let lf = laplace(f);
        ws.gamma_one().map(|i| lf[i].norm() / scale).fold(0.0, f64::max)
    };
    let lw1 = laplace(&w1);
    let harmonic_residual = (0..len)
        .filter(|&i| ws.inside[i] && !ws.gamma[i])
        .map(|i| lw1[i].norm() / ws.sg.mass(i))
        .fold(0.0, f64::max);
    let dirichlet_defect = ws.gamma_one().map(|i| w1[i].norm()).fold(0.0, f64::max);
    let neumann_difference = neumann(&diff);
    let neumann_sum = neumann(&sum);
    let matched = match (neumann_difference <= NEUMANN_ZERO, neumann_sum <= NEUMANN_ZERO) {
        (true, false) => Some(NeumannCombination::Difference),
        (false, true) => Some(NeumannCombination::Sum),
        _ => None,
    };
    let orthogonal_defect = prob.is_orthogonal().then(|| {
        (0..len)
            .map(|i| (w1[i].norm() - (&pt * &b[i] - &a[i]).norm()).abs())
            .fold(0.0, f64::max)
    });
    Ok(ReflectionReport {
        dirichlet_defect,
        harmonic_residual,
        neumann_difference,
        neumann_sum,
        matched,
        orthogonal_defect,
    })
}

/// Residuals of the linearized transmission conditions for any pair in frame coordinates.
pub fn trace_residuals(prob: &LinearTransmissionProblem, field: &CoupledField) -> Result<TraceReport> {
    let k = prob.tangent_dim;
    let p = prob.matrix();
    let pt = p.transpose();
    let ws = Workspace::new(prob.dim, prob.h)?;
    let dp = normal_derivative_at_interface(field, Side::Plus);
    let dm = normal_derivative_at_interface(field, Side::Minus);
    let mut report = TraceReport {
        value: 0.0,
        normal: 0.0,
        flux: 0.0,
    };
    let (vp, vm) = (field.side(Side::Plus), field.side(Side::Minus));
    for (slot, &i) in dp.nodes.iter().enumerate() {
        if !ws.inside[i] {
            continue;
        }
        let (a, b) = (tangential(&vp[i], k), tangential(&vm[i], k));
        report.value = report.value.max((&b - &p * &a).norm());
        for c in k..k + prob.normal_dim {
            report.normal = report.normal.max(vp[i][c].abs()).max(vm[i][c].abs());
        }
        let (fa, fb) = (tangential(&dp.values[slot], k), tangential(&dm.values[slot], k));
        report.flux = report.flux.max((&fa - &pt * &fb).norm());
    }
    Ok(report)
}
