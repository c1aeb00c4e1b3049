use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::Adjacency;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive definite operator.
///
/// Stops when `|r| <= rel_tol * |b|`; `x` holds the initial guess on entry.
pub fn conjugate_gradient<F>(
    apply: F,
    b: &[f64],
    diag: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = rel_tol * bnorm;
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let precond = |r: &[f64], z: &mut [f64]| {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(diag) {
            *zi = if *di > 0.0 { ri / di } else { *ri };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rnorm = dot(&r, &r).sqrt();
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if rnorm <= target {
            return Ok(CgOutcome {
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolveFailure {
                iterations: it,
                residual: rnorm / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rnorm = dot(&r, &r).sqrt();
    }
    if rnorm <= target {
        return Ok(CgOutcome {
            iterations: max_iter,
            residual: rnorm / bnorm,
        });
    }
    Err(Error::LinearSolveFailure {
        iterations: max_iter,
        residual: rnorm / bnorm,
    })
}

/// Relative residual used by the Dirichlet solves.
pub const SOLVE_TOL: f64 = 1e-12;

/// Solves `(diag(shift) + L) x = rhs` on the nodes not marked `fixed`; fixed entries of `x`
/// are Dirichlet values and stay untouched.
pub fn solve_dirichlet(
    adj: &Adjacency,
    shift: &[f64],
    fixed: &[bool],
    rhs: &[f64],
    x: &mut [f64],
) -> Result<CgOutcome> {
    let n = adj.nodes();
    let mut slot = vec![usize::MAX; n];
    let free: Vec<usize> = (0..n).filter(|&p| !fixed[p]).collect();
    for (k, &p) in free.iter().enumerate() {
        slot[p] = k;
    }
    let mut b = vec![0.0; free.len()];
    let mut diag = vec![0.0; free.len()];
    for (k, &p) in free.iter().enumerate() {
        let mut v = rhs[p];
        for (q, w) in adj.row(p) {
            if fixed[q] {
                v += w * x[q];
            }
        }
        b[k] = v;
        diag[k] = shift[p] + adj.degree(p);
    }
    let apply = |y: &[f64], out: &mut [f64]| {
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            let p = free[k];
            let mut acc = (shift[p] + adj.degree(p)) * y[k];
            for (q, w) in adj.row(p) {
                if slot[q] != usize::MAX {
                    acc -= w * y[slot[q]];
                }
            }
            *o = acc;
        });
    };
    let mut y: Vec<f64> = free.iter().map(|&p| x[p]).collect();
    let out = conjugate_gradient(apply, &b, &diag, &mut y, SOLVE_TOL, 20 * free.len() + 100)?;
    for (k, &p) in free.iter().enumerate() {
        x[p] = y[k];
    }
    Ok(out)
}

/// Componentwise discrete harmonic extension of the fixed values.
pub fn harmonic_fill(adj: &Adjacency, fixed: &[bool], values: &mut [Vec3]) -> Result<()> {
    let n = values.len();
    let zero = vec![0.0; n];
    for c in 0..3 {
        let mut x: Vec<f64> = values.iter().map(|v| v[c]).collect();
        solve_dirichlet(adj, &zero, fixed, &zero, &mut x)?;
        for (v, xi) in values.iter_mut().zip(&x) {
            v[c] = *xi;
        }
    }
    Ok(())
}
