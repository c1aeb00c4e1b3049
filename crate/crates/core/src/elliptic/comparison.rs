use super::init::projection_failure;
use crate::error::{Error, Result};
use crate::geometry::{project_to_manifold, Coupling};
use crate::grid::{check_ball, dist, interpolate, CoupledField, NodeKind, Side};

/// Replaces `u` inside `B_r(x₀)` by the degree-zero extension `x ↦ u(x₀ + r(x − x₀)/|x − x₀|)`.
///
/// Sphere values are multilinear interpolants, projected back to `N±`; on `Γ` they are
/// projected to `M⁺` and the minus trace is set to their image under `Φ⁺`. The center node
/// takes the value in direction `e₁`. Dirichlet nodes are never modified.
pub fn radial_comparison(coupling: &Coupling, u: &CoupledField, x0: &[f64; 3], r: f64) -> Result<CoupledField> {
    let grid = *u.grid();
    let dim = grid.dim();
    if dim < 2 {
        return Err(Error::invalid("radial comparison needs n ≥ 2"));
    }
    let n = dim - 1;
    if x0[n] != 0.0 {
        return Err(Error::invalid("comparison center must lie on the interface"));
    }
    check_ball(&grid, x0, r)?;
    let tol = 1e-12 * grid.spacing();
    let sphere_point = |x: &[f64; 3]| {
        let d = dist(x, x0);
        let mut y = *x0;
        if d < tol {
            y[0] += r;
        } else {
            for a in 0..dim {
                y[a] += r * (x[a] - x0[a]) / d;
            }
        }
        if y[n].abs() < tol {
            y[n] = 0.0;
        }
        y
    };
    let mut out = u.clone();
    for s in Side::BOTH {
        let sg = grid.side(s);
        let target = match s {
            Side::Plus => coupling.plus.ambient.as_ref(),
            Side::Minus => coupling.minus.ambient.as_ref(),
        };
        for i in 0..sg.len() {
            let x = sg.position(i);
            if sg.kind(i) != NodeKind::Interior || dist(&x, x0) >= r - tol {
                continue;
            }
            let v = interpolate(&sg, u.side(s), &sphere_point(&x));
            out.side_mut(s)[i] = project_to_manifold(&v, target).map_err(|e| projection_failure(s, i, e))?;
        }
    }
    let sg = grid.side(Side::Plus);
    for i in sg.interface_nodes() {
        let x = sg.position(i);
        if sg.kind(i) != NodeKind::Interface || dist(&x, x0) >= r - tol {
            continue;
        }
        let v = interpolate(&sg, u.side(Side::Plus), &sphere_point(&x));
        let m = project_to_manifold(&v, coupling.plus.inner.as_ref())
            .map_err(|e| projection_failure(Side::Plus, i, e))?;
        out.side_mut(Side::Plus)[i] = m;
        out.side_mut(Side::Minus)[i] = coupling.map.forward(&m);
    }
    Ok(out)
}
