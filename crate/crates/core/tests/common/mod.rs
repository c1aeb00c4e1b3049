#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use harmap::elliptic::{AdmissibleProblem, AngleProfile, BoundaryForm};
use harmap::geometry::{AxisRotation, Circle, Coupling, Identity, Sphere, SubmanifoldPair, Vec3};
use harmap::grid::{CoupledField, Side, SplitGrid};

pub const BETA: f64 = PI / 6.0;

pub fn circle_coupling(beta: f64) -> Coupling {
    let pair = SubmanifoldPair::whole(Arc::new(Circle::new(1.0)));
    Coupling::new(pair.clone(), pair, Arc::new(AxisRotation::new(beta)))
}

pub fn equator_coupling() -> Coupling {
    let pair = SubmanifoldPair::new(Arc::new(Sphere::new(1.0)), Arc::new(Circle::in_space(1.0))).unwrap();
    Coupling::new(pair.clone(), pair, Arc::new(Identity))
}

/// `θ₀ = 0` at `x = 1`, `θ₁ = π/2` at `x = −1`, `β = π/6`.
pub fn geodesic_problem(h: f64) -> AdmissibleProblem {
    let form = BoundaryForm::AngleLinear {
        radius: 1.0,
        plus: AngleProfile::constant(0.0),
        minus: AngleProfile::constant(PI / 2.0),
    };
    AdmissibleProblem::new(SplitGrid::cube(1, 1.0, h).unwrap(), circle_coupling(BETA), form).unwrap()
}

/// The closed-form minimizer of [`geodesic_problem`]: slope `π/6` in angle on both sides.
pub fn geodesic_angle(side: Side, x: f64) -> f64 {
    match side {
        Side::Plus => PI / 6.0 * (1.0 - x),
        Side::Minus => PI / 6.0 + BETA - PI / 6.0 * x,
    }
}

/// Harmonic angle data on the square with a jump `β` across `Γ`.
pub fn square_form(beta: f64) -> BoundaryForm {
    let plus = AngleProfile {
        offset: 0.2,
        gradient: [0.3, 0.25, 0.0],
        quadratic: 0.15,
    };
    BoundaryForm::AngleLinear {
        radius: 1.0,
        plus,
        minus: AngleProfile {
            offset: 0.2 + beta,
            ..plus
        },
    }
}

pub fn square_problem(h: f64) -> AdmissibleProblem {
    let grid = SplitGrid::cube(2, 1.0, h).unwrap();
    AdmissibleProblem::new(grid, circle_coupling(BETA), square_form(BETA)).unwrap()
}

pub fn angle(v: &Vec3) -> f64 {
    v.y.atan2(v.x)
}

pub fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Largest angular difference between two circle-valued fields.
pub fn max_angle_error(a: &CoupledField, b: &CoupledField) -> f64 {
    Side::BOTH
        .iter()
        .flat_map(|&s| {
            a.side(s)
                .iter()
                .zip(b.side(s))
                .map(|(p, q)| wrap(angle(p) - angle(q)).abs())
        })
        .fold(0.0, f64::max)
}

pub fn hedgehog_grid(cells_per_half: usize) -> SplitGrid {
    SplitGrid::cube(3, 1.0, 1.0 / cells_per_half as f64).unwrap()
}

pub fn hedgehog_problem(cells_per_half: usize) -> AdmissibleProblem {
    AdmissibleProblem::new(
        hedgehog_grid(cells_per_half),
        equator_coupling(),
        BoundaryForm::RadialProjection { radius: 1.0 },
    )
    .unwrap()
}

/// Least-squares slope of `log e` against `log h`.
pub fn observed_order(hs: &[f64], es: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn sphere_point(lon: f64, lat: f64) -> Vec3 {
    Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
}

/// `S²` targets with the equator as interface submanifold, matched by a rotation about `e_z`.
pub fn equator_rotation_coupling(beta: f64) -> Coupling {
    let pair = SubmanifoldPair::new(Arc::new(Sphere::new(1.0)), Arc::new(Circle::in_space(1.0))).unwrap();
    Coupling::new(pair.clone(), pair, Arc::new(AxisRotation::new(beta)))
}

/// Smooth non-harmonic sphere data whose interface traces lie on the equator.
pub fn sphere_form(beta: f64) -> BoundaryForm {
    let lon = AngleProfile {
        offset: 0.0,
        gradient: [0.2, 0.1, 0.0],
        quadratic: 0.1,
    };
    let lat = AngleProfile {
        offset: 0.0,
        gradient: [0.0, 0.25, 0.0],
        quadratic: 0.0,
    };
    BoundaryForm::SphereAngles {
        radius: 1.0,
        plus: [lon, lat],
        minus: [
            AngleProfile {
                offset: beta,
                ..lon
            },
            lat,
        ],
    }
}

pub fn sphere_problem(h: f64, beta: f64) -> AdmissibleProblem {
    AdmissibleProblem::new(SplitGrid::cube(2, 1.0, h).unwrap(), equator_rotation_coupling(beta), sphere_form(beta)).unwrap()
}

/// The geodesic matching problem extended constantly along the tangential axes of `[−1,1]ⁿ`.
pub fn slab_problem(dim: usize, h: f64) -> AdmissibleProblem {
    let mut gradient = [0.0; 3];
    gradient[dim - 1] = -PI / 6.0;
    let plus = AngleProfile {
        offset: PI / 6.0,
        gradient,
        quadratic: 0.0,
    };
    let form = BoundaryForm::AngleLinear {
        radius: 1.0,
        plus,
        minus: AngleProfile {
            offset: PI / 6.0 + BETA,
            ..plus
        },
    };
    AdmissibleProblem::new(SplitGrid::cube(dim, 1.0, h).unwrap(), circle_coupling(BETA), form).unwrap()
}
