mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::*;
use harmap::elliptic::*;
use harmap::geometry::{Circle, Coupling, Identity, SubmanifoldPair, Vec3};
use harmap::grid::{discrete_energy, Side, SplitGrid};
use harmap::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn planar_identity() -> Coupling {
    let pair = SubmanifoldPair::whole(Arc::new(Circle::new(1.0)));
    Coupling::new(pair.clone(), pair, Arc::new(Identity))
}

#[test]
fn constant_data_initializes_to_zero_energy() {
    let coupling = circle_coupling(0.7);
    let p = Circle::new(1.0).point(1.1);
    let form = BoundaryForm::Constant {
        plus: p.into(),
        minus: coupling.map.forward(&p).into(),
    };
    let problem = AdmissibleProblem::new(SplitGrid::cube(2, 1.0, 0.125).unwrap(), coupling, form).unwrap();
    let u = initialize_admissible(&problem).unwrap();
    assert!(discrete_energy(&u) < 1e-20);
    assert!(u.membership(&problem.coupling).max() < 1e-12);
}

#[test]
fn one_dimensional_initializer_is_admissible() {
    let problem = geodesic_problem(1.0 / 64.0);
    let u = initialize_admissible(&problem).unwrap();
    assert!(u.membership(&problem.coupling).max() < 1e-12);
    for s in Side::BOTH {
        for v in u.side(s) {
            let a = angle(v);
            assert!((-1e-12..=PI / 2.0 + 1e-12).contains(&a), "angle {a}");
        }
    }
}

#[test]
fn hedgehog_interface_fill_hits_the_center() {
    let problem = hedgehog_problem(8);
    assert!(problem.compatibility().max() < 1e-12);
    match initialize_admissible(&problem) {
        Err(Error::ProjectionFailure { side: "plus", .. }) => {}
        other => panic!("expected a projection failure, got {other:?}"),
    }
    let closed = problem.boundary.field(problem.grid);
    let e = discrete_energy(&closed);
    assert!(e > 4.0 * PI && e < 4.0 * PI * 3f64.sqrt(), "energy {e}");
}

#[test]
fn incompatible_edge_data_is_rejected() {
    let form = BoundaryForm::AngleLinear {
        radius: 1.0,
        plus: AngleProfile::constant(0.0),
        minus: AngleProfile::constant(0.0),
    };
    let problem = AdmissibleProblem::new(SplitGrid::cube(2, 1.0, 0.25).unwrap(), circle_coupling(0.3), form).unwrap();
    let c = problem.compatibility();
    assert_eq!(c.violations.len(), 2);
    assert!((c.matching - 2.0 * (0.15f64).sin()).abs() < 1e-12);
    assert!(initialize_admissible(&problem).is_err());
}

#[test]
fn geodesic_minimizer_energy_converges_quadratically() {
    for h in [1.0 / 32.0, 1.0 / 128.0] {
        let problem = geodesic_problem(h);
        let u0 = initialize_admissible(&problem).unwrap();
        let out = minimize(&problem, &u0, &MinimizeOptions::default()).unwrap();
        assert!(out.ledger.converged && out.ledger.is_monotone());
        assert!((out.ledger.final_energy() - (PI / 6.0).powi(2)).abs() <= h * h);
        let sg = problem.grid.side(Side::Plus);
        for s in Side::BOTH {
            for (i, v) in out.field.side(s).iter().enumerate() {
                let x = sg.position(i)[0] * if s == Side::Plus { 1.0 } else { -1.0 };
                assert!(wrap(angle(v) - geodesic_angle(s, x)).abs() <= h * h);
            }
        }
    }
}

#[test]
fn square_minimizer_matches_linear_transmission_solution() {
    for h in [1.0 / 8.0, 1.0 / 16.0] {
        let problem = square_problem(h);
        let u0 = initialize_admissible(&problem).unwrap();
        let out = minimize(&problem, &u0, &MinimizeOptions::default()).unwrap();
        let exact = problem.boundary.field(problem.grid);
        let err = max_angle_error(&out.field, &exact);
        assert!(err <= 0.01 * h * h, "h={h} err={err:.3e}");
        assert!(out.field.matching_residual(&problem.coupling) < 1e-12);
    }
}

#[test]
fn l2_descent_decreases_energy_monotonically() {
    let problem = square_problem(0.25);
    let u0 = initialize_admissible(&problem).unwrap();
    let opts = MinimizeOptions {
        metric: DescentMetric::L2,
        max_iterations: 50,
        ..Default::default()
    };
    let out = minimize(&problem, &u0, &opts).unwrap();
    assert!(out.ledger.is_monotone());
    assert!(out.ledger.final_energy() < out.ledger.records[0].energy);
}

#[test]
fn flux_residual_vanishes_under_refinement() {
    let hs = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
    let mut rs = Vec::new();
    for h in hs {
        let problem = square_problem(h);
        let u0 = initialize_admissible(&problem).unwrap();
        let out = minimize(&problem, &u0, &MinimizeOptions::default()).unwrap();
        rs.push(flux_residual(&problem.coupling, &out.field).max_norm());
    }
    assert!(observed_order(&hs, &rs) >= 1.0, "residuals {rs:?}");
}

#[test]
fn mismatched_slopes_give_their_difference() {
    let (sp, sm) = (0.4, -0.3);
    let form = BoundaryForm::AngleLinear {
        radius: 1.0,
        plus: AngleProfile {
            offset: 0.1,
            gradient: [sp, 0.0, 0.0],
            quadratic: 0.0,
        },
        minus: AngleProfile {
            offset: 0.1 + BETA,
            gradient: [sm, 0.0, 0.0],
            quadratic: 0.0,
        },
    };
    let h = 1.0 / 256.0;
    let u = form.field(SplitGrid::cube(1, 1.0, h).unwrap());
    let r = flux_residual(&circle_coupling(BETA), &u);
    assert_eq!(r.len(), 1);
    assert!((r.values[0].norm() - (sp - sm).abs()).abs() <= h * h);
}

#[test]
fn comparison_leaves_constants_untouched() {
    let coupling = planar_identity();
    let p = Circle::new(1.0).point(0.5);
    let u = harmap::grid::CoupledField::constant(SplitGrid::cube(2, 1.0, 0.125).unwrap(), p, p);
    let v = radial_comparison(&coupling, &u, &[0.25, 0.0, 0.0], 0.5).unwrap();
    let d = Side::BOTH.iter().flat_map(|&s| u.side(s).iter().zip(v.side(s)).map(|(a, b)| (a - b).norm())).fold(0.0, f64::max);
    assert!(d < 1e-15);
}

#[test]
fn comparison_fixes_homogeneous_maps() {
    let coupling = planar_identity();
    let form = BoundaryForm::RadialProjection { radius: 1.0 };
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let u = form.field(SplitGrid::cube(2, 1.0, h).unwrap());
        let v = radial_comparison(&coupling, &u, &[0.0; 3], 0.5).unwrap();
        let (u, v) = (&u, &v);
        let err = Side::BOTH
            .iter()
            .flat_map(|&s| {
                let sg = u.grid().side(s);
                (0..sg.len())
                    .filter(move |&i| harmap::grid::dist(&sg.position(i), &[0.0; 3]) > 1e-12)
                    .map(move |i| (u.value(s, i) - v.value(s, i)).norm())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        assert!(err <= h, "h={h} err={err:.3e}");
    }
}

#[test]
fn comparison_requires_two_dimensions_and_room() {
    let problem = geodesic_problem(0.125);
    let u = problem.boundary.field(problem.grid);
    assert!(radial_comparison(&problem.coupling, &u, &[0.0; 3], 0.5).is_err());
    let problem = square_problem(0.125);
    let u = problem.boundary.field(problem.grid);
    assert!(matches!(
        radial_comparison(&problem.coupling, &u, &[0.5, 0.0, 0.0], 0.75),
        Err(Error::BallExceedsDomain { .. })
    ));
}

#[test]
fn minimizer_beats_its_radial_comparisons() {
    let h = 1.0 / 16.0;
    let problem = square_problem(h);
    let u0 = initialize_admissible(&problem).unwrap();
    let u = minimize(&problem, &u0, &MinimizeOptions::default()).unwrap().field;
    let e = discrete_energy(&u);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let x0 = [rng.gen_range(-0.5..0.5), 0.0, 0.0];
        let r = rng.gen_range(0.1..0.45);
        let v = radial_comparison(&problem.coupling, &u, &x0, r).unwrap();
        let m = v.membership(&problem.coupling);
        assert!(m.max() < 1e-12, "{m:?}");
        assert!(discrete_energy(&v) >= e - h, "x0={x0:?} r={r} {} {e}", discrete_energy(&v));
    }
}

fn perturbed_traces(amplitude: f64, beta: f64) -> (impl Fn(f64) -> Vec3, impl Fn(f64) -> Vec3) {
    let (c, d) = (Circle::new(1.0), Circle::new(1.0));
    let plus = move |t: f64| c.point(0.4 + amplitude * (3.0 * t).sin());
    let minus = move |t: f64| d.point(0.4 + beta + amplitude * (3.0 * -t).sin());
    (plus, minus)
}

#[test]
fn interpolation_extension_of_constants_is_constant() {
    let (p, m) = perturbed_traces(0.0, BETA);
    let ext = interpolation_extension_2d(&circle_coupling(BETA), &p, &m, 1.0 / 16.0, &Default::default()).unwrap();
    assert!(ext.energy.iter().all(|e| *e < 1e-20));
    assert!(ext.matching < 1e-14 && ext.slice < 1e-14);
}

#[test]
fn interpolation_extension_of_small_perturbation_has_finite_constants() {
    let (p, m) = perturbed_traces(0.02, BETA);
    let coupling = circle_coupling(BETA);
    let ext = interpolation_extension_2d(&coupling, &p, &m, 1.0 / 32.0, &Default::default()).unwrap();
    assert!(ext.matching < 1e-14 && ext.slice < 1e-12);
    for k in 0..2 {
        assert!(ext.oscillation[k] <= ext.threshold);
        assert!(ext.constant[k].is_finite());
    }
    let sg = ext.field.grid().side(Side::Plus);
    let diameter: Vec<Vec3> = sg.interface_nodes().iter().map(|&i| ext.field.value(Side::Plus, i)).collect();
    assert!(diameter.iter().all(|v| (v - diameter[0]).norm() < 1e-14));
}

#[test]
fn interpolation_extension_rejects_large_oscillation() {
    let (p, m) = perturbed_traces(0.5, BETA);
    let r = interpolation_extension_2d(&circle_coupling(BETA), &p, &m, 1.0 / 16.0, &Default::default());
    assert!(matches!(r, Err(Error::OscillationTooLarge { .. })));
}

fn sphere_point(theta: f64, phi: f64) -> Vec3 {
    Vec3::new(theta.cos() * phi.cos(), theta.sin() * phi.cos(), phi.sin())
}

fn cylinder_at(delta: f64, a: f64, c: f64) -> CylinderExtension {
    let coupling = equator_coupling();
    let g = move |x1: f64, x3: f64| sphere_point(a * x1, c * x3);
    let faces = move |_: Side, _: f64, p: [f64; 2]| g(p[0], p[1]);
    let lateral = move |_: Side, phi: f64| g(delta * phi.cos(), delta * phi.sin());
    let traces = CylinderTraces {
        faces: &faces,
        lateral: &lateral,
    };
    homogeneous_cylinder_extension(&coupling, &traces, delta, 8).unwrap()
}

#[test]
fn cylinder_extension_of_constants_is_constant() {
    let ext = cylinder_at(0.5, 0.0, 0.0);
    assert!(ext.energy.iter().all(|e| *e == 0.0));
}

#[test]
fn cylinder_extension_keeps_interface_constraints() {
    let ext = cylinder_at(0.5, 1.0, 0.8);
    assert!(ext.matching < 1e-15 && ext.slice < 1e-15);
    assert!(ext.constant.iter().all(|c| c.is_finite() && *c > 0.0));
}

#[test]
fn cylinder_extension_scales_with_delta() {
    let small = cylinder_at(0.25, 1.0, 0.8);
    let large = cylinder_at(0.5, 1.0, 0.8);
    for k in 0..2 {
        let ratio = small.constant[k] / large.constant[k];
        assert!((ratio - 1.0).abs() < 0.1, "side {k}: ratio {ratio}");
    }
}

#[test]
fn minus_trace_is_slaved_after_minimization() {
    let problem = square_problem(0.25);
    let u0 = initialize_admissible(&problem).unwrap();
    let out = minimize(&problem, &u0, &MinimizeOptions::default()).unwrap();
    let map = &problem.coupling.map;
    for i in problem.grid.side(Side::Plus).interface_nodes() {
        let (a, b) = (out.field.value(Side::Plus, i), out.field.value(Side::Minus, i));
        assert!((b - map.forward(&a)).norm() < 1e-14);
    }
}
