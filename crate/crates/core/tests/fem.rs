use std::f64::consts::FRAC_PI_4;

use layerfem_core::fem::*;
use layerfem_core::fields::{CoefficientField, DensityField};
use layerfem_core::geometry::{Domain, InterfaceCurve};
use layerfem_core::mesh::{triangulate, TriangleMesh};
use layerfem_core::{Error, Mat2, Point, Vec2};
use proptest::prelude::*;

fn radial_setup(h: f64) -> (InterfaceCurve, TriangleMesh) {
    let d = Domain::disk(Point::ZERO, 2.0).unwrap();
    let c = InterfaceCurve::circle(Point::ZERO, 1.0).unwrap();
    let m = triangulate(&d, &c, h).unwrap();
    (c, m)
}

#[test]
fn reference_element_matrix() {
    let k = element_stiffness(
        [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ],
        Mat2::IDENTITY,
    )
    .unwrap();
    let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((k[i][j] - want[i][j]).abs() < 1e-15);
        }
    }
    let flat = [
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(2.0, 0.0),
    ];
    assert!(matches!(
        element_stiffness(flat, Mat2::IDENTITY),
        Err(Error::Assembly(_))
    ));
}

#[test]
fn stiffness_is_symmetric_with_constant_kernel() {
    let (_, m) = radial_setup(0.2);
    let s = assemble_stiffness(&m, &CoefficientField::Identity).unwrap();
    assert_eq!(s.matrix.symmetry_defect(), 0.0);
    let ones = vec![1.0; m.vertices.len()];
    let k1 = s.matrix.mul_vec(&ones);
    assert!(k1.iter().all(|v| v.abs() < 1e-12));
    let meyers = assemble_stiffness(&m, &CoefficientField::meyers(0.5).unwrap()).unwrap();
    assert!(meyers.matrix.symmetry_defect() < 1e-15);
}

#[test]
fn load_vector_sums() {
    let (c, m) = radial_setup(0.1);
    let b = assemble_surface_load(&m, &c, &DensityField::Constant(1.0)).unwrap();
    let polygon: f64 = m
        .interface_edges
        .iter()
        .map(|e| m.vertices[e.vertices[0]].distance(m.vertices[e.vertices[1]]))
        .sum();
    assert!((b.iter().sum::<f64>() - polygon).abs() < 1e-12);
    assert!(polygon < std::f64::consts::TAU && polygon > std::f64::consts::TAU - 0.01);
    let zero = assemble_surface_load(&m, &c, &DensityField::Constant(0.0)).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));

    let t = InterfaceCurve::triangle();
    let mt = triangulate(&Domain::disk(Point::ZERO, 1.0).unwrap(), &t, 0.1).unwrap();
    let bt = assemble_surface_load(&mt, &t, &DensityField::Constant(1.0)).unwrap();
    assert!((bt.iter().sum::<f64>() - (1.0 + 0.5 * 2f64.sqrt())).abs() < 1e-13);

    let other = InterfaceCurve::circle(Point::ZERO, 1.05).unwrap();
    assert!(matches!(
        assemble_surface_load(&m, &other, &DensityField::Constant(1.0)),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn constraints_and_zero_data() {
    let (c, m) = radial_setup(0.2);
    let mut s = assemble_stiffness(&m, &CoefficientField::Identity).unwrap();
    s.rhs = vec![0.0; m.vertices.len()];
    let s = s.apply_dirichlet_zero();
    for v in 0..m.vertices.len() {
        if m.boundary[v] {
            for (c, x) in s.matrix.row(v) {
                assert_eq!(x, if c == v { 1.0 } else { 0.0 });
            }
        }
    }
    assert_eq!(s.matrix.symmetry_defect(), 0.0);
    let u = s.solve().unwrap();
    assert!(u.values.iter().all(|v| *v == 0.0));

    let u = solve_interface_problem(
        &m,
        &c,
        &CoefficientField::Identity,
        &DensityField::Constant(1.0),
    )
    .unwrap();
    for v in 0..m.vertices.len() {
        if m.boundary[v] {
            assert_eq!(u.values[v], 0.0);
        }
    }
}

#[test]
fn radial_benchmark_center_value() {
    let (c, m) = radial_setup(0.02);
    let u = solve_interface_problem(
        &m,
        &c,
        &CoefficientField::Identity,
        &DensityField::Constant(1.0),
    )
    .unwrap();
    assert!(u.relative_residual <= SOLVER_TOLERANCE);
    let center = u.value_at(Point::ZERO).unwrap();
    assert!(
        (center - 2f64.ln()).abs() / 2f64.ln() < 0.02,
        "u(0) = {center}"
    );
}

#[test]
fn solution_is_linear_in_density() {
    let (c, m) = radial_setup(0.1);
    let a = CoefficientField::smooth_perturbation(0.2, 3.0).unwrap();
    let q = DensityField::from_fn(&c, 256, 1.0, |p| 1.0 + 0.5 * p.x).unwrap();
    let u1 = solve_interface_problem(&m, &c, &a, &q).unwrap();
    let u2 = solve_interface_problem(&m, &c, &a, &q.scaled(2.0)).unwrap();
    let scale = u1.max_abs();
    for (x, y) in u1.values.iter().zip(&u2.values) {
        assert!((2.0 * x - y).abs() < 1e-8 * scale);
    }
    let zero = solve_interface_problem(&m, &c, &a, &DensityField::Constant(0.0)).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn galerkin_orthogonality_and_energy() {
    let (c, m) = radial_setup(0.05);
    for a in [
        CoefficientField::Identity,
        CoefficientField::meyers(0.5).unwrap(),
    ] {
        let mut s = assemble_stiffness(&m, &a).unwrap();
        s.rhs = assemble_surface_load(&m, &c, &DensityField::Constant(1.0)).unwrap();
        let s = s.apply_dirichlet_zero();
        let u = s.solve().unwrap();
        let bnorm = s.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(s.galerkin_residual(&u.values) <= 1e-9 * bnorm);
        let e = energy(&s, &u.values);
        let work: f64 = s.rhs.iter().zip(&u.values).map(|(b, u)| b * u).sum();
        assert!((e - work).abs() < 1e-8 * e);
        let lambda = a.ellipticity_bound().unwrap();
        assert!(e >= lambda * dirichlet_energy(&u) * (1.0 - 1e-12));
    }
}

#[test]
fn linear_data_reproduced() {
    let (_, m) = radial_setup(0.1);
    let u = solve_dirichlet(&m, &CoefficientField::Identity, |p| p.x, Region::Whole).unwrap();
    for (v, p) in m.vertices.iter().enumerate() {
        assert!((u.values[v] - p.x).abs() < 1e-8);
    }
    for g in &u.gradients {
        assert!((*g - Vec2::new(1.0, 0.0)).norm() < 1e-7);
    }
}

#[test]
fn exterior_solve_vanishes_on_interface() {
    let (_, m) = radial_setup(0.1);
    let a = CoefficientField::meyers(0.5).unwrap();
    let u = solve_dirichlet(&m, &a, |p| -p.x / 2f64.sqrt(), Region::Exterior).unwrap();
    for v in 0..m.vertices.len() {
        if m.on_interface[v] || m.vertices[v].norm() < 1.0 - 1e-9 {
            assert_eq!(u.values[v], 0.0);
        }
        if m.boundary[v] {
            assert!((u.values[v] + m.vertices[v].x / 2f64.sqrt()).abs() < 1e-15);
        }
    }
    let d = Domain::disk(Point::ZERO, 2.0).unwrap();
    let plain = triangulate(&d, &InterfaceCurve::circle(Point::ZERO, 1.0).unwrap(), 0.2).unwrap();
    assert!(solve_dirichlet(&plain, &a, |_| f64::NAN, Region::Whole).is_err());
}

#[test]
fn ring_mesh_solution_is_rotation_invariant() {
    let (c, m) = radial_setup(0.05);
    let u = solve_interface_problem(
        &m,
        &c,
        &CoefficientField::Identity,
        &DensityField::Constant(1.0),
    )
    .unwrap();
    let (cs, sn) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
    let mut checked = 0;
    for (v, p) in m.vertices.iter().enumerate().step_by(7) {
        let r = Point::new(cs * p.x - sn * p.y, sn * p.x + cs * p.y);
        let w = m
            .vertices
            .iter()
            .position(|q| q.distance(r) < 1e-9)
            .expect("rotated vertex exists");
        assert!((u.values[v] - u.values[w]).abs() < 1e-8);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn residuals_shrink_under_refinement() {
    let c = InterfaceCurve::circle(Point::ZERO, 1.0).unwrap();
    let q = DensityField::Constant(1.0);
    let a = CoefficientField::Identity;
    let phi = BubblePolynomial {
        center: Point::ZERO,
        radius: 2.0,
        coeffs: [0.5, 0.3, -0.2, 0.1, 0.2, -0.1],
    };
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for h in [0.08, 0.04, 0.02] {
        let (_, m) = radial_setup(h);
        let u = solve_interface_problem(&m, &c, &a, &q).unwrap();
        let w = weak_residual(&u, &a, &c, &q, &phi).unwrap().abs();
        let vw = very_weak_residual(&u, &a, &c, &q, &phi).unwrap().abs();
        assert!(w < 0.7 * prev.0 && vw < 0.7 * prev.1, "h = {h}: {w} {vw}");
        prev = (w, vw);
    }
}

#[test]
fn meyers_system_converges() {
    let (c, m) = radial_setup(0.05);
    let u = solve_interface_problem(
        &m,
        &c,
        &CoefficientField::meyers(0.5).unwrap(),
        &DensityField::Constant(1.0),
    )
    .unwrap();
    assert!(u.relative_residual <= SOLVER_TOLERANCE);
    assert!((u.iterations as f64) <= 50.0 * (m.vertices.len() as f64).sqrt());
}

fn fd_check(phi: &dyn TestFunction, p: Point) {
    let h = 1e-5;
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let g = phi.gradient(p);
    let fd = Vec2::new(
        (phi.value(p + ex) - phi.value(p - ex)) / (2.0 * h),
        (phi.value(p + ey) - phi.value(p - ey)) / (2.0 * h),
    );
    assert!((g - fd).norm() < 1e-6 * (1.0 + g.norm()));
    let hs = phi.hessian(p);
    let gx = (phi.gradient(p + ex) - phi.gradient(p - ex)) / (2.0 * h);
    let gy = (phi.gradient(p + ey) - phi.gradient(p - ey)) / (2.0 * h);
    let scale = 1.0 + hs.a11.abs() + hs.a22.abs() + hs.a12.abs();
    assert!((hs.a11 - gx.x).abs() < 1e-5 * scale);
    assert!((hs.a12 - gx.y).abs() < 1e-5 * scale);
    assert!((hs.a21 - gy.x).abs() < 1e-5 * scale);
    assert!((hs.a22 - gy.y).abs() < 1e-5 * scale);
}

proptest! {
    #[test]
    fn test_function_derivatives(x in -1.9..1.9f64, y in -1.9..1.9f64) {
        let p = Point::new(x, y);
        fd_check(&BubblePolynomial { center: Point::ZERO, radius: 2.0, coeffs: [0.5, 0.3, -0.2, 0.1, 0.2, -0.1] }, p);
        fd_check(&RadialBump { center: Point::new(0.4, -0.3), radius: 1.3 }, p);
        fd_check(&TubeBump { center: Point::ZERO, radius: 1.0, width: 0.4 }, p);
    }

    #[test]
    fn flux_divergence_matches_differences(x in -1.5..1.5f64, y in -1.5..1.5f64) {
        let p = Point::new(x, y);
        prop_assume!(p.norm() > 0.2);
        let a = CoefficientField::meyers(0.5).unwrap();
        let phi = RadialBump { center: Point::new(0.1, 0.2), radius: 1.9 };
        let h = 1e-4;
        let flux = |q: Point| a.eval(q).mul_vec(phi.gradient(q));
        let fd = (flux(p + Vec2::new(h, 0.0)).x - flux(p - Vec2::new(h, 0.0)).x) / (2.0 * h)
            + (flux(p + Vec2::new(0.0, h)).y - flux(p - Vec2::new(0.0, h)).y) / (2.0 * h);
        let got = divergence_of_flux(&a, &phi, p);
        prop_assert!((got - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{} vs {}", got, fd);
    }
}
