use std::f64::consts::TAU;

use layerfem_core::fields::{CoefficientField, DensityField};
use layerfem_core::geometry::InterfaceCurve;
use layerfem_core::potentials::*;
use layerfem_core::{Point, Vec2};
use proptest::prelude::*;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    step(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        50,
    )
}

fn brute_segment_integrals(x: Point) -> (f64, f64) {
    let i1 = simpson(
        &|t| (x.x - t) / ((x.x - t).powi(2) + x.y * x.y),
        0.0,
        0.5,
        1e-14,
    );
    let i2 = simpson(&|t| x.x / (x.x * x.x + (x.y - t).powi(2)), 0.0, 0.5, 1e-14);
    (i1, i2)
}

#[test]
fn green_function_values() {
    let g = GreenDisk::new(2.0).unwrap();
    let y = Point::new(0.7, -0.4);
    let at_center = g.eval(Point::ZERO, y).unwrap();
    assert!((at_center - (2.0 / y.norm()).ln() / TAU).abs() < 1e-14);
    for k in 0..12 {
        let t = 0.5 * k as f64;
        let b = Point::new(2.0 * t.cos(), 2.0 * t.sin());
        assert!(g.eval(b, y).unwrap().abs() < 1e-14);
    }
    assert!(g.eval(y, y).is_err());
    assert!(g.eval(Point::new(3.0, 0.0), y).is_err());
    assert!(GreenDisk::new(0.0).is_err());
}

#[test]
fn green_function_is_harmonic_off_diagonal() {
    let y = Point::new(0.3, 0.5);
    let h = 1e-4;
    for x in [
        Point::new(-0.8, 0.2),
        Point::new(1.2, -0.9),
        Point::new(0.1, -0.1),
    ] {
        let f = |p: Point| green_disk(2.0, p, y).unwrap();
        let lap = (f(x + Vec2::new(h, 0.0))
            + f(x - Vec2::new(h, 0.0))
            + f(x + Vec2::new(0.0, h))
            + f(x - Vec2::new(0.0, h))
            - 4.0 * f(x))
            / (h * h);
        assert!(lap.abs() < 1e-5, "Δ_x G = {lap}");
    }
}

#[test]
fn single_layer_matches_radial_oracle() {
    for (outer, inner, q) in [(2.0, 1.0, 1.0), (3.0, 0.7, 2.5)] {
        let c = InterfaceCurve::circle(Point::ZERO, inner).unwrap();
        let o = radial_oracle(outer, inner, q).unwrap();
        let density = DensityField::Constant(q);
        for (k, r) in [
            0.0,
            0.3 * inner,
            inner,
            1.4 * inner,
            0.5 * (inner + outer),
            0.99 * outer,
        ]
        .into_iter()
        .enumerate()
        {
            let t = 0.9 * k as f64;
            let x = Point::new(r * t.cos(), r * t.sin());
            let u = green_solution(outer, &c, &density, x).unwrap();
            assert!(
                (u - o.value(r)).abs() < 1e-8,
                "R = {outer}, r = {r}: {u} vs {}",
                o.value(r)
            );
        }
    }
}

#[test]
fn radial_oracle_properties() {
    let o = radial_oracle(2.0, 1.0, 1.0).unwrap();
    assert!((o.value(0.0) - 2f64.ln()).abs() < 1e-15);
    assert!((o.value(1.0 - 1e-12) - o.value(1.0 + 1e-12)).abs() < 1e-11);
    let (inside, outside) = o.interface_derivatives();
    assert_eq!(inside, 0.0);
    assert!((outside + 1.0).abs() < 1e-15);
    assert!((o.derivative_jump() + 1.0).abs() < 1e-15);
    // Harmonic in the annulus: (r u')' = 0.
    let h = 1e-5;
    for r in [1.2, 1.5, 1.9] {
        let fd = (o.value(r + h) - o.value(r - h)) / (2.0 * h);
        assert!((fd - o.derivative(r)).abs() < 1e-8);
        assert!(((r + h) * o.derivative(r + h) - (r - h) * o.derivative(r - h)).abs() < 1e-12);
    }
    let p = Point::new(1.2, 0.9);
    assert!((o.gradient_at(p) - p * (o.derivative(p.norm()) / p.norm())).norm() < 1e-15);
    assert!(radial_oracle(2.0, 0.0, 1.0).is_err());
}

#[test]
fn segment_integrals_match_brute_force() {
    let points = [
        Point::new(0.25, 0.25),
        Point::new(0.01, 0.02),
        Point::new(-0.05, 0.03),
        Point::new(0.3, -0.1),
        Point::new(-0.2, -0.2),
        Point::new(0.6, 0.4),
        Point::new(0.1, 0.01),
        Point::new(0.01, 0.4),
    ];
    for x in points {
        let s = segment_kernel_integrals(x).unwrap();
        let (b1, b2) = brute_segment_integrals(x);
        assert!((s.i1 - b1).abs() < 1e-9, "I1 at {x:?}: {} vs {b1}", s.i1);
        assert!((s.i2 - b2).abs() < 1e-9, "I2 at {x:?}: {} vs {b2}", s.i2);
    }
    assert!(segment_kernel_integrals(Point::new(0.3, 0.0)).is_err());
    assert!(segment_kernel_integrals(Point::new(0.0, 0.1)).is_err());
}

#[test]
fn corner_oracle_grows_like_log_over_two_pi() {
    for dir in [
        Vec2::new(1.0, 1.0).normalized(),
        Vec2::new(-1.0, -0.4).normalized(),
        Vec2::new(0.2, -1.0).normalized(),
    ] {
        let radii: Vec<f64> = (0..12).map(|k| 0.1 * 0.5f64.powi(k)).collect();
        let xs: Vec<f64> = radii.iter().map(|r| (1.0 / r).ln()).collect();
        let ys: Vec<f64> = radii
            .iter()
            .map(|&r| triangle_gradient_oracle(dir * r).unwrap())
            .collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(
            (slope * TAU - 1.0).abs() < 0.05,
            "slope {slope} along {dir:?}"
        );
    }
    assert!(triangle_gradient_oracle(Point::ZERO).is_err());
    assert!(triangle_gradient_oracle(Point::new(0.3, 0.3)).is_err());
}

#[test]
fn meyers_u1_on_outer_circle() {
    let mu = 0.5;
    for k in 0..8 {
        let t = 0.8 * k as f64;
        let p = Point::new(2.0 * t.cos(), 2.0 * t.sin());
        let (v, _) = meyers_u1(mu, p).unwrap();
        assert!((v - p.x / 2f64.powf(1.0 - mu)).abs() < 1e-14);
    }
    assert!(meyers_u1(mu, Point::ZERO).is_err());
    assert!(meyers_u1(1.0, Point::new(1.0, 0.0)).is_err());
}

proptest! {
    #[test]
    fn green_function_is_symmetric(r1 in 0.0..1.9f64, t1 in 0.0..TAU, r2 in 0.0..1.9f64, t2 in 0.0..TAU) {
        let x = Point::new(r1 * t1.cos(), r1 * t1.sin());
        let y = Point::new(r2 * t2.cos(), r2 * t2.sin());
        prop_assume!(x.distance(y) > 1e-6);
        let (a, b) = (green_disk(2.0, x, y).unwrap(), green_disk(2.0, y, x).unwrap());
        prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
        prop_assert!(a > 0.0);
    }

    #[test]
    fn meyers_u1_gradient_matches_differences(mu in 0.1..0.9f64, r in 0.1..1.9f64, t in 0.0..TAU) {
        let p = Point::new(r * t.cos(), r * t.sin());
        let (_, g) = meyers_u1(mu, p).unwrap();
        let h = 1e-6 * r;
        let f = |q: Point| meyers_u1(mu, q).unwrap().0;
        let fd = Vec2::new(
            (f(p + Vec2::new(h, 0.0)) - f(p - Vec2::new(h, 0.0))) / (2.0 * h),
            (f(p + Vec2::new(0.0, h)) - f(p - Vec2::new(0.0, h))) / (2.0 * h),
        );
        prop_assert!((fd - g).norm() <= 1e-6 * g.norm().max(1.0));
    }

    #[test]
    fn meyers_u1_is_a_harmonic(r in 0.1..1.9f64, t in 0.0..TAU) {
        let mu = 0.5;
        let a = CoefficientField::meyers(mu).unwrap();
        let p = Point::new(r * t.cos(), r * t.sin());
        let flux = |q: Point| {
            let f = |s: Point| meyers_u1(mu, s).unwrap().0;
            let h = 1e-5;
            let g = Vec2::new(
                (f(q + Vec2::new(h, 0.0)) - f(q - Vec2::new(h, 0.0))) / (2.0 * h),
                (f(q + Vec2::new(0.0, h)) - f(q - Vec2::new(0.0, h))) / (2.0 * h),
            );
            a.eval(q).mul_vec(g)
        };
        let h = 1e-4;
        let div = (flux(p + Vec2::new(h, 0.0)).x - flux(p - Vec2::new(h, 0.0)).x) / (2.0 * h)
            + (flux(p + Vec2::new(0.0, h)).y - flux(p - Vec2::new(0.0, h)).y) / (2.0 * h);
        prop_assert!(div.abs() <= 1e-4, "div(A∇u1) = {}", div);
    }

    #[test]
    fn single_layer_is_continuous_across_circle(t in 0.0..TAU) {
        let c = InterfaceCurve::circle(Point::new(0.2, -0.1), 0.6).unwrap();
        let q = DensityField::Constant(1.0);
        let on = Point::new(0.2 + 0.6 * t.cos(), -0.1 + 0.6 * t.sin());
        let nu = Vec2::new(t.cos(), t.sin());
        let inner = green_solution(2.0, &c, &q, on - nu * 1e-7).unwrap();
        let outer = green_solution(2.0, &c, &q, on + nu * 1e-7).unwrap();
        prop_assert!((inner - outer).abs() < 1e-5);
        prop_assert!(inner > 0.0);
    }
}
