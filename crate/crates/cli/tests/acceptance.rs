//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still run at their stated
//! tolerance and reported as FAIL when they fail; only they are exempt from
//! the nonzero exit status.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use layerfem_core::analysis::{
    distributional_identity_residual, estimate_theta, integrability_exponent, line_fit,
    linf_gradient_norm, lp_gradient_norm, max_principle, one_sided_traces, taylor_fit,
};
use layerfem_core::fem::{
    solve_dirichlet, solve_interface_problem, very_weak_residual, weak_residual, BubblePolynomial,
    RadialBump, Region, SolutionField, TestFunction, TubeBump,
};
use layerfem_core::fields::{meyers_density, CoefficientField, DensityField};
use layerfem_core::geometry::{Domain, InterfaceCurve};
use layerfem_core::mesh::{refine, triangulate, TriangleMesh};
use layerfem_core::potentials::{
    green_solution, meyers_u1, radial_oracle, segment_kernel_integrals, triangle_gradient_oracle,
};
use layerfem_core::{Point, Vec2};

/// Criterion 11 asks for the perimeter of the level-set approximation of the
/// triangle within 1% at j = 64. The `1/j` level set of a convex polygon's
/// distance is (up to `O(δ)` corner rounding) the parallel curve at distance
/// `1/j`, whose length is `P + 2π/j`; at j = 64 that is 5.7% above `P`, and
/// 1% is reached only for j ≥ 368.
const KNOWN_UNATTAINABLE: &[u32] = &[11];

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn all(parts: Vec<Outcome>) -> Outcome {
    let ok = parts.iter().all(|p| p.is_ok());
    let text: Vec<String> = parts
        .into_iter()
        .map(|p| p.unwrap_or_else(|e| format!("[failed] {e}")))
        .collect();
    check(ok, text.join("; "))
}

fn disk(r: f64) -> Domain {
    Domain::disk(Point::ZERO, r).unwrap()
}

fn unit_circle() -> InterfaceCurve {
    InterfaceCurve::circle(Point::ZERO, 1.0).unwrap()
}

const ID: CoefficientField = CoefficientField::Identity;
const ONE: DensityField = DensityField::Constant(1.0);

fn refinements(
    domain: &Domain,
    curve: &InterfaceCurve,
    h0: f64,
    levels: usize,
) -> Vec<TriangleMesh> {
    let mut meshes = vec![triangulate(domain, curve, h0).unwrap()];
    while meshes.len() < levels {
        let next = refine(meshes.last().unwrap(), curve).unwrap();
        meshes.push(next);
    }
    meshes
}

fn probe_points(curve: &InterfaceCurve, n: usize) -> Vec<Point> {
    let len = curve.perimeter();
    (0..n)
        .map(|k| curve.locate(len * (k as f64 + 0.3) / n as f64).point)
        .collect()
}

fn sci(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn relative_differences(v: &[f64]) -> Vec<f64> {
    v.windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[1].abs())
        .collect()
}

fn c1_radial_benchmark() -> Outcome {
    let start = Instant::now();
    let mesh = triangulate(&disk(2.0), &unit_circle(), 0.02).unwrap();
    let u = solve_interface_problem(&mesh, &unit_circle(), &ID, &ONE).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let o = radial_oracle(2.0, 1.0, 1.0).unwrap();
    let exact_max = o.value(0.0);
    let err = mesh
        .vertices
        .iter()
        .zip(&u.values)
        .map(|(p, v)| (v - o.value(p.norm())).abs())
        .fold(0.0, f64::max);
    let rel = err / exact_max;
    check(
        rel <= 0.02 && elapsed <= 60.0,
        format!(
            "max nodal error {err:.3e} = {:.4}% of |u|_inf, {} vertices, {elapsed:.2} s",
            100.0 * rel,
            mesh.vertices.len()
        ),
    )
}

fn c2_jump_formula() -> Outcome {
    let mut means = Vec::new();
    let mut rel = f64::NAN;
    for h in [0.08, 0.04, 0.02, 0.01] {
        let mesh = triangulate(&disk(2.0), &unit_circle(), h).unwrap();
        let u = solve_interface_problem(&mesh, &unit_circle(), &ID, &ONE).unwrap();
        let r = one_sided_traces(&u, &unit_circle(), &ID, &ONE).unwrap();
        means.push(r.mean_abs_error);
        rel = r.mean_relative_error;
    }
    check(
        rel <= 0.05 && strictly_decreasing(&means),
        format!(
            "mean |jump - Q/(Aν,ν)| at h = 0.08..0.01: {}; relative {:.3}% at h = 0.01",
            sci(&means, 3),
            100.0 * rel
        ),
    )
}

fn c3_trace_decomposition() -> Outcome {
    let c = unit_circle();
    let mesh = triangulate(&disk(2.0), &c, 0.01).unwrap();
    let u = solve_interface_problem(&mesh, &c, &ID, &ONE).unwrap();
    let traces = one_sided_traces(&u, &c, &ID, &ONE).unwrap();
    let mut worst_theta: f64 = 0.0;
    let mut worst_kink: f64 = 0.0;
    for x0 in probe_points(&c, 8) {
        let ball = estimate_theta(&u, x0, &[0.1, 0.15, 0.2, 0.25]).unwrap();
        let trace = traces.nearest(x0).theta;
        worst_theta = worst_theta.max((ball.theta - trace).norm() / trace.norm());
        let fit = taylor_fit(&u, &c, &ID, &ONE, x0, 0.1).unwrap();
        // −½Q/(Aν,ν) with Q = 1 and A = I.
        worst_kink = worst_kink.max((fit.kink_coeff + 0.5).abs() / 0.5);
    }
    check(
        worst_theta <= 0.05 && worst_kink <= 0.10,
        format!(
            "8 points at h = 0.01: max |θ_trace − θ_ball|/|θ_trace| = {:.2}%, max kink error vs −½ = {:.2}%",
            100.0 * worst_theta,
            100.0 * worst_kink
        ),
    )
}

fn c4_green_consistency() -> Outcome {
    let c = InterfaceCurve::circle(Point::new(0.3, -0.2), 0.8).unwrap();
    let q = DensityField::from_fn(&c, 512, 1.0, |p| 1.0 + 0.5 * p.y).unwrap();
    let mesh = triangulate(&disk(2.0), &c, 0.02).unwrap();
    let u = solve_interface_problem(&mesh, &c, &ID, &q).unwrap();
    let mut worst_fem: f64 = 0.0;
    for k in 0..20 {
        let r = 0.1 + 1.4 * k as f64 / 19.0;
        let t = 2.4 * k as f64;
        let x = Point::new(r * t.cos(), r * t.sin());
        let g = green_solution(2.0, &c, &q, x).unwrap();
        let f = u.value_at(x).unwrap();
        worst_fem = worst_fem.max((g - f).abs() / g.abs());
    }
    let mut worst_radial: f64 = 0.0;
    for (outer, inner, qc) in [(2.0, 1.0, 1.0), (3.0, 0.7, 2.5), (1.5, 0.4, 0.3)] {
        let circle = InterfaceCurve::circle(Point::ZERO, inner).unwrap();
        let o = radial_oracle(outer, inner, qc).unwrap();
        for r in [0.0, 0.5 * inner, inner, 0.5 * (inner + outer), 0.95 * outer] {
            let x = Point::new(r * 0.6, r * 0.8);
            let g = green_solution(outer, &circle, &DensityField::Constant(qc), x).unwrap();
            worst_radial = worst_radial.max((g - o.value(r)).abs());
        }
    }
    check(
        worst_fem <= 0.02 && worst_radial <= 1e-8,
        format!(
            "off-centre circle, 20 points: max relative |G − u_h| = {:.3e}; concentric: max |G − radial| = {worst_radial:.2e}",
            worst_fem
        ),
    )
}

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

fn c5_triangle_counterexample() -> Outcome {
    let t = InterfaceCurve::triangle();
    let meshes = refinements(&disk(1.0), &t, 0.1, 5);
    let linf: Vec<f64> = meshes
        .iter()
        .map(|m| linf_gradient_norm(&solve_interface_problem(m, &t, &ID, &ONE).unwrap()))
        .collect();
    let increasing = linf.windows(2).all(|w| w[1] > w[0]);

    let mut slopes = Vec::new();
    for dir in [
        Vec2::new(1.0, 1.0).normalized(),
        Vec2::new(-1.0, -0.4).normalized(),
        Vec2::new(0.3, -1.0).normalized(),
    ] {
        let radii: Vec<f64> = (0..=20)
            .map(|k| 1e-2 * 10f64.powf(-2.0 * k as f64 / 20.0))
            .collect();
        let xs: Vec<f64> = radii.iter().map(|r| (1.0 / r).ln()).collect();
        let ys: Vec<f64> = radii
            .iter()
            .map(|&r| triangle_gradient_oracle(dir * r).unwrap())
            .collect();
        slopes.push(line_fit(&xs, &ys).unwrap().0);
    }
    let slope_ok = slopes.iter().all(|s| (s * TAU - 1.0).abs() <= 0.05);

    let mut worst: f64 = 0.0;
    for x in [
        Point::new(0.25, 0.25),
        Point::new(0.01, 0.02),
        Point::new(-0.05, 0.03),
        Point::new(0.3, -0.1),
        Point::new(-0.2, -0.2),
        Point::new(0.001, 0.003),
    ] {
        let s = segment_kernel_integrals(x).unwrap();
        let i1 = simpson(
            &|t| (x.x - t) / ((x.x - t).powi(2) + x.y * x.y),
            0.0,
            0.5,
            1e-14,
        );
        let i2 = simpson(&|t| x.x / (x.x * x.x + (x.y - t).powi(2)), 0.0, 0.5, 1e-14);
        worst = worst.max((s.i1 - i1).abs()).max((s.i2 - i2).abs());
    }
    all(vec![
        check(
            increasing,
            format!("|∇u_h|_inf over h = 0.1..0.00625: {linf:.4?}"),
        ),
        check(
            slope_ok,
            format!(
                "oracle log-slope × 2π = {:.4?}",
                slopes.iter().map(|s| s * TAU).collect::<Vec<_>>()
            ),
        ),
        check(
            worst <= 1e-9,
            format!("segment integrals vs Simpson: {worst:.1e}"),
        ),
    ])
}

fn c6_meyers_threshold() -> Outcome {
    let mu = 0.5;
    let a = CoefficientField::meyers(mu).unwrap();
    let c = unit_circle();
    let meshes = refinements(&disk(2.0), &c, 0.1, 4);
    let data = |p: Point| -meyers_u1(mu, p).map(|(v, _)| v).unwrap_or(0.0);
    let sols: Vec<SolutionField<'_>> = meshes
        .iter()
        .map(|m| {
            let u2 = solve_dirichlet(m, &a, data, Region::Exterior).unwrap();
            let q = meyers_density(mu, &u2, &c).unwrap();
            solve_interface_problem(m, &c, &a, &q).unwrap()
        })
        .collect();
    let grid: Vec<f64> = (4..=16).map(|k| 0.5 * k as f64).collect();
    let r = integrability_exponent(&sols, &grid).unwrap();
    let l2: Vec<f64> = sols
        .iter()
        .map(|u| lp_gradient_norm(u, 2.0).unwrap())
        .collect();
    let d = relative_differences(&l2);
    let p_ok = r.p_crit.is_some_and(|p| (3.5..=4.5).contains(&p));
    all(vec![
        check(
            p_ok,
            format!("p_crit = {:?} (predicted 2/(1−μ) = 4)", r.p_crit),
        ),
        check(
            d.iter().all(|x| *x < 0.05),
            format!("|∇u_h|_L2 over h = 0.1..0.0125: {l2:.4?}, differences {d:.4?}"),
        ),
    ])
}

fn c7_lipschitz_stability() -> Outcome {
    let mut parts = Vec::new();
    let curves = [
        (
            "circle",
            InterfaceCurve::circle(Point::new(0.1, 0.0), 1.0).unwrap(),
        ),
        (
            "ellipse",
            InterfaceCurve::ellipse(Point::ZERO, 1.2, 0.7, 256).unwrap(),
        ),
    ];
    for (name, c) in curves {
        let q =
            DensityField::from_fn(&c, 1024, 0.5, |p| 1.0 + 0.5 * (p.x - 0.3).abs().sqrt()).unwrap();
        let meshes = refinements(&disk(2.0), &c, 0.04, 4);
        let linf: Vec<f64> = meshes
            .iter()
            .map(|m| linf_gradient_norm(&solve_interface_problem(m, &c, &ID, &q).unwrap()))
            .collect();
        let d = relative_differences(&linf);
        parts.push(check(
            d.iter().all(|x| *x <= 0.03),
            format!("{name}: |∇u_h|_inf {linf:.4?}, differences {d:.4?}"),
        ));
    }
    all(parts)
}

fn c8_measure_growth() -> Outcome {
    let circle = unit_circle();
    let centers: Vec<Point> = circle
        .sample_points(0.05)
        .unwrap()
        .iter()
        .map(|s| s.point)
        .collect();
    let radii: Vec<f64> = (0..40)
        .map(|k| 2.2 * 0.85f64.powi(k))
        .chain([2.0])
        .collect();
    let g32 = circle
        .measure_growth_constant_with(&centers, &radii, 32)
        .unwrap();
    let g128 = circle
        .measure_growth_constant_with(&centers, &radii, 128)
        .unwrap();
    let circle_ok = (g128.constant - PI).abs() <= 0.02 * PI
        && (g32.constant - g128.constant).abs() <= 0.01 * g128.constant;

    let t = InterfaceCurve::triangle();
    let tc: Vec<Point> = t
        .sample_points(0.02)
        .unwrap()
        .iter()
        .map(|s| s.point)
        .collect();
    let tr: Vec<f64> = (0..40).map(|k| 0.8 * 0.85f64.powi(k)).collect();
    let t32 = t.measure_growth_constant_with(&tc, &tr, 32).unwrap();
    let t128 = t.measure_growth_constant_with(&tc, &tr, 128).unwrap();
    let tri_ok =
        t128.constant.is_finite() && (t32.constant - t128.constant).abs() <= 0.01 * t128.constant;
    all(vec![
        check(
            circle_ok,
            format!(
                "circle sup = {:.5} (π = {PI:.5}), 32 panels {:.5}",
                g128.constant, g32.constant
            ),
        ),
        check(
            tri_ok,
            format!(
                "triangle sup = {:.5}, 32 panels {:.5}",
                t128.constant, t32.constant
            ),
        ),
    ])
}

fn c9_distributional_identity() -> Outcome {
    let c = unit_circle();
    let phi = TubeBump {
        center: Point::ZERO,
        radius: 1.0,
        width: 0.25,
    };
    let q0 = |p: Point| 1.0 + 0.3 * p.x;
    let grids = [50usize, 100, 200, 400];
    let res: Vec<f64> = grids
        .iter()
        .map(|&n| {
            distributional_identity_residual(&c, &q0, &phi, (0, 0), 0.3, n)
                .unwrap()
                .residual
        })
        .collect();
    let orders: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let mixed = distributional_identity_residual(&c, &q0, &phi, (0, 1), 0.3, 400)
        .unwrap()
        .residual;
    check(
        res[3] <= 1e-4 && mixed <= 1e-4 && orders.iter().all(|o| *o >= 2.0),
        format!(
            "residual (0,0) at n = 50..400: {}, orders {orders:.2?}; (0,1) at 400: {mixed:.2e}",
            sci(&res, 2)
        ),
    )
}

fn c10_maximum_principle() -> Outcome {
    let c = unit_circle();
    let mesh = triangulate(&disk(2.0), &c, 0.05).unwrap();
    let g = |p: Point| p.x * p.x - 0.5 * p.y + (3.0 * p.y).sin();
    let mut worst: f64 = 0.0;
    for a in [
        CoefficientField::Identity,
        CoefficientField::meyers(0.5).unwrap(),
    ] {
        for region in [Region::Whole, Region::Exterior] {
            let u = solve_dirichlet(&mesh, &a, g, region).unwrap();
            worst = worst.max(max_principle(&u, region).violation);
        }
    }
    check(
        worst <= 1e-8,
        format!("max violation over identity/meyers(½), whole/exterior: {worst:.2e}"),
    )
}

fn c11_interface_approximation() -> Outcome {
    let t = InterfaceCurve::triangle();
    let d = disk(1.0);
    let target = 1.0 + 0.5 * 2f64.sqrt();
    let base_moment = t.quadrature(64).unwrap().integrate(|n| n.point.x);
    let mut perims = Vec::new();
    let mut moments = Vec::new();
    for j in [8u32, 16, 32, 64] {
        let s = t.smooth_approximation(j, &d).unwrap();
        perims.push(s.perimeter());
        moments.push((s.quadrature(8192).unwrap().integrate(|n| n.point.x) - base_moment).abs());
    }
    let rel = (perims[3] - target).abs() / target;
    all(vec![
        check(
            rel <= 0.01,
            format!(
                "perimeter at j = 64: {:.5} vs {target:.7} ({:.2}%); j = 8..64: {perims:.4?}",
                perims[3],
                100.0 * rel
            ),
        ),
        check(
            strictly_decreasing(&moments),
            format!("|Δ∫x₁| for j = 8..64: {}", sci(&moments, 3)),
        ),
    ])
}

fn c12_weak_equivalence() -> Outcome {
    let c = unit_circle();
    let phis: [(&str, Box<dyn TestFunction>); 3] = [
        (
            "bubble",
            Box::new(BubblePolynomial {
                center: Point::ZERO,
                radius: 2.0,
                coeffs: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            }),
        ),
        (
            "bubble2",
            Box::new(BubblePolynomial {
                center: Point::ZERO,
                radius: 2.0,
                coeffs: [0.3, 0.5, -0.2, 0.1, 0.2, -0.3],
            }),
        ),
        (
            "bump",
            Box::new(RadialBump {
                center: Point::new(0.4, -0.3),
                radius: 1.3,
            }),
        ),
    ];
    let hs = [0.08, 0.04, 0.02, 0.01];
    let mut weak = vec![Vec::new(); 3];
    let mut very = vec![Vec::new(); 3];
    for h in hs {
        let mesh = triangulate(&disk(2.0), &c, h).unwrap();
        let u = solve_interface_problem(&mesh, &c, &ID, &ONE).unwrap();
        for (k, (_, phi)) in phis.iter().enumerate() {
            weak[k].push(
                weak_residual(&u, &ID, &c, &ONE, phi.as_ref())
                    .unwrap()
                    .abs(),
            );
            very[k].push(
                very_weak_residual(&u, &ID, &c, &ONE, phi.as_ref())
                    .unwrap()
                    .abs(),
            );
        }
    }
    let parts = phis
        .iter()
        .enumerate()
        .map(|(k, (name, _))| {
            check(
                strictly_decreasing(&weak[k]) && strictly_decreasing(&very[k]),
                format!(
                    "{name}: weak {}, very weak {}",
                    sci(&weak[k], 2),
                    sci(&very[k], 2)
                ),
            )
        })
        .collect();
    all(parts)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "radial benchmark", c1_radial_benchmark),
        (2, "normal jump formula", c2_jump_formula),
        (3, "trace decomposition", c3_trace_decomposition),
        (4, "Green consistency", c4_green_consistency),
        (5, "triangle counterexample", c5_triangle_counterexample),
        (
            6,
            "anisotropic integrability threshold",
            c6_meyers_threshold,
        ),
        (
            7,
            "Lipschitz stability for smooth interfaces",
            c7_lipschitz_stability,
        ),
        (8, "measure growth", c8_measure_growth),
        (9, "distributional identity", c9_distributional_identity),
        (10, "maximum principle", c10_maximum_principle),
        (11, "interface approximation", c11_interface_approximation),
        (12, "weak/very weak equivalence", c12_weak_equivalence),
    ];
    // `cargo test` passes harness flags such as `--nocapture`; a positional
    // argument selects criteria by number.
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut unexpected = 0;
    for (n, name, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {n:>2} {tag} {name} ({secs:.1} s): {detail}");
        if outcome.is_err() {
            if KNOWN_UNATTAINABLE.contains(&n) {
                println!("             known unattainable at the stated tolerance; not counted towards the exit status");
            } else {
                unexpected += 1;
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
