//! Builds a scenario, runs the requested verifications and collects the
//! report and output tables.

use std::collections::BTreeMap;

use layerfem_core::analysis::{
    blowup_log_fit, distributional_identity_residual, estimate_theta, integrability_exponent,
    line_fit, linf_gradient_norm, lp_gradient_norm, max_principle, norm_report, one_sided_traces,
    taylor_fit, TraceReport,
};
use layerfem_core::fem::{
    solve_dirichlet, solve_interface_problem, RadialBump, Region, SolutionField, TestFunction,
    TubeBump,
};
use layerfem_core::fields::{meyers_density, CoefficientField, DensityField};
use layerfem_core::geometry::{CurveKind, Domain, InterfaceCurve};
use layerfem_core::mesh::{refine, triangulate, TriangleMesh};
use layerfem_core::potentials::meyers_u1;
use layerfem_core::Point;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{CoefficientConfig, ScenarioConfig, Tolerances, Verification};
use crate::error::Result;
use crate::formats;

/// Outcome of a run: the JSON report and the plot tables of the finest level.
#[derive(Debug)]
pub struct RunReport {
    pub json: Value,
    pub passed: bool,
    pub solution_csv: Option<String>,
    pub elements_csv: Option<String>,
    pub traces_csv: Option<String>,
    pub mesh_text: Option<String>,
}

/// SHA-256 of the canonical JSON form of the config.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&canonical);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Scenario<'c> {
    config: &'c ScenarioConfig,
    tol: &'c Tolerances,
    domain: Domain,
    curve: InterfaceCurve,
    a: CoefficientField,
    /// `None` when the density depends on the mesh.
    density: Option<DensityField>,
}

struct Level<'m> {
    u: SolutionField<'m>,
    q: DensityField,
}

impl Scenario<'_> {
    fn meyers_mu(&self) -> Option<f64> {
        match self.config.coefficient {
            CoefficientConfig::Meyers { mu } => Some(mu),
            _ => None,
        }
    }

    /// `Q = −(A∇u₂, x)` where `u₂` is `A`-harmonic outside `Γ`, zero on `Γ`
    /// and `−u₁` on `∂Ω`.
    fn meyers_density_on(&self, mesh: &TriangleMesh) -> Result<DensityField> {
        let mu = self.meyers_mu().expect("validated: meyers coefficient");
        let data = |p: Point| meyers_u1(mu, p).map(|(v, _)| -v).unwrap_or(0.0);
        let u2 = solve_dirichlet(mesh, &self.a, data, Region::Exterior)?;
        Ok(meyers_density(mu, &u2, &self.curve)?)
    }

    fn density_on(&self, mesh: &TriangleMesh) -> Result<DensityField> {
        match &self.density {
            Some(q) => Ok(q.clone()),
            None => self.meyers_density_on(mesh),
        }
    }

    fn solve<'m>(&self, mesh: &'m TriangleMesh) -> Result<Level<'m>> {
        let q = self.density_on(mesh)?;
        let u = solve_interface_problem(mesh, &self.curve, &self.a, &q)?;
        Ok(Level { u, q })
    }

    fn probe_points(&self) -> Vec<Point> {
        let n = self.tol.probe_points;
        let len = self.curve.perimeter();
        (0..n)
            .map(|k| self.curve.locate(len * (k as f64 + 0.3) / n as f64).point)
            .collect()
    }
}

fn pt(p: Point) -> Value {
    json!([p.x, p.y])
}

fn relative_differences(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[1].abs())
        .collect()
}

fn trace_summary(r: &TraceReport, h: f64) -> Value {
    json!({
        "h": h,
        "edges": r.records.len(),
        "mean_abs_error": r.mean_abs_error,
        "max_abs_error": r.max_abs_error,
        "mean_relative_error": r.mean_relative_error,
        "max_tangential_jump": r.max_tangential_jump,
    })
}

fn jump(s: &Scenario<'_>, levels: &[Level<'_>]) -> Result<Value> {
    let mut summaries = Vec::new();
    let mut errors = Vec::new();
    let mut rel = f64::NAN;
    for l in levels {
        let r = one_sided_traces(&l.u, &s.curve, &s.a, &l.q)?;
        summaries.push(trace_summary(&r, l.u.mesh.h));
        errors.push(r.mean_abs_error);
        rel = r.mean_relative_error;
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(json!({
        "passed": rel <= s.tol.jump_mean_relative && monotone,
        "rule": "finest mean relative jump error <= jump_mean_relative and mean error decreasing over levels",
        "monotone": monotone,
        "trace_report": summaries,
    }))
}

fn theta(s: &Scenario<'_>, l: &Level<'_>) -> Result<Value> {
    let traces = one_sided_traces(&l.u, &s.curve, &s.a, &l.q)?;
    let mut points = Vec::new();
    let mut worst: f64 = 0.0;
    for x0 in s.probe_points() {
        let ball = estimate_theta(&l.u, x0, &s.tol.theta_radii)?;
        let trace = traces.nearest(x0).theta;
        let rel = (ball.theta - trace).norm() / trace.norm();
        worst = worst.max(rel);
        points.push(json!({
            "point": pt(x0),
            "theta_ball": pt(ball.theta),
            "theta_trace": pt(trace),
            "relative_difference": rel,
        }));
    }
    Ok(json!({
        "passed": worst <= s.tol.theta_relative,
        "rule": "|theta_ball - theta_trace| <= theta_relative * |theta_trace| at every probe point",
        "max_relative_difference": worst,
        "points": points,
    }))
}

fn taylor(s: &Scenario<'_>, l: &Level<'_>) -> Result<Value> {
    let mut points = Vec::new();
    let mut worst: f64 = 0.0;
    for x0 in s.probe_points() {
        let fit = taylor_fit(&l.u, &s.curve, &s.a, &l.q, x0, s.tol.taylor_radius)?;
        let err = if fit.predicted_kink != 0.0 {
            (fit.kink_coeff - fit.predicted_kink).abs() / fit.predicted_kink.abs()
        } else {
            fit.kink_coeff.abs()
        };
        worst = worst.max(err);
        points.push(json!({
            "point": pt(x0),
            "kink_coeff": fit.kink_coeff,
            "predicted_kink": fit.predicted_kink,
            "theta_fit": pt(fit.theta_fit),
            "rms_residual": fit.rms_residual,
            "vertices_used": fit.vertices_used,
            "error": err,
        }));
    }
    Ok(json!({
        "passed": worst <= s.tol.taylor_relative,
        "rule": "|k - k_pred| <= taylor_relative * |k_pred| at every probe point",
        "max_error": worst,
        "points": points,
    }))
}

fn norms(s: &Scenario<'_>, levels: &[Level<'_>]) -> Result<Value> {
    let mut reports = Vec::new();
    let mut l2 = Vec::new();
    let mut linf = Vec::new();
    for l in levels {
        let r = norm_report(&l.u, &s.tol.norms_p_grid)?;
        l2.push(lp_gradient_norm(&l.u, 2.0)?);
        linf.push(r.linf_gradient);
        reports.push(json!({
            "h": r.h,
            "p_grid": r.p_grid,
            "lp_gradient_norms": r.lp_gradient_norms,
            "linf_gradient": r.linf_gradient,
        }));
    }
    let (dl2, dlinf) = (relative_differences(&l2), relative_differences(&linf));
    let ok =
        dl2.iter().all(|d| *d <= s.tol.l2_cauchy) && dlinf.iter().all(|d| *d <= s.tol.linf_cauchy);
    Ok(json!({
        "passed": ok,
        "rule": "relative differences of L2 and Linf gradient norms between levels <= l2_cauchy, linf_cauchy",
        "norm_report": reports,
        "l2_norms": l2,
        "l2_differences": dl2,
        "linf_differences": dlinf,
    }))
}

fn blowup(s: &Scenario<'_>, levels: &[Level<'_>]) -> Result<Value> {
    let corner = match s.config.corner {
        Some(c) => Point::new(c[0], c[1]),
        None => s.curve.corners()[0],
    };
    let linf: Vec<f64> = levels.iter().map(|l| linf_gradient_norm(&l.u)).collect();
    let increasing = linf.len() >= 2 && linf.windows(2).all(|w| w[1] > w[0]);
    let fit = blowup_log_fit(
        &levels.last().expect("at least one level").u,
        corner,
        &s.tol.blowup_radii,
    )?;
    Ok(json!({
        "passed": increasing && fit.slope > 0.0,
        "rule": "Linf gradient norm strictly increasing over levels and positive log-fit slope near the corner",
        "corner": pt(corner),
        "linf_per_level": linf,
        "linf_bounded": !increasing,
        "blowup_fit": {
            "radii": fit.radii,
            "max_values": fit.max_values,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "residual": fit.residual,
        },
    }))
}

fn meyers(
    s: &Scenario<'_>,
    meshes: &[TriangleMesh],
    solved: Option<&[Level<'_>]>,
) -> Result<Value> {
    let mu = s.meyers_mu().expect("validated: meyers coefficient");
    let own;
    let levels = match solved {
        Some(l) if s.density.is_none() => l,
        _ => {
            own = meshes
                .iter()
                .map(|m| {
                    let q = s.meyers_density_on(m)?;
                    let u = solve_interface_problem(m, &s.curve, &s.a, &q)?;
                    Ok(Level { u, q })
                })
                .collect::<Result<Vec<_>>>()?;
            &own[..]
        }
    };
    let sols: Vec<SolutionField<'_>> = levels.iter().map(|l| l.u.clone()).collect();
    let r = integrability_exponent(&sols, &s.tol.meyers_p_grid)?;
    let l2: Vec<f64> = sols
        .iter()
        .map(|u| lp_gradient_norm(u, 2.0))
        .collect::<layerfem_core::Result<_>>()?;
    let dl2 = relative_differences(&l2);
    let predicted = 2.0 / (1.0 - mu);
    let in_window = r
        .p_crit
        .is_some_and(|p| (p - predicted).abs() <= s.tol.meyers_window);
    let density_max: Vec<f64> = levels.iter().map(|l| l.q.max_abs()).collect();
    Ok(json!({
        "passed": in_window && dl2.iter().all(|d| *d <= s.tol.l2_cauchy),
        "rule": "|p_crit - 2/(1-mu)| <= meyers_window and L2 gradient norms Cauchy within l2_cauchy",
        "mu": mu,
        "predicted_threshold": predicted,
        "p_crit": r.p_crit,
        "inconclusive": r.inconclusive,
        "p_grid": r.p_grid,
        "h": r.h,
        "exponents": r.exponents,
        "l2_norms": l2,
        "l2_differences": dl2,
        "density_max_abs": density_max,
    }))
}

/// The identity is a statement about `d_Γ`; it is checked with the smooth
/// weight `Q₀ = 1 + 0.3x₁`, since the Hessian of `½Q₀d_Γ` is taken by
/// differences and a merely Hölder density would swamp it.
fn identity(s: &Scenario<'_>) -> Result<Value> {
    let q0 = |p: Point| 1.0 + 0.3 * p.x;
    let width = s.tol.identity_support;
    let phi: Box<dyn TestFunction> = match s.curve.kind() {
        CurveKind::Circle { center, radius } => Box::new(TubeBump {
            center: *center,
            radius: *radius,
            width,
        }),
        _ => Box::new(RadialBump {
            center: s.curve.locate(0.0).point,
            radius: width,
        }),
    };
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    for &n in &s.tol.identity_grids {
        let r = distributional_identity_residual(
            &s.curve,
            &q0,
            phi.as_ref(),
            (0, 0),
            s.tol.identity_tube,
            n,
        )?;
        residuals.push(r.residual);
        rows.push(json!({"grid": n, "lhs": r.lhs, "surface": r.surface, "volume": r.volume, "residual": r.residual}));
    }
    let grids = &s.tol.identity_grids;
    let orders: Vec<f64> = (1..grids.len())
        .map(|k| {
            (residuals[k - 1] / residuals[k]).ln() / (grids[k] as f64 / grids[k - 1] as f64).ln()
        })
        .collect();
    // Cut-cell quadrature makes single steps noisy, so the order is fitted
    // over the whole sweep.
    let log_h: Vec<f64> = grids.iter().map(|n| -(*n as f64).ln()).collect();
    let log_r: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let (order, _) = line_fit(&log_h, &log_r)?;
    let last = *residuals.last().expect("validated: grids nonempty");
    let ok = last <= s.tol.identity_residual && order >= s.tol.identity_order;
    Ok(json!({
        "passed": ok,
        "rule": "finest residual <= identity_residual and fitted order in the grid spacing >= identity_order",
        "q0": "1 + 0.3 x1",
        "grids": rows,
        "fitted_order": order,
        "step_orders": orders,
    }))
}

fn max_principle_block(s: &Scenario<'_>, mesh: &TriangleMesh) -> Result<Value> {
    let g = |p: Point| p.x - 0.5 * p.y * p.y + 0.3 * p.x * p.y;
    let mut blocks = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, region) in [("whole", Region::Whole), ("exterior", Region::Exterior)] {
        let u = solve_dirichlet(mesh, &s.a, g, region)?;
        let r = max_principle(&u, region);
        worst = worst.max(r.violation);
        blocks.push(json!({
            "region": name,
            "boundary_min": r.boundary_min,
            "boundary_max": r.boundary_max,
            "interior_min": r.interior_min,
            "interior_max": r.interior_max,
            "violation": r.violation,
        }));
    }
    Ok(json!({
        "passed": worst <= s.tol.max_principle,
        "rule": "interior extrema of A-harmonic solves exceed boundary extrema by at most max_principle",
        "h": mesh.h,
        "solves": blocks,
    }))
}

fn growth(s: &Scenario<'_>) -> Result<Value> {
    let samples = s.curve.sample_points(s.config.mesh_size)?;
    let centers: Vec<Point> = samples.iter().map(|c| c.point).collect();
    let mut diameter: f64 = 0.0;
    for a in &centers {
        for b in &centers {
            diameter = diameter.max(a.distance(*b));
        }
    }
    let radii: Vec<f64> = (0..16)
        .map(|k| diameter * 0.5f64.powf(0.5 * k as f64))
        .filter(|r| *r >= 0.5 * s.config.mesh_size)
        .collect();
    let coarse = s.curve.measure_growth_constant_with(&centers, &radii, 32)?;
    let fine = s
        .curve
        .measure_growth_constant_with(&centers, &radii, 128)?;
    let change = (fine.constant - coarse.constant).abs() / fine.constant;
    Ok(json!({
        "passed": fine.constant.is_finite() && change <= s.tol.growth_stability,
        "rule": "growth constant finite and stable within growth_stability from 32 to 128 panels",
        "constant": fine.constant,
        "center": pt(fine.center),
        "radius": fine.radius,
        "constant_coarse": coarse.constant,
        "relative_change": change,
        "centers": centers.len(),
        "radii": radii,
    }))
}

fn curve_moment(curve: &InterfaceCurve) -> Result<f64> {
    let n = if curve.has_corners() { 64 } else { 8192 };
    Ok(curve.quadrature(n)?.integrate(|node| node.point.x))
}

fn approximation(s: &Scenario<'_>) -> Result<Value> {
    let base_perimeter = s.curve.perimeter();
    let base_moment = curve_moment(&s.curve)?;
    let mut rows = Vec::new();
    let mut rel = f64::NAN;
    let mut diffs = Vec::new();
    for &j in &s.tol.approximation_levels {
        let g = s.curve.smooth_approximation(j, &s.domain)?;
        let p = g.perimeter();
        let m = curve_moment(&g)?;
        rel = (p - base_perimeter).abs() / base_perimeter;
        diffs.push((m - base_moment).abs());
        rows.push(json!({
            "j": j,
            "perimeter": p,
            "perimeter_relative_error": rel,
            "moment_x1": m,
            "moment_difference": (m - base_moment).abs(),
        }));
    }
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    Ok(json!({
        "passed": rel <= s.tol.approximation_perimeter && decreasing,
        "rule": "perimeter within approximation_perimeter at the largest j and first-moment difference decreasing in j",
        "perimeter": base_perimeter,
        "moment_x1": base_moment,
        "levels": rows,
        "moment_decreasing": decreasing,
    }))
}

fn error_block(e: &crate::error::CliError) -> Value {
    json!({"passed": false, "error": e.to_string()})
}

/// Runs a validated scenario. Module errors are recorded in the report and
/// mark the affected verifications as failed.
pub fn run(config: &ScenarioConfig) -> RunReport {
    let mut out = RunReport {
        json: Value::Null,
        passed: false,
        solution_csv: None,
        elements_csv: None,
        traces_csv: None,
        mesh_text: None,
    };
    let mut blocks: BTreeMap<&'static str, Value> = BTreeMap::new();
    let mut meshes_json = Vec::new();
    let mut setup_error = None;
    if let Err(e) = run_inner(config, &mut blocks, &mut meshes_json, &mut out) {
        setup_error = Some(e.to_string());
        for v in &config.verifications {
            blocks.entry(v.name()).or_insert_with(|| error_block(&e));
        }
    }
    let passed = config
        .verifications
        .iter()
        .all(|v| blocks.get(v.name()).and_then(|b| b["passed"].as_bool()) == Some(true));
    out.passed = passed;
    out.json = json!({
        "passed": passed,
        "verifications": blocks,
        "provenance": {
            "config_hash": config_hash(config),
            "config": config,
            "meshes": meshes_json,
            "error": setup_error,
        },
    });
    out
}

fn run_inner(
    config: &ScenarioConfig,
    blocks: &mut BTreeMap<&'static str, Value>,
    meshes_json: &mut Vec<Value>,
    out: &mut RunReport,
) -> Result<()> {
    let curve = config.build_curve()?;
    let s = Scenario {
        config,
        tol: &config.tolerances,
        domain: config.build_domain()?,
        density: config.build_density(&curve)?,
        a: config.build_coefficient()?,
        curve,
    };
    let needs_meshes = config.verifications.iter().any(|v| {
        v.needs_solutions() || matches!(v, Verification::Meyers | Verification::MaxPrinciple)
    });
    let needs_solutions = config.verifications.iter().any(|v| v.needs_solutions());

    let mut meshes = Vec::new();
    if needs_meshes {
        meshes.push(triangulate(&s.domain, &s.curve, config.mesh_size)?);
        while meshes.len() < config.refinement_levels {
            let next = refine(meshes.last().unwrap(), &s.curve)?;
            meshes.push(next);
        }
    }
    let levels: Vec<Level<'_>> = if needs_solutions {
        meshes.iter().map(|m| s.solve(m)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    for (k, m) in meshes.iter().enumerate() {
        let q = m.quality(&s.curve);
        let mut entry = json!({
            "level": k,
            "h": m.h,
            "vertices": q.vertices,
            "triangles": q.triangles,
            "interface_edges": q.interface_edges,
            "min_angle_degrees": q.min_angle_degrees,
            "interface_deviation": q.interface_deviation,
        });
        if let Some(l) = levels.get(k) {
            entry["solver_iterations"] = json!(l.u.iterations);
            entry["relative_residual"] = json!(l.u.relative_residual);
        }
        meshes_json.push(entry);
    }

    if let Some(m) = meshes.last() {
        let mut text = Vec::new();
        formats::write_mesh_text(&mut text, m).expect("write to memory");
        out.mesh_text = Some(String::from_utf8(text).expect("ascii"));
    }
    if let Some(l) = levels.last() {
        let mut sol = Vec::new();
        let mut el = Vec::new();
        formats::write_solution_csv(&mut sol, &l.u).expect("write to memory");
        formats::write_elements_csv(&mut el, &l.u).expect("write to memory");
        out.solution_csv = Some(String::from_utf8(sol).expect("ascii"));
        out.elements_csv = Some(String::from_utf8(el).expect("ascii"));
        if let Ok(r) = one_sided_traces(&l.u, &s.curve, &s.a, &l.q) {
            let mut tr = Vec::new();
            formats::write_traces_csv(&mut tr, &r).expect("write to memory");
            out.traces_csv = Some(String::from_utf8(tr).expect("ascii"));
        }
    }

    for &v in &config.verifications {
        let block = match v {
            Verification::Jump => jump(&s, &levels),
            Verification::Theta => theta(&s, levels.last().unwrap()),
            Verification::Taylor => taylor(&s, levels.last().unwrap()),
            Verification::Norms => norms(&s, &levels),
            Verification::Blowup => blowup(&s, &levels),
            Verification::Meyers => meyers(&s, &meshes, needs_solutions.then_some(&levels[..])),
            Verification::Identity => identity(&s),
            Verification::MaxPrinciple => max_principle_block(&s, meshes.last().unwrap()),
            Verification::Growth => growth(&s),
            Verification::Approximation => approximation(&s),
        };
        blocks.insert(v.name(), block.unwrap_or_else(|e| error_block(&e)));
    }
    Ok(())
}
