//! Post-processing of discrete solutions: gradient traces and jumps on `Γ`,
//! `θ` by ball averages, Taylor fits with a kink term, gradient norms,
//! blow-up and integrability studies, and the distributional identity for
//! `½ Q₀ |d_Γ|`.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fem::{Region, SolutionField, TestFunction};
use crate::fields::{CoefficientField, DensityField};
use crate::geometry::InterfaceCurve;
use crate::math::{log, pow, sqrt};
use crate::mesh::Side;
use crate::quadrature::{GaussLegendre, TRIANGLE_DEGREE5};
use crate::vec2::{Point, Vec2};

/// One-sided gradients at one interface edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    /// Projection of the edge midpoint onto `Γ`.
    pub point: Point,
    pub normal: Vec2,
    pub grad_inside: Vec2,
    pub grad_outside: Vec2,
    /// `½ (grad_inside + grad_outside)`.
    pub theta: Vec2,
    /// `(grad_inside − grad_outside, ν)`.
    pub normal_jump: f64,
    /// `Q / (Aν, ν)`.
    pub predicted_jump: f64,
    /// `(grad_inside − grad_outside, τ)`.
    pub tangential_jump: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceReport {
    pub records: Vec<TraceRecord>,
    /// `max |normal_jump − predicted_jump|`.
    pub max_abs_error: f64,
    /// Mean of `|normal_jump − predicted_jump|`.
    pub mean_abs_error: f64,
    /// Mean absolute error divided by the mean `|predicted_jump|` (the
    /// absolute mean when the prediction vanishes).
    pub mean_relative_error: f64,
    pub max_tangential_jump: f64,
}

impl TraceReport {
    /// Record whose point is nearest to `x`.
    pub fn nearest(&self, x: Point) -> &TraceRecord {
        self.records
            .iter()
            .min_by(|a, b| a.point.distance(x).total_cmp(&b.point.distance(x)))
            .expect("trace reports are never empty")
    }
}

/// Gradients of the elements adjacent to each interface edge.
pub fn one_sided_traces(
    u: &SolutionField<'_>,
    curve: &InterfaceCurve,
    a: &CoefficientField,
    q: &DensityField,
) -> Result<TraceReport> {
    let mesh = u.mesh;
    if mesh.interface_edges.is_empty() {
        return Err(Error::Meshing("mesh has no interface edges".to_string()));
    }
    let mut records = Vec::with_capacity(mesh.interface_edges.len());
    for e in &mesh.interface_edges {
        if e.inside >= mesh.triangles.len() || e.outside >= mesh.triangles.len() {
            return Err(Error::Meshing(
                "interface edge without adjacent elements".to_string(),
            ));
        }
        let mid = (mesh.vertices[e.vertices[0]] + mesh.vertices[e.vertices[1]]) * 0.5;
        let c = curve.closest(mid);
        let nu = if curve.has_corners() {
            e.normal
        } else {
            c.normal
        };
        let gi = u.gradients[e.inside];
        let go = u.gradients[e.outside];
        let jump = gi - go;
        let qv = q.at_arclength(c.arclength);
        records.push(TraceRecord {
            point: c.point,
            normal: nu,
            grad_inside: gi,
            grad_outside: go,
            theta: (gi + go) * 0.5,
            normal_jump: jump.dot(nu),
            predicted_jump: qv / a.eval(c.point).bilinear(nu, nu),
            tangential_jump: jump.dot(nu.perp()),
        });
    }
    let n = records.len() as f64;
    let errs = records
        .iter()
        .map(|r| (r.normal_jump - r.predicted_jump).abs());
    let max_abs_error = errs.clone().fold(0.0, f64::max);
    let mean_abs_error = errs.sum::<f64>() / n;
    let mean_pred = records.iter().map(|r| r.predicted_jump.abs()).sum::<f64>() / n;
    let mean_relative_error = if mean_pred > 0.0 {
        mean_abs_error / mean_pred
    } else {
        mean_abs_error
    };
    let max_tangential_jump = records
        .iter()
        .map(|r| r.tangential_jump.abs())
        .fold(0.0, f64::max);
    Ok(TraceReport {
        records,
        max_abs_error,
        mean_abs_error,
        mean_relative_error,
        max_tangential_jump,
    })
}

/// Area average of the element gradients over elements with centroid in
/// `B_r(x₀)`, with the element count.
pub fn ball_average(u: &SolutionField<'_>, x0: Point, r: f64) -> (Vec2, usize) {
    let mesh = u.mesh;
    let mut sum = Vec2::ZERO;
    let mut area = 0.0;
    let mut count = 0;
    for t in 0..mesh.triangles.len() {
        if mesh.centroid(t).distance(x0) < r {
            let a = mesh.area(t);
            sum += u.gradients[t] * a;
            area += a;
            count += 1;
        }
    }
    if count == 0 {
        (Vec2::ZERO, 0)
    } else {
        (sum / area, count)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaEstimate {
    /// Extrapolation of the ball averages to `r = 0`.
    pub theta: Vec2,
    /// `(r, average, element count)` per radius.
    pub averages: Vec<(f64, Vec2, usize)>,
}

/// `θ(x₀) = lim_{r→0} ⨍_{B_r(x₀)} ∇u`, from ball averages extrapolated by a
/// least-squares line in `r`.
pub fn estimate_theta(u: &SolutionField<'_>, x0: Point, radii: &[f64]) -> Result<ThetaEstimate> {
    if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid!(
            "theta estimation needs at least two positive radii"
        ));
    }
    let averages: Vec<(f64, Vec2, usize)> = radii
        .iter()
        .map(|&r| {
            let (g, n) = ball_average(u, x0, r);
            (r, g, n)
        })
        .collect();
    let smallest = averages.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    if smallest.2 < 10 {
        return Err(Error::Resolution(alloc::format!(
            "only {} elements in the ball of radius {}",
            smallest.2,
            smallest.0
        )));
    }
    let xs: Vec<f64> = averages.iter().map(|a| a.0).collect();
    let (_, cx) = line_fit(&xs, &averages.iter().map(|a| a.1.x).collect::<Vec<_>>())?;
    let (_, cy) = line_fit(&xs, &averages.iter().map(|a| a.1.y).collect::<Vec<_>>())?;
    Ok(ThetaEstimate {
        theta: Vec2::new(cx, cy),
        averages,
    })
}

/// Least-squares `y ≈ s x + c`; returns `(s, c)`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(invalid!("line fit needs at least two points"));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Resolution("line fit abscissae coincide".to_string()));
    }
    let s = sxy / sxx;
    Ok((s, my - s * mx))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorFit {
    pub x0: Point,
    pub normal: Vec2,
    pub value: f64,
    pub theta_fit: Vec2,
    /// Coefficient `k` of `|(x − x₀, ν)|`.
    pub kink_coeff: f64,
    /// `−½ Q(x₀) / (A(x₀)ν, ν)`.
    pub predicted_kink: f64,
    pub rms_residual: f64,
    pub vertices_used: usize,
}

/// Fits `u_h(x) ≈ c₀ + (c, x − x₀) + k |(x − x₀, ν)|` to the nodal values in
/// `B_r(x₀)`, where `x₀` is the projection of `x` onto `Γ`.
pub fn taylor_fit(
    u: &SolutionField<'_>,
    curve: &InterfaceCurve,
    a: &CoefficientField,
    q: &DensityField,
    x: Point,
    radius: f64,
) -> Result<TaylorFit> {
    if !(radius > 0.0) {
        return Err(invalid!("fit radius must be positive"));
    }
    let c = curve.closest(x);
    let (x0, nu) = (c.point, c.normal);
    let mesh = u.mesh;
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    let mut rows = Vec::new();
    for (v, p) in mesh.vertices.iter().enumerate() {
        let d = *p - x0;
        if d.norm() >= radius {
            continue;
        }
        let row = [1.0, d.x / radius, d.y / radius, d.dot(nu).abs() / radius];
        for i in 0..4 {
            for j in 0..4 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * u.values[v];
        }
        rows.push((row, u.values[v]));
    }
    if rows.len() < 8 {
        return Err(Error::Resolution(alloc::format!(
            "only {} vertices within the fit radius",
            rows.len()
        )));
    }
    let sol = solve_dense(ata, atb)
        .ok_or_else(|| Error::Resolution("Taylor fit is rank deficient".to_string()))?;
    let rss: f64 = rows
        .iter()
        .map(|(row, val)| {
            let m: f64 = (0..4).map(|i| row[i] * sol[i]).sum();
            (m - val) * (m - val)
        })
        .sum();
    Ok(TaylorFit {
        x0,
        normal: nu,
        value: sol[0],
        theta_fit: Vec2::new(sol[1], sol[2]) / radius,
        kink_coeff: sol[3] / radius,
        predicted_kink: -0.5 * q.at_arclength(c.arclength) / a.eval(x0).bilinear(nu, nu),
        rms_residual: sqrt(rss / rows.len() as f64),
        vertices_used: rows.len(),
    })
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense<const N: usize>(mut m: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if !(m[piv][col].abs() > 1e-12 * scale) {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            for k in col..N {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

/// `(Σ_T |T| |∇u_h|_T|^p)^{1/p}`.
pub fn lp_gradient_norm(u: &SolutionField<'_>, p: f64) -> Result<f64> {
    lp_gradient_norm_where(u, p, |_| true)
}

/// As [`lp_gradient_norm`], restricted to the elements selected by `keep`.
pub fn lp_gradient_norm_where(
    u: &SolutionField<'_>,
    p: f64,
    keep: impl Fn(usize) -> bool,
) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid!("p must lie in [1, ∞), got {p}"));
    }
    let mesh = u.mesh;
    let s: f64 = (0..mesh.triangles.len())
        .filter(|&t| keep(t))
        .map(|t| mesh.area(t) * pow(u.gradients[t].norm(), p))
        .sum();
    Ok(pow(s, 1.0 / p))
}

/// `max_T |∇u_h|_T|`.
pub fn linf_gradient_norm(u: &SolutionField<'_>) -> f64 {
    u.gradients.iter().map(|g| g.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub p_grid: Vec<f64>,
    pub lp_gradient_norms: Vec<f64>,
    pub linf_gradient: f64,
    pub h: f64,
}

pub fn norm_report(u: &SolutionField<'_>, p_grid: &[f64]) -> Result<NormReport> {
    let lp = p_grid
        .iter()
        .map(|&p| lp_gradient_norm(u, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormReport {
        p_grid: p_grid.to_vec(),
        lp_gradient_norms: lp,
        linf_gradient: linf_gradient_norm(u),
        h: u.mesh.h,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupFit {
    /// Outer shell radii, strictly decreasing.
    pub radii: Vec<f64>,
    /// `max |∂₁u_h|` over elements with centroid in `r/2 ≤ |x − corner| < r`.
    pub max_values: Vec<f64>,
    /// `s` in `max ≈ s log(1/r) + c`.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation from the fitted line.
    pub residual: f64,
}

/// Logarithmic growth rate of `|∂₁u_h|` toward `corner`.
///
/// Maxima are taken over dyadic shells rather than balls: every ball about
/// the corner contains the element at the corner, whose gradient is the
/// largest at a fixed mesh size, so ball maxima do not depend on `r`.
pub fn blowup_log_fit(u: &SolutionField<'_>, corner: Point, radii: &[f64]) -> Result<BlowupFit> {
    if radii.len() < 4 {
        return Err(invalid!("blow-up fit needs at least 4 radii"));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid!(
            "blow-up radii must be positive and strictly decreasing"
        ));
    }
    let mesh = u.mesh;
    let mut max_values = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut m: Option<f64> = None;
        for t in 0..mesh.triangles.len() {
            let d = mesh.centroid(t).distance(corner);
            if d >= 0.5 * r && d < r {
                let g = u.gradients[t].x.abs();
                m = Some(m.map_or(g, |v: f64| v.max(g)));
            }
        }
        match m {
            Some(v) => max_values.push(v),
            None => {
                return Err(Error::Resolution(alloc::format!(
                    "no element centroid in the shell at radius {r}"
                )))
            }
        }
    }
    let xs: Vec<f64> = radii.iter().map(|r| log(1.0 / r)).collect();
    let (slope, intercept) = line_fit(&xs, &max_values)?;
    let residual = sqrt(
        xs.iter()
            .zip(&max_values)
            .map(|(x, y)| (slope * x + intercept - y) * (slope * x + intercept - y))
            .sum::<f64>()
            / xs.len() as f64,
    );
    Ok(BlowupFit {
        radii: radii.to_vec(),
        max_values,
        slope,
        intercept,
        residual,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrabilityReport {
    pub p_grid: Vec<f64>,
    pub h: Vec<f64>,
    /// `norms[k][i]`: `‖∇u_h‖_{L^{p_i}}` on level `k`.
    pub norms: Vec<Vec<f64>>,
    /// Observed convergence exponent of the increments of `∫|∇u_h|^p` per
    /// `p`; negative when the integrals grow faster under refinement.
    pub exponents: Vec<f64>,
    /// Zero crossing of the exponent, interpolated linearly in `p`.
    pub p_crit: Option<f64>,
    /// Set when increments change sign, so no exponent can be read off.
    pub inconclusive: bool,
}

/// Locates the integrability threshold of `∇u` from a refinement sequence.
///
/// For each `p` the last three levels give increments `D₁ = I₁ − I₀` and
/// `D₂ = I₂ − I₁` of `I = ∫|∇u_h|^p`, and the exponent
/// `log(D₁/D₂) / log(h₀/h₁)`. A gradient singularity `|∇u| ~ r^{−β}` makes
/// `I` behave like `I* ± c h^{2−βp}`, so the exponent is `2 − βp`: positive
/// while `|∇u|^p` is integrable, zero at the threshold where `I` grows like
/// `log(1/h)`, and negative beyond it. The norms themselves would flatten
/// the logarithm through the `1/p` power and bias the crossing upward.
pub fn integrability_exponent(
    levels: &[SolutionField<'_>],
    p_grid: &[f64],
) -> Result<IntegrabilityReport> {
    if levels.len() < 3 {
        return Err(invalid!(
            "integrability study needs at least 3 refinement levels"
        ));
    }
    if p_grid.is_empty() || p_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid!("p grid must be nonempty and increasing"));
    }
    let h: Vec<f64> = levels.iter().map(|u| u.mesh.h).collect();
    if h.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid!("levels must be ordered from coarse to fine"));
    }
    let norms = levels
        .iter()
        .map(|u| {
            p_grid
                .iter()
                .map(|&p| lp_gradient_norm(u, p))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let k = levels.len() - 1;
    let ratio = log(h[k - 1] / h[k]);
    let mut inconclusive = false;
    let exponents: Vec<f64> = (0..p_grid.len())
        .map(|i| {
            let p = p_grid[i];
            let d1 = pow(norms[k - 1][i], p) - pow(norms[k - 2][i], p);
            let d2 = pow(norms[k][i], p) - pow(norms[k - 1][i], p);
            if d1 == 0.0 || d2 == 0.0 || (d1 > 0.0) != (d2 > 0.0) {
                inconclusive = true;
                return f64::NAN;
            }
            log(d1.abs() / d2.abs()) / ratio
        })
        .collect();
    let mut p_crit = None;
    for i in 1..p_grid.len() {
        let (e0, e1) = (exponents[i - 1], exponents[i]);
        if e0 > 0.0 && e1 <= 0.0 {
            p_crit = Some(p_grid[i - 1] + (p_grid[i] - p_grid[i - 1]) * e0 / (e0 - e1));
            break;
        }
    }
    if p_crit.is_none() && exponents.first().is_some_and(|e| *e <= 0.0) {
        p_crit = Some(p_grid[0]);
    }
    Ok(IntegrabilityReport {
        p_grid: p_grid.to_vec(),
        h,
        norms,
        exponents,
        p_crit,
        inconclusive,
    })
}

/// Largest normal gradient jump of `w_h = u_h + I_h(½ Q̃ |d_Γ|)` across the
/// interface edges, where `Q̃ = Q/(Aν, ν)` is taken constant along normals.
/// Every vertex of an element touching `Γ` must lie within `tube` of `Γ`.
pub fn prototype_residual(
    u: &SolutionField<'_>,
    curve: &InterfaceCurve,
    a: &CoefficientField,
    q: &DensityField,
    tube: f64,
) -> Result<f64> {
    let mesh = u.mesh;
    let n = mesh.vertices.len();
    let mut corr = alloc::vec![f64::NAN; n];
    let mut fill = |v: usize| -> Result<()> {
        if corr[v].is_nan() {
            let c = curve.closest(mesh.vertices[v]);
            if c.distance > tube {
                return Err(Error::Resolution(alloc::format!(
                    "vertex {v} at distance {} exceeds the tube width {tube}",
                    c.distance
                )));
            }
            let qt = q.at_arclength(c.arclength) / a.eval(c.point).bilinear(c.normal, c.normal);
            corr[v] = 0.5 * qt * c.distance;
        }
        Ok(())
    };
    for e in &mesh.interface_edges {
        for t in [e.inside, e.outside] {
            for &v in &mesh.triangles[t] {
                fill(v)?;
            }
        }
    }
    let grad = |t: usize| {
        let g = mesh.basis_gradients(t);
        let tri = mesh.triangles[t];
        u.gradients[t] + g[0] * corr[tri[0]] + g[1] * corr[tri[1]] + g[2] * corr[tri[2]]
    };
    let worst = mesh
        .interface_edges
        .iter()
        .map(|e| (grad(e.inside) - grad(e.outside)).dot(e.normal).abs())
        .fold(0.0, f64::max);
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResidual {
    /// `∫ ½Q₀|d| ∂²ᵢⱼφ dx`.
    pub lhs: f64,
    /// `∫_Γ Q₀ νᵢνⱼ φ dH¹`.
    pub surface: f64,
    /// `∫ ∂²ᵢⱼ(½Q₀ d)(χ_out − χ_in) φ dx`.
    pub volume: f64,
    pub residual: f64,
}

/// Both sides of
/// `∫ ½Q₀|d_Γ| ∂²ᵢⱼφ = ∫_Γ Q₀νᵢνⱼφ dH¹ + ∫ ∂²ᵢⱼ(½Q₀ d_Γ)(χ_out − χ_in)φ`
/// on an `n × n` grid over the `tube`-neighbourhood of `Γ`. Component
/// indices are 0 for `x` and 1 for `y`.
///
/// Cells away from `Γ` use a 3×3 Gauss rule. Cells that `Γ` crosses are
/// split into two triangles, each clipped along the zero line of the
/// linear interpolant of `d_Γ`, and each piece uses the integrand of its
/// side; the thin region between that line and `Γ` is accounted for by
/// `∫_line (f_out − f_in) d_Γ ds`. Second derivatives of `½Q₀ d_Γ` are
/// central differences with step `10⁻⁵`.
pub fn distributional_identity_residual(
    curve: &InterfaceCurve,
    q0: &dyn Fn(Point) -> f64,
    phi: &dyn TestFunction,
    (i, j): (usize, usize),
    tube: f64,
    n: usize,
) -> Result<IdentityResidual> {
    if i > 1 || j > 1 {
        return Err(invalid!("component indices must be 0 or 1"));
    }
    if n < 4 {
        return Err(invalid!("grid needs at least 4 cells per side"));
    }
    if !(tube > 0.0) {
        return Err(invalid!("tube width must be positive"));
    }
    let (lo, hi) = curve.bounding_box();
    let lo = lo - Vec2::new(tube, tube);
    let hi = hi + Vec2::new(tube, tube);
    let hx = (hi.x - lo.x) / n as f64;
    let hy = (hi.y - lo.y) / n as f64;

    // φ must vanish outside the tube.
    let mut node_d = alloc::vec![0.0; (n + 1) * (n + 1)];
    for a in 0..=n {
        for b in 0..=n {
            let p = Point::new(lo.x + a as f64 * hx, lo.y + b as f64 * hy);
            let d = curve.signed_distance(p);
            node_d[b * (n + 1) + a] = d;
            if d.abs() >= tube && phi.value(p).abs() > 1e-12 {
                return Err(invalid!(
                    "test function does not vanish outside the tube at ({}, {})",
                    p.x,
                    p.y
                ));
            }
        }
    }

    let step = 1e-5;
    let half_q_d = |p: Point| 0.5 * q0(p) * curve.signed_distance(p);
    let hess = |p: Point| -> f64 {
        let e = |k: usize| {
            if k == 0 {
                Vec2::new(step, 0.0)
            } else {
                Vec2::new(0.0, step)
            }
        };
        if i == j {
            let v = e(i);
            (half_q_d(p + v) - 2.0 * half_q_d(p) + half_q_d(p - v)) / (step * step)
        } else {
            let (u, v) = (e(i), e(j));
            (half_q_d(p + u + v) - half_q_d(p + u - v) - half_q_d(p - u + v) + half_q_d(p - u - v))
                / (4.0 * step * step)
        }
    };
    let phi_ij = |p: Point| {
        let m = phi.hessian(p);
        match (i, j) {
            (0, 0) => m.a11,
            (1, 1) => m.a22,
            (0, 1) => m.a12,
            _ => m.a21,
        }
    };
    // Smooth extensions from side s = ±1 (outside = +1).
    let lhs_f = |p: Point, s: f64| 0.5 * q0(p) * s * curve.signed_distance(p) * phi_ij(p);
    let vol_f = |p: Point, s: f64| hess(p) * s * phi.value(p);

    let g3 = GaussLegendre::new(3);
    let gl: Vec<(f64, f64)> = g3.mapped(0.0, 1.0).collect();
    let half_diag = 0.5 * sqrt(hx * hx + hy * hy);
    let mut lhs = 0.0;
    let mut volume = 0.0;
    for b in 0..n {
        for a in 0..n {
            let x0 = Point::new(lo.x + a as f64 * hx, lo.y + b as f64 * hy);
            let center = x0 + Vec2::new(0.5 * hx, 0.5 * hy);
            let dc = curve.signed_distance(center);
            if dc.abs() - half_diag >= tube {
                continue;
            }
            if dc.abs() > half_diag {
                let s = if dc > 0.0 { 1.0 } else { -1.0 };
                for &(u, wu) in &gl {
                    for &(v, wv) in &gl {
                        let p = x0 + Vec2::new(u * hx, v * hy);
                        let w = wu * wv * hx * hy;
                        lhs += w * lhs_f(p, s);
                        volume += w * vol_f(p, s);
                    }
                }
                continue;
            }
            let corners = [
                (x0, node_d[b * (n + 1) + a]),
                (x0 + Vec2::new(hx, 0.0), node_d[b * (n + 1) + a + 1]),
                (x0 + Vec2::new(hx, hy), node_d[(b + 1) * (n + 1) + a + 1]),
                (x0 + Vec2::new(0.0, hy), node_d[(b + 1) * (n + 1) + a]),
            ];
            for tri in [
                [corners[0], corners[1], corners[2]],
                [corners[0], corners[2], corners[3]],
            ] {
                let cut = clip_triangle(tri);
                for (poly, s) in [(&cut.inside, -1.0), (&cut.outside, 1.0)] {
                    for k in 1..poly.len().saturating_sub(1) {
                        let (p0, p1, p2) = (poly[0], poly[k], poly[k + 1]);
                        lhs += TRIANGLE_DEGREE5.integrate(p0, p1, p2, |p| lhs_f(p, s));
                        volume += TRIANGLE_DEGREE5.integrate(p0, p1, p2, |p| vol_f(p, s));
                    }
                }
                if let Some((c0, c1)) = cut.chord {
                    let len = c0.distance(c1);
                    for &(t, w) in &gl {
                        let p = c0.lerp(c1, t);
                        let d = curve.signed_distance(p);
                        lhs += w * len * d * (lhs_f(p, 1.0) - lhs_f(p, -1.0));
                        volume += w * len * d * (vol_f(p, 1.0) - vol_f(p, -1.0));
                    }
                }
            }
        }
    }
    let nodes = if curve.has_corners() { 64 } else { 8192 };
    let rule = curve.quadrature(nodes)?;
    let surface = rule.integrate(|node| {
        let nu = [node.normal.x, node.normal.y];
        q0(node.point) * nu[i] * nu[j] * phi.value(node.point)
    });
    Ok(IdentityResidual {
        lhs,
        surface,
        volume,
        residual: (lhs - surface - volume).abs(),
    })
}

struct Clipped {
    inside: Vec<Point>,
    outside: Vec<Point>,
    chord: Option<(Point, Point)>,
}

/// Splits a triangle along the zero line of the linear interpolant of the
/// vertex values.
fn clip_triangle(tri: [(Point, f64); 3]) -> Clipped {
    let mut inside = Vec::with_capacity(4);
    let mut outside = Vec::with_capacity(4);
    let mut crossings = Vec::with_capacity(2);
    for k in 0..3 {
        let (p, dp) = tri[k];
        let (q, dq) = tri[(k + 1) % 3];
        if dp < 0.0 {
            inside.push(p);
        } else {
            outside.push(p);
        }
        if (dp < 0.0) != (dq < 0.0) {
            let t = dp / (dp - dq);
            let x = p.lerp(q, t);
            inside.push(x);
            outside.push(x);
            crossings.push(x);
        }
    }
    let chord = if crossings.len() == 2 {
        Some((crossings[0], crossings[1]))
    } else {
        None
    };
    Clipped {
        inside,
        outside,
        chord,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxPrincipleReport {
    pub boundary_min: f64,
    pub boundary_max: f64,
    pub interior_min: f64,
    pub interior_max: f64,
    /// How far interior values leave `[boundary_min, boundary_max]`.
    pub violation: f64,
}

/// Compares interior and boundary extrema of an `A`-harmonic solve. For the
/// exterior region, `Γ` counts as boundary and vertices inside are ignored.
pub fn max_principle(u: &SolutionField<'_>, region: Region) -> MaxPrincipleReport {
    let mesh = u.mesh;
    let n = mesh.vertices.len();
    let mut active = alloc::vec![region == Region::Whole; n];
    if region == Region::Exterior {
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if mesh.labels[t] == Side::Outside {
                for &v in tri {
                    active[v] = true;
                }
            }
        }
    }
    let mut r = MaxPrincipleReport {
        boundary_min: f64::INFINITY,
        boundary_max: f64::NEG_INFINITY,
        interior_min: f64::INFINITY,
        interior_max: f64::NEG_INFINITY,
        violation: 0.0,
    };
    for v in 0..n {
        if !active[v] {
            continue;
        }
        let on_boundary = mesh.boundary[v] || (region == Region::Exterior && mesh.on_interface[v]);
        let x = u.values[v];
        if on_boundary {
            r.boundary_min = r.boundary_min.min(x);
            r.boundary_max = r.boundary_max.max(x);
        } else {
            r.interior_min = r.interior_min.min(x);
            r.interior_max = r.interior_max.max(x);
        }
    }
    r.violation = (r.interior_max - r.boundary_max)
        .max(r.boundary_min - r.interior_min)
        .max(0.0);
    r
}
