//! Coefficient fields `A(x)` and interface densities `Q`.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::fem::SolutionField;
use crate::geometry::{CurveKind, InterfaceCurve};
use crate::math::{cos, sin};
use crate::mesh::Side;
use crate::vec2::{Mat2, Point};

/// Symmetric uniformly elliptic matrix field.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientField {
    Identity,
    /// `I − (1 − μ²) τ τᵀ` with `τ = (−y, x)/|x|`: eigenvalue 1 in the radial
    /// and `μ²` in the angular direction. Evaluates to the identity at the
    /// origin, where the formula is undefined.
    Meyers {
        mu: f64,
    },
    /// `(1 + a sin(fx) sin(fy)) I + (a/2) cos(f(x − y)) [[0,1],[1,0]]`,
    /// with eigenvalues at least `1 − 3a/2`.
    SmoothPerturbation {
        amplitude: f64,
        frequency: f64,
    },
    Tabulated(TabulatedField),
}

/// Bilinear interpolation of matrix samples on a regular grid; points
/// outside the grid use the nearest grid value.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedField {
    min: Point,
    max: Point,
    nx: usize,
    ny: usize,
    values: Vec<Mat2>,
}

impl TabulatedField {
    /// `values` is row-major with `nx` samples per row, `ny` rows.
    pub fn new(min: Point, max: Point, nx: usize, ny: usize, values: Vec<Mat2>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(invalid!("tabulated field needs at least 2x2 samples"));
        }
        if values.len() != nx * ny {
            return Err(invalid!(
                "expected {} samples, got {}",
                nx * ny,
                values.len()
            ));
        }
        if !(max.x > min.x && max.y > min.y) {
            return Err(invalid!("tabulated field grid must have positive extent"));
        }
        if values.iter().any(|m| !m.is_finite()) {
            return Err(Error::Data(
                "tabulated field has non-finite entries".to_string(),
            ));
        }
        Ok(TabulatedField {
            min,
            max,
            nx,
            ny,
            values,
        })
    }

    fn eval(&self, p: Point) -> Mat2 {
        let fx = ((p.x - self.min.x) / (self.max.x - self.min.x) * (self.nx - 1) as f64)
            .clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.min.y) / (self.max.y - self.min.y) * (self.ny - 1) as f64)
            .clamp(0.0, (self.ny - 1) as f64);
        let i = (fx as usize).min(self.nx - 2);
        let j = (fy as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let at = |a: usize, b: usize| self.values[b * self.nx + a];
        let (m00, m10, m01, m11) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
        let mix = |f: fn(&Mat2) -> f64| {
            (1.0 - tx) * (1.0 - ty) * f(&m00)
                + tx * (1.0 - ty) * f(&m10)
                + (1.0 - tx) * ty * f(&m01)
                + tx * ty * f(&m11)
        };
        Mat2::new(
            mix(|m| m.a11),
            mix(|m| m.a12),
            mix(|m| m.a21),
            mix(|m| m.a22),
        )
    }
}

impl CoefficientField {
    pub fn meyers(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(invalid!("Meyers parameter must lie in (0, 1), got {mu}"));
        }
        Ok(CoefficientField::Meyers { mu })
    }

    pub fn smooth_perturbation(amplitude: f64, frequency: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&amplitude) || !frequency.is_finite() {
            return Err(invalid!(
                "perturbation amplitude must lie in [0, 0.5), got {amplitude}"
            ));
        }
        Ok(CoefficientField::SmoothPerturbation {
            amplitude,
            frequency,
        })
    }

    pub fn eval(&self, p: Point) -> Mat2 {
        match self {
            CoefficientField::Identity => Mat2::IDENTITY,
            CoefficientField::Meyers { mu } => {
                let r2 = p.norm_sq();
                if r2 == 0.0 {
                    return Mat2::IDENTITY;
                }
                let c = 1.0 - mu * mu;
                let off = c * p.x * p.y / r2;
                Mat2::symmetric(1.0 - c * p.y * p.y / r2, off, 1.0 - c * p.x * p.x / r2)
            }
            CoefficientField::SmoothPerturbation {
                amplitude: a,
                frequency: f,
            } => {
                let d = 1.0 + a * sin(f * p.x) * sin(f * p.y);
                let o = 0.5 * a * cos(f * (p.x - p.y));
                Mat2::symmetric(d, o, d)
            }
            CoefficientField::Tabulated(t) => t.eval(p),
        }
    }

    /// A lower bound for the ellipticity constant where one is known in
    /// closed form.
    pub fn ellipticity_bound(&self) -> Option<f64> {
        match self {
            CoefficientField::Identity => Some(1.0),
            CoefficientField::Meyers { mu } => Some(mu * mu),
            CoefficientField::SmoothPerturbation { amplitude, .. } => Some(1.0 - 1.5 * amplitude),
            CoefficientField::Tabulated(_) => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CoefficientField::Identity)
    }
}

impl FromStr for CoefficientField {
    type Err = Error;

    /// `identity`, `meyers:<mu>` or `perturbation:<amp>,<freq>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(CoefficientField::Identity);
        }
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid!("not a number: {t:?}"))
        };
        if let Some(rest) = s.strip_prefix("meyers:") {
            return CoefficientField::meyers(num(rest)?);
        }
        if let Some(rest) = s.strip_prefix("perturbation:") {
            let (a, f) = rest
                .split_once(',')
                .ok_or_else(|| invalid!("expected perturbation:<amp>,<freq>"))?;
            return CoefficientField::smooth_perturbation(num(a)?, num(f)?);
        }
        Err(invalid!("unknown coefficient {s:?}; expected identity, meyers:<mu> or perturbation:<amp>,<freq>"))
    }
}

/// Sampled ellipticity data of a coefficient field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityReport {
    /// Smallest eigenvalue of the symmetric part.
    pub min_eigenvalue: f64,
    /// Largest spectral norm of the symmetric part.
    pub max_norm: f64,
    /// `max |a₁₂ − a₂₁|`.
    pub symmetry_defect: f64,
    pub sample_count: usize,
}

pub fn validate_coefficient(
    field: &CoefficientField,
    samples: &[Point],
) -> Result<EllipticityReport> {
    if samples.is_empty() {
        return Err(invalid!(
            "coefficient validation needs at least one sample point"
        ));
    }
    let mut report = EllipticityReport {
        min_eigenvalue: f64::INFINITY,
        max_norm: 0.0,
        symmetry_defect: 0.0,
        sample_count: samples.len(),
    };
    for &p in samples {
        let a = field.eval(p);
        if !a.is_finite() {
            return Err(Error::Data(alloc::format!(
                "coefficient is not finite at ({}, {})",
                p.x,
                p.y
            )));
        }
        let (lo, hi) = a.symmetric_eigenvalues();
        report.min_eigenvalue = report.min_eigenvalue.min(lo);
        report.max_norm = report.max_norm.max(hi.abs().max(lo.abs()));
        report.symmetry_defect = report.symmetry_defect.max(a.symmetry_defect());
    }
    Ok(report)
}

/// Interface density `Q`.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityField {
    Constant(f64),
    Sampled(SampledDensity),
}

/// Periodic piecewise-linear function of arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDensity {
    arclength: Vec<f64>,
    values: Vec<f64>,
    period: f64,
    holder_exponent: f64,
}

impl SampledDensity {
    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    fn eval(&self, s: f64) -> f64 {
        let n = self.arclength.len();
        let s = s - crate::math::floor(s / self.period) * self.period;
        let k = self.arclength.partition_point(|&a| a <= s);
        let (i, j) = if k == 0 || k == n {
            (n - 1, 0)
        } else {
            (k - 1, k)
        };
        let (si, sj) = (self.arclength[i], self.arclength[j]);
        let gap = if j > i {
            sj - si
        } else {
            sj + self.period - si
        };
        let mut off = s - si;
        if off < 0.0 {
            off += self.period;
        }
        let t = if gap > 0.0 {
            (off / gap).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (1.0 - t) * self.values[i] + t * self.values[j]
    }
}

impl DensityField {
    /// Samples at arc-length positions, strictly increasing in `[0, period)`.
    pub fn sampled(
        arclength: Vec<f64>,
        values: Vec<f64>,
        period: f64,
        holder_exponent: f64,
    ) -> Result<Self> {
        if arclength.len() < 2 || arclength.len() != values.len() {
            return Err(invalid!(
                "sampled density needs at least two (position, value) pairs"
            ));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(invalid!("density period must be positive"));
        }
        if !(holder_exponent > 0.0 && holder_exponent <= 1.0) {
            return Err(invalid!(
                "Hölder exponent must lie in (0, 1], got {holder_exponent}"
            ));
        }
        if arclength.windows(2).any(|w| !(w[1] > w[0]))
            || arclength[0] < 0.0
            || arclength[arclength.len() - 1] >= period
        {
            return Err(invalid!(
                "density positions must increase strictly within [0, period)"
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("density values must be finite".to_string()));
        }
        Ok(DensityField::Sampled(SampledDensity {
            arclength,
            values,
            period,
            holder_exponent,
        }))
    }

    /// Samples `f` at `samples` equally spaced arc-length positions of `curve`.
    pub fn from_fn(
        curve: &InterfaceCurve,
        samples: usize,
        holder_exponent: f64,
        mut f: impl FnMut(Point) -> f64,
    ) -> Result<Self> {
        let len = curve.perimeter();
        let s: Vec<f64> = (0..samples)
            .map(|k| len * k as f64 / samples as f64)
            .collect();
        let v = s.iter().map(|&si| f(curve.locate(si).point)).collect();
        Self::sampled(s, v, len, holder_exponent)
    }

    /// Value at arc length `s`.
    pub fn at_arclength(&self, s: f64) -> f64 {
        match self {
            DensityField::Constant(q) => *q,
            DensityField::Sampled(d) => d.eval(s),
        }
    }

    /// Value at the curve point nearest to `p`.
    pub fn at_point(&self, curve: &InterfaceCurve, p: Point) -> f64 {
        match self {
            DensityField::Constant(q) => *q,
            DensityField::Sampled(d) => d.eval(curve.closest(p).arclength),
        }
    }

    pub fn holder_exponent(&self) -> f64 {
        match self {
            DensityField::Constant(_) => 1.0,
            DensityField::Sampled(d) => d.holder_exponent,
        }
    }

    pub fn scaled(&self, factor: f64) -> DensityField {
        match self {
            DensityField::Constant(q) => DensityField::Constant(q * factor),
            DensityField::Sampled(d) => {
                let mut d = d.clone();
                for v in &mut d.values {
                    *v *= factor;
                }
                DensityField::Sampled(d)
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            DensityField::Constant(q) => q.abs(),
            DensityField::Sampled(d) => d.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// `Q = −(A∇u₂, x)` on the interface circle, where `u₂` is the exterior
/// solve and the gradient is the one-sided trace from outside.
///
/// One sample per interface edge, at the projection of the edge midpoint.
pub fn meyers_density(
    mu: f64,
    u2: &SolutionField<'_>,
    curve: &InterfaceCurve,
) -> Result<DensityField> {
    let a = CoefficientField::meyers(mu)?;
    let center = match curve.kind() {
        CurveKind::Circle { center, .. } => *center,
        _ => return Err(invalid!("the Meyers density lives on a circle")),
    };
    let mesh = u2.mesh;
    if mesh.interface_edges.is_empty() {
        return Err(invalid!("solution mesh has no interface"));
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.labels[t] == Side::Inside && tri.iter().any(|&v| u2.values[v] != 0.0) {
            return Err(invalid!(
                "u2 is not an exterior solution: it is nonzero inside the interface"
            ));
        }
    }
    let mut samples: Vec<(f64, f64)> = mesh
        .interface_edges
        .iter()
        .map(|e| {
            let mid = (mesh.vertices[e.vertices[0]] + mesh.vertices[e.vertices[1]]) * 0.5;
            let c = curve.closest(mid);
            let g = u2.gradients[e.outside];
            let q = -a.eval(c.point).mul_vec(g).dot(c.point - center);
            (c.arclength, q)
        })
        .collect();
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    samples.dedup_by(|x, y| x.0 == y.0);
    let (s, v) = samples.into_iter().unzip();
    DensityField::sampled(s, v, curve.perimeter(), 1.0)
}
