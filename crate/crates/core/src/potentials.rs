//! Closed-form reference solutions.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fields::DensityField;
use crate::geometry::InterfaceCurve;
use crate::math::{atan, log, pow, PI, TAU};
use crate::quadrature::GaussLegendre;
use crate::vec2::{Point, Vec2};

/// Dirichlet Green's function of `−Δ` on the disk `B_R(0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenDisk {
    pub radius: f64,
}

impl GreenDisk {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid!("disk radius must be positive, got {radius}"));
        }
        Ok(GreenDisk { radius })
    }

    /// `G(x, y) = −(1/2π) [log|x − y| − ½ log(|x|²|y|²/R² − 2x·y + R²)]`.
    ///
    /// The second logarithm is the image term `log(|y|/R · |x − R²y/|y|²|)`
    /// written so that `y = 0` needs no special case and symmetry in
    /// `(x, y)` is manifest.
    pub fn eval(&self, x: Point, y: Point) -> Result<f64> {
        let r = self.radius;
        let lim = r * (1.0 + 1e-12);
        if x.norm() > lim || y.norm() > lim {
            return Err(invalid!(
                "Green's function arguments must lie in the closed disk"
            ));
        }
        let d2 = (x - y).norm_sq();
        if d2 == 0.0 {
            return Err(Error::Singularity(alloc::format!(
                "G(x, x) at ({}, {})",
                x.x,
                x.y
            )));
        }
        let image = x.norm_sq() * y.norm_sq() / (r * r) - 2.0 * x.dot(y) + r * r;
        Ok(-(0.5 * log(d2) - 0.5 * log(image)) / TAU)
    }

    /// `u(x) = ∫_Γ G(x, y) Q(y) dH¹(y)` by adaptive Gauss–Legendre panels in
    /// arc length, which also resolves the integrable singularity for
    /// `x ∈ Γ`.
    pub fn solution(&self, curve: &InterfaceCurve, q: &DensityField, x: Point) -> Result<f64> {
        let len = curve.perimeter();
        let mut breaks: Vec<f64> = (0..=64).map(|k| len * k as f64 / 64.0).collect();
        for c in curve.corners() {
            breaks.push(curve.closest(c).arclength);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * len);
        let rule = GaussLegendre::new(10);
        let ctx = Panel {
            green: self,
            curve,
            q,
            x,
            rule: &rule,
        };
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let whole = ctx.panel(w[0], w[1])?;
            total += ctx.adapt(w[0], w[1], whole, 1e-13 * len.max(1.0), 0)?;
        }
        Ok(total)
    }
}

struct Panel<'a> {
    green: &'a GreenDisk,
    curve: &'a InterfaceCurve,
    q: &'a DensityField,
    x: Point,
    rule: &'a GaussLegendre,
}

impl Panel<'_> {
    fn panel(&self, a: f64, b: f64) -> Result<f64> {
        let mut sum = 0.0;
        for (s, w) in self.rule.mapped(a, b) {
            let p = self.curve.locate(s);
            sum += w * self.green.eval(self.x, p.point)? * self.q.at_arclength(s);
        }
        Ok(sum)
    }

    fn adapt(&self, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
        let m = 0.5 * (a + b);
        let left = self.panel(a, m)?;
        let right = self.panel(m, b)?;
        // Near the singular point the kernel itself carries cancellation
        // noise, so refinement also stops at a minimum panel width.
        let floor = 8.0 * f64::EPSILON * (left.abs() + right.abs());
        let narrow = b - a <= 1e-9 * self.curve.perimeter();
        if (left + right - whole).abs() <= tol.max(floor) || narrow || depth >= 48 {
            return Ok(left + right);
        }
        Ok(self.adapt(a, m, left, 0.5 * tol, depth + 1)?
            + self.adapt(m, b, right, 0.5 * tol, depth + 1)?)
    }
}

pub fn green_disk(radius: f64, x: Point, y: Point) -> Result<f64> {
    GreenDisk::new(radius)?.eval(x, y)
}

pub fn green_solution(
    radius: f64,
    curve: &InterfaceCurve,
    q: &DensityField,
    x: Point,
) -> Result<f64> {
    GreenDisk::new(radius)?.solution(curve, q, x)
}

/// Exact solution for `Ω = B_R(c)`, `Γ = ∂B_ρ(c)`, constant `Q`, `A = I`:
/// `u = Qρ log(R/ρ)` for `r ≤ ρ` and `Qρ log(R/r)` for `ρ ≤ r ≤ R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialOracle {
    pub outer_radius: f64,
    pub interface_radius: f64,
    pub q: f64,
    pub center: Point,
}

impl RadialOracle {
    pub fn value(&self, r: f64) -> f64 {
        let rho = self.interface_radius;
        let r = r.max(rho);
        self.q * rho * log(self.outer_radius / r)
    }

    /// `u'(r)`; at `r = ρ` the outside value is returned.
    pub fn derivative(&self, r: f64) -> f64 {
        if r < self.interface_radius {
            0.0
        } else {
            -self.q * self.interface_radius / r
        }
    }

    /// `(u'(ρ⁻), u'(ρ⁺))`.
    pub fn interface_derivatives(&self) -> (f64, f64) {
        (0.0, -self.q)
    }

    /// `u'(ρ⁺) − u'(ρ⁻) = −Q`.
    pub fn derivative_jump(&self) -> f64 {
        let (inside, outside) = self.interface_derivatives();
        outside - inside
    }

    pub fn value_at(&self, p: Point) -> f64 {
        self.value(p.distance(self.center))
    }

    pub fn gradient_at(&self, p: Point) -> Vec2 {
        let v = p - self.center;
        let r = v.norm();
        if r == 0.0 {
            return Vec2::ZERO;
        }
        v * (self.derivative(r) / r)
    }
}

pub fn radial_oracle(outer_radius: f64, interface_radius: f64, q: f64) -> Result<RadialOracle> {
    if !(interface_radius > 0.0 && interface_radius < outer_radius && outer_radius.is_finite()) {
        return Err(invalid!(
            "radial oracle needs 0 < rho < R, got rho = {interface_radius}, R = {outer_radius}"
        ));
    }
    if !q.is_finite() {
        return Err(invalid!("density must be finite"));
    }
    Ok(RadialOracle {
        outer_radius,
        interface_radius,
        q,
        center: Point::ZERO,
    })
}

/// `x₁`-derivatives of the logarithmic potentials of the two legs
/// `Γ₁ = [0,½]×{0}` and `Γ₂ = {0}×[0,½]` of the corner triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentIntegrals {
    /// `∫₀^½ (x₁−t)/((x₁−t)²+x₂²) dt = −½ log((x₁−½)²+x₂²) + ½ log(x₁²+x₂²)`.
    pub i1: f64,
    /// `∫₀^½ x₁/(x₁²+(x₂−t)²) dt = −arctan((x₂−½)/x₁) + arctan(x₂/x₁)`, and 0
    /// for `x₁ = 0`.
    pub i2: f64,
}

pub fn segment_kernel_integrals(x: Point) -> Result<SegmentIntegrals> {
    let on_first = x.y == 0.0 && (0.0..=0.5).contains(&x.x);
    let on_second = x.x == 0.0 && (0.0..=0.5).contains(&x.y);
    if on_first || on_second {
        return Err(Error::Singularity(alloc::format!(
            "({}, {}) lies on a triangle leg",
            x.x,
            x.y
        )));
    }
    let i1 = -0.5 * log((x.x - 0.5) * (x.x - 0.5) + x.y * x.y) + 0.5 * log(x.x * x.x + x.y * x.y);
    let i2 = if x.x == 0.0 {
        0.0
    } else {
        -atan((x.y - 0.5) / x.x) + atan(x.y / x.x)
    };
    Ok(SegmentIntegrals { i1, i2 })
}

/// `−(1/2π)(I₁ + I₂)`: the part of `∂₁u` for the corner triangle problem
/// that is unbounded at the right-angle corner. The hypotenuse and the
/// harmonic corrector contribute a bounded remainder, which is omitted, so
/// this agrees with `∂₁u` only up to a bounded function. Near the corner it
/// behaves like `(1/2π) log(1/|x|)`.
pub fn triangle_gradient_oracle(x: Point) -> Result<f64> {
    let r = x.norm();
    if !(r > 0.0 && r < 0.2) {
        return Err(invalid!("corner oracle needs 0 < |x| < 0.2, got {r}"));
    }
    let s = segment_kernel_integrals(x)?;
    Ok(-(s.i1 + s.i2) / (2.0 * PI))
}

/// `u₁ = x r^{μ−1}` and its gradient
/// `(r^{μ−1}(1 + (μ−1)x²/r²), (μ−1) x y r^{μ−3})`.
pub fn meyers_u1(mu: f64, p: Point) -> Result<(f64, Vec2)> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid!("Meyers parameter must lie in (0, 1), got {mu}"));
    }
    let r2 = p.norm_sq();
    if r2 == 0.0 {
        return Err(Error::Singularity("u1 is singular at the origin".into()));
    }
    let rm = pow(r2, 0.5 * (mu - 1.0));
    let value = p.x * rm;
    let grad = Vec2::new(
        rm * (1.0 + (mu - 1.0) * p.x * p.x / r2),
        (mu - 1.0) * p.x * p.y * rm / r2,
    );
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_center_value() {
        let g = green_disk(1.0, Point::ZERO, Point::new(0.5, 0.0)).unwrap();
        assert!((g - log(2.0) / TAU).abs() < 1e-15);
        assert!(green_disk(1.0, Point::new(0.3, 0.1), Point::new(0.3, 0.1)).is_err());
    }

    #[test]
    fn segment_integrals_at_quarter_point() {
        let s = segment_kernel_integrals(Point::new(0.25, 0.25)).unwrap();
        assert!(s.i1.abs() < 1e-15);
        assert!((s.i2 - PI / 2.0).abs() < 1e-15);
        assert!(segment_kernel_integrals(Point::new(0.2, 0.0)).is_err());
        assert_eq!(
            segment_kernel_integrals(Point::new(0.0, 0.7)).unwrap().i2,
            0.0
        );
    }

    #[test]
    fn radial_oracle_jump() {
        let o = radial_oracle(2.0, 1.0, 1.0).unwrap();
        assert!((o.value(0.0) - log(2.0)).abs() < 1e-15);
        assert_eq!(o.value(2.0), 0.0);
        assert_eq!(o.derivative_jump(), -1.0);
        assert!(radial_oracle(1.0, 1.0, 1.0).is_err());
    }
}
