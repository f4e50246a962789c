//! P1 assembly and solves for `∫_Ω (A∇u, ∇φ) = ∫_Γ Q φ dH¹`.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fields::{CoefficientField, DensityField};
use crate::geometry::InterfaceCurve;
use crate::linalg::{pcg_jacobi, CsrMatrix};
use crate::math::sqrt;
use crate::mesh::{Side, TriangleMesh};
use crate::quadrature::{GaussLegendre, TRIANGLE_DEGREE5};
use crate::vec2::{Mat2, Point, Vec2};

/// Relative residual at which the conjugate gradient stops.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Assembled stiffness matrix, load vector and constraint mask.
#[derive(Clone, Debug)]
pub struct SparseSystem<'m> {
    pub mesh: &'m TriangleMesh,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<bool>,
}

/// Nodal P1 solution with its element gradients.
#[derive(Clone, Debug)]
pub struct SolutionField<'m> {
    pub mesh: &'m TriangleMesh,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec2>,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl<'m> SolutionField<'m> {
    pub fn from_values(mesh: &'m TriangleMesh, values: Vec<f64>) -> Self {
        let gradients = (0..mesh.triangles.len())
            .map(|t| {
                let g = mesh.basis_gradients(t);
                let tri = mesh.triangles[t];
                g[0] * values[tri[0]] + g[1] * values[tri[1]] + g[2] * values[tri[2]]
            })
            .collect();
        SolutionField {
            mesh,
            values,
            gradients,
            iterations: 0,
            relative_residual: 0.0,
        }
    }

    /// Interpolated value, or `None` outside the mesh.
    pub fn value_at(&self, p: Point) -> Option<f64> {
        let (t, lam) = self.mesh.locate(p)?;
        let tri = self.mesh.triangles[t];
        Some(
            lam[0] * self.values[tri[0]]
                + lam[1] * self.values[tri[1]]
                + lam[2] * self.values[tri[2]],
        )
    }

    /// P1 value inside triangle `t` at `p`.
    pub fn value_in(&self, t: usize, p: Point) -> f64 {
        let tri = self.mesh.triangles[t];
        self.values[tri[0]] + self.gradients[t].dot(p - self.mesh.vertices[tri[0]])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Element matrix `K_ij = |T| (A ∇λ_j, ∇λ_i)` for constant `A`.
pub fn element_stiffness(corners: [Point; 3], a: Mat2) -> Result<[[f64; 3]; 3]> {
    let [p, q, r] = corners;
    let two_area = (q - p).cross(r - p);
    if !(two_area.abs() > 2e-14) {
        return Err(Error::Assembly(alloc::format!(
            "degenerate element with area {}",
            0.5 * two_area
        )));
    }
    let g = |u: Point, v: Point| Vec2::new(u.y - v.y, v.x - u.x) / two_area;
    let grads = [g(q, r), g(r, p), g(p, q)];
    let area = 0.5 * two_area.abs();
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * a.bilinear(grads[j], grads[i]);
        }
    }
    Ok(k)
}

fn assemble_matrix(
    mesh: &TriangleMesh,
    a: &CoefficientField,
    include: impl Fn(usize) -> bool,
) -> Result<CsrMatrix> {
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !include(t) {
            continue;
        }
        let m = a.eval(mesh.centroid(t));
        if !m.is_finite() {
            return Err(Error::Assembly(alloc::format!(
                "coefficient is not finite in element {t}"
            )));
        }
        if m.symmetry_defect() > 1e-12 * (1.0 + m.a11.abs() + m.a22.abs()) {
            return Err(Error::Assembly(alloc::format!(
                "coefficient is not symmetric in element {t}"
            )));
        }
        let k = element_stiffness(mesh.corners(t), m)?;
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.vertices.len(), triplets))
}

/// Stiffness matrix with `A` evaluated at element centroids.
pub fn assemble_stiffness<'m>(
    mesh: &'m TriangleMesh,
    a: &CoefficientField,
) -> Result<SparseSystem<'m>> {
    let matrix = assemble_matrix(mesh, a, |_| true)?;
    let n = mesh.vertices.len();
    Ok(SparseSystem {
        mesh,
        matrix,
        rhs: alloc::vec![0.0; n],
        dirichlet: alloc::vec![false; n],
    })
}

/// `b_i = ∫_{Γ_h} Q φ_i`, two Gauss points per interface edge; `Q` is read
/// at the curve point nearest to each Gauss point.
pub fn assemble_surface_load(
    mesh: &TriangleMesh,
    curve: &InterfaceCurve,
    q: &DensityField,
) -> Result<Vec<f64>> {
    if mesh.interface_edges.is_empty() {
        return Err(invalid!("mesh has no interface edges"));
    }
    let scale = mesh.h.max(curve.perimeter());
    for e in &mesh.interface_edges {
        for &v in &e.vertices {
            if curve.signed_distance(mesh.vertices[v]).abs() > 1e-8 * scale {
                return Err(invalid!(
                    "mesh is not fitted to the interface at vertex {v}"
                ));
            }
        }
    }
    let g = GaussLegendre::new(2);
    let mut b = alloc::vec![0.0; mesh.vertices.len()];
    for e in &mesh.interface_edges {
        let [i, j] = e.vertices;
        let (pi, pj) = (mesh.vertices[i], mesh.vertices[j]);
        let len = pi.distance(pj);
        for (t, w) in g.mapped(0.0, 1.0) {
            let val = q.at_point(curve, pi.lerp(pj, t)) * w * len;
            b[i] += (1.0 - t) * val;
            b[j] += t * val;
        }
    }
    Ok(b)
}

impl<'m> SparseSystem<'m> {
    /// Constrains the vertices of `∂Ω` to zero.
    pub fn apply_dirichlet_zero(self) -> Self {
        let mask = self.mesh.boundary.clone();
        self.apply_dirichlet(&mask)
    }

    /// Constrains the masked vertices to zero: their rows and columns are
    /// cleared, the diagonal set to one and the load zeroed.
    pub fn apply_dirichlet(mut self, mask: &[bool]) -> Self {
        let m = &mut self.matrix;
        for i in 0..m.n {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                let j = m.col_idx[k];
                if mask[i] || mask[j] {
                    m.values[k] = if i == j { 1.0 } else { 0.0 };
                }
            }
            if mask[i] {
                self.rhs[i] = 0.0;
            }
        }
        for (d, &c) in self.dirichlet.iter_mut().zip(mask) {
            *d |= c;
        }
        self
    }

    /// Conjugate gradient with Jacobi preconditioning to relative residual
    /// [`SOLVER_TOLERANCE`], at most `50 √N` iterations.
    pub fn solve(&self) -> Result<SolutionField<'m>> {
        let n = self.matrix.n;
        let mut x = alloc::vec![0.0; n];
        let max_iter = (50.0 * sqrt(n as f64)) as usize;
        let out = pcg_jacobi(&self.matrix, &self.rhs, &mut x, SOLVER_TOLERANCE, max_iter)?;
        for (v, &c) in x.iter_mut().zip(&self.dirichlet) {
            if c {
                *v = 0.0;
            }
        }
        let mut u = SolutionField::from_values(self.mesh, x);
        u.iterations = out.iterations;
        u.relative_residual = out.relative_residual;
        Ok(u)
    }

    /// `max_i |(K u − b)_i|` over unconstrained rows.
    pub fn galerkin_residual(&self, values: &[f64]) -> f64 {
        let ku = self.matrix.mul_vec(values);
        (0..self.matrix.n)
            .filter(|&i| !self.dirichlet[i])
            .map(|i| (ku[i] - self.rhs[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Assembles and solves the interface problem with zero boundary values.
pub fn solve_interface_problem<'m>(
    mesh: &'m TriangleMesh,
    curve: &InterfaceCurve,
    a: &CoefficientField,
    q: &DensityField,
) -> Result<SolutionField<'m>> {
    let mut system = assemble_stiffness(mesh, a)?;
    system.rhs = assemble_surface_load(mesh, curve, q)?;
    system.apply_dirichlet_zero().solve()
}

/// Region of an inhomogeneous Dirichlet solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// All of `Ω`, with the data prescribed on `∂Ω`.
    Whole,
    /// `Ω ∖ Ω̄'`, with the data on `∂Ω` and zero on `Γ`; the solution is
    /// extended by zero into `Ω'`.
    Exterior,
}

/// `A`-harmonic function with the given boundary values, by lifting the
/// nodal interpolant of the data.
pub fn solve_dirichlet<'m>(
    mesh: &'m TriangleMesh,
    a: &CoefficientField,
    boundary_value: impl Fn(Point) -> f64,
    region: Region,
) -> Result<SolutionField<'m>> {
    let n = mesh.vertices.len();
    let mut lift = alloc::vec![0.0; n];
    let mut mask = mesh.boundary.clone();
    for v in 0..n {
        if mesh.boundary[v] {
            lift[v] = boundary_value(mesh.vertices[v]);
            if !lift[v].is_finite() {
                return Err(invalid!("boundary value is not finite at vertex {v}"));
            }
        }
    }
    let matrix = match region {
        Region::Whole => assemble_matrix(mesh, a, |_| true)?,
        Region::Exterior => {
            if mesh.interface_edges.is_empty() || !mesh.labels.contains(&Side::Inside) {
                return Err(invalid!(
                    "exterior solve needs a mesh with an interior region"
                ));
            }
            let mut touches_outside = alloc::vec![false; n];
            for (t, tri) in mesh.triangles.iter().enumerate() {
                if mesh.labels[t] == Side::Outside {
                    for &v in tri {
                        touches_outside[v] = true;
                    }
                }
            }
            for v in 0..n {
                if !touches_outside[v] || mesh.on_interface[v] {
                    mask[v] = true;
                    lift[v] = 0.0;
                }
            }
            assemble_matrix(mesh, a, |t| mesh.labels[t] == Side::Outside)?
        }
    };
    let klift = matrix.mul_vec(&lift);
    let rhs: Vec<f64> = klift.iter().map(|v| -v).collect();
    let system = SparseSystem {
        mesh,
        matrix,
        rhs,
        dirichlet: alloc::vec![false; n],
    }
    .apply_dirichlet(&mask);
    let w = system.solve()?;
    let values: Vec<f64> = w.values.iter().zip(&lift).map(|(w, g)| w + g).collect();
    let mut u = SolutionField::from_values(mesh, values);
    u.iterations = w.iterations;
    u.relative_residual = w.relative_residual;
    Ok(u)
}

/// A `C²` test function with analytic derivatives.
pub trait TestFunction {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> Vec2;
    fn hessian(&self, p: Point) -> Mat2;
}

/// `(R² − |x − c|²) q(x − c)` with `q` quadratic:
/// `q(z) = c₀ + c₁z₁ + c₂z₂ + c₃z₁² + c₄z₁z₂ + c₅z₂²`. Vanishes on the
/// circle `|x − c| = R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubblePolynomial {
    pub center: Point,
    pub radius: f64,
    pub coeffs: [f64; 6],
}

impl TestFunction for BubblePolynomial {
    fn value(&self, p: Point) -> f64 {
        let z = p - self.center;
        let c = &self.coeffs;
        let q =
            c[0] + c[1] * z.x + c[2] * z.y + c[3] * z.x * z.x + c[4] * z.x * z.y + c[5] * z.y * z.y;
        (self.radius * self.radius - z.norm_sq()) * q
    }

    fn gradient(&self, p: Point) -> Vec2 {
        let z = p - self.center;
        let c = &self.coeffs;
        let q =
            c[0] + c[1] * z.x + c[2] * z.y + c[3] * z.x * z.x + c[4] * z.x * z.y + c[5] * z.y * z.y;
        let gq = Vec2::new(
            c[1] + 2.0 * c[3] * z.x + c[4] * z.y,
            c[2] + c[4] * z.x + 2.0 * c[5] * z.y,
        );
        let b = self.radius * self.radius - z.norm_sq();
        z * (-2.0 * q) + gq * b
    }

    fn hessian(&self, p: Point) -> Mat2 {
        let z = p - self.center;
        let c = &self.coeffs;
        let q =
            c[0] + c[1] * z.x + c[2] * z.y + c[3] * z.x * z.x + c[4] * z.x * z.y + c[5] * z.y * z.y;
        let gq = Vec2::new(
            c[1] + 2.0 * c[3] * z.x + c[4] * z.y,
            c[2] + c[4] * z.x + 2.0 * c[5] * z.y,
        );
        let gb = z * -2.0;
        let b = self.radius * self.radius - z.norm_sq();
        let (h11, h12, h22) = (2.0 * c[3], c[4], 2.0 * c[5]);
        Mat2::symmetric(
            -2.0 * q + 2.0 * gb.x * gq.x + b * h11,
            gb.x * gq.y + gb.y * gq.x + b * h12,
            -2.0 * q + 2.0 * gb.y * gq.y + b * h22,
        )
    }
}

/// `(1 − |x − c|²/ρ²)⁴` inside `B_ρ(c)`, zero outside; `C³`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialBump {
    pub center: Point,
    pub radius: f64,
}

impl TestFunction for RadialBump {
    fn value(&self, p: Point) -> f64 {
        let s = (p - self.center).norm_sq() / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            libm::pow(1.0 - s, 4.0)
        }
    }

    fn gradient(&self, p: Point) -> Vec2 {
        let z = p - self.center;
        let r2 = self.radius * self.radius;
        let s = z.norm_sq() / r2;
        if s >= 1.0 {
            return Vec2::ZERO;
        }
        let d1 = -4.0 * (1.0 - s) * (1.0 - s) * (1.0 - s);
        z * (2.0 * d1 / r2)
    }

    fn hessian(&self, p: Point) -> Mat2 {
        let z = p - self.center;
        let r2 = self.radius * self.radius;
        let s = z.norm_sq() / r2;
        if s >= 1.0 {
            return Mat2::symmetric(0.0, 0.0, 0.0);
        }
        let d1 = -4.0 * (1.0 - s) * (1.0 - s) * (1.0 - s);
        let d2 = 12.0 * (1.0 - s) * (1.0 - s);
        let gs = z * (2.0 / r2);
        Mat2::symmetric(
            d2 * gs.x * gs.x + 2.0 * d1 / r2,
            d2 * gs.x * gs.y,
            d2 * gs.y * gs.y + 2.0 * d1 / r2,
        )
    }
}

/// `(1 − t²)⁴` with `t = (|x − c| − ρ)/w`, supported in the annulus
/// `||x − c| − ρ| < w`; `C³`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeBump {
    pub center: Point,
    pub radius: f64,
    pub width: f64,
}

impl TubeBump {
    fn parts(&self, p: Point) -> Option<(f64, f64, Vec2)> {
        let z = p - self.center;
        let r = z.norm();
        let t = (r - self.radius) / self.width;
        if t.abs() >= 1.0 || r == 0.0 {
            None
        } else {
            Some((t, r, z / r))
        }
    }
}

impl TestFunction for TubeBump {
    fn value(&self, p: Point) -> f64 {
        match self.parts(p) {
            Some((t, _, _)) => libm::pow(1.0 - t * t, 4.0),
            None => 0.0,
        }
    }

    fn gradient(&self, p: Point) -> Vec2 {
        match self.parts(p) {
            Some((t, _, e)) => {
                let u = 1.0 - t * t;
                e * (-8.0 * t * u * u * u / self.width)
            }
            None => Vec2::ZERO,
        }
    }

    fn hessian(&self, p: Point) -> Mat2 {
        match self.parts(p) {
            Some((t, r, e)) => {
                let u = 1.0 - t * t;
                let g1 = -8.0 * t * u * u * u;
                let g2 = -8.0 * u * u * u + 48.0 * t * t * u * u;
                let w = self.width;
                let a = g2 / (w * w);
                let b = g1 / (r * w);
                Mat2::symmetric(
                    a * e.x * e.x + b * (1.0 - e.x * e.x),
                    a * e.x * e.y - b * e.x * e.y,
                    a * e.y * e.y + b * (1.0 - e.y * e.y),
                )
            }
            None => Mat2::symmetric(0.0, 0.0, 0.0),
        }
    }
}

/// `div(A∇φ)`: analytic Hessian of `φ` and central differences of `A`.
pub fn divergence_of_flux(a: &CoefficientField, phi: &dyn TestFunction, p: Point) -> f64 {
    let m = a.eval(p);
    let hs = phi.hessian(p);
    let g = phi.gradient(p);
    let mut div = m.a11 * hs.a11 + m.a12 * hs.a21 + m.a21 * hs.a12 + m.a22 * hs.a22;
    if !a.is_identity() {
        let eps = 1e-6;
        let ex = Vec2::new(eps, 0.0);
        let ey = Vec2::new(0.0, eps);
        let (axp, axm) = (a.eval(p + ex), a.eval(p - ex));
        let (ayp, aym) = (a.eval(p + ey), a.eval(p - ey));
        let d11 = (axp.a11 - axm.a11) / (2.0 * eps);
        let d12x = (axp.a12 - axm.a12) / (2.0 * eps);
        let d21y = (ayp.a21 - aym.a21) / (2.0 * eps);
        let d22 = (ayp.a22 - aym.a22) / (2.0 * eps);
        div += (d11 + d21y) * g.x + (d12x + d22) * g.y;
    }
    div
}

/// `∫_Γ Q φ dH¹` with a fine curve quadrature.
pub fn interface_functional(
    curve: &InterfaceCurve,
    q: &DensityField,
    phi: &dyn TestFunction,
) -> Result<f64> {
    let n = if curve.has_corners() { 24 } else { 4096 };
    let rule = curve.quadrature(n)?;
    Ok(rule.integrate(|node| q.at_arclength(node.arclength) * phi.value(node.point)))
}

/// Residual of the weak form, `∫_Ω (A∇u_h, ∇φ) dx − ∫_Γ Q φ dH¹`.
pub fn weak_residual(
    u: &SolutionField<'_>,
    a: &CoefficientField,
    curve: &InterfaceCurve,
    q: &DensityField,
    phi: &dyn TestFunction,
) -> Result<f64> {
    let mesh = u.mesh;
    let mut volume = 0.0;
    for t in 0..mesh.triangles.len() {
        let [p0, p1, p2] = mesh.corners(t);
        let g = u.gradients[t];
        volume +=
            TRIANGLE_DEGREE5.integrate(p0, p1, p2, |p| a.eval(p).bilinear(g, phi.gradient(p)));
    }
    Ok(volume - interface_functional(curve, q, phi)?)
}

/// Residual of the very weak form, `−∫_Ω u_h div(A∇φ) dx − ∫_Γ Q φ dH¹`.
pub fn very_weak_residual(
    u: &SolutionField<'_>,
    a: &CoefficientField,
    curve: &InterfaceCurve,
    q: &DensityField,
    phi: &dyn TestFunction,
) -> Result<f64> {
    let mesh = u.mesh;
    let mut volume = 0.0;
    for t in 0..mesh.triangles.len() {
        let [p0, p1, p2] = mesh.corners(t);
        volume += TRIANGLE_DEGREE5.integrate(p0, p1, p2, |p| {
            u.value_in(t, p) * divergence_of_flux(a, phi, p)
        });
    }
    Ok(-volume - interface_functional(curve, q, phi)?)
}

/// `a(u_h, u_h) = Σ K_ij u_i u_j`.
pub fn energy(system: &SparseSystem<'_>, values: &[f64]) -> f64 {
    let ku = system.matrix.mul_vec(values);
    ku.iter().zip(values).map(|(a, b)| a * b).sum()
}

/// `‖∇u_h‖²_{L²}`.
pub fn dirichlet_energy(u: &SolutionField<'_>) -> f64 {
    (0..u.mesh.triangles.len())
        .map(|t| u.mesh.area(t) * u.gradients[t].norm_sq())
        .sum()
}
