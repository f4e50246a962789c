//! Interface-fitted triangulations.
//!
//! A concentric circle in a disk gets a structured ring mesh with a ring of
//! vertices exactly on `Γ`; its ring counts are multiples of eight and all
//! rings start at angle zero, so the mesh is invariant under rotation by
//! `π/4`. Every other configuration is meshed by a constrained Delaunay
//! triangulation of background points (rings for disks, a triangular
//! lattice for rectangles) from which a band around `Γ` is removed and
//! replaced by curve samples joined by constraint edges.

use alloc::string::ToString;
use alloc::vec::Vec;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{CurveKind, Domain, DomainKind, InterfaceCurve};
use crate::math::{acos_deg, ceil, cos, round, sin, sqrt, TAU};
use crate::vec2::{Point, Vec2};

/// Side of the interface an element lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// In `Ω'`.
    Inside,
    /// In `Ω ∖ Ω̄'`.
    Outside,
}

/// A mesh edge on `Γ`, oriented so the inside element lies to its left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceEdge {
    pub vertices: [usize; 2],
    /// Unit normal pointing from the inside element to the outside element.
    pub normal: Vec2,
    pub inside: usize,
    pub outside: usize,
}

#[derive(Clone, Debug)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Vertices on `∂Ω`.
    pub boundary: Vec<bool>,
    /// Vertices on `Γ`.
    pub on_interface: Vec<bool>,
    pub interface_edges: Vec<InterfaceEdge>,
    pub labels: Vec<Side>,
    /// Nominal mesh size.
    pub h: f64,
    pub domain: Domain,
}

/// Unique edges with their adjacent triangles.
#[derive(Clone, Debug)]
pub struct EdgeTable {
    pub edges: Vec<[usize; 2]>,
    /// Adjacent triangles; the second slot is `None` on the mesh boundary.
    pub adjacent: Vec<[Option<usize>; 2]>,
    /// Edge ids of each triangle, opposite to local vertex 2, 0, 1: edge
    /// `k` joins local vertices `k` and `k + 1`.
    pub triangle_edges: Vec<[usize; 3]>,
}

/// Structural checks of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshQuality {
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub euler_characteristic: i64,
    pub min_area: f64,
    pub min_angle_degrees: f64,
    pub max_edge: f64,
    pub interface_edges: usize,
    /// Number of closed cycles formed by the interface edges.
    pub interface_cycles: usize,
    /// Signed area enclosed by the interface polyline.
    pub interface_area: f64,
    /// Largest `|d_Γ|` at interface edge midpoints.
    pub interface_deviation: f64,
}

impl TriangleMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area (positive for counterclockwise triangles).
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    /// Gradients of the three barycentric basis functions of triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.corners(t);
        let two_area = (b - a).cross(c - a);
        let g = |p: Point, q: Point| Vec2::new(p.y - q.y, q.x - p.x) / two_area;
        [g(b, c), g(c, a), g(a, b)]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn side_area(&self, side: Side) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.labels[t] == side)
            .map(|t| self.area(t))
            .sum()
    }

    pub fn edge_table(&self) -> EdgeTable {
        edge_table(&self.triangles)
    }

    /// Triangle containing `p` and barycentric coordinates, by linear scan.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            let d = (b - a).cross(c - a);
            let l1 = (c - b).cross(p - b) / d;
            let l2 = (a - c).cross(p - c) / d;
            let l0 = 1.0 - l1 - l2;
            let lam = [l1, l2, l0];
            let bary = [lam[0], lam[1], lam[2]];
            let worst = bary.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            if worst >= -1e-12 {
                return Some((t, bary));
            }
            if best.as_ref().map_or(true, |b| worst > b.2) {
                best = Some((t, bary, worst));
            }
        }
        best.filter(|b| b.2 > -1e-9).map(|b| (b.0, b.1))
    }

    /// Vertices of the interface polyline in cycle order, one list per cycle.
    pub fn interface_cycles(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut next = alloc::vec![usize::MAX; n];
        for e in &self.interface_edges {
            next[e.vertices[0]] = e.vertices[1];
        }
        let mut seen = alloc::vec![false; n];
        let mut cycles = Vec::new();
        for e in &self.interface_edges {
            let start = e.vertices[0];
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut v = start;
            while !seen[v] && v != usize::MAX {
                seen[v] = true;
                cycle.push(v);
                v = next[v];
            }
            cycles.push(cycle);
        }
        cycles
    }

    pub fn quality(&self, curve: &InterfaceCurve) -> MeshQuality {
        let table = self.edge_table();
        let mut min_area = f64::INFINITY;
        let mut min_angle: f64 = 180.0;
        for t in 0..self.triangles.len() {
            min_area = min_area.min(self.area(t));
            let [a, b, c] = self.corners(t);
            for (p, q, r) in [(a, b, c), (b, c, a), (c, a, b)] {
                let u = (q - p).normalized();
                let v = (r - p).normalized();
                min_angle = min_angle.min(acos_deg(u.dot(v)));
            }
        }
        let max_edge = table
            .edges
            .iter()
            .map(|e| self.vertices[e[0]].distance(self.vertices[e[1]]))
            .fold(0.0, f64::max);
        let cycles = self.interface_cycles();
        let interface_area = cycles
            .iter()
            .map(|c| {
                let m = c.len();
                0.5 * (0..m)
                    .map(|i| self.vertices[c[i]].cross(self.vertices[c[(i + 1) % m]]))
                    .sum::<f64>()
            })
            .sum();
        let interface_deviation = self
            .interface_edges
            .iter()
            .map(|e| {
                let mid = (self.vertices[e.vertices[0]] + self.vertices[e.vertices[1]]) * 0.5;
                curve.signed_distance(mid).abs()
            })
            .fold(0.0, f64::max);
        MeshQuality {
            vertices: self.vertices.len(),
            edges: table.edges.len(),
            triangles: self.triangles.len(),
            euler_characteristic: self.vertices.len() as i64 - table.edges.len() as i64
                + self.triangles.len() as i64,
            min_area,
            min_angle_degrees: min_angle,
            max_edge,
            interface_edges: self.interface_edges.len(),
            interface_cycles: cycles.len(),
            interface_area,
            interface_deviation,
        }
    }

    /// Checks conformity, orientation and the interface cycle.
    pub fn validate(&self) -> Result<()> {
        let table = self.edge_table();
        for t in 0..self.triangles.len() {
            if !(self.area(t) > 1e-14) {
                return Err(Error::Meshing(alloc::format!(
                    "triangle {t} is degenerate or clockwise"
                )));
            }
        }
        for (k, adj) in table.adjacent.iter().enumerate() {
            if adj[1].is_none() {
                let [a, b] = table.edges[k];
                if !(self.boundary[a] && self.boundary[b]) {
                    return Err(Error::Meshing(alloc::format!(
                        "edge ({a}, {b}) has one triangle but is not on the boundary"
                    )));
                }
            }
        }
        let chi =
            self.vertices.len() as i64 - table.edges.len() as i64 + self.triangles.len() as i64;
        if chi != 1 {
            return Err(Error::Meshing(alloc::format!(
                "Euler characteristic {chi}, expected 1"
            )));
        }
        let cycles = self.interface_cycles();
        if cycles.len() != 1 || cycles[0].len() != self.interface_edges.len() {
            return Err(Error::Meshing(
                "interface edges do not form a single closed cycle".to_string(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn edge_table(triangles: &[[usize; 3]]) -> EdgeTable {
    let mut keys: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            keys.push((a.min(b), a.max(b), t, k));
        }
    }
    keys.sort_unstable();
    let mut edges = Vec::new();
    let mut adjacent: Vec<[Option<usize>; 2]> = Vec::new();
    let mut triangle_edges = alloc::vec![[0usize; 3]; triangles.len()];
    let mut i = 0;
    while i < keys.len() {
        let (a, b, t, k) = keys[i];
        let id = edges.len();
        edges.push([a, b]);
        let mut adj = [Some(t), None];
        triangle_edges[t][k] = id;
        let mut j = i + 1;
        while j < keys.len() && keys[j].0 == a && keys[j].1 == b {
            let (_, _, t2, k2) = keys[j];
            adj[1] = Some(t2);
            triangle_edges[t2][k2] = id;
            j += 1;
        }
        adjacent.push(adj);
        i = j;
    }
    EdgeTable {
        edges,
        adjacent,
        triangle_edges,
    }
}

/// Fitted mesh of `domain` with `curve` resolved by mesh edges.
pub fn triangulate(domain: &Domain, curve: &InterfaceCurve, h: f64) -> Result<TriangleMesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "mesh size must be positive, got {h}"
        )));
    }
    let margin = domain.interface_margin(curve)?;
    if margin < 1.5 * h {
        return Err(Error::Meshing(alloc::format!(
            "mesh size {h} is too coarse to separate the interface from the boundary (gap {margin})"
        )));
    }
    let mesh = match (&domain.kind, curve.kind()) {
        (
            DomainKind::Disk { center, radius },
            CurveKind::Circle {
                center: c,
                radius: rho,
            },
        ) if center.distance(*c) <= 1e-12 * radius => ring_mesh(domain, *center, *radius, *rho, h),
        _ => constrained_mesh(domain, curve, h)?,
    };
    let mut mesh = mesh;
    assign_labels(&mut mesh, curve);
    mesh.interface_edges = interface_edges(&mesh)?;
    mesh.validate()?;
    Ok(mesh)
}

fn ring_count(r: f64, h: f64) -> usize {
    8 * (round(TAU * r / (8.0 * h)) as usize).max(1)
}

fn ring_mesh(domain: &Domain, center: Point, radius: f64, rho: f64, h: f64) -> TriangleMesh {
    let m_in = (round(rho / h) as usize).max(1);
    let m_out = (round((radius - rho) / h) as usize).max(1);
    let mut radii = Vec::with_capacity(m_in + m_out);
    for k in 1..=m_in {
        radii.push(rho * k as f64 / m_in as f64);
    }
    for k in 1..=m_out {
        radii.push(rho + (radius - rho) * k as f64 / m_out as f64);
    }
    radii[m_in - 1] = rho;
    let last = radii.len() - 1;
    radii[last] = radius;
    let mut counts: Vec<usize> = radii.iter().map(|&r| ring_count(r, h)).collect();
    let min_boundary = domain.boundary_resolution.div_ceil(8) * 8;
    counts[last] = counts[last].max(min_boundary);
    for k in (0..last).rev() {
        counts[k] = counts[k].min(counts[k + 1]);
    }

    let mut vertices = alloc::vec![center];
    let mut starts = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        starts.push(vertices.len());
        let n = counts[k];
        for i in 0..n {
            let a = TAU * i as f64 / n as f64;
            vertices.push(center + Vec2::new(r * cos(a), r * sin(a)));
        }
    }
    let mut triangles = Vec::new();
    let n1 = counts[0];
    for i in 0..n1 {
        triangles.push([0, starts[0] + i, starts[0] + (i + 1) % n1]);
    }
    for k in 0..last {
        let (na, nb) = (counts[k], counts[k + 1]);
        let (sa, sb) = (starts[k], starts[k + 1]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            // Advance on the ring whose next vertex comes first in angle,
            // comparing (i+1)/na with (j+1)/nb exactly.
            let inner_first = j == nb || (i < na && (i + 1) * nb <= (j + 1) * na);
            if inner_first {
                triangles.push([sa + i % na, sb + j % nb, sa + (i + 1) % na]);
                i += 1;
            } else {
                triangles.push([sa + i % na, sb + j % nb, sb + (j + 1) % nb]);
                j += 1;
            }
        }
    }
    for t in &mut triangles {
        orient_ccw(&vertices, t);
    }
    let nv = vertices.len();
    let mut boundary = alloc::vec![false; nv];
    let mut on_interface = alloc::vec![false; nv];
    for i in 0..counts[last] {
        boundary[starts[last] + i] = true;
    }
    for i in 0..counts[m_in - 1] {
        on_interface[starts[m_in - 1] + i] = true;
    }
    TriangleMesh {
        vertices,
        triangles,
        boundary,
        on_interface,
        interface_edges: Vec::new(),
        labels: Vec::new(),
        h,
        domain: domain.clone(),
    }
}

fn orient_ccw(vertices: &[Point], t: &mut [usize; 3]) {
    let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    if (b - a).cross(c - a) < 0.0 {
        t.swap(1, 2);
    }
}

fn constrained_mesh(domain: &Domain, curve: &InterfaceCurve, h: f64) -> Result<TriangleMesh> {
    let mut points: Vec<Point> = Vec::new();
    let mut boundary = Vec::new();
    let mut on_interface = Vec::new();

    // Boundary samples.
    let nb = match domain.kind {
        DomainKind::Disk { radius, .. } => {
            (ceil(TAU * radius / h) as usize).max(domain.boundary_resolution)
        }
        DomainKind::Rectangle { .. } => 0,
    };
    match domain.kind {
        DomainKind::Disk { .. } => {
            for k in 0..nb {
                points.push(domain.boundary_point(k as f64 / nb as f64));
            }
        }
        DomainKind::Rectangle { min, max } => {
            let corners = [min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)];
            for s in 0..4 {
                let (a, b) = (corners[s], corners[(s + 1) % 4]);
                let k =
                    (ceil(a.distance(b) / h) as usize).max(domain.boundary_resolution.div_ceil(4));
                for m in 0..k {
                    points.push(a.lerp(b, m as f64 / k as f64));
                }
            }
        }
    }
    boundary.resize(points.len(), true);
    on_interface.resize(points.len(), false);

    // Background points, minus a band around the interface.
    let band = 0.6 * h;
    let keep =
        |p: Point| domain.boundary_distance(p) > 0.5 * h && curve.signed_distance(p).abs() >= band;
    match domain.kind {
        DomainKind::Disk { center, radius } => {
            let m = (round(radius / h) as usize).max(1);
            for k in 1..m {
                let r = radius * (m - k) as f64 / m as f64;
                let n = (round(TAU * r / h) as usize).max(6);
                let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
                for i in 0..n {
                    let a = TAU * (i as f64 + shift) / n as f64;
                    let p = center + Vec2::new(r * cos(a), r * sin(a));
                    if keep(p) {
                        points.push(p);
                    }
                }
            }
            if keep(center) {
                points.push(center);
            }
        }
        DomainKind::Rectangle { min, max } => {
            let dy = h * sqrt(3.0) / 2.0;
            let rows = ceil((max.y - min.y) / dy) as usize;
            for r in 1..rows {
                let y = min.y + r as f64 * dy;
                let shift = if r % 2 == 1 { 0.5 * h } else { 0.0 };
                let mut x = min.x + shift;
                while x < max.x {
                    let p = Point::new(x, y);
                    if keep(p) {
                        points.push(p);
                    }
                    x += h;
                }
            }
        }
    }
    boundary.resize(points.len(), false);
    on_interface.resize(points.len(), false);

    // Interface samples joined by constraint edges.
    let samples = curve.sample_points(h)?;
    let first = points.len();
    let ns = samples.len();
    for s in &samples {
        points.push(s.point);
    }
    boundary.resize(points.len(), false);
    on_interface.resize(points.len(), true);
    let constraints: Vec<[usize; 2]> = (0..ns).map(|i| [first + i, first + (i + 1) % ns]).collect();

    let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, constraints)
        .map_err(|e| Error::Meshing(alloc::format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != points.len() {
        return Err(Error::Meshing(
            "duplicate mesh points were merged".to_string(),
        ));
    }
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices();
        let mut t = [a.fix().index(), b.fix().index(), c.fix().index()];
        orient_ccw(&points, &mut t);
        triangles.push(t);
    }
    Ok(TriangleMesh {
        vertices: points,
        triangles,
        boundary,
        on_interface,
        interface_edges: Vec::new(),
        labels: Vec::new(),
        h,
        domain: domain.clone(),
    })
}

/// Labels by the signed distance of centroids. Near-ties are broken by
/// moving the centroid `10⁻⁹` toward the vertex farthest from `Γ`.
fn assign_labels(mesh: &mut TriangleMesh, curve: &InterfaceCurve) {
    mesh.labels = (0..mesh.triangles.len())
        .map(|t| {
            let c = mesh.centroid(t);
            let mut d = curve.signed_distance(c);
            if d.abs() < 1e-12 {
                let far = mesh
                    .corners(t)
                    .into_iter()
                    .max_by(|p, q| {
                        curve
                            .signed_distance(*p)
                            .abs()
                            .total_cmp(&curve.signed_distance(*q).abs())
                    })
                    .unwrap();
                d = curve.signed_distance(c + (far - c).normalized() * 1e-9);
            }
            if d < 0.0 {
                Side::Inside
            } else {
                Side::Outside
            }
        })
        .collect();
}

fn interface_edges(mesh: &TriangleMesh) -> Result<Vec<InterfaceEdge>> {
    let table = mesh.edge_table();
    let mut out = Vec::new();
    for (k, adj) in table.adjacent.iter().enumerate() {
        let (Some(t0), Some(t1)) = (adj[0], adj[1]) else {
            continue;
        };
        if mesh.labels[t0] == mesh.labels[t1] {
            continue;
        }
        let (inside, outside) = if mesh.labels[t0] == Side::Inside {
            (t0, t1)
        } else {
            (t1, t0)
        };
        let [a, b] = table.edges[k];
        if !(mesh.on_interface[a] && mesh.on_interface[b]) {
            return Err(Error::Meshing(alloc::format!(
                "labels change across edge ({a}, {b}) off the interface"
            )));
        }
        // Orientation as in the inside triangle, which is counterclockwise.
        let tri = mesh.triangles[inside];
        let pos = tri.iter().position(|&v| v == a).unwrap();
        let (p, q) = if tri[(pos + 1) % 3] == b {
            (a, b)
        } else {
            (b, a)
        };
        let e = mesh.vertices[q] - mesh.vertices[p];
        out.push(InterfaceEdge {
            vertices: [p, q],
            normal: Vec2::new(e.y, -e.x).normalized(),
            inside,
            outside,
        });
    }
    if out.is_empty() {
        return Err(Error::Meshing(
            "no element lies inside the interface".to_string(),
        ));
    }
    Ok(out)
}

/// Red refinement: every triangle splits into four. Midpoints of interface
/// edges are moved to the nearest point of `Γ` and midpoints of boundary
/// edges to `∂Ω`; labels are inherited.
pub fn refine(mesh: &TriangleMesh, curve: &InterfaceCurve) -> Result<TriangleMesh> {
    let table = mesh.edge_table();
    let mut vertices = mesh.vertices.clone();
    let mut boundary = mesh.boundary.clone();
    let mut on_interface = mesh.on_interface.clone();
    let mut interface_edge = alloc::vec![false; table.edges.len()];
    for e in &mesh.interface_edges {
        let (a, b) = (
            e.vertices[0].min(e.vertices[1]),
            e.vertices[0].max(e.vertices[1]),
        );
        let t = mesh.triangles[e.inside];
        let k = (0..3).find(|&k| {
            let (p, q) = (t[k], t[(k + 1) % 3]);
            (p.min(q), p.max(q)) == (a, b)
        });
        if let Some(k) = k {
            interface_edge[table.triangle_edges[e.inside][k]] = true;
        }
    }
    let mut midpoint = Vec::with_capacity(table.edges.len());
    for (k, &[a, b]) in table.edges.iter().enumerate() {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let mid = (pa + pb) * 0.5;
        let len = pa.distance(pb);
        let on_boundary = table.adjacent[k][1].is_none();
        let p = if interface_edge[k] {
            let q = curve.closest(mid).point;
            if !(q.is_finite() && q.distance(mid) <= 0.5 * len) {
                return Err(Error::Meshing(alloc::format!(
                    "projection of edge ({a}, {b}) onto the interface failed"
                )));
            }
            q
        } else if on_boundary {
            mesh.domain.project_to_boundary(mid)
        } else {
            mid
        };
        midpoint.push(vertices.len());
        vertices.push(p);
        boundary.push(on_boundary);
        on_interface.push(interface_edge[k]);
    }
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    let mut labels = Vec::with_capacity(4 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [e0, e1, e2] = table.triangle_edges[t];
        let (m01, m12, m20) = (midpoint[e0], midpoint[e1], midpoint[e2]);
        let [a, b, c] = *tri;
        for child in [[a, m01, m20], [m01, b, m12], [m20, m12, c], [m01, m12, m20]] {
            triangles.push(child);
            labels.push(mesh.labels[t]);
        }
    }
    let mut out = TriangleMesh {
        vertices,
        triangles,
        boundary,
        on_interface,
        interface_edges: Vec::new(),
        labels,
        h: 0.5 * mesh.h,
        domain: mesh.domain.clone(),
    };
    out.interface_edges = interface_edges(&out)?;
    for t in 0..out.triangles.len() {
        if !(out.area(t) > 1e-14) {
            return Err(Error::Meshing(alloc::format!(
                "refinement produced a degenerate triangle {t}"
            )));
        }
    }
    Ok(out)
}
