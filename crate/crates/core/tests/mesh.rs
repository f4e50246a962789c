use std::collections::HashMap;
use std::f64::consts::PI;

use layerfem_core::geometry::{Domain, InterfaceCurve};
use layerfem_core::mesh::*;
use layerfem_core::{Error, Point};
use proptest::prelude::*;

fn b2() -> Domain {
    Domain::disk(Point::ZERO, 2.0).unwrap()
}

/// Counts the triangles on each undirected edge, independently of the
/// crate's edge table.
fn edge_counts(mesh: &TriangleMesh) -> HashMap<(usize, usize), Vec<usize>> {
    let mut m: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            m.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    m
}

fn check_fitted(mesh: &TriangleMesh, curve: &InterfaceCurve) {
    let counts = edge_counts(mesh);
    for (&(a, b), tris) in &counts {
        assert!(tris.len() <= 2);
        if tris.len() == 1 {
            assert!(
                mesh.boundary[a] && mesh.boundary[b],
                "interior edge ({a}, {b}) with one triangle"
            );
        }
    }
    let v = mesh.vertices.len() as i64;
    assert_eq!(v - counts.len() as i64 + mesh.triangles.len() as i64, 1);
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.corners(t);
        assert!((b - a).cross(c - a) > 1e-14);
    }
    for e in &mesh.interface_edges {
        let [a, b] = e.vertices;
        let tris = &counts[&(a.min(b), a.max(b))];
        assert_eq!(tris.len(), 2);
        assert_eq!(mesh.labels[e.inside], Side::Inside);
        assert_eq!(mesh.labels[e.outside], Side::Outside);
        assert!(tris.contains(&e.inside) && tris.contains(&e.outside));
        assert!(mesh.on_interface[a] && mesh.on_interface[b]);
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let d = curve.signed_distance(mesh.centroid(t));
        let want = if d < 0.0 { Side::Inside } else { Side::Outside };
        assert_eq!(mesh.labels[t], want, "label of triangle {t} ({tri:?})");
    }
}

#[test]
fn concentric_circle_mesh() {
    let c = InterfaceCurve::circle(Point::ZERO, 1.0).unwrap();
    let m = triangulate(&b2(), &c, 0.1).unwrap();
    check_fitted(&m, &c);
    let q = m.quality(&c);
    assert!(q.interface_deviation <= 0.01);
    assert_eq!(q.interface_cycles, 1);
    assert!(q.interface_area > 0.0);
    assert!(q.min_angle_degrees >= 15.0);
    for (v, p) in m.vertices.iter().enumerate() {
        if m.on_interface[v] {
            assert!(c.signed_distance(*p).abs() < 1e-12);
        }
        if m.boundary[v] {
            assert!((p.norm() - 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn inside_area_converges_to_disk_area() {
    let c = InterfaceCurve::circle(Point::ZERO, 1.0).unwrap();
    let m = triangulate(&b2(), &c, 0.05).unwrap();
    assert!((m.side_area(Side::Inside) - PI).abs() <= 0.01);
    assert!((m.total_area() - 4.0 * PI).abs() <= 0.04);
}

#[test]
fn triangle_corners_are_vertices() {
    let t = InterfaceCurve::triangle();
    let b1 = Domain::disk(Point::ZERO, 1.0).unwrap();
    let m = triangulate(&b1, &t, 0.05).unwrap();
    check_fitted(&m, &t);
    for corner in t.corners() {
        assert!(m.vertices.contains(&corner), "corner {corner:?} missing");
    }
    let q = m.quality(&t);
    assert!(q.interface_deviation < 1e-15);
    assert!((m.side_area(Side::Inside) - 0.125).abs() < 1e-14);
    assert!((q.interface_area - 0.125).abs() < 1e-14);
}

#[test]
fn refinement_quadruples_and_projects() {
    let c = InterfaceCurve::circle(Point::new(0.2, -0.1), 0.7).unwrap();
    let m0 = triangulate(&b2(), &c, 0.15).unwrap();
    let m1 = refine(&m0, &c).unwrap();
    assert_eq!(m1.triangles.len(), 4 * m0.triangles.len());
    assert_eq!(m1.h, 0.5 * m0.h);
    check_fitted(&m1, &c);
    for (v, p) in m1.vertices.iter().enumerate() {
        if m1.on_interface[v] {
            assert!(c.signed_distance(*p).abs() <= 1e-10);
        }
    }
    // Children of a parent lie in the same position block of the new list.
    for t in 0..m0.triangles.len() {
        for k in 0..4 {
            assert_eq!(m1.labels[4 * t + k], m0.labels[t]);
        }
    }
    assert!(m1.quality(&c).interface_deviation < m0.quality(&c).interface_deviation);
}

#[test]
fn min_angle_gate_for_circles() {
    for (center, r, h) in [
        (Point::ZERO, 1.0, 0.2),
        (Point::new(0.3, 0.2), 0.6, 0.2),
        (Point::new(-0.4, 0.1), 1.1, 0.1),
    ] {
        let c = InterfaceCurve::circle(center, r).unwrap();
        let m = triangulate(&b2(), &c, h).unwrap();
        let q = m.quality(&c);
        assert!(
            q.min_angle_degrees >= 15.0,
            "{center:?} r={r}: {}",
            q.min_angle_degrees
        );
        assert!(q.interface_deviation <= h * h);
    }
}

#[test]
fn rectangle_domain_with_ellipse() {
    let d = Domain::rectangle(Point::new(-2.0, -1.5), Point::new(2.0, 1.5)).unwrap();
    let e = InterfaceCurve::ellipse(Point::ZERO, 1.2, 0.7, 128).unwrap();
    let m = triangulate(&d, &e, 0.1).unwrap();
    check_fitted(&m, &e);
    assert!((m.total_area() - 12.0).abs() < 1e-12);
    assert!((m.side_area(Side::Inside) - PI * 1.2 * 0.7).abs() < 0.02);
}

#[test]
fn coarse_mesh_is_rejected() {
    let c = InterfaceCurve::circle(Point::ZERO, 1.8).unwrap();
    assert!(matches!(
        triangulate(&b2(), &c, 0.5),
        Err(Error::Meshing(_))
    ));
    assert!(matches!(
        triangulate(&b2(), &c, -0.1),
        Err(Error::InvalidArgument(_))
    ));
    let outside = InterfaceCurve::circle(Point::new(1.5, 0.0), 1.0).unwrap();
    assert!(triangulate(&b2(), &outside, 0.1).is_err());
}

#[test]
fn locate_finds_containing_triangle() {
    let c = InterfaceCurve::circle(Point::ZERO, 1.0).unwrap();
    let m = triangulate(&b2(), &c, 0.2).unwrap();
    for p in [
        Point::new(0.3, 0.4),
        Point::new(-1.5, 0.2),
        Point::new(0.0, -1.99),
    ] {
        let (t, bary) = m.locate(p).unwrap();
        let [a, b, cc] = m.corners(t);
        let back = a * bary[0] + b * bary[1] + cc * bary[2];
        assert!(back.distance(p) < 1e-12);
        assert!(bary.iter().all(|l| *l >= -1e-12));
    }
    assert!(m.locate(Point::new(3.0, 0.0)).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_circles_mesh_validly(cx in -0.5..0.5f64, cy in -0.5..0.5f64, r in 0.3..1.0f64, h in 0.08..0.2f64) {
        let c = InterfaceCurve::circle(Point::new(cx, cy), r).unwrap();
        let m = triangulate(&b2(), &c, h).unwrap();
        check_fitted(&m, &c);
        let q = m.quality(&c);
        prop_assert!(q.interface_deviation <= h * h);
        prop_assert!((q.interface_area - m.side_area(Side::Inside)).abs() < 1e-10);
        let fine = refine(&m, &c).unwrap();
        prop_assert!(fine.validate().is_ok());
    }
}
