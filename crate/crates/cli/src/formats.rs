//! File formats: curve documents, the plain-text mesh dump and CSV tables.
//!
//! Floats are written with `Display`, which prints the shortest string that
//! parses back to the same `f64`, so every table round-trips exactly.

use std::io::{self, BufRead, Write};

use layerfem_core::analysis::TraceReport;
use layerfem_core::fem::SolutionField;
use layerfem_core::geometry::{CurveKind, InterfaceCurve, Regularity};
use layerfem_core::mesh::{Side, TriangleMesh};
use layerfem_core::{Point, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKindName {
    Circle,
    /// The fixed right triangle with vertices `(0,0), (½,0), (0,½)`.
    Triangle,
    Polygon,
    Ellipse,
    /// Closed Hermite spline through `samples`.
    Parametric,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Ellipse semi-axis along x.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Ellipse semi-axis along y.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Number of spline samples for an ellipse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Tangents at the parametric samples; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangents: Option<Vec<[f64; 2]>>,
    /// Marks a parametric curve as `C^{1,α}` instead of smooth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_exponent: Option<f64>,
}

/// JSON form of an interface curve: `{kind, params, samples: [[x, y], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDocument {
    pub kind: CurveKindName,
    #[serde(default)]
    pub params: CurveParams,
    #[serde(default)]
    pub samples: Vec<[f64; 2]>,
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

fn arr(p: Point) -> [f64; 2] {
    [p.x, p.y]
}

impl CurveDocument {
    /// Builds the curve. `key` prefixes error paths, e.g. `interface`.
    pub fn to_curve(&self, key: &str) -> Result<InterfaceCurve> {
        let p = &self.params;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                CliError::config(
                    format!("{key}.params.{name}"),
                    format!("required for kind {:?}", self.kind),
                )
            })
        };
        let wrap = |field: &str, e: layerfem_core::Error| {
            CliError::config(format!("{key}.{field}"), e.to_string())
        };
        let center = pt(p.center.unwrap_or([0.0, 0.0]));
        match self.kind {
            CurveKindName::Circle => InterfaceCurve::circle(center, need(p.radius, "radius")?)
                .map_err(|e| wrap("params", e)),
            CurveKindName::Triangle => {
                if !self.samples.is_empty() || *p != CurveParams::default() {
                    return Err(CliError::config(
                        format!("{key}.params"),
                        "the triangle takes no params or samples",
                    ));
                }
                Ok(InterfaceCurve::triangle())
            }
            CurveKindName::Polygon => {
                InterfaceCurve::polygon(self.samples.iter().copied().map(pt).collect())
                    .map_err(|e| wrap("samples", e))
            }
            CurveKindName::Ellipse => {
                let n = p.resolution.unwrap_or(256);
                InterfaceCurve::ellipse(center, need(p.a, "a")?, need(p.b, "b")?, n)
                    .map_err(|e| wrap("params", e))
            }
            CurveKindName::Parametric => {
                let tangents = p
                    .tangents
                    .as_ref()
                    .map(|t| t.iter().map(|v| Vec2::new(v[0], v[1])).collect::<Vec<_>>());
                let regularity = match p.holder_exponent {
                    Some(a) => Regularity::C1Alpha(a),
                    None => Regularity::Smooth,
                };
                InterfaceCurve::parametric(
                    self.samples.iter().copied().map(pt).collect(),
                    tangents,
                    regularity,
                )
                .map_err(|e| wrap("samples", e))
            }
        }
    }

    /// Document for an existing curve. Ellipses and level-set curves are
    /// written as parametric sample tables.
    pub fn from_curve(curve: &InterfaceCurve) -> Self {
        let spline_doc = |s: &layerfem_core::geometry::HermiteSpline| {
            let holder_exponent = match curve.regularity() {
                Regularity::C1Alpha(a) => Some(a),
                _ => None,
            };
            CurveDocument {
                kind: CurveKindName::Parametric,
                params: CurveParams {
                    tangents: Some(s.tangents().iter().map(|t| [t.x, t.y]).collect()),
                    holder_exponent,
                    ..CurveParams::default()
                },
                samples: s.points().iter().copied().map(arr).collect(),
            }
        };
        match curve.kind() {
            CurveKind::Circle { center, radius } => CurveDocument {
                kind: CurveKindName::Circle,
                params: CurveParams {
                    center: Some(arr(*center)),
                    radius: Some(*radius),
                    ..CurveParams::default()
                },
                samples: Vec::new(),
            },
            CurveKind::Polygon(poly) => CurveDocument {
                kind: CurveKindName::Polygon,
                params: CurveParams::default(),
                samples: poly.vertices().iter().copied().map(arr).collect(),
            },
            CurveKind::Parametric(s) => spline_doc(s),
            CurveKind::LevelSetSmoothed(s) => spline_doc(&s.trace),
        }
    }
}

pub fn read_curve(path: &std::path::Path) -> Result<InterfaceCurve> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let doc: CurveDocument = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::config(e.path().to_string(), e.inner().to_string()))?;
    doc.to_curve("$")
}

pub fn write_curve(path: &std::path::Path, curve: &InterfaceCurve) -> Result<()> {
    let text = serde_json::to_string_pretty(&CurveDocument::from_curve(curve))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Plain-text mesh: a `vertices N / triangles M` header, then `N` lines
/// `x y` and `M` lines `a b c` of zero-based counterclockwise indices.
pub fn write_mesh_text(w: &mut impl Write, mesh: &TriangleMesh) -> io::Result<()> {
    writeln!(
        w,
        "vertices {} / triangles {}",
        mesh.vertices.len(),
        mesh.triangles.len()
    )?;
    for p in &mesh.vertices {
        writeln!(w, "{} {}", p.x, p.y)?;
    }
    for [a, b, c] in &mesh.triangles {
        writeln!(w, "{a} {b} {c}")?;
    }
    Ok(())
}

/// Parses the output of [`write_mesh_text`].
pub fn read_mesh_text(r: impl BufRead) -> io::Result<(Vec<Point>, Vec<[usize; 3]>)> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty mesh file".into()))??;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (n, m) = match words.as_slice() {
        ["vertices", n, "/", "triangles", m] => (
            n.parse::<usize>()
                .map_err(|e| bad(format!("vertex count: {e}")))?,
            m.parse::<usize>()
                .map_err(|e| bad(format!("triangle count: {e}")))?,
        ),
        _ => return Err(bad(format!("bad header {header:?}"))),
    };
    let mut vertices = Vec::with_capacity(n);
    let mut triangles = Vec::with_capacity(m);
    for k in 0..n + m {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("file ends at record {k}")))??;
        let f: Vec<&str> = line.split_whitespace().collect();
        if k < n {
            let [x, y] = f.as_slice() else {
                return Err(bad(format!("vertex line {line:?}")));
            };
            let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            vertices.push(Point::new(parse(x)?, parse(y)?));
        } else {
            let [a, b, c] = f.as_slice() else {
                return Err(bad(format!("triangle line {line:?}")));
            };
            let parse = |s: &str| match s.parse::<usize>() {
                Ok(i) if i < n => Ok(i),
                _ => Err(bad(format!("bad vertex index {s:?}"))),
            };
            triangles.push([parse(a)?, parse(b)?, parse(c)?]);
        }
    }
    Ok((vertices, triangles))
}

/// `x,y,u` per vertex.
pub fn write_solution_csv(w: &mut impl Write, u: &SolutionField<'_>) -> io::Result<()> {
    writeln!(w, "x,y,u")?;
    for (p, v) in u.mesh.vertices.iter().zip(&u.values) {
        writeln!(w, "{},{},{}", p.x, p.y, v)?;
    }
    Ok(())
}

/// `cx,cy,gx,gy,label` per triangle: centroid, constant gradient and side.
pub fn write_elements_csv(w: &mut impl Write, u: &SolutionField<'_>) -> io::Result<()> {
    writeln!(w, "cx,cy,gx,gy,label")?;
    for (t, g) in u.gradients.iter().enumerate() {
        let c = u.mesh.centroid(t);
        let label = match u.mesh.labels[t] {
            Side::Inside => "inside",
            Side::Outside => "outside",
        };
        writeln!(w, "{},{},{},{},{label}", c.x, c.y, g.x, g.y)?;
    }
    Ok(())
}

pub fn write_traces_csv(w: &mut impl Write, report: &TraceReport) -> io::Result<()> {
    writeln!(
        w,
        "x,y,nx,ny,grad_in_x,grad_in_y,grad_out_x,grad_out_y,theta_x,theta_y,normal_jump,predicted_jump,tangential_jump"
    )?;
    for r in &report.records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.point.x,
            r.point.y,
            r.normal.x,
            r.normal.y,
            r.grad_inside.x,
            r.grad_inside.y,
            r.grad_outside.x,
            r.grad_outside.y,
            r.theta.x,
            r.theta.y,
            r.normal_jump,
            r.predicted_jump,
            r.tangential_jump
        )?;
    }
    Ok(())
}
