//! Point evaluation of the closed-form reference solutions.

use layerfem_core::fields::DensityField;
use layerfem_core::geometry::InterfaceCurve;
use layerfem_core::potentials::{
    green_disk, green_solution, meyers_u1, radial_oracle, segment_kernel_integrals,
    triangle_gradient_oracle,
};
use layerfem_core::Point;
use serde_json::{json, Value};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleName {
    /// Green's function of the disk: `R x1 x2 y1 y2`.
    Green,
    /// Single layer solution for a concentric circle with constant density:
    /// `R rho q x1 x2`.
    GreenSolution,
    /// Concentric radial solution at radius r: `R rho q r`.
    Radial,
    /// Segment kernel integrals I1, I2: `x1 x2`.
    Segment,
    /// Dominant part of the first partial derivative near the triangle
    /// corner: `x1 x2`.
    TriangleGradient,
    /// Singular solution `x |x|^(mu-1)` and its gradient: `mu x1 x2`.
    MeyersU1,
}

impl OracleName {
    fn arity(self) -> usize {
        match self {
            OracleName::Green | OracleName::GreenSolution => 5,
            OracleName::Radial => 4,
            OracleName::Segment | OracleName::TriangleGradient => 2,
            OracleName::MeyersU1 => 3,
        }
    }
}

pub fn evaluate(name: OracleName, args: &[f64]) -> Result<Value> {
    if args.len() != name.arity() {
        return Err(CliError::config(
            "args",
            format!(
                "{name:?} takes {} numbers, got {}",
                name.arity(),
                args.len()
            ),
        ));
    }
    let a = args;
    Ok(match name {
        OracleName::Green => {
            json!({"value": green_disk(a[0], Point::new(a[1], a[2]), Point::new(a[3], a[4]))?})
        }
        OracleName::GreenSolution => {
            let circle = InterfaceCurve::circle(Point::ZERO, a[1])?;
            json!({"value": green_solution(a[0], &circle, &DensityField::Constant(a[2]), Point::new(a[3], a[4]))?})
        }
        OracleName::Radial => {
            let o = radial_oracle(a[0], a[1], a[2])?;
            json!({"value": o.value(a[3]), "derivative": o.derivative(a[3])})
        }
        OracleName::Segment => {
            let s = segment_kernel_integrals(Point::new(a[0], a[1]))?;
            json!({"i1": s.i1, "i2": s.i2})
        }
        OracleName::TriangleGradient => {
            json!({"value": triangle_gradient_oracle(Point::new(a[0], a[1]))?})
        }
        OracleName::MeyersU1 => {
            let (v, g) = meyers_u1(a[0], Point::new(a[1], a[2]))?;
            json!({"value": v, "gradient": [g.x, g.y]})
        }
    })
}
