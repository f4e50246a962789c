//! Domains `Ω`, interface curves `Γ = ∂Ω'` and sampled geometric constants.

mod curve;
mod domain;
mod polygon;
mod smoothing;
mod spline;

pub use curve::{
    perimeter_bound, ChordArcEstimate, ClosestPoint, CurveKind, CurvePoint, CurveSample,
    GrowthEstimate, InterfaceCurve, Orientation, QuadratureNode, QuadratureRule1D, Regularity,
    SmoothedCurve,
};
pub use domain::{Domain, DomainKind};
pub use polygon::Polygon;
pub use smoothing::Mollifier;
pub use spline::HermiteSpline;
