//! Scenario configuration.
//!
//! A scenario is one JSON document. Unknown keys are rejected everywhere and
//! every error names the key path it concerns.

use std::fmt;
use std::path::{Path, PathBuf};

use layerfem_core::fields::{CoefficientField, DensityField};
use layerfem_core::geometry::{Domain, InterfaceCurve};
use layerfem_core::Point;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::formats::{CurveDocument, CurveKindName};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary_resolution: Option<usize>,
    },
    Rectangle {
        min: [f64; 2],
        max: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        boundary_resolution: Option<usize>,
    },
}

/// `"identity"`, `"meyers:<mu>"` or `"perturbation:<amp>,<freq>"`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CoefficientConfig {
    #[default]
    Identity,
    Meyers {
        mu: f64,
    },
    Perturbation {
        amplitude: f64,
        frequency: f64,
    },
}

impl TryFrom<String> for CoefficientConfig {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {t:?} in {s:?}: {e}"))
        };
        match s.split_once(':') {
            None if s == "identity" => Ok(CoefficientConfig::Identity),
            Some(("meyers", mu)) => Ok(CoefficientConfig::Meyers { mu: num(mu)? }),
            Some(("perturbation", rest)) => {
                let (a, f) = rest.split_once(',').ok_or_else(|| format!("expected perturbation:<amp>,<freq>, got {s:?}"))?;
                Ok(CoefficientConfig::Perturbation { amplitude: num(a)?, frequency: num(f)? })
            }
            _ => Err(format!("unknown coefficient {s:?}; expected identity, meyers:<mu> or perturbation:<amp>,<freq>")),
        }
    }
}

impl fmt::Display for CoefficientConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientConfig::Identity => write!(f, "identity"),
            CoefficientConfig::Meyers { mu } => write!(f, "meyers:{mu}"),
            CoefficientConfig::Perturbation {
                amplitude,
                frequency,
            } => write!(f, "perturbation:{amplitude},{frequency}"),
        }
    }
}

impl From<CoefficientConfig> for String {
    fn from(c: CoefficientConfig) -> String {
        c.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Constant {
        value: f64,
    },
    /// `base + amplitude · |x₁ − offset|^exponent`, sampled along the curve.
    Holder {
        base: f64,
        amplitude: f64,
        exponent: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default = "default_density_samples")]
        samples: usize,
    },
    /// Periodic piecewise-linear table in arc length.
    Sampled {
        arclength: Vec<f64>,
        values: Vec<f64>,
        #[serde(default = "one")]
        holder_exponent: f64,
    },
    /// `Q = −(A∇u₂, x)` from the exterior solve with data `−u₁` on `∂Ω`;
    /// recomputed on every mesh level.
    Meyers,
}

fn default_density_samples() -> usize {
    1024
}

fn one() -> f64 {
    1.0
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig::Constant { value: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    Jump,
    Theta,
    Taylor,
    Norms,
    Blowup,
    Meyers,
    Identity,
    #[serde(rename = "maxprinciple")]
    MaxPrinciple,
    Growth,
    Approximation,
}

impl Verification {
    pub fn name(self) -> &'static str {
        match self {
            Verification::Jump => "jump",
            Verification::Theta => "theta",
            Verification::Taylor => "taylor",
            Verification::Norms => "norms",
            Verification::Blowup => "blowup",
            Verification::Meyers => "meyers",
            Verification::Identity => "identity",
            Verification::MaxPrinciple => "maxprinciple",
            Verification::Growth => "growth",
            Verification::Approximation => "approximation",
        }
    }

    /// Whether the verification needs the interface problem solved on
    /// every mesh level.
    pub fn needs_solutions(self) -> bool {
        matches!(
            self,
            Verification::Jump
                | Verification::Theta
                | Verification::Taylor
                | Verification::Norms
                | Verification::Blowup
        )
    }
}

/// Pass/fail thresholds and probe parameters of the verifications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on the mean relative normal-jump error at the finest level.
    pub jump_mean_relative: f64,
    pub theta_relative: f64,
    pub theta_radii: Vec<f64>,
    pub taylor_relative: f64,
    pub taylor_radius: f64,
    /// Number of interface points probed by `theta` and `taylor`.
    pub probe_points: usize,
    pub norms_p_grid: Vec<f64>,
    /// Bounds on relative differences between consecutive levels.
    pub l2_cauchy: f64,
    pub linf_cauchy: f64,
    /// Decreasing shell radii for the blow-up fit.
    pub blowup_radii: Vec<f64>,
    pub meyers_p_grid: Vec<f64>,
    /// Allowed distance between the measured and predicted threshold.
    pub meyers_window: f64,
    pub identity_grids: Vec<usize>,
    pub identity_residual: f64,
    /// Minimum least-squares order of the residual in the grid spacing.
    pub identity_order: f64,
    pub identity_tube: f64,
    /// Half-width of the test function's support around the interface.
    pub identity_support: f64,
    pub max_principle: f64,
    pub growth_stability: f64,
    pub approximation_levels: Vec<u32>,
    pub approximation_perimeter: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            jump_mean_relative: 0.05,
            theta_relative: 0.05,
            theta_radii: vec![0.1, 0.15, 0.2, 0.25],
            taylor_relative: 0.10,
            taylor_radius: 0.1,
            probe_points: 8,
            norms_p_grid: vec![2.0, 4.0, 8.0],
            l2_cauchy: 0.05,
            linf_cauchy: 0.03,
            blowup_radii: vec![0.2, 0.1, 0.05, 0.025],
            meyers_p_grid: (4..=16).map(|k| 0.5 * k as f64).collect(),
            meyers_window: 0.5,
            identity_grids: vec![100, 200, 400],
            identity_residual: 1e-4,
            identity_order: 2.0,
            identity_tube: 0.3,
            identity_support: 0.25,
            max_principle: 1e-8,
            growth_stability: 0.02,
            approximation_levels: vec![8, 16, 32, 64],
            approximation_perimeter: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub domain: DomainConfig,
    pub interface: CurveDocument,
    #[serde(default)]
    pub coefficient: CoefficientConfig,
    #[serde(default)]
    pub density: DensityConfig,
    /// Mesh size of the coarsest level.
    pub mesh_size: f64,
    /// Number of meshes; each level after the first is a uniform refinement
    /// of the previous one.
    #[serde(default = "one_level")]
    pub refinement_levels: usize,
    pub verifications: Vec<Verification>,
    /// Corner used by `blowup`; defaults to the first polygon vertex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corner: Option<[f64; 2]>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn one_level() -> usize {
    1
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        CliError::config(
            if key == "." { "$".to_string() } else { key },
            e.into_inner().to_string(),
        )
    })?;
    config.validate()?;
    Ok(config)
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(
            key,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl ScenarioConfig {
    /// Cross-field rules that the schema cannot express.
    pub fn validate(&self) -> Result<()> {
        positive("mesh_size", self.mesh_size)?;
        if !(1..=6).contains(&self.refinement_levels) {
            return Err(CliError::config(
                "refinement_levels",
                format!("must lie in 1..=6, got {}", self.refinement_levels),
            ));
        }
        if self.verifications.is_empty() {
            return Err(CliError::config(
                "verifications",
                "at least one verification is required",
            ));
        }
        for (i, v) in self.verifications.iter().enumerate() {
            if self.verifications[..i].contains(v) {
                return Err(CliError::config(
                    format!("verifications[{i}]"),
                    format!("{} is listed twice", v.name()),
                ));
            }
        }
        self.build_domain()?;
        let curve = self.build_curve()?;
        self.build_coefficient()?;
        let is_meyers = matches!(self.coefficient, CoefficientConfig::Meyers { .. });
        let origin_circle = self.interface.kind == CurveKindName::Circle
            && self.interface.params.center.unwrap_or([0.0, 0.0]) == [0.0, 0.0];
        let origin_disk = matches!(
            self.domain,
            DomainConfig::Disk {
                center: [0.0, 0.0],
                ..
            }
        );
        if let DensityConfig::Meyers = self.density {
            if !is_meyers {
                return Err(CliError::config(
                    "density",
                    "the meyers density requires a meyers coefficient",
                ));
            }
            if !(origin_circle && origin_disk) {
                return Err(CliError::config(
                    "density",
                    "the meyers density needs a circle and a disk centred at the origin",
                ));
            }
        }
        self.build_density(&curve)?;
        let t = &self.tolerances;
        for (i, v) in self.verifications.iter().enumerate() {
            let key = format!("verifications[{i}]");
            match v {
                Verification::Meyers => {
                    if !is_meyers {
                        return Err(CliError::config(
                            key,
                            "the meyers suite requires a meyers coefficient",
                        ));
                    }
                    if !(origin_circle && origin_disk) {
                        return Err(CliError::config(
                            key,
                            "the meyers suite needs a circle and a disk centred at the origin",
                        ));
                    }
                    if self.refinement_levels < 3 {
                        return Err(CliError::config(
                            "refinement_levels",
                            "the meyers suite needs at least 3 levels",
                        ));
                    }
                }
                Verification::Blowup => {
                    if self.corner.is_none() && !curve.has_corners() {
                        return Err(CliError::config(
                            key,
                            "blowup needs an interface with corners or an explicit `corner`",
                        ));
                    }
                }
                Verification::Identity => {
                    if curve.has_corners() {
                        return Err(CliError::config(
                            key,
                            "the distributional identity needs an interface without corners",
                        ));
                    }
                    if t.identity_support >= t.identity_tube {
                        return Err(CliError::config(
                            "tolerances.identity_support",
                            "must be smaller than identity_tube",
                        ));
                    }
                }
                _ => {}
            }
        }
        self.validate_tolerances()
    }

    fn validate_tolerances(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [
            ("jump_mean_relative", t.jump_mean_relative),
            ("theta_relative", t.theta_relative),
            ("taylor_relative", t.taylor_relative),
            ("taylor_radius", t.taylor_radius),
            ("l2_cauchy", t.l2_cauchy),
            ("linf_cauchy", t.linf_cauchy),
            ("meyers_window", t.meyers_window),
            ("identity_residual", t.identity_residual),
            ("identity_order", t.identity_order),
            ("identity_tube", t.identity_tube),
            ("identity_support", t.identity_support),
            ("max_principle", t.max_principle),
            ("growth_stability", t.growth_stability),
            ("approximation_perimeter", t.approximation_perimeter),
        ] {
            positive(&format!("tolerances.{name}"), v)?;
        }
        for (name, list) in [
            ("theta_radii", &t.theta_radii),
            ("norms_p_grid", &t.norms_p_grid),
            ("blowup_radii", &t.blowup_radii),
            ("meyers_p_grid", &t.meyers_p_grid),
        ] {
            if list.is_empty() {
                return Err(CliError::config(
                    format!("tolerances.{name}"),
                    "must not be empty",
                ));
            }
            for (i, v) in list.iter().enumerate() {
                positive(&format!("tolerances.{name}[{i}]"), *v)?;
            }
        }
        if t.probe_points == 0 {
            return Err(CliError::config(
                "tolerances.probe_points",
                "must be positive",
            ));
        }
        if t.identity_grids.len() < 2 || t.identity_grids.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config(
                "tolerances.identity_grids",
                "needs at least two increasing grid sizes",
            ));
        }
        if t.approximation_levels.is_empty()
            || t.approximation_levels.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(CliError::config(
                "tolerances.approximation_levels",
                "needs increasing indices",
            ));
        }
        Ok(())
    }

    pub fn build_domain(&self) -> Result<Domain> {
        let (domain, res) = match &self.domain {
            DomainConfig::Disk {
                center,
                radius,
                boundary_resolution,
            } => (
                Domain::disk(Point::new(center[0], center[1]), *radius),
                boundary_resolution,
            ),
            DomainConfig::Rectangle {
                min,
                max,
                boundary_resolution,
            } => (
                Domain::rectangle(Point::new(min[0], min[1]), Point::new(max[0], max[1])),
                boundary_resolution,
            ),
        };
        let mut domain = domain.map_err(|e| CliError::config("domain", e.to_string()))?;
        if let Some(n) = res {
            domain = domain
                .with_boundary_resolution(*n)
                .map_err(|e| CliError::config("domain.boundary_resolution", e.to_string()))?;
        }
        Ok(domain)
    }

    pub fn build_curve(&self) -> Result<InterfaceCurve> {
        let curve = self.interface.to_curve("interface")?;
        let domain = self.build_domain()?;
        domain
            .interface_margin(&curve)
            .map_err(|e| CliError::config("interface", e.to_string()))?;
        Ok(curve)
    }

    pub fn build_coefficient(&self) -> Result<CoefficientField> {
        match self.coefficient {
            CoefficientConfig::Identity => Ok(CoefficientField::Identity),
            CoefficientConfig::Meyers { mu } => CoefficientField::meyers(mu),
            CoefficientConfig::Perturbation {
                amplitude,
                frequency,
            } => CoefficientField::smooth_perturbation(amplitude, frequency),
        }
        .map_err(|e| CliError::config("coefficient", e.to_string()))
    }

    /// Density for the specs that do not depend on a mesh; `None` for the
    /// meyers density.
    pub fn build_density(&self, curve: &InterfaceCurve) -> Result<Option<DensityField>> {
        let d = match &self.density {
            DensityConfig::Constant { value } => {
                if !value.is_finite() {
                    return Err(CliError::config("density.value", "must be finite"));
                }
                DensityField::Constant(*value)
            }
            DensityConfig::Holder {
                base,
                amplitude,
                exponent,
                offset,
                samples,
            } => {
                if !(*exponent > 0.0 && *exponent <= 1.0) {
                    return Err(CliError::config(
                        "density.exponent",
                        format!("must lie in (0, 1], got {exponent}"),
                    ));
                }
                DensityField::from_fn(curve, *samples, *exponent, |p| {
                    base + amplitude * (p.x - offset).abs().powf(*exponent)
                })
                .map_err(|e| CliError::config("density", e.to_string()))?
            }
            DensityConfig::Sampled {
                arclength,
                values,
                holder_exponent,
            } => DensityField::sampled(
                arclength.clone(),
                values.clone(),
                curve.perimeter(),
                *holder_exponent,
            )
            .map_err(|e| CliError::config("density", e.to_string()))?,
            DensityConfig::Meyers => return Ok(None),
        };
        Ok(Some(d))
    }
}
