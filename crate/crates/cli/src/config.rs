//! Declarative experiment configs (TOML in, JSON echo out).

use std::path::Path;

use cloakbench_core::cloakmap::{exponents, CloakSpec, CoreMedium, Geometry, SourceSpec, TangentialTrace};
use cloakbench_core::experiments::{geometric, default_rho_grid, TraceMode, DEFAULT_N_AZIMUTH, DEFAULT_N_POLAR};
use cloakbench_core::materials::TensorGrid;
use cloakbench_core::mie::{LayeredSphere, Shell};
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Exponents,
    Solve,
    Sweep,
    SmallInclusion,
    CloakBust,
    ExportTensors,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Exponents => "exponents",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::SmallInclusion => "small-inclusion",
            ExperimentKind::CloakBust => "cloak-bust",
            ExperimentKind::ExportTensors => "export-tensors",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    #[serde(default)]
    pub r: f64,
    #[serde(default = "two")]
    pub s: f64,
    #[serde(default)]
    pub t: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "yes")]
    pub conducting: bool,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}

impl Default for LayerConfig {
    fn default() -> Self {
        Self {
            r: 0.0,
            s: 2.0,
            t: 0.0,
            alpha: 1.0,
            beta: 1.0,
            eta: 1.0,
            conducting: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreConfig {
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default)]
    pub sigma: f64,
}

impl Default for CoreConfig {
    fn default() -> Self {
        Self {
            eps: 1.0,
            mu: 1.0,
            sigma: 0.0,
        }
    }
}

/// Complex numbers are written `[re, im]`.
pub type Cplx = [f64; 2];

fn cplx(c: &Cplx) -> C64 {
    C64::new(c[0], c[1])
}

fn cvec(v: &[Cplx; 3]) -> Vector3<C64> {
    Vector3::new(cplx(&v[0]), cplx(&v[1]), cplx(&v[2]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    PlaneWave {
        direction: [f64; 3],
        polarization: [Cplx; 3],
    },
    CoreBall {
        radius: f64,
        current: [Cplx; 3],
    },
    ShellBall {
        r_in: f64,
        r_out: f64,
        current: [Cplx; 3],
    },
    Trace {
        te: Vec<Cplx>,
        tm: Vec<Cplx>,
    },
}

impl SourceConfig {
    pub fn to_spec(&self) -> SourceSpec {
        match self {
            SourceConfig::PlaneWave { direction, polarization } => SourceSpec::PlaneWave {
                khat: Vector3::from(*direction),
                pol: cvec(polarization),
            },
            SourceConfig::CoreBall { radius, current } => SourceSpec::CoreBallCurrent {
                radius: *radius,
                j0: cvec(current),
            },
            SourceConfig::ShellBall { r_in, r_out, current } => SourceSpec::ShellBallCurrent {
                r_in: *r_in,
                r_out: *r_out,
                j0: cvec(current),
            },
            SourceConfig::Trace { te, tm } => SourceSpec::TangentialTrace(TangentialTrace {
                te: te.iter().map(cplx).collect(),
                tm: tm.iter().map(cplx).collect(),
            }),
        }
    }
}

/// Either an explicit list or a geometric range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_mode: Option<TraceMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_polar")]
    pub n_polar: usize,
    #[serde(default = "default_azimuth")]
    pub n_azimuth: usize,
}

fn default_polar() -> usize {
    DEFAULT_N_POLAR
}
fn default_azimuth() -> usize {
    DEFAULT_N_AZIMUTH
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_polar: DEFAULT_N_POLAR,
            n_azimuth: DEFAULT_N_AZIMUTH,
        }
    }
}

/// One shell of an explicit scatterer, used by `solve` instead of the cloak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellConfig {
    pub outer_radius: f64,
    pub eps: Cplx,
    pub mu: Cplx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default)]
    pub layer: LayerConfig,
    #[serde(default)]
    pub core: CoreConfig,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shells: Option<Vec<ShellConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensors: Option<TensorGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn missing(key: &str, kind: ExperimentKind) -> CliError {
    CliError::Config(format!("missing key \"{key}\" required by experiment \"{}\"", kind.as_str()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.check_complete()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Every key the named experiment needs is present.
    pub fn check_complete(&self) -> Result<(), CliError> {
        let k = self.experiment;
        match k {
            ExperimentKind::Solve => {
                if self.rho.is_none() && self.shells.is_none() {
                    return Err(missing("rho", k));
                }
            }
            ExperimentKind::ExportTensors => {
                if self.rho.is_none() {
                    return Err(missing("rho", k));
                }
                if self.tensors.is_none() {
                    return Err(missing("tensors", k));
                }
            }
            ExperimentKind::SmallInclusion => {
                let mode = self.sweep.as_ref().and_then(|s| s.trace_mode);
                if mode.is_none() {
                    return Err(missing("sweep.trace_mode", k));
                }
            }
            ExperimentKind::Sweep | ExperimentKind::CloakBust | ExperimentKind::Exponents => {}
        }
        if let Some(s) = &self.sweep {
            if s.values.is_none() && (s.start.is_some() || s.end.is_some() || s.points.is_some()) {
                for (key, present) in [
                    ("sweep.start", s.start.is_some()),
                    ("sweep.end", s.end.is_some()),
                    ("sweep.points", s.points.is_some()),
                ] {
                    if !present {
                        return Err(missing(key, k));
                    }
                }
            }
        }
        if let Some(shells) = &self.shells {
            if shells.is_empty() {
                return Err(CliError::Config("\"shells\" must not be empty".into()));
            }
        }
        Ok(())
    }

    pub fn cloak_spec(&self, rho: f64) -> CloakSpec {
        let l = &self.layer;
        CloakSpec {
            rho,
            exponents: exponents(l.r, l.s, l.t),
            alpha: l.alpha,
            beta: l.beta,
            eta: l.eta,
            core: CoreMedium {
                eps: self.core.eps,
                mu: self.core.mu,
                sigma: self.core.sigma,
            },
            omega: self.omega,
            geometry: self.geometry,
            conducting_layer: l.conducting,
        }
    }

    /// Plane wave along `+z` polarized along `x` unless configured.
    pub fn source_spec(&self) -> SourceSpec {
        self.source
            .as_ref()
            .map(SourceConfig::to_spec)
            .unwrap_or_else(SourceSpec::canonical_plane_wave)
    }

    pub fn explicit_sphere(&self) -> Option<Result<LayeredSphere, CliError>> {
        self.shells.as_ref().map(|shells| {
            LayeredSphere::new(
                shells
                    .iter()
                    .map(|s| Shell {
                        outer_radius: s.outer_radius,
                        eps: cplx(&s.eps),
                        mu: cplx(&s.mu),
                    })
                    .collect(),
            )
            .map_err(|e| CliError::Config(e.to_string()))
        })
    }

    pub fn trace_mode(&self) -> TraceMode {
        self.sweep
            .as_ref()
            .and_then(|s| s.trace_mode)
            .unwrap_or(TraceMode::IncidentTrace)
    }

    /// ρ values, or τ values for the small-inclusion experiment.
    pub fn abscissae(&self) -> Vec<f64> {
        if let Some(s) = &self.sweep {
            if let Some(v) = &s.values {
                return v.clone();
            }
            if let (Some(a), Some(b), Some(n)) = (s.start, s.end, s.points) {
                return geometric(a, b, n);
            }
        }
        match self.experiment {
            ExperimentKind::SmallInclusion => geometric(0.3, 0.03, 6),
            _ => default_rho_grid(),
        }
    }
}
