//! ρ-sweeps, log-log slope fits and the named rate experiments.
//!
//! Experiments implement [`Experiment`] and are looked up by name in an
//! [`ExperimentRegistry`].

mod kinds;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloakmap::{CloakError, CloakSpec, SourceSpec};
use crate::farnorms::FarNormError;
use crate::mie::MieError;

pub use kinds::{
    active_rate_experiment, cloak_bust_experiment, passive_rate_experiment, small_inclusion_experiment,
    ActiveRate, CloakBust, PassiveRate, SmallInclusion, CLOAK_BUST_EPS_RANGE, CLOAK_BUST_SCAN_POINTS,
};

/// Default slope tolerances.
pub const CLOAK_TOLERANCE: f64 = 0.3;
pub const SMALL_INCLUSION_TOLERANCE: f64 = 0.2;
/// Norms below this are treated as numerically zero.
pub const NORM_FLOOR: f64 = 1e-300;
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("slope fit needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("slope fit needs positive finite data, got ({rho}, {norm})")]
    NonPositive { rho: f64, norm: f64 },
    #[error("all abscissae are equal; slope undefined")]
    DegenerateAbscissa,
    #[error("unknown experiment '{0}'")]
    Unknown(String),
    #[error("experiment '{experiment}' cannot use this source: {reason}")]
    WrongSource { experiment: &'static str, reason: String },
    #[error("theorem precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Cloak(#[from] CloakError),
    #[error(transparent)]
    Solver(#[from] MieError),
    #[error(transparent)]
    Grid(#[from] FarNormError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ln norm` against `ln ρ`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<Fit, ExperimentError> {
    if points.len() < MIN_POINTS {
        return Err(ExperimentError::TooFewPoints(points.len()));
    }
    for &(rho, norm) in points {
        if !(rho > 0.0 && norm > 0.0 && rho.is_finite() && norm.is_finite()) {
            return Err(ExperimentError::NonPositive { rho, norm });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 || xs.iter().all(|x| *x == xs[0]) {
        return Err(ExperimentError::DegenerateAbscissa);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot <= 1e-300 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(Fit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// Trace coefficients held fixed as τ shrinks.
    FixedProfile,
    /// Trace of the canonical plane wave on `|x| = τ`.
    IncidentTrace,
}

/// Everything a sweep needs. `abscissae` are ρ values, or τ values for the
/// small-inclusion experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepInput {
    pub spec: CloakSpec,
    pub abscissae: Vec<f64>,
    pub source: SourceSpec,
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub trace_mode: TraceMode,
    /// Overrides the experiment's default tolerance.
    pub tolerance: Option<f64>,
}

pub const DEFAULT_N_POLAR: usize = 64;
pub const DEFAULT_N_AZIMUTH: usize = 128;

/// Six geometric points from 0.1 down to 0.01.
pub fn default_rho_grid() -> Vec<f64> {
    geometric(0.1, 0.01, 6)
}

pub fn geometric(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let q = (end / start).powf(1.0 / (n - 1) as f64);
    (0..n)
        .map(|i| if i == n - 1 { end } else { start * q.powi(i as i32) })
        .collect()
}

impl SweepInput {
    pub fn new(spec: CloakSpec, source: SourceSpec) -> Self {
        Self {
            spec,
            abscissae: default_rho_grid(),
            source,
            n_polar: DEFAULT_N_POLAR,
            n_azimuth: DEFAULT_N_AZIMUTH,
            trace_mode: TraceMode::IncidentTrace,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub rho: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: String,
    /// Descending.
    pub rho_values: Vec<f64>,
    pub norms: Vec<f64>,
    pub fit: Option<Fit>,
    /// `ln norm − fitted line` per point.
    pub residuals: Vec<f64>,
    pub predicted: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Some norm fell below [`NORM_FLOOR`].
    pub below_floor: bool,
    pub failures: Vec<PointFailure>,
    /// Core permittivity attaining each maximized norm (cloak-bust only).
    pub worst_core_eps: Option<Vec<f64>>,
}

impl SweepResult {
    /// Pass iff `slope >= predicted − tolerance`.
    pub fn from_points(
        experiment: &str,
        mut points: Vec<(f64, f64)>,
        failures: Vec<PointFailure>,
        predicted: f64,
        tolerance: f64,
    ) -> Self {
        points.sort_by(|a, b| b.0.total_cmp(&a.0));
        let below_floor = points.iter().any(|p| !(p.1 >= NORM_FLOOR));
        let fit = if below_floor { None } else { fit_slope(&points).ok() };
        let residuals = match &fit {
            Some(f) => points
                .iter()
                .map(|(r, n)| n.ln() - f.intercept - f.slope * r.ln())
                .collect(),
            None => Vec::new(),
        };
        let passed = fit.map(|f| f.slope >= predicted - tolerance).unwrap_or(false);
        Self {
            experiment: experiment.to_string(),
            rho_values: points.iter().map(|p| p.0).collect(),
            norms: points.iter().map(|p| p.1).collect(),
            fit,
            residuals,
            predicted,
            tolerance,
            passed,
            below_floor,
            failures,
            worst_core_eps: None,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// `{experiment, config_echo, points, slope, intercept, r2, ...}`.
    pub fn to_json(&self, config_echo: &serde_json::Value) -> serde_json::Value {
        let points: Vec<serde_json::Value> = self
            .rho_values
            .iter()
            .zip(&self.norms)
            .map(|(r, n)| serde_json::json!({"rho": r, "norm": n}))
            .collect();
        let mut v = serde_json::json!({
            "experiment": self.experiment,
            "config_echo": config_echo,
            "points": points,
            "slope": self.fit.map(|f| f.slope),
            "intercept": self.fit.map(|f| f.intercept),
            "r2": self.fit.map(|f| f.r_squared),
            "predicted": self.predicted,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "below_floor": self.below_floor,
            "failures": self.failures,
        });
        if let Some(eps) = &self.worst_core_eps {
            v["worst_core_eps"] = serde_json::json!(eps);
        }
        v
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rho,norm\n");
        for (r, n) in self.rho_values.iter().zip(&self.norms) {
            s.push_str(&format!("{r:?},{n:?}\n"));
        }
        s
    }
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// Rate the fitted slope is compared against.
    fn predicted(&self, input: &SweepInput) -> Result<f64, ExperimentError>;
    fn default_tolerance(&self) -> f64 {
        CLOAK_TOLERANCE
    }
    fn run(&self, input: &SweepInput) -> Result<SweepResult, ExperimentError>;
}

pub struct ExperimentRegistry {
    entries: Vec<Box<dyn Experiment>>,
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut r = Self { entries: Vec::new() };
        r.register(Box::new(PassiveRate));
        r.register(Box::new(ActiveRate));
        r.register(Box::new(SmallInclusion));
        r.register(Box::new(CloakBust));
        r
    }
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// Replaces an existing entry of the same name.
    pub fn register(&mut self, e: Box<dyn Experiment>) {
        self.entries.retain(|x| x.name() != e.name());
        self.entries.push(e);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Experiment, ExperimentError> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| ExperimentError::Unknown(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}
