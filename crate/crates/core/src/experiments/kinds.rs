use rayon::prelude::*;

use super::{
    Experiment, ExperimentError, PointFailure, SweepInput, SweepResult, TraceMode, CLOAK_TOLERANCE,
    SMALL_INCLUSION_TOLERANCE,
};
use crate::cloakmap::{
    check_source_support, predicted_rates, virtual_scatterer, virtual_source, CloakSpec, CoreMedium,
    SourceSpec, TangentialTrace,
};
use crate::farnorms::{far_field_sup, make_grid, SphereGrid};
use crate::mie::{
    current_n1_solve, exterior_trace_solve, plane_wave_solve, plane_wave_solve_with_cutoff, plane_wave_trace,
    wiscombe_cutoff, MieError, MultipoleCoefficients,
};

pub const RHO_MIN: f64 = 1e-3;
pub const RHO_MAX: f64 = 0.2;
pub const TAU_MAX: f64 = 0.3;
/// Degrees carried by the default fixed trace profile.
pub const FIXED_PROFILE_DEGREE: usize = 3;
pub const CLOAK_BUST_SCAN_POINTS: usize = 20;
pub const CLOAK_BUST_EPS_RANGE: (f64, f64) = (1.0, 1e4);
const BISECTION_STEPS: usize = 60;

fn check_rho_list(rhos: &[f64]) -> Result<(), ExperimentError> {
    for &r in rhos {
        if !(RHO_MIN..=RHO_MAX).contains(&r) {
            return Err(ExperimentError::Precondition(format!(
                "rho = {r} outside [{RHO_MIN}, {RHO_MAX}]"
            )));
        }
    }
    Ok(())
}

fn check_exponents(spec: &CloakSpec) -> Result<(), ExperimentError> {
    let e = spec.exponents;
    if !e.valid {
        return Err(ExperimentError::Precondition(format!(
            "zeta1 = {} must be positive for (r, s, t) = ({}, {}, {})",
            e.zeta1, e.r, e.s, e.t
        )));
    }
    Ok(())
}

/// Runs `point` for every abscissa in parallel; output order follows the
/// input, failed points are logged and set aside.
fn sweep<F>(name: &str, xs: &[f64], point: F) -> (Vec<(f64, f64)>, Vec<PointFailure>)
where
    F: Fn(f64) -> Result<f64, ExperimentError> + Sync,
{
    let results: Vec<(f64, Result<f64, ExperimentError>)> = xs.par_iter().map(|&x| (x, point(x))).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (x, r) in results {
        match r {
            Ok(n) => {
                log::info!("{name}: rho = {x:e}, norm = {n:e}");
                ok.push((x, n));
            }
            Err(e) => {
                log::warn!("{name}: rho = {x:e} failed and is excluded: {e}");
                failed.push(PointFailure {
                    rho: x,
                    error: e.to_string(),
                });
            }
        }
    }
    (ok, failed)
}

fn grid(input: &SweepInput) -> Result<SphereGrid, ExperimentError> {
    Ok(make_grid(input.n_polar, input.n_azimuth)?)
}

pub struct PassiveRate;
pub struct ActiveRate;
pub struct SmallInclusion;
pub struct CloakBust;

impl Experiment for PassiveRate {
    fn name(&self) -> &'static str {
        "passive"
    }

    fn description(&self) -> &'static str {
        "plane-wave far-field norm of the cloak against min(zeta1, 3)"
    }

    fn predicted(&self, input: &SweepInput) -> Result<f64, ExperimentError> {
        Ok(predicted_rates(&input.spec.exponents).passive)
    }

    fn run(&self, input: &SweepInput) -> Result<SweepResult, ExperimentError> {
        passive_rate_experiment(input)
    }
}

pub fn passive_rate_experiment(input: &SweepInput) -> Result<SweepResult, ExperimentError> {
    if !matches!(input.source, SourceSpec::PlaneWave { .. }) {
        return Err(ExperimentError::WrongSource {
            experiment: "passive",
            reason: "a plane wave is required".into(),
        });
    }
    input.source.validate()?;
    check_exponents(&input.spec)?;
    check_rho_list(&input.abscissae)?;
    let g = grid(input)?;
    let omega = input.spec.omega;
    let (points, failures) = sweep("passive", &input.abscissae, |rho| {
        let spec = input.spec.with_rho(rho);
        let sphere = virtual_scatterer(&spec)?;
        let sol = plane_wave_solve(&sphere, omega, &input.source)?;
        Ok(far_field_sup(&g, &sol.coefficients, omega))
    });
    let predicted = PassiveRate.predicted(input)?;
    Ok(SweepResult::from_points(
        "passive",
        points,
        failures,
        predicted,
        input.tolerance.unwrap_or(CLOAK_TOLERANCE),
    ))
}

impl Experiment for ActiveRate {
    fn name(&self) -> &'static str {
        "active"
    }

    fn description(&self) -> &'static str {
        "far-field norm of an interior current: core balls against zeta1/2, shells against zeta2"
    }

    fn predicted(&self, input: &SweepInput) -> Result<f64, ExperimentError> {
        let rates = predicted_rates(&input.spec.exponents);
        match input.source {
            SourceSpec::CoreBallCurrent { .. } => Ok(rates.active_core),
            SourceSpec::ShellBallCurrent { .. } => Ok(rates.active_shell),
            _ => Err(ExperimentError::WrongSource {
                experiment: "active",
                reason: "a core-ball or shell current is required".into(),
            }),
        }
    }

    fn run(&self, input: &SweepInput) -> Result<SweepResult, ExperimentError> {
        active_rate_experiment(input)
    }
}

pub fn active_rate_experiment(input: &SweepInput) -> Result<SweepResult, ExperimentError> {
    let predicted = ActiveRate.predicted(input)?;
    check_exponents(&input.spec)?;
    check_rho_list(&input.abscissae)?;
    check_source_support(&input.spec, &input.source).map_err(|e| ExperimentError::Precondition(e.to_string()))?;
    let g = grid(input)?;
    let omega = input.spec.omega;
    let (points, failures) = sweep("active", &input.abscissae, |rho| {
        let spec = input.spec.with_rho(rho);
        let sphere = virtual_scatterer(&spec)?;
        let src = virtual_source(&spec, &input.source);
        let sol = current_n1_solve(&sphere, omega, &src)?;
        Ok(far_field_sup(&g, &sol.coefficients, omega))
    });
    Ok(SweepResult::from_points(
        "active",
        points,
        failures,
        predicted,
        input.tolerance.unwrap_or(CLOAK_TOLERANCE),
    ))
}

impl Experiment for SmallInclusion {
    fn name(&self) -> &'static str {
        "small-inclusion"
    }

    fn description(&self) -> &'static str {
        "outgoing field of a prescribed trace on a sphere of radius tau"
    }

    fn predicted(&self, input: &SweepInput) -> Result<f64, ExperimentError> {
        Ok(match input.trace_mode {
            TraceMode::FixedProfile => 2.0,
            TraceMode::IncidentTrace => 3.0,
        })
    }

    fn default_tolerance(&self) -> f64 {
        SMALL_INCLUSION_TOLERANCE
    }

    fn run(&self, input: &SweepInput) -> Result<SweepResult, ExperimentError> {
        small_inclusion_experiment(input)
    }
}

/// Unit coefficients in both polarizations up to [`FIXED_PROFILE_DEGREE`].
pub fn default_fixed_profile() -> TangentialTrace {
    TangentialTrace {
        te: vec![num_complex::Complex64::new(1.0, 0.0); FIXED_PROFILE_DEGREE],
        tm: vec![num_complex::Complex64::new(1.0, 0.0); FIXED_PROFILE_DEGREE],
    }
}

pub fn small_inclusion_experiment(input: &SweepInput) -> Result<SweepResult, ExperimentError> {
    for &t in &input.abscissae {
        if !(t > 0.0 && t <= TAU_MAX) {
            return Err(ExperimentError::Precondition(format!("tau = {t} outside (0, {TAU_MAX}]")));
        }
    }
    let g = grid(input)?;
    let omega = input.spec.omega;
    let profile = match (&input.source, input.trace_mode) {
        (SourceSpec::TangentialTrace(t), TraceMode::FixedProfile) => t.clone(),
        _ => default_fixed_profile(),
    };
    let mode = input.trace_mode;
    let (points, failures) = sweep("small-inclusion", &input.abscissae, |tau| {
        let trace = match mode {
            TraceMode::FixedProfile => profile.clone(),
            TraceMode::IncidentTrace => plane_wave_trace(tau, omega, wiscombe_cutoff(omega * tau))?,
        };
        let coeffs = exterior_trace_solve(tau, omega, &trace)?;
        Ok(far_field_sup(&g, &coeffs, omega))
    });
    let predicted = SmallInclusion.predicted(input)?;
    Ok(SweepResult::from_points(
        "small-inclusion",
        points,
        failures,
        predicted,
        input.tolerance.unwrap_or(SMALL_INCLUSION_TOLERANCE),
    ))
}

impl Experiment for CloakBust {
    fn name(&self) -> &'static str {
        "cloak-bust"
    }

    fn description(&self) -> &'static str {
        "worst-case core permittivity without the conducting layer"
    }

    fn predicted(&self, input: &SweepInput) -> Result<f64, ExperimentError> {
        Ok(predicted_rates(&input.spec.exponents).passive)
    }

    fn default_tolerance(&self) -> f64 {
        1.0
    }

    fn run(&self, input: &SweepInput) -> Result<SweepResult, ExperimentError> {
        cloak_bust_experiment(input)
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Worst far-field norm over lossless core permittivities at one ρ, and the
/// permittivity attaining it. Between scan points the degree-1 resonances
/// (sign changes of `Im(1/a_1)`, `Im(1/b_1)`) are located by bisection.
fn worst_core(spec: &CloakSpec, src: &SourceSpec, g: &SphereGrid) -> Result<(f64, f64), ExperimentError> {
    let omega = spec.omega;
    let n_max = wiscombe_cutoff(omega * spec.rho * spec.geometry.r_inner) + 4;
    let solve = |eps: f64| -> Result<MultipoleCoefficients, MieError> {
        let s = CloakSpec {
            core: CoreMedium {
                eps,
                sigma: 0.0,
                ..spec.core
            },
            conducting_layer: false,
            ..spec.clone()
        };
        let sphere = virtual_scatterer(&s).map_err(|e| MieError::InvalidSphere(e.to_string()))?;
        Ok(plane_wave_solve_with_cutoff(&sphere, omega, src, n_max)?.coefficients)
    };
    let indicator = |c: &MultipoleCoefficients| [(1.0 / c.a(1)).im, (1.0 / c.b(1)).im];
    let (lo, hi) = CLOAK_BUST_EPS_RANGE;
    let scan = log_space(lo, hi, CLOAK_BUST_SCAN_POINTS);
    let mut candidates = scan.clone();
    let coeffs: Vec<MultipoleCoefficients> = scan.iter().map(|&e| solve(e)).collect::<Result<_, _>>()?;
    for w in 0..scan.len() - 1 {
        let (f0, f1) = (indicator(&coeffs[w]), indicator(&coeffs[w + 1]));
        for k in 0..2 {
            if f0[k].signum() == f1[k].signum() {
                continue;
            }
            let (mut a, mut b) = (scan[w].ln(), scan[w + 1].ln());
            let mut fa = f0[k];
            for _ in 0..BISECTION_STEPS {
                let m = 0.5 * (a + b);
                let fm = indicator(&solve(m.exp())?)[k];
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            candidates.push((0.5 * (a + b)).exp());
        }
    }
    let mut best = (0.0, lo);
    for eps in candidates {
        let c = solve(eps)?;
        let n = far_field_sup(g, &c, omega);
        if n > best.0 {
            best = (n, eps);
        }
    }
    Ok(best)
}

pub fn cloak_bust_experiment(input: &SweepInput) -> Result<SweepResult, ExperimentError> {
    if !matches!(input.source, SourceSpec::PlaneWave { .. }) {
        return Err(ExperimentError::WrongSource {
            experiment: "cloak-bust",
            reason: "a plane wave is required".into(),
        });
    }
    check_rho_list(&input.abscissae)?;
    let g = grid(input)?;
    let results: Vec<(f64, Result<(f64, f64), ExperimentError>)> = input
        .abscissae
        .par_iter()
        .map(|&rho| (rho, worst_core(&input.spec.with_rho(rho), &input.source, &g)))
        .collect();
    let mut points = Vec::new();
    let mut eps = Vec::new();
    let mut failures = Vec::new();
    for (rho, r) in results {
        match r {
            Ok((n, e)) => {
                log::info!("cloak-bust: rho = {rho:e}, worst norm = {n:e} at eps_a = {e:e}");
                points.push((rho, n));
                eps.push((rho, e));
            }
            Err(e) => failures.push(PointFailure {
                rho,
                error: e.to_string(),
            }),
        }
    }
    let predicted = CloakBust.predicted(input)?;
    let tolerance = input.tolerance.unwrap_or(1.0);
    let mut res = SweepResult::from_points("cloak-bust", points, failures, predicted, tolerance);
    eps.sort_by(|a, b| b.0.total_cmp(&a.0));
    res.worst_core_eps = Some(eps.into_iter().map(|p| p.1).collect());
    // a bust is demonstrated by decay well below the layered rate or by
    // norms that fail to decrease with ρ
    let monotone = res.norms.windows(2).all(|w| w[1] <= w[0]);
    res.passed = match res.fit {
        Some(f) => f.slope < predicted - tolerance || !monotone,
        None => false,
    };
    Ok(res)
}
