use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use cloakbench_core::cloakmap::{
    exponents, predicted_rates, virtual_scatterer, virtual_source, LayerExponents, SourceSpec,
};
use cloakbench_core::experiments::{
    default_rho_grid, ExperimentRegistry, SweepInput, SweepResult, CLOAK_TOLERANCE,
};
use cloakbench_core::farnorms::{l2_norm, make_grid, sup_norm_refined, FarFieldPattern};
use cloakbench_core::materials::write_tensor_csv;
use cloakbench_core::mie::{
    cross_sections, energy_balance, exterior_trace_solve, far_field, solve_source, CrossSections, EnergyBalance,
    MultipoleCoefficients,
};
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::CliError;

/// Integral values print without a fractional part.
pub fn number(x: f64) -> Value {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 9.0e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

pub fn exponents_json(e: &LayerExponents) -> Value {
    let rates = predicted_rates(e);
    json!({
        "zeta1": number(e.zeta1),
        "zeta2": number(e.zeta2),
        "valid": e.valid,
        "rates": {
            "passive": number(rates.passive),
            "active_core": number(rates.active_core),
            "active_shell": number(rates.active_shell),
        },
    })
}

/// JSON line plus validity.
pub fn cmd_exponents(r: f64, s: f64, t: f64) -> (String, bool) {
    let e = exponents(r, s, t);
    (exponents_json(&e).to_string(), e.valid)
}

fn require(cfg: &ExperimentConfig, allowed: &[ExperimentKind], command: &str) -> Result<(), CliError> {
    if allowed.contains(&cfg.experiment) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "experiment \"{}\" cannot be run by `{command}`",
            cfg.experiment.as_str()
        )))
    }
}

fn check_exponents(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let e = exponents(cfg.layer.r, cfg.layer.s, cfg.layer.t);
    if e.valid {
        Ok(())
    } else {
        Err(CliError::InvalidExponents(format!(
            "zeta1 = {} <= 0 for (r, s, t) = ({}, {}, {})",
            e.zeta1, e.r, e.s, e.t
        )))
    }
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub struct SolveReport {
    pub coefficients: MultipoleCoefficients,
    pub diagnostics: Value,
}

/// Tangent components `(A·θ̂, A·φ̂)` along each grid row, written as CSV.
pub fn far_field_csv(pattern: &FarFieldPattern) -> String {
    let g = &pattern.grid;
    let mut s = String::from("theta,phi,a_theta_re,a_theta_im,a_phi_re,a_phi_im,magnitude\n");
    for (i, &t) in g.theta.iter().enumerate() {
        let (st, ct) = t.sin_cos();
        for (j, &p) in g.phi.iter().enumerate() {
            let (sp, cp) = p.sin_cos();
            let e_t = Vector3::new(ct * cp, ct * sp, -st);
            let e_p = Vector3::new(-sp, cp, 0.0);
            let a = &pattern.values[i * g.n_azimuth + j];
            let dot = |e: &Vector3<f64>| -> C64 { a.iter().zip(e.iter()).map(|(a, e)| a * e).sum() };
            let (at, ap) = (dot(&e_t), dot(&e_p));
            s.push_str(&format!(
                "{t:?},{p:?},{:?},{:?},{:?},{:?},{:?}\n",
                at.re,
                at.im,
                ap.re,
                ap.im,
                a.norm()
            ));
        }
    }
    s
}

/// One solve at fixed ρ, or on the explicit `shells` scatterer when given.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path) -> Result<SolveReport, CliError> {
    require(cfg, &[ExperimentKind::Solve], "solve")?;
    let omega = cfg.omega;
    let src = cfg.source_spec();
    src.validate()?;
    let (sol, rho) = match cfg.explicit_sphere() {
        Some(sphere) => {
            let sphere = sphere?;
            match &src {
                SourceSpec::TangentialTrace(_) => {
                    return Err(CliError::Config("trace sources take \"rho\" as the trace radius".into()))
                }
                _ => (solve_source(&sphere, omega, &src)?, cfg.rho),
            }
        }
        None => {
            let rho = cfg.rho.expect("checked by config");
            if let SourceSpec::TangentialTrace(t) = &src {
                // no cloak involved: outgoing field of the trace on |x| = rho
                let coeffs = exterior_trace_solve(rho, omega, t)?;
                return finish_solve(cfg, out, coeffs, None, Some(rho));
            }
            check_exponents(cfg)?;
            let spec = cfg.cloak_spec(rho);
            spec.validate()?;
            let sphere = virtual_scatterer(&spec)?;
            let vsrc = virtual_source(&spec, &src);
            (solve_source(&sphere, omega, &vsrc)?, Some(rho))
        }
    };
    let energy = energy_balance(&sol)?;
    let coeffs = sol.coefficients.clone();
    let cs = sol.has_incident().then(|| cross_sections(&coeffs, omega));
    finish_solve(cfg, out, coeffs, Some((energy, cs)), rho)
}

type Extras = (EnergyBalance, Option<CrossSections>);

fn finish_solve(
    cfg: &ExperimentConfig,
    out: &Path,
    coeffs: MultipoleCoefficients,
    extras: Option<Extras>,
    rho: Option<f64>,
) -> Result<SolveReport, CliError> {
    let omega = cfg.omega;
    let grid = make_grid(cfg.grid.n_polar, cfg.grid.n_azimuth).map_err(|e| CliError::Config(format!("farnorms: {e}")))?;
    let pattern = FarFieldPattern::from_coefficients(grid, &coeffs, omega);
    let sup = sup_norm_refined(&pattern, |x| far_field(&coeffs, omega, x));
    let (energy, cs) = match extras {
        Some((e, cs)) => (Some(e), cs),
        None => (None, None),
    };
    let diagnostics = json!({
        "experiment": "solve",
        "omega": omega,
        "rho": rho,
        "n_max": coeffs.n_max(),
        "energy_residual": energy.map(|e| e.residual),
        "energy_balance": energy,
        "cross_sections": cs,
        "far_field_sup": sup,
        "far_field_l2": l2_norm(&pattern),
        "config_echo": cfg.echo(),
    });
    fs::create_dir_all(out)?;
    fs::write(out.join("farfield.csv"), far_field_csv(&pattern))?;
    write_json(&out.join("coefficients.json"), &serde_json::to_value(&coeffs).expect("serializes"))?;
    write_json(&out.join("diagnostics.json"), &diagnostics)?;
    Ok(SolveReport { coefficients: coeffs, diagnostics })
}

fn experiment_name(cfg: &ExperimentConfig) -> &'static str {
    match cfg.experiment {
        ExperimentKind::SmallInclusion => "small-inclusion",
        ExperimentKind::CloakBust => "cloak-bust",
        _ => match cfg.source_spec() {
            SourceSpec::CoreBallCurrent { .. } | SourceSpec::ShellBallCurrent { .. } => "active",
            _ => "passive",
        },
    }
}

pub fn sweep_input(cfg: &ExperimentConfig, tolerance: Option<f64>) -> SweepInput {
    let abscissae = cfg.abscissae();
    let rho = cfg.rho.or(abscissae.first().copied()).unwrap_or(0.1);
    SweepInput {
        spec: cfg.cloak_spec(rho),
        abscissae,
        source: cfg.source_spec(),
        n_polar: cfg.grid.n_polar,
        n_azimuth: cfg.grid.n_azimuth,
        trace_mode: cfg.trace_mode(),
        tolerance: tolerance.or(cfg.tolerance),
    }
}

/// Runs the sweep named by the config without writing anything.
pub fn run_sweep(cfg: &ExperimentConfig, tolerance: Option<f64>) -> Result<SweepResult, CliError> {
    require(
        cfg,
        &[ExperimentKind::Sweep, ExperimentKind::SmallInclusion, ExperimentKind::CloakBust],
        "sweep",
    )?;
    if cfg.experiment != ExperimentKind::SmallInclusion {
        check_exponents(cfg)?;
    }
    let registry = ExperimentRegistry::default();
    let exp = registry.get(experiment_name(cfg))?;
    Ok(exp.run(&sweep_input(cfg, tolerance))?)
}

pub fn write_sweep(result: &SweepResult, echo: &Value, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    write_json(&out.join("sweep.json"), &result.to_json(echo))?;
    fs::write(out.join("sweep.csv"), result.to_csv())?;
    Ok(())
}

pub fn summary_line(result: &SweepResult) -> String {
    let slope = result
        .slope()
        .map(|s| format!("{s:.4}"))
        .unwrap_or_else(|| "nan".into());
    let threshold = result.predicted - result.tolerance;
    let verdict = if result.passed { "pass" } else { "fail" };
    if result.experiment == "cloak-bust" {
        // Passing means the rate is lost, so the comparison is reversed.
        format!("slope={slope} predicted<{threshold} {verdict}")
    } else {
        format!("slope={slope} predicted>={threshold} {verdict}")
    }
}

pub fn cmd_sweep(cfg: &ExperimentConfig, tolerance: Option<f64>, out: &Path) -> Result<SweepResult, CliError> {
    let result = run_sweep(cfg, tolerance)?;
    write_sweep(&result, &cfg.echo(), out)?;
    Ok(result)
}

/// Synthetic sweep `norm = ρ^p` on the default grid, e.g. `powerlaw:3`.
pub fn selftest(mode: &str, tolerance: Option<f64>) -> Result<SweepResult, CliError> {
    let p: f64 = mode
        .strip_prefix("powerlaw:")
        .and_then(|p| p.parse().ok())
        .filter(|p: &f64| p.is_finite())
        .ok_or_else(|| CliError::Config(format!("unknown self-test \"{mode}\"; expected powerlaw:<exponent>")))?;
    let points = default_rho_grid().into_iter().map(|r| (r, r.powf(p))).collect();
    Ok(SweepResult::from_points(
        "selftest",
        points,
        Vec::new(),
        p,
        tolerance.unwrap_or(CLOAK_TOLERANCE),
    ))
}

pub fn cmd_export_tensors(cfg: &ExperimentConfig, out: &Path) -> Result<usize, CliError> {
    require(cfg, &[ExperimentKind::ExportTensors], "export-tensors")?;
    let spec = cfg.cloak_spec(cfg.rho.expect("checked by config"));
    spec.validate().map_err(|e| match e {
        cloakbench_core::cloakmap::CloakError::InvalidExponents { .. } => CliError::from(e),
        other => CliError::Config(format!("cloakmap: {other}")),
    })?;
    let grid = cfg.tensors.as_ref().expect("checked by config");
    if grid.counts.contains(&0) {
        return Err(CliError::Config("tensors.counts entries must be positive".into()));
    }
    let points = grid.points();
    fs::create_dir_all(out)?;
    let mut w = BufWriter::new(fs::File::create(out.join("tensors.csv"))?);
    write_tensor_csv(&spec, &points, &mut w)?;
    w.flush()?;
    Ok(points.len())
}
