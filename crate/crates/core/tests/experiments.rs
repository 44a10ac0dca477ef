use cloakbench_core::cloakmap::{exponents, CloakSpec, CoreMedium, SourceSpec, TangentialTrace};
use cloakbench_core::experiments::{
    geometric, ExperimentError, ExperimentRegistry, SweepInput, SweepResult, TraceMode,
};
use nalgebra::Vector3;
use num_complex::Complex64 as C;

fn spec(r: f64, s: f64, t: f64, core: CoreMedium) -> CloakSpec {
    let mut sp = CloakSpec::classical(0.1, core);
    sp.exponents = exponents(r, s, t);
    sp
}

fn core(eps: f64, mu: f64, sigma: f64) -> CoreMedium {
    CoreMedium { eps, mu, sigma }
}

fn jx() -> Vector3<C> {
    Vector3::new(C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0))
}

fn run(name: &str, input: &SweepInput) -> SweepResult {
    ExperimentRegistry::default().get(name).unwrap().run(input).unwrap()
}

fn passes(r: &SweepResult, threshold: f64) {
    let f = r.fit.expect("fit");
    assert!(f.slope >= threshold, "{}: slope {} < {threshold}", r.experiment, f.slope);
    assert!(r.passed);
}

#[test]
fn classical_layer_passive_rate() {
    let mut input = SweepInput::new(spec(0.0, 2.0, 0.0, core(2.0, 1.0, 0.0)), SourceSpec::canonical_plane_wave());
    input.abscissae = vec![0.1, 0.07, 0.05, 0.03, 0.02];
    let r = run("passive", &input);
    passes(&r, 2.7);
    assert!(r.fit.unwrap().r_squared >= 0.99);
}

#[test]
fn rho_independent_layer_passive_rate() {
    let input = SweepInput::new(spec(1.0, 1.0, 1.0, core(2.0, 1.0, 0.0)), SourceSpec::canonical_plane_wave());
    passes(&run("passive", &input), 1.7);
}

#[test]
fn passive_rate_independent_of_content() {
    for c in [CoreMedium::VACUUM, core(10.0, 1.0, 0.0), core(1.0, 5.0, 0.0), core(2.0, 1.0, 3.0)] {
        let input = SweepInput::new(spec(0.0, 2.0, 0.0, c), SourceSpec::canonical_plane_wave());
        passes(&run("passive", &input), 2.7);
    }
}

#[test]
fn active_core_rates() {
    let src = SourceSpec::CoreBallCurrent { radius: 0.25, j0: jx() };
    passes(&run("active", &SweepInput::new(spec(1.0, 1.0, 1.0, core(2.0, 1.0, 1.0)), src.clone())), 0.7);
    let r = run("active", &SweepInput::new(spec(0.0, 2.0, 0.0, core(2.0, 1.0, 1.0)), src));
    assert_eq!(r.predicted, 1.5);
    passes(&r, 1.2);
}

#[test]
fn shell_current_rate_and_monotone_improvement() {
    let src = SourceSpec::ShellBallCurrent { r_in: 0.5, r_out: 1.0, j0: jx() };
    let mut prev = f64::NEG_INFINITY;
    for s in [1.0, 2.0, 3.0] {
        let r = run("active", &SweepInput::new(spec(0.0, s, -s, core(2.0, 1.0, 1.0)), src.clone()));
        let slope = r.fit.unwrap().slope;
        assert!(slope >= prev - 0.2, "s = {s}: {slope} after {prev}");
        prev = slope;
        if s == 3.0 {
            assert_eq!(r.predicted, 3.0);
            passes(&r, 2.7);
        }
    }
}

#[test]
fn core_current_needs_conducting_core() {
    let src = SourceSpec::CoreBallCurrent { radius: 0.25, j0: jx() };
    let input = SweepInput::new(spec(0.0, 2.0, 0.0, core(2.0, 1.0, 0.0)), src);
    let e = ExperimentRegistry::default().get("active").unwrap().run(&input);
    assert!(matches!(e, Err(ExperimentError::Precondition(_))));
}

#[test]
fn invalid_exponents_rejected() {
    let input = SweepInput::new(spec(0.0, 5.0, 0.0, core(2.0, 1.0, 0.0)), SourceSpec::canonical_plane_wave());
    assert!(ExperimentRegistry::default().get("passive").unwrap().run(&input).is_err());
}

fn small(mode: TraceMode, source: SourceSpec) -> SweepResult {
    let mut input = SweepInput::new(CloakSpec::classical(0.1, CoreMedium::VACUUM), source);
    input.abscissae = geometric(0.3, 0.03, 6);
    input.trace_mode = mode;
    run("small-inclusion", &input)
}

#[test]
fn small_inclusion_rates() {
    let pw = SourceSpec::canonical_plane_wave();
    passes(&small(TraceMode::FixedProfile, pw.clone()), 1.8);
    passes(&small(TraceMode::IncidentTrace, pw), 2.8);
}

#[test]
fn zero_trace_sweep_is_flagged() {
    let r = small(TraceMode::FixedProfile, SourceSpec::TangentialTrace(TangentialTrace::zero(3)));
    assert!(r.below_floor && !r.passed);
    assert!(r.norms.iter().all(|n| *n == 0.0));
}

#[test]
fn cloak_bust_without_layer() {
    let base = spec(0.0, 2.0, 0.0, core(2.0, 1.0, 0.0));
    let r = run("cloak-bust", &SweepInput::new(base.clone(), SourceSpec::canonical_plane_wave()));
    assert!(r.fit.unwrap().slope < r.predicted - 1.0, "{:?}", r.fit);
    assert_eq!(r.worst_core_eps.as_ref().unwrap().len(), r.norms.len());

    // the layered control decays at the predicted rate
    passes(&run("passive", &SweepInput::new(base.clone(), SourceSpec::canonical_plane_wave())), 2.7);

    // a benign core without the layer still decays
    let mut benign = base;
    benign.conducting_layer = false;
    let r = run("passive", &SweepInput::new(benign, SourceSpec::canonical_plane_wave()));
    assert!(r.fit.unwrap().slope > 2.0);
}

#[test]
fn sweeps_are_deterministic() {
    let input = SweepInput::new(spec(1.0, 1.0, 1.0, core(2.0, 1.0, 0.0)), SourceSpec::canonical_plane_wave());
    let echo = serde_json::json!({"case": "determinism"});
    let a = run("passive", &input);
    let b = run("passive", &input);
    assert_eq!(a.to_json(&echo).to_string(), b.to_json(&echo).to_string());
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.rho_values.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn json_schema_fields() {
    let input = SweepInput::new(spec(0.0, 2.0, 0.0, core(2.0, 1.0, 0.0)), SourceSpec::canonical_plane_wave());
    let v = run("passive", &input).to_json(&serde_json::json!({}));
    for key in ["experiment", "config_echo", "points", "slope", "intercept", "r2"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["points"].as_array().unwrap().len(), 6);
}
