use std::f64::consts::PI;

use cloakbench_core::cloakmap::SourceSpec;
use cloakbench_core::farnorms::{
    direction, far_field_sup, l2_norm, make_grid, sup_norm, sup_norm_refined, FarFieldPattern,
};
use cloakbench_core::mie::{far_field, plane_wave_solve, LayeredSphere, MultipoleCoefficients, Shell};
use nalgebra::{Rotation3, Vector3};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn e_phi(x: &Vector3<f64>) -> Vector3<f64> {
    let rho = x.x.hypot(x.y);
    if rho == 0.0 {
        Vector3::y()
    } else {
        Vector3::new(-x.y / rho, x.x / rho, 0.0)
    }
}

fn two_layer_pattern(omega: f64) -> MultipoleCoefficients {
    let s = LayeredSphere::new(vec![
        Shell { outer_radius: 0.4, eps: c(4.0, 0.3), mu: c(1.0, 0.0) },
        Shell { outer_radius: 1.0, eps: c(2.0, 0.0), mu: c(1.5, 0.1) },
    ])
    .unwrap();
    plane_wave_solve(&s, omega, &SourceSpec::canonical_plane_wave()).unwrap().coefficients
}

#[test]
fn constant_integrates_to_four_pi() {
    for (np, na) in [(8, 16), (31, 40), (64, 128)] {
        let g = make_grid(np, na).unwrap();
        let err = (g.integrate(&vec![1.0; g.len()]) - 4.0 * PI).abs();
        assert!(err < 1e-13, "{np}x{na}: {err:e}");
    }
}

#[test]
fn degree_three_pattern_norm() {
    // |P_3(cos θ)|² integrates to 2π · 2/7
    let g = make_grid(16, 32).unwrap();
    let p = FarFieldPattern::from_fn(g, |x| {
        let t = x.z;
        let v = 0.5 * (5.0 * t * t * t - 3.0 * t);
        e_phi(x).map(|e| c(e * v, 0.0))
    });
    let want = (4.0 * PI / 7.0).sqrt();
    assert!((l2_norm(&p) - want).abs() < 1e-12 * want);
    assert!(p.max_radial_fraction() < 1e-14);
}

#[test]
fn electric_dipole_pattern() {
    for omega in [0.5, 1.0, 3.0] {
        let mut coeffs = MultipoleCoefficients::zero(1, 1.0);
        coeffs.a[0] = c(1.0, 0.0);
        let g = make_grid(32, 64).unwrap();
        let p = FarFieldPattern::from_coefficients(g.clone(), &coeffs, omega);
        let amp = 3.0 / (2.0 * omega);
        assert!((far_field_sup(&g, &coeffs, omega) - amp).abs() < 1e-12 * amp);
        let l2 = amp * (8.0 * PI / 3.0).sqrt();
        assert!((l2_norm(&p) - l2).abs() < 1e-12 * l2);
        // on-grid sampling already hits the polar maxima closely
        assert!(sup_norm(&p) <= amp * (1.0 + 1e-12));
    }
}

#[test]
fn grid_doubling_is_stable() {
    let omega = 2.0;
    let coeffs = two_layer_pattern(omega);
    let np = 2 * coeffs.n_max() + 2;
    let coarse = make_grid(np, 2 * np).unwrap();
    let fine = make_grid(2 * np, 4 * np).unwrap();
    let a = far_field_sup(&coarse, &coeffs, omega);
    let b = far_field_sup(&fine, &coeffs, omega);
    assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
    let la = l2_norm(&FarFieldPattern::from_coefficients(coarse, &coeffs, omega));
    let lb = l2_norm(&FarFieldPattern::from_coefficients(fine, &coeffs, omega));
    assert!((la - lb).abs() < 1e-12 * lb);
}

#[test]
fn norms_are_rotation_invariant() {
    let omega = 1.7;
    let coeffs = two_layer_pattern(omega);
    let rot = Rotation3::from_euler_angles(0.7, -0.4, 2.1);
    let rc = rot.matrix().map(|v| c(v, 0.0));
    let f = |x: &Vector3<f64>| far_field(&coeffs, omega, x);
    let fr = |x: &Vector3<f64>| rc * far_field(&coeffs, omega, &(rot.inverse() * x));
    let g = make_grid(32, 64).unwrap();
    let p = FarFieldPattern::from_fn(g.clone(), f);
    let pr = FarFieldPattern::from_fn(g, fr);
    let (l, lr) = (l2_norm(&p), l2_norm(&pr));
    assert!((l - lr).abs() < 1e-10 * l);
    let (s, sr) = (sup_norm_refined(&p, f), sup_norm_refined(&pr, fr));
    assert!((s - sr).abs() < 1e-10 * s, "{s} vs {sr}");
}

#[test]
fn solver_patterns_are_tangential() {
    let omega = 2.5;
    let coeffs = two_layer_pattern(omega);
    let p = FarFieldPattern::from_coefficients(make_grid(24, 48).unwrap(), &coeffs, omega);
    assert!(p.max_radial_fraction() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sup_dominates_mean_l2(coef in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8),
                             omega in 0.2f64..4.0, th in 0.0f64..PI, ph in 0.0f64..std::f64::consts::TAU) {
        let mut m = MultipoleCoefficients::zero(4, 1.0);
        for n in 0..4 {
            m.a[n] = c(coef[2 * n].0, coef[2 * n].1);
            m.b[n] = c(coef[2 * n + 1].0, coef[2 * n + 1].1);
        }
        m.frame = cloakbench_core::mie::Frame::from_axis(direction(th, ph), Vector3::new(0.3, 0.1, 0.9));
        let g = make_grid(12, 24).unwrap();
        let p = FarFieldPattern::from_coefficients(g.clone(), &m, omega);
        let l2 = l2_norm(&p);
        prop_assert!(sup_norm(&p) >= l2 / (4.0 * PI).sqrt() * (1.0 - 1e-12));
        prop_assert!(far_field_sup(&g, &m, omega) >= sup_norm(&p));
    }
}
