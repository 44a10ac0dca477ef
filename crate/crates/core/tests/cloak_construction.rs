use cloakbench_core::cloakmap::{
    exponents, physical_source, virtual_scatterer, virtual_source, CloakSpec, CoreMedium, SourceSpec,
};
use cloakbench_core::materials::{
    check_regular, physical_cloak_tensors, push_forward, radial_blowup_map, radial_profile, MapSample,
    MaterialPoint, SymTensor3,
};
use cloakbench_core::quadrature::integrate_adaptive;
use nalgebra::{Matrix3, Rotation3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn spd_strategy() -> impl Strategy<Value = SymTensor3> {
    (
        (0.1f64..5.0, 0.1f64..5.0, 0.1f64..5.0),
        (-3.2f64..3.2, -3.2f64..3.2, -3.2f64..3.2),
    )
        .prop_map(|((a, b, c), (r, p, y))| {
            let q = Rotation3::from_euler_angles(r, p, y).into_inner();
            SymTensor3::from_matrix(&(q * Matrix3::from_diagonal(&Vector3::new(a, b, c)) * q.transpose()))
        })
}

fn affine_strategy() -> impl Strategy<Value = (Matrix3<f64>, Vector3<f64>)> {
    (prop::array::uniform9(-2.0f64..2.0), prop::array::uniform3(-1.0f64..1.0))
        .prop_filter_map("near-singular", |(m, b)| {
            let a = Matrix3::from_row_slice(&m) + Matrix3::identity() * 2.5;
            (a.determinant().abs() > 0.1).then(|| (a, Vector3::from(b)))
        })
}

fn rel_diff(a: &SymTensor3, b: &SymTensor3) -> f64 {
    let scale = b.entries().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.max_abs_diff(b) / scale.max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn push_forward_is_functorial((f, fb) in affine_strategy(), (g, gb) in affine_strategy(),
                                  m in spd_strategy(), y in prop::array::uniform3(-1.0f64..1.0)) {
        let y = Vector3::from(y);
        let sg = MapSample::affine(&g, &gb, y);
        let sf = MapSample::affine(&f, &fb, sg.x);
        let composed = MapSample::affine(&(f * g), &(f * gb + fb), y);
        let lhs = push_forward(&composed, &m).unwrap();
        let rhs = push_forward(&sf, &push_forward(&sg, &m).unwrap()).unwrap();
        prop_assert!(rel_diff(&lhs, &rhs) <= 1e-12, "{}", rel_diff(&lhs, &rhs));
    }

    #[test]
    fn push_forward_preserves_spd((a, b) in affine_strategy(), m in spd_strategy()) {
        let s = MapSample::affine(&a, &b, Vector3::zeros());
        let out = push_forward(&s, &m).unwrap();
        prop_assert!(out.is_positive_definite());
        let mat = out.to_matrix();
        prop_assert_eq!(mat, mat.transpose());
    }

    #[test]
    fn identity_push_forward_is_exact(m in spd_strategy(), y in prop::array::uniform3(-5.0f64..5.0)) {
        let out = push_forward(&MapSample::identity(Vector3::from(y)), &m).unwrap();
        prop_assert!(out.max_abs_diff(&m) <= 1e-15);
    }

    #[test]
    fn conjugated_spectrum_is_regular(r in -3.2f64..3.2, p in -3.2f64..3.2, yw in -3.2f64..3.2) {
        let q = Rotation3::from_euler_angles(r, p, yw).into_inner();
        let d = Matrix3::from_diagonal(&Vector3::new(0.7, 1.1, 1.9));
        let m = q * d * q.transpose();
        let t = SymTensor3::from_matrix(&m);
        // independent eigensolver: nalgebra's general Schur route on the full matrix
        let mut ev: Vec<f64> = m.complex_eigenvalues().iter().map(|c| c.re).collect();
        ev.sort_by(f64::total_cmp);
        let mine = t.eigenvalues();
        for (a, b) in ev.iter().zip(&mine) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let mut sym = SymmetricEigen::new(m).eigenvalues.as_slice().to_vec();
        sym.sort_by(f64::total_cmp);
        prop_assert!((sym[0] - 0.7).abs() < 1e-12 && (sym[2] - 1.9).abs() < 1e-12);
        let pt = MaterialPoint { eps: t, mu: t, sigma: SymTensor3::ZERO };
        prop_assert!(check_regular(&pt, 0.5, 2.0).is_regular());
    }

    #[test]
    fn radial_map_jacobian_matches_finite_differences(
        rho in 0.01f64..0.5, r in 0.0f64..1.0, th in 0.1f64..3.0, ph in 0.0f64..std::f64::consts::TAU
    ) {
        let (ri, ro) = (1.0, 2.0);
        // stay clear of the two kinks
        let lo = rho * ri * 1.01;
        let rad = lo + (ro * 0.99 - lo) * r;
        let y = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()) * rad;
        let s = radial_blowup_map(rho, ri, ro, y).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = h;
            let fp = radial_blowup_map(rho, ri, ro, y + e).unwrap().x;
            let fm = radial_blowup_map(rho, ri, ro, y - e).unwrap().x;
            let col = (fp - fm) / (2.0 * h);
            for i in 0..3 {
                prop_assert!((col[i] - s.jacobian[(i, k)]).abs() < 1e-6);
            }
        }
        prop_assert!((s.det - s.jacobian.determinant()).abs() <= 1e-12 * s.det.abs());
        prop_assert!(s.det > 0.0);
    }

    #[test]
    fn cloak_medium_is_regular_inside_shell(rho in 0.01f64..0.2, t in 0.01f64..0.99, dir in prop::array::uniform3(-1.0f64..1.0)) {
        let d = Vector3::from(dir);
        prop_assume!(d.norm() > 0.1);
        let spec = CloakSpec::classical(rho, CoreMedium::VACUUM);
        let x = d.normalize() * (1.0 + t);
        let m = physical_cloak_tensors(&spec, x);
        // eigenvalues of the pushed-forward identity lie in [b ρ²-ish, 1/b]
        let (a, b) = radial_profile(rho, 1.0, 2.0);
        let lo = b * (rho / (a + b * rho)).powi(2) * 0.5;
        let hi = (1.0 / b) * 2.0;
        prop_assert!(check_regular(&m, lo, hi).is_regular());
    }
}

#[test]
fn radial_map_is_continuous_across_interfaces() {
    let (rho, ri, ro) = (0.1, 1.0, 2.0);
    let dir = Vector3::new(0.3, -0.4, 0.5).normalize();
    for r0 in [rho * ri, ro] {
        let below = radial_blowup_map(rho, ri, ro, dir * (r0 * (1.0 - 1e-13))).unwrap().x;
        let at = radial_blowup_map(rho, ri, ro, dir * r0).unwrap().x;
        assert!((below - at).norm() < 1e-10);
    }
    let inner = radial_blowup_map(rho, ri, ro, dir * rho * ri).unwrap();
    assert!((inner.x.norm() - ri).abs() < 1e-14);
    let outer = radial_blowup_map(rho, ri, ro, dir * ro).unwrap();
    assert!((outer.x - dir * ro).norm() <= 1e-15);
}

#[test]
fn worked_radial_map_value() {
    let s = radial_blowup_map(0.1, 1.0, 2.0, Vector3::x()).unwrap();
    let want = (2.0 - 0.2) / 1.9 + 1.0 / 1.9;
    assert!((s.x.x - want).abs() < 1e-14);
    assert!((s.x.x - 1.47368).abs() < 1e-5);
}

#[test]
fn smallest_eigenvalue_near_inner_boundary_scales_like_rho_squared() {
    let lam = |rho: f64| {
        let spec = CloakSpec::classical(rho, CoreMedium::VACUUM);
        let m = physical_cloak_tensors(&spec, Vector3::new(1.0 + 1e-9, 0.0, 0.0));
        m.eps.eigenvalues()[0]
    };
    let slope = (lam(0.1) / lam(0.05)).ln() / 2f64.ln();
    assert!((slope - 2.0).abs() < 0.1, "{slope}");
}

#[test]
fn current_norm_bookkeeping() {
    // ‖J‖_{L²(D_ρ)} = ρ^{-1/2} ‖J̃‖_{L²(D)} for ball and shell currents
    let cases = [
        (0.07, SourceSpec::CoreBallCurrent { radius: 0.31, j0: Vector3::new(C::new(1.0, 0.5), C::new(0.0, 0.0), C::new(-0.3, 0.0)) }),
        (0.02, SourceSpec::CoreBallCurrent { radius: 0.12, j0: Vector3::new(C::new(0.0, 2.0), C::new(1.0, 0.0), C::new(0.0, 0.0)) }),
        (0.15, SourceSpec::ShellBallCurrent { r_in: 0.55, r_out: 0.9, j0: Vector3::new(C::new(0.2, 0.0), C::new(0.0, -1.0), C::new(0.4, 0.4)) }),
    ];
    let l2 = |src: &SourceSpec| {
        let (lo, hi, j) = match src {
            SourceSpec::CoreBallCurrent { radius, j0 } => (0.0, *radius, j0),
            SourceSpec::ShellBallCurrent { r_in, r_out, j0 } => (*r_in, *r_out, j0),
            _ => unreachable!(),
        };
        let j2 = j.norm_squared();
        integrate_adaptive(|r| 4.0 * std::f64::consts::PI * r * r * j2, lo, hi, 1e-14, 0.0).value.sqrt()
    };
    for (rho, src) in cases {
        let spec = CloakSpec::classical(rho, CoreMedium::VACUUM);
        let v = virtual_source(&spec, &src);
        assert!((l2(&v) - rho.powf(-0.5) * l2(&src)).abs() < 1e-12 * l2(&v));
        let back = physical_source(&spec, &v);
        match (&back, &src) {
            (
                SourceSpec::CoreBallCurrent { radius: a, j0: ja },
                SourceSpec::CoreBallCurrent { radius: b, j0: jb },
            ) => {
                assert!((a - b).abs() < 1e-14 && (ja - jb).norm() < 1e-14 * jb.norm());
            }
            (
                SourceSpec::ShellBallCurrent { r_in: a, r_out: c, j0: ja },
                SourceSpec::ShellBallCurrent { r_in: b, r_out: d, j0: jb },
            ) => {
                assert!((a - b).abs() < 1e-14 && (c - d).abs() < 1e-14);
                assert!((ja - jb).norm() < 1e-14 * jb.norm());
            }
            _ => panic!("variant changed"),
        }
    }
}

proptest! {
    #[test]
    fn virtual_layer_is_passive(rho in 0.001f64..0.99, r in -2.0f64..2.0, s in -2.0f64..3.0, t in -2.0f64..2.0,
                                beta in 0.01f64..10.0, omega in 0.1f64..10.0) {
        let e = exponents(r, s, t);
        prop_assume!(e.valid);
        let mut spec = CloakSpec::classical(rho, CoreMedium { eps: 2.0, mu: 1.0, sigma: 0.5 });
        spec.exponents = e;
        spec.beta = beta;
        spec.omega = omega;
        let sphere = virtual_scatterer(&spec).unwrap();
        for sh in sphere.shells() {
            prop_assert!(sh.eps.im >= 0.0 && sh.mu.im >= 0.0);
        }
        prop_assert!(sphere.shells()[0].outer_radius < sphere.shells()[1].outer_radius);
    }
}
