//! Surface traces on `∂B_R`, the integral representation of the far field and
//! the energy identity.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::solver::exterior_fields;
use super::{far_field, Frame, MieError, MieSolution, MultipoleCoefficients, C64, I, ZERO};
use crate::cloakmap::SourceSpec;
use crate::quadrature::{gauss_legendre, integrate_adaptive};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearFieldSample {
    pub point: Vector3<f64>,
    /// Tangential parts of the fields.
    pub e: Vector3<C64>,
    pub h: Vector3<C64>,
}

/// Samples on a sphere with area weights (`R² dΩ`).
#[derive(Debug, Clone, PartialEq)]
pub struct NearFieldTrace {
    pub radius: f64,
    pub samples: Vec<NearFieldSample>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre in `cos θ` times uniform `φ`, with the poles of the grid
/// along `frame.e3`. Returns unit directions and solid-angle weights.
pub(crate) fn sphere_nodes(frame: &Frame, n_theta: usize, n_phi: usize) -> (Vec<Vector3<f64>>, Vec<f64>) {
    let (mu, w) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut dirs = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (m, wm) in mu.iter().zip(&w) {
        let st = (1.0 - m * m).max(0.0).sqrt();
        for k in 0..n_phi {
            let phi = (k as f64 + 0.5) * dphi;
            let local = Vector3::new(st * phi.cos(), st * phi.sin(), *m);
            dirs.push(frame.e1 * local.x + frame.e2 * local.y + frame.e3 * local.z);
            weights.push(wm * dphi);
        }
    }
    (dirs, weights)
}

fn cvec(v: &Vector3<f64>) -> Vector3<C64> {
    v.map(|x| C64::new(x, 0.0))
}

fn tangential(v: Vector3<C64>, nu: &Vector3<f64>) -> Vector3<C64> {
    let n = cvec(nu);
    v - n * n.dot(&v)
}

/// Unconjugated dot product.
fn dotc(a: &Vector3<C64>, b: &Vector3<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn conj(v: &Vector3<C64>) -> Vector3<C64> {
    v.map(|c| c.conj())
}

pub(crate) fn plane_wave_fields(src: &SourceSpec, omega: f64, x: &Vector3<f64>) -> Option<[Vector3<C64>; 2]> {
    match src {
        SourceSpec::PlaneWave { khat, pol } => {
            let e = pol * (I * omega * khat.dot(x)).exp();
            Some([e, cvec(khat).cross(&e)])
        }
        _ => None,
    }
}

/// Tangential exterior fields on `|x| = radius`: the scattered field of
/// `coeffs`, plus `incident` when given.
pub fn near_field_trace(
    coeffs: &MultipoleCoefficients,
    incident: Option<&SourceSpec>,
    omega: f64,
    radius: f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<NearFieldTrace, MieError> {
    if radius <= coeffs.radius {
        return Err(MieError::InsideScatterer {
            radius,
            outer: coeffs.radius,
        });
    }
    let (dirs, w) = sphere_nodes(&coeffs.frame, n_theta, n_phi);
    let mut samples = Vec::with_capacity(dirs.len());
    for nu in &dirs {
        let x = nu * radius;
        let [mut e, mut h] = exterior_fields(coeffs, omega, &x)?;
        if let Some([ei, hi]) = incident.and_then(|s| plane_wave_fields(s, omega, &x)) {
            e += ei;
            h += hi;
        }
        samples.push(NearFieldSample {
            point: x,
            e: tangential(e, nu),
            h: tangential(h, nu),
        });
    }
    Ok(NearFieldTrace {
        radius,
        samples,
        weights: w.iter().map(|w| w * radius * radius).collect(),
    })
}

/// `A(x̂) = (ik/4π) x̂ × ∫ {ν×E + (ν×H)×x̂} e^{−ik x̂·y} ds(y)` over the
/// scattered-field trace.
pub fn far_field_via_surface_integral(trace: &NearFieldTrace, omega: f64, xhat: &Vector3<f64>) -> Vector3<C64> {
    let xh = cvec(xhat);
    let mut acc = Vector3::from_element(ZERO);
    for (s, w) in trace.samples.iter().zip(&trace.weights) {
        let nu = cvec(&(s.point / s.point.norm()));
        let phase = (-I * omega * xhat.dot(&s.point)).exp();
        acc += (nu.cross(&s.e) + nu.cross(&s.h).cross(&xh)) * (phase * *w);
    }
    xh.cross(&acc) * (I * omega / (4.0 * PI))
}

/// Largest difference between the surface-integral and coefficient far fields
/// over `directions`, relative to the largest coefficient-route amplitude.
pub fn surface_far_field_check(
    coeffs: &MultipoleCoefficients,
    omega: f64,
    radius: f64,
    n_theta: usize,
    n_phi: usize,
    directions: &[Vector3<f64>],
) -> Result<f64, MieError> {
    let trace = near_field_trace(coeffs, None, omega, radius, n_theta, n_phi)?;
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;
    for d in directions {
        let a = far_field(coeffs, omega, d);
        let b = far_field_via_surface_integral(&trace, omega, d);
        scale = scale.max(a.norm());
        worst = worst.max((a - b).norm());
    }
    let rel = if scale > 0.0 { worst / scale } else { worst };
    if rel > 1e-4 {
        log::warn!("surface grid {n_theta}x{n_phi} too coarse: far-field routes differ by {rel:e}");
    }
    Ok(rel)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyBalance {
    /// `ω ∫ (Im ε |E|² + Im μ |H|²)` over the scatterer.
    pub absorbed: f64,
    /// Net inward flux through `∂B_R` plus the work done by the current.
    pub flux_rhs: f64,
    /// `|absorbed − flux_rhs| / max(|absorbed|, |flux_rhs|, ω·tiny)`.
    pub residual: f64,
    pub difference: f64,
}

const RADIAL_REL_TOL: f64 = 1e-12;
const ENERGY_PHI_NODES: usize = 8;

/// Both sides of the energy identity for a solved state.
pub fn energy_balance(sol: &MieSolution) -> Result<EnergyBalance, MieError> {
    let omega = sol.omega();
    let c = &sol.coefficients;
    let n_max = c.n_max();
    let frame = c.frame;
    let (dirs_in, w_in) = sphere_nodes(&frame, n_max + 12, ENERGY_PHI_NODES);
    let current = cvec(&frame.e1) * c.amplitude[0] + cvec(&frame.e2) * c.amplitude[1];

    let mut absorbed = 0.0;
    let mut work = 0.0;
    let mut failure: Option<MieError> = None;
    for j in 0..sol.region_count() {
        let (r_in, r_out, eps, mu, source) = sol.region_info(j);
        let lossy = eps.im > 0.0 || mu.im > 0.0;
        if !(lossy || source) {
            continue;
        }
        // shells whose radial functions vary on a scale much shorter than the
        // thickness still converge, the adaptive rule just subdivides more
        let mut radial = |r: f64, take: &dyn Fn(&[Vector3<C64>; 2]) -> f64| -> f64 {
            let state = match sol.radial_state(j, r) {
                Ok(s) => s,
                Err(e) => {
                    failure.get_or_insert(e);
                    return 0.0;
                }
            };
            let s: f64 = dirs_in
                .iter()
                .zip(&w_in)
                .map(|(d, w)| w * take(&sol.eval_state(&state, d)))
                .sum();
            s * r * r
        };
        if lossy {
            let dens = |f: &[Vector3<C64>; 2]| {
                omega * (eps.im * f[0].norm_squared() + mu.im * f[1].norm_squared())
            };
            absorbed += integrate_adaptive(|r| radial(r, &dens), r_in, r_out, RADIAL_REL_TOL, 0.0).value;
        }
        if source {
            let jw = |f: &[Vector3<C64>; 2]| dotc(&current, &conj(&f[0])).re;
            work += integrate_adaptive(|r| radial(r, &jw), r_in, r_out, RADIAL_REL_TOL, 0.0).value;
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }

    let big_r = 1.25 * sol.outer_radius();
    let src = sol.has_incident().then(|| SourceSpec::PlaneWave {
        khat: frame.e3,
        pol: frame.to_global(&Vector3::new(c.amplitude[0], c.amplitude[1], ZERO)),
    });
    let n_theta = n_max + (omega * big_r).ceil() as usize + 20;
    let (dirs, w) = sphere_nodes(&frame, n_theta, ENERGY_PHI_NODES);
    let mut flux = 0.0;
    for (nu, w) in dirs.iter().zip(&w) {
        let x = nu * big_r;
        let [es, hs] = exterior_fields(c, omega, &x)?;
        let mut s = es.cross(&conj(&hs));
        if let Some([ei, hi]) = src.as_ref().and_then(|s| plane_wave_fields(s, omega, &x)) {
            s += ei.cross(&conj(&hs)) + es.cross(&conj(&hi));
        }
        flux += w * dotc(&s, &cvec(nu)).re;
    }
    flux *= big_r * big_r;

    let flux_rhs = -flux - work;
    let difference = (absorbed - flux_rhs).abs();
    let scale = absorbed.abs().max(flux_rhs.abs()).max(omega * f64::MIN_POSITIVE);
    Ok(EnergyBalance {
        absorbed,
        flux_rhs,
        residual: difference / scale,
        difference,
    })
}
