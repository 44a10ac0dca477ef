//! Exact scattering by radially stratified spheres in vacuum.
//!
//! Time dependence `e^{-iωt}`, `ε0 = μ0 = 1`, vacuum wavenumber `k = ω`.
//! Fields use the Bohren–Huffman expansion of the x-polarized plane wave,
//!
//! ```text
//! E_i = Σ E_n (M_o1n − i N_e1n),   E_s = Σ E_n (i a_n N_e1n − b_n M_o1n),
//! E_n = iⁿ (2n+1) / (n(n+1)),
//! ```
//!
//! in a local frame whose z-axis is the propagation (or dipole-normal)
//! direction. The y-polarized family is the same pattern turned by 90° about
//! the local z-axis; every excitation handled here is a complex combination of
//! the two families.

mod solver;
mod surface;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::{self, SpecfunError};

pub use solver::{
    current_n1_solve, exterior_trace_solve, plane_wave_solve, plane_wave_solve_dense,
    plane_wave_solve_with_cutoff, plane_wave_trace, solve_source, MieSolution,
};
pub use surface::{
    energy_balance, far_field_via_surface_integral, near_field_trace, surface_far_field_check,
    EnergyBalance, NearFieldSample, NearFieldTrace,
};

pub(crate) type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Tail criterion for the multipole cutoff.
pub const TAIL_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MieError {
    #[error("invalid layered sphere: {0}")]
    InvalidSphere(String),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error("multipole cutoff inadequate: tail ratio {tail:e} at N = {n_max}")]
    CutoffInadequate { n_max: usize, tail: f64 },
    #[error("passivity violated in mode {n} ({mode}): Re c - |c|^2 = {excess:e}")]
    Passivity {
        n: usize,
        mode: &'static str,
        excess: f64,
    },
    #[error("unsupported source: {0}")]
    UnsupportedSource(String),
    #[error("sampling radius {radius} is inside the scatterer (outer radius {outer})")]
    InsideScatterer { radius: f64, outer: f64 },
    #[error("singular interface system for degree {n}")]
    Singular { n: usize },
}

/// Homogeneous shell ending at `outer_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub outer_radius: f64,
    pub eps: C64,
    pub mu: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredSphere {
    shells: Vec<Shell>,
}

impl LayeredSphere {
    pub fn new(shells: Vec<Shell>) -> Result<Self, MieError> {
        if shells.is_empty() {
            return Err(MieError::InvalidSphere("at least one shell is required".into()));
        }
        let mut prev = 0.0;
        for (i, s) in shells.iter().enumerate() {
            if !(s.outer_radius > prev && s.outer_radius.is_finite()) {
                return Err(MieError::InvalidSphere(format!(
                    "shell {i}: radii must be strictly increasing and positive ({} after {prev})",
                    s.outer_radius
                )));
            }
            if !(s.eps.is_finite() && s.mu.is_finite()) {
                return Err(MieError::InvalidSphere(format!("shell {i}: non-finite material")));
            }
            if s.eps.im < 0.0 || s.mu.im < 0.0 {
                return Err(MieError::InvalidSphere(format!(
                    "shell {i}: Im(eps) and Im(mu) must be nonnegative (eps = {}, mu = {})",
                    s.eps, s.mu
                )));
            }
            if s.eps.norm() == 0.0 || s.mu.norm() == 0.0 {
                return Err(MieError::InvalidSphere(format!("shell {i}: eps and mu must be nonzero")));
            }
            prev = s.outer_radius;
        }
        Ok(Self { shells })
    }

    /// Homogeneous sphere.
    pub fn homogeneous(radius: f64, eps: C64, mu: C64) -> Result<Self, MieError> {
        Self::new(vec![Shell {
            outer_radius: radius,
            eps,
            mu,
        }])
    }

    pub fn shells(&self) -> &[Shell] {
        &self.shells
    }

    pub fn outer_radius(&self) -> f64 {
        self.shells.last().map(|s| s.outer_radius).unwrap_or(0.0)
    }
}

/// Orthonormal local frame; `e3` is the local z-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    pub e3: Vector3<f64>,
}

impl Frame {
    pub fn canonical() -> Self {
        Self {
            e1: Vector3::x(),
            e2: Vector3::y(),
            e3: Vector3::z(),
        }
    }

    /// Frame with `e3 = axis` and `e1` the part of `hint` orthogonal to it
    /// (any perpendicular direction if `hint` is parallel to `axis`).
    pub fn from_axis(axis: Vector3<f64>, hint: Vector3<f64>) -> Self {
        let e3 = axis.normalize();
        let mut e1 = hint - e3 * e3.dot(&hint);
        if e1.norm() < 1e-8 * hint.norm().max(1e-300) || e1.norm() == 0.0 {
            let trial = if e3.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            e1 = trial - e3 * e3.dot(&trial);
        }
        let e1 = e1.normalize();
        let e2 = e3.cross(&e1);
        Self { e1, e2, e3 }
    }

    pub fn to_local(&self, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(self.e1.dot(v), self.e2.dot(v), self.e3.dot(v))
    }

    pub fn to_global(&self, v: &Vector3<C64>) -> Vector3<C64> {
        let c = |e: &Vector3<f64>| e.map(|x| C64::new(x, 0.0));
        c(&self.e1) * v[0] + c(&self.e2) * v[1] + c(&self.e3) * v[2]
    }

    /// Components of a complex vector along `e1`, `e2`.
    pub fn transverse_components(&self, v: &Vector3<C64>) -> [C64; 2] {
        let dot = |e: &Vector3<f64>| e[0] * v[0] + e[1] * v[1] + e[2] * v[2];
        [dot(&self.e1), dot(&self.e2)]
    }
}

/// Outgoing expansion coefficients of a scattered field.
///
/// The field is `p1·F_x + p2·F_y` where `F_x` is the x-polarized family with
/// coefficients `a`, `b` in `frame`, `F_y` the same family turned by 90°
/// about `frame.e3`, and `[p1, p2] = amplitude`. `a[n-1]` is degree `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipoleCoefficients {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub frame: Frame,
    pub amplitude: [C64; 2],
    /// Radius of the smallest ball containing scatterer and sources.
    pub radius: f64,
}

impl MultipoleCoefficients {
    pub fn zero(n_max: usize, radius: f64) -> Self {
        Self {
            a: vec![ZERO; n_max],
            b: vec![ZERO; n_max],
            frame: Frame::canonical(),
            amplitude: [ONE, ZERO],
            radius,
        }
    }

    pub fn n_max(&self) -> usize {
        self.a.len().max(self.b.len())
    }

    pub fn a(&self, n: usize) -> C64 {
        self.a.get(n - 1).copied().unwrap_or_default()
    }

    pub fn b(&self, n: usize) -> C64 {
        self.b.get(n - 1).copied().unwrap_or_default()
    }

    /// `(|a_N| + |b_N|) / max_n (|a_n| + |b_n|)`; zero for an empty field.
    pub fn tail_ratio(&self) -> f64 {
        let n = self.n_max();
        if n == 0 {
            return 0.0;
        }
        let mag: Vec<f64> = (1..=n).map(|k| self.a(k).norm() + self.b(k).norm()).collect();
        let max = mag.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            0.0
        } else {
            mag[n - 1] / max
        }
    }

    pub fn amplitude_norm_sqr(&self) -> f64 {
        self.amplitude[0].norm_sqr() + self.amplitude[1].norm_sqr()
    }
}

pub(crate) fn e_n(n: usize) -> C64 {
    let nf = n as f64;
    I.powu(n as u32) * ((2.0 * nf + 1.0) / (nf * (nf + 1.0)))
}

/// Wiscombe-type cutoff for size parameter `x`, floored at 4.
pub fn wiscombe_cutoff(x: f64) -> usize {
    let x = x.abs();
    ((x + 4.05 * x.cbrt() + 2.0).ceil() as usize).max(4)
}

/// Spherical angles of a unit vector.
pub(crate) fn angles(v: &Vector3<f64>) -> (f64, f64) {
    let r = v.norm();
    let theta = (v.z / r).clamp(-1.0, 1.0).acos();
    let phi = v.y.atan2(v.x);
    (theta, phi)
}

/// Cartesian components of `(v_r, v_θ, v_φ)`.
pub(crate) fn sph_to_cart(theta: f64, phi: f64, v: [C64; 3]) -> Vector3<C64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let rh = Vector3::new(st * cp, st * sp, ct);
    let th = Vector3::new(ct * cp, ct * sp, -st);
    let ph = Vector3::new(-sp, cp, 0.0);
    let c = |e: Vector3<f64>| e.map(|x| C64::new(x, 0.0));
    c(rh) * v[0] + c(th) * v[1] + c(ph) * v[2]
}

/// Applies `family` (fields of the x-polarized pattern in local coordinates)
/// to both families and maps the results to global coordinates.
pub(crate) fn combine_families<const K: usize, F>(
    frame: &Frame,
    amplitude: [C64; 2],
    x: &Vector3<f64>,
    family: F,
) -> [Vector3<C64>; K]
where
    F: Fn(&Vector3<f64>) -> [Vector3<C64>; K],
{
    let v = frame.to_local(x);
    let mut out = [Vector3::from_element(ZERO); K];
    if amplitude[0] != ZERO {
        for (o, f) in out.iter_mut().zip(family(&v)) {
            *o += f * amplitude[0];
        }
    }
    if amplitude[1] != ZERO {
        // y-family at v equals Rz · F_x(Rzᵀ v), Rz a quarter turn about z
        for (o, w) in out.iter_mut().zip(family(&Vector3::new(v.y, -v.x, v.z))) {
            *o += Vector3::new(-w[1], w[0], w[2]) * amplitude[1];
        }
    }
    out.map(|o| frame.to_global(&o))
}

/// Scattering amplitude `A(x̂)`: `E_s ≈ e^{ikr}/r · A(x̂)`.
pub fn far_field(coeffs: &MultipoleCoefficients, omega: f64, xhat: &Vector3<f64>) -> Vector3<C64> {
    let n_max = coeffs.n_max();
    combine_families(&coeffs.frame, coeffs.amplitude, xhat, |v| {
        let (theta, phi) = angles(v);
        let (pi, tau) = specfun::pi_tau_table(n_max, theta.cos());
        let mut s1 = ZERO;
        let mut s2 = ZERO;
        for n in 1..=n_max {
            let nf = n as f64;
            let w = (2.0 * nf + 1.0) / (nf * (nf + 1.0));
            let (a, b) = (coeffs.a(n), coeffs.b(n));
            s1 += (a * pi[n] + b * tau[n]) * w;
            s2 += (a * tau[n] + b * pi[n]) * w;
        }
        let (sp, cp) = phi.sin_cos();
        let pre = I / omega;
        [sph_to_cart(theta, phi, [ZERO, pre * s2 * cp, -pre * s1 * sp])]
    })[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSections {
    pub sca: f64,
    pub ext: f64,
    pub abs: f64,
}

/// Cross sections per unit incident intensity `|pol|²`. `ext` comes from
/// the forward amplitude (optical theorem).
pub fn cross_sections(coeffs: &MultipoleCoefficients, omega: f64) -> CrossSections {
    let k = omega;
    let sca = (1..=coeffs.n_max())
        .map(|n| (2.0 * n as f64 + 1.0) * (coeffs.a(n).norm_sqr() + coeffs.b(n).norm_sqr()))
        .sum::<f64>()
        * 2.0
        * std::f64::consts::PI
        / (k * k);
    let p2 = coeffs.amplitude_norm_sqr();
    if p2 == 0.0 {
        return CrossSections {
            sca: 0.0,
            ext: 0.0,
            abs: 0.0,
        };
    }
    let fwd = far_field(coeffs, omega, &coeffs.frame.e3);
    let pol = coeffs.frame.to_global(&Vector3::new(coeffs.amplitude[0], coeffs.amplitude[1], ZERO));
    let proj: C64 = fwd.iter().zip(pol.iter()).map(|(a, p)| a * p.conj()).sum();
    let ext = 4.0 * std::f64::consts::PI / k * proj.im / p2;
    CrossSections {
        sca,
        ext,
        abs: ext - sca,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wiscombe_rule() {
        assert_eq!(wiscombe_cutoff(0.01), 4);
        assert_eq!(wiscombe_cutoff(5.0), (5.0 + 4.05 * 5f64.cbrt() + 2.0).ceil() as usize);
    }

    #[test]
    fn sphere_validation() {
        assert!(LayeredSphere::new(vec![]).is_err());
        let s = |r: f64, e: C64| Shell {
            outer_radius: r,
            eps: e,
            mu: ONE,
        };
        assert!(LayeredSphere::new(vec![s(1.0, ONE), s(0.5, ONE)]).is_err());
        assert!(LayeredSphere::new(vec![s(1.0, C64::new(2.0, -0.1))]).is_err());
        assert!(LayeredSphere::new(vec![s(0.5, ONE), s(1.0, C64::new(2.0, 0.1))]).is_ok());
    }

    #[test]
    fn frame_is_orthonormal() {
        let f = Frame::from_axis(Vector3::new(1.0, 2.0, -0.5), Vector3::new(0.0, 0.0, 1.0));
        for (a, b) in [(f.e1, f.e2), (f.e2, f.e3), (f.e1, f.e3)] {
            assert!(a.dot(&b).abs() < 1e-15);
        }
        assert!((f.e1.cross(&f.e2) - f.e3).norm() < 1e-15);
        let g = Frame::from_axis(Vector3::z(), Vector3::z());
        assert!(g.e1.dot(&g.e3).abs() < 1e-15);
    }

    #[test]
    fn zero_coefficients_zero_far_field() {
        let c = MultipoleCoefficients::zero(5, 1.0);
        let a = far_field(&c, 1.0, &Vector3::new(0.3, 0.4, 0.866_025_403_784_438_6));
        assert!(a.norm() == 0.0);
        let cs = cross_sections(&c, 1.0);
        assert_eq!((cs.sca, cs.ext), (0.0, 0.0));
    }
}
