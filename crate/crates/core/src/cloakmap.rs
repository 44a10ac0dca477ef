//! Layer exponents, predicted decay rates and the reduction of a regularized
//! cloak to a small layered sphere in vacuum.
//!
//! The cloak occupies `R_inner < |x| < R_outer` in physical space. Pulled back
//! along the blow-up map, the cloaked region shrinks to the ball of radius
//! `ρ·R_inner`, which contains the lossy layer (outer half) and the content
//! (inner half).

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mie::{LayeredSphere, MieError, Shell};

type C64 = Complex64;

/// Lower validation bound for `η` and for the core conductivity under an
/// active core source.
pub const C0_LOWER: f64 = 1e-3;
/// Upper validation bound for `η`.
pub const C0_UPPER: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloakError {
    #[error("invalid cloak parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("exponents (r, s, t) = ({r}, {s}, {t}) give zeta1 = {zeta1} <= 0")]
    InvalidExponents { r: f64, s: f64, t: f64, zeta1: f64 },
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error(transparent)]
    Sphere(#[from] MieError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerExponents {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub valid: bool,
}

pub fn exponents(r: f64, s: f64, t: f64) -> LayerExponents {
    let zeta1 = (s + 1.0).min(s + 5.0 - 2.0 * (t + r)).min(5.0 - 2.0 * t - s);
    let zeta2 = s.min(s + 2.0 - t - r).min(2.0 - t);
    LayerExponents {
        r,
        s,
        t,
        zeta1,
        zeta2,
        valid: zeta1 > 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedRates {
    pub passive: f64,
    pub active_core: f64,
    pub active_shell: f64,
}

pub fn predicted_rates(exp: &LayerExponents) -> PredictedRates {
    PredictedRates {
        passive: exp.zeta1.min(3.0),
        active_core: exp.zeta1 / 2.0,
        active_shell: exp.zeta2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            r_inner: 1.0,
            r_outer: 2.0,
        }
    }
}

/// Isotropic content of `D_{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreMedium {
    pub eps: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl CoreMedium {
    pub const VACUUM: CoreMedium = CoreMedium {
        eps: 1.0,
        mu: 1.0,
        sigma: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloakSpec {
    pub rho: f64,
    pub exponents: LayerExponents,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub core: CoreMedium,
    pub omega: f64,
    pub geometry: Geometry,
    /// When false the lossy layer is replaced by (pulled-back) vacuum.
    pub conducting_layer: bool,
}

fn positive(name: &'static str, value: f64) -> Result<(), CloakError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(CloakError::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

impl CloakSpec {
    /// Classical conducting layer `(r, s, t) = (0, 2, 0)` with unit constants,
    /// `ω = 1` and the default geometry.
    pub fn classical(rho: f64, core: CoreMedium) -> Self {
        Self {
            rho,
            exponents: exponents(0.0, 2.0, 0.0),
            alpha: 1.0,
            beta: 1.0,
            eta: 1.0,
            core,
            omega: 1.0,
            geometry: Geometry::default(),
            conducting_layer: true,
        }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self {
            rho,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CloakError> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(CloakError::InvalidParameter {
                name: "rho",
                value: self.rho,
                reason: "must lie in (0, 1)",
            });
        }
        let e = &self.exponents;
        let fresh = exponents(e.r, e.s, e.t);
        if fresh != *e {
            return Err(CloakError::InvalidParameter {
                name: "zeta1",
                value: e.zeta1,
                reason: "exponent record is inconsistent with (r, s, t)",
            });
        }
        if !e.valid {
            return Err(CloakError::InvalidExponents {
                r: e.r,
                s: e.s,
                t: e.t,
                zeta1: e.zeta1,
            });
        }
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        if !(C0_LOWER..=C0_UPPER).contains(&self.eta) {
            return Err(CloakError::InvalidParameter {
                name: "eta",
                value: self.eta,
                reason: "must lie in [1e-3, 1e3]",
            });
        }
        positive("eps_a", self.core.eps)?;
        positive("mu_a", self.core.mu)?;
        if !(self.core.sigma >= 0.0 && self.core.sigma.is_finite()) {
            return Err(CloakError::InvalidParameter {
                name: "sigma_a",
                value: self.core.sigma,
                reason: "must be nonnegative and finite",
            });
        }
        positive("omega", self.omega)?;
        positive("r_inner", self.geometry.r_inner)?;
        if !(self.geometry.r_outer > self.geometry.r_inner && self.geometry.r_outer.is_finite()) {
            return Err(CloakError::InvalidParameter {
                name: "r_outer",
                value: self.geometry.r_outer,
                reason: "must exceed r_inner",
            });
        }
        Ok(())
    }

    /// Complex permittivity and permeability of the virtual-space layer.
    pub fn virtual_layer_medium(&self) -> (C64, C64) {
        if !self.conducting_layer {
            return (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        }
        let e = &self.exponents;
        let rho = self.rho;
        let eps = C64::new(
            rho.powf(-e.r) * self.alpha,
            rho.powf(-e.s) * self.beta / self.omega,
        );
        let mu = C64::new(rho.powf(-e.t) / self.eta, 0.0);
        (eps, mu)
    }

    pub fn virtual_core_medium(&self) -> (C64, C64) {
        let c = &self.core;
        (
            C64::new(c.eps, c.sigma / self.omega) / self.rho,
            C64::new(c.mu / self.rho, 0.0),
        )
    }
}

/// Per-degree coefficients of a tangential electric trace on a sphere, in the
/// x-polarized plane-wave mode basis of the local frame (see
/// [`crate::mie::exterior_trace_solve`]). Index 0 is degree 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentialTrace {
    pub te: Vec<C64>,
    pub tm: Vec<C64>,
}

impl TangentialTrace {
    pub fn zero(n_max: usize) -> Self {
        Self {
            te: vec![C64::new(0.0, 0.0); n_max],
            tm: vec![C64::new(0.0, 0.0); n_max],
        }
    }

    pub fn len(&self) -> usize {
        self.te.len().max(self.tm.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn te(&self, n: usize) -> C64 {
        self.te.get(n - 1).copied().unwrap_or_default()
    }

    pub fn tm(&self, n: usize) -> C64 {
        self.tm.get(n - 1).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SourceSpec {
    PlaneWave {
        khat: Vector3<f64>,
        pol: Vector3<C64>,
    },
    /// Constant current density on `|x| < radius`.
    CoreBallCurrent { radius: f64, j0: Vector3<C64> },
    /// Constant current density on `r_in < |x| < r_out`.
    ShellBallCurrent {
        r_in: f64,
        r_out: f64,
        j0: Vector3<C64>,
    },
    TangentialTrace(TangentialTrace),
}

impl SourceSpec {
    /// `x`-polarized wave travelling along `+z`.
    pub fn canonical_plane_wave() -> Self {
        SourceSpec::PlaneWave {
            khat: Vector3::z(),
            pol: Vector3::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)),
        }
    }

    pub fn validate(&self) -> Result<(), CloakError> {
        match self {
            SourceSpec::PlaneWave { khat, pol } => {
                if (khat.norm() - 1.0).abs() > 1e-12 {
                    return Err(CloakError::InvalidSource(format!(
                        "khat must be a unit vector, |khat| = {}",
                        khat.norm()
                    )));
                }
                let k = khat.map(|v| C64::new(v, 0.0));
                if pol.dot(&k).norm() >= 1e-12 {
                    return Err(CloakError::InvalidSource(
                        "polarization is not transverse to khat".into(),
                    ));
                }
                Ok(())
            }
            SourceSpec::CoreBallCurrent { radius, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(CloakError::InvalidSource(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
            SourceSpec::ShellBallCurrent { r_in, r_out, .. } => {
                if !(*r_in >= 0.0 && r_out > r_in && r_out.is_finite()) {
                    return Err(CloakError::InvalidSource(format!(
                        "shell radii must satisfy 0 <= r_in < r_out, got ({r_in}, {r_out})"
                    )));
                }
                Ok(())
            }
            SourceSpec::TangentialTrace(_) => Ok(()),
        }
    }

    pub fn is_current(&self) -> bool {
        matches!(
            self,
            SourceSpec::CoreBallCurrent { .. } | SourceSpec::ShellBallCurrent { .. }
        )
    }
}

/// Two-shell sphere seen in virtual space: content on `[0, ρR/2]`, layer on
/// `[ρR/2, ρR]`, vacuum outside.
pub fn virtual_scatterer(spec: &CloakSpec) -> Result<LayeredSphere, CloakError> {
    spec.validate()?;
    let r = spec.rho * spec.geometry.r_inner;
    let (eps_c, mu_c) = spec.virtual_core_medium();
    let (eps_l, mu_l) = spec.virtual_layer_medium();
    Ok(LayeredSphere::new(vec![
        Shell {
            outer_radius: 0.5 * r,
            eps: eps_c,
            mu: mu_c,
        },
        Shell {
            outer_radius: r,
            eps: eps_l,
            mu: mu_l,
        },
    ])?)
}

/// Pull a physical current back to virtual space: radii scale by `ρ`, the
/// constant density by `ρ^{-2}`. Source radii are given in units of `R_inner`.
/// Plane waves and traces are returned unchanged.
pub fn virtual_source(spec: &CloakSpec, src: &SourceSpec) -> SourceSpec {
    let rho = spec.rho;
    let len = rho * spec.geometry.r_inner;
    let amp = rho.powi(-2);
    match src {
        SourceSpec::CoreBallCurrent { radius, j0 } => SourceSpec::CoreBallCurrent {
            radius: radius * len,
            j0: j0 * C64::new(amp, 0.0),
        },
        SourceSpec::ShellBallCurrent { r_in, r_out, j0 } => SourceSpec::ShellBallCurrent {
            r_in: r_in * len,
            r_out: r_out * len,
            j0: j0 * C64::new(amp, 0.0),
        },
        other => other.clone(),
    }
}

/// Inverse of [`virtual_source`].
pub fn physical_source(spec: &CloakSpec, src: &SourceSpec) -> SourceSpec {
    let rho = spec.rho;
    let len = rho * spec.geometry.r_inner;
    let amp = rho * rho;
    match src {
        SourceSpec::CoreBallCurrent { radius, j0 } => SourceSpec::CoreBallCurrent {
            radius: radius / len,
            j0: j0 * C64::new(amp, 0.0),
        },
        SourceSpec::ShellBallCurrent { r_in, r_out, j0 } => SourceSpec::ShellBallCurrent {
            r_in: r_in / len,
            r_out: r_out / len,
            j0: j0 * C64::new(amp, 0.0),
        },
        other => other.clone(),
    }
}

/// Checks the theorem precondition for a physical current: a source meeting
/// `D_{1/2}` needs a conducting core.
pub fn check_source_support(spec: &CloakSpec, src: &SourceSpec) -> Result<(), CloakError> {
    src.validate()?;
    let meets_core = match src {
        SourceSpec::CoreBallCurrent { radius, .. } => {
            if *radius > 0.5 {
                return Err(CloakError::InvalidSource(format!(
                    "core ball radius {radius} exceeds 1/2"
                )));
            }
            true
        }
        SourceSpec::ShellBallCurrent { r_in, r_out, .. } => {
            if *r_in < 0.5 || *r_out > 1.0 {
                return Err(CloakError::InvalidSource(format!(
                    "shell current ({r_in}, {r_out}) must lie in [1/2, 1]"
                )));
            }
            false
        }
        _ => false,
    };
    if meets_core && spec.core.sigma < C0_LOWER {
        return Err(CloakError::InvalidParameter {
            name: "sigma_a",
            value: spec.core.sigma,
            reason: "a core current requires sigma_a >= 1e-3",
        });
    }
    Ok(())
}
