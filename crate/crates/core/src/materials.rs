//! Symmetric material tensors, the regularity test of a medium, the
//! push-forward of a tensor along a map, and the explicit radial blow-up map
//! used to build the physical cloak.

use std::fmt;
use std::io::{self, Write};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloakmap::CloakSpec;

/// Absolute slack applied to eigenvalue bounds in [`check_regular`].
pub const REGULARITY_SLACK: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialsError {
    #[error("singular jacobian: |det DF| = {det:e} < 1e-300")]
    SingularJacobian { det: f64 },
    #[error("point |y| = {radius} lies outside the map domain |y| <= {r_outer}")]
    OutsideDomain { radius: f64, r_outer: f64 },
    #[error("invalid map parameters: {0}")]
    InvalidMap(String),
}

/// Real symmetric 3×3 tensor stored by its six independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymTensor3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3::diag(0.0, 0.0, 0.0);
    pub const IDENTITY: SymTensor3 = SymTensor3::diag(1.0, 1.0, 1.0);

    pub const fn diag(a: f64, b: f64, c: f64) -> Self {
        Self {
            xx: a,
            xy: 0.0,
            xz: 0.0,
            yy: b,
            yz: 0.0,
            zz: c,
        }
    }

    pub const fn scalar(a: f64) -> Self {
        Self::diag(a, a, a)
    }

    /// Symmetric part of `m`.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self {
            xx: m[(0, 0)],
            xy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            xz: 0.5 * (m[(0, 2)] + m[(2, 0)]),
            yy: m[(1, 1)],
            yz: 0.5 * (m[(1, 2)] + m[(2, 1)]),
            zz: m[(2, 2)],
        }
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.xx, self.xy, self.xz, self.xy, self.yy, self.yz, self.xz, self.yz, self.zz,
        )
    }

    /// Entries in export order `xx, xy, xz, yy, yz, zz`.
    pub fn entries(&self) -> [f64; 6] {
        [self.xx, self.xy, self.xz, self.yy, self.yz, self.zz]
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            xx: a * self.xx,
            xy: a * self.xy,
            xz: a * self.xz,
            yy: a * self.yy,
            yz: a * self.yz,
            zz: a * self.zz,
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let e = SymmetricEigen::new(self.to_matrix()).eigenvalues;
        let mut v = [e[0], e[1], e[2]];
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn is_positive_definite(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }

    pub fn is_positive_semidefinite(&self, slack: f64) -> bool {
        self.eigenvalues()[0] >= -slack
    }

    pub fn max_abs_diff(&self, other: &SymTensor3) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialPoint {
    pub eps: SymTensor3,
    pub mu: SymTensor3,
    pub sigma: SymTensor3,
}

impl MaterialPoint {
    pub const VACUUM: MaterialPoint = MaterialPoint {
        eps: SymTensor3::IDENTITY,
        mu: SymTensor3::IDENTITY,
        sigma: SymTensor3::ZERO,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorField {
    Eps,
    Mu,
    Sigma,
}

impl fmt::Display for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TensorField::Eps => "eps",
            TensorField::Mu => "mu",
            TensorField::Sigma => "sigma",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    /// eigenvalue < c (or < 0 for sigma)
    Lower(f64),
    /// eigenvalue > C
    Upper(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: TensorField,
    pub eigenvalue: f64,
    pub bound: Bound,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bound {
            Bound::Lower(0.0) => write!(f, "{} eigenvalue {} < 0", self.field, self.eigenvalue),
            Bound::Lower(_) => write!(f, "{} eigenvalue {} < c", self.field, self.eigenvalue),
            Bound::Upper(_) => write!(f, "{} eigenvalue {} > C", self.field, self.eigenvalue),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegularityReport {
    pub violations: Vec<Violation>,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for RegularityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("regular");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Eigenvalues of `eps`, `mu` must lie in `[c, C]`, those of `sigma` in
/// `[0, C]`, each with absolute slack [`REGULARITY_SLACK`].
pub fn check_regular(m: &MaterialPoint, c: f64, big_c: f64) -> RegularityReport {
    let mut violations = Vec::new();
    let mut scan = |field, t: &SymTensor3, lo: f64| {
        for ev in t.eigenvalues() {
            if ev < lo - REGULARITY_SLACK {
                violations.push(Violation {
                    field,
                    eigenvalue: ev,
                    bound: Bound::Lower(lo),
                });
            } else if ev > big_c + REGULARITY_SLACK {
                violations.push(Violation {
                    field,
                    eigenvalue: ev,
                    bound: Bound::Upper(big_c),
                });
            }
        }
    };
    scan(TensorField::Eps, &m.eps, c);
    scan(TensorField::Mu, &m.mu, c);
    scan(TensorField::Sigma, &m.sigma, 0.0);
    RegularityReport { violations }
}

/// A point `y`, its image `x = F(y)` and the jacobian `DF(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSample {
    pub y: Vector3<f64>,
    pub x: Vector3<f64>,
    pub jacobian: Matrix3<f64>,
    pub det: f64,
}

impl MapSample {
    pub fn new(y: Vector3<f64>, x: Vector3<f64>, jacobian: Matrix3<f64>) -> Self {
        Self {
            y,
            x,
            jacobian,
            det: jacobian.determinant(),
        }
    }

    /// Sample of the affine map `y ↦ A y + b`.
    pub fn affine(a: &Matrix3<f64>, b: &Vector3<f64>, y: Vector3<f64>) -> Self {
        Self::new(y, a * y + b, *a)
    }

    pub fn identity(y: Vector3<f64>) -> Self {
        Self {
            y,
            x: y,
            jacobian: Matrix3::identity(),
            det: 1.0,
        }
    }
}

/// `DF m DFᵀ / |det DF|`.
pub fn push_forward(sample: &MapSample, m: &SymTensor3) -> Result<SymTensor3, MaterialsError> {
    if !(sample.det.abs() >= 1e-300) {
        return Err(MaterialsError::SingularJacobian { det: sample.det });
    }
    let j = &sample.jacobian;
    let out = j * m.to_matrix() * j.transpose() / sample.det.abs();
    Ok(SymTensor3::from_matrix(&out))
}

/// Coefficients `(a, b)` of the radial profile `f(r) = a + b r` mapping
/// `[ρ R_inner, R_outer]` onto `[R_inner, R_outer]`.
pub fn radial_profile(rho: f64, r_inner: f64, r_outer: f64) -> (f64, f64) {
    let den = r_outer - rho * r_inner;
    (
        r_inner * r_outer * (1.0 - rho) / den,
        (r_outer - r_inner) / den,
    )
}

fn check_map(rho: f64, r_inner: f64, r_outer: f64) -> Result<(), MaterialsError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(MaterialsError::InvalidMap(format!("rho = {rho} not in (0, 1)")));
    }
    if !(r_inner > 0.0 && r_outer > r_inner && r_outer.is_finite()) {
        return Err(MaterialsError::InvalidMap(format!(
            "need 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
        )));
    }
    Ok(())
}

/// Blow-up map: identity on `|y| = R_outer`, `y/ρ` on `|y| <= ρ R_inner`,
/// radial-affine in between. The jacobian is exact; across `|y| = ρR_inner`
/// and `|y| = R_outer` only its radial entry jumps.
pub fn radial_blowup_map(
    rho: f64,
    r_inner: f64,
    r_outer: f64,
    y: Vector3<f64>,
) -> Result<MapSample, MaterialsError> {
    check_map(rho, r_inner, r_outer)?;
    let r = y.norm();
    if r > r_outer {
        return Err(MaterialsError::OutsideDomain {
            radius: r,
            r_outer,
        });
    }
    if r == r_outer {
        return Ok(MapSample::identity(y));
    }
    if r <= rho * r_inner {
        let j = Matrix3::identity() / rho;
        return Ok(MapSample {
            y,
            x: y / rho,
            jacobian: j,
            det: rho.powi(-3),
        });
    }
    let (a, b) = radial_profile(rho, r_inner, r_outer);
    let f = a + b * r;
    let yhat = y / r;
    let p = yhat * yhat.transpose();
    let g = f / r;
    let j = p * b + (Matrix3::identity() - p) * g;
    Ok(MapSample {
        y,
        x: yhat * f,
        jacobian: j,
        det: b * g * g,
    })
}

/// Preimage of a physical point in the cloaking shell
/// `R_inner < |x| < R_outer`.
pub fn radial_blowup_preimage(rho: f64, r_inner: f64, r_outer: f64, x: Vector3<f64>) -> Vector3<f64> {
    let (a, b) = radial_profile(rho, r_inner, r_outer);
    let r = x.norm();
    x * ((r - a) / b / r)
}

/// Physical tensors of the regularized cloak at `x`. Uses the scalar layer
/// constants of `spec`.
pub fn physical_cloak_tensors(spec: &CloakSpec, x: Vector3<f64>) -> MaterialPoint {
    let (alpha, beta) = (spec.alpha, spec.beta);
    physical_cloak_tensors_anisotropic(
        spec,
        x,
        |_| SymTensor3::scalar(alpha),
        |_| SymTensor3::scalar(beta),
    )
}

/// As [`physical_cloak_tensors`] with position-dependent tensor layer
/// profiles `α(x)`, `β(x)` on `D \ D_{1/2}`. Not used by the solver.
pub fn physical_cloak_tensors_anisotropic<A, B>(
    spec: &CloakSpec,
    x: Vector3<f64>,
    alpha: A,
    beta: B,
) -> MaterialPoint
where
    A: Fn(&Vector3<f64>) -> SymTensor3,
    B: Fn(&Vector3<f64>) -> SymTensor3,
{
    let (r_inner, r_outer, rho) = (spec.geometry.r_inner, spec.geometry.r_outer, spec.rho);
    let r = x.norm();
    if r >= r_outer {
        return MaterialPoint::VACUUM;
    }
    if r > r_inner {
        let y = radial_blowup_preimage(rho, r_inner, r_outer, x);
        let sample = radial_blowup_map(rho, r_inner, r_outer, y)
            .expect("preimage of a cloak-shell point lies in the map domain");
        let t = push_forward(&sample, &SymTensor3::IDENTITY)
            .expect("radial map has a nonsingular jacobian");
        return MaterialPoint {
            eps: t,
            mu: t,
            sigma: SymTensor3::ZERO,
        };
    }
    if r > 0.5 * r_inner {
        if !spec.conducting_layer {
            return MaterialPoint {
                eps: SymTensor3::scalar(rho),
                mu: SymTensor3::scalar(rho),
                sigma: SymTensor3::ZERO,
            };
        }
        let e = &spec.exponents;
        return MaterialPoint {
            eps: alpha(&x).scale(rho.powf(1.0 - e.r)),
            mu: SymTensor3::scalar(rho.powf(1.0 - e.t) / spec.eta),
            sigma: beta(&x).scale(rho.powf(1.0 - e.s)),
        };
    }
    let c = &spec.core;
    MaterialPoint {
        eps: SymTensor3::scalar(c.eps),
        mu: SymTensor3::scalar(c.mu),
        sigma: SymTensor3::scalar(c.sigma),
    }
}

/// Regular grid of sample points, inclusive of both bounds on each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorGrid {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub counts: [usize; 3],
}

impl TensorGrid {
    pub fn points(&self) -> Vec<Vector3<f64>> {
        let axis = |k: usize| -> Vec<f64> {
            let n = self.counts[k].max(1);
            if n == 1 {
                return vec![self.min[k]];
            }
            (0..n)
                .map(|i| self.min[k] + (self.max[k] - self.min[k]) * i as f64 / (n - 1) as f64)
                .collect()
        };
        let (xs, ys, zs) = (axis(0), axis(1), axis(2));
        let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    out.push(Vector3::new(x, y, z));
                }
            }
        }
        out
    }
}

pub const TENSOR_CSV_HEADER: &str = "x,y,z,\
eps_xx,eps_xy,eps_xz,eps_yy,eps_yz,eps_zz,\
mu_xx,mu_xy,mu_xz,mu_yy,mu_yz,mu_zz,\
sigma_xx,sigma_xy,sigma_xz,sigma_yy,sigma_yz,sigma_zz";

/// Writes the physical tensors at each point as CSV (shortest round-trip
/// scientific notation).
pub fn write_tensor_csv<W: Write>(
    spec: &CloakSpec,
    points: &[Vector3<f64>],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{TENSOR_CSV_HEADER}")?;
    for p in points {
        let m = physical_cloak_tensors(spec, *p);
        let mut row: Vec<String> = vec![format!("{:e}", p.x), format!("{:e}", p.y), format!("{:e}", p.z)];
        for t in [&m.eps, &m.mu, &m.sigma] {
            row.extend(t.entries().iter().map(|v| format!("{v:e}")));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
