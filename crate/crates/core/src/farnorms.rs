//! Product quadrature on the unit sphere and norms of far-field patterns.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::mie::{far_field, MultipoleCoefficients};
use crate::quadrature::gauss_legendre;

pub const MIN_POLAR: usize = 8;
pub const MIN_AZIMUTH: usize = 16;
/// Stop refining the maximum once it moves by less than this (relative).
pub const SUP_REFINE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FarNormError {
    #[error("grid needs n_polar >= {MIN_POLAR} and n_azimuth >= {MIN_AZIMUTH}, got {n_polar} x {n_azimuth}")]
    GridTooSmall { n_polar: usize, n_azimuth: usize },
    #[error("pattern has {values} values for {nodes} grid nodes")]
    LengthMismatch { values: usize, nodes: usize },
}

/// Gauss–Legendre in `cos θ` times uniform `φ`, node `(i, j)` stored at
/// `i * n_azimuth + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub nodes: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

pub fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

pub fn make_grid(n_polar: usize, n_azimuth: usize) -> Result<SphereGrid, FarNormError> {
    if n_polar < MIN_POLAR || n_azimuth < MIN_AZIMUTH {
        return Err(FarNormError::GridTooSmall { n_polar, n_azimuth });
    }
    let (mu, w) = gauss_legendre(n_polar);
    // descending cos θ so that θ ascends
    let theta: Vec<f64> = mu.iter().rev().map(|m| m.acos()).collect();
    let wt: Vec<f64> = w.iter().rev().copied().collect();
    let dphi = 2.0 * PI / n_azimuth as f64;
    let phi: Vec<f64> = (0..n_azimuth).map(|j| j as f64 * dphi).collect();
    let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
    let mut weights = Vec::with_capacity(n_polar * n_azimuth);
    for (t, wt) in theta.iter().zip(&wt) {
        for p in &phi {
            nodes.push(direction(*t, *p));
            weights.push(wt * dphi);
        }
    }
    Ok(SphereGrid {
        n_polar,
        n_azimuth,
        nodes,
        weights,
        theta,
        phi,
    })
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum with Neumaier compensation.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for (w, v) in self.weights.iter().zip(values) {
            let term = w * v;
            let t = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
        sum + comp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    pub grid: SphereGrid,
    pub values: Vec<Vector3<C64>>,
}

impl FarFieldPattern {
    pub fn new(grid: SphereGrid, values: Vec<Vector3<C64>>) -> Result<Self, FarNormError> {
        if values.len() != grid.len() {
            return Err(FarNormError::LengthMismatch {
                values: values.len(),
                nodes: grid.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F>(grid: SphereGrid, f: F) -> Self
    where
        F: Fn(&Vector3<f64>) -> Vector3<C64> + Sync,
    {
        let values = grid.nodes.par_iter().map(&f).collect();
        Self { grid, values }
    }

    pub fn from_coefficients(grid: SphereGrid, coeffs: &MultipoleCoefficients, omega: f64) -> Self {
        Self::from_fn(grid, |x| far_field(coeffs, omega, x))
    }

    /// Largest `|(A·x̂)| / |A|` over the nodes.
    pub fn max_radial_fraction(&self) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(x, a)| {
                let r: C64 = a.iter().zip(x.iter()).map(|(a, x)| a * x).sum();
                let n = a.norm();
                if n == 0.0 {
                    0.0
                } else {
                    r.norm() / n
                }
            })
            .fold(0.0, f64::max)
    }

    fn argmax(&self) -> (usize, f64) {
        self.values
            .iter()
            .map(|v| v.norm())
            .enumerate()
            .fold((0, 0.0), |best, (i, m)| if m > best.1 { (i, m) } else { best })
    }
}

/// Largest magnitude over the grid nodes.
pub fn sup_norm(p: &FarFieldPattern) -> f64 {
    p.argmax().1
}

pub fn l2_norm(p: &FarFieldPattern) -> f64 {
    let sq: Vec<f64> = p.values.iter().map(|v| v.norm_squared()).collect();
    p.grid.integrate(&sq).sqrt()
}

/// Grid maximum refined by repeated 7×7 searches on a shrinking patch
/// around the current best direction, evaluating `f` off-grid.
pub fn sup_norm_refined<F>(p: &FarFieldPattern, f: F) -> f64
where
    F: Fn(&Vector3<f64>) -> Vector3<C64>,
{
    let (idx, mut best) = p.argmax();
    if best == 0.0 {
        return 0.0;
    }
    let g = &p.grid;
    let mut theta = g.theta[idx / g.n_azimuth];
    let mut phi = g.phi[idx % g.n_azimuth];
    let mut dt = PI / g.n_polar as f64;
    let mut dp = 2.0 * PI / g.n_azimuth as f64;
    for _ in 0..60 {
        dt /= 3.0;
        dp /= 3.0;
        let before = best;
        let (mut bt, mut bp) = (theta, phi);
        for i in -3i32..=3 {
            for j in -3i32..=3 {
                let t = (theta + i as f64 * dt).clamp(0.0, PI);
                let ph = phi + j as f64 * dp;
                let m = f(&direction(t, ph)).norm();
                if m > best {
                    best = m;
                    bt = t;
                    bp = ph;
                }
            }
        }
        theta = bt;
        phi = bp;
        if (best - before) <= SUP_REFINE_TOL * best && dt < 1e-6 {
            break;
        }
    }
    best
}

/// Refined sup norm of the far field of `coeffs` on `grid`.
pub fn far_field_sup(grid: &SphereGrid, coeffs: &MultipoleCoefficients, omega: f64) -> f64 {
    let p = FarFieldPattern::from_coefficients(grid.clone(), coeffs, omega);
    sup_norm_refined(&p, |x| far_field(coeffs, omega, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cz() -> Vector3<C64> {
        Vector3::from_element(C64::new(0.0, 0.0))
    }

    #[test]
    fn weights_and_nodes() {
        let g = make_grid(16, 32).unwrap();
        assert!((g.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
        assert!(g.nodes.iter().all(|n| (n.norm() - 1.0).abs() < 1e-14));
        assert!(g.theta.windows(2).all(|t| t[0] < t[1]));
    }

    #[test]
    fn size_bounds() {
        assert!(make_grid(7, 16).is_err());
        assert!(make_grid(8, 15).is_err());
    }

    #[test]
    fn zero_pattern() {
        let g = make_grid(8, 16).unwrap();
        let p = FarFieldPattern::from_fn(g, |_| cz());
        assert_eq!(sup_norm(&p), 0.0);
        assert_eq!(l2_norm(&p), 0.0);
        assert_eq!(sup_norm_refined(&p, |_| cz()), 0.0);
    }

    #[test]
    fn refinement_finds_off_grid_peak() {
        let g = make_grid(8, 16).unwrap();
        let peak = Vector3::new(0.31, -0.52, 0.79).normalize();
        let f = |x: &Vector3<f64>| {
            let v = (-20.0 * (x - peak).norm_squared()).exp();
            Vector3::new(C64::new(v, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        };
        let p = FarFieldPattern::from_fn(g, f);
        assert!(sup_norm(&p) < 0.99);
        assert!((sup_norm_refined(&p, f) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn length_checked() {
        let g = make_grid(8, 16).unwrap();
        assert!(FarFieldPattern::new(g, vec![cz(); 3]).is_err());
    }
}
