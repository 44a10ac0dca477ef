//! Riccati–Bessel functions of complex argument and the angular functions
//! used for far-field assembly.
//!
//! Conventions:
//!
//! * `ψ_n(z) = z j_n(z)` (regular),
//! * `χ_n(z) = -z y_n(z)` (irregular),
//! * `ξ_n(z) = z h_n^{(1)}(z) = ψ_n(z) - i χ_n(z)` (outgoing for `e^{-iωt}`).
//!
//! Everything is carried internally as complex logarithms so that the very
//! large and very small magnitudes met inside high-contrast shells never
//! overflow. Callers that only need ratios should use [`RiccatiTable`].

use num_complex::Complex64;
use thiserror::Error;

type C64 = Complex64;

/// Default largest supported order.
pub const DEFAULT_N_MAX: usize = 200;

/// `|ln|value||` beyond which a plain `f64` representation is refused.
const LN_SAFE: f64 = 700.0;

/// Mantissa magnitude that triggers renormalization inside recurrences.
const RESCALE: f64 = 1e200;

const STABLE_IM: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("Riccati-Bessel functions require a nonzero argument")]
    ZeroArgument,
    #[error("order {n} exceeds the configured maximum {max}")]
    OrderTooLarge { n: usize, max: usize },
    #[error("magnitude of order {n} at z = {z} is outside f64 range (ln|value| = {ln_abs:.1}); use the scaled form")]
    Overflow { n: usize, z: C64, ln_abs: f64 },
}

/// Value and first derivative of one Riccati–Bessel function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiPair {
    pub value: C64,
    pub derivative: C64,
    pub n: usize,
    pub z: C64,
}

/// Overflow-free representation: `value = exp(ln_value)` and
/// `derivative = value * log_derivative`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledRiccati {
    pub ln_value: C64,
    pub log_derivative: C64,
    pub n: usize,
    pub z: C64,
}

impl ScaledRiccati {
    fn to_pair(self) -> Result<RiccatiPair, SpecfunError> {
        let ln_abs = self.ln_value.re;
        if !ln_abs.is_finite() || ln_abs.abs() > LN_SAFE {
            return Err(SpecfunError::Overflow {
                n: self.n,
                z: self.z,
                ln_abs,
            });
        }
        let value = self.ln_value.exp();
        Ok(RiccatiPair {
            value,
            derivative: value * self.log_derivative,
            n: self.n,
            z: self.z,
        })
    }
}

/// Tabulated logarithms and logarithmic derivatives of `ψ_n` and `ξ_n` for
/// `n = 0..=n_max` at one argument.
#[derive(Debug, Clone)]
pub struct RiccatiTable {
    pub z: C64,
    pub ln_psi: Vec<C64>,
    pub ln_xi: Vec<C64>,
    /// `ψ_n'(z) / ψ_n(z)`
    pub d_psi: Vec<C64>,
    /// `ξ_n'(z) / ξ_n(z)`
    pub d_xi: Vec<C64>,
}

impl RiccatiTable {
    pub fn new(n_max: usize, z: C64) -> Result<Self, SpecfunError> {
        check_arg(n_max, z, usize::MAX)?;
        let ln_psi = ln_psi_seq(n_max, z);
        let ln_xi = ln_xi_seq(n_max, z);
        let ln_chi0 = ln_chi_first_two(z).0;
        let d_psi = log_derivs(&ln_psi, z, ln_chi0 - ln_psi[0]);
        let d_xi = log_derivs_xi(&ln_xi, z);
        Ok(Self {
            z,
            ln_psi,
            ln_xi,
            d_psi,
            d_xi,
        })
    }

    pub fn n_max(&self) -> usize {
        self.ln_psi.len() - 1
    }

    pub fn psi(&self, n: usize) -> C64 {
        self.ln_psi[n].exp()
    }

    pub fn xi(&self, n: usize) -> C64 {
        self.ln_xi[n].exp()
    }

    pub fn dpsi(&self, n: usize) -> C64 {
        self.psi(n) * self.d_psi[n]
    }

    pub fn dxi(&self, n: usize) -> C64 {
        self.xi(n) * self.d_xi[n]
    }
}

fn check_arg(n: usize, z: C64, max: usize) -> Result<(), SpecfunError> {
    if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(SpecfunError::ZeroArgument);
    }
    if n > max {
        return Err(SpecfunError::OrderTooLarge { n, max });
    }
    Ok(())
}

/// `ln sin z` without overflow for large `|Im z|`.
fn ln_sin(z: C64) -> C64 {
    let i = C64::i();
    if z.im.abs() < STABLE_IM {
        z.sin().ln()
    } else if z.im > 0.0 {
        -i * z + (((2.0 * i * z).exp() - 1.0) / (2.0 * i)).ln()
    } else {
        i * z + ((1.0 - (-2.0 * i * z).exp()) / (2.0 * i)).ln()
    }
}

fn ln_cos(z: C64) -> C64 {
    let i = C64::i();
    if z.im.abs() < STABLE_IM {
        z.cos().ln()
    } else if z.im > 0.0 {
        -i * z + ((1.0 + (2.0 * i * z).exp()) / 2.0).ln()
    } else {
        i * z + ((1.0 + (-2.0 * i * z).exp()) / 2.0).ln()
    }
}

/// `ln ψ_1(z)` with a power series near the origin.
fn ln_psi1(z: C64) -> C64 {
    let i = C64::i();
    if z.norm() < 0.5 {
        // ψ_1 = z^2/3 (1 - z^2/10 + z^4/280 - z^6/15120 + z^8/1330560 ...)
        let z2 = z * z;
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..12 {
            let k = k as f64;
            term *= -z2 / (2.0 * k * (2.0 * k + 3.0));
            sum += term;
        }
        (z2 / 3.0 * sum).ln()
    } else if z.im.abs() < STABLE_IM {
        (z.sin() / z - z.cos()).ln()
    } else if z.im > 0.0 {
        let e = (2.0 * i * z).exp();
        -i * z + ((e - 1.0) / (2.0 * i * z) - (1.0 + e) / 2.0).ln()
    } else {
        let e = (-2.0 * i * z).exp();
        i * z + ((1.0 - e) / (2.0 * i * z) - (1.0 + e) / 2.0).ln()
    }
}

/// `(ln χ_0, ln χ_1)`.
fn ln_chi_first_two(z: C64) -> (C64, C64) {
    let i = C64::i();
    let l0 = ln_cos(z);
    let l1 = if z.im.abs() < STABLE_IM {
        (z.cos() / z + z.sin()).ln()
    } else if z.im > 0.0 {
        let e = (2.0 * i * z).exp();
        -i * z + ((1.0 + e) / (2.0 * z) + (e - 1.0) / (2.0 * i)).ln()
    } else {
        let e = (-2.0 * i * z).exp();
        i * z + ((1.0 + e) / (2.0 * z) + (1.0 - e) / (2.0 * i)).ln()
    };
    (l0, l1)
}

/// Starting order for the downward (Miller) recurrence.
fn miller_start(n_max: usize, z: C64) -> usize {
    let a = z.norm();
    n_max.max(1) + 15usize.max((1.2 * a).ceil() as usize) + (a.sqrt().ceil() as usize) * 2
}

/// `ln ψ_n(z)` for `n = 0..=n_max` by downward recurrence on rescaled values,
/// normalized against whichever of `ψ_0`, `ψ_1` is larger.
fn ln_psi_seq(n_max: usize, z: C64) -> Vec<C64> {
    let keep = n_max.max(1);
    let start = miller_start(n_max, z);
    let mut mant = vec![C64::new(0.0, 0.0); keep + 1];
    let mut offs = vec![0.0f64; keep + 1];
    let mut next = C64::new(0.0, 0.0);
    let mut cur = C64::new(1e-30, 0.0);
    let mut offset = 0.0f64;
    if start <= keep {
        mant[start] = cur;
    }
    let mut k = start;
    while k >= 1 {
        let prev = C64::new((2 * k + 1) as f64, 0.0) / z * cur - next;
        next = cur;
        cur = prev;
        if cur.norm() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            offset += RESCALE.ln();
        }
        if k - 1 <= keep {
            mant[k - 1] = cur;
            offs[k - 1] = offset;
        }
        k -= 1;
    }
    let ln_tilde: Vec<C64> = mant
        .iter()
        .zip(&offs)
        .map(|(m, o)| m.ln() + *o)
        .collect();
    let l0 = ln_sin(z);
    let l1 = ln_psi1(z);
    let (anchor, ln_true) = if l0.re >= l1.re { (0, l0) } else { (1, l1) };
    let shift = ln_true - ln_tilde[anchor];
    ln_tilde
        .into_iter()
        .take(n_max + 1)
        .map(|l| l + shift)
        .collect()
}

/// Upward recurrence on rescaled values from two logarithmic seeds.
fn upward_ln(n_max: usize, z: C64, l0: C64, l1: C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(l0);
    if n_max == 0 {
        return out;
    }
    out.push(l1);
    // mantissas relative to a running complex offset
    let mut offset = l1;
    let mut prev = (l0 - l1).exp();
    let mut cur = C64::new(1.0, 0.0);
    for n in 1..n_max {
        let nxt = C64::new((2 * n + 1) as f64, 0.0) / z * cur - prev;
        prev = cur;
        cur = nxt;
        let m = cur.norm();
        if !(1.0 / RESCALE..=RESCALE).contains(&m) {
            let s = cur.ln();
            offset += s;
            prev /= cur;
            cur = C64::new(1.0, 0.0);
        }
        out.push(cur.ln() + offset);
    }
    out
}

fn ln_xi_seq(n_max: usize, z: C64) -> Vec<C64> {
    let i = C64::i();
    // ξ_0 = -i e^{iz}, ξ_1 = -e^{iz} (1 + i/z)
    let l0 = i * z + (-i).ln();
    let l1 = i * z + (-(1.0 + i / z)).ln();
    upward_ln(n_max, z, l0, l1)
}

fn ln_chi_seq(n_max: usize, z: C64) -> Vec<C64> {
    let (l0, l1) = ln_chi_first_two(z);
    upward_ln(n_max, z, l0, l1)
}

/// `f_n'/f_n` from `f_n' = f_{n-1} - (n/z) f_n`, with `d0` supplied.
fn log_derivs(ln_f: &[C64], z: C64, ln_ratio0: C64) -> Vec<C64> {
    let mut d = Vec::with_capacity(ln_f.len());
    d.push(ln_ratio0.exp());
    for n in 1..ln_f.len() {
        d.push((ln_f[n - 1] - ln_f[n]).exp() - n as f64 / z);
    }
    d
}

fn log_derivs_xi(ln_xi: &[C64], z: C64) -> Vec<C64> {
    let mut d = Vec::with_capacity(ln_xi.len());
    d.push(C64::i());
    for n in 1..ln_xi.len() {
        d.push((ln_xi[n - 1] - ln_xi[n]).exp() - n as f64 / z);
    }
    d
}

/// Scaled `ψ_n(z)`.
pub fn riccati_psi_scaled(n: usize, z: C64) -> Result<ScaledRiccati, SpecfunError> {
    check_arg(n, z, DEFAULT_N_MAX)?;
    let ln = ln_psi_seq(n.max(1), z);
    let d = if n == 0 {
        (ln_cos(z) - ln[0]).exp()
    } else {
        (ln[n - 1] - ln[n]).exp() - n as f64 / z
    };
    Ok(ScaledRiccati {
        ln_value: ln[n],
        log_derivative: d,
        n,
        z,
    })
}

/// Scaled `χ_n(z)`.
pub fn riccati_chi_scaled(n: usize, z: C64) -> Result<ScaledRiccati, SpecfunError> {
    check_arg(n, z, DEFAULT_N_MAX)?;
    let ln = ln_chi_seq(n.max(1), z);
    let d = if n == 0 {
        // χ_0' = -sin z
        -(ln_sin(z) - ln[0]).exp()
    } else {
        (ln[n - 1] - ln[n]).exp() - n as f64 / z
    };
    Ok(ScaledRiccati {
        ln_value: ln[n],
        log_derivative: d,
        n,
        z,
    })
}

/// Scaled `ξ_n(z)`.
pub fn riccati_xi_scaled(n: usize, z: C64) -> Result<ScaledRiccati, SpecfunError> {
    check_arg(n, z, DEFAULT_N_MAX)?;
    let ln = ln_xi_seq(n.max(1), z);
    let d = log_derivs_xi(&ln, z)[n];
    Ok(ScaledRiccati {
        ln_value: ln[n],
        log_derivative: d,
        n,
        z,
    })
}

/// `ψ_n(z)` and `ψ_n'(z)`.
pub fn riccati_psi(n: usize, z: C64) -> Result<RiccatiPair, SpecfunError> {
    riccati_psi_scaled(n, z)?.to_pair()
}

/// `χ_n(z)` and `χ_n'(z)`.
pub fn riccati_chi(n: usize, z: C64) -> Result<RiccatiPair, SpecfunError> {
    riccati_chi_scaled(n, z)?.to_pair()
}

/// `ξ_n(z)` and `ξ_n'(z)`.
pub fn riccati_xi(n: usize, z: C64) -> Result<RiccatiPair, SpecfunError> {
    riccati_xi_scaled(n, z)?.to_pair()
}

/// `π_n(μ) = P_n^1(μ)/sin θ` and `τ_n(μ) = dP_n^1/dθ`, with `π_1 = 1`.
pub fn angular_pi_tau(n: usize, mu: f64) -> (f64, f64) {
    assert!(n >= 1, "angular functions start at n = 1");
    let (pi, tau) = pi_tau_table(n, mu);
    (pi[n], tau[n])
}

/// `π_n`, `τ_n` for `n = 0..=n_max` (index 0 is zero).
pub fn pi_tau_table(n_max: usize, mu: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pi = vec![0.0; n_max + 1];
    let mut tau = vec![0.0; n_max + 1];
    if n_max == 0 {
        return (pi, tau);
    }
    pi[1] = 1.0;
    tau[1] = mu;
    for n in 2..=n_max {
        let nf = n as f64;
        pi[n] = ((2.0 * nf - 1.0) * mu * pi[n - 1] - nf * pi[n - 2]) / (nf - 1.0);
        tau[n] = nf * mu * pi[n] - (nf + 1.0) * pi[n - 1];
    }
    (pi, tau)
}
