//! Independent reference computations used by the solver tests. Nothing here
//! calls into the solver or the library's special functions.
#![allow(dead_code)]

use num_complex::Complex64 as C;

const I: C = C::new(0.0, 1.0);

/// `ψ_n(z)` from the power series; fine for `|z|` up to about 10.
pub fn psi_series(n: usize, z: C) -> C {
    let mut df = 1.0;
    for k in 0..=n {
        df *= (2 * k + 1) as f64;
    }
    let mut term = C::new(1.0, 0.0);
    let mut sum = term;
    let q = -z * z / 2.0;
    for k in 1..200 {
        term *= q / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    z.powu(n as u32 + 1) / df * sum
}

pub fn dpsi_series(n: usize, z: C) -> C {
    let lower = if n == 0 { z.cos() } else { psi_series(n - 1, z) };
    if n == 0 {
        lower
    } else {
        lower - psi_series(n, z) * n as f64 / z
    }
}

/// `ξ_n(z) = z h_n^(1)(z)` from the terminating sum.
pub fn xi_closed(n: usize, z: C) -> C {
    let mut sum = C::new(0.0, 0.0);
    let fact = |m: usize| (1..=m).fold(1.0f64, |a, b| a * b as f64);
    for k in 0..=n {
        let c = fact(n + k) / (fact(k) * fact(n - k));
        sum += (I / (2.0 * z)).powu(k as u32) * c;
    }
    (-I).powu(n as u32 + 1) * (I * z).exp() * sum
}

pub fn dxi_closed(n: usize, z: C) -> C {
    if n == 0 {
        (I * z).exp()
    } else {
        xi_closed(n - 1, z) - xi_closed(n, z) * n as f64 / z
    }
}

pub fn e_n(n: usize) -> C {
    let nf = n as f64;
    I.powu(n as u32) * ((2.0 * nf + 1.0) / (nf * (nf + 1.0)))
}

/// Textbook single-sphere coefficients (relative index `m`, size `x`, μ = 1)
/// via the downward log-derivative `D_n(mx)` and Miller-normalized `ψ_n(x)`.
pub fn bh_single_sphere(m: C, x: f64, n_max: usize) -> (Vec<C>, Vec<C>) {
    let mx = m * x;
    let start = n_max + 40 + (mx.norm() + x) as usize;
    let mut d = vec![C::new(0.0, 0.0); start + 1];
    for n in (1..=start).rev() {
        let nz = n as f64 / mx;
        d[n - 1] = nz - 1.0 / (d[n] + nz);
    }
    // real ψ_n(x): downward ratio recurrence, normalized by ψ_0 = sin x
    let mut psi = vec![0.0f64; start + 2];
    psi[start + 1] = 0.0;
    psi[start] = 1e-300;
    for n in (1..=start).rev() {
        psi[n - 1] = (2 * n + 1) as f64 / x * psi[n] - psi[n + 1];
        if psi[n - 1].abs() > 1e250 {
            // rescale to stay in range
            for v in psi.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let scale = x.sin() / psi[0];
    let psi: Vec<f64> = psi.iter().map(|v| v * scale).collect();
    // χ_n(x) = −x y_n(x): stable upward
    let mut chi = vec![0.0f64; n_max + 1];
    chi[0] = x.cos();
    if n_max >= 1 {
        chi[1] = x.cos() / x + x.sin();
    }
    for n in 1..n_max {
        chi[n + 1] = (2 * n + 1) as f64 / x * chi[n] - chi[n - 1];
    }
    let xi = |n: usize| C::new(psi[n], -chi[n]);
    let mut a = Vec::with_capacity(n_max);
    let mut b = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let nx = n as f64 / x;
        let fa = d[n] / m + nx;
        let fb = d[n] * m + nx;
        a.push((fa * psi[n] - psi[n - 1]) / (fa * xi(n) - xi(n - 1)));
        b.push((fb * psi[n] - psi[n - 1]) / (fb * xi(n) - xi(n - 1)));
    }
    (a, b)
}

#[derive(Debug, Clone, Copy)]
pub struct Layer {
    pub r_out: f64,
    pub eps: C,
    pub mu: C,
}

/// Unit current along local x on `[lo, hi]` (degree 1, TM only).
#[derive(Debug, Clone, Copy)]
pub struct Forcing {
    pub lo: f64,
    pub hi: f64,
}

fn layer_at(layers: &[Layer], r: f64) -> &Layer {
    layers.iter().find(|l| r <= l.r_out).unwrap_or(layers.last().unwrap())
}

type State = [C; 2];

/// RK4 in `t = ln r` for the radial system of one mode. `tm` selects the
/// variables `P = r e_θ`, `Q = r h_φ` with `Q' = iωεP − rJ`,
/// `P' = iωμQ − i n(n+1) Q/(ωεr²) + J/(iωε)`; otherwise
/// `P' = iωμQ`, `Q' = −i n(n+1) P/(ωμr²) + iωεP`.
fn integrate(
    layers: &[Layer],
    omega: f64,
    n: usize,
    tm: bool,
    forcing: Option<Forcing>,
    y0: State,
    r0: f64,
    steps_per_segment: usize,
) -> State {
    let nn = (n * (n + 1)) as f64;
    let rhs = |r: f64, y: &State, lay: &Layer, src: bool| -> State {
        let (p, q) = (y[0], y[1]);
        let (eps, mu) = (lay.eps, lay.mu);
        let j = if src { 1.0 } else { 0.0 };
        let (dp, dq) = if tm {
            (
                I * omega * mu * q - I * nn * q / (omega * eps * r * r) + j / (I * omega * eps),
                I * omega * eps * p - r * j,
            )
        } else {
            (I * omega * mu * q, -I * nn * p / (omega * mu * r * r) + I * omega * eps * p)
        };
        // d/dt = r d/dr
        [dp * r, dq * r]
    };
    let mut breaks: Vec<f64> = layers.iter().map(|l| l.r_out).collect();
    if let Some(f) = forcing {
        breaks.push(f.lo);
        breaks.push(f.hi);
    }
    breaks.retain(|b| *b > r0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut y = y0;
    let mut r_start = r0;
    for &r_end in &breaks {
        let mid = 0.5 * (r_start + r_end);
        let lay = *layer_at(layers, mid);
        let src = forcing.map(|f| mid > f.lo && mid < f.hi).unwrap_or(false);
        let (t0, t1) = (r_start.ln(), r_end.ln());
        let h = (t1 - t0) / steps_per_segment as f64;
        for s in 0..steps_per_segment {
            let t = t0 + h * s as f64;
            let f = |t: f64, y: &State| rhs(t.exp(), y, &lay, src);
            let add = |y: &State, k: &State, c: f64| [y[0] + k[0] * c, y[1] + k[1] * c];
            let k1 = f(t, &y);
            let k2 = f(t + h / 2.0, &add(&y, &k1, h / 2.0));
            let k3 = f(t + h / 2.0, &add(&y, &k2, h / 2.0));
            let k4 = f(t + h, &add(&y, &k3, h));
            for i in 0..2 {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        r_start = r_end;
    }
    y
}

fn core_k(layers: &[Layer], omega: f64) -> (C, C, C) {
    let l = layers[0];
    let mut m = (l.eps * l.mu).sqrt();
    if m.im < 0.0 {
        m = -m;
    }
    (m, l.mu, m * omega)
}

/// Regular starting values of `(P, Q)` at `r0` inside the core.
fn regular_start(layers: &[Layer], omega: f64, n: usize, tm: bool, r0: f64) -> State {
    let (m, mu, k) = core_k(layers, omega);
    let en = e_n(n);
    let z = k * r0;
    let (v, d) = (psi_series(n, z), dpsi_series(n, z));
    if tm {
        [-I * en * d / k, m / mu * en * v / k]
    } else {
        [en * v / k, -I * en * d / (omega * mu)]
    }
}

/// Exterior `(a_n, b_n)` of a layered sphere by direct integration.
pub fn ode_plane_wave(layers: &[Layer], omega: f64, n_max: usize, steps: usize) -> (Vec<C>, Vec<C>) {
    let big_r = layers.last().unwrap().r_out;
    let r0 = 1e-3 * layers[0].r_out;
    let x = C::new(omega * big_r, 0.0);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for n in 1..=n_max {
        let (psi, dpsi, xi, dxi) = (psi_series(n, x), dpsi_series(n, x), xi_closed(n, x), dxi_closed(n, x));
        let y = integrate(layers, omega, n, true, None, regular_start(layers, omega, n, true, r0), r0, steps);
        let l = I * y[0] / y[1];
        a.push((dpsi - l * psi) / (dxi - l * xi));
        let y = integrate(layers, omega, n, false, None, regular_start(layers, omega, n, false, r0), r0, steps);
        let l = I * y[1] / y[0];
        b.push((dpsi - l * psi) / (dxi - l * xi));
    }
    (a, b)
}

/// Degree-1 exterior coefficient of a unit local-x current on
/// `[forcing.lo, forcing.hi]`.
pub fn ode_current(layers: &[Layer], omega: f64, forcing: Forcing, steps: usize) -> C {
    let big_r = layers.last().unwrap().r_out;
    let r0 = if forcing.lo > 0.0 {
        1e-3 * layers[0].r_out.min(forcing.lo)
    } else {
        1e-3 * forcing.hi.min(layers[0].r_out)
    };
    let x = C::new(omega * big_r, 0.0);
    let yh = integrate(layers, omega, 1, true, None, regular_start(layers, omega, 1, true, r0), r0, steps);
    // particular start: inside a source ball the constant field −i x̂/(ωε)
    let yp0 = if forcing.lo <= 0.0 {
        [-I * r0 / (omega * layers[0].eps), C::new(0.0, 0.0)]
    } else {
        [C::new(0.0, 0.0); 2]
    };
    let yp = integrate(layers, omega, 1, true, Some(forcing), yp0, r0, steps);
    let d3 = dxi_closed(1, x) / xi_closed(1, x);
    let c = -(yp[0] + I * d3 * yp[1]) / (yh[0] + I * d3 * yh[1]);
    let q = c * yh[1] + yp[1];
    -omega * q / (e_n(1) * xi_closed(1, x))
}
