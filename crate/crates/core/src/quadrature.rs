//! Gauss–Legendre rules (nodes from `gauss-quad`, Newton-polished) and an adaptive interval
//! integrator built on a 10/20-point pair.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

/// Nodes (ascending) and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n).expect("Gauss-Legendre rule needs at least one node");
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n)
        .into_node_weight_pairs()
        .into_vec()
        .into_iter()
        .map(|(x, _)| polish(n.get(), x))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

// A couple of Newton steps on the supplied node, then the closed-form weight;
// this keeps the weight sum at rounding level for large n.
fn polish(n: usize, mut x: f64) -> (f64, f64) {
    for _ in 0..3 {
        let (p, dp) = legendre(n, x);
        let step = p / dp;
        x -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    let (_, dp) = legendre(n, x);
    (x, 2.0 / ((1.0 - x * x) * dp * dp))
}

struct Pair {
    lo: (Vec<f64>, Vec<f64>),
    hi: (Vec<f64>, Vec<f64>),
}

fn pair() -> &'static Pair {
    static P: OnceLock<Pair> = OnceLock::new();
    P.get_or_init(|| Pair {
        lo: gauss_legendre(10),
        hi: gauss_legendre(20),
    })
}

fn apply<F: FnMut(f64) -> f64>(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64, f: &mut F) -> f64 {
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive bisection until each panel's 10/20-point difference meets its
/// share of `max(rel_tol·|I|, abs_tol)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Integral {
    const MAX_DEPTH: u32 = 40;
    const MAX_PANELS: usize = 20_000;
    let p = pair();
    let whole = apply(&p.hi, a, b, &mut f);
    let mut stack = vec![(a, b, 0u32)];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    let mut panels = 0usize;
    let scale = whole.abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        panels += 1;
        let g = apply(&p.lo, lo, hi, &mut f);
        let k = apply(&p.hi, lo, hi, &mut f);
        let err = (k - g).abs();
        let share = (hi - lo) / (b - a);
        let tol = (rel_tol * scale).max(abs_tol) * share;
        if err <= tol || depth >= MAX_DEPTH || panels >= MAX_PANELS {
            if err > tol {
                converged = false;
            }
            value += k;
            error += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Integral {
        value,
        error,
        converged,
    }
}
