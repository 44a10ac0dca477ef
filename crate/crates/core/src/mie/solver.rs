//! Plane-wave, current and trace solves.
//!
//! Inside a homogeneous region `[r_in, r_out]` with `k = ω√(εμ)` the radial
//! function of each mode is
//!
//! ```text
//! Ψ(z) = P ψ_n(z)/ψ_n(z_out) + S ξ_n(z)/ξ_n(z_in),   z = k r,
//! ```
//!
//! which stays O(1) however large `|z|` becomes. Across interfaces the
//! tangential fields are continuous, i.e. `(Ψ/m, Ψ'/μ)` for TE modes and
//! `(Ψ'/m, Ψ/μ)` for TM modes, `m = √(εμ)`.

use nalgebra::{DMatrix, DVector, Vector3};

use super::{
    angles, combine_families, e_n, sph_to_cart, wiscombe_cutoff, Frame, LayeredSphere, MieError,
    MultipoleCoefficients, C64, I, ONE, TAIL_TOL, ZERO,
};
use crate::cloakmap::{SourceSpec, TangentialTrace};
use crate::specfun::{self, RiccatiTable, DEFAULT_N_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Te,
    Tm,
}

#[derive(Debug, Clone)]
pub(crate) struct Region {
    pub r_in: f64,
    pub r_out: f64,
    pub eps: C64,
    pub mu: C64,
    pub m: C64,
    pub k: C64,
    /// Carries a unit current along the local x-axis.
    pub source: bool,
}

impl Region {
    fn new(r_in: f64, r_out: f64, eps: C64, mu: C64, omega: f64, source: bool) -> Self {
        let mut m = (eps * mu).sqrt();
        if m.im < 0.0 {
            m = -m;
        }
        Self {
            r_in,
            r_out,
            eps,
            mu,
            m,
            k: m * omega,
            source,
        }
    }

    fn vacuum(r: f64, omega: f64) -> Self {
        Self::new(r, f64::INFINITY, ONE, ONE, omega, false)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RegionTables {
    pub inner: Option<RiccatiTable>,
    pub outer: RiccatiTable,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Amp {
    pub p: C64,
    pub s: C64,
}

/// Solved state: exterior coefficients plus the interior amplitudes needed to
/// reconstruct fields anywhere.
#[derive(Debug, Clone)]
pub struct MieSolution {
    pub coefficients: MultipoleCoefficients,
    pub(crate) omega: f64,
    pub(crate) regions: Vec<Region>,
    pub(crate) tables: Vec<RegionTables>,
    /// `[region][n-1]`
    pub(crate) te: Vec<Vec<Amp>>,
    pub(crate) tm: Vec<Vec<Amp>>,
    pub(crate) incident: bool,
}

fn tables(regions: &[Region], n_max: usize) -> Result<Vec<RegionTables>, MieError> {
    regions
        .iter()
        .map(|r| {
            Ok(RegionTables {
                inner: if r.r_in > 0.0 {
                    Some(RiccatiTable::new(n_max, r.k * r.r_in)?)
                } else {
                    None
                },
                outer: RiccatiTable::new(n_max, r.k * r.r_out)?,
            })
        })
        .collect()
}

/// Continuity factors: crossing from `inner` to `outer`,
/// `Ψ_o = fv Ψ_i` and `Ψ'_o = fd Ψ'_i`.
fn crossing(mode: Mode, inner: &Region, outer: &Region) -> (C64, C64) {
    match mode {
        Mode::Te => (outer.m / inner.m, outer.mu / inner.mu),
        Mode::Tm => (outer.mu / inner.mu, outer.m / inner.m),
    }
}

/// Continuous pair `X` from `(Ψ, Ψ')`.
fn to_x(mode: Mode, r: &Region, v: C64, d: C64) -> [C64; 2] {
    match mode {
        Mode::Te => [v / r.m, d / r.mu],
        Mode::Tm => [d / r.m, v / r.mu],
    }
}

/// Least-squares amplitude from `Ψ = c1 P`, `Ψ' = c2 P` (both consistent).
fn amplitude_from(c1: C64, c2: C64, v: C64, d: C64) -> C64 {
    let den = c1.norm_sqr() + c2.norm_sqr();
    if den == 0.0 {
        ZERO
    } else {
        (c1.conj() * v + c2.conj() * d) / den
    }
}

fn split_frame(v: &Vector3<C64>) -> (Frame, [C64; 2]) {
    let re = v.map(|c| c.re);
    let im = v.map(|c| c.im);
    let (first, second) = if re.norm() >= im.norm() { (re, im) } else { (im, re) };
    if first.norm() == 0.0 {
        return (Frame::canonical(), [ZERO, ZERO]);
    }
    let e1 = first.normalize();
    let mut e2 = second - e1 * e1.dot(&second);
    if e2.norm() <= 1e-12 * first.norm() {
        let trial = if e1.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        e2 = trial - e1 * e1.dot(&trial);
    }
    let e2 = e2.normalize();
    let frame = Frame {
        e1,
        e2,
        e3: e1.cross(&e2),
    };
    let amp = frame.transverse_components(v);
    (frame, amp)
}

fn plane_wave_frame(src: &SourceSpec) -> Result<(Frame, [C64; 2]), MieError> {
    match src {
        SourceSpec::PlaneWave { khat, pol } => {
            src.validate()
                .map_err(|e| MieError::UnsupportedSource(e.to_string()))?;
            let re = pol.map(|c| c.re);
            let im = pol.map(|c| c.im);
            let hint = if re.norm() >= im.norm() { re } else { im };
            let frame = Frame::from_axis(*khat, hint);
            let amp = frame.transverse_components(pol);
            Ok((frame, amp))
        }
        _ => Err(MieError::UnsupportedSource("expected a plane wave".into())),
    }
}

/// Exterior coefficient and interior amplitudes of one mode by the forward
/// log-derivative recursion and a backward amplitude pass.
fn recursion(
    mode: Mode,
    n: usize,
    regions: &[Region],
    tabs: &[RegionTables],
    vac: &Region,
    vt: &RiccatiTable,
) -> (C64, Vec<Amp>) {
    let nreg = regions.len();
    let mut q = vec![ZERO; nreg];
    let mut hg = vec![ZERO; nreg];
    let mut l = tabs[0].outer.d_psi[n];
    for j in 1..nreg {
        let (fv, fd) = crossing(mode, &regions[j - 1], &regions[j]);
        let lin = l * fd / fv;
        let ti = tabs[j].inner.as_ref().expect("shell has an inner table");
        let to = &tabs[j].outer;
        q[j] = (ti.d_psi[n] - lin) / (lin - ti.d_xi[n]);
        hg[j] = (ti.ln_psi[n] + to.ln_xi[n] - to.ln_psi[n] - ti.ln_xi[n]).exp();
        l = (to.d_psi[n] + q[j] * hg[j] * to.d_xi[n]) / (ONE + q[j] * hg[j]);
    }
    let (fv, fd) = crossing(mode, &regions[nreg - 1], vac);
    let lv = l * fd / fv;
    let (d1, d3) = (vt.d_psi[n], vt.d_xi[n]);
    let c = (vt.ln_psi[n] - vt.ln_xi[n]).exp() * (d1 - lv) / (d3 - lv);

    // Ψ = ψ − cξ just outside, written without ξ itself
    let psi = vt.ln_psi[n].exp();
    let mut v = psi * (d3 - d1) / (d3 - lv);
    let mut d = v * lv;
    let mut outer = vac;
    let mut amps = vec![Amp::default(); nreg];
    for j in (0..nreg).rev() {
        let (fv, fd) = crossing(mode, &regions[j], outer);
        let (vi, di) = (v / fv, d / fd);
        let to = &tabs[j].outer;
        let c1 = ONE + q[j] * hg[j];
        let c2 = to.d_psi[n] + q[j] * hg[j] * to.d_xi[n];
        let p = amplitude_from(c1, c2, vi, di);
        if let Some(ti) = &tabs[j].inner {
            let ratio = (ti.ln_psi[n] - to.ln_psi[n]).exp();
            let u = p * ratio;
            let s = q[j] * u;
            amps[j] = Amp { p, s };
            v = u + s;
            d = u * ti.d_psi[n] + s * ti.d_xi[n];
        } else {
            amps[j] = Amp { p, s: ZERO };
        }
        outer = &regions[j];
    }
    (c, amps)
}

/// Interface system for one mode, solved densely. `incident` adds the
/// regular vacuum wave; regions flagged `source` carry the n = 1 TM
/// particular field of a unit current.
fn dense(
    mode: Mode,
    n: usize,
    regions: &[Region],
    tabs: &[RegionTables],
    vac: &Region,
    vt: &RiccatiTable,
    incident: bool,
) -> Result<(C64, Vec<Amp>), MieError> {
    let nreg = regions.len();
    // column offsets: region 0 has P; shells have P, S; vacuum has w = c ξ(x)
    let mut col = Vec::with_capacity(nreg);
    let mut next = 0;
    for j in 0..nreg {
        col.push(next);
        next += if j == 0 { 1 } else { 2 };
    }
    let w_col = next;
    let size = next + 1;
    let mut a = DMatrix::from_element(size, size, ZERO);
    let mut rhs = DVector::from_element(size, ZERO);

    let particular = |r: &Region, radius: f64| -> [C64; 2] {
        if r.source && mode == Mode::Tm && n == 1 {
            [-I * (2.0 / 3.0) * radius / r.eps, ZERO]
        } else {
            [ZERO, ZERO]
        }
    };

    for j in 0..nreg {
        let rows = [2 * j, 2 * j + 1];
        let reg = &regions[j];
        let to = &tabs[j].outer;
        // inner side (region j at its outer radius), sign +
        let xp = to_x(mode, reg, ONE, to.d_psi[n]);
        for (k, row) in rows.iter().enumerate() {
            a[(*row, col[j])] += xp[k];
        }
        if let Some(ti) = &tabs[j].inner {
            let beta = (to.ln_xi[n] - ti.ln_xi[n]).exp();
            let xs = to_x(mode, reg, beta, beta * to.d_xi[n]);
            for (k, row) in rows.iter().enumerate() {
                a[(*row, col[j] + 1)] += xs[k];
            }
        }
        let pin = particular(reg, reg.r_out);
        // outer side, sign −
        if j + 1 < nreg {
            let o = &regions[j + 1];
            let ti = tabs[j + 1].inner.as_ref().expect("shell has an inner table");
            let too = &tabs[j + 1].outer;
            let alpha = (ti.ln_psi[n] - too.ln_psi[n]).exp();
            let xp = to_x(mode, o, alpha, alpha * ti.d_psi[n]);
            let xs = to_x(mode, o, ONE, ti.d_xi[n]);
            for (k, row) in rows.iter().enumerate() {
                a[(*row, col[j + 1])] -= xp[k];
                a[(*row, col[j + 1] + 1)] -= xs[k];
            }
            let pout = particular(o, reg.r_out);
            for (k, row) in rows.iter().enumerate() {
                rhs[*row] += pout[k] - pin[k];
            }
        } else {
            // scattered part −w ξ/ξ(x): Ψ = −w, Ψ' = −w D3
            let xw = to_x(mode, vac, -ONE, -vt.d_xi[n]);
            for (k, row) in rows.iter().enumerate() {
                a[(*row, w_col)] -= xw[k];
                rhs[*row] -= pin[k];
            }
            if incident {
                let psi = vt.ln_psi[n].exp();
                let xi = to_x(mode, vac, psi, psi * vt.d_psi[n]);
                for (k, row) in rows.iter().enumerate() {
                    rhs[*row] += xi[k];
                }
            }
        }
    }
    // row equilibration
    for i in 0..size {
        let s = a.row(i).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            let f = C64::new(1.0 / s, 0.0);
            for jj in 0..size {
                a[(i, jj)] *= f;
            }
            rhs[i] *= f;
        }
    }
    let x = a.lu().solve(&rhs).ok_or(MieError::Singular { n })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(MieError::Singular { n });
    }
    let mut amps = vec![Amp::default(); nreg];
    for j in 0..nreg {
        amps[j].p = x[col[j]];
        if j > 0 {
            amps[j].s = x[col[j] + 1];
        }
    }
    let c = x[w_col] * (-vt.ln_xi[n]).exp();
    Ok((c, amps))
}

fn sphere_regions(sphere: &LayeredSphere, omega: f64) -> Vec<Region> {
    let mut prev = 0.0;
    sphere
        .shells()
        .iter()
        .map(|s| {
            let r = Region::new(prev, s.outer_radius, s.eps, s.mu, omega, false);
            prev = s.outer_radius;
            r
        })
        .collect()
}

fn check_omega(omega: f64) -> Result<(), MieError> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(MieError::UnsupportedSource(format!("omega must be positive, got {omega}")))
    }
}

fn check_passivity(coeffs: &MultipoleCoefficients) -> Result<(), MieError> {
    for n in 1..=coeffs.n_max() {
        for (c, mode) in [(coeffs.a(n), "TM"), (coeffs.b(n), "TE")] {
            let excess = c.re - c.norm_sqr();
            if excess < -1e-9 * c.norm() {
                return Err(MieError::Passivity { n, mode, excess });
            }
        }
    }
    Ok(())
}

/// Plane-wave solve with the recursion at a fixed cutoff (no tail check).
pub fn plane_wave_solve_with_cutoff(
    sphere: &LayeredSphere,
    omega: f64,
    src: &SourceSpec,
    n_max: usize,
) -> Result<MieSolution, MieError> {
    check_omega(omega)?;
    let (frame, amplitude) = plane_wave_frame(src)?;
    let regions = sphere_regions(sphere, omega);
    let tabs = tables(&regions, n_max)?;
    let big_r = sphere.outer_radius();
    let vac = Region::vacuum(big_r, omega);
    let vt = RiccatiTable::new(n_max, C64::new(omega * big_r, 0.0))?;
    let mut a = Vec::with_capacity(n_max);
    let mut b = Vec::with_capacity(n_max);
    let nreg = regions.len();
    let mut te = vec![Vec::with_capacity(n_max); nreg];
    let mut tm = vec![Vec::with_capacity(n_max); nreg];
    for n in 1..=n_max {
        let (cb, amps_te) = recursion(Mode::Te, n, &regions, &tabs, &vac, &vt);
        let (ca, amps_tm) = recursion(Mode::Tm, n, &regions, &tabs, &vac, &vt);
        a.push(ca);
        b.push(cb);
        for j in 0..nreg {
            te[j].push(amps_te[j]);
            tm[j].push(amps_tm[j]);
        }
    }
    Ok(MieSolution {
        coefficients: MultipoleCoefficients {
            a,
            b,
            frame,
            amplitude,
            radius: big_r,
        },
        omega,
        regions,
        tables: tabs,
        te,
        tm,
        incident: true,
    })
}

/// Plane-wave scattering by a layered sphere. The cutoff starts from the
/// Wiscombe rule and grows until the tail criterion holds.
pub fn plane_wave_solve(
    sphere: &LayeredSphere,
    omega: f64,
    src: &SourceSpec,
) -> Result<MieSolution, MieError> {
    let mut n_max = wiscombe_cutoff(omega * sphere.outer_radius());
    loop {
        let sol = plane_wave_solve_with_cutoff(sphere, omega, src, n_max)?;
        let tail = sol.coefficients.tail_ratio();
        if tail < TAIL_TOL {
            check_passivity(&sol.coefficients)?;
            return Ok(sol);
        }
        if n_max >= DEFAULT_N_MAX {
            return Err(MieError::CutoffInadequate { n_max, tail });
        }
        n_max = (n_max + 5).min(DEFAULT_N_MAX);
    }
}

/// Same problem through the dense interface system. Used to cross-check the
/// recursion.
pub fn plane_wave_solve_dense(
    sphere: &LayeredSphere,
    omega: f64,
    src: &SourceSpec,
    n_max: usize,
) -> Result<MieSolution, MieError> {
    check_omega(omega)?;
    let (frame, amplitude) = plane_wave_frame(src)?;
    let regions = sphere_regions(sphere, omega);
    let tabs = tables(&regions, n_max)?;
    let big_r = sphere.outer_radius();
    let vac = Region::vacuum(big_r, omega);
    let vt = RiccatiTable::new(n_max, C64::new(omega * big_r, 0.0))?;
    let nreg = regions.len();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut te = vec![Vec::new(); nreg];
    let mut tm = vec![Vec::new(); nreg];
    for n in 1..=n_max {
        let (cb, at) = dense(Mode::Te, n, &regions, &tabs, &vac, &vt, true)?;
        let (ca, am) = dense(Mode::Tm, n, &regions, &tabs, &vac, &vt, true)?;
        a.push(ca);
        b.push(cb);
        for j in 0..nreg {
            te[j].push(at[j]);
            tm[j].push(am[j]);
        }
    }
    Ok(MieSolution {
        coefficients: MultipoleCoefficients {
            a,
            b,
            frame,
            amplitude,
            radius: big_r,
        },
        omega,
        regions,
        tables: tabs,
        te,
        tm,
        incident: true,
    })
}

fn aligned(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Regions of `sphere` with the source support `[s_in, s_out]` carved out of
/// the single shell that contains it.
fn source_regions(
    sphere: &LayeredSphere,
    omega: f64,
    s_in: f64,
    s_out: f64,
) -> Result<Vec<Region>, MieError> {
    let base = sphere_regions(sphere, omega);
    let host = base
        .iter()
        .position(|r| {
            (s_in >= r.r_in || aligned(s_in, r.r_in)) && (s_out <= r.r_out || aligned(s_out, r.r_out))
        })
        .ok_or_else(|| {
            MieError::UnsupportedSource(format!(
                "current support [{s_in}, {s_out}] is not contained in a single shell"
            ))
        })?;
    let mut out = Vec::with_capacity(base.len() + 2);
    for (j, r) in base.into_iter().enumerate() {
        if j != host {
            out.push(r);
            continue;
        }
        let lo = if aligned(s_in, r.r_in) || s_in <= r.r_in { r.r_in } else { s_in };
        let hi = if aligned(s_out, r.r_out) { r.r_out } else { s_out };
        let mut cuts = vec![(r.r_in, lo, false), (lo, hi, true), (hi, r.r_out, false)];
        cuts.retain(|c| c.1 > c.0);
        for (a, b, src) in cuts {
            out.push(Region::new(a, b, r.eps, r.mu, omega, src));
        }
    }
    Ok(out)
}

/// Field of a constant current density on a ball or shell inside a layered
/// sphere. Only degree-1 TM modes are excited.
pub fn current_n1_solve(
    sphere: &LayeredSphere,
    omega: f64,
    src: &SourceSpec,
) -> Result<MieSolution, MieError> {
    check_omega(omega)?;
    let (s_in, s_out, j0) = match src {
        SourceSpec::CoreBallCurrent { radius, j0 } => (0.0, *radius, j0),
        SourceSpec::ShellBallCurrent { r_in, r_out, j0 } => (*r_in, *r_out, j0),
        _ => return Err(MieError::UnsupportedSource("expected a ball or shell current".into())),
    };
    src.validate()
        .map_err(|e| MieError::UnsupportedSource(e.to_string()))?;
    let regions = source_regions(sphere, omega, s_in, s_out)?;
    let (frame, amplitude) = split_frame(j0);
    let n_max = 1;
    let tabs = tables(&regions, n_max)?;
    let big_r = sphere.outer_radius();
    let vac = Region::vacuum(big_r, omega);
    let vt = RiccatiTable::new(n_max, C64::new(omega * big_r, 0.0))?;
    let (ca, am) = dense(Mode::Tm, 1, &regions, &tabs, &vac, &vt, false)?;
    // a vanishing current has no field; keep the coefficients zero as well
    let (ca, am) = if amplitude == [ZERO, ZERO] {
        (ZERO, vec![Amp::default(); am.len()])
    } else {
        (ca, am)
    };
    let nreg = regions.len();
    Ok(MieSolution {
        coefficients: MultipoleCoefficients {
            a: vec![ca],
            b: vec![ZERO],
            frame,
            amplitude,
            radius: big_r,
        },
        omega,
        regions,
        tables: tabs,
        te: vec![vec![Amp::default()]; nreg],
        tm: am.into_iter().map(|a| vec![a]).collect(),
        incident: false,
    })
}

/// Dispatches plane waves and currents.
pub fn solve_source(
    sphere: &LayeredSphere,
    omega: f64,
    src: &SourceSpec,
) -> Result<MieSolution, MieError> {
    match src {
        SourceSpec::PlaneWave { .. } => plane_wave_solve(sphere, omega, src),
        SourceSpec::CoreBallCurrent { .. } | SourceSpec::ShellBallCurrent { .. } => {
            current_n1_solve(sphere, omega, src)
        }
        SourceSpec::TangentialTrace(_) => Err(MieError::UnsupportedSource(
            "tangential traces are solved with exterior_trace_solve".into(),
        )),
    }
}

/// Outgoing field on `|x| > τ` whose tangential electric trace on `|x| = τ`
/// is `Σ E_n (te_n m_n − i tm_n n_n)` with `m_n`, `n_n` the angular parts of
/// `M_o1n` and `N_e1n`.
pub fn exterior_trace_solve(
    tau: f64,
    omega: f64,
    trace: &TangentialTrace,
) -> Result<MultipoleCoefficients, MieError> {
    check_omega(omega)?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(MieError::UnsupportedSource(format!("trace radius must be positive, got {tau}")));
    }
    let n_max = trace.len();
    let x = omega * tau;
    let mut a = Vec::with_capacity(n_max);
    let mut b = Vec::with_capacity(n_max);
    if n_max > 0 {
        let t = RiccatiTable::new(n_max, C64::new(x, 0.0))?;
        for n in 1..=n_max {
            // x/ξ and x/ξ' in log form; ξ does not vanish for real x > 0
            let inv_xi = (C64::new(x.ln(), 0.0) - t.ln_xi[n]).exp();
            let dxi = t.d_xi[n];
            assert!(dxi.norm() > 0.0 && inv_xi.is_finite(), "outgoing trace denominator vanished");
            b.push(-trace.te(n) * inv_xi);
            a.push(-trace.tm(n) * inv_xi / dxi);
        }
    }
    Ok(MultipoleCoefficients {
        a,
        b,
        frame: Frame::canonical(),
        amplitude: [ONE, ZERO],
        radius: tau,
    })
}

/// Tangential-trace coefficients of the canonical plane wave on `|x| = τ`.
pub fn plane_wave_trace(tau: f64, omega: f64, n_max: usize) -> Result<TangentialTrace, MieError> {
    let x = omega * tau;
    let t = RiccatiTable::new(n_max, C64::new(x, 0.0))?;
    let te = (1..=n_max).map(|n| t.psi(n) / x).collect();
    let tm = (1..=n_max).map(|n| t.dpsi(n) / x).collect();
    Ok(TangentialTrace { te, tm })
}

/// `(E, H)` in local spherical components `(r, θ, φ)` of the x-family with
/// per-degree radial data `(Ψ_te, Ψ_te', Ψ_tm, Ψ_tm')` at `z = k r`.
fn family_sph(theta: f64, phi: f64, z: C64, m_over_mu: C64, modes: &[[C64; 4]]) -> [[C64; 3]; 2] {
    let n_max = modes.len();
    let (pi, tau) = specfun::pi_tau_table(n_max, theta.cos());
    let st = theta.sin();
    let (sp, cp) = phi.sin_cos();
    let mut e = [ZERO; 3];
    let mut h = [ZERO; 3];
    for n in 1..=n_max {
        let [vte, dte, vtm, dtm] = modes[n - 1];
        let en = e_n(n);
        let nn = (n * (n + 1)) as f64;
        let (p, t) = (pi[n], tau[n]);
        e[0] += -I * en * cp * nn * st * p * vtm / (z * z);
        e[1] += en * cp * (p * vte - I * t * dtm) / z;
        e[2] += en * sp * (-t * vte + I * p * dtm) / z;
        h[0] += -m_over_mu * I * en * sp * nn * st * p * vte / (z * z);
        h[1] += m_over_mu * en * sp * (-I * t * dte + p * vtm) / z;
        h[2] += m_over_mu * en * cp * (-I * p * dte + t * vtm) / z;
    }
    [e, h]
}

impl MieSolution {
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn outer_radius(&self) -> f64 {
        self.coefficients.radius
    }

    /// Interface radii, innermost first (including source-support cuts).
    pub fn interfaces(&self) -> Vec<f64> {
        self.regions.iter().map(|r| r.r_out).collect()
    }

    pub fn has_incident(&self) -> bool {
        self.incident
    }

    fn region_of(&self, r: f64) -> Option<usize> {
        self.regions.iter().position(|reg| r <= reg.r_out)
    }

    /// Incident plane wave `(E_i, H_i)` at `x` (zero for current sources).
    pub fn incident_fields(&self, x: &Vector3<f64>) -> [Vector3<C64>; 2] {
        if !self.incident {
            return [Vector3::from_element(ZERO); 2];
        }
        let c = &self.coefficients;
        let pol = c.frame.to_global(&Vector3::new(c.amplitude[0], c.amplitude[1], ZERO));
        let khat = c.frame.e3;
        let phase = (I * self.omega * khat.dot(x)).exp();
        let e = pol * phase;
        let kc = khat.map(|v| C64::new(v, 0.0));
        [e, kc.cross(&e)]
    }

    /// Scattered `(E, H)` at an exterior point.
    pub fn scattered_fields(&self, x: &Vector3<f64>) -> Result<[Vector3<C64>; 2], MieError> {
        exterior_fields(&self.coefficients, self.omega, x)
    }

    /// Total field at any point: interior solution inside, scattered plus
    /// incident outside. Points on an interface use the inner side.
    pub fn fields(&self, x: &Vector3<f64>) -> Result<[Vector3<C64>; 2], MieError> {
        let r = x.norm();
        match self.region_of(r) {
            None => {
                let [es, hs] = self.scattered_fields(x)?;
                let [ei, hi] = self.incident_fields(x);
                Ok([es + ei, hs + hi])
            }
            Some(j) => self.region_fields(j, x),
        }
    }

    /// Interior field evaluated with the expansion of region `j` (which may
    /// be continued a little beyond the region for continuity checks).
    pub fn region_fields(&self, j: usize, x: &Vector3<f64>) -> Result<[Vector3<C64>; 2], MieError> {
        let state = self.radial_state(j, x.norm())?;
        Ok(self.eval_state(&state, x))
    }

    /// Radial data of region `j` at radius `r`, reusable for every direction.
    pub(crate) fn radial_state(&self, j: usize, r: f64) -> Result<RadialState, MieError> {
        let reg = &self.regions[j];
        let tabs = &self.tables[j];
        let n_max = self.coefficients.n_max();
        let r = r.max(1e-12 * reg.r_out);
        let t = RiccatiTable::new(n_max, reg.k * r)?;
        let radial = |amp: &Amp, n: usize| -> (C64, C64) {
            let mut v = ZERO;
            let mut d = ZERO;
            if amp.p != ZERO {
                let q = amp.p * (t.ln_psi[n] - tabs.outer.ln_psi[n]).exp();
                v += q;
                d += q * t.d_psi[n];
            }
            if amp.s != ZERO {
                let inner = tabs.inner.as_ref().expect("shell has an inner table");
                let q = amp.s * (t.ln_xi[n] - inner.ln_xi[n]).exp();
                v += q;
                d += q * t.d_xi[n];
            }
            (v, d)
        };
        let modes = (1..=n_max)
            .map(|n| {
                let (vte, dte) = radial(&self.te[j][n - 1], n);
                let (vtm, dtm) = radial(&self.tm[j][n - 1], n);
                [vte, dte, vtm, dtm]
            })
            .collect();
        Ok(RadialState {
            z: reg.k * r,
            m_over_mu: reg.m / reg.mu,
            particular: if reg.source {
                -I / (self.omega * reg.eps)
            } else {
                ZERO
            },
            modes,
        })
    }

    /// Field in direction `x` (only its direction is used) from a radial state.
    pub(crate) fn eval_state(&self, state: &RadialState, x: &Vector3<f64>) -> [Vector3<C64>; 2] {
        let c = &self.coefficients;
        combine_families(&c.frame, c.amplitude, x, |v| {
            let (theta, phi) = if v.norm() > 0.0 { angles(v) } else { (0.0, 0.0) };
            let [e, h] = family_sph(theta, phi, state.z, state.m_over_mu, &state.modes);
            let mut ec = sph_to_cart(theta, phi, e);
            ec[0] += state.particular;
            [ec, sph_to_cart(theta, phi, h)]
        })
    }

    pub(crate) fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// `(r_in, r_out, eps, mu, carries source)` of region `j`.
    pub(crate) fn region_info(&self, j: usize) -> (f64, f64, C64, C64, bool) {
        let r = &self.regions[j];
        (r.r_in, r.r_out, r.eps, r.mu, r.source)
    }
}

pub(crate) struct RadialState {
    z: C64,
    m_over_mu: C64,
    particular: C64,
    modes: Vec<[C64; 4]>,
}

/// Scattered `(E, H)` of outgoing coefficients at `|x| >= coeffs.radius`.
pub(crate) fn exterior_fields(
    coeffs: &MultipoleCoefficients,
    omega: f64,
    x: &Vector3<f64>,
) -> Result<[Vector3<C64>; 2], MieError> {
    let r = x.norm();
    if r < coeffs.radius * (1.0 - 1e-12) {
        return Err(MieError::InsideScatterer {
            radius: r,
            outer: coeffs.radius,
        });
    }
    let n_max = coeffs.n_max();
    if n_max == 0 {
        return Ok([Vector3::from_element(ZERO); 2]);
    }
    let z = C64::new(omega * r, 0.0);
    let t = RiccatiTable::new(n_max, z)?;
    let modes: Vec<[C64; 4]> = (1..=n_max)
        .map(|n| {
            let xi = t.xi(n);
            let (a, b) = (coeffs.a(n), coeffs.b(n));
            [-b * xi, -b * xi * t.d_xi[n], -a * xi, -a * xi * t.d_xi[n]]
        })
        .collect();
    Ok(combine_families(&coeffs.frame, coeffs.amplitude, x, |v| {
        let (theta, phi) = angles(v);
        let [e, h] = family_sph(theta, phi, z, ONE, &modes);
        [sph_to_cart(theta, phi, e), sph_to_cart(theta, phi, h)]
    }))
}
