//! Weighted counts of prime triples near `N`, by enumeration and by the
//! circle method.
//!
//! `Gamma = sum log p1 log p2 log p3` over ordered triples with
//! `|p1 log p1 + p2 log p2 + p3 log p3 - N| < eps`, and `Gamma_0` is the same
//! sum with the indicator replaced by `psi`. Fourier inversion gives
//! `Gamma_0 = int S(alpha)^3 e(-N alpha) Psi(alpha) dalpha`, which is split
//! into the major arc `|alpha| <= tau`, the minor arc and the tail.
//!
//! The integrand has its spectrum inside `[-F, F]` with
//! `F = max |v1 + v2 + v3 - N| + eps` over the prime window, so Gauss-Legendre
//! panels a few periods wide carry a rigorous a-priori error bound.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::PrimeTable;
use crate::dd::{reduced_phase, reduced_phase_error, DoubleDouble, F64_UNIT};
use crate::error::{Error, Result};
use crate::expsum::{phase_integral, phase_integral_floor, prime_sum, unit_phasor};
use crate::kernel::{psi_eval, psi_hat, tail_cutoff, tail_mass, KernelSpec};
use crate::quad::{band_limited_panel_error, gauss_legendre, CompensatedSum};
use crate::scaling::CircleParams;

/// Largest number of triples whose deviation is evaluated individually.
pub const GAMMA_WORK_BUDGET: f64 = 4e9;

/// Largest `nodes * primes` product accepted by the Fourier side.
pub const INTEGRAL_WORK_BUDGET: f64 = 2e11;

const ORDER: usize = 24;
/// Panel width in units of the shortest period `1/F`.
const PERIODS_PER_PANEL: f64 = 4.0;
const BLOCK: usize = 256;
const COUNT_BLOCK: usize = 64;

/// Result of the enumeration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaDirect {
    pub eps: f64,
    /// Indicator-weighted count.
    pub gamma: f64,
    /// `psi`-weighted count, when a kernel was supplied.
    pub gamma0: Option<f64>,
    /// Ordered triples with deviation below `eps`.
    pub witnesses: u64,
}

/// Number of orderings of a sorted triple with indices `i <= j <= k`.
fn multiplicity(i: usize, j: usize, k: usize) -> f64 {
    match (i == j, j == k) {
        (true, true) => 1.0,
        (false, false) => 6.0,
        _ => 3.0,
    }
}

/// Enumerates sorted triples `i <= j <= k` and accumulates `Gamma` (and
/// `Gamma_0` when `spec` is given) with ordering multiplicities.
pub fn gamma_direct(
    n: DoubleDouble,
    eps: f64,
    table: &PrimeTable,
    spec: Option<&KernelSpec>,
) -> Result<GammaDirect> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    if let Some(s) = spec {
        if s.eps > eps {
            return Err(Error::domain("kernel support exceeds the counting window"));
        }
    }
    let v = table.phases();
    let w = table.log_p();
    let len = v.len();
    let lower = n - DoubleDouble::from_f64(eps);
    let upper = n + DoubleDouble::from_f64(eps);

    // window of k for fixed (i, j): lo..hi with v_k in (lower - s, upper - s)
    let window = |i: usize, j: usize| {
        let s = v[i] + v[j];
        let lo = table.lower_bound(lower - s, true).max(j);
        let hi = table.lower_bound(upper - s, false);
        (lo, hi.max(lo))
    };
    // psi is evaluated per triple, so bound that work first; blocks of first
    // indices let a hopeless case fail after a small fraction of the count
    if spec.is_some() {
        let mut count = 0.0;
        for start in (0..len).step_by(COUNT_BLOCK) {
            count += (start..(start + COUNT_BLOCK).min(len))
                .into_par_iter()
                .map(|i| {
                    let mut c = 0.0;
                    for j in i..len {
                        if (v[i] + v[j] + v[j]).total_cmp(&upper).is_ge() {
                            break;
                        }
                        let (lo, hi) = window(i, j);
                        c += (hi - lo) as f64;
                    }
                    c
                })
                .sum::<f64>();
            if count > GAMMA_WORK_BUDGET {
                return Err(Error::capacity(
                    format!("more than {count:.3e} triples fall inside the window"),
                    "lower eps or X",
                ));
            }
        }
    }

    let rows: Vec<(f64, f64, u64)> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut g = 0.0;
            let mut g0 = 0.0;
            let mut witnesses = 0u64;
            for j in i..len {
                if (v[i] + v[j] + v[j]).total_cmp(&upper).is_ge() {
                    break;
                }
                let (lo, hi) = window(i, j);
                if lo == hi {
                    continue;
                }
                let wij = w[i] * w[j];
                // k == j separately: it has a smaller multiplicity
                let first = if lo == j {
                    g += multiplicity(i, j, j) * wij * w[j];
                    witnesses += multiplicity(i, j, j) as u64;
                    j + 1
                } else {
                    lo
                };
                let m = multiplicity(i, j, j + 1);
                g += m * wij * table.weight_between(first, hi);
                witnesses += m as u64 * (hi - first) as u64;
                if let Some(s) = spec {
                    let base = v[i] + v[j];
                    for k in lo..hi {
                        let dev = (base + v[k] - n).to_f64();
                        let p = psi_eval(s, dev);
                        if p != 0.0 {
                            g0 += multiplicity(i, j, k) * wij * w[k] * p;
                        }
                    }
                }
            }
            (g, g0, witnesses)
        })
        .collect();
    let mut g = CompensatedSum::new();
    let mut g0 = CompensatedSum::new();
    let mut witnesses = 0;
    for (a, b, c) in rows {
        g.add(Complex64::new(a, 0.0));
        g0.add(Complex64::new(b, 0.0));
        witnesses += c;
    }
    Ok(GammaDirect {
        eps,
        gamma: g.value().re,
        gamma0: spec.map(|_| g0.value().re),
        witnesses,
    })
}

/// Integrates a band-limited complex function over consecutive segments.
/// Returns per-segment sums, the total rounding allowance, the a-priori
/// quadrature bound and the node count.
fn integrate_segments(
    breaks: &[f64],
    freq: f64,
    mass: f64,
    f: &(dyn Fn(f64) -> Result<(Complex64, f64)> + Sync),
) -> Result<(Vec<Complex64>, f64, f64, usize)> {
    let (nodes, weights) = gauss_legendre(ORDER);
    let mut panels = Vec::new();
    let mut quad_err = 0.0;
    for (seg, w) in breaks.windows(2).enumerate() {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let count = ((len * freq / PERIODS_PER_PANEL).ceil() as usize).max(1);
        let width = len / count as f64;
        quad_err += count as f64 * band_limited_panel_error(ORDER, width, freq, mass);
        for i in 0..count {
            panels.push((seg, w[0] + (i as f64 + 0.5) * width, width));
        }
    }
    let blocks = panels.len().div_ceil(BLOCK);
    let parts: Vec<Result<Vec<(usize, Complex64, f64)>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut out = Vec::new();
            for &(seg, c, width) in &panels[b * BLOCK..((b + 1) * BLOCK).min(panels.len())] {
                let mut v = Complex64::new(0.0, 0.0);
                let mut e = 0.0;
                for (t, wt) in nodes.iter().zip(&weights) {
                    let (fv, fe) = f(c + 0.5 * width * t)?;
                    v += fv * wt;
                    e += fe * wt;
                }
                out.push((seg, v * (0.5 * width), 0.5 * width * e));
            }
            Ok(out)
        })
        .collect();
    let nseg = breaks.len().saturating_sub(1);
    let mut sums = vec![CompensatedSum::new(); nseg];
    let mut round_err = 0.0;
    for part in parts {
        for (seg, v, e) in part? {
            sums[seg].add(v);
            round_err += e + 4.0 * ORDER as f64 * F64_UNIT * v.norm();
        }
    }
    let values = sums.iter().map(|s| s.value()).collect();
    round_err += sums.iter().map(|s| s.error_bound()).sum::<f64>();
    Ok((values, round_err, quad_err, panels.len() * ORDER))
}

/// `Gamma_0` from Fourier inversion, split by arc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcIntegrals {
    /// `|alpha| <= tau`.
    pub major: Complex64,
    /// `tau < |alpha| <= minor_upper`.
    pub minor: Complex64,
    /// `minor_upper < |alpha| <= cutoff`.
    pub tail: Complex64,
    pub total: Complex64,
    pub tau: f64,
    pub minor_upper: f64,
    /// Truncation point `B` of the tail.
    pub cutoff: f64,
    /// Quadrature plus rounding error bound.
    pub quad_err: f64,
    /// Bound on the integral over `|alpha| > B`.
    pub trunc_err: f64,
    pub nodes: usize,
}

impl ArcIntegrals {
    pub fn error_bound(&self) -> f64 {
        self.quad_err + self.trunc_err
    }

    /// `Re Gamma_1 log X / (eps X^2)`, `|Gamma_2| / (X^{49/25} log^6 X)` and
    /// `|Gamma_3|`.
    pub fn ratios(&self, params: &CircleParams) -> [f64; 3] {
        let (x, lx) = (params.x, params.x.ln());
        [
            self.major.re * lx / (params.eps * x * x),
            self.minor.norm() / (x.powf(49.0 / 25.0) * lx.powi(6)),
            self.tail.norm(),
        ]
    }
}

fn symmetric_breaks(points: &[f64], cutoff: f64) -> Vec<f64> {
    let mut b = vec![-cutoff, cutoff];
    for &p in points {
        if p < cutoff {
            b.push(p);
            b.push(-p);
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

fn arc_of(mid: f64, tau: f64, upper: f64) -> usize {
    let m = mid.abs();
    if m <= tau {
        0
    } else if m <= upper {
        1
    } else {
        2
    }
}

/// Spectral radius of `exp(2 pi i alpha (s - N))` for sums `s` in `[lo, hi]`.
fn band(lo: f64, hi: f64, n: f64, eps: f64) -> f64 {
    (hi - n).abs().max((lo - n).abs()) + eps
}

/// `int S(alpha)^3 e(-N alpha) Psi(alpha)` over `|alpha| <= B`, where `B`
/// is chosen so the neglected tail is below `tol / 2`.
pub fn circle_integral(
    n: DoubleDouble,
    params: &CircleParams,
    table: &PrimeTable,
    tol: f64,
) -> Result<ArcIntegrals> {
    circle_integral_to(n, params, table, tol, None)
}

/// As [`circle_integral`], optionally with a caller-chosen cutoff `B`.
pub fn circle_integral_to(
    n: DoubleDouble,
    params: &CircleParams,
    table: &PrimeTable,
    tol: f64,
    cutoff: Option<f64>,
) -> Result<ArcIntegrals> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let spec = KernelSpec::new(params.eps, params.k)?;
    let s0 = table.total_weight();
    let bound3 = s0 * s0 * s0;
    let cutoff = match cutoff {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(Error::domain(format!("cutoff must be positive, got {b}"))),
        None => tail_cutoff(&spec, bound3, 0.5 * tol)?,
    };
    let trunc_err = tail_mass(&spec, bound3, cutoff);
    let (tau, upper) = (params.tau, params.minor_arc_upper());
    let breaks = symmetric_breaks(&[tau, upper], cutoff);
    let v = table.phases();
    let freq = match (v.first(), v.last()) {
        (Some(a), Some(b)) => band(3.0 * a.to_f64(), 3.0 * b.to_f64(), n.to_f64(), params.eps),
        _ => params.eps,
    };
    let nodes = 2.0 * cutoff * freq / PERIODS_PER_PANEL * ORDER as f64;
    if nodes * table.len() as f64 > INTEGRAL_WORK_BUDGET {
        return Err(Error::capacity(
            format!("{nodes:.3e} quadrature nodes over {} primes", table.len()),
            "raise the tolerance, lower X, or pass a larger eps",
        ));
    }
    let mass = bound3 * 7.0 * params.eps / 4.0;
    let integrand = |alpha: f64| -> Result<(Complex64, f64)> {
        let s = prime_sum(alpha, table);
        let m = s.value.norm();
        let psi = psi_hat(&spec, alpha);
        let rot = unit_phasor(reduced_phase(-alpha, n));
        let val = s.value * s.value * s.value * rot * psi;
        let cube_err = 3.0 * (m + s.abs_err).powi(2) * s.abs_err;
        let other = val.norm()
            * (2.0 * PI * reduced_phase_error(alpha, n) + (spec.k as f64 + 16.0) * F64_UNIT);
        Ok((val, cube_err * psi.abs() + other))
    };
    let (parts, round_err, quad, count) = integrate_segments(&breaks, freq, mass, &integrand)?;
    let mut arcs = [CompensatedSum::new(); 3];
    for (w, p) in breaks.windows(2).zip(&parts) {
        arcs[arc_of(0.5 * (w[0] + w[1]), tau, upper)].add(*p);
    }
    let mut total = CompensatedSum::new();
    for p in &parts {
        total.add(*p);
    }
    Ok(ArcIntegrals {
        major: arcs[0].value(),
        minor: arcs[1].value(),
        tail: arcs[2].value(),
        total: total.value(),
        tau,
        minor_upper: upper,
        cutoff,
        quad_err: quad + round_err + total.error_bound(),
        trunc_err,
        nodes: count,
    })
}

/// `Gamma_0` by Fourier inversion, with its error bound.
pub fn gamma0_integral(
    n: DoubleDouble,
    params: &CircleParams,
    table: &PrimeTable,
    tol: f64,
) -> Result<(Complex64, f64)> {
    let a = circle_integral(n, params, table, tol)?;
    Ok((a.total, a.error_bound()))
}

/// The three arc contributions `(Gamma_1, Gamma_2, Gamma_3)`.
pub fn gamma_split(
    n: DoubleDouble,
    params: &CircleParams,
    table: &PrimeTable,
    tol: f64,
) -> Result<(Complex64, Complex64, Complex64)> {
    let a = circle_integral(n, params, table, tol)?;
    Ok((a.major, a.minor, a.tail))
}

/// Continuous model of the circle integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaIntegrals {
    /// `int I^3 e(-N alpha) Psi` over the whole line (truncated at `cutoff`).
    pub theta: Complex64,
    /// Same over `|alpha| <= tau`.
    pub theta_tau: Complex64,
    pub cutoff: f64,
    pub quad_err: f64,
    pub trunc_err: f64,
    /// Bound `7 eps / (4 pi^3 h^3 tau^2)` on `|Theta - Theta_tau|`,
    /// `h = 1 + log(X/2)`.
    pub outside_bound: f64,
    /// `Re Theta log X / (eps X^2)`.
    pub ratio: f64,
}

/// Closed-form bounds on `2 int_B^inf |I|^3 |Psi|` using
/// `|I(alpha)| <= 1 / (pi |alpha| h)`; each is valid, the minimum is used.
fn theta_tail(spec: &KernelSpec, h: f64, b: f64) -> f64 {
    let h3 = h * h * h;
    let k = spec.k as f64;
    let a = spec.decay_scale();
    let t1 = 7.0 * spec.eps / 4.0 / (PI.powi(3) * h3 * b * b);
    let t2 = 2.0 / (3.0 * PI.powi(4) * h3 * b.powi(3));
    let t3 = 2.0 * (a / b).powf(k) / (PI.powi(4) * h3 * (k + 3.0) * b.powi(3));
    t1.min(t2).min(t3)
}

/// `Theta` and `Theta_tau`.
pub fn theta_integrals(n: DoubleDouble, params: &CircleParams, tol: f64) -> Result<ThetaIntegrals> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let x = params.x;
    let half = 0.5 * x;
    let h = 1.0 + half.ln();
    if !(h > 0.0) {
        return Err(Error::domain("Theta needs 1 + log(X/2) > 0"));
    }
    let spec = KernelSpec::new(params.eps, params.k)?;
    let t = 0.5 * tol;
    let h3 = h * h * h;
    let k = spec.k as f64;
    let a = spec.decay_scale();
    let b1 = (7.0 * spec.eps / 4.0 / (PI.powi(3) * h3 * t)).sqrt();
    let b2 = (2.0 / (3.0 * PI.powi(4) * h3 * t)).cbrt();
    let b3 = (2.0 * a.powf(k) / (PI.powi(4) * h3 * (k + 3.0) * t)).powf(1.0 / (k + 3.0));
    let cutoff = b1.min(b2).min(b3);
    let trunc_err = theta_tail(&spec, h, cutoff);
    let reach = cutoff.max(params.tau);
    let breaks = symmetric_breaks(&[params.tau], reach);
    let freq = band(3.0 * half * half.ln(), 3.0 * x * x.ln(), n.to_f64(), params.eps);
    let mass = half.powi(3) * 7.0 * params.eps / 4.0;
    let integrand = |alpha: f64| -> Result<(Complex64, f64)> {
        let tol_i = (1e-10 * half).max(4.0 * phase_integral_floor(alpha, x));
        let i = phase_integral(alpha, x, tol_i)?;
        let m = i.value.norm();
        let psi = psi_hat(&spec, alpha);
        let rot = unit_phasor(reduced_phase(-alpha, n));
        let val = i.value * i.value * i.value * rot * psi;
        let cube_err = 3.0 * (m + i.abs_err).powi(2) * i.abs_err;
        let other = val.norm()
            * (2.0 * PI * reduced_phase_error(alpha, n) + (spec.k as f64 + 16.0) * F64_UNIT);
        Ok((val, cube_err * psi.abs() + other))
    };
    let (parts, round_err, quad, _) = integrate_segments(&breaks, freq, mass, &integrand)?;
    let mut inner = CompensatedSum::new();
    let mut total = CompensatedSum::new();
    for (w, p) in breaks.windows(2).zip(&parts) {
        if (0.5 * (w[0] + w[1])).abs() <= params.tau {
            inner.add(*p);
        }
        total.add(*p);
    }
    Ok(ThetaIntegrals {
        theta: total.value(),
        theta_tau: inner.value(),
        cutoff,
        quad_err: quad + round_err + total.error_bound(),
        trunc_err,
        outside_bound: 7.0 * params.eps / (4.0 * PI.powi(3) * h3 * params.tau * params.tau),
        ratio: total.value().re * x.ln() / (params.eps * x * x),
    })
}

/// Everything measured for one `(N, X, eps)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaReport {
    pub params: CircleParams,
    pub direct: GammaDirect,
    pub arcs: ArcIntegrals,
    pub theta: Option<ThetaIntegrals>,
}

impl GammaReport {
    /// `|Gamma_0(direct) - Gamma_0(integral)|`.
    pub fn inversion_gap(&self) -> f64 {
        (self.arcs.total - Complex64::new(self.direct.gamma0.unwrap_or(f64::NAN), 0.0)).norm()
    }

    /// `(Gamma_1 - Theta_tau) / (eps X^2 exp(-(log X)^{1/6}))`.
    pub fn normalized_major_gap(&self) -> Option<f64> {
        let t = self.theta?;
        let x = self.params.x;
        let scale = self.params.eps * x * x * (-x.ln().powf(1.0 / 6.0)).exp();
        Some((self.arcs.major - t.theta_tau).norm() / scale)
    }
}

/// Computes `Gamma`, `Gamma_0` both ways and, optionally, the `Theta` model.
pub fn gamma_report(
    n: DoubleDouble,
    params: &CircleParams,
    table: &PrimeTable,
    tol: f64,
    with_theta: bool,
) -> Result<GammaReport> {
    let spec = KernelSpec::new(params.eps, params.k)?;
    let direct = gamma_direct(n, params.eps, table, Some(&spec))?;
    let arcs = circle_integral(n, params, table, tol)?;
    let theta = if with_theta {
        Some(theta_integrals(n, params, tol)?)
    } else {
        None
    };
    Ok(GammaReport {
        params: *params,
        direct,
        arcs,
        theta,
    })
}
