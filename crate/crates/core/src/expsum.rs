//! Exponential sums over primes and their continuous model.
//!
//! `S(alpha) = sum_{X/2 < p <= X} log p * e(alpha p log p)` with
//! `e(x) = exp(2 pi i x)`, and `I(alpha) = int_{X/2}^{X} e(alpha y log y) dy`.
//! Also here: the Vaughan split of the von Mangoldt sum, the minor-arc scan,
//! the mean-square integrals and two elementary inequalities (van der Corput
//! differencing and the first-derivative test).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::{ArithTables, PrimeTable};
use crate::dd::{reduced_phase, reduced_phase_error, DoubleDouble, DD_EPS, F64_UNIT};
use crate::error::{Error, Result};
use crate::quad::{band_limited_panel_error, gauss_legendre, CompensatedSum};
use crate::scaling::derive_params;

/// Above this many cosine evaluations the unit-interval mean square of `S`
/// is computed from the closed-form double sum instead of by quadrature.
pub const L2_QUADRATURE_BUDGET: f64 = 2e8;

/// Largest panel count tried by [`phase_integral`].
const MAX_PANELS: usize = 1 << 26;

const BLOCK: usize = 4096;

#[inline]
pub(crate) fn unit_phasor(f: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * f).sin_cos();
    Complex64::new(c, s)
}

/// `e(x)` for an f64 argument.
pub fn e(x: f64) -> Complex64 {
    unit_phasor(x - x.round())
}

/// One evaluation of `S(alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpSumSample {
    pub alpha: f64,
    pub value: Complex64,
    pub abs_err: f64,
    pub n_terms: usize,
}

/// `S(alpha)` with a rigorous bound on the floating-point error.
pub fn prime_sum(alpha: f64, table: &PrimeTable) -> ExpSumSample {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut phase_err = 0.0f64;
    let phases = table.phases();
    let logs = table.log_p();
    for (v, &w) in phases.iter().zip(logs) {
        let f = reduced_phase(alpha, *v);
        acc += unit_phasor(f) * w;
        phase_err = phase_err.max(reduced_phase_error(alpha, *v));
    }
    let total = table.total_weight();
    let n = table.len() as f64;
    // phase error, sin/cos and log rounding, then accumulation
    let abs_err = total * (2.0 * PI * phase_err + 8.0 * F64_UNIT) + (n + 2.0) * F64_UNIT * total;
    ExpSumSample {
        alpha,
        value: acc,
        abs_err,
        n_terms: table.len(),
    }
}

/// `S(alpha)` at many points, in parallel, in input order.
pub fn prime_sum_scan(alphas: &[f64], table: &PrimeTable) -> Vec<ExpSumSample> {
    alphas.par_iter().map(|&a| prime_sum(a, table)).collect()
}

/// Value of the continuous integral together with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscIntegral {
    pub value: Complex64,
    pub abs_err: f64,
    pub panels: usize,
}

fn phase_integral_panels(alpha: f64, lo: f64, hi: f64, panels: usize) -> (Complex64, f64) {
    let (nodes, weights) = gauss_legendre(6);
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let blocks = panels.div_ceil(BLOCK);
    let run = |b: usize| {
        let mut s = CompensatedSum::new();
        for i in b * BLOCK..((b + 1) * BLOCK).min(panels) {
            let yc = lo + (i as f64 + 0.5) * width;
            let ycd = DoubleDouble::from_f64(yc);
            let base = reduced_phase(alpha, ycd * ycd.ln());
            let lyc = yc.ln();
            let mut panel = Complex64::new(0.0, 0.0);
            for (t, w) in nodes.iter().zip(&weights) {
                let d = half * t;
                let y = yc + d;
                // y log y - yc log yc = d log yc + y log(1 + d/yc)
                let off = alpha * (d * lyc + y * (d / yc).ln_1p());
                panel += unit_phasor(base + off) * w;
            }
            s.add(panel * half);
        }
        (s.value(), s.error_bound())
    };
    let parts: Vec<(Complex64, f64)> = if blocks > 1 {
        (0..blocks).into_par_iter().map(run).collect()
    } else {
        (0..blocks).map(run).collect()
    };
    let mut total = CompensatedSum::new();
    let mut err = 0.0;
    for (v, e) in parts {
        total.add(v);
        err += e;
    }
    (total.value(), err + total.error_bound())
}

/// Most terms tried by [`phase_integral_by_parts`].
const MAX_PARTS_TERMS: usize = 60;

/// `I(alpha)` for `alpha > 0` by repeated integration by parts in
/// `u = y log y`. There `dy/du = g = 1/(1 + log y)` and
/// `d^m g/du^m = y^-m P_m(1/(1 + log y))` with `P_m` having coefficients of
/// sign `(-1)^m`, so the remainder after the term of order `m` is at most
/// `|2 pi alpha|^-(m+1) |g^(m)(X) - g^(m)(X/2)|`, the size of that term.
/// `None` when the expansion does not reach `tol` (small `alpha`).
fn phase_integral_by_parts(alpha: f64, x: f64, tol: f64) -> Option<OscIntegral> {
    debug_assert!(alpha > 0.0);
    let lo = 0.5 * x;
    if lo * std::f64::consts::E <= 1.0 {
        return None;
    }
    let two_pi_a = 2.0 * PI * alpha;
    let ends = [lo, x].map(|y| {
        let yd = DoubleDouble::from_f64(y);
        let u = yd * yd.ln();
        let phase_err = 2.0 * PI * (reduced_phase_error(alpha, u) + 8.0 * DD_EPS * (alpha * u.hi).abs());
        let rot = unit_phasor(reduced_phase(alpha, u));
        (1.0 / (two_pi_a * y), 1.0 / (1.0 + y.ln()), rot, phase_err)
    });
    // coefficients of P_m in powers of w = 1/(1 + log y)
    let mut poly = vec![0.0, 1.0];
    let mut pow = [1.0 / two_pi_a; 2];
    let mut total = Complex64::new(0.0, 0.0);
    let mut round = 0.0;
    let mut best = f64::INFINITY;
    // (-1)^m (-i)^(m+1) = -i, 1, i, -1, ...
    let units = [
        Complex64::new(0.0, -1.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
    ];
    for m in 0..MAX_PARTS_TERMS {
        let amp = [0, 1].map(|e| {
            let w = ends[e].1;
            pow[e] * poly.iter().rev().fold(0.0, |acc, c| acc * w + c)
        });
        if !amp.iter().all(|a| a.is_finite()) {
            return None;
        }
        let term = units[m % 4] * (ends[1].2 * amp[1] - ends[0].2 * amp[0]);
        total += term;
        for e in 0..2 {
            round += amp[e].abs() * (ends[e].3 + (8.0 * m as f64 + 16.0) * F64_UNIT);
        }
        let remainder = (amp[1] - amp[0]).abs();
        let err = remainder + round + 4.0 * F64_UNIT * total.norm();
        if err <= tol {
            return Some(OscIntegral {
                value: total,
                abs_err: err,
                panels: 0,
            });
        }
        // past the smallest term the expansion diverges
        if remainder > 2.0 * best {
            return None;
        }
        best = best.min(remainder);
        let mut next = vec![0.0; poly.len() + 2];
        for (j, c) in poly.iter().enumerate() {
            next[j + 1] -= m as f64 * c;
            next[j + 2] -= j as f64 * c;
        }
        poly = next;
        pow[0] *= ends[0].0;
        pow[1] *= ends[1].0;
    }
    None
}

/// Rounding allowance of [`phase_integral`]: node positions are only known
/// to `2^-53 X`, which moves the phase by `|alpha| X (1 + log X)` of that.
pub fn phase_integral_floor(alpha: f64, x: f64) -> f64 {
    let node_err = 2.0 * PI * 8.0 * F64_UNIT * (1.0 + alpha.abs() * x.max(1.0) * (1.0 + x.max(1.0).ln()));
    0.5 * x * node_err
}

/// `I(alpha) = int_{X/2}^{X} e(alpha y log y) dy` to absolute accuracy `tol`.
///
/// Large `|alpha|` uses the integration-by-parts expansion with its
/// remainder bound. Otherwise Gauss-Legendre panels are refined until two
/// successive panel counts agree; the reported error is their difference plus
/// a rounding allowance.
pub fn phase_integral(alpha: f64, x: f64, tol: f64) -> Result<OscIntegral> {
    if !(x > 0.0) || !x.is_finite() || !alpha.is_finite() {
        return Err(Error::domain(format!("I(alpha) needs finite alpha and X > 0 (X = {x})")));
    }
    let lo = 0.5 * x;
    if alpha == 0.0 {
        return Ok(OscIntegral {
            value: Complex64::new(lo, 0.0),
            abs_err: 0.0,
            panels: 0,
        });
    }
    if let Some(r) = phase_integral_by_parts(alpha.abs(), x, tol) {
        // I(-alpha) is the conjugate of I(alpha)
        let value = if alpha < 0.0 { r.value.conj() } else { r.value };
        return Ok(OscIntegral { value, ..r });
    }
    let cycles = alpha.abs() * (x * x.ln() - lo * lo.ln());
    let mut panels = ((8.0 * cycles).ceil() as usize).max(4);
    let floor = phase_integral_floor(alpha, x);
    if floor > tol {
        return Err(Error::Accuracy {
            target: tol,
            achieved: floor,
        });
    }
    let mut coarse = phase_integral_panels(alpha, lo, x, panels);
    let mut last_err = f64::INFINITY;
    while panels <= MAX_PANELS {
        let fine = phase_integral_panels(alpha, lo, x, 2 * panels);
        let err = (fine.0 - coarse.0).norm() + fine.1 + floor;
        if err <= tol {
            return Ok(OscIntegral {
                value: fine.0,
                abs_err: err,
                panels: 2 * panels,
            });
        }
        // well past resolution the difference is pure rounding noise
        let resolved = panels as f64 > 64.0 * cycles + 64.0;
        if 2 * panels > MAX_PANELS || (resolved && err >= 0.5 * last_err) {
            return Err(Error::Accuracy {
                target: tol,
                achieved: err,
            });
        }
        last_err = err;
        panels *= 2;
        coarse = fine;
    }
    unreachable!()
}

/// Result of the major-arc comparison between `S` and `I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lemma6Deviation {
    pub max_dev: f64,
    pub argmax_alpha: f64,
    /// `max_dev * exp((log X)^{1/5}) / X`.
    pub normalized: f64,
    /// `|S(0) - I(0)|` when the grid contains `alpha = 0`.
    pub dev_at_zero: Option<f64>,
    pub points: usize,
}

/// `max |S(alpha) - I(alpha)|` over an `n_grid`-point uniform grid on
/// `[-tau, tau]`.
pub fn lemma6_deviation(x: f64, n_grid: usize, table: &PrimeTable) -> Result<Lemma6Deviation> {
    if n_grid < 2 {
        return Err(Error::domain("grid needs at least two points"));
    }
    let params = derive_params(x)?;
    let tau = params.tau;
    let alphas: Vec<f64> = (0..n_grid)
        .map(|i| tau * ((2 * i) as f64 / (n_grid - 1) as f64 - 1.0))
        .collect();
    let devs: Vec<Result<f64>> = alphas
        .par_iter()
        .map(|&a| {
            let s = prime_sum(a, table).value;
            let tol = (1e-9 * x).max(4.0 * phase_integral_floor(a, x));
            let i = phase_integral(a, x, tol)?.value;
            Ok((s - i).norm())
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut at_zero = None;
    for (a, d) in alphas.iter().zip(devs) {
        let d = d?;
        if *a == 0.0 {
            at_zero = Some(d);
        }
        if d > best.0 {
            best = (d, *a);
        }
    }
    Ok(Lemma6Deviation {
        max_dev: best.0,
        argmax_alpha: best.1,
        normalized: best.0 * x.ln().powf(0.2).exp() / x,
        dev_at_zero: at_zero,
        points: n_grid,
    })
}

/// Integer range of `n` with `X/2 < n <= X`.
fn window(x: f64) -> (usize, usize) {
    ((0.5 * x).floor() as usize + 1, x.floor() as usize)
}

/// Largest integer `u` with `u^3 <= X^e3` for `e3 = 1` or `2`.
fn cube_root_floor(x: f64, squared: bool) -> usize {
    let target = if squared { x * x } else { x };
    let mut u = target.cbrt().floor() as u128;
    while ((u + 1) * (u + 1) * (u + 1)) as f64 <= target {
        u += 1;
    }
    while u > 0 && ((u * u * u) as f64) > target {
        u -= 1;
    }
    u as usize
}

/// Phase of `n log n` (or `n log(n+1)` when `shifted`) in double-double.
fn integer_phase(n: usize, shifted: bool) -> DoubleDouble {
    let nd = DoubleDouble::from_u64(n as u64);
    let arg = if shifted {
        DoubleDouble::from_u64(n as u64 + 1)
    } else {
        nd
    };
    nd * arg.ln()
}

/// `sum_{X/2 < n <= X} Lambda(n) e(alpha n log n)`, or with `log(n+1)` in
/// the phase when `shifted`.
pub fn mangoldt_sum(alpha: f64, x: f64, tables: &ArithTables, shifted: bool) -> Result<Complex64> {
    let (lo, hi) = window(x);
    if hi > tables.upto() {
        return Err(Error::domain(format!("tables cover n <= {}, need {hi}", tables.upto())));
    }
    let mut s = CompensatedSum::new();
    for n in lo..=hi {
        let l = tables.mangoldt(n);
        if l != 0.0 {
            s.add(unit_phasor(reduced_phase(alpha, integer_phase(n, shifted))) * l);
        }
    }
    Ok(s.value())
}

/// The four pieces of Vaughan's identity applied to the shifted sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VaughanParts {
    pub u1: Complex64,
    pub u2: Complex64,
    pub u3: Complex64,
    pub u4: Complex64,
    /// `sum_{X/2 < n <= X} Lambda(n) e(alpha n log(n+1))` summed directly.
    pub s1_direct: Complex64,
    /// `X^{1/3}`.
    pub cutoff_u: f64,
    /// `X^{2/3}`.
    pub cutoff_v: f64,
}

impl VaughanParts {
    pub fn residual(&self) -> f64 {
        (self.u1 - self.u2 - self.u3 - self.u4 - self.s1_direct).norm()
    }
}

/// `c(d) = sum_{rs = d, r <= U, s <= U} mu(r) Lambda(s)` for `d <= U^2`
/// and `a(d) = sum_{m | d, m <= U} mu(m)` for `d <= hi`.
pub fn vaughan_coefficients(u: usize, hi: usize, tables: &ArithTables) -> (Vec<f64>, Vec<i64>) {
    let mut c = vec![0.0; u * u + 1];
    for r in 1..=u {
        let m = tables.mobius(r) as f64;
        if m == 0.0 {
            continue;
        }
        for s in 1..=u {
            c[r * s] += m * tables.mangoldt(s);
        }
    }
    let mut a = vec![0i64; hi + 1];
    for m in 1..=u.min(hi) {
        let mu = tables.mobius(m) as i64;
        if mu == 0 {
            continue;
        }
        let mut d = m;
        while d <= hi {
            a[d] += mu;
            d += m;
        }
    }
    (c, a)
}

/// Splits `sum Lambda(n) e(alpha n log(n+1))` over `(X/2, X]` with
/// `U = V = floor(X^{1/3})` (so `UV <= floor(X^{2/3})`); the pieces are
/// returned together with the direct sum they must add up to.
pub fn vaughan_decompose(alpha: f64, x: f64, tables: &ArithTables) -> Result<VaughanParts> {
    if !(x >= 8.0) {
        return Err(Error::domain(format!("Vaughan split needs X >= 8, got {x}")));
    }
    let (lo, hi) = window(x);
    if hi > tables.upto() {
        return Err(Error::domain(format!("tables cover n <= {}, need {hi}", tables.upto())));
    }
    let u = cube_root_floor(x, false);
    let v = cube_root_floor(x, true);
    let en: Vec<Complex64> = (lo..=hi)
        .into_par_iter()
        .map(|n| unit_phasor(reduced_phase(alpha, integer_phase(n, true))))
        .collect();
    let e_at = |n: usize| en[n - lo];
    // inner sum over l with d*l in the window, weighted by g(l)
    let inner = |d: usize, g: &dyn Fn(usize) -> f64| {
        let mut s = CompensatedSum::new();
        let first = lo.div_ceil(d);
        for l in first..=hi / d {
            let w = g(l);
            if w != 0.0 {
                s.add(e_at(d * l) * w);
            }
        }
        s.value()
    };
    let (c, a) = vaughan_coefficients(u, hi, tables);

    let mut u1 = CompensatedSum::new();
    let mut u2 = CompensatedSum::new();
    for d in 1..=u {
        let mu = tables.mobius(d) as f64;
        if mu != 0.0 {
            u1.add(inner(d, &|l| (l as f64).ln()) * mu);
        }
        if c[d] != 0.0 {
            u2.add(inner(d, &|_| 1.0) * c[d]);
        }
    }
    let mut u3 = CompensatedSum::new();
    for d in (u + 1)..=v.min(u * u) {
        if c[d] != 0.0 {
            u3.add(inner(d, &|_| 1.0) * c[d]);
        }
    }
    let mut u4 = CompensatedSum::new();
    for d in (u + 1)..=hi {
        if a[d] != 0 {
            let val = inner(d, &|l| if l > u { tables.mangoldt(l) } else { 0.0 });
            u4.add(val * a[d] as f64);
        }
    }
    let mut direct = CompensatedSum::new();
    for n in lo..=hi {
        let l = tables.mangoldt(n);
        if l != 0.0 {
            direct.add(e_at(n) * l);
        }
    }
    let parts = VaughanParts {
        u1: u1.value(),
        u2: u2.value(),
        u3: u3.value(),
        u4: u4.value(),
        s1_direct: direct.value(),
        cutoff_u: x.cbrt(),
        cutoff_v: x.cbrt() * x.cbrt(),
    };
    let r = parts.residual();
    if r > 1e-8 * (1.0 + parts.s1_direct.norm()) {
        return Err(Error::Consistency(format!(
            "Vaughan pieces miss the direct sum by {r:e} at alpha = {alpha}, X = {x}"
        )));
    }
    Ok(parts)
}

/// Supremum of `|S|` over a log-spaced grid on the minor arc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinorArcScan {
    pub sup_s: f64,
    pub argmax_alpha: f64,
    /// `sup_s / (X^{24/25} log^3 X)`.
    pub normalized: f64,
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

/// Scans `|S(alpha)|` for `tau <= alpha <= max(K, 1)` on `n_grid`
/// logarithmically spaced points.
pub fn minor_arc_scan(x: f64, n_grid: usize, table: &PrimeTable) -> Result<MinorArcScan> {
    if n_grid < 2 {
        return Err(Error::domain("grid needs at least two points"));
    }
    let p = derive_params(x)?;
    let (lower, upper) = (p.tau, p.minor_arc_upper());
    let ratio = (upper / lower).ln();
    let alphas: Vec<f64> = (0..n_grid)
        .map(|i| lower * (ratio * i as f64 / (n_grid - 1) as f64).exp())
        .collect();
    let samples = prime_sum_scan(&alphas, table);
    let mut best = (f64::NEG_INFINITY, lower);
    for s in &samples {
        let m = s.value.norm();
        if m > best.0 {
            best = (m, s.alpha);
        }
    }
    Ok(MinorArcScan {
        sup_s: best.0,
        argmax_alpha: best.1,
        normalized: best.0 / (x.powf(0.96) * x.ln().powi(3)),
        lower,
        upper,
        points: n_grid,
    })
}

/// Mean-square integrals of `S` and `I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L2Integrals {
    /// `int_{|alpha| <= tau} |S|^2`.
    pub a: f64,
    /// `int_{|alpha| <= tau} |I|^2`.
    pub b: f64,
    /// `int_n^{n+1} |S|^2`.
    pub c: f64,
    pub a_err: f64,
    pub b_err: f64,
    pub c_err: f64,
    /// `a / (X log^2 X)`, `b / X`, `c / (X log^2 X)`.
    pub ratios: [f64; 3],
    /// Whether `c` came from quadrature (`false`: closed-form double sum).
    pub c_by_quadrature: bool,
}

/// Integrates a function whose spectrum lies in `[-freq, freq]` over
/// `[lo, hi]` using 16-point panels at most `1/freq` wide. The closure
/// returns a value and an absolute error for that value.
fn band_limited_integral(
    lo: f64,
    hi: f64,
    freq: f64,
    mass: f64,
    f: &(dyn Fn(f64) -> Result<(f64, f64)> + Sync),
) -> Result<(f64, f64)> {
    const ORDER: usize = 16;
    let (nodes, weights) = gauss_legendre(ORDER);
    let panels = (((hi - lo) * freq).ceil() as usize).max(1);
    let width = (hi - lo) / panels as f64;
    let per_panel = band_limited_panel_error(ORDER, width, freq, mass);
    let parts: Vec<Result<(f64, f64)>> = (0..panels)
        .into_par_iter()
        .map(|i| {
            let c = lo + (i as f64 + 0.5) * width;
            let mut v = 0.0;
            let mut e = 0.0;
            for (t, w) in nodes.iter().zip(&weights) {
                let (fv, fe) = f(c + 0.5 * width * t)?;
                v += w * fv;
                e += w * fe;
            }
            Ok((0.5 * width * v, 0.5 * width * e))
        })
        .collect();
    let mut sum = CompensatedSum::new();
    let mut err = per_panel * panels as f64;
    for p in parts {
        let (v, e) = p?;
        sum.add(Complex64::new(v, 0.0));
        err += e + 4.0 * ORDER as f64 * F64_UNIT * v.abs();
    }
    Ok((sum.value().re, err + sum.error_bound()))
}

/// `int_n^{n+1} |S(alpha)|^2` from the double sum over prime pairs:
/// `sum_p w_p^2 + 2 sum_{p<q} w_p w_q cos(2 pi D (n + 1/2)) sin(pi D)/(pi D)`
/// with `D = q log q - p log p`.
pub fn l2_unit_interval_bilinear(n: i64, table: &PrimeTable) -> (f64, f64) {
    let v = table.phases();
    let w = table.log_p();
    let centre = n as f64 + 0.5;
    let rows: Vec<(f64, f64)> = (0..v.len())
        .into_par_iter()
        .map(|i| {
            let mut s = CompensatedSum::new();
            s.add(Complex64::new(w[i] * w[i], 0.0));
            for j in (i + 1)..v.len() {
                let d = v[j] - v[i];
                let df = d.to_f64();
                let sinc = (2.0 * PI * reduced_phase(0.5, d)).sin() / (PI * df);
                let cos = (2.0 * PI * reduced_phase(centre, d)).cos();
                s.add(Complex64::new(2.0 * w[i] * w[j] * cos * sinc, 0.0));
            }
            (s.value().re, s.error_bound())
        })
        .collect();
    let mut total = CompensatedSum::new();
    let mut err = 0.0;
    for (r, e) in rows {
        total.add(Complex64::new(r, 0.0));
        err += e;
    }
    let s0 = table.total_weight();
    (total.value().re, err + total.error_bound() + 32.0 * F64_UNIT * s0 * s0)
}

/// The three mean-square integrals at scale `X` with unit interval
/// `[n, n+1]`.
pub fn l2_integrals(x: f64, n: i64, table: &PrimeTable) -> Result<L2Integrals> {
    let p = derive_params(x)?;
    let tau = p.tau;
    let s0 = table.total_weight();
    let v = table.phases();
    let width_s = match (v.first(), v.last()) {
        (Some(a), Some(b)) => (*b - *a).to_f64(),
        _ => 0.0,
    };
    let square = |alpha: f64| -> Result<(f64, f64)> {
        let s = prime_sum(alpha, table);
        let m = s.value.norm();
        Ok((m * m, 2.0 * m * s.abs_err + s.abs_err * s.abs_err))
    };
    let (a, a_err) = band_limited_integral(-tau, tau, width_s.max(1e-300), s0 * s0, &square)?;

    let half = 0.5 * x;
    let width_i = x * x.ln() - half * half.ln();
    let square_i = |alpha: f64| -> Result<(f64, f64)> {
        let tol_i = (1e-10 * half).max(4.0 * phase_integral_floor(alpha, x));
        let i = phase_integral(alpha, x, tol_i)?;
        let m = i.value.norm();
        Ok((m * m, 2.0 * m * i.abs_err + i.abs_err * i.abs_err))
    };
    let (b, b_err) = band_limited_integral(-tau, tau, width_i, half * half, &square_i)?;

    let cost = 16.0 * width_s.max(1.0) * table.len() as f64;
    let (c, c_err, by_quad) = if cost <= L2_QUADRATURE_BUDGET {
        let lo = n as f64;
        let (c, e) = band_limited_integral(lo, lo + 1.0, width_s.max(1e-300), s0 * s0, &square)?;
        (c, e, true)
    } else {
        let (c, e) = l2_unit_interval_bilinear(n, table);
        (c, e, false)
    };
    let lx = x.ln();
    Ok(L2Integrals {
        a,
        b,
        c,
        a_err,
        b_err,
        c_err,
        ratios: [a / (x * lx * lx), b / x, c / (x * lx * lx)],
        c_by_quadrature: by_quad,
    })
}

/// Van der Corput differencing:
/// `|sum_n a_n|^2 <= (1 + L/Q) sum_{|q| < Q} (1 - |q|/Q) sum_n a_{n+q} conj(a_n)`
/// for a sequence of length `L`.
pub fn vdc_check(seq: &[Complex64], q: usize) -> Result<(f64, f64, bool)> {
    if q < 1 || seq.is_empty() {
        return Err(Error::domain("van der Corput needs Q >= 1 and a nonempty sequence"));
    }
    let len = seq.len();
    let total: Complex64 = seq.iter().sum();
    let lhs = total.norm_sqr();
    let mut inner = 0.0;
    for h in 0..q.min(len) {
        let mut c = Complex64::new(0.0, 0.0);
        for n in 0..(len - h) {
            c += seq[n + h] * seq[n].conj();
        }
        let weight = 1.0 - h as f64 / q as f64;
        // terms q and -q are complex conjugates
        inner += if h == 0 { weight * c.re } else { 2.0 * weight * c.re };
    }
    let rhs = (1.0 + len as f64 / q as f64) * inner;
    Ok((lhs, rhs, lhs <= rhs + 1e-9 * (1.0 + rhs)))
}

/// First-derivative test for `I(alpha)`:
/// `|I(alpha)| <= 1 / (|alpha| (1 + log(X/2)))`.
pub fn derivative_test_check(alpha: f64, x: f64) -> Result<(f64, f64, bool)> {
    if alpha == 0.0 {
        return Err(Error::domain("the first-derivative test needs alpha != 0"));
    }
    if !(x >= 4.0) {
        return Err(Error::domain(format!("the first-derivative test needs X >= 4, got {x}")));
    }
    let rhs = 1.0 / (alpha.abs() * (1.0 + (0.5 * x).ln()));
    let tol = (1e-9 * rhs.min(0.5 * x)).max(4.0 * phase_integral_floor(alpha, x));
    let i = phase_integral(alpha, x, tol)?;
    let lhs = i.value.norm();
    Ok((lhs, rhs, lhs <= rhs * (1.0 + 1e-6)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{build_tables, sieve_range};
    use crate::precise::{cos_sin_2pi, ln_u64, p_log_p, Fixed};

    /// `S(alpha)` in arbitrary precision, 160 bits.
    fn precise_sum(alpha: f64, table: &PrimeTable) -> Complex64 {
        let bits = 160;
        let a = Fixed::from_f64(alpha, bits);
        let mut re = Fixed::zero(bits);
        let mut im = Fixed::zero(bits);
        for &p in table.primes() {
            let ph = a.mul(&p_log_p(p, bits)).frac();
            let (c, s) = cos_sin_2pi(&ph);
            let l = ln_u64(p, bits);
            re = re.add(&c.mul(&l));
            im = im.add(&s.mul(&l));
        }
        Complex64::new(re.to_f64(), im.to_f64())
    }

    #[test]
    fn prime_sum_at_zero_is_total_weight() {
        let t = sieve_range(1000.0).unwrap();
        let s = prime_sum(0.0, &t);
        assert_eq!(s.value.im, 0.0);
        assert!((s.value.re - t.total_weight()).abs() < 1e-10);
        assert_eq!(s.n_terms, t.len());
    }

    #[test]
    fn prime_sum_matches_arbitrary_precision() {
        let t = sieve_range(1000.0).unwrap();
        for alpha in [1e-3, 0.37, -2.5, 123.456] {
            let s = prime_sum(alpha, &t);
            let exact = precise_sum(alpha, &t);
            let d = (s.value - exact).norm();
            assert!(d < 1e-9, "alpha={alpha}: {d:e}");
            assert!(d <= s.abs_err, "error bound {0:e} below {d:e}", s.abs_err);
        }
    }

    #[test]
    fn prime_sum_is_hermitian() {
        let t = sieve_range(500.0).unwrap();
        for alpha in [0.01, 0.7, 3.3] {
            let a = prime_sum(alpha, &t).value;
            let b = prime_sum(-alpha, &t).value;
            assert!((a - b.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn phase_integral_at_zero_is_half_x() {
        let i = phase_integral(0.0, 1000.0, 1e-12).unwrap();
        assert_eq!(i.value, Complex64::new(500.0, 0.0));
    }

    /// Direct composite Simpson oracle on a very fine grid.
    fn simpson(alpha: f64, x: f64, m: usize) -> Complex64 {
        let lo = 0.5 * x;
        let h = (x - lo) / m as f64;
        let f = |y: f64| {
            let yd = DoubleDouble::from_f64(y);
            unit_phasor(reduced_phase(alpha, yd * yd.ln()))
        };
        let mut s = f(lo) + f(x);
        for i in 1..m {
            let y = lo + i as f64 * h;
            s += f(y) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * (h / 3.0)
    }

    /// Plain Gauss-Legendre refinement, bypassing the expansion.
    fn quadrature_only(alpha: f64, x: f64) -> Complex64 {
        let lo = 0.5 * x;
        let cycles = alpha.abs() * (x * x.ln() - lo * lo.ln());
        phase_integral_panels(alpha, lo, x, (32.0 * cycles).ceil() as usize + 64).0
    }

    #[test]
    fn by_parts_agrees_with_quadrature() {
        for &(alpha, x) in &[(0.05, 200.0), (0.3, 1000.0), (1.7, 500.0), (2e-3, 1e5), (25.0, 300.0)] {
            let r = phase_integral_by_parts(alpha, x, 1e-9).expect("expansion converges");
            let q = quadrature_only(alpha, x);
            assert!((r.value - q).norm() <= 1e-9 + 1e-10 * x, "alpha={alpha} X={x}: {} vs {}", r.value, q);
            let neg = phase_integral(-alpha, x, 1e-9).unwrap();
            assert!((neg.value - q.conj()).norm() <= 1e-9 + 1e-10 * x);
        }
    }

    #[test]
    fn by_parts_declines_small_alpha() {
        assert!(phase_integral_by_parts(1e-5, 100.0, 1e-9).is_none());
        // the public entry still answers through quadrature
        let r = phase_integral(1e-5, 100.0, 1e-9).unwrap();
        assert!(r.panels > 0);
    }

    #[test]
    fn phase_integral_matches_simpson() {
        for (alpha, x) in [(1e-3, 1000.0), (0.05, 200.0), (-0.3, 100.0)] {
            let i = phase_integral(alpha, x, 1e-9).unwrap();
            let o = simpson(alpha, x, 400_000);
            assert!((i.value - o).norm() < 1e-6, "alpha={alpha} X={x}");
        }
    }

    #[test]
    fn phase_integral_exact_when_phase_is_linear_in_small_region() {
        // for tiny alpha, I ~ X/2 + 2 pi i alpha int y log y dy
        let x = 50.0;
        let alpha = 1e-9;
        let prim = |y: f64| 0.5 * y * y * y.ln() - 0.25 * y * y;
        let expected = Complex64::new(25.0, 2.0 * PI * alpha * (prim(x) - prim(25.0)));
        let i = phase_integral(alpha, x, 1e-12).unwrap();
        assert!((i.value - expected).norm() < 1e-10);
    }

    #[test]
    fn phase_integral_reports_unreachable_tolerance() {
        assert!(matches!(phase_integral(1.0, 100.0, 1e-30), Err(Error::Accuracy { .. })));
    }

    #[test]
    fn cube_roots_are_exact_on_cubes() {
        assert_eq!(cube_root_floor(1000.0, false), 10);
        assert_eq!(cube_root_floor(999.0, false), 9);
        assert_eq!(cube_root_floor(1000.0, true), 100);
        assert_eq!(cube_root_floor(27.0, true), 9);
    }

    #[test]
    fn vaughan_at_zero_alpha_sums_lambda() {
        let t = build_tables(200).unwrap();
        let p = vaughan_decompose(0.0, 100.0, &t).unwrap();
        // sum of Lambda(n) for 50 < n <= 100
        let oracle: f64 = (51..=100u64)
            .filter_map(|n| {
                (2..=n).find(|d| n % d == 0).and_then(|p| {
                    let mut m = n;
                    while m % p == 0 {
                        m /= p;
                    }
                    (m == 1).then(|| (p as f64).ln())
                })
            })
            .sum();
        assert!((p.s1_direct.re - oracle).abs() < 1e-10);
        assert!((p.s1_direct.re - 44.560).abs() < 1e-3, "{}", p.s1_direct.re);
        assert!(p.residual() < 1e-9);
    }

    #[test]
    fn vaughan_coefficients_by_brute_force() {
        let t = build_tables(500).unwrap();
        let u = 7;
        let (c, a) = vaughan_coefficients(u, 400, &t);
        for d in 1..=u * u {
            let mut s = 0.0;
            for r in 1..=u {
                if d % r == 0 && d / r <= u {
                    s += t.mobius(r) as f64 * t.mangoldt(d / r);
                }
            }
            assert!((c[d] - s).abs() < 1e-12, "c({d})");
        }
        for d in 1..=400 {
            let s: i64 = (1..=u.min(d)).filter(|m| d % m == 0).map(|m| t.mobius(m) as i64).sum();
            assert_eq!(a[d], s, "a({d})");
        }
        // with the cutoff above d, a(d) collapses to [d == 1]
        let (_, full) = vaughan_coefficients(400, 400, &t);
        assert_eq!(full[1], 1);
        assert!(full[2..].iter().all(|&v| v == 0));
    }

    #[test]
    fn shifted_and_plain_sums_agree_at_zero() {
        let t = build_tables(1000).unwrap();
        let a = mangoldt_sum(0.0, 1000.0, &t, false).unwrap();
        let b = mangoldt_sum(0.0, 1000.0, &t, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bilinear_unit_interval_matches_quadrature() {
        let t = sieve_range(200.0).unwrap();
        let s0 = t.total_weight();
        let v = t.phases();
        let w = (*v.last().unwrap() - v[0]).to_f64();
        let square = |a: f64| -> Result<(f64, f64)> { Ok((prime_sum(a, &t).value.norm_sqr(), 0.0)) };
        for n in [0i64, 1, 7] {
            let (q, qe) = band_limited_integral(n as f64, n as f64 + 1.0, w, s0 * s0, &square).unwrap();
            let (b, be) = l2_unit_interval_bilinear(n, &t);
            assert!((q - b).abs() <= qe + be + 1e-9 * b, "n={n}: {q} vs {b}");
        }
    }

    #[test]
    fn vdc_holds_on_random_sequence() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let seq: Vec<Complex64> = (0..300)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        for q in [1, 2, 17, 299, 1000] {
            let (lhs, rhs, ok) = vdc_check(&seq, q).unwrap();
            assert!(ok, "Q={q}: {lhs} > {rhs}");
        }
        let ones = vec![Complex64::new(1.0, 0.0); 10];
        let (lhs, rhs, _) = vdc_check(&ones, 1).unwrap();
        assert_eq!(lhs, 100.0);
        assert_eq!(rhs, 110.0);
    }

    #[test]
    fn derivative_test_needs_nonzero_alpha() {
        assert!(matches!(derivative_test_check(0.0, 100.0), Err(Error::Domain(_))));
        let (lhs, rhs, ok) = derivative_test_check(0.1, 1000.0).unwrap();
        assert!(ok, "{lhs} > {rhs}");
    }

    #[test]
    fn ln_u64_used_by_oracle_is_sane() {
        assert!((ln_u64(1000, 100).to_f64() - 1000f64.ln()).abs() < 1e-15);
    }
}
