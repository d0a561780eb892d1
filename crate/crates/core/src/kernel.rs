//! Smoothing kernel `psi` and its Fourier transform `Psi`.
//!
//! `psi` is the indicator of `[-c, c]` convolved with `k` normalized boxcars
//! of width `delta`, with `c = 7 eps / 8` and `delta = eps / (4k)`. It is
//! `k - 1` times continuously differentiable, equals 1 on `|y| <= 3 eps / 4`
//! and vanishes for `|y| >= eps`. Its transform is
//!
//! ```text
//! Psi(x) = sin(2 pi c x) / (pi x) * (sin(pi delta x) / (pi delta x))^k
//! ```
//!
//! which obeys `|Psi(x)| <= min(7 eps/4, 1/(pi|x|), (1/(pi|x|)) (1/(pi delta |x|))^k)`.
//! Note `1/(pi delta) = k / (2 pi eps / 8)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Smoothing function descriptor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub eps: f64,
    pub k: u32,
    pub plateau_c: f64,
    pub boxwidth_delta: f64,
}

impl KernelSpec {
    pub fn new(eps: f64, k: u32) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::domain(format!("kernel eps must be positive, got {eps}")));
        }
        if k < 1 {
            return Err(Error::domain("kernel order k must be at least 1"));
        }
        Ok(KernelSpec {
            eps,
            k,
            plateau_c: 7.0 * eps / 8.0,
            boxwidth_delta: eps / (4.0 * k as f64),
        })
    }

    /// Decay constant `1/(pi delta)` of the third bound.
    pub fn decay_scale(&self) -> f64 {
        1.0 / (PI * self.boxwidth_delta)
    }

    /// Largest frequency present in `Psi`, i.e. the support radius `eps`.
    pub fn bandwidth(&self) -> f64 {
        self.eps
    }
}

#[inline]
fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

/// `Psi(x)`, the Fourier transform of `psi`.
pub fn psi_hat(spec: &KernelSpec, x: f64) -> f64 {
    let c = spec.plateau_c;
    let lead = 2.0 * c * sinc(2.0 * PI * c * x);
    lead * sinc(PI * spec.boxwidth_delta * x).powi(spec.k as i32)
}

/// Pointwise bound `min(7 eps/4, 1/(pi|x|), (1/(pi|x|)) (k / (2 pi |x| eps/8))^k)`.
pub fn psi_hat_bound(spec: &KernelSpec, x: f64) -> f64 {
    let mass = 7.0 * spec.eps / 4.0;
    let ax = x.abs();
    if ax == 0.0 {
        return mass;
    }
    let inv = 1.0 / (PI * ax);
    let third = inv * (spec.k as f64 / (2.0 * PI * ax * spec.eps / 8.0)).powi(spec.k as i32);
    mass.min(inv).min(third)
}

/// Distribution function of `delta * (U_1 + ... + U_k - k/2)`, `U_i` uniform
/// on `[0, 1]`, written as a sum of cardinal B-splines of order `k + 1`
/// (all terms nonnegative, evaluated by the Cox-de Boor recursion).
fn boxcar_sum_cdf(k: u32, delta: f64, t: f64) -> f64 {
    let kf = k as f64;
    let s = t / delta + kf / 2.0;
    if s <= 0.0 {
        return 0.0;
    }
    if s >= kf {
        return 1.0;
    }
    // cdf(s) = sum_{j>=0} N_{k+1}(s - j), N_m supported on [0, m]
    let jmax = s.floor() as usize;
    // vals[j] holds N_m(s - j) for the current order m
    let mut vals = vec![0.0; jmax + 2];
    vals[jmax] = 1.0;
    for m in 2..=(k + 1) {
        let mf = m as f64;
        let mut next = vec![0.0; jmax + 2];
        for j in 0..=jmax {
            let u = s - j as f64;
            let a = vals[j];
            let b = vals[j + 1];
            next[j] = (u * a + (mf - u) * b) / (mf - 1.0);
        }
        vals = next;
    }
    vals[..=jmax].iter().sum::<f64>().clamp(0.0, 1.0)
}

/// `psi(y)`.
pub fn psi_eval(spec: &KernelSpec, y: f64) -> f64 {
    let ay = y.abs();
    if ay <= 0.75 * spec.eps {
        return 1.0;
    }
    if ay >= spec.eps {
        return 0.0;
    }
    // psi(y) = P(|y| + T <= c) = cdf(c - |y|) by symmetry of T
    boxcar_sum_cdf(spec.k, spec.boxwidth_delta, spec.plateau_c - ay)
}

/// Checks the three-way bound on `|Psi(x)|`.
pub fn check_bound(spec: &KernelSpec, x: f64) -> (f64, f64, bool) {
    let lhs = psi_hat(spec, x).abs();
    let rhs = psi_hat_bound(spec, x);
    (lhs, rhs, lhs <= rhs + 1e-12 * rhs)
}

/// Closed-form value of `sum_bound * int_{|x|>B} (1/(pi|x|)) (a/|x|)^k dx`
/// with `a = 1/(pi delta)`.
pub fn tail_mass(spec: &KernelSpec, sum_bound: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return f64::INFINITY;
    }
    let k = spec.k as f64;
    let a = spec.decay_scale();
    2.0 * sum_bound * (a / b).powf(k) / (PI * k)
}

/// Grid spacing used by [`tail_cutoff`]: `a / 64` with `a = 1/(pi delta)`.
pub fn cutoff_grid_step(spec: &KernelSpec) -> f64 {
    spec.decay_scale() / 64.0
}

/// Smallest grid point `B` with `tail_mass(B) < tol`.
pub fn tail_cutoff(spec: &KernelSpec, sum_bound: f64, tol: f64) -> Result<f64> {
    if spec.k < 1 {
        return Err(Error::domain("tail integral diverges for k < 1"));
    }
    if !(tol > 0.0) || !(sum_bound >= 0.0) {
        return Err(Error::domain("tail cutoff needs tol > 0 and sum_bound >= 0"));
    }
    if sum_bound == 0.0 || tol.is_infinite() {
        return Ok(0.0);
    }
    let k = spec.k as f64;
    let a = spec.decay_scale();
    let exact = a * (2.0 * sum_bound / (PI * k * tol)).powf(1.0 / k);
    let h = cutoff_grid_step(spec);
    let mut m = (exact / h).ceil().max(1.0);
    // above 2^53 grid steps the grid is as fine as f64 allows
    while tail_mass(spec, sum_bound, m * h) >= tol {
        m = (m + 1.0).max(m.next_up());
    }
    while m > 1.0 {
        let prev = (m - 1.0).min(m.next_down());
        if tail_mass(spec, sum_bound, prev * h) >= tol {
            break;
        }
        m = prev;
    }
    Ok(m * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    /// Fourier transform of psi by Gauss-Legendre on the polynomial pieces.
    fn transform_by_quadrature(spec: &KernelSpec, x: f64) -> f64 {
        let (nodes, weights) = gauss_legendre(24);
        let mut breaks = vec![0.0, 0.75 * spec.eps];
        for j in 1..=spec.k {
            breaks.push(0.75 * spec.eps + j as f64 * spec.boxwidth_delta);
        }
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = 0.5 * (b - a);
            let m = 0.5 * (a + b);
            for (t, wt) in nodes.iter().zip(&weights) {
                let y = m + h * t;
                total += wt * h * psi_eval(spec, y) * (2.0 * PI * x * y).cos();
            }
        }
        2.0 * total
    }

    #[test]
    fn plateau_and_support_are_exact() {
        let s = KernelSpec::new(1.0, 3).unwrap();
        assert_eq!(s.plateau_c - s.k as f64 * s.boxwidth_delta / 2.0, 0.75);
        assert_eq!(s.plateau_c + s.k as f64 * s.boxwidth_delta / 2.0, 1.0);
        assert_eq!(psi_eval(&s, 0.0), 1.0);
        assert_eq!(psi_eval(&s, 1.0), 0.0);
    }

    #[test]
    fn single_boxcar_midpoint() {
        let s = KernelSpec::new(1.0, 1).unwrap();
        assert!((psi_eval(&s, 7.0 / 8.0) - 0.5).abs() < 1e-15);
        // linear ramp between 3/4 and 1
        assert!((psi_eval(&s, 0.8) - 0.8).abs() < 1e-14);
    }

    #[test]
    fn psi_hat_examples() {
        let s = KernelSpec::new(2.0, 4).unwrap();
        assert_eq!(psi_hat(&s, 0.0), 3.5);
        let s1 = KernelSpec::new(1.0, 1).unwrap();
        assert!(psi_hat(&s1, 4.0).abs() < 1e-15);
        let s2 = KernelSpec::new(1.0, 2).unwrap();
        let q = transform_by_quadrature(&s2, 0.3);
        assert!((psi_hat(&s2, 0.3) - q).abs() < 1e-8);
    }

    #[test]
    fn psi_hat_matches_quadrature_on_grid() {
        for &(eps, k) in &[(1.0, 1), (1.0, 2), (0.5, 3)] {
            let s = KernelSpec::new(eps, k).unwrap();
            for i in 0..60 {
                let x = -7.0 + 0.2371 * i as f64;
                let q = transform_by_quadrature(&s, x);
                assert!((psi_hat(&s, x) - q).abs() < 1e-8, "eps={eps} k={k} x={x}");
            }
        }
    }

    #[test]
    fn bound_holds_at_examples() {
        let s = KernelSpec::new(0.7, 2).unwrap();
        let (l, r, ok) = check_bound(&s, 0.0);
        assert_eq!(l, r);
        assert!(ok);
        let s3 = KernelSpec::new(1.0, 3).unwrap();
        assert!(check_bound(&s3, 10.0).2);
    }

    #[test]
    fn sandwich_and_monotonicity_on_dense_grid() {
        for &(eps, k) in &[(1.0, 1), (1.0, 3), (0.1, 5), (10.0, 8), (2.0, 20)] {
            let s = KernelSpec::new(eps, k).unwrap();
            let mut prev = 1.0;
            for i in 0..=4000 {
                let y = 1.1 * eps * i as f64 / 4000.0;
                let v = psi_eval(&s, y);
                let lower = if y <= 0.75 * eps { 1.0 } else { 0.0 };
                let upper = if y < eps { 1.0 } else { 0.0 };
                assert!(lower <= v && v <= upper, "eps={eps} k={k} y={y} v={v}");
                assert!(v <= prev + 1e-15);
                assert_eq!(v, psi_eval(&s, -y));
                prev = v;
            }
        }
    }

    #[test]
    fn strictly_between_inside_transition() {
        let s = KernelSpec::new(1.0, 4).unwrap();
        for i in 1..20 {
            let y = 0.76 + 0.0118 * i as f64;
            let v = psi_eval(&s, y);
            assert!(v > 0.0 && v < 1.0, "y={y} v={v}");
        }
    }

    #[test]
    fn tail_cutoff_inverts_power_integral() {
        let s = KernelSpec::new(1.0, 2).unwrap();
        let b = tail_cutoff(&s, 1.0, 1e-6).unwrap();
        assert!(tail_mass(&s, 1.0, b) < 1e-6);
        assert!(tail_mass(&s, 1.0, b - cutoff_grid_step(&s)) >= 1e-6);
        // closed form against a numeric integral of the integrand on [B, 50B]
        // plus the analytic remainder beyond 50B
        let a = s.decay_scale();
        let f = |x: f64| (1.0 / (PI * x)) * (a / x).powi(2);
        let (nodes, weights) = gauss_legendre(30);
        let mut num = 0.0;
        let panels = 2000;
        // integrate in log space
        let (l0, l1) = (b.ln(), (50.0 * b).ln());
        let h = (l1 - l0) / panels as f64;
        for p in 0..panels {
            let m = l0 + h * (p as f64 + 0.5);
            for (t, w) in nodes.iter().zip(&weights) {
                let u = m + 0.5 * h * t;
                let x = u.exp();
                num += 0.5 * h * w * f(x) * x;
            }
        }
        let numeric = 2.0 * num + tail_mass(&s, 1.0, 50.0 * b);
        assert!((numeric / tail_mass(&s, 1.0, b) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tail_cutoff_edge_cases() {
        let s = KernelSpec::new(1.0, 2).unwrap();
        assert_eq!(tail_cutoff(&s, 1.0, f64::INFINITY).unwrap(), 0.0);
        assert_eq!(tail_cutoff(&s, 0.0, 1e-9).unwrap(), 0.0);
        assert!(tail_cutoff(&s, 1.0, 0.0).is_err());
        assert!(KernelSpec::new(1.0, 0).is_err());
    }

    #[test]
    fn doubling_k_stays_under_envelope() {
        let h = |s: &KernelSpec| cutoff_grid_step(s);
        for &eps in &[0.1, 1.0, 10.0] {
            for &tol in &[1e-2, 1e-6, 1e-12] {
                for k in 1..=12u32 {
                    let s1 = KernelSpec::new(eps, k).unwrap();
                    let s2 = KernelSpec::new(eps, 2 * k).unwrap();
                    let b1 = tail_cutoff(&s1, 1e6, tol).unwrap();
                    let b2 = tail_cutoff(&s2, 1e6, tol).unwrap();
                    let envelope = 4.0 * s1.decay_scale();
                    assert!(b2 <= b1.max(envelope) + h(&s2), "eps={eps} tol={tol} k={k}");
                }
            }
        }
    }

    #[test]
    fn parseval_spot_check() {
        // int Psi = psi(0) = 1
        for &(eps, k) in &[(1.0, 2), (1.0, 3), (0.5, 3)] {
            let s = KernelSpec::new(eps, k).unwrap();
            let tol = 1e-8;
            let b = tail_cutoff(&s, 1.0, tol).unwrap();
            let (nodes, weights) = gauss_legendre(16);
            let panel = 0.25 / s.bandwidth();
            let n = (b / panel).ceil() as usize;
            let mut total = 0.0;
            for p in 0..n {
                let a0 = p as f64 * panel;
                for (t, w) in nodes.iter().zip(&weights) {
                    let x = a0 + 0.5 * panel * (1.0 + t);
                    total += 0.5 * panel * w * psi_hat(&s, x);
                }
            }
            let integral = 2.0 * total;
            assert!((integral - 1.0).abs() < 1e-6, "eps={eps} k={k}: {integral}");
        }
    }
}
