//! Gauss-Legendre rules and compensated accumulation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

type Rule = (Vec<f64>, Vec<f64>);

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = compute_rule(n);
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn compute_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `ln` of the Gauss-Legendre error constant
/// `(n!)^4 / ((2n+1) ((2n)!)^3)`, so that the error of the `n`-point rule on
/// an interval of width `w` is at most `w^{2n+1} * C * max|f^{(2n)}|`.
pub fn ln_error_constant(n: usize) -> f64 {
    let ln_fact = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    4.0 * ln_fact(n) - (2.0 * n as f64 + 1.0).ln() - 3.0 * ln_fact(2 * n)
}

/// A-priori error bound of one panel for an integrand whose spectrum lies in
/// `[-freq, freq]` (cycles per unit) and whose total spectral mass is `mass`.
pub fn band_limited_panel_error(n: usize, width: f64, freq: f64, mass: f64) -> f64 {
    if mass == 0.0 || width == 0.0 {
        return 0.0;
    }
    let two_n = 2.0 * n as f64;
    let ln = ln_error_constant(n) + (two_n + 1.0) * width.ln() + two_n * (2.0 * PI * freq).ln();
    mass * ln.exp()
}

/// Neumaier-compensated sum of complex values.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
    abs_total: f64,
    count: u64,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *comp += (*sum - t) + v;
    } else {
        *comp += (v - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: Complex64) {
        neumaier(&mut self.sum.re, &mut self.comp.re, v.re);
        neumaier(&mut self.sum.im, &mut self.comp.im, v.im);
        self.abs_total += v.norm();
        self.count += 1;
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }

    /// Bound on the accumulated summation error.
    pub fn error_bound(&self) -> f64 {
        let u = f64::EPSILON / 2.0;
        2.0 * u * self.value().norm() + 2.0 * (self.count as f64) * u * u * self.abs_total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 16, 24] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn band_limited_bound_is_honest_for_a_cosine() {
        let (x, w) = gauss_legendre(8);
        let f = 3.0;
        let width = 0.3;
        let q: f64 = x
            .iter()
            .zip(&w)
            .map(|(t, wt)| 0.5 * width * wt * (2.0 * PI * f * (0.5 * width * t)).cos())
            .sum();
        let exact = (PI * f * width).sin() / (PI * f);
        let err = (q - exact).abs();
        assert!(err <= band_limited_panel_error(8, width, f, 1.0) + 1e-16);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::new();
        s.add(Complex64::new(1e16, 0.0));
        s.add(Complex64::new(1.0, 0.0));
        s.add(Complex64::new(-1e16, 0.0));
        assert_eq!(s.value().re, 1.0);
    }
}
