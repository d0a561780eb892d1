//! Scale parameters of the circle method and the inverse of `y log y`.
//!
//! Everything is derived from the target `N` through the scale `X` solving
//! `N = 2 X log(2X/3)`. All functions here are pure.

use crate::error::{Error, Result};

/// Smallest admissible scale: `log(2X/3)` vanishes at `X = 3/2`.
pub const MIN_SCALE: f64 = 1.5;

/// Derived parameter set for one target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleParams {
    /// Target value, recomputed as `2 X log(2X/3)`.
    pub n: f64,
    /// Scale of the primes: the search window is `(X/2, X]`.
    pub x: f64,
    /// Width of the inequality, `X^{-1/25} log^8 X` unless overridden.
    pub eps: f64,
    /// Major-arc radius `X^{-23/25}`.
    pub tau: f64,
    /// Minor/tail boundary `X^{1/25} log^{-6} X`.
    pub big_k: f64,
    /// Smoothness order of the kernel, `floor(log X)` (at least 1).
    pub k: u32,
    /// Set when `eps` was replaced by a caller-supplied value.
    pub eps_overridden: bool,
}

fn phase_n(x: f64) -> f64 {
    2.0 * x * (2.0 * x / 3.0).ln()
}

/// Solves `2 X log(2X/3) = N` for `X >= 3/2`.
pub fn solve_x(n: f64) -> Result<f64> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::domain(format!("target N must be finite and >= 0, got {n}")));
    }
    if n == 0.0 {
        return Ok(MIN_SCALE);
    }
    let mut lo = MIN_SCALE;
    let mut hi = 3.0;
    while phase_n(hi) < n {
        lo = hi;
        hi *= 2.0;
    }
    bisect_then_newton(lo, hi, n, phase_n, |x| 2.0 * (2.0 * x / 3.0).ln() + 2.0)
}

/// Solves `y log y = t` for `y >= 1`.
pub fn invert_ylogy(t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("y log y = t needs finite t >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let hi = t.max(std::f64::consts::E);
    bisect_then_newton(1.0, hi, t, |y| y * y.ln(), |y| 1.0 + y.ln())
}

/// Derivative of the inverse of `y log y` at the point `y`.
pub fn ylogy_inverse_slope(y: f64) -> f64 {
    1.0 / (1.0 + y.ln())
}

fn bisect_then_newton(
    mut lo: f64,
    mut hi: f64,
    target: f64,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = df(x);
        if d <= 0.0 {
            break;
        }
        let next = x - (f(x) - target) / d;
        if next.is_finite() && next > 0.0 {
            x = next;
        }
    }
    Ok(x)
}

/// Builds the parameter set for a scale `X > 3/2`.
pub fn derive_params(x: f64) -> Result<CircleParams> {
    if !(x > MIN_SCALE) || !x.is_finite() {
        return Err(Error::domain(format!("scale X must exceed 3/2, got {x}")));
    }
    let lx = x.ln();
    Ok(CircleParams {
        n: phase_n(x),
        x,
        eps: x.powf(-1.0 / 25.0) * lx.powi(8),
        tau: x.powf(-23.0 / 25.0),
        big_k: x.powf(1.0 / 25.0) * lx.powi(-6),
        k: (lx.floor() as u32).max(1),
        eps_overridden: false,
    })
}

impl CircleParams {
    /// Parameters for target `n`: solves for `X` and keeps `n` as given.
    pub fn for_target(n: f64) -> Result<Self> {
        let x = solve_x(n)?;
        let mut p = derive_params(x)?;
        p.n = n;
        Ok(p)
    }

    /// Same parameters with the inequality width replaced.
    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::domain(format!("eps must be positive, got {eps}")));
        }
        self.eps = eps;
        self.eps_overridden = true;
        Ok(self)
    }

    /// Upper end of the minor arc actually used for integration.
    ///
    /// `K` only exceeds `tau` for astronomically large `X`; below that the
    /// minor arc is taken as `tau <= |alpha| <= max(K, 1)` so that the three
    /// arcs still partition the line.
    pub fn minor_arc_upper(&self) -> f64 {
        self.big_k.max(1.0)
    }
}
