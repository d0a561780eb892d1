//! Closest prime triples (and pairs) to a target, with certified deviations.
//!
//! The search works on double-double phases `p log p` and reports the
//! minimizer of `|p1 log p1 + p2 log p2 + p3 log p3 - N|` over
//! `X/2 < p1 <= p2 <= p3 <= X`; ties go to the lexicographically smallest
//! triple. The winner is then recomputed in arbitrary precision.

use rayon::prelude::*;

use crate::arith::{sieve_range, PrimeTable};
use crate::dd::{DoubleDouble, DD_EPS};
use crate::error::{Error, Result};
use crate::precise::{bits_for_digits, p_log_p, Fixed};
use crate::scaling::{derive_params, CircleParams};

/// Decimal digits carried by certificates unless asked otherwise.
pub const DEFAULT_CERT_DIGITS: u32 = 40;

/// Pointer moves allowed for an exhaustive search.
pub const DEFAULT_SEARCH_STEPS: f64 = 2e10;

/// Smallest `X` accepted by [`theorem_check`].
pub const THEOREM_MIN_SCALE: f64 = 10.0;

/// High-precision recomputation of a sum of `p log p` against a target.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub digits: u32,
    /// `sum p log p`, decimal with `digits` fractional digits.
    pub sum_phase: String,
    /// `sum p log p - N`, same format.
    pub deviation: String,
    /// Absolute error bound of the certificate values.
    pub err_bound: f64,
}

/// Best triple found for a target.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleSolution {
    pub p1: u64,
    pub p2: u64,
    pub p3: u64,
    pub target: DoubleDouble,
    /// `sum p log p` in double-double.
    pub sum_phase: DoubleDouble,
    /// `|sum p log p - N|` from the search arithmetic.
    pub deviation: f64,
    pub eps_bound: f64,
    pub satisfied: bool,
    /// `false` when only a window of `p1` values was searched.
    pub exhaustive: bool,
    pub certificate: Option<Certificate>,
}

/// Best pair found for a target.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSolution {
    pub p1: u64,
    pub p2: u64,
    pub target: DoubleDouble,
    pub sum_phase: DoubleDouble,
    pub deviation: f64,
    pub certificate: Option<Certificate>,
}

/// `(|dev|, i, j, k)` ordered by deviation, then indices.
#[derive(Clone, Copy, Debug)]
struct Candidate {
    dev: DoubleDouble,
    idx: [usize; 3],
}

impl Candidate {
    fn better_than(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => self
                .dev
                .total_cmp(&o.dev)
                .then_with(|| self.idx.cmp(&o.idx))
                .is_lt(),
        }
    }
}

fn merge(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), y) if x.better_than(&y) => Some(x),
        (_, y) => y.or(a),
    }
}

/// Deviation of a triple, always formed in the same order so that the
/// search and brute force produce bit-identical values.
#[inline]
pub fn triple_deviation(v: &[DoubleDouble], i: usize, j: usize, k: usize, n: DoubleDouble) -> DoubleDouble {
    (v[i] + v[j] + v[k] - n).abs()
}

/// Best `(j, k)` for one `i`, by two pointers over `i <= j <= k`.
fn best_for_first(
    i: usize,
    v: &[DoubleDouble],
    vh: &[f64],
    n: DoubleDouble,
    margin: f64,
    mut best: Option<Candidate>,
) -> Option<Candidate> {
    let len = v.len();
    let t_dd = n - v[i];
    let t = t_dd.to_f64();
    let mut best_f = best.map_or(f64::INFINITY, |c| c.dev.to_f64());
    let (mut j, mut k) = (i, len - 1);
    while j <= k {
        let s = vh[j] + vh[k] - t;
        if s.abs() <= best_f + margin {
            let cand = Candidate {
                dev: triple_deviation(v, i, j, k, n),
                idx: [i, j, k],
            };
            if cand.better_than(&best) {
                best_f = cand.dev.to_f64();
                best = Some(cand);
            }
        }
        // inside the margin the f64 sign may be wrong; ask the exact sum
        let below = if s.abs() > margin {
            s < 0.0
        } else {
            (v[j] + v[k] - t_dd).is_negative()
        };
        if below {
            j += 1;
        } else {
            if k == 0 {
                break;
            }
            k -= 1;
        }
    }
    best
}

fn search_range(table: &PrimeTable, n: DoubleDouble, firsts: std::ops::Range<usize>) -> Option<Candidate> {
    let v = table.phases();
    let vh: Vec<f64> = v.iter().map(|d| d.hi).collect();
    let last = *v.last()?;
    // f64 sums steer the pointers when they are clear of rounding; exact
    // values decide everything else
    let margin = 1e-13 * (n.to_f64().abs() + 3.0 * last.to_f64());
    let chunk = 64;
    let starts: Vec<usize> = firsts.clone().step_by(chunk).collect();
    starts
        .par_iter()
        .map(|&s| {
            let mut best: Option<Candidate> = None;
            for i in s..(s + chunk).min(firsts.end) {
                let slack = best.map_or(DoubleDouble::from_f64(f64::INFINITY), |c| c.dev);
                // smallest reachable sum is 3 v_i, largest v_i + 2 v_last
                if (v[i] + v[i] + v[i] - n).total_cmp(&slack).is_gt() {
                    break;
                }
                if (n - (v[i] + last + last)).total_cmp(&slack).is_gt() {
                    continue;
                }
                best = best_for_first(i, v, &vh, n, margin, best);
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(None, merge)
}

/// Estimated pointer moves of an exhaustive search.
fn search_work(table: &PrimeTable, n: DoubleDouble) -> f64 {
    let v = table.phases();
    let len = v.len() as f64;
    let third = n.div_f64(3.0);
    let imax = table.lower_bound(third, true) as f64;
    imax * len - 0.5 * imax * imax
}

fn solution(table: &PrimeTable, n: DoubleDouble, c: Candidate, eps: f64, exhaustive: bool) -> TripleSolution {
    let v = table.phases();
    let p = table.primes();
    let [i, j, k] = c.idx;
    let dev = c.dev.to_f64();
    TripleSolution {
        p1: p[i],
        p2: p[j],
        p3: p[k],
        target: n,
        sum_phase: v[i] + v[j] + v[k],
        deviation: dev,
        eps_bound: eps,
        satisfied: dev < eps,
        exhaustive,
        certificate: None,
    }
}

/// Exhaustive search with a work limit; the result is certified.
pub fn best_triple_with_budget(n: DoubleDouble, table: &PrimeTable, max_steps: f64) -> Result<TripleSolution> {
    if table.is_empty() {
        return Err(Error::domain("no primes in the window"));
    }
    let work = search_work(table, n);
    if work > max_steps {
        return Err(Error::capacity(
            format!("exhaustive search needs about {work:.3e} steps"),
            "raise the step budget or use the windowed search",
        ));
    }
    let c = search_range(table, n, 0..table.len()).expect("non-empty table");
    let eps = derive_params(table.x_scale()).map(|p| p.eps).unwrap_or(f64::INFINITY);
    certify(solution(table, n, c, eps, true), DEFAULT_CERT_DIGITS)
}

/// Closest triple to `n` among primes in the table, certified to
/// [`DEFAULT_CERT_DIGITS`] digits. `eps_bound` is the width derived from the
/// table's scale.
pub fn best_triple(n: DoubleDouble, table: &PrimeTable) -> Result<TripleSolution> {
    best_triple_with_budget(n, table, DEFAULT_SEARCH_STEPS)
}

/// Length of the segment of `v(p2)` values with `v(p1) <= v(p2) <= v(p3)`,
/// `v(p3) <= v_max` and `v(p2) + v(p3) = N - v(p1)`: a proxy for how many
/// pairs can complete a given first prime.
fn completion_room(vi: f64, n: f64, v_max: f64) -> f64 {
    let rest = n - vi;
    (0.5 * rest - vi.max(rest - v_max)).max(0.0)
}

/// Searches only a block of about `max_steps / P` first primes `p1`, placed
/// where [`completion_room`] is largest; flags the result as not exhaustive.
pub fn best_triple_windowed(n: DoubleDouble, table: &PrimeTable, max_steps: f64) -> Result<TripleSolution> {
    if table.is_empty() {
        return Err(Error::domain("no primes in the window"));
    }
    let v = table.phases();
    let len = v.len();
    let width = ((max_steps / len as f64) as usize).clamp(1, len);
    let (nf, v_max) = (n.to_f64(), v[len - 1].to_f64());
    let mut centre = 0;
    let mut room = f64::NEG_INFINITY;
    for (i, vi) in v.iter().enumerate() {
        let r = completion_room(vi.to_f64(), nf, v_max);
        if r > room {
            (centre, room) = (i, r);
        }
    }
    let start = centre.saturating_sub(width / 2).min(len - width);
    let c = search_range(table, n, start..start + width)
        .ok_or_else(|| Error::Consistency("windowed search visited no triple".into()))?;
    let eps = derive_params(table.x_scale()).map(|p| p.eps).unwrap_or(f64::INFINITY);
    certify(solution(table, n, c, eps, width >= len), DEFAULT_CERT_DIGITS)
}

/// Recomputes the triple's phase sum with `digits` decimal digits and checks
/// it against the search arithmetic.
pub fn certify(mut sol: TripleSolution, digits: u32) -> Result<TripleSolution> {
    let cert = certify_sum(&[sol.p1, sol.p2, sol.p3], sol.target, sol.sum_phase, digits)?;
    sol.certificate = Some(cert);
    Ok(sol)
}

/// High-precision value of `sum p log p - target`, checked against the
/// double-double value `approx` of the sum.
pub fn certify_sum(primes: &[u64], target: DoubleDouble, approx: DoubleDouble, digits: u32) -> Result<Certificate> {
    if digits < 30 {
        return Err(Error::domain(format!("certificates carry at least 30 digits, asked {digits}")));
    }
    let bits = bits_for_digits(digits) + 16;
    let mut sum = Fixed::zero(bits);
    for &p in primes {
        sum = sum.add(&p_log_p(p, bits));
    }
    let dev = sum.sub(&Fixed::from_dd(target, bits));
    let approx_dev = approx - target;
    let scale = approx.to_f64().abs() + target.to_f64().abs() + 1.0;
    // each phase is within a few DD_EPS relative; additions add a few more
    let allowed = 64.0 * DD_EPS * scale + sum.err_bound();
    let gap = dev.sub(&Fixed::from_dd(approx_dev, bits)).abs().to_f64();
    if gap > allowed {
        return Err(Error::Integrity(format!(
            "search deviation {:e} differs from recomputed value by {gap:e} (allowed {allowed:e})",
            approx_dev.to_f64()
        )));
    }
    Ok(Certificate {
        digits,
        sum_phase: sum.to_decimal(digits),
        deviation: dev.to_decimal(digits),
        err_bound: sum.err_bound() + 0.5 * 10f64.powi(-(digits as i32)),
    })
}

/// Closest pair `p1 <= p2` to `n`, certified.
pub fn best_pair(n: DoubleDouble, table: &PrimeTable) -> Result<PairSolution> {
    if table.is_empty() {
        return Err(Error::domain("no primes in the window"));
    }
    let v = table.phases();
    let per_first: Vec<Option<Candidate>> = (0..v.len())
        .into_par_iter()
        .map(|i| {
            let pos = table.lower_bound(n - v[i], false);
            let mut best = None;
            // nearest phases on either side of n - v_i, restricted to j >= i
            for j in [pos.saturating_sub(1).max(i), pos.max(i)] {
                if j < v.len() {
                    let cand = Candidate {
                        dev: (v[i] + v[j] - n).abs(),
                        idx: [i, j, 0],
                    };
                    if cand.better_than(&best) {
                        best = Some(cand);
                    }
                }
            }
            best
        })
        .collect();
    let c = per_first.into_iter().fold(None, merge).expect("non-empty table");
    let [i, j, _] = c.idx;
    let p = table.primes();
    let sum_phase = v[i] + v[j];
    let cert = certify_sum(&[p[i], p[j]], n, sum_phase, DEFAULT_CERT_DIGITS)?;
    Ok(PairSolution {
        p1: p[i],
        p2: p[j],
        target: n,
        sum_phase,
        deviation: c.dev.to_f64(),
        certificate: Some(cert),
    })
}

/// Outcome of the end-to-end check for one target.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremCheck {
    pub params: CircleParams,
    pub solution: TripleSolution,
}

/// Derives `X` from `n`, sieves `(X/2, X]`, finds and certifies the best
/// triple, and compares it to `eps` (or the override).
pub fn theorem_check(n: f64, eps_override: Option<f64>, max_steps: f64) -> Result<TheoremCheck> {
    let mut params = CircleParams::for_target(n)?;
    if params.x < THEOREM_MIN_SCALE {
        return Err(Error::domain(format!(
            "X = {} is below {THEOREM_MIN_SCALE}; the window (X/2, X] is too small",
            params.x
        )));
    }
    if let Some(e) = eps_override {
        params = params.with_eps(e)?;
    }
    let table = sieve_range(params.x)?;
    let target = DoubleDouble::from_f64(n);
    let mut sol = match best_triple_with_budget(target, &table, max_steps) {
        Ok(s) => s,
        Err(Error::Capacity { .. }) => best_triple_windowed(target, &table, max_steps)?,
        Err(e) => return Err(e),
    };
    sol.eps_bound = params.eps;
    sol.satisfied = sol.deviation < params.eps;
    Ok(TheoremCheck { params, solution: sol })
}
