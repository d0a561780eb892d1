//! Prime tables and arithmetic functions.
//!
//! [`PrimeTable`] holds the primes of one window `(X/2, X]` with their
//! weights `log p` and double-double phases `p log p`; it is produced by a
//! segmented odd-only sieve that runs segments in parallel and concatenates
//! them in order. [`ArithTables`] holds von Mangoldt, Moebius and divisor
//! counts up to a bound, filled by a linear sieve.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};

/// Odd numbers per sieve segment (256 KiB of flags).
pub const SEGMENT_ODDS: usize = 1 << 18;

/// Upper limit on the memory a prime table may occupy.
pub const TABLE_MEMORY_BUDGET: f64 = 2.0 * 1024.0 * 1024.0 * 1024.0;

const BYTES_PER_ENTRY: f64 = 40.0;
const CACHE_MAGIC: &[u8; 8] = b"PLOGPTBL";
const CACHE_VERSION: u32 = 1;

/// Primes `p` with `X/2 < p <= X`, weights and phases.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    x_scale: f64,
    primes: Vec<u64>,
    log_p: Vec<f64>,
    phase: Vec<DoubleDouble>,
    /// `prefix_weight[i] = sum of log_p[..i]`
    prefix_weight: Vec<f64>,
}

impl PrimeTable {
    pub fn x_scale(&self) -> f64 {
        self.x_scale
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn log_p(&self) -> &[f64] {
        &self.log_p
    }

    pub fn phases(&self) -> &[DoubleDouble] {
        &self.phase
    }

    pub fn prefix_weight(&self) -> &[f64] {
        &self.prefix_weight
    }

    /// Sum of `log p` over the half-open index range `lo..hi`.
    pub fn weight_between(&self, lo: usize, hi: usize) -> f64 {
        if hi <= lo {
            0.0
        } else {
            self.prefix_weight[hi] - self.prefix_weight[lo]
        }
    }

    /// `sum log p`, which equals `S(0)`.
    pub fn total_weight(&self) -> f64 {
        *self.prefix_weight.last().unwrap_or(&0.0)
    }

    /// First index whose phase is `>= v` (or `> v` when `strict`).
    pub fn lower_bound(&self, v: DoubleDouble, strict: bool) -> usize {
        self.phase.partition_point(|w| {
            let c = w.total_cmp(&v);
            if strict {
                c.is_le()
            } else {
                c.is_lt()
            }
        })
    }

    fn from_primes(x_scale: f64, primes: Vec<u64>) -> Self {
        let (log_p, phase): (Vec<f64>, Vec<DoubleDouble>) = primes
            .par_iter()
            .map(|&p| {
                let pd = DoubleDouble::from_u64(p);
                let l = pd.ln();
                (l.to_f64(), pd * l)
            })
            .unzip();
        let mut prefix_weight = Vec::with_capacity(log_p.len() + 1);
        let mut acc = 0.0;
        prefix_weight.push(acc);
        for &l in &log_p {
            acc += l;
            prefix_weight.push(acc);
        }
        PrimeTable {
            x_scale,
            primes,
            log_p,
            phase,
            prefix_weight,
        }
    }

    /// Writes the table to a binary cache file.
    ///
    /// Layout (little endian): magic, format version `u32`, `X` as `f64`
    /// bits, entry count `u64`, then per entry `p: u64, phase.hi, phase.lo`.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(28 + self.len() * 24);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.x_scale.to_bits().to_le_bytes());
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (p, v) in self.primes.iter().zip(&self.phase) {
            buf.extend_from_slice(&p.to_le_bytes());
            buf.extend_from_slice(&v.hi.to_bits().to_le_bytes());
            buf.extend_from_slice(&v.lo.to_bits().to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    /// Reads a cache file; `Ok(None)` when it was written for another `X` or
    /// another format version.
    pub fn read_cache(path: &Path, x: f64) -> Result<Option<Self>> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 28 || &buf[..8] != CACHE_MAGIC {
            return Ok(None);
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        if u32_at(8) != CACHE_VERSION || f64::from_bits(u64_at(12)) != x {
            return Ok(None);
        }
        let n = u64_at(20) as usize;
        if buf.len() != 28 + 24 * n {
            return Ok(None);
        }
        let mut primes = Vec::with_capacity(n);
        let mut phase = Vec::with_capacity(n);
        for i in 0..n {
            let o = 28 + 24 * i;
            primes.push(u64_at(o));
            phase.push(DoubleDouble {
                hi: f64::from_bits(u64_at(o + 8)),
                lo: f64::from_bits(u64_at(o + 16)),
            });
        }
        let mut t = PrimeTable::from_primes(x, primes);
        t.phase = phase;
        Ok(Some(t))
    }
}

/// Primes up to `limit` by a plain sieve (used for sieving bases).
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Builds the table of primes in `(X/2, X]`.
pub fn sieve_range(x: f64) -> Result<PrimeTable> {
    if !(x >= 4.0) || !x.is_finite() {
        return Err(Error::domain(format!("prime window needs X >= 4, got {x}")));
    }
    let estimated = x / (2.0 * x.ln()) * 1.2;
    if estimated * BYTES_PER_ENTRY > TABLE_MEMORY_BUDGET {
        return Err(Error::capacity(
            format!("prime table for X = {x:e} needs about {:.1} GiB", estimated * BYTES_PER_ENTRY / 1073741824.0),
            format!("process the window in segments of at most {SEGMENT_ODDS} odd numbers and stream the results"),
        ));
    }
    let hi = x.floor() as u64;
    let lo = (x / 2.0).floor() as u64 + 1;
    Ok(PrimeTable::from_primes(x, primes_between(lo, hi)))
}

/// All primes in the closed range `[lo, hi]`, ascending.
pub fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || lo > hi {
        return Vec::new();
    }
    let base = small_primes((hi as f64).sqrt() as u64 + 1);
    let mut out = Vec::new();
    if lo <= 2 {
        out.push(2);
    }
    // odd candidates 2m+1 with m in [m_lo, m_hi]
    let m_lo = lo.max(3) / 2;
    let m_hi = if hi % 2 == 1 { hi / 2 } else { (hi - 1) / 2 };
    if m_lo > m_hi {
        return out;
    }
    let m_lo = if 2 * m_lo + 1 < lo.max(3) { m_lo + 1 } else { m_lo };
    let starts: Vec<u64> = (m_lo..=m_hi).step_by(SEGMENT_ODDS).collect();
    let segments: Vec<Vec<u64>> = starts
        .par_iter()
        .map(|&s| {
            let e = (s + SEGMENT_ODDS as u64 - 1).min(m_hi);
            sieve_segment(s, e, &base)
        })
        .collect();
    for seg in segments {
        out.extend(seg);
    }
    out
}

fn sieve_segment(m_lo: u64, m_hi: u64, base: &[u64]) -> Vec<u64> {
    let len = (m_hi - m_lo + 1) as usize;
    let mut composite = vec![false; len];
    let lo_val = 2 * m_lo + 1;
    let hi_val = 2 * m_hi + 1;
    for &p in base.iter().skip(1) {
        if p * p > hi_val {
            break;
        }
        // first odd multiple of p that is >= max(p*p, lo_val)
        let mut start = p * p;
        if start < lo_val {
            let k = lo_val.div_ceil(p);
            start = k * p;
            if start % 2 == 0 {
                start += p;
            }
        }
        let mut idx = ((start - 1) / 2 - m_lo) as usize;
        while idx < len {
            composite[idx] = true;
            idx += p as usize;
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|(i, &c)| !c && (2 * (m_lo + *i as u64) + 1) > 1)
        .map(|(i, _)| 2 * (m_lo + i as u64) + 1)
        .collect()
}

/// Von Mangoldt, Moebius and divisor-count tables on `1..=upto`.
#[derive(Clone, Debug)]
pub struct ArithTables {
    upto: usize,
    /// `p` when `n` is a power of the prime `p`, else 0. `Lambda(n) = log p`.
    mangoldt_base: Vec<u32>,
    mobius: Vec<i8>,
    divisors: Vec<u32>,
}

impl ArithTables {
    pub fn upto(&self) -> usize {
        self.upto
    }

    /// Prime `p` with `n = p^k`, if any.
    pub fn prime_power_base(&self, n: usize) -> Option<u32> {
        match self.mangoldt_base[n] {
            0 => None,
            p => Some(p),
        }
    }

    /// `Lambda(n)`, evaluated from the stored prime base.
    pub fn mangoldt(&self, n: usize) -> f64 {
        match self.mangoldt_base[n] {
            0 => 0.0,
            p => (p as f64).ln(),
        }
    }

    pub fn mobius(&self, n: usize) -> i8 {
        self.mobius[n]
    }

    pub fn divisor_count(&self, n: usize) -> u32 {
        self.divisors[n]
    }
}

/// Fills the arithmetic tables by a linear sieve.
pub fn build_tables(upto: usize) -> Result<ArithTables> {
    if upto < 2 {
        return Err(Error::domain(format!("tables need upto >= 2, got {upto}")));
    }
    if upto > 1usize << 31 {
        return Err(Error::capacity(
            format!("arithmetic tables up to {upto}"),
            "use upto <= 2^31",
        ));
    }
    let n = upto;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::new();
    let mut mobius = vec![0i8; n + 1];
    let mut divisors = vec![0u32; n + 1];
    // exponent of the smallest prime factor, for the divisor count
    let mut spf_exp = vec![0u32; n + 1];
    let mut base = vec![0u32; n + 1];
    mobius[1] = 1;
    divisors[1] = 1;
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
            mobius[i] = -1;
            divisors[i] = 2;
            spf_exp[i] = 1;
            base[i] = i as u32;
        }
        for &p in &primes {
            let m = i * p as usize;
            if p > spf[i] || m > n {
                break;
            }
            spf[m] = p;
            if p == spf[i] {
                mobius[m] = 0;
                spf_exp[m] = spf_exp[i] + 1;
                divisors[m] = divisors[i] / (spf_exp[i] + 1) * (spf_exp[i] + 2);
                base[m] = if base[i] == p { p } else { 0 };
            } else {
                mobius[m] = -mobius[i];
                spf_exp[m] = 1;
                divisors[m] = divisors[i] * 2;
                base[m] = 0;
            }
        }
    }
    Ok(ArithTables {
        upto,
        mangoldt_base: base,
        mobius,
        divisors,
    })
}

/// Normalized divisor and von Mangoldt second moments up to `X`:
/// `(sum tau(n)^2 / (X log^3 X), sum Lambda(n)^2 / (X log X))`.
pub fn lemma5_ratios(x: f64) -> Result<(f64, f64)> {
    let (s1, s2) = second_moments(x)?;
    let lx = x.ln();
    Ok((s1 / (x * lx.powi(3)), s2 / (x * lx)))
}

/// Raw sums `sum_{n<=X} tau(n)^2` and `sum_{n<=X} Lambda(n)^2`.
pub fn second_moments(x: f64) -> Result<(f64, f64)> {
    if !(x >= 10.0) || !x.is_finite() {
        return Err(Error::domain(format!("second moments need X >= 10, got {x}")));
    }
    let upto = x.floor() as usize;
    let t = build_tables(upto)?;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for n in 1..=upto {
        let d = t.divisor_count(n) as f64;
        s1 += d * d;
        let l = t.mangoldt(n);
        s2 += l * l;
    }
    Ok((s1, s2))
}
