//! JSON encoding helpers. Reals are written with 17 significant digits so
//! that output is byte-identical across runs and platforms.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde_json::{json, Value};

use plogp::{CircleParams, TripleSolution};

pub fn real(v: f64) -> Value {
    Value::String(format!("{v:.16e}"))
}

pub fn complex(z: Complex64) -> Value {
    json!({ "re": real(z.re), "im": real(z.im) })
}

pub fn params_json(p: &CircleParams) -> Value {
    json!({
        "N": real(p.n),
        "X": real(p.x),
        "eps": real(p.eps),
        "tau": real(p.tau),
        "K": real(p.big_k),
        "k": p.k,
        "eps_overridden": p.eps_overridden,
    })
}

pub fn solution_json(s: &TripleSolution) -> Value {
    let cert = s.certificate.as_ref();
    json!({
        "p1": s.p1,
        "p2": s.p2,
        "p3": s.p3,
        "sum_phase": cert.map(|c| c.sum_phase.clone()),
        "deviation": cert.map(|c| c.deviation.clone()),
        "deviation_f64": real(s.deviation),
        "cert_digits": cert.map(|c| c.digits),
        "cert_err_bound": cert.map(|c| real(c.err_bound)),
        "eps": real(s.eps_bound),
        "satisfied": s.satisfied,
        "exhaustive": s.exhaustive,
    })
}

pub fn timing(started: Instant) -> Value {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({ "wall_time_s": real(started.elapsed().as_secs_f64()), "timestamp": stamp })
}
