use plogp::scaling::ylogy_inverse_slope;
use plogp::{derive_params, invert_ylogy, solve_x, CircleParams, Error};
use proptest::prelude::*;

fn target_of(x: f64) -> f64 {
    2.0 * x * (2.0 * x / 3.0).ln()
}

#[test]
fn solve_x_inverts_the_target_map() {
    let mut x = 2.0;
    while x < 1e13 {
        let back = solve_x(target_of(x)).unwrap();
        assert!((back - x).abs() <= 1e-12 * x, "X={x} came back as {back}");
        x *= 1.37;
    }
}

#[test]
fn solve_x_is_increasing() {
    let mut last = solve_x(1.0).unwrap();
    for i in 1..400 {
        let n = 10f64.powf(i as f64 / 20.0);
        let x = solve_x(n).unwrap();
        assert!(x > last, "not increasing at N={n}");
        last = x;
    }
}

#[test]
fn invert_ylogy_matches_bisection() {
    for &t in &[0.5, 1.0, 100.0, 1e4, 1e9, 3.3e15] {
        // plain bisection on y log y
        let (mut lo, mut hi) = (1.0f64, 2.0 + t);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.ln() < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y = invert_ylogy(t).unwrap();
        assert!((y - lo).abs() <= 1e-12 * lo, "t={t}: {y} vs {lo}");
    }
}

#[test]
fn inverse_slope_matches_finite_difference() {
    for &y in &[2.0, 30.0, 1e3, 1e6] {
        let t = y * f64::ln(y);
        let h = 1e-6 * t;
        let fd = (invert_ylogy(t + h).unwrap() - invert_ylogy(t - h).unwrap()) / (2.0 * h);
        let s = ylogy_inverse_slope(y);
        assert!((fd - s).abs() <= 1e-6 * s, "y={y}: {fd} vs {s}");
    }
}

#[test]
fn derived_widths_at_one_million() {
    let p = derive_params(1e6).unwrap();
    let l = 1e6f64.ln();
    assert!((p.eps - 1e6f64.powf(-0.04) * l.powi(8)).abs() <= 1e-12 * p.eps);
    assert!((p.tau - 1e6f64.powf(-0.92)).abs() <= 1e-12 * p.tau);
    assert_eq!(p.k, 13);
    // at desk scale K sits below tau and eps is far above 1
    assert!(p.big_k < p.tau && p.tau < 1.0 && 1.0 < p.eps);
    assert_eq!(p.minor_arc_upper(), 1.0);
}

#[test]
fn target_keeps_given_n() {
    let p = CircleParams::for_target(1e8).unwrap();
    assert_eq!(p.n, 1e8);
    assert!((target_of(p.x) - 1e8).abs() <= 1e-6);
}

#[test]
fn bad_inputs_are_domain_errors() {
    for bad in [f64::NAN, f64::INFINITY, -1.0] {
        assert!(matches!(solve_x(bad), Err(Error::Domain(_))), "solve_x({bad})");
    }
    assert!(matches!(derive_params(1.5), Err(Error::Domain(_))));
    assert!(matches!(derive_params(1e6).unwrap().with_eps(0.0), Err(Error::Domain(_))));
}

proptest! {
    #[test]
    fn round_trip_holds(log_x in 0.5f64..30.0) {
        let x = log_x.exp();
        prop_assume!(x > 1.6);
        let back = solve_x(target_of(x)).unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x);
    }

    #[test]
    fn eps_override_only_touches_eps(x in 2.0f64..1e9, e in 1e-12f64..1e3) {
        let p = derive_params(x).unwrap();
        let q = p.with_eps(e).unwrap();
        prop_assert!(q.eps_overridden);
        prop_assert_eq!(q.eps, e);
        prop_assert_eq!((q.x, q.tau, q.big_k, q.k, q.n), (p.x, p.tau, p.big_k, p.k, p.n));
    }
}
