use plogp::circle::{circle_integral, circle_integral_to, gamma_direct, gamma_report, theta_integrals};
use plogp::kernel::psi_eval;
use plogp::quad::gauss_legendre;
use plogp::{best_triple, derive_params, invert_ylogy, sieve_range, DoubleDouble, KernelSpec};

/// Gauss-Legendre rule on `[lo, hi]` split into `panels` pieces.
fn composite(lo: f64, hi: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (t, w) = gauss_legendre(order);
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = lo + (p as f64 + 0.5) * width;
        for (ti, wi) in t.iter().zip(&w) {
            out.push((c + 0.5 * width * ti, 0.5 * width * wi));
        }
    }
    out
}

/// `int int int psi(sum y_i log y_i - N) dy` over `(X/2, X]^3`: two outer
/// variables by product quadrature, the third after substituting
/// `u = y log y` so that only the support of `psi` is integrated.
fn theta_box_oracle(x: f64, n: f64, spec: &KernelSpec) -> f64 {
    let phi = |y: f64| y * y.ln();
    let (u_lo, u_hi) = (phi(0.5 * x), phi(x));
    let outer = composite(0.5 * x, x, 50, 8);
    let c = spec.plateau_c;
    let delta = spec.boxwidth_delta * spec.k as f64 / 2.0;
    let mut total = 0.0;
    for &(y1, w1) in &outer {
        for &(y2, w2) in &outer {
            let r = n - phi(y1) - phi(y2);
            // psi has kinks at r +- (c - delta) and r +- (c + delta)
            let mut cuts = vec![r - c - delta, r - c + delta, r + c - delta, r + c + delta];
            cuts.retain(|v| *v > u_lo && *v < u_hi);
            cuts.insert(0, (r - c - delta).max(u_lo));
            cuts.push((r + c + delta).min(u_hi));
            let mut inner = 0.0;
            for seg in cuts.windows(2) {
                if seg[1] <= seg[0] {
                    continue;
                }
                for (u, w) in composite(seg[0], seg[1], 2, 10) {
                    let y = invert_ylogy(u).unwrap();
                    inner += w * psi_eval(spec, u - r) / (1.0 + y.ln());
                }
            }
            total += w1 * w2 * inner;
        }
    }
    total
}

#[test]
fn theta_matches_box_integral() {
    let x = 100.0;
    let params = derive_params(x).unwrap().with_eps(1.0).unwrap();
    let spec = KernelSpec::new(params.eps, params.k).unwrap();
    let n = params.n;
    let th = theta_integrals(DoubleDouble::from_f64(n), &params, 1e-4).unwrap();
    let oracle = theta_box_oracle(x, n, &spec);
    let err = th.quad_err + th.trunc_err;
    assert!(
        (th.theta.re - oracle).abs() <= 1e-4 * oracle + err,
        "Theta {} vs box oracle {oracle}",
        th.theta.re
    );
    assert!(th.theta.im.abs() <= 1e-6 * th.theta.re.abs() + err);
    assert!((th.theta - th.theta_tau).norm() <= th.outside_bound + err);
}

#[test]
fn inversion_is_essentially_real() {
    let x = 200.0;
    let params = derive_params(x).unwrap().with_eps(1.0).unwrap();
    let t = sieve_range(x).unwrap();
    let a = circle_integral(DoubleDouble::from_f64(params.n), &params, &t, 1e-4).unwrap();
    assert!(a.total.im.abs() <= 1e-6 * a.total.re.abs() + a.error_bound());
    assert!(a.tau < a.minor_upper && a.minor_upper < a.cutoff);
}

#[test]
fn doubling_the_cutoff_stays_within_the_bound() {
    let x = 100.0;
    let params = derive_params(x).unwrap().with_eps(2.0).unwrap();
    let t = sieve_range(x).unwrap();
    let n = DoubleDouble::from_f64(params.n);
    let base = circle_integral(n, &params, &t, 1e-5).unwrap();
    let wide = circle_integral_to(n, &params, &t, 1e-5, Some(2.0 * base.cutoff)).unwrap();
    assert!(wide.trunc_err <= base.trunc_err);
    let gap = (wide.total - base.total).norm();
    assert!(gap <= base.error_bound() + wide.error_bound(), "gap {gap:e}");
}

#[test]
fn gamma_grows_with_the_window() {
    let t = sieve_range(300.0).unwrap();
    let n = DoubleDouble::from_f64(derive_params(300.0).unwrap().n);
    let mut last = 0.0;
    let mut last_w = 0;
    for &eps in &[0.01, 0.1, 0.5, 1.0, 4.0, 20.0] {
        let g = gamma_direct(n, eps, &t, None).unwrap();
        assert!(g.gamma >= last);
        assert!(g.witnesses >= last_w);
        last = g.gamma;
        last_w = g.witnesses;
    }
}

#[test]
fn witnesses_agree_with_the_solver() {
    let x = 400.0;
    let t = sieve_range(x).unwrap();
    for &n in &[4000.0, 4321.5, 5000.0] {
        let nd = DoubleDouble::from_f64(n);
        let best = best_triple(nd, &t).unwrap();
        for &eps in &[0.5 * best.deviation, 1.5 * best.deviation] {
            let g = gamma_direct(nd, eps, &t, None).unwrap();
            assert_eq!(g.witnesses > 0, best.deviation < eps, "N={n} eps={eps}");
        }
    }
}

#[test]
fn report_ties_the_pieces_together() {
    let x = 150.0;
    let params = derive_params(x).unwrap().with_eps(1.0).unwrap();
    let t = sieve_range(x).unwrap();
    let r = gamma_report(DoubleDouble::from_f64(params.n), &params, &t, 1e-5, true).unwrap();
    let g0 = r.direct.gamma0.unwrap();
    assert!(g0 <= r.direct.gamma * (1.0 + 1e-12));
    assert!(r.inversion_gap() <= r.arcs.error_bound());
    let th = r.theta.unwrap();
    assert!(th.theta.re > 0.0 && th.ratio > 0.0);
    assert!(r.normalized_major_gap().unwrap().is_finite());
}
