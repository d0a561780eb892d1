use plogp::precise::{p_log_p, Fixed};
use plogp::solver::{
    best_triple_windowed, best_triple_with_budget, certify, certify_sum, triple_deviation, DEFAULT_SEARCH_STEPS,
};
use plogp::{best_pair, best_triple, sieve_range, theorem_check, DoubleDouble, Error, PrimeTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sorted-index brute force with the same total order as the solver.
fn brute_triple(n: DoubleDouble, t: &PrimeTable) -> (DoubleDouble, [usize; 3]) {
    let v = t.phases();
    let mut best: Option<(DoubleDouble, [usize; 3])> = None;
    for i in 0..v.len() {
        for j in i..v.len() {
            for k in j..v.len() {
                let d = triple_deviation(v, i, j, k, n);
                let better = match &best {
                    None => true,
                    Some((bd, bi)) => d.total_cmp(bd).then_with(|| [i, j, k].cmp(bi)).is_lt(),
                };
                if better {
                    best = Some((d, [i, j, k]));
                }
            }
        }
    }
    best.unwrap()
}

/// For every `i <= j`, the exact nearest `k >= j` by binary search.
fn pairwise_binary_search(n: DoubleDouble, t: &PrimeTable) -> DoubleDouble {
    let v = t.phases();
    let mut best = DoubleDouble::from_f64(f64::INFINITY);
    for i in 0..v.len() {
        for j in i..v.len() {
            let rest = n - v[i] - v[j];
            let pos = j + v[j..].partition_point(|w| w.total_cmp(&rest).is_lt());
            for k in [pos.saturating_sub(1).max(j), pos] {
                if k < v.len() {
                    let d = triple_deviation(v, i, j, k, n);
                    if d.total_cmp(&best).is_lt() {
                        best = d;
                    }
                }
            }
        }
    }
    best
}

#[test]
fn exhaustive_search_is_globally_optimal() {
    let t = sieve_range(300.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = t.phases();
    let (lo, hi) = ((v[0] + v[0] + v[0]).to_f64(), (v[v.len() - 1] * DoubleDouble::from_f64(3.0)).to_f64());
    for _ in 0..20 {
        let n = DoubleDouble::from_f64(rng.gen_range(lo - 50.0..hi + 50.0));
        let s = best_triple(n, &t).unwrap();
        let (d, [i, j, k]) = brute_triple(n, &t);
        let p = t.primes();
        assert_eq!((s.p1, s.p2, s.p3), (p[i], p[j], p[k]), "N={}", n.to_f64());
        assert_eq!(s.deviation, d.to_f64());
    }
}

#[test]
fn search_matches_binary_search_oracle_at_larger_scale() {
    let t = sieve_range(4e4).unwrap();
    for &n in &[3.0e5, 3.5e5, 3.9e5, 351_234.567_891] {
        let nd = DoubleDouble::from_f64(n);
        let s = best_triple(nd, &t).unwrap();
        let want = pairwise_binary_search(nd, &t);
        assert_eq!(s.deviation, want.to_f64(), "N={n}");
    }
}

#[test]
fn triple_built_from_its_own_phases() {
    let t = sieve_range(20.0).unwrap();
    let v13 = p_log_p(13, 200).mul_int(3);
    let n = DoubleDouble::from_parts(v13.to_f64(), v13.sub(&Fixed::from_f64(v13.to_f64(), 200)).to_f64());
    let s = best_triple(n, &t).unwrap();
    assert_eq!((s.p1, s.p2, s.p3), (13, 13, 13));
    let dev: f64 = s.certificate.as_ref().unwrap().deviation.parse().unwrap();
    assert!(dev.abs() <= 1e-25);
}

#[test]
fn pair_built_from_its_own_phases() {
    let t = sieve_range(20.0).unwrap();
    let v = p_log_p(17, 200).mul_int(2);
    let n = DoubleDouble::from_parts(v.to_f64(), v.sub(&Fixed::from_f64(v.to_f64(), 200)).to_f64());
    let s = best_pair(n, &t).unwrap();
    assert_eq!((s.p1, s.p2), (17, 17));
    let dev: f64 = s.certificate.as_ref().unwrap().deviation.parse().unwrap();
    assert!(dev.abs() <= 1e-25);
}

#[test]
fn pair_matches_brute_force() {
    let t = sieve_range(2000.0).unwrap();
    let v = t.phases();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = DoubleDouble::from_f64(rng.gen_range(1.0e4..3.2e4));
        let s = best_pair(n, &t).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..v.len() {
            for j in i..v.len() {
                best = best.min((v[i] + v[j] - n).abs().to_f64());
            }
        }
        assert_eq!(s.deviation, best);
        assert!(s.p1 <= s.p2);
    }
}

#[test]
fn certificate_is_permutation_invariant() {
    let target = DoubleDouble::from_f64(1234.5);
    let t = sieve_range(100.0).unwrap();
    let s = best_triple(target, &t).unwrap();
    let approx = s.sum_phase;
    let perms = [[s.p1, s.p2, s.p3], [s.p3, s.p1, s.p2], [s.p2, s.p3, s.p1]];
    let certs: Vec<_> = perms.iter().map(|p| certify_sum(p, target, approx, 45).unwrap()).collect();
    assert!(certs.windows(2).all(|w| w[0].deviation == w[1].deviation));
    let again = certify(s.clone(), 60).unwrap();
    let c = again.certificate.unwrap();
    assert_eq!(c.digits, 60);
    // the certified value agrees with the search value to 1e-18 N
    let certified: f64 = c.deviation.parse().unwrap();
    assert!((certified.abs() - s.deviation).abs() <= 1e-18 * 1234.5);
}

#[test]
fn tiny_override_is_reported_unsatisfied() {
    let c = theorem_check(1e6, Some(1e-15), DEFAULT_SEARCH_STEPS).unwrap();
    assert!(!c.solution.satisfied);
    assert!(c.solution.exhaustive);
    assert_eq!(c.solution.eps_bound, 1e-15);
    let plain = theorem_check(1e6, None, DEFAULT_SEARCH_STEPS).unwrap();
    assert!(plain.solution.satisfied);
    // the override changes the verdict, not the witness
    assert_eq!(
        (c.solution.p1, c.solution.p2, c.solution.p3),
        (plain.solution.p1, plain.solution.p2, plain.solution.p3)
    );
}

#[test]
fn witness_lies_in_the_window() {
    let c = theorem_check(2e5, None, DEFAULT_SEARCH_STEPS).unwrap();
    let s = &c.solution;
    let x = c.params.x;
    for p in [s.p1, s.p2, s.p3] {
        assert!((p as f64) > 0.5 * x && (p as f64) <= x);
        assert!((2..).take_while(|d| d * d <= p).all(|d| p % d != 0));
    }
    assert!(s.p1 <= s.p2 && s.p2 <= s.p3);
}

#[test]
fn windowed_search_with_full_budget_is_exhaustive() {
    let t = sieve_range(500.0).unwrap();
    let n = DoubleDouble::from_f64(6500.0);
    let full = best_triple(n, &t).unwrap();
    let win = best_triple_windowed(n, &t, 1e12).unwrap();
    assert!(win.exhaustive);
    assert_eq!((win.p1, win.p2, win.p3), (full.p1, full.p2, full.p3));
    let narrow = best_triple_windowed(n, &t, 200.0).unwrap();
    assert!(!narrow.exhaustive);
    assert!(narrow.deviation >= full.deviation);
}

#[test]
fn budget_is_enforced() {
    let t = sieve_range(5000.0).unwrap();
    let r = best_triple_with_budget(DoubleDouble::from_f64(1e5), &t, 10.0);
    assert!(matches!(r, Err(Error::Capacity { .. })));
}

#[test]
fn result_does_not_depend_on_thread_count() {
    let t = sieve_range(3e4).unwrap();
    let n = DoubleDouble::from_f64(8.0e5);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (best_triple(n, &t).unwrap(), best_pair(n.div_f64(1.5), &t).unwrap()))
    };
    let (a, pa) = run(1);
    for threads in [2, 8] {
        let (b, pb) = run(threads);
        assert_eq!(a, b);
        assert_eq!(pa, pb);
    }
}
