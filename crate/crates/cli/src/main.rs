//! `plogp`: command-line front end for the prime-triple solver and the
//! circle-method measurements.
//!
//! Every run prints one JSON document (or CSV for grid scans) that starts
//! with a manifest: tool version, the echoed configuration, the derived
//! parameters and timing. Everything outside `timing` is deterministic.

mod report;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

use plogp::circle::{circle_integral, gamma_report};
use plogp::expsum::{
    derivative_test_check, l2_integrals, lemma6_deviation, mangoldt_sum, minor_arc_scan,
    phase_integral, phase_integral_floor, prime_sum, prime_sum_scan, vaughan_decompose, vdc_check,
};
use plogp::kernel::{check_bound, psi_eval};
use plogp::solver::{best_pair, theorem_check, DEFAULT_SEARCH_STEPS};
use plogp::arith::lemma5_ratios;
use plogp::{build_tables, derive_params, sieve_range, CircleParams, DoubleDouble, Error, KernelSpec, Result};

use report::{complex, params_json, real, solution_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Closest prime triple to N with certificate.
    Solve,
    /// Closest prime pair to N.
    Pair,
    /// Gamma, Gamma_0 both ways, and Theta.
    Gamma,
    /// Arc split of the circle integral.
    Arcs,
    /// S, I and the von Mangoldt sums at one frequency.
    Sums,
    /// Kernel bound sweep.
    Kernel,
    /// Vaughan decomposition at one frequency.
    Vaughan,
    /// Lemma monitors at one scale.
    Lemmas,
    /// S over a log-spaced grid of the minor arc.
    Scan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "plogp", version, about = "Prime triples near N in p log p, and circle-method diagnostics")]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Target N.
    #[arg(long = "N", alias = "n")]
    n: Option<f64>,

    /// Scale X (primes in (X/2, X]).
    #[arg(long = "X", alias = "x")]
    x: Option<f64>,

    /// Replaces the derived eps.
    #[arg(long)]
    eps_override: Option<f64>,

    /// Grid size for scans and sweeps.
    #[arg(long, default_value_t = 1000)]
    grid: usize,

    /// Absolute tolerance for quadratures.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    #[arg(long, env = "PLOGP_THREADS")]
    threads: Option<usize>,

    /// Seed for randomized property sweeps.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out_format: OutFormat,

    #[arg(long)]
    out_path: Option<PathBuf>,

    /// Kernel width (kernel command).
    #[arg(long)]
    eps: Option<f64>,

    /// Kernel order (kernel command).
    #[arg(long)]
    k: Option<u32>,

    /// Frequency (sums, vaughan).
    #[arg(long)]
    alpha: Option<f64>,

    /// Pointer-move budget of the exhaustive triple search.
    #[arg(long, default_value_t = DEFAULT_SEARCH_STEPS)]
    max_steps: f64,
}

impl Cli {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Domain(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.grid < 2 {
            return Err(Error::Domain("--grid must be at least 2".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Domain("--threads must be at least 1".into()));
        }
        if self.n.is_some() && self.x.is_some() {
            return Err(Error::Domain("give either --N or --X, not both".into()));
        }
        Ok(())
    }

    fn config_echo(&self) -> Value {
        let opt = |v: Option<f64>| v.map_or(Value::Null, real);
        json!({
            "command": format!("{:?}", self.command).to_lowercase(),
            "N": opt(self.n),
            "X": opt(self.x),
            "eps_override": opt(self.eps_override),
            "grid": self.grid,
            "tol": real(self.tol),
            "threads": self.threads,
            "seed": self.seed,
            "out_format": format!("{:?}", self.out_format).to_lowercase(),
            "eps": opt(self.eps),
            "k": self.k,
            "alpha": opt(self.alpha),
            "max_steps": real(self.max_steps),
        })
    }

    /// Parameters at the requested scale: `--X` wins, else `X` from `--N`.
    fn params(&self) -> Result<CircleParams> {
        let mut p = match (self.x, self.n) {
            (Some(x), _) => derive_params(x)?,
            (None, Some(n)) => CircleParams::for_target(n)?,
            (None, None) => return Err(Error::Domain("this command needs --N or --X".into())),
        };
        if let Some(e) = self.eps_override {
            p = p.with_eps(e)?;
        }
        Ok(p)
    }

    /// Target: `--N`, else the `N` belonging to `--X`.
    fn target(&self, p: &CircleParams) -> DoubleDouble {
        DoubleDouble::from_f64(self.n.unwrap_or(p.n))
    }
}

enum Output {
    Json(Value),
    Csv { header: &'static str, rows: Vec<String>, result: Value },
}

fn run(cli: &Cli) -> Result<(Option<CircleParams>, Output)> {
    match cli.command {
        Command::Solve => {
            let n = match (cli.n, cli.x) {
                (Some(n), _) => n,
                (None, Some(x)) => derive_params(x)?.n,
                _ => return Err(Error::Domain("solve needs --N or --X".into())),
            };
            let check = theorem_check(n, cli.eps_override, cli.max_steps)?;
            Ok((Some(check.params), Output::Json(json!({ "solution": solution_json(&check.solution) }))))
        }
        Command::Pair => {
            let p = cli.params()?;
            let n = cli.target(&p);
            let table = sieve_range(p.x)?;
            let s = best_pair(n, &table)?;
            let cert = s.certificate.as_ref();
            Ok((
                Some(p),
                Output::Json(json!({ "pair": {
                    "p1": s.p1,
                    "p2": s.p2,
                    "sum_phase": cert.map(|c| c.sum_phase.clone()),
                    "deviation": cert.map(|c| c.deviation.clone()),
                    "deviation_f64": real(s.deviation),
                    "cert_digits": cert.map(|c| c.digits),
                    "eps": real(p.eps),
                    "satisfied": s.deviation < p.eps,
                }})),
            ))
        }
        Command::Gamma => {
            let p = cli.params()?;
            let n = cli.target(&p);
            let table = sieve_range(p.x)?;
            let r = gamma_report(n, &p, &table, cli.tol, true)?;
            let theta = r.theta.expect("requested");
            Ok((
                Some(p),
                Output::Json(json!({ "gamma_report": {
                    "gamma_direct": real(r.direct.gamma),
                    "gamma0_direct": real(r.direct.gamma0.unwrap_or(f64::NAN)),
                    "witness_count": r.direct.witnesses,
                    "gamma0_integral": complex(r.arcs.total),
                    "gamma1": complex(r.arcs.major),
                    "gamma2": complex(r.arcs.minor),
                    "gamma3": complex(r.arcs.tail),
                    "theta_tau": complex(theta.theta_tau),
                    "theta": complex(theta.theta),
                    "theta_ratio": real(theta.ratio),
                    "theta_outside_bound": real(theta.outside_bound),
                    "quadrature_err": real(r.arcs.quad_err),
                    "truncation_err": real(r.arcs.trunc_err),
                    "theta_quadrature_err": real(theta.quad_err),
                    "theta_truncation_err": real(theta.trunc_err),
                    "cutoff": real(r.arcs.cutoff),
                    "inversion_gap": real(r.inversion_gap()),
                    "normalized_major_gap": r.normalized_major_gap().map(real),
                    "nodes": r.arcs.nodes,
                }})),
            ))
        }
        Command::Arcs => {
            let p = cli.params()?;
            let n = cli.target(&p);
            let table = sieve_range(p.x)?;
            let a = circle_integral(n, &p, &table, cli.tol)?;
            let [r1, r2, r3] = a.ratios(&p);
            Ok((
                Some(p),
                Output::Json(json!({ "arcs": {
                    "gamma1": complex(a.major),
                    "gamma2": complex(a.minor),
                    "gamma3": complex(a.tail),
                    "gamma0_integral": complex(a.total),
                    "tau": real(a.tau),
                    "minor_upper": real(a.minor_upper),
                    "cutoff": real(a.cutoff),
                    "quadrature_err": real(a.quad_err),
                    "truncation_err": real(a.trunc_err),
                    "ratio_gamma1": real(r1),
                    "ratio_gamma2": real(r2),
                    "abs_gamma3": real(r3),
                    "nodes": a.nodes,
                }})),
            ))
        }
        Command::Sums => {
            let p = cli.params()?;
            let alpha = cli.alpha.unwrap_or(p.tau);
            let table = sieve_range(p.x)?;
            let tables = build_tables(p.x.floor() as usize)?;
            let s = prime_sum(alpha, &table);
            let tol = cli.tol.max(4.0 * phase_integral_floor(alpha, p.x));
            let i = phase_integral(alpha, p.x, tol)?;
            let plain = mangoldt_sum(alpha, p.x, &tables, false)?;
            let shifted = mangoldt_sum(alpha, p.x, &tables, true)?;
            Ok((
                Some(p),
                Output::Json(json!({ "sums": {
                    "alpha": real(alpha),
                    "S": complex(s.value),
                    "S_abs_err": real(s.abs_err),
                    "n_terms": s.n_terms,
                    "I": complex(i.value),
                    "I_abs_err": real(i.abs_err),
                    "lambda_sum": complex(plain),
                    "lambda_sum_shifted": complex(shifted),
                    "prime_power_gap": real((s.value - plain).norm()),
                    "shift_gap": real(shifted.norm() - plain.norm()),
                }})),
            ))
        }
        Command::Kernel => {
            let eps = cli.eps.or(cli.eps_override).ok_or_else(|| Error::Domain("kernel needs --eps".into()))?;
            let k = cli.k.ok_or_else(|| Error::Domain("kernel needs --k".into()))?;
            let spec = KernelSpec::new(eps, k)?;
            // sweep x over [0, 8 a] with a = 1/(pi delta), where all three bounds take turns
            let top = 8.0 * spec.decay_scale();
            let mut rows = Vec::with_capacity(cli.grid);
            let mut all_ok = true;
            for i in 0..cli.grid {
                let x = top * i as f64 / (cli.grid - 1) as f64;
                let (lhs, rhs, ok) = check_bound(&spec, x);
                all_ok &= ok;
                rows.push((x, lhs, rhs, ok));
            }
            let y_grid = 2 * cli.grid;
            let mut sandwich_ok = true;
            for i in 0..y_grid {
                let y = 1.25 * eps * i as f64 / (y_grid - 1) as f64;
                let v = psi_eval(&spec, y);
                let lower = if y <= 0.75 * eps { 1.0 } else { 0.0 };
                let upper = if y < eps { 1.0 } else { 0.0 };
                sandwich_ok &= lower <= v && v <= upper;
            }
            let summary = json!({ "all_ok": all_ok, "sandwich_ok": sandwich_ok, "rows": rows.len() });
            let out = match cli.out_format {
                OutFormat::Json => Output::Json(json!({ "kernel": {
                    "summary": summary,
                    "rows": rows.iter().map(|(x, l, r, ok)| json!({
                        "x": real(*x), "lhs": real(*l), "rhs": real(*r), "ok": ok
                    })).collect::<Vec<_>>(),
                }})),
                OutFormat::Csv => Output::Csv {
                    header: "x,lhs,rhs,ok",
                    rows: rows
                        .iter()
                        .map(|(x, l, r, ok)| format!("{:.16e},{:.16e},{:.16e},{ok}", x, l, r))
                        .collect(),
                    result: summary,
                },
            };
            Ok((None, out))
        }
        Command::Vaughan => {
            let p = cli.params()?;
            let alpha = cli.alpha.unwrap_or(0.0);
            let tables = build_tables(p.x.floor() as usize)?;
            let v = vaughan_decompose(alpha, p.x, &tables)?;
            Ok((
                Some(p),
                Output::Json(json!({ "vaughan": {
                    "alpha": real(alpha),
                    "u1": complex(v.u1),
                    "u2": complex(v.u2),
                    "u3": complex(v.u3),
                    "u4": complex(v.u4),
                    "s1_direct": complex(v.s1_direct),
                    "cutoff_u": real(v.cutoff_u),
                    "cutoff_v": real(v.cutoff_v),
                    "residual": real(v.residual()),
                }})),
            ))
        }
        Command::Lemmas => {
            let p = cli.params()?;
            let x = p.x;
            let table = sieve_range(x)?;
            let (r1, r2) = lemma5_ratios(x)?;
            let l6 = lemma6_deviation(x, cli.grid, &table)?;
            let l9 = minor_arc_scan(x, cli.grid, &table)?;
            let l8 = l2_integrals(x, 0, &table)?;
            let (dlhs, drhs, dok) = derivative_test_check(p.tau, x)?;
            let (vdc_trials, vdc_ok) = vdc_sweep(cli.seed, 100)?;
            Ok((
                Some(p),
                Output::Json(json!({ "lemmas": {
                    "lemma5": { "r1": real(r1), "r2": real(r2) },
                    "lemma6": {
                        "max_dev": real(l6.max_dev),
                        "argmax_alpha": real(l6.argmax_alpha),
                        "normalized": real(l6.normalized),
                        "dev_at_zero": l6.dev_at_zero.map(real),
                        "points": l6.points,
                    },
                    "lemma8": {
                        "a": real(l8.a), "b": real(l8.b), "c": real(l8.c),
                        "a_err": real(l8.a_err), "b_err": real(l8.b_err), "c_err": real(l8.c_err),
                        "ratios": l8.ratios.iter().map(|r| real(*r)).collect::<Vec<_>>(),
                        "c_by_quadrature": l8.c_by_quadrature,
                    },
                    "lemma9": {
                        "sup_s": real(l9.sup_s),
                        "argmax_alpha": real(l9.argmax_alpha),
                        "normalized": real(l9.normalized),
                        "lower": real(l9.lower),
                        "upper": real(l9.upper),
                    },
                    "lemma4": { "alpha": real(p.tau), "lhs": real(dlhs), "rhs": real(drhs), "ok": dok },
                    "lemma3": { "trials": vdc_trials, "all_ok": vdc_ok, "seed": cli.seed },
                }})),
            ))
        }
        Command::Scan => {
            let p = cli.params()?;
            let table = sieve_range(p.x)?;
            let (lo, hi) = (p.tau, p.minor_arc_upper());
            let ratio = (hi / lo).ln();
            let alphas: Vec<f64> = (0..cli.grid)
                .map(|i| lo * (ratio * i as f64 / (cli.grid - 1) as f64).exp())
                .collect();
            let samples = prime_sum_scan(&alphas, &table);
            let rows: Vec<(f64, f64, f64, f64, f64)> = samples
                .iter()
                .map(|s| (s.alpha, s.value.re, s.value.im, s.value.norm(), s.abs_err))
                .collect();
            let summary = json!({ "points": rows.len(), "lower": real(lo), "upper": real(hi) });
            let out = match cli.out_format {
                OutFormat::Json => Output::Json(json!({ "scan": {
                    "summary": summary,
                    "rows": rows.iter().map(|(a, re, im, ab, e)| json!({
                        "alpha": real(*a), "re": real(*re), "im": real(*im), "abs": real(*ab), "err": real(*e)
                    })).collect::<Vec<_>>(),
                }})),
                OutFormat::Csv => Output::Csv {
                    header: "alpha,re,im,abs,err",
                    rows: rows
                        .iter()
                        .map(|(a, re, im, ab, e)| format!("{a:.16e},{re:.16e},{im:.16e},{ab:.16e},{e:.16e}"))
                        .collect(),
                    result: summary,
                },
            };
            Ok((Some(p), out))
        }
    }
}

/// Van der Corput checks on seeded random sequences of random lengths.
fn vdc_sweep(seed: u64, trials: usize) -> Result<(usize, bool)> {
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut all_ok = true;
    for _ in 0..trials {
        let len = rng.gen_range(1..200);
        let seq: Vec<Complex64> = (0..len)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let q = rng.gen_range(1..=len + 5);
        all_ok &= vdc_check(&seq, q)?.2;
    }
    Ok((trials, all_ok))
}

fn emit(cli: &Cli, params: Option<CircleParams>, out: Output, started: Instant) -> Result<()> {
    let mut manifest = Map::new();
    manifest.insert("tool".into(), json!("plogp"));
    manifest.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    manifest.insert("config".into(), cli.config_echo());
    if let Some(p) = params {
        manifest.insert("X".into(), real(p.x));
        manifest.insert("params".into(), params_json(&p));
    }
    manifest.insert("timing".into(), report::timing(started));
    let text = match out {
        Output::Json(result) => {
            let mut doc = Map::new();
            doc.insert("manifest".into(), Value::Object(manifest));
            doc.insert("result".into(), result);
            serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable") + "\n"
        }
        Output::Csv { header, rows, result } => {
            manifest.insert("summary".into(), result);
            let mut s = format!("# {}\n{header}\n", Value::Object(manifest));
            for r in rows {
                s.push_str(&r);
                s.push('\n');
            }
            s
        }
    };
    match &cli.out_path {
        Some(path) => File::create(path)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = cli.validate().and_then(|_| {
        if let Some(t) = cli.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
        }
        if cli.out_format == OutFormat::Csv && !matches!(cli.command, Command::Scan | Command::Kernel) {
            return Err(Error::Domain("CSV output is only available for scan and kernel".into()));
        }
        let (params, out) = run(&cli)?;
        emit(&cli, params, out, started)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plogp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
