//! Prime triples for the logarithmic inequality
//! `|p1 log p1 + p2 log p2 + p3 log p3 - N| < eps`, together with the
//! numerical machinery of its circle-method proof: exponential sums over
//! primes, the smoothing kernel, the arc decomposition and the auxiliary
//! inequalities, all measurable at desk scale.
//!
//! Module map:
//!
//! * [`scaling`]: `N <-> X`, the derived widths `eps`, `tau`, `K`, `k`.
//! * [`arith`]: prime windows with double-double phases, arithmetic tables.
//! * [`kernel`]: the smoothing function `psi` and its transform `Psi`.
//! * [`expsum`]: `S(alpha)`, `I(alpha)`, the Vaughan split and lemma checks.
//! * [`circle`]: `Gamma`, `Gamma_0` by enumeration and by Fourier inversion.
//! * [`solver`]: closest prime triples and pairs with certified deviations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod circle;
pub mod dd;
pub mod error;
pub mod expsum;
pub mod kernel;
pub mod precise;
pub mod quad;
pub mod scaling;
pub mod solver;

pub use arith::{build_tables, sieve_range, ArithTables, PrimeTable};
pub use dd::DoubleDouble;
pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use scaling::{derive_params, invert_ylogy, solve_x, CircleParams};
pub use solver::{best_pair, best_triple, certify, theorem_check, PairSolution, TripleSolution};
