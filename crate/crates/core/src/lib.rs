//! Stabilized symplectic embedding capacities of ellipsoids into
//! `B^4(R) x C^(n-2)` and `P(R, R) x C^(n-2)`, computed with exact rational
//! arithmetic, together with a numerical realization of the multiple-folding
//! embedding `E(S, 1, T) -> (B^4(3λ) ∩ P(2λ, 2λ)) x C`.
//!
//! Module map:
//!
//! * [`exact_numbers`]: rationals, the odd-Fibonacci / Pell staircase
//!   sequences and the accumulation constants τ⁴ and σ².
//! * [`capacities`]: Ekeland–Hofer capacities, ECH capacity sequences used as
//!   a four-dimensional oracle, and bisection solvers for `c_B` and `c_P`.
//! * [`stabilized_bounds`]: fold upper bounds, obstruction lower bounds and the
//!   product-versus-fold comparison.
//! * [`folding`]: the explicit composite map and its certification.

pub mod capacities;
pub mod error;
pub mod exact_numbers;
pub mod folding;
pub mod stabilized_bounds;

pub use error::{Error, Result};
pub use exact_numbers::Rational;
