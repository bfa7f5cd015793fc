//! Numerical realization of the folding embedding
//! `E(S, 1, T) ↪ (B⁴(3λ) ∩ P(2λ, 2λ)) × ℂ`, `λ = S/(S+1)`, as an explicit
//! composite map with checks of its defining properties on sampled points.
//!
//! Points are `[x₁, y₁, x₂, y₂, x₃, y₃]` with `z_j = x_j + i·y_j`.

pub mod config;
pub mod cutoff;
pub mod fiber;
pub mod pipeline;
pub mod planar;
pub mod sampling;
pub mod sigma;
pub mod verify;

pub type Point6 = [f64; 6];

pub use config::{FoldingConfig, Layout};
pub use pipeline::{build_fiber_move, build_psi, build_sigma, build_tau, Embedding, StageId, StageMap, TraceRecord};
pub use planar::{Piece, PlanarRegion};
pub use sampling::sample_ellipsoid;
