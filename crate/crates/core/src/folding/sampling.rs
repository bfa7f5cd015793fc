//! Seeded low-discrepancy sampling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Point6;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while k > 0 {
        out += f * (k % base) as f64;
        k /= base;
        f *= inv;
    }
    out
}

/// Halton points in `[0,1)^D` with a seeded Cranley–Patterson rotation.
#[derive(Debug, Clone)]
pub struct Halton<const D: usize> {
    shift: [f64; D],
    next: u64,
}

impl<const D: usize> Halton<D> {
    pub fn new(seed: u64) -> Self {
        assert!(D <= PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Halton { shift: std::array::from_fn(|_| rng.gen::<f64>()), next: 1 }
    }
}

impl<const D: usize> Iterator for Halton<D> {
    type Item = [f64; D];

    fn next(&mut self) -> Option<[f64; D]> {
        let k = self.next;
        self.next += 1;
        Some(std::array::from_fn(|j| (radical_inverse(k, PRIMES[j]) + self.shift[j]).fract()))
    }
}

/// `Σ π|z_j|²/a_j` for `a = (S, 1, T)`.
pub fn ellipsoid_gauge(p: &Point6, s: f64, t: f64) -> f64 {
    let a = |x: f64, y: f64| PI * (x * x + y * y);
    a(p[0], p[1]) / s + a(p[2], p[3]) + a(p[4], p[5]) / t
}

/// `count` points of `shrink · E(S, 1, T)` by rejection from the bounding box.
pub fn sample_ellipsoid(s: f64, t: f64, shrink: f64, count: usize, seed: u64) -> Vec<Point6> {
    let half = [s, 1.0, t].map(|a| shrink * (a / PI).sqrt());
    let mut out = Vec::with_capacity(count);
    for u in Halton::<6>::new(seed) {
        if out.len() == count {
            break;
        }
        let p: Point6 = std::array::from_fn(|j| (2.0 * u[j] - 1.0) * half[j / 2]);
        if ellipsoid_gauge(&p, s, t) <= shrink * shrink {
            out.push(p);
        }
    }
    out
}
