//! Seeded random admissible potentials.

use crate::geometry::{Background, RadialFunction};
use crate::spectral::chebyshev_series;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum positivity margin of every sampled potential.
pub const MIN_MARGIN: f64 = 0.2;

const MODES: usize = 5;

/// Low-order Chebyshev modes in the moment coordinate, shrunk until the
/// metric stays uniformly positive.
pub fn admissible_potential<R: Rng + ?Sized>(bg: &Background, rng: &mut R) -> RadialFunction {
    let (lo, hi) = (bg.grid().lo(), bg.grid().hi());
    let mut coeffs = vec![0.0; MODES + 1];
    for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
        *c = rng.gen_range(-1.0..1.0) / k as f64;
    }
    coeffs[0] = rng.gen_range(-1.0..1.0);
    let base = bg.sample(|t| {
        let x = (2.0 * t - lo - hi) / (hi - lo);
        chebyshev_series(&coeffs, x)
    });
    let mut amp: f64 = rng.gen_range(0.4..1.2);
    loop {
        let phi = amp * &base;
        if bg.positivity_margin(&phi) >= MIN_MARGIN {
            return phi;
        }
        amp *= 0.8;
    }
}

pub fn potentials(bg: &Background, seed: u64, count: usize) -> Vec<RadialFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| admissible_potential(bg, &mut rng)).collect()
}

/// Pairs `(φ, ψ)` drawn from one stream.
pub fn potential_pairs(
    bg: &Background,
    seed: u64,
    count: usize,
) -> Vec<(RadialFunction, RadialFunction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = admissible_potential(bg, &mut rng);
            let b = admissible_potential(bg, &mut rng);
            (a, b)
        })
        .collect()
}
