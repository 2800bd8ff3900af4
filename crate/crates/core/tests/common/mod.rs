#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uisearch::{ExtensionSpec, MarketParams};

/// A random parameter set inside the model's assumptions, with enough
/// discounting and benefit income that schedule increments stay well above
/// double precision over a 60-period horizon.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub params: MarketParams,
    pub belief: ExtensionSpec,
}

pub fn draws(count: usize, seed: u64) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let beta = rng.random_range(0.90..0.98);
            let z: f64 = rng.random_range(0.2..0.6);
            let c = rng.random_range(0.05..(0.9 - z).min(0.35));
            let n = rng.random_range(0..=15);
            let delta = rng.random_range(0.05..0.95);
            let len = rng.random_range(1..=25);
            Draw {
                params: MarketParams::new(beta, z, c, n).unwrap(),
                belief: ExtensionSpec::new(delta, len).unwrap(),
            }
        })
        .collect()
}

/// Reference calibration with z = c = 0.4025.
pub fn reference() -> (MarketParams, ExtensionSpec) {
    (
        MarketParams::new(0.95, 0.4025, 0.4025, 10).unwrap(),
        ExtensionSpec::new(0.5, 25).unwrap(),
    )
}

/// Closed-form uniform[0,1] reservation wage at state 0.
pub fn uniform_w0(beta: f64, z: f64) -> f64 {
    (1.0 - ((1.0 - beta) * (1.0 + beta - 2.0 * beta * z)).sqrt()) / beta
}

/// `a > b`, except that differences within a few ulps count as ties.
///
/// Gaps between two schedules shrink geometrically in `n` (by roughly
/// `β(1-δ)F` per step) and fall below double resolution for large `δ`;
/// such pairs are reported as ties. A real reversal still fails.
pub fn above_or_tied(a: f64, b: f64) -> Ordering {
    if a > b {
        Ordering::Above
    } else if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
        Ordering::Tied
    } else {
        Ordering::Reversed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Above,
    Tied,
    Reversed,
}
