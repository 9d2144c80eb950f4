//! Fixtures shared by the criterion benches.

use solvdiff_core::experiments::RandomizerRegime;
use solvdiff_core::mc::path_rng;
use solvdiff_core::DiscreteLogConcave;

use rand::Rng;

/// `n` distributions of `regime` with parameters drawn from stream 0 of `seed`.
pub fn regime_draws(regime: RandomizerRegime, n: usize, seed: u64) -> Vec<DiscreteLogConcave> {
    let mut rng = path_rng(seed, 0);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(1e-9..1.0);
            regime.distribution(u).expect("regime parameters are valid")
        })
        .collect()
}
