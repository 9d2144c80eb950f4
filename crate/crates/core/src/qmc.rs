//! Sobol points with random digital shifts.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use crate::error::{Error, Result};

fn direction_numbers() -> &'static JoeKuoD6 {
    static PARAMS: OnceLock<JoeKuoD6> = OnceLock::new();
    PARAMS.get_or_init(JoeKuoD6::standard)
}

/// Largest dimension the bundled direction numbers support.
pub fn max_dimensions() -> usize {
    direction_numbers().max_dims
}

/// The first `n_points` points of a `dims`-dimensional Sobol sequence,
/// stored as 32-bit integers.
#[derive(Debug, Clone)]
pub struct SobolPoints {
    dims: usize,
    n_points: usize,
    raw: Vec<u32>,
}

// Keeps shift streams apart from path streams built from the same seed.
const SHIFT_DOMAIN: u64 = 0x5eed_0f50_b01d;

const SCALE: f64 = 1.0 / 4_294_967_296.0;

impl SobolPoints {
    pub fn new(dims: usize, n_points: usize) -> Result<Self> {
        let available = max_dimensions();
        if dims == 0 || dims > available {
            return Err(Error::DimensionBudget { needed: dims, available });
        }
        let mut raw = Vec::with_capacity(dims * n_points);
        for p in Sobol::<u32>::new(dims, direction_numbers()).take(n_points) {
            raw.extend_from_slice(&p);
        }
        if raw.len() != dims * n_points {
            return Err(Error::invalid(format!("Sobol sequence shorter than {n_points} points")));
        }
        Ok(SobolPoints { dims, n_points, raw })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Point `i` under the digital shift `shift`, written to `out` as
    /// values in (0, 1).
    pub fn shifted_point(&self, i: usize, shift: &DigitalShift, out: &mut [f64]) {
        let row = &self.raw[i * self.dims..(i + 1) * self.dims];
        for ((o, &x), &s) in out.iter_mut().zip(row).zip(&shift.0) {
            *o = ((x ^ s) as f64 + 0.5) * SCALE;
        }
    }
}

/// One randomization: an XOR mask per coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitalShift(Vec<u32>);

impl DigitalShift {
    /// Shift number `index` derived from `seed`.
    pub fn new(dims: usize, seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SHIFT_DOMAIN);
        rng.set_stream(index);
        DigitalShift((0..dims).map(|_| rng.random::<u32>()).collect())
    }

    pub fn zero(dims: usize) -> Self {
        DigitalShift(vec![0; dims])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_test;

    #[test]
    fn first_points_are_van_der_corput_in_dim_one() {
        let p = SobolPoints::new(3, 8).unwrap();
        let mut out = [0.0; 3];
        let want = [0.0, 0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125];
        let z = DigitalShift::zero(3);
        for (i, &w) in want.iter().enumerate() {
            p.shifted_point(i, &z, &mut out);
            assert!((out[0] - w).abs() < 1e-9, "i={i}: {}", out[0]);
        }
    }

    #[test]
    fn shifted_marginals_uniform() {
        let n = 4096;
        let p = SobolPoints::new(300, n).unwrap();
        let shift = DigitalShift::new(300, 42, 3);
        let mut cols = vec![Vec::with_capacity(n); 300];
        let mut out = vec![0.0; 300];
        for i in 0..n {
            p.shifted_point(i, &shift, &mut out);
            for (c, &u) in cols.iter_mut().zip(&out) {
                assert!(u > 0.0 && u < 1.0);
                c.push(u);
            }
        }
        for j in [0, 1, 7, 63, 128, 256, 299] {
            let (_, pv) = ks_test(&mut cols[j], |u| u);
            assert!(pv > 0.01, "dim {j}: p = {pv}");
        }
    }

    #[test]
    fn dimension_budget() {
        assert!(matches!(
            SobolPoints::new(max_dimensions() + 1, 4),
            Err(Error::DimensionBudget { .. })
        ));
    }
}
