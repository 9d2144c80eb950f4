//! Sources of random variates. Path samplers draw uniforms, discrete
//! randomizers and gamma variates through [`VariateSource`], so the same code
//! runs on pseudo-random streams and on quasi-random points.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};

use crate::discrete::DiscreteLogConcave;
use crate::specfun::inv_reg_gamma_lower;

pub trait VariateSource {
    /// Uniform on the open interval (0, 1).
    fn uniform(&mut self) -> f64;

    /// Draw from a discrete randomizer.
    fn discrete(&mut self, dist: &DiscreteLogConcave) -> u64;

    /// Gamma variate with the given shape and rate.
    fn gamma(&mut self, shape: f64, rate: f64) -> f64;

    /// Consume `n` coordinates without using them. Only meaningful for
    /// fixed-layout quasi-random points.
    fn skip(&mut self, n: usize);
}

/// Which sampler handles discrete randomizers on a pseudo-random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiscreteMethod {
    Rejection,
    #[default]
    Chopdown,
}

/// Pseudo-random variates from any `rand` generator.
#[derive(Debug, Clone)]
pub struct PseudoRandom<R> {
    pub rng: R,
    pub method: DiscreteMethod,
}

impl<R: Rng> PseudoRandom<R> {
    pub fn new(rng: R) -> Self {
        PseudoRandom {
            rng,
            method: DiscreteMethod::default(),
        }
    }

    pub fn with_method(rng: R, method: DiscreteMethod) -> Self {
        PseudoRandom { rng, method }
    }
}

impl<R: Rng> VariateSource for PseudoRandom<R> {
    #[inline]
    fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    #[inline]
    fn discrete(&mut self, dist: &DiscreteLogConcave) -> u64 {
        match self.method {
            DiscreteMethod::Rejection => dist.sample_rejection(&mut self.rng).value,
            DiscreteMethod::Chopdown => dist.sample_chopdown(&mut self.rng).value,
        }
    }

    #[inline]
    fn gamma(&mut self, shape: f64, rate: f64) -> f64 {
        match Gamma::new(shape, 1.0 / rate) {
            Ok(g) => g.sample(&mut self.rng),
            Err(_) => f64::NAN,
        }
    }

    fn skip(&mut self, _n: usize) {}
}

/// One quasi-random point read coordinate by coordinate. Every variate is
/// produced by inversion, one coordinate each.
#[derive(Debug, Clone)]
pub struct QmcPoint<'a> {
    coords: &'a [f64],
    cursor: usize,
}

impl<'a> QmcPoint<'a> {
    pub fn new(coords: &'a [f64]) -> Self {
        QmcPoint { coords, cursor: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }

    #[inline]
    fn next(&mut self) -> f64 {
        let u = *self
            .coords
            .get(self.cursor)
            .expect("quasi-random point exhausted; dimension budget was not checked");
        self.cursor += 1;
        u
    }
}

impl VariateSource for QmcPoint<'_> {
    #[inline]
    fn uniform(&mut self) -> f64 {
        self.next()
    }

    #[inline]
    fn discrete(&mut self, dist: &DiscreteLogConcave) -> u64 {
        let u = self.next();
        dist.invert(u)
    }

    #[inline]
    fn gamma(&mut self, shape: f64, rate: f64) -> f64 {
        let u = self.next();
        inv_reg_gamma_lower(shape, u).unwrap_or(f64::NAN) / rate
    }

    fn skip(&mut self, n: usize) {
        self.cursor += n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qmc_point_reads_in_order() {
        let pts = [0.1, 0.5, 0.9, 0.3];
        let mut q = QmcPoint::new(&pts);
        assert_eq!(q.uniform(), 0.1);
        q.skip(1);
        let g = q.gamma(1.0, 2.0);
        assert!((g - (-(0.1f64).ln()) / 2.0).abs() < 1e-12);
        assert_eq!(q.consumed(), 3);
        let d = DiscreteLogConcave::poisson(2.0).unwrap();
        assert_eq!(q.discrete(&d), d.invert(0.3));
    }

    #[test]
    fn pseudo_gamma_mean() {
        let mut src = PseudoRandom::new(ChaCha8Rng::seed_from_u64(3));
        let n = 50_000;
        let m: f64 = (0..n).map(|_| src.gamma(0.3, 2.0)).sum::<f64>() / n as f64;
        // mean 0.15, sd sqrt(0.3)/2
        assert!((m - 0.15).abs() < 4.0 * 0.3f64.sqrt() / 2.0 / (n as f64).sqrt());
    }
}
