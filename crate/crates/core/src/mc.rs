//! Payoffs and the plain Monte Carlo, randomized quasi-Monte Carlo and
//! weighted estimators.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypergeo::{ExactSampler, HypergeometricModel, WeightedSampler};
use crate::qmc::{DigitalShift, SobolPoints};
use crate::sqb::{PathSkeleton, Scheme, SqbParams, TimeGrid};
use crate::stats::mean_variance;
use crate::transforms::{CevSampler, CirSampler};
use crate::variates::{DiscreteMethod, PseudoRandom, QmcPoint, VariateSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payoff {
    AsianCall,
    AsianPut,
    LookbackCall,
    LookbackPut,
}

impl Payoff {
    pub const ALL: [Payoff; 4] = [Payoff::AsianCall, Payoff::AsianPut, Payoff::LookbackCall, Payoff::LookbackPut];

    pub fn name(&self) -> &'static str {
        match self {
            Payoff::AsianCall => "asian_call",
            Payoff::AsianPut => "asian_put",
            Payoff::LookbackCall => "lookback_call",
            Payoff::LookbackPut => "lookback_put",
        }
    }

    pub fn parse(s: &str) -> Option<Payoff> {
        Payoff::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase().replace('-', "_"))
    }
}

impl std::fmt::Display for Payoff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which observations enter the Asian average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AveragingWindow {
    /// A_N = (F_1 + … + F_N) / N.
    #[default]
    Monitoring,
    /// A_N = (F_0 + F_1 + … + F_N) / (N + 1).
    WithSpot,
}

impl AveragingWindow {
    pub fn name(&self) -> &'static str {
        match self {
            AveragingWindow::Monitoring => "monitoring",
            AveragingWindow::WithSpot => "with_spot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "monitoring" => Some(AveragingWindow::Monitoring),
            "with_spot" => Some(AveragingWindow::WithSpot),
            _ => None,
        }
    }
}

/// A discretely monitored option on the uniform grid t_i = iT/N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub payoff: Payoff,
    pub strike: f64,
    pub expiry: f64,
    pub observations: usize,
    pub rate: f64,
    pub averaging: AveragingWindow,
}

impl OptionSpec {
    pub fn new(payoff: Payoff, strike: f64, expiry: f64, observations: usize, rate: f64) -> Result<Self> {
        if matches!(payoff, Payoff::AsianCall | Payoff::AsianPut) && !(strike > 0.0) {
            return Err(Error::invalid(format!("strike {strike} must be positive")));
        }
        if !(expiry > 0.0) || observations == 0 || !rate.is_finite() {
            return Err(Error::invalid(format!(
                "need T > 0, N >= 1 and finite r; got {expiry}, {observations}, {rate}"
            )));
        }
        Ok(OptionSpec {
            payoff,
            strike,
            expiry,
            observations,
            rate,
            averaging: AveragingWindow::Monitoring,
        })
    }

    pub fn with_averaging(mut self, averaging: AveragingWindow) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.expiry, self.observations)
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.expiry).exp()
    }

    /// Undiscounted payoff of F_0..F_N.
    pub fn payoff_values(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.observations + 1 {
            return Err(Error::GridMismatch(format!(
                "path has {} values, option observes {} dates",
                f.len(),
                self.observations + 1
            )));
        }
        Ok(payoff_unchecked(self, f))
    }

    /// Undiscounted payoff of a sampled path; the path grid must be the
    /// option's observation grid.
    pub fn payoff_eval(&self, path: &PathSkeleton) -> Result<f64> {
        let g = self.grid()?;
        let same = g.len() == path.grid.len()
            && g.times()
                .iter()
                .zip(path.times())
                .all(|(a, b)| (a - b).abs() <= 1e-12 * self.expiry);
        if !same {
            return Err(Error::GridMismatch("path grid differs from observation dates".into()));
        }
        self.payoff_values(&path.values)
    }
}

#[inline]
fn payoff_unchecked(spec: &OptionSpec, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let (kind, strike) = (spec.payoff, spec.strike);
    match kind {
        Payoff::AsianCall | Payoff::AsianPut => {
            let a = match spec.averaging {
                AveragingWindow::Monitoring => f[1..].iter().sum::<f64>() / n as f64,
                AveragingWindow::WithSpot => f.iter().sum::<f64>() / (n + 1) as f64,
            };
            if kind == Payoff::AsianCall {
                (a - strike).max(0.0)
            } else {
                (strike - a).max(0.0)
            }
        }
        Payoff::LookbackCall => f[n] - f.iter().copied().fold(f64::INFINITY, f64::min),
        Payoff::LookbackPut => f.iter().copied().fold(f64::NEG_INFINITY, f64::max) - f[n],
    }
}

/// Hitting time and likelihood weight of one sampled path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub fht: f64,
    pub weight: f64,
}

/// Anything that writes asset-price paths on a fixed grid.
pub trait AssetPathSampler: Sync {
    fn grid(&self) -> &TimeGrid;
    /// Quasi-random coordinates consumed per path.
    fn dimensions(&self) -> usize;
    fn sample(&self, src: &mut dyn VariateSource, out: &mut [f64]) -> Result<PathOutcome>;
}

/// Squared Bessel process started at x0.
#[derive(Debug, Clone)]
pub struct SqbAsset {
    pub params: SqbParams,
    pub grid: TimeGrid,
    pub scheme: Scheme,
    pub x0: f64,
}

impl AssetPathSampler for SqbAsset {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn dimensions(&self) -> usize {
        self.scheme.dimensions(self.grid.steps())
    }
    fn sample(&self, src: &mut dyn VariateSource, out: &mut [f64]) -> Result<PathOutcome> {
        let fht = self.params.sample_into(&self.grid, self.scheme, self.x0, src, out)?;
        Ok(PathOutcome { fht, weight: 1.0 })
    }
}

/// CIR process started at y0.
#[derive(Debug, Clone)]
pub struct CirAsset {
    pub sampler: CirSampler,
    pub y0: f64,
}

impl AssetPathSampler for CirAsset {
    fn grid(&self) -> &TimeGrid {
        self.sampler.grid()
    }
    fn dimensions(&self) -> usize {
        self.sampler.scheme().dimensions(self.grid().steps())
    }
    fn sample(&self, src: &mut dyn VariateSource, out: &mut [f64]) -> Result<PathOutcome> {
        let fht = self.sampler.sample_into(self.y0, src, out)?;
        Ok(PathOutcome { fht, weight: 1.0 })
    }
}

/// CEV asset started at f0.
#[derive(Debug, Clone)]
pub struct CevAsset {
    pub sampler: CevSampler,
    pub f0: f64,
}

impl AssetPathSampler for CevAsset {
    fn grid(&self) -> &TimeGrid {
        self.sampler.grid()
    }
    fn dimensions(&self) -> usize {
        self.sampler.scheme().dimensions(self.grid().steps())
    }
    fn sample(&self, src: &mut dyn VariateSource, out: &mut [f64]) -> Result<PathOutcome> {
        let fht = self.sampler.sample_into(self.f0, src, out)?;
        Ok(PathOutcome { fht, weight: 1.0 })
    }
}

impl<M: HypergeometricModel> AssetPathSampler for ExactSampler<M> {
    fn grid(&self) -> &TimeGrid {
        ExactSampler::grid(self)
    }
    fn dimensions(&self) -> usize {
        ExactSampler::dimensions(self)
    }
    fn sample(&self, src: &mut dyn VariateSource, out: &mut [f64]) -> Result<PathOutcome> {
        let fht = self.sample_into(src, out)?;
        Ok(PathOutcome { fht, weight: 1.0 })
    }
}

impl<M: HypergeometricModel> AssetPathSampler for WeightedSampler<M> {
    fn grid(&self) -> &TimeGrid {
        WeightedSampler::grid(self)
    }
    fn dimensions(&self) -> usize {
        WeightedSampler::dimensions(self)
    }
    fn sample(&self, src: &mut dyn VariateSource, out: &mut [f64]) -> Result<PathOutcome> {
        let weight = self.sample_into(src, out)?;
        Ok(PathOutcome {
            fht: f64::INFINITY,
            weight,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub price: f64,
    /// Per-path sample variance of the discounted estimator. For RQMC this is
    /// n_points times the variance of the randomization means, so it is
    /// comparable with the plain Monte Carlo figure.
    pub sample_variance: f64,
    /// None when it cannot be estimated (a single randomization).
    pub stderr: Option<f64>,
    pub n_effective: usize,
    pub wall_time_s: f64,
    /// sample_variance × wall_time_s.
    pub cost: f64,
}

/// Stream for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_specs(sampler: &dyn AssetPathSampler, specs: &[OptionSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::invalid("no options to price"));
    }
    let g = sampler.grid();
    for s in specs {
        let sg = s.grid()?;
        let same = sg.len() == g.len()
            && sg
                .times()
                .iter()
                .zip(g.times())
                .all(|(a, b)| (a - b).abs() <= 1e-12 * s.expiry);
        if !same {
            return Err(Error::GridMismatch(format!(
                "{} observes {} dates on [0, {}], sampler grid has {} points ending at {}",
                s.payoff,
                s.observations + 1,
                s.expiry,
                g.len(),
                g.horizon()
            )));
        }
    }
    Ok(())
}

/// Discounted estimator values of one path for each option.
fn path_values(specs: &[OptionSpec], f: &[f64], weight: f64, out: &mut [f64]) {
    for (o, s) in out.iter_mut().zip(specs) {
        *o = s.discount() * weight * payoff_unchecked(s, f);
    }
}

const CHUNK: usize = 256;

/// Plain Monte Carlo. Path i uses stream i of `seed`, so results do not
/// depend on the thread count.
pub fn price_mc(
    sampler: &dyn AssetPathSampler,
    specs: &[OptionSpec],
    n_paths: usize,
    seed: u64,
    method: DiscreteMethod,
) -> Result<Vec<EstimatorResult>> {
    check_specs(sampler, specs)?;
    if n_paths < 2 {
        return Err(Error::invalid("need at least two paths"));
    }
    let k = specs.len();
    let len = sampler.grid().len();
    let start = Instant::now();
    let mut values = vec![0.0; n_paths * k];
    values
        .par_chunks_mut(CHUNK * k)
        .enumerate()
        .try_for_each(|(c, chunk)| -> Result<()> {
            let mut path = vec![0.0; len];
            for (j, row) in chunk.chunks_mut(k).enumerate() {
                let i = (c * CHUNK + j) as u64;
                let mut src = PseudoRandom::with_method(path_rng(seed, i), method);
                let o = sampler.sample(&mut src, &mut path)?;
                path_values(specs, &path, o.weight, row);
            }
            Ok(())
        })?;
    let wall = start.elapsed().as_secs_f64();
    Ok((0..k)
        .map(|j| {
            let col: Vec<f64> = values.iter().skip(j).step_by(k).copied().collect();
            let (price, var) = mean_variance(&col);
            EstimatorResult {
                price,
                sample_variance: var,
                stderr: Some((var / n_paths as f64).sqrt()),
                n_effective: n_paths,
                wall_time_s: wall,
                cost: var * wall,
            }
        })
        .collect())
}

/// Randomized QMC with digitally shifted Sobol points. All variates come from
/// inversion of the point coordinates in a fixed layout.
pub fn price_rqmc(
    sampler: &dyn AssetPathSampler,
    specs: &[OptionSpec],
    n_randomizations: usize,
    n_points: usize,
    seed: u64,
) -> Result<Vec<EstimatorResult>> {
    check_specs(sampler, specs)?;
    if n_randomizations == 0 || n_points == 0 {
        return Err(Error::invalid("need at least one randomization and one point"));
    }
    let dims = sampler.dimensions();
    let points = SobolPoints::new(dims, n_points)?;
    let k = specs.len();
    let len = sampler.grid().len();
    let start = Instant::now();
    let mut values = vec![0.0; n_randomizations * n_points * k];
    for (r, block) in values.chunks_mut(n_points * k).enumerate() {
        let shift = DigitalShift::new(dims, seed, r as u64);
        block
            .par_chunks_mut(CHUNK * k)
            .enumerate()
            .try_for_each(|(c, chunk)| -> Result<()> {
                let mut path = vec![0.0; len];
                let mut u = vec![0.0; dims];
                for (j, row) in chunk.chunks_mut(k).enumerate() {
                    points.shifted_point(c * CHUNK + j, &shift, &mut u);
                    let mut src = QmcPoint::new(&u);
                    let o = sampler.sample(&mut src, &mut path)?;
                    path_values(specs, &path, o.weight, row);
                }
                Ok(())
            })?;
    }
    let wall = start.elapsed().as_secs_f64();
    Ok((0..k)
        .map(|j| {
            let means: Vec<f64> = values
                .chunks(n_points * k)
                .map(|b| mean_variance(&b.iter().skip(j).step_by(k).copied().collect::<Vec<_>>()).0)
                .collect();
            let (price, var_means) = mean_variance(&means);
            let (stderr, var) = if n_randomizations > 1 {
                (
                    Some((var_means / n_randomizations as f64).sqrt()),
                    var_means * n_points as f64,
                )
            } else {
                (None, f64::NAN)
            };
            EstimatorResult {
                price,
                sample_variance: var,
                stderr,
                n_effective: n_randomizations * n_points,
                wall_time_s: wall,
                cost: var * wall,
            }
        })
        .collect())
}

/// Weighted estimator for a hypergeometric model: the underlying process is
/// simulated without absorption. Refuses μ ≥ 1 unless `force`.
pub fn price_weighted<M: HypergeometricModel + Clone>(
    model: &M,
    f0: f64,
    specs: &[OptionSpec],
    n_paths: usize,
    seed: u64,
    force: bool,
) -> Result<Vec<EstimatorResult>> {
    let grid = specs.first().ok_or_else(|| Error::invalid("no options to price"))?.grid()?;
    let sampler = WeightedSampler::new(model.clone(), grid, f0, force)?;
    price_mc(&sampler, specs, n_paths, seed, DiscreteMethod::default())
}
