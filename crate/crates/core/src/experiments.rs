//! Reusable experiment drivers: scheme comparison against the exact SQB
//! mean, randomizer benchmarks, the reference option-pricing calibrations,
//! and the distributional and structural check batteries used by the CLI
//! self test and the acceptance tests.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Open01;
use rayon::prelude::*;

use crate::discrete::DiscreteLogConcave;
use crate::error::{Error, Result};
use crate::hypergeo::{BesselK, ConfluentU, ExactSampler, HypergeometricModel};
use crate::mc::{path_rng, price_mc, AveragingWindow, CevAsset, EstimatorResult, OptionSpec, Payoff};
use crate::quad::{integrate, integrate_to_infinity, Tolerance};
use crate::randgamma::RandGammaSpec;
use crate::sqb::{Boundary, Scheme, SqbParams, TimeGrid};
use crate::stats::{chi_square_gof, ks_pvalue, ks_statistic_sorted_cdf, ks_test, ks_two_sample};
use crate::transforms::{time_transform, time_transform_inverse, CevApproach, CevParams};
use crate::variates::{DiscreteMethod, PseudoRandom};

const CHUNK: usize = 256;

/// Outcome of one named check. `detail` never contains timings, so two
/// runs with the same seed print identical text.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

// ---------------------------------------------------------------------------
// Scheme comparison

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeReport {
    pub mu: f64,
    pub scheme: Scheme,
    pub n_paths: usize,
    /// max_i |sample mean − E[X_{t_i}]|
    pub mae: f64,
    /// max_i sd_i / √n
    pub max_stderr: f64,
    pub wall_time_s: f64,
}

/// Samples `n_paths` SQB paths on `grid` and compares the sample mean at
/// every grid time with the exact mean of the absorbed process.
pub fn compare_schemes(
    params: &SqbParams,
    x0: f64,
    grid: &TimeGrid,
    scheme: Scheme,
    n_paths: usize,
    seed: u64,
) -> Result<SchemeReport> {
    if n_paths < 2 {
        return Err(Error::invalid("scheme comparison needs at least two paths"));
    }
    let exact: Vec<f64> = grid
        .times()
        .iter()
        .map(|&t| params.exact_mean(x0, t))
        .collect::<Result<_>>()?;
    let m = grid.len();
    let chunks: Vec<usize> = (0..n_paths.div_ceil(CHUNK)).collect();
    let start = Instant::now();
    // Per chunk: sums of d and d² with d = X − E[X], which keeps the
    // accumulation well conditioned.
    let parts: Vec<Result<Vec<(f64, f64)>>> = chunks
        .par_iter()
        .map(|&c| {
            let mut acc = vec![(0.0, 0.0); m];
            let mut out = vec![0.0; m];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_paths) {
                let mut src = PseudoRandom::new(path_rng(seed, i as u64));
                params.sample_into(grid, scheme, x0, &mut src, &mut out)?;
                for ((a, &x), &e) in acc.iter_mut().zip(&out).zip(&exact) {
                    let d = x - e;
                    a.0 += d;
                    a.1 += d * d;
                }
            }
            Ok(acc)
        })
        .collect();
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut tot = vec![(0.0, 0.0); m];
    for p in parts {
        for (t, a) in tot.iter_mut().zip(p?) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    let n = n_paths as f64;
    let (mut mae, mut max_stderr) = (0.0f64, 0.0f64);
    for &(s, s2) in &tot {
        let bias = s / n;
        let var = ((s2 - n * bias * bias) / (n - 1.0)).max(0.0);
        mae = mae.max(bias.abs());
        max_stderr = max_stderr.max((var / n).sqrt());
    }
    Ok(SchemeReport {
        mu: params.mu(),
        scheme,
        n_paths,
        mae,
        max_stderr,
        wall_time_s,
    })
}

// ---------------------------------------------------------------------------
// Randomizer benchmark

/// Parameter regimes of the randomizer benchmark: one parameter drawn
/// uniformly per variate, the other held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandomizerRegime {
    /// P(λ), λ ~ U(0, 1000)
    PoissonLambda,
    /// Bes(θ, 10), θ ~ U(0, 1000)
    BesselTheta,
    /// Bes(10, b), b ~ U(0, 1000)
    BesselB,
    /// IΓ(θ, 10), θ ~ U(0, 100)
    IncGammaTheta,
    /// IΓ(10, λ), λ ~ U(0, 1000)
    IncGammaLambda,
}

impl RandomizerRegime {
    pub const ALL: [RandomizerRegime; 5] = [
        RandomizerRegime::PoissonLambda,
        RandomizerRegime::BesselTheta,
        RandomizerRegime::BesselB,
        RandomizerRegime::IncGammaTheta,
        RandomizerRegime::IncGammaLambda,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RandomizerRegime::PoissonLambda => "poisson_lambda",
            RandomizerRegime::BesselTheta => "bessel_theta",
            RandomizerRegime::BesselB => "bessel_b",
            RandomizerRegime::IncGammaTheta => "incgamma_theta",
            RandomizerRegime::IncGammaLambda => "incgamma_lambda",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL.into_iter().find(|r| r.name() == s)
    }

    pub fn label(&self) -> &'static str {
        match self {
            RandomizerRegime::PoissonLambda => "P(lambda), lambda~U(0,1000)",
            RandomizerRegime::BesselTheta => "Bes(theta,b), theta~U(0,1000), b=10",
            RandomizerRegime::BesselB => "Bes(theta,b), theta=10, b~U(0,1000)",
            RandomizerRegime::IncGammaTheta => "IG(theta,lambda), theta~U(0,100), lambda=10",
            RandomizerRegime::IncGammaLambda => "IG(theta,lambda), theta=10, lambda~U(0,1000)",
        }
    }

    /// The distribution for a uniform `u` in (0, 1).
    pub fn distribution(&self, u: f64) -> Result<DiscreteLogConcave> {
        match self {
            RandomizerRegime::PoissonLambda => DiscreteLogConcave::poisson(1000.0 * u),
            RandomizerRegime::BesselTheta => DiscreteLogConcave::bessel(1000.0 * u, 10.0),
            RandomizerRegime::BesselB => DiscreteLogConcave::bessel(10.0, 1000.0 * u),
            RandomizerRegime::IncGammaTheta => DiscreteLogConcave::inc_gamma(100.0 * u, 10.0),
            RandomizerRegime::IncGammaLambda => DiscreteLogConcave::inc_gamma(10.0, 1000.0 * u),
        }
    }
}

impl std::fmt::Display for RandomizerRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizerReport {
    pub regime: RandomizerRegime,
    pub n_draws: usize,
    pub rejection_time_s: f64,
    pub rejection_iterations: f64,
    pub rejection_mean: f64,
    pub chopdown_time_s: f64,
    pub chopdown_iterations: f64,
    pub chopdown_mean: f64,
}

/// Draws `n_draws` variates with each method on one thread. Both methods
/// see the same parameter sequence and the same uniform stream. The
/// distributions are built before the clock starts, so only sampling is
/// timed; each time is the best of three rounds.
pub fn bench_randomizers(regime: RandomizerRegime, n_draws: usize, seed: u64) -> Result<RandomizerReport> {
    if n_draws == 0 {
        return Err(Error::invalid("benchmark needs at least one draw"));
    }
    let mut params = path_rng(seed, 0);
    let dists: Vec<DiscreteLogConcave> = (0..n_draws)
        .map(|_| regime.distribution(params.sample(Open01)))
        .collect::<Result<_>>()?;
    let run = |method: DiscreteMethod| -> Result<(f64, f64, f64)> {
        let mut draws = path_rng(seed, 1);
        let (mut iters, mut sum) = (0u64, 0u64);
        let start = Instant::now();
        for d in &dists {
            let draw = match method {
                DiscreteMethod::Rejection => d.sample_rejection(&mut draws),
                DiscreteMethod::Chopdown => d.sample_chopdown(&mut draws),
            };
            iters += u64::from(draw.iterations);
            sum += draw.value;
        }
        let t = start.elapsed().as_secs_f64();
        let n = n_draws as f64;
        Ok((t, iters as f64 / n, sum as f64 / n))
    };
    // Best of three alternating rounds; the counts repeat exactly.
    let (mut rt, mut ct) = (f64::INFINITY, f64::INFINITY);
    let (mut ri, mut rm, mut ci, mut cm) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..3 {
        let r = run(DiscreteMethod::Rejection)?;
        let c = run(DiscreteMethod::Chopdown)?;
        rt = rt.min(r.0);
        ct = ct.min(c.0);
        (ri, rm, ci, cm) = (r.1, r.2, c.1, c.2);
    }
    Ok(RandomizerReport {
        regime,
        n_draws,
        rejection_time_s: rt,
        rejection_iterations: ri,
        rejection_mean: rm,
        chopdown_time_s: ct,
        chopdown_iterations: ci,
        chopdown_mean: cm,
    })
}

// ---------------------------------------------------------------------------
// Reference pricing calibration

/// Asset models of the reference pricing problem: S0 = K = 100, T = 1/2,
/// 128 observations, r = 2%, and local volatility 25% at S0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PricingModel {
    Cev,
    BesselK,
    ConfluentU,
}

pub const REFERENCE_SPOT: f64 = 100.0;
pub const REFERENCE_STRIKE: f64 = 100.0;
pub const REFERENCE_EXPIRY: f64 = 0.5;
pub const REFERENCE_OBSERVATIONS: usize = 128;
pub const REFERENCE_RATE: f64 = 0.02;

impl PricingModel {
    pub const ALL: [PricingModel; 3] = [PricingModel::Cev, PricingModel::BesselK, PricingModel::ConfluentU];

    pub fn name(&self) -> &'static str {
        match self {
            PricingModel::Cev => "cev",
            PricingModel::BesselK => "bessel_k",
            PricingModel::ConfluentU => "confluent_u",
        }
    }

    /// Reference price and standard error from 10^6-path runs. The Asian
    /// cells are reproduced only when the average includes F_0
    /// ([`AveragingWindow::WithSpot`]).
    pub fn reference(&self, payoff: Payoff) -> (f64, f64) {
        use Payoff::*;
        match (self, payoff) {
            (PricingModel::Cev, AsianCall) => (4.30237, 0.00081),
            (PricingModel::Cev, AsianPut) => (3.80260, 0.00160),
            (PricingModel::Cev, LookbackCall) => (14.55220, 0.00255),
            (PricingModel::Cev, LookbackPut) => (12.09087, 0.00300),
            (PricingModel::BesselK, AsianCall) => (4.28605, 0.00049),
            (PricingModel::BesselK, AsianPut) => (3.79717, 0.00033),
            (PricingModel::BesselK, LookbackCall) => (13.15557, 0.00113),
            (PricingModel::BesselK, LookbackPut) => (13.23640, 0.00081),
            (PricingModel::ConfluentU, AsianCall) => (4.28724, 0.00049),
            (PricingModel::ConfluentU, AsianPut) => (3.79922, 0.00032),
            (PricingModel::ConfluentU, LookbackCall) => (13.31158, 0.00093),
            (PricingModel::ConfluentU, LookbackPut) => (13.11594, 0.00084),
        }
    }
}

impl std::fmt::Display for PricingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn reference_cev() -> Result<CevParams> {
    CevParams::new(REFERENCE_RATE, 2500.0, -2.0)
}

pub fn reference_bessel_k() -> Result<BesselK> {
    BesselK::new(0.001, REFERENCE_RATE, 154.4870, 0.25, 2.0)
}

pub fn reference_confluent_u() -> Result<ConfluentU> {
    ConfluentU::new(788.3679, 0.001, 0.0009, 0.25, 2.0, REFERENCE_RATE)
}

pub fn reference_specs(averaging: AveragingWindow) -> Result<Vec<OptionSpec>> {
    Payoff::ALL
        .iter()
        .map(|&p| {
            OptionSpec::new(
                p,
                REFERENCE_STRIKE,
                REFERENCE_EXPIRY,
                REFERENCE_OBSERVATIONS,
                REFERENCE_RATE,
            )
            .map(|s| s.with_averaging(averaging))
        })
        .collect()
}

/// Plain Monte Carlo prices of the four reference payoffs, in
/// `Payoff::ALL` order.
pub fn price_reference(
    model: PricingModel,
    averaging: AveragingWindow,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<EstimatorResult>> {
    let specs = reference_specs(averaging)?;
    let grid = specs[0].grid()?;
    match model {
        PricingModel::Cev => {
            let asset = CevAsset {
                sampler: reference_cev()?.sampler(&grid, Scheme::SeqFht, CevApproach::CirReduction)?,
                f0: REFERENCE_SPOT,
            };
            price_mc(&asset, &specs, n_paths, seed, DiscreteMethod::Chopdown)
        }
        PricingModel::BesselK => {
            let s = ExactSampler::new(reference_bessel_k()?, grid, Scheme::SeqFht, REFERENCE_SPOT)?;
            price_mc(&s, &specs, n_paths, seed, DiscreteMethod::Chopdown)
        }
        PricingModel::ConfluentU => {
            let s = ExactSampler::new(reference_confluent_u()?, grid, Scheme::SeqFht, REFERENCE_SPOT)?;
            price_mc(&s, &specs, n_paths, seed, DiscreteMethod::Chopdown)
        }
    }
}

// ---------------------------------------------------------------------------
// Distributional checks

fn quad_tol() -> Tolerance {
    Tolerance::new(1e-15, 1e-11)
}

/// KS p-value of `xs` against the law with density `pdf` on (0, ∞). The
/// CDF is accumulated panel by panel between the sorted sample points.
pub fn ks_against_density(xs: &mut [f64], pdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    xs.sort_by(f64::total_cmp);
    let tol = quad_tol();
    let mut cdf = Vec::with_capacity(xs.len());
    let mut acc = integrate(&pdf, 0.0, xs[0], tol)?.value;
    cdf.push(acc);
    for w in xs.windows(2) {
        if w[1] > w[0] {
            acc += integrate(&pdf, w[0], w[1], tol)?.value;
        }
        cdf.push(acc);
    }
    let d = ks_statistic_sorted_cdf(&cdf);
    Ok((d, ks_pvalue(d, xs.len())))
}

/// ∫_0^∞ pdf, split at `split`.
pub fn total_mass(pdf: impl Fn(f64) -> f64, split: f64) -> Result<f64> {
    let tol = Tolerance::new(1e-16, 1e-12);
    Ok(integrate(&pdf, 0.0, split, tol)?.value + integrate_to_infinity(&pdf, split, split, tol)?.value)
}

fn rng(seed: u64, stream: u64) -> PseudoRandom<ChaCha8Rng> {
    PseudoRandom::new(path_rng(seed, stream))
}

/// Sub-seeds keep the check batteries on streams that do not overlap the
/// path streams of the pricing runs.
fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ tag
}

/// First hitting time of the absorbed SQB against P{τ0 ≤ t} = Q(|μ|, x0/2t).
pub fn check_fht_law(n: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (k, mu) in [-0.25, -0.5, -1.5].into_iter().enumerate() {
        let p = SqbParams::from_index(mu, 2.0, Boundary::Absorbing)?;
        let mut src = rng(sub_seed(seed, 1), k as u64);
        let mut taus: Vec<f64> = (0..n).map(|_| p.sample_fht(1.0, &mut src)).collect::<Result<_>>()?;
        let (d, pv) = ks_test(&mut taus, |t| p.absorption_probability(1.0, t).unwrap_or(f64::NAN));
        out.push(Check::new(
            format!("fht_law mu={mu}"),
            pv > 0.01,
            format!("n={n} D={d:.5} p={pv:.4}"),
        ));
    }
    Ok(out)
}

/// Two-sample KS between the marginals of the three absorbed schemes at
/// t = 1/4, 1/2, 1. Nine comparisons share a 1% family-wise level.
pub fn check_cross_scheme(n: usize, seed: u64) -> Result<Vec<Check>> {
    let p = SqbParams::from_index(-0.5, 2.0, Boundary::Absorbing)?;
    let grid = TimeGrid::uniform(1.0, 32)?;
    let idx = [8, 16, 32];
    let schemes = [Scheme::SeqFht, Scheme::BridgeFht, Scheme::SeqAbs];
    let mut marg: Vec<[Vec<f64>; 3]> = Vec::new();
    for (k, &s) in schemes.iter().enumerate() {
        let mut cols = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut src = rng(sub_seed(seed, 2), k as u64);
        let mut buf = vec![0.0; grid.len()];
        for _ in 0..n {
            p.sample_into(&grid, s, 1.0, &mut src, &mut buf)?;
            for (c, &j) in cols.iter_mut().zip(&idx) {
                c.push(buf[j]);
            }
        }
        marg.push(cols);
    }
    let level = 0.01 / 9.0;
    let mut out = Vec::new();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for (c, &j) in idx.iter().enumerate() {
            let mut xa = marg[a][c].clone();
            let mut xb = marg[b][c].clone();
            let (d, pv) = ks_two_sample(&mut xa, &mut xb);
            out.push(Check::new(
                format!("cross_scheme {}~{} t={}", schemes[a], schemes[b], grid.times()[j]),
                pv > level,
                format!("n={n} D={d:.5} p={pv:.4}"),
            ));
        }
    }
    Ok(out)
}

/// Pearson GOF of both discrete samplers. The Bessel and IΓ laws are
/// tested on a 3×3 parameter grid, Poisson on three intensities; the whole
/// family shares a 1% level.
pub fn check_randomizers(n: usize, seed: u64) -> Result<Vec<Check>> {
    let mut dists = Vec::new();
    for lambda in [0.3, 7.0, 1000.0] {
        dists.push(DiscreteLogConcave::poisson(lambda)?);
    }
    for theta in [0.5, 10.0, 100.0] {
        for b in [0.5, 10.0, 200.0] {
            dists.push(DiscreteLogConcave::bessel(theta, b)?);
        }
    }
    for theta in [0.5, 10.0, 100.0] {
        for lambda in [0.5, 10.0, 500.0] {
            dists.push(DiscreteLogConcave::inc_gamma(theta, lambda)?);
        }
    }
    let level = 0.01 / (2 * dists.len()) as f64;
    let mut out = Vec::new();
    for (k, d) in dists.iter().enumerate() {
        for method in [DiscreteMethod::Rejection, DiscreteMethod::Chopdown] {
            let mut g = path_rng(sub_seed(seed, 3), 2 * k as u64 + u64::from(method == DiscreteMethod::Chopdown));
            let mut counts: Vec<u64> = Vec::new();
            for _ in 0..n {
                let v = match method {
                    DiscreteMethod::Rejection => d.sample_rejection(&mut g).value,
                    DiscreteMethod::Chopdown => d.sample_chopdown(&mut g).value,
                } as usize;
                if v >= counts.len() {
                    counts.resize(v + 1, 0);
                }
                counts[v] += 1;
            }
            // Extend the support until the unseen tail is negligible.
            let mut len = counts.len();
            while d.pmf(len as u64) * n as f64 > 1e-6 || (len as u64) <= d.mode() {
                len += 1;
            }
            counts.resize(len, 0);
            let mut expected: Vec<f64> = (0..len).map(|j| d.pmf(j as u64) * n as f64).collect();
            let covered: f64 = expected.iter().sum();
            if let Some(last) = expected.last_mut() {
                *last += (n as f64 - covered).max(0.0);
            }
            let (stat, dof, pv) = chi_square_gof(&counts, &expected, 5.0);
            let (p1, p2) = d.params();
            out.push(Check::new(
                format!("randomizer {:?}({p1},{p2}) {method:?}", d.kind()),
                pv > level,
                format!("n={n} chi2={stat:.2} dof={dof} p={pv:.4}"),
            ));
        }
    }
    Ok(out)
}

/// GIG hitting times of Bessel-K and Tricomi variables of Confluent-U
/// against CDFs obtained by quadrature of their densities.
pub fn check_hitting_time_laws(n: usize, seed: u64) -> Result<Vec<Check>> {
    let grid = TimeGrid::uniform(REFERENCE_EXPIRY, 4)?;
    let mut out = Vec::new();
    let bks = [reference_bessel_k()?, BesselK::new(0.3, 0.1, 2.0, 0.4, 2.0)?];
    for (k, m) in bks.into_iter().enumerate() {
        let f0 = if k == 0 { REFERENCE_SPOT } else { m.f_map(3.0)? };
        let s = ExactSampler::new(m, grid.clone(), Scheme::SeqFht, f0)?;
        let mut src = rng(sub_seed(seed, 4), k as u64);
        let mut taus: Vec<f64> = (0..n).map(|_| s.sample_fht(&mut src)).collect();
        let x0 = s.x0();
        let (d, pv) = ks_against_density(&mut taus, |t| m.fht_pdf(x0, t).unwrap_or(0.0))?;
        out.push(Check::new(
            format!("gig_fht bessel_k#{k}"),
            pv > 0.01,
            format!("n={n} D={d:.5} p={pv:.4}"),
        ));
    }
    let cus = [reference_confluent_u()?, ConfluentU::new(3.0, 0.2, 0.5, 0.6, 1.5, -0.1)?];
    for (k, m) in cus.into_iter().enumerate() {
        let f0 = if k == 0 { REFERENCE_SPOT } else { m.f_map(0.8)? };
        let s = ExactSampler::new(m, grid.clone(), Scheme::SeqFht, f0)?;
        let mut src = rng(sub_seed(seed, 5), k as u64);
        let mut vars: Vec<f64> = (0..n).map(|_| m.tricomi_of_tau(s.sample_fht(&mut src))).collect();
        let x0 = s.x0();
        let (d, pv) = ks_against_density(&mut vars, |v| m.fht_variable_pdf(x0, v).unwrap_or(0.0))?;
        out.push(Check::new(
            format!("tricomi_fht confluent_u#{k}"),
            pv > 0.01,
            format!("n={n} D={d:.5} p={pv:.4}"),
        ));
    }
    Ok(out)
}

/// The three randomized gamma densities and the two hitting-time densities
/// integrate to one.
pub fn check_density_mass() -> Result<Vec<Check>> {
    let mut cases: Vec<(String, Box<dyn Fn(f64) -> f64>, f64)> = Vec::new();
    for spec in [
        RandGammaSpec::type1(0.5, 1.0, 2.0)?,
        RandGammaSpec::type1(10.0, 0.3, 40.0)?,
        RandGammaSpec::type2(0.5, 1.0, 2.0, 3.0)?,
        RandGammaSpec::type2(4.0, 2.0, 30.0, 5.0)?,
        RandGammaSpec::type3(0.5, 1.0, 2.0)?,
        RandGammaSpec::type3(10.0, 0.5, 25.0)?,
    ] {
        let split = spec.mean();
        cases.push((format!("{spec:?}"), Box::new(move |y| spec.density(y)), split));
    }
    let bk = reference_bessel_k()?;
    let x = bk.x_map(REFERENCE_SPOT)?;
    let split = bk.fht_variable_hint(x).1;
    cases.push(("GIG bessel_k".into(), Box::new(move |t| bk.fht_variable_pdf(x, t).unwrap_or(0.0)), split));
    let cu = reference_confluent_u()?;
    let x = cu.x_map(REFERENCE_SPOT)?;
    let split = cu.fht_variable_hint(x).1;
    cases.push(("Tricomi confluent_u".into(), Box::new(move |t| cu.fht_variable_pdf(x, t).unwrap_or(0.0)), split));
    let mut out = Vec::new();
    for (name, pdf, split) in cases {
        let mass = total_mass(&*pdf, split)?;
        out.push(Check::new(
            format!("density_mass {name}"),
            (mass - 1.0).abs() < 1e-8,
            format!("mass-1={:.2e}", mass - 1.0),
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Structural identities

/// Per-grid-time z-scores of the sample mean against `exact`.
fn max_z(paths: &[Vec<f64>], exact: &[f64]) -> f64 {
    let n = paths.len() as f64;
    let mut worst = 0.0f64;
    for (j, &e) in exact.iter().enumerate() {
        let (mut s, mut s2) = (0.0, 0.0);
        for p in paths {
            let d = p[j] - e;
            s += d;
            s2 += d * d;
        }
        let bias = s / n;
        let var = (s2 - n * bias * bias) / (n - 1.0);
        if var > 0.0 {
            worst = worst.max(bias.abs() / (var / n).sqrt());
        } else if bias != 0.0 {
            worst = f64::INFINITY;
        }
    }
    worst
}

/// E[X_t] = x0 + λ0 t for SQB processes that never stay at 0: an entrance
/// boundary (μ = 1/2) and a reflecting one (μ = −1/2).
pub fn check_sqb_mean(n: usize, seed: u64) -> Result<Vec<Check>> {
    let grid = TimeGrid::uniform(1.0, 8)?;
    let mut out = Vec::new();
    for (k, mu) in [0.5, -0.5].into_iter().enumerate() {
        let p = SqbParams::from_index(mu, 2.0, Boundary::Reflecting)?;
        let mut src = rng(sub_seed(seed, 6), k as u64);
        let paths: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut v = vec![0.0; grid.len()];
                p.sample_into(&grid, Scheme::SeqNoAbs, 1.0, &mut src, &mut v).map(|_| v)
            })
            .collect::<Result<_>>()?;
        let exact: Vec<f64> = grid.times().iter().map(|&t| 1.0 + p.lambda0() * t).collect();
        let z = max_z(&paths, &exact);
        out.push(Check::new(format!("sqb_mean mu={mu}"), z <= 4.0, format!("n={n} max|z|={z:.3}")));
    }
    Ok(out)
}

/// e^{−rt} F_t is a martingale under the exact samplers of both
/// hypergeometric models.
pub fn check_martingale(n: usize, seed: u64) -> Result<Vec<Check>> {
    let grid = TimeGrid::uniform(REFERENCE_EXPIRY, 8)?;
    let mut out = Vec::new();
    fn run<M: HypergeometricModel>(
        m: M,
        grid: &TimeGrid,
        scheme: Scheme,
        n: usize,
        seed: u64,
    ) -> Result<(f64, f64)> {
        let r = m.r();
        let s = ExactSampler::new(m, grid.clone(), scheme, REFERENCE_SPOT)?;
        let paths: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut src = PseudoRandom::new(path_rng(seed, i as u64));
                let mut v = vec![0.0; grid.len()];
                s.sample_into(&mut src, &mut v)?;
                for (x, &t) in v.iter_mut().zip(grid.times()) {
                    *x *= (-r * t).exp();
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let exact = vec![REFERENCE_SPOT; grid.len()];
        Ok((max_z(&paths, &exact), r))
    }
    let cases: [(&str, Scheme); 2] = [("SEQ_FHT", Scheme::SeqFht), ("BRIDGE_FHT", Scheme::BridgeFht)];
    for (k, (label, scheme)) in cases.into_iter().enumerate() {
        let (z, _) = run(reference_bessel_k()?, &grid, scheme, n, sub_seed(seed, 7 + k as u64))?;
        out.push(Check::new(
            format!("martingale bessel_k {label}"),
            z <= 4.0,
            format!("n={n} max|z|={z:.3}"),
        ));
        let (z, _) = run(reference_confluent_u()?, &grid, scheme, n, sub_seed(seed, 9 + k as u64))?;
        out.push(Check::new(
            format!("martingale confluent_u {label}"),
            z <= 4.0,
            format!("n={n} max|z|={z:.3}"),
        ));
    }
    // An absorbing Bessel-K model: the martingale holds with mass at zero.
    let (z, _) = run(BesselK::new(0.3, 0.1, 2.0, 1.4, 2.0)?, &grid, Scheme::SeqFht, n, sub_seed(seed, 11))?;
    out.push(Check::new(
        "martingale bessel_k mu=1.4",
        z <= 4.0,
        format!("n={n} max|z|={z:.3}"),
    ));
    Ok(out)
}

/// With r = 0 the CIR-reduction and drift-restoring CEV samplers produce
/// the same path from the same stream.
pub fn check_cev_approaches(n: usize, seed: u64) -> Result<Vec<Check>> {
    let cev = CevParams::new(0.0, 2500.0, -2.0)?;
    let grid = TimeGrid::uniform(REFERENCE_EXPIRY, 32)?;
    let a = cev.sampler(&grid, Scheme::SeqFht, CevApproach::CirReduction)?;
    let b = cev.sampler(&grid, Scheme::SeqFht, CevApproach::DriftRestore)?;
    let (mut pa, mut pb) = (vec![0.0; grid.len()], vec![0.0; grid.len()]);
    let mut mismatches = 0usize;
    for i in 0..n {
        let ta = a.sample_into(REFERENCE_SPOT, &mut PseudoRandom::new(path_rng(seed, i as u64)), &mut pa)?;
        let tb = b.sample_into(REFERENCE_SPOT, &mut PseudoRandom::new(path_rng(seed, i as u64)), &mut pb)?;
        if pa != pb || ta.to_bits() != tb.to_bits() {
            mismatches += 1;
        }
    }
    Ok(vec![Check::new(
        "cev_dual_approach r=0",
        mismatches == 0,
        format!("paths={n} mismatches={mismatches}"),
    )])
}

/// Round trips of the hypergeometric maps, the CEV maps and the time
/// transform.
pub fn check_round_trips() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let models: Vec<(&str, Box<dyn HypergeometricModel>)> = vec![
        ("bessel_k", Box::new(reference_bessel_k()?)),
        ("confluent_u", Box::new(reference_confluent_u()?)),
    ];
    for (name, m) in models {
        let mut worst = 0.0f64;
        let mut x: f64 = 1e-6;
        while x <= 1e3 {
            let back = m.x_map(m.f_map(x)?)?;
            worst = worst.max((back - x).abs() / x);
            x *= 1.7;
        }
        out.push(Check::new(
            format!("map_round_trip {name}"),
            worst <= 1e-10,
            format!("max_rel_err={worst:.2e}"),
        ));
    }
    let cev = reference_cev()?;
    let mut worst = 0.0f64;
    let mut f: f64 = 1e-3;
    while f <= 1e6 {
        worst = worst.max((cev.f_of_x(cev.x_of_f(f)) - f).abs() / f);
        f *= 1.9;
    }
    out.push(Check::new(
        "map_round_trip cev",
        worst <= 1e-12,
        format!("max_rel_err={worst:.2e}"),
    ));
    // Near s(∞) for λ1 < 0 the forward map itself loses digits (rounding s
    // moves t by about ε e^{|λ1 t|} / |λ1 t|), so the grid stays where that
    // factor is modest.
    let mut worst = 0.0f64;
    for l1 in [-2.0, -0.08, 1e-9, 0.3, 5.0] {
        for t in [1e-6, 0.01, 0.5, 1.0, 3.0] {
            let s = time_transform(l1, t);
            worst = worst.max((time_transform_inverse(l1, s)? - t).abs() / t);
        }
    }
    out.push(Check::new(
        "time_transform_round_trip",
        worst <= 1e-14,
        format!("max_rel_err={worst:.2e}"),
    ));
    Ok(out)
}

/// Scaled-down batteries used by the self test.
pub fn distribution_suite(n: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = check_fht_law(n, seed)?;
    out.extend(check_cross_scheme(n, seed)?);
    out.extend(check_randomizers(n, seed)?);
    out.extend(check_hitting_time_laws(n, seed)?);
    out.extend(check_density_mass()?);
    Ok(out)
}

pub fn identity_suite(n: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = check_sqb_mean(n, seed)?;
    out.extend(check_martingale(n, seed)?);
    out.extend(check_cev_approaches(n.min(2000), seed)?);
    out.extend(check_round_trips()?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_schemes_is_deterministic_and_small() {
        let p = SqbParams::from_index(-0.5, 2.0, Boundary::Absorbing).unwrap();
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        let a = compare_schemes(&p, 1.0, &g, Scheme::SeqFht, 3000, 5).unwrap();
        let b = compare_schemes(&p, 1.0, &g, Scheme::SeqFht, 3000, 5).unwrap();
        assert_eq!(a.mae, b.mae);
        assert!(a.mae <= 5.0 * a.max_stderr, "{a:?}");
    }

    #[test]
    fn regimes_round_trip_names() {
        for r in RandomizerRegime::ALL {
            assert_eq!(RandomizerRegime::parse(r.name()), Some(r));
            assert!(r.distribution(0.37).is_ok());
        }
    }

    #[test]
    fn bench_reports_iterations() {
        let r = bench_randomizers(RandomizerRegime::PoissonLambda, 2000, 1).unwrap();
        assert!(r.rejection_iterations >= 1.0 && r.chopdown_iterations >= 1.0);
        // Both methods see the same parameters, so the means are close.
        assert!((r.rejection_mean - r.chopdown_mean).abs() < 0.05 * r.chopdown_mean);
    }

    #[test]
    fn reference_specs_share_one_grid() {
        let specs = reference_specs(AveragingWindow::Monitoring).unwrap();
        assert_eq!(specs.len(), 4);
        assert_eq!(specs[0].grid().unwrap().steps(), REFERENCE_OBSERVATIONS);
    }
}
