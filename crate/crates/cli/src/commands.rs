use std::io::Write;

use rayon::prelude::*;
use solvdiff_core::experiments::{
    self, bench_randomizers, compare_schemes, price_reference, PricingModel, RandomizerRegime,
};
use solvdiff_core::mc::path_rng;
use solvdiff_core::{
    price_mc, price_rqmc, price_weighted, AssetPathSampler, AveragingWindow, BesselK, Boundary, CevAsset, CevParams,
    CirAsset, CirParams, ConfluentU, DiscreteMethod, EstimatorResult, ExactSampler, OptionSpec, PseudoRandom, Scheme,
    SqbAsset, SqbParams, TimeGrid,
};

use crate::config::{Format, MethodKind, ModelConfig, RunConfig};
use crate::error::CliError;
use crate::output::{self, Table};

/// Flags shared by every command, already merged over the config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: RunConfig,
    pub paths: Option<usize>,
    pub full_scale: bool,
    pub format: Format,
    pub out: Option<String>,
}

impl Settings {
    fn paths(&self, desk: usize, full: usize) -> usize {
        self.paths
            .or(self.config.method.paths)
            .unwrap_or(if self.full_scale { full } else { desk })
    }

    fn seed(&self) -> u64 {
        self.config.seed()
    }

    fn emit(&self, table: &Table) -> Result<(), CliError> {
        let mut out = output::open(self.out.as_deref())?;
        table.write(self.format, &mut out)?;
        out.flush()?;
        Ok(())
    }
}

/// Constructor failures are configuration errors whatever their kind.
fn cfg<T>(r: solvdiff_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

fn default_model() -> ModelConfig {
    ModelConfig::Sqb {
        mu: -0.5,
        nu: 2.0,
        x0: 1.0,
        boundary: Default::default(),
    }
}

fn grid_of(config: &RunConfig) -> Result<TimeGrid, CliError> {
    match &config.grid.times {
        Some(t) => cfg(TimeGrid::new(t.clone())),
        None => cfg(TimeGrid::uniform(
            config.grid.horizon.unwrap_or(1.0),
            config.grid.steps.unwrap_or(32),
        )),
    }
}

fn exact_sampler(model: &ModelConfig, grid: &TimeGrid, scheme: Scheme) -> Result<Box<dyn AssetPathSampler>, CliError> {
    Ok(match *model {
        ModelConfig::Sqb { mu, nu, x0, boundary } => Box::new(SqbAsset {
            params: cfg(SqbParams::from_index(mu, nu, boundary.into()))?,
            grid: grid.clone(),
            scheme,
            x0,
        }),
        ModelConfig::Cir {
            lambda0,
            lambda1,
            nu,
            y0,
            boundary,
        } => Box::new(CirAsset {
            sampler: cfg(CirParams::new(lambda0, lambda1, nu, boundary.into()).and_then(|p| p.sampler(grid, scheme)))?,
            y0,
        }),
        ModelConfig::Cev {
            r,
            delta,
            beta,
            f0,
            approach,
        } => Box::new(CevAsset {
            sampler: cfg(CevParams::new(r, delta, beta).and_then(|p| p.sampler(grid, scheme, approach.into())))?,
            f0,
        }),
        ModelConfig::BesselK { rho, r, c, mu, nu, f0 } => {
            Box::new(cfg(BesselK::new(rho, r, c, mu, nu).and_then(|m| ExactSampler::new(m, grid.clone(), scheme, f0)))?)
        }
        ModelConfig::ConfluentU {
            c,
            rho,
            lambda1,
            mu,
            nu,
            r,
            f0,
        } => Box::new(cfg(
            ConfluentU::new(c, rho, lambda1, mu, nu, r).and_then(|m| ExactSampler::new(m, grid.clone(), scheme, f0))
        )?),
    })
}

// ---------------------------------------------------------------------------
// price

pub const PRICE_COLUMNS: [&str; 7] = ["model", "payoff", "price", "stderr", "variance", "time_s", "cost"];

fn price_row(table: &mut Table, model: &str, spec: &OptionSpec, r: &EstimatorResult) {
    table.push(vec![
        model.into(),
        spec.payoff.name().into(),
        r.price.into(),
        r.stderr.into(),
        r.sample_variance.into(),
        r.wall_time_s.into(),
        r.cost.into(),
    ]);
}

pub fn price(s: &Settings) -> Result<(), CliError> {
    let c = &s.config;
    let n = s.paths(100_000, 1_000_000);
    let Some(model) = &c.model else {
        return price_reference_batch(s, n);
    };
    if c.grid.times.is_some() {
        return Err(CliError::Config("price needs a uniform grid (grid.horizon and grid.steps)".into()));
    }
    let expiry = c.grid.horizon.unwrap_or(1.0);
    let steps = c.grid.steps.unwrap_or(32);
    let strike = c.option.strike.unwrap_or(model.start());
    let rate = c.option.rate.unwrap_or(model.rate());
    let averaging = c.averaging(AveragingWindow::Monitoring)?;
    let specs = c
        .payoffs()?
        .into_iter()
        .map(|p| cfg(OptionSpec::new(p, strike, expiry, steps, rate)).map(|o| o.with_averaging(averaging)))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = cfg(specs[0].grid())?;
    let seed = s.seed();

    let results = match c.method.kind {
        MethodKind::Mc => {
            let sampler = exact_sampler(model, &grid, c.scheme()?)?;
            price_mc(sampler.as_ref(), &specs, n, seed, c.method.discrete.into())?
        }
        MethodKind::Rqmc => {
            let sampler = exact_sampler(model, &grid, c.scheme()?)?;
            let r = c.method.randomizations.unwrap_or(50);
            let points = n / r;
            if points == 0 {
                return Err(CliError::Config(format!("{n} paths cannot be split over {r} randomizations")));
            }
            price_rqmc(sampler.as_ref(), &specs, r, points, seed)?
        }
        MethodKind::Weighted => match *model {
            ModelConfig::BesselK { rho, r, c: cc, mu, nu, f0 } => {
                let m = cfg(BesselK::new(rho, r, cc, mu, nu))?;
                price_weighted(&m, f0, &specs, n, seed, c.method.force)?
            }
            ModelConfig::ConfluentU {
                c: cc,
                rho,
                lambda1,
                mu,
                nu,
                r,
                f0,
            } => {
                let m = cfg(ConfluentU::new(cc, rho, lambda1, mu, nu, r))?;
                price_weighted(&m, f0, &specs, n, seed, c.method.force)?
            }
            _ => return Err(CliError::Config("the weighted method needs a bessel_k or confluent_u model".into())),
        },
    };

    let mut table = Table::new(&PRICE_COLUMNS);
    for (spec, r) in specs.iter().zip(&results) {
        price_row(&mut table, model.name(), spec, r);
    }
    s.emit(&table)
}

/// The three reference calibrations against their reference prices; the
/// comparison goes to stderr so the table itself keeps the fixed schema.
fn price_reference_batch(s: &Settings, n: usize) -> Result<(), CliError> {
    if s.config.method.kind != MethodKind::Mc {
        return Err(CliError::Config("the reference batch uses plain MC; give a [model] block for other methods".into()));
    }
    let averaging = s.config.averaging(AveragingWindow::WithSpot)?;
    let specs = cfg(experiments::reference_specs(averaging))?;
    let wanted = s.config.payoffs()?;
    let mut table = Table::new(&PRICE_COLUMNS);
    for model in PricingModel::ALL {
        let results = price_reference(model, averaging, n, s.seed())?;
        for (spec, r) in specs.iter().zip(&results) {
            if !wanted.contains(&spec.payoff) {
                continue;
            }
            price_row(&mut table, model.name(), spec, r);
            let (reference, ref_se) = model.reference(spec.payoff);
            let se = r.stderr.unwrap_or(0.0);
            let z = (r.price - reference) / (se * se + ref_se * ref_se).sqrt();
            eprintln!(
                "{:<12} {:<14} {:>10.5} ± {:.5}   reference {:>9.5} ± {:.5}   z = {:+.2}",
                model.name(),
                spec.payoff.name(),
                r.price,
                se,
                reference,
                ref_se,
                z
            );
        }
    }
    s.emit(&table)
}

// ---------------------------------------------------------------------------
// compare-schemes

pub fn compare(s: &Settings) -> Result<(), CliError> {
    let c = &s.config;
    let (model_mu, model_nu, model_x0) = match c.model {
        None => (None, None, None),
        Some(ModelConfig::Sqb { mu, nu, x0, .. }) => (Some(mu), Some(nu), Some(x0)),
        Some(ref m) => return Err(CliError::Config(format!("compare-schemes needs an sqb model, got {}", m.name()))),
    };
    let mus = c
        .compare
        .mu
        .clone()
        .or(model_mu.map(|m| vec![m]))
        .unwrap_or_else(|| vec![-0.25, -0.5, -1.5]);
    let nu = c.compare.nu.or(model_nu).unwrap_or(2.0);
    let x0 = c.compare.x0.or(model_x0).unwrap_or(1.0);
    let schemes = match &c.compare.schemes {
        None => vec![Scheme::SeqFht, Scheme::BridgeFht, Scheme::SeqAbs],
        Some(v) => v
            .iter()
            .map(|n| Scheme::parse(n).ok_or_else(|| CliError::Config(format!("unknown scheme '{n}'"))))
            .collect::<Result<_, _>>()?,
    };
    let grid = grid_of(c)?;
    let params = mus
        .iter()
        .map(|&mu| cfg(SqbParams::from_index(mu, nu, Boundary::Absorbing)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = s.paths(100_000, 1_000_000);

    let mut table = Table::new(&["mu", "scheme", "n_paths", "mae", "max_stderr", "mae_over_stderr", "time_s"]);
    for p in &params {
        for &scheme in &schemes {
            let r = compare_schemes(p, x0, &grid, scheme, n, s.seed())?;
            table.push(vec![
                r.mu.into(),
                r.scheme.name().into(),
                r.n_paths.into(),
                r.mae.into(),
                r.max_stderr.into(),
                (r.mae / r.max_stderr).into(),
                r.wall_time_s.into(),
            ]);
        }
    }
    s.emit(&table)
}

// ---------------------------------------------------------------------------
// bench-randomizers

pub fn bench(s: &Settings) -> Result<(), CliError> {
    let regimes = match &s.config.bench.regimes {
        None => RandomizerRegime::ALL.to_vec(),
        Some(v) => v
            .iter()
            .map(|n| RandomizerRegime::parse(n).ok_or_else(|| CliError::Config(format!("unknown regime '{n}'"))))
            .collect::<Result<_, _>>()?,
    };
    let n = s.paths(1_000_000, 1_000_000);
    let mut table = Table::new(&[
        "regime",
        "n_draws",
        "rejection_time_s",
        "rejection_iterations",
        "rejection_mean",
        "chopdown_time_s",
        "chopdown_iterations",
        "chopdown_mean",
    ]);
    for regime in regimes {
        let r = bench_randomizers(regime, n, s.seed())?;
        table.push(vec![
            r.regime.name().into(),
            r.n_draws.into(),
            r.rejection_time_s.into(),
            r.rejection_iterations.into(),
            r.rejection_mean.into(),
            r.chopdown_time_s.into(),
            r.chopdown_iterations.into(),
            r.chopdown_mean.into(),
        ]);
    }
    s.emit(&table)
}

// ---------------------------------------------------------------------------
// sample

const SAMPLE_BLOCK: usize = 4096;

pub fn sample(s: &Settings) -> Result<(), CliError> {
    let c = &s.config;
    if c.method.kind != MethodKind::Mc {
        return Err(CliError::Config("sample draws pseudo-random paths; method.kind must be mc".into()));
    }
    let model = c.model.clone().unwrap_or_else(default_model);
    let grid = grid_of(c)?;
    let sampler = exact_sampler(&model, &grid, c.scheme()?)?;
    let method: DiscreteMethod = c.method.discrete.into();
    let n = s.paths(1000, 1000);
    let seed = s.seed();
    let len = grid.len();

    let mut out = output::open(s.out.as_deref())?;
    if s.format == Format::Csv {
        writeln!(out, "path_id,t,x")?;
    }
    for start in (0..n).step_by(SAMPLE_BLOCK) {
        let end = (start + SAMPLE_BLOCK).min(n);
        let paths = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut src = PseudoRandom::with_method(path_rng(seed, i as u64), method);
                let mut x = vec![0.0; len];
                let o = sampler.sample(&mut src, &mut x)?;
                Ok((x, o.fht))
            })
            .collect::<solvdiff_core::Result<Vec<_>>>()?;
        for (k, (x, fht)) in paths.iter().enumerate() {
            let id = start + k;
            match s.format {
                Format::Csv => {
                    for (t, v) in grid.times().iter().zip(x) {
                        writeln!(out, "{id},{t},{v}")?;
                    }
                }
                Format::Jsonl => {
                    let fht = serde_json::Number::from_f64(*fht).map_or(serde_json::Value::Null, Into::into);
                    writeln!(
                        out,
                        "{{\"path_id\":{id},\"fht\":{fht},\"t\":{},\"x\":{}}}",
                        serde_json::to_string(grid.times())?,
                        serde_json::to_string(x)?
                    )?;
                }
                Format::Binary => {
                    for v in x {
                        out.write_all(&v.to_le_bytes())?;
                    }
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// selftest

/// Both suites as text, one check per line.
pub fn suite_report(n: usize, seed: u64) -> Result<(String, usize, usize), CliError> {
    let mut checks = experiments::distribution_suite(n, seed)?;
    checks.extend(experiments::identity_suite(n, seed)?);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let text: String = checks.iter().map(|c| format!("{c}\n")).collect();
    Ok((text, checks.len(), failed))
}

pub fn selftest(s: &Settings) -> Result<(), CliError> {
    let n = s.paths(20_000, 100_000);
    let seed = s.seed();
    let (first, total, failed) = suite_report(n, seed)?;
    let (second, _, _) = suite_report(n, seed)?;
    let identical = first == second;

    let mut out = output::open(s.out.as_deref())?;
    out.write_all(first.as_bytes())?;
    writeln!(
        out,
        "{} determinism: two runs with seed {seed} produced {} output",
        if identical { "PASS" } else { "FAIL" },
        if identical { "identical" } else { "different" }
    )?;
    writeln!(out, "selftest: {total} checks at n = {n}, {failed} failed")?;
    out.flush()?;

    if !identical {
        return Err(CliError::SelfTest("repeated run differs".into()));
    }
    if failed > 0 {
        return Err(CliError::SelfTest(format!("{failed} of {total} checks failed")));
    }
    Ok(())
}
