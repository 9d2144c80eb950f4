//! Squared Bessel process dX = λ0 dt + ν √X dW: analytic quantities and the
//! four exact path samplers.
//!
//! Internally everything runs with ν = 2. A path with general ν is obtained
//! by scaling x0 by (2/ν)² and the sampled values back by (ν/2)².

use std::sync::Arc;

use crate::discrete::DiscreteLogConcave;
use crate::error::{Error, Result};
use crate::specfun::{ln_bessel_i, ln_gamma, reg_gamma_lower, reg_gamma_upper};
use crate::variates::VariateSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Absorption at 0, requires μ < 0.
    Absorbing,
    /// Reflecting (μ ∈ (−1, 0)) or entrance (μ ≥ 0) boundary at 0.
    Reflecting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqbParams {
    lambda0: f64,
    nu: f64,
    mu: f64,
    boundary: Boundary,
}

impl SqbParams {
    pub fn new(lambda0: f64, nu: f64, boundary: Boundary) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("nu = {nu} must be positive")));
        }
        if !lambda0.is_finite() {
            return Err(Error::invalid("lambda0 must be finite"));
        }
        let mu = 2.0 * lambda0 / (nu * nu) - 1.0;
        match boundary {
            Boundary::Absorbing if !(mu < 0.0) => {
                return Err(Error::invalid(format!("absorbing boundary needs index < 0, got {mu}")))
            }
            Boundary::Reflecting if !(mu > -1.0) => {
                return Err(Error::invalid(format!("reflecting boundary needs index > -1, got {mu}")))
            }
            _ => {}
        }
        Ok(SqbParams {
            lambda0,
            nu,
            mu,
            boundary,
        })
    }

    /// Parameters from the index μ instead of the drift.
    pub fn from_index(mu: f64, nu: f64, boundary: Boundary) -> Result<Self> {
        Self::new((mu + 1.0) * nu * nu / 2.0, nu, boundary)
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Order of the Bessel function in the transition density.
    pub fn mu_tilde(&self) -> f64 {
        match self.boundary {
            Boundary::Absorbing => self.mu.abs(),
            Boundary::Reflecting => self.mu,
        }
    }

    /// (2/ν)², the factor taking states to the ν = 2 process.
    fn to_std(&self) -> f64 {
        4.0 / (self.nu * self.nu)
    }

    fn require_absorbing(&self, what: &'static str) -> Result<()> {
        if self.boundary == Boundary::Absorbing {
            Ok(())
        } else {
            Err(Error::SchemeMismatch {
                scheme: what,
                reason: format!("requires an absorbing boundary (index {} < 0)", self.mu),
            })
        }
    }

    /// Transition density p(t; x, y); sub-stochastic when absorbing.
    pub fn transition_pdf(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        Ok(self.ln_transition_pdf(t, x, y)?.exp())
    }

    pub fn ln_transition_pdf(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        if !(t > 0.0) || !(x >= 0.0) || !(y > 0.0) {
            return Err(Error::domain("transition_pdf", format!("t={t}, x={x}, y={y}")));
        }
        let s = self.to_std();
        let (x, y) = (x * s, y * s);
        let mu = self.mu;
        let l = if x == 0.0 {
            if self.boundary == Boundary::Absorbing {
                return Ok(f64::NEG_INFINITY);
            }
            // Gamma(μ+1, 1/2t) law started from the origin.
            mu * y.ln() - y / (2.0 * t) - (mu + 1.0) * (2.0 * t).ln() - ln_gamma(mu + 1.0)
        } else {
            -(2.0 * t).ln() + 0.5 * mu * (y / x).ln() - (x + y) / (2.0 * t)
                + ln_bessel_i(self.mu_tilde(), (x * y).sqrt() / t)?
        };
        Ok(l + s.ln())
    }

    /// P{τ0 > t} for the absorbing process started at x0.
    pub fn survival_probability(&self, x0: f64, t: f64) -> Result<f64> {
        self.require_absorbing("survival_probability")?;
        reg_gamma_lower(self.mu.abs(), x0 * self.to_std() / (2.0 * t))
    }

    /// P{τ0 ≤ t}.
    pub fn absorption_probability(&self, x0: f64, t: f64) -> Result<f64> {
        self.require_absorbing("absorption_probability")?;
        reg_gamma_upper(self.mu.abs(), x0 * self.to_std() / (2.0 * t))
    }

    /// Density of the first hitting time of 0.
    pub fn fht_pdf(&self, x0: f64, tau: f64) -> Result<f64> {
        self.require_absorbing("fht_pdf")?;
        if !(tau > 0.0) {
            return Ok(0.0);
        }
        let a = self.mu.abs();
        let z = x0 * self.to_std() / (2.0 * tau);
        Ok((a * z.ln() - z - tau.ln() - ln_gamma(a)).exp())
    }

    /// Exact mean E[X_t] of the absorbed process.
    pub fn exact_mean(&self, x0: f64, t: f64) -> Result<f64> {
        self.require_absorbing("exact_mean")?;
        if !(x0 > 0.0) || !(t >= 0.0) {
            return Err(Error::domain("exact_mean", format!("x0={x0}, t={t}")));
        }
        if t == 0.0 {
            return Ok(x0);
        }
        let s = self.to_std();
        let x = x0 * s;
        let a = self.mu.abs();
        let lambda0 = 2.0 * (self.mu + 1.0);
        let z = x / (2.0 * t);
        let first = (x + lambda0 * t) * reg_gamma_lower(a, z)?;
        let second = x * ((a - 1.0) * z.ln() - z - ln_gamma(a)).exp();
        Ok((first + second) / s)
    }

    /// Bridge density of X_t given X_{t1} = x1 and X_{t2} = x2. With x2 = 0
    /// the bridge is conditioned on absorption exactly at t2.
    pub fn bridge_pdf(&self, t1: f64, t2: f64, t: f64, x1: f64, x2: f64, x: f64) -> Result<f64> {
        if !(t1 < t && t < t2) {
            return Err(Error::domain("bridge_pdf", format!("need t1 < t < t2, got {t1}, {t}, {t2}")));
        }
        if !(x > 0.0) {
            return Ok(0.0);
        }
        if x2 > 0.0 {
            let den = self.ln_transition_pdf(t2 - t1, x1, x2)?;
            if den == f64::NEG_INFINITY {
                return Err(Error::domain("bridge_pdf", "endpoint density underflows"));
            }
            let l = self.ln_transition_pdf(t - t1, x1, x)? + self.ln_transition_pdf(t2 - t, x, x2)? - den;
            return Ok(l.exp());
        }
        self.require_absorbing("bridge_pdf with x2 = 0")?;
        let mt = self.mu_tilde();
        let nu2 = self.nu * self.nu;
        let l = self.ln_transition_pdf(t - t1, x1, x)? + 0.5 * (mt - self.mu) * (x / x1).ln()
            - 2.0 * x / (nu2 * (t2 - t))
            + 2.0 * x1 / (nu2 * (t2 - t1))
            + (1.0 + mt) * ((t2 - t1) / (t2 - t)).ln();
        Ok(l.exp())
    }

    /// τ0 = x0 / (2 G(|μ|, 1)).
    pub fn sample_fht<S: VariateSource + ?Sized>(&self, x0: f64, src: &mut S) -> Result<f64> {
        self.require_absorbing("sample_fht")?;
        if !(x0 > 0.0) {
            return Err(Error::domain("sample_fht", format!("x0 = {x0} must be positive")));
        }
        let y = src.gamma(self.mu.abs(), 1.0);
        Ok(x0 * self.to_std() / (2.0 * y))
    }

    /// Samples a path on `grid` with the chosen scheme.
    pub fn sample_path<S: VariateSource + ?Sized>(
        &self,
        grid: &TimeGrid,
        scheme: Scheme,
        x0: f64,
        src: &mut S,
    ) -> Result<PathSkeleton> {
        let mut values = vec![0.0; grid.len()];
        let fht = self.sample_into(grid, scheme, x0, src, &mut values)?;
        Ok(PathSkeleton {
            grid: grid.clone(),
            values,
            fht,
        })
    }

    /// Writes the path into `out` (one value per grid point) and returns the
    /// hitting time (or +∞).
    pub fn sample_into<S: VariateSource + ?Sized>(
        &self,
        grid: &TimeGrid,
        scheme: Scheme,
        x0: f64,
        src: &mut S,
        out: &mut [f64],
    ) -> Result<f64> {
        if !(x0 > 0.0) {
            return Err(Error::domain("sample_path", format!("x0 = {x0} must be positive")));
        }
        if out.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "output buffer holds {} values, grid has {}",
                out.len(),
                grid.len()
            )));
        }
        let s = self.to_std();
        let x = x0 * s;
        let fht = match scheme {
            Scheme::SeqNoAbs => {
                if self.boundary != Boundary::Reflecting {
                    return Err(Error::SchemeMismatch {
                        scheme: scheme.name(),
                        reason: "requires a non-absorbing boundary".into(),
                    });
                }
                seq_noabs(self.mu, x, grid, src, out)?;
                f64::INFINITY
            }
            Scheme::SeqAbs => {
                self.require_absorbing(scheme.name())?;
                seq_abs(self.mu.abs(), x, grid, src, out)?
            }
            Scheme::SeqFht | Scheme::BridgeFht => {
                self.require_absorbing(scheme.name())?;
                if scheme == Scheme::BridgeFht && !grid.is_dyadic() {
                    return Err(Error::SchemeMismatch {
                        scheme: scheme.name(),
                        reason: format!("needs 2^k steps, grid has {}", grid.steps()),
                    });
                }
                let y = src.gamma(self.mu.abs(), 1.0);
                let tau0 = x / (2.0 * y);
                bridge_to_zero(self.mu.abs(), x, tau0, grid, scheme, src, out)?;
                tau0
            }
        };
        if s != 1.0 {
            for v in out.iter_mut() {
                *v /= s;
            }
        }
        out[0] = x0;
        Ok(fht)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Sequential sampling without absorption (randomized gamma, first type).
    SeqNoAbs,
    /// Sequential sampling with absorption (third type plus survival test).
    SeqAbs,
    /// Sequential sampling conditional on the hitting time (first type).
    SeqFht,
    /// Dyadic bridge sampling conditional on the hitting time (second type).
    BridgeFht,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::SeqNoAbs => "SEQ_NOABS",
            Scheme::SeqAbs => "SEQ_ABS",
            Scheme::SeqFht => "SEQ_FHT",
            Scheme::BridgeFht => "BRIDGE_FHT",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "SEQ_NOABS" => Some(Scheme::SeqNoAbs),
            "SEQ_ABS" => Some(Scheme::SeqAbs),
            "SEQ_FHT" => Some(Scheme::SeqFht),
            "BRIDGE_FHT" => Some(Scheme::BridgeFht),
            _ => None,
        }
    }

    /// Quasi-random coordinates consumed by one path over `steps` steps.
    /// The layout is fixed: absorbed steps still skip their coordinates.
    pub fn dimensions(&self, steps: usize) -> usize {
        match self {
            Scheme::SeqNoAbs => 2 * steps,
            Scheme::SeqAbs => 3 * steps,
            Scheme::SeqFht => 1 + 2 * steps,
            Scheme::BridgeFht => 1 + 3 * steps,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

// Figure-1 style sampler: X_n ~ G(Y + μ + 1, 1/2Δ), Y ~ P(X_{n-1}/2Δ).
fn seq_noabs<S: VariateSource + ?Sized>(mu: f64, x0: f64, grid: &TimeGrid, src: &mut S, out: &mut [f64]) -> Result<()> {
    let t = grid.times();
    out[0] = x0;
    for n in 1..t.len() {
        let dt = t[n] - t[n - 1];
        let y = src.discrete(&DiscreteLogConcave::poisson(out[n - 1] / (2.0 * dt))?);
        out[n] = src.gamma(y as f64 + mu + 1.0, 1.0 / (2.0 * dt));
    }
    Ok(())
}

// Sequential sampler with absorption; returns the grid-snapped hitting time.
fn seq_abs<S: VariateSource + ?Sized>(a: f64, x0: f64, grid: &TimeGrid, src: &mut S, out: &mut [f64]) -> Result<f64> {
    let t = grid.times();
    out[0] = x0;
    let mut tau = f64::INFINITY;
    for n in 1..t.len() {
        if tau.is_finite() {
            out[n] = 0.0;
            src.skip(3);
            continue;
        }
        let dt = t[n] - t[n - 1];
        let lambda = out[n - 1] / (2.0 * dt);
        let p_absorb = reg_gamma_upper(a, lambda)?;
        if src.uniform() < p_absorb {
            tau = t[n];
            out[n] = 0.0;
            src.skip(2);
            continue;
        }
        let y = src.discrete(&DiscreteLogConcave::inc_gamma(a, lambda)?);
        out[n] = src.gamma(y as f64 + 1.0, 1.0 / (2.0 * dt));
    }
    Ok(tau)
}

/// Samples an SQB path with ν = 2 and index `theta` conditioned to reach 0
/// at time `tau0`, started from `x0`. `scheme` picks sequential or dyadic
/// bridge ordering. Values at t ≥ τ0 are zero.
pub fn bridge_to_zero<S: VariateSource + ?Sized>(
    theta: f64,
    x0: f64,
    tau0: f64,
    grid: &TimeGrid,
    scheme: Scheme,
    src: &mut S,
    out: &mut [f64],
) -> Result<()> {
    let t = grid.times();
    out[0] = x0;
    match scheme {
        Scheme::SeqFht => {
            for n in 1..t.len() {
                if t[n] >= tau0 {
                    out[n] = 0.0;
                    src.skip(2);
                    continue;
                }
                let dt = t[n] - t[n - 1];
                let rem0 = tau0 - t[n - 1];
                let rem1 = tau0 - t[n];
                let lambda = out[n - 1] * rem1 / (2.0 * rem0 * dt);
                let beta = rem0 / (2.0 * dt * rem1);
                let y = src.discrete(&DiscreteLogConcave::poisson(lambda)?);
                out[n] = src.gamma(y as f64 + theta + 1.0, beta);
            }
        }
        Scheme::BridgeFht => {
            let n_steps = t.len() - 1;
            // Terminal node from the start, conditioned on τ0.
            if t[n_steps] >= tau0 {
                out[n_steps] = 0.0;
                src.skip(3);
            } else {
                let tn = t[n_steps];
                let lambda = x0 * (tau0 - tn) / (2.0 * tau0 * tn);
                let beta = tau0 / (2.0 * tn * (tau0 - tn));
                let y = src.discrete(&DiscreteLogConcave::poisson(lambda)?);
                src.skip(1);
                out[n_steps] = src.gamma(y as f64 + theta + 1.0, beta);
            }
            let mut h = n_steps;
            while h >= 2 {
                let half = h / 2;
                let mut n1 = 0;
                while n1 < n_steps {
                    let n2 = n1 + h;
                    let n = n1 + half;
                    out[n] = bridge_node(theta, tau0, t[n1], t[n], t[n2], out[n1], out[n2], src)?;
                    n1 = n2;
                }
                h = half;
            }
        }
        _ => {
            return Err(Error::SchemeMismatch {
                scheme: scheme.name(),
                reason: "not a hitting-time conditioned scheme".into(),
            })
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bridge_node<S: VariateSource + ?Sized>(
    theta: f64,
    tau0: f64,
    t1: f64,
    tn: f64,
    t2: f64,
    x1: f64,
    x2: f64,
    src: &mut S,
) -> Result<f64> {
    if tn >= tau0 {
        src.skip(3);
        return Ok(0.0);
    }
    let t = tn - t1;
    if t2 >= tau0 {
        // Right end already absorbed: bridge from x1 to 0 at τ0.
        let rem0 = tau0 - t1;
        let rem1 = tau0 - tn;
        let lambda = x1 * rem1 / (2.0 * rem0 * t);
        let beta = rem0 / (2.0 * t * rem1);
        let y = src.discrete(&DiscreteLogConcave::poisson(lambda)?);
        src.skip(1);
        return Ok(src.gamma(y as f64 + theta + 1.0, beta));
    }
    let big_t = t2 - t1;
    let lambda = x1 * (big_t - t) / (2.0 * big_t * t) + x2 * t / (2.0 * big_t * (big_t - t));
    let y = src.discrete(&DiscreteLogConcave::poisson(lambda)?);
    let z = src.discrete(&DiscreteLogConcave::bessel(theta, (x1 * x2).sqrt() / big_t)?);
    let beta = big_t / (2.0 * t * (big_t - t));
    Ok(src.gamma(y as f64 + 2.0 * z as f64 + theta + 1.0, beta))
}

/// Strictly increasing observation times starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Arc<[f64]>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("time grid must start at 0"));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::invalid(format!("time grid not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(TimeGrid { times: times.into() })
    }

    /// t_i = i T / N, i = 0..=N.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || steps == 0 {
            return Err(Error::invalid(format!("uniform grid needs T > 0 and N >= 1, got {horizon}, {steps}")));
        }
        let mut times: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
        times[steps] = horizon;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of grid points (steps + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn is_dyadic(&self) -> bool {
        self.steps().is_power_of_two() && self.steps() >= 2
    }

    /// Same grid under a monotone time map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<TimeGrid> {
        TimeGrid::new(self.times.iter().map(|&t| f(t)).collect())
    }
}

/// A sampled path: values on the grid plus the hitting time of 0
/// (exact, grid-snapped, or +∞).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub fht: f64,
}

impl PathSkeleton {
    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn is_absorbed(&self) -> bool {
        self.fht.is_finite() && self.fht <= self.grid.horizon()
    }
}
