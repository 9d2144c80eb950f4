//! Discrete log-concave randomizers: Poisson P(λ), Bessel Bes(θ, b) and
//! incomplete-gamma IΓ(θ, λ), with acceptance-rejection, chop-down search
//! from the mode, and a monotone inverse CDF for quasi-random input.

use rand::Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};
use crate::specfun::{ln_bessel_i, ln_gamma, ln_reg_gamma_lower, reg_gamma_upper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiscreteKind {
    Poisson,
    Bessel,
    IncGamma,
}

/// A discrete log-concave law on {0, 1, 2, …} described by its pmf
/// recurrence and the pmf value at the mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteLogConcave {
    kind: DiscreteKind,
    /// λ for Poisson, θ for Bessel and IΓ.
    param1: f64,
    /// b for Bessel, λ for IΓ, unused for Poisson.
    param2: f64,
    mode: u64,
    log_pmf_at_mode: f64,
    // log normaliser, so that ln p_n = ln_weight(n) - ln_norm
    ln_norm: f64,
    degenerate: bool,
}

/// A draw together with the work spent producing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    pub value: u64,
    /// Proposals (rejection) or probability subtractions (chop-down).
    pub iterations: u32,
}

impl DiscreteLogConcave {
    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("Poisson intensity {lambda} must be finite and >= 0")));
        }
        if lambda == 0.0 {
            return Ok(Self::point_mass(DiscreteKind::Poisson, lambda, 0.0));
        }
        let mut d = DiscreteLogConcave {
            kind: DiscreteKind::Poisson,
            param1: lambda,
            param2: 0.0,
            mode: lambda.floor() as u64,
            log_pmf_at_mode: 0.0,
            ln_norm: lambda,
            degenerate: false,
        };
        d.log_pmf_at_mode = d.ln_pmf(d.mode);
        Ok(d)
    }

    pub fn bessel(theta: f64, b: f64) -> Result<Self> {
        if !(theta > -1.0 && theta.is_finite()) {
            return Err(Error::invalid(format!("Bessel order {theta} must exceed -1")));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("Bessel argument {b} must be finite and >= 0")));
        }
        if b == 0.0 {
            return Ok(Self::point_mass(DiscreteKind::Bessel, theta, b));
        }
        let mode = ((b.hypot(theta) - theta) * 0.5).floor().max(0.0) as u64;
        let mut d = DiscreteLogConcave {
            kind: DiscreteKind::Bessel,
            param1: theta,
            param2: b,
            mode,
            log_pmf_at_mode: 0.0,
            ln_norm: ln_bessel_i(theta, b)?,
            degenerate: false,
        };
        d.log_pmf_at_mode = d.ln_pmf(d.mode);
        Ok(d)
    }

    pub fn inc_gamma(theta: f64, lambda: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid(format!("incomplete-gamma order {theta} must be > 0")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("incomplete-gamma intensity {lambda} must be >= 0")));
        }
        if lambda == 0.0 {
            return Ok(Self::point_mass(DiscreteKind::IncGamma, theta, lambda));
        }
        let mode = (lambda - theta).floor().max(0.0) as u64;
        let mut d = DiscreteLogConcave {
            kind: DiscreteKind::IncGamma,
            param1: theta,
            param2: lambda,
            mode,
            log_pmf_at_mode: 0.0,
            ln_norm: lambda + ln_reg_gamma_lower(theta, lambda)?,
            degenerate: false,
        };
        d.log_pmf_at_mode = d.ln_pmf(d.mode);
        Ok(d)
    }

    fn point_mass(kind: DiscreteKind, param1: f64, param2: f64) -> Self {
        DiscreteLogConcave {
            kind,
            param1,
            param2,
            mode: 0,
            log_pmf_at_mode: 0.0,
            ln_norm: 0.0,
            degenerate: true,
        }
    }

    pub fn kind(&self) -> DiscreteKind {
        self.kind
    }

    pub fn params(&self) -> (f64, f64) {
        (self.param1, self.param2)
    }

    pub fn mode(&self) -> u64 {
        self.mode
    }

    pub fn log_pmf_at_mode(&self) -> f64 {
        self.log_pmf_at_mode
    }

    /// ln p_n evaluated directly (not by recurrence).
    pub fn ln_pmf(&self, n: u64) -> f64 {
        if self.degenerate {
            return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        let nf = n as f64;
        match self.kind {
            DiscreteKind::Poisson => nf * self.param1.ln() - ln_gamma(nf + 1.0) - self.ln_norm,
            DiscreteKind::Bessel => {
                let theta = self.param1;
                (2.0 * nf + theta) * (0.5 * self.param2).ln()
                    - ln_gamma(nf + 1.0)
                    - ln_gamma(nf + theta + 1.0)
                    - self.ln_norm
            }
            DiscreteKind::IncGamma => {
                let theta = self.param1;
                (nf + theta) * self.param2.ln() - ln_gamma(nf + theta + 1.0) - self.ln_norm
            }
        }
    }

    pub fn pmf(&self, n: u64) -> f64 {
        self.ln_pmf(n).exp()
    }

    /// p_{n+1} / p_n.
    #[inline]
    pub fn ratio(&self, n: u64) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let nf = n as f64;
        match self.kind {
            DiscreteKind::Poisson => self.param1 / (nf + 1.0),
            DiscreteKind::Bessel => {
                let h = 0.5 * self.param2;
                h * h / ((nf + 1.0) * (nf + 1.0 + self.param1))
            }
            DiscreteKind::IncGamma => self.param2 / (nf + 1.0 + self.param1),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        match self.kind {
            DiscreteKind::Poisson => self.param1,
            DiscreteKind::Bessel => {
                // E[n] = b I_{θ+1}(b) / (2 I_θ(b))
                let b = self.param2;
                let l1 = ln_bessel_i(self.param1 + 1.0, b).unwrap_or(f64::NAN);
                0.5 * b * (l1 - self.ln_norm).exp()
            }
            DiscreteKind::IncGamma => {
                // E[n] = λ - θ + e^{-λ} λ^θ / (Γ(θ) P(θ, λ))
                let (theta, lambda) = (self.param1, self.param2);
                let extra = theta * lambda.ln() - ln_gamma(theta) - self.ln_norm;
                lambda - theta + extra.exp()
            }
        }
    }

    /// P{Y ≤ mode}.
    fn cdf_at_mode(&self) -> f64 {
        if self.degenerate {
            return 1.0;
        }
        let m = self.mode as f64;
        match self.kind {
            DiscreteKind::Poisson => reg_gamma_upper(m + 1.0, self.param1).unwrap_or(f64::NAN),
            DiscreteKind::IncGamma => {
                let (theta, lambda) = (self.param1, self.param2);
                let hi = ln_reg_gamma_lower(theta + m + 1.0, lambda).unwrap_or(f64::NAN);
                let lo = ln_reg_gamma_lower(theta, lambda).unwrap_or(f64::NAN);
                -(hi - lo).exp_m1()
            }
            DiscreteKind::Bessel => {
                let mut p = self.log_pmf_at_mode.exp();
                let mut s = p;
                let mut n = self.mode;
                while n > 0 {
                    p /= self.ratio(n - 1);
                    n -= 1;
                    s += p;
                    if p < 1e-17 * s {
                        break;
                    }
                }
                s
            }
        }
    }

    /// Smallest n with F(n) ≥ u. Monotone in u; u ≤ 0 gives 0.
    pub fn invert(&self, u: f64) -> u64 {
        if self.degenerate || u <= 0.0 {
            return 0;
        }
        let m = self.mode;
        let mut cdf = self.cdf_at_mode();
        let mut p = self.log_pmf_at_mode.exp();
        let mut n = m;
        if u <= cdf {
            while n > 0 {
                let below = cdf - p;
                if u > below {
                    break;
                }
                cdf = below;
                p /= self.ratio(n - 1);
                n -= 1;
            }
            n
        } else {
            while cdf < u {
                p *= self.ratio(n);
                n += 1;
                if p == 0.0 {
                    break;
                }
                cdf += p;
            }
            n
        }
    }

    /// Chop-down search from the mode for a given uniform: the two frontier
    /// probabilities are compared and the larger is subtracted first.
    /// u = 0 returns the mode.
    pub fn chopdown(&self, u: f64) -> Draw {
        if self.degenerate {
            return Draw { value: 0, iterations: 1 };
        }
        let m = self.mode;
        let pm = self.log_pmf_at_mode.exp();
        let mut u = u - pm;
        let mut iterations = 1;
        if u <= 0.0 {
            return Draw { value: m, iterations };
        }
        let mut right = m + 1;
        let mut pr = pm * self.ratio(m);
        let mut left = m;
        let mut pl = if m > 0 { pm / self.ratio(m - 1) } else { 0.0 };
        loop {
            iterations += 1;
            if pr >= pl {
                if pr == 0.0 {
                    // Rounding left a sliver of mass unassigned.
                    return Draw { value: right - 1, iterations };
                }
                u -= pr;
                if u <= 0.0 {
                    return Draw { value: right, iterations };
                }
                pr *= self.ratio(right);
                right += 1;
            } else {
                left -= 1;
                u -= pl;
                if u <= 0.0 {
                    return Draw { value: left, iterations };
                }
                pl = if left > 0 { pl / self.ratio(left - 1) } else { 0.0 };
            }
        }
    }

    pub fn sample_chopdown<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let u: f64 = rng.sample(Open01);
        self.chopdown(u)
    }

    /// Acceptance-rejection. Poisson with λ ≥ 12 uses a Cauchy envelope; all
    /// other cases use the envelope p_m min{1, e^{1 - p_m |n - m|}}, which is
    /// flat on |n - m| ≤ 1/p_m with geometric tails of ratio e^{-p_m}.
    pub fn sample_rejection<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        if self.degenerate {
            return Draw { value: 0, iterations: 1 };
        }
        if self.kind == DiscreteKind::Poisson && self.param1 >= 12.0 {
            return self.poisson_cauchy(rng);
        }
        self.devroye(rng)
    }

    fn devroye<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let pm = self.log_pmf_at_mode.exp();
        let m = self.mode as i64;
        let k0 = (1.0 / pm).floor() as i64;
        let flat = (2 * k0 + 1) as f64 * pm;
        let decay = (-pm).exp();
        // mass of one geometric tail: p_m e^{1 - p_m (k0+1)} / (1 - e^{-p_m})
        let tail = pm * (1.0 - pm * (k0 + 1) as f64).exp() / -(-pm).exp_m1();
        let total = flat + 2.0 * tail;
        let mut iterations = 0;
        loop {
            iterations += 1;
            let u: f64 = rng.sample::<f64, _>(Open01) * total;
            let (k, envelope) = if u < flat {
                let k = (u / pm).floor() as i64 - k0;
                (k.min(k0), pm)
            } else {
                let e: f64 = rng.sample(Open01);
                let j = (e.ln() / decay.ln()).floor() as i64;
                let k = k0 + 1 + j;
                let k = if u < flat + tail { k } else { -k };
                (k, pm * (1.0 - pm * k.abs() as f64).exp())
            };
            let n = m + k;
            if n < 0 {
                continue;
            }
            let v: f64 = rng.sample(Open01);
            if v * envelope <= self.ln_pmf(n as u64).exp() {
                return Draw { value: n as u64, iterations };
            }
        }
    }

    fn poisson_cauchy<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let lambda = self.param1;
        let sq = (2.0 * lambda).sqrt();
        let alxm = lambda.ln();
        let g = lambda * alxm - ln_gamma(lambda + 1.0);
        let mut iterations = 0;
        loop {
            let (y, em) = loop {
                iterations += 1;
                let y = (std::f64::consts::PI * rng.sample::<f64, _>(Open01)).tan();
                let em = sq * y + lambda;
                if em >= 0.0 {
                    break (y, em.floor());
                }
            };
            let t = 0.9 * (1.0 + y * y) * (em * alxm - ln_gamma(em + 1.0) - g).exp();
            if rng.sample::<f64, _>(Open01) <= t {
                return Draw { value: em as u64, iterations };
            }
        }
    }
}
