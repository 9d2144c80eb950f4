//! Randomized gamma distributions of the first, second and third types:
//! gamma laws whose shape is shifted by a Poisson, Poisson plus twice a
//! Bessel, or an incomplete-gamma randomizer.

use crate::discrete::DiscreteLogConcave;
use crate::error::{Error, Result};
use crate::specfun::{ln_bessel_i, ln_gamma, ln_reg_gamma_lower};
use crate::variates::VariateSource;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandGammaSpec {
    /// G(Y1 + θ + 1, β), Y1 ~ P(λ).
    Type1 { theta: f64, beta: f64, lambda: f64 },
    /// G(Y1 + 2 Y2 + θ + 1, β), Y1 ~ P((a+b)/4β), Y2 ~ Bes(θ, √(ab)/2β).
    Type2 { theta: f64, beta: f64, a: f64, b: f64 },
    /// G(Y3 + 1, β), Y3 ~ IΓ(θ, λ).
    Type3 { theta: f64, beta: f64, lambda: f64 },
}

fn check_rate(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma rate {beta} must be positive and finite")))
    }
}

impl RandGammaSpec {
    pub fn type1(theta: f64, beta: f64, lambda: f64) -> Result<Self> {
        check_rate(beta)?;
        if !(theta > -1.0) {
            return Err(Error::invalid(format!("theta {theta} must exceed -1")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda {lambda} must be >= 0")));
        }
        Ok(RandGammaSpec::Type1 { theta, beta, lambda })
    }

    pub fn type2(theta: f64, beta: f64, a: f64, b: f64) -> Result<Self> {
        check_rate(beta)?;
        if !(theta > -1.0) {
            return Err(Error::invalid(format!("theta {theta} must exceed -1")));
        }
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::invalid(format!("type-2 parameters a={a}, b={b} must be positive")));
        }
        Ok(RandGammaSpec::Type2 { theta, beta, a, b })
    }

    pub fn type3(theta: f64, beta: f64, lambda: f64) -> Result<Self> {
        check_rate(beta)?;
        if !(theta > 0.0) {
            return Err(Error::invalid(format!("theta {theta} must be positive")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda {lambda} must be positive")));
        }
        Ok(RandGammaSpec::Type3 { theta, beta, lambda })
    }

    pub fn sample<S: VariateSource + ?Sized>(&self, src: &mut S) -> Result<f64> {
        match *self {
            RandGammaSpec::Type1 { theta, beta, lambda } => {
                let y = src.discrete(&DiscreteLogConcave::poisson(lambda)?);
                Ok(src.gamma(y as f64 + theta + 1.0, beta))
            }
            RandGammaSpec::Type2 { theta, beta, a, b } => {
                let y1 = src.discrete(&DiscreteLogConcave::poisson((a + b) / (4.0 * beta))?);
                let y2 = src.discrete(&DiscreteLogConcave::bessel(theta, (a * b).sqrt() / (2.0 * beta))?);
                Ok(src.gamma(y1 as f64 + 2.0 * y2 as f64 + theta + 1.0, beta))
            }
            RandGammaSpec::Type3 { theta, beta, lambda } => {
                let y = src.discrete(&DiscreteLogConcave::inc_gamma(theta, lambda)?);
                Ok(src.gamma(y as f64 + 1.0, beta))
            }
        }
    }

    /// Natural log of the density at y > 0.
    pub fn ln_density(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            RandGammaSpec::Type1 { theta, beta, lambda } => {
                if lambda == 0.0 {
                    let k = theta + 1.0;
                    return k * beta.ln() + (k - 1.0) * y.ln() - beta * y - ln_gamma(k);
                }
                let z = 2.0 * (beta * lambda * y).sqrt();
                beta.ln() + 0.5 * theta * (beta.ln() - lambda.ln() + y.ln()) - lambda - beta * y
                    + ln_bessel_i(theta, z).unwrap_or(f64::NAN)
            }
            RandGammaSpec::Type2 { theta, beta, a, b } => {
                let norm = ln_bessel_i(theta, (a * b).sqrt() / (2.0 * beta)).unwrap_or(f64::NAN);
                beta.ln() - norm - (a + b) / (4.0 * beta) - beta * y
                    + ln_bessel_i(theta, (a * y).sqrt()).unwrap_or(f64::NAN)
                    + ln_bessel_i(theta, (b * y).sqrt()).unwrap_or(f64::NAN)
            }
            RandGammaSpec::Type3 { theta, beta, lambda } => {
                let z = 2.0 * (beta * lambda * y).sqrt();
                beta.ln() - ln_reg_gamma_lower(theta, lambda).unwrap_or(f64::NAN)
                    - 0.5 * theta * (beta.ln() - lambda.ln() + y.ln())
                    - lambda
                    - beta * y
                    + ln_bessel_i(theta, z).unwrap_or(f64::NAN)
            }
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        self.ln_density(y).exp()
    }

    /// E[Y] = (E[shape]) / β.
    pub fn mean(&self) -> f64 {
        match *self {
            RandGammaSpec::Type1 { theta, beta, lambda } => (lambda + theta + 1.0) / beta,
            RandGammaSpec::Type2 { theta, beta, a, b } => {
                let bes = DiscreteLogConcave::bessel(theta, (a * b).sqrt() / (2.0 * beta))
                    .map(|d| d.mean())
                    .unwrap_or(f64::NAN);
                ((a + b) / (4.0 * beta) + 2.0 * bes + theta + 1.0) / beta
            }
            RandGammaSpec::Type3 { theta, beta, lambda } => {
                let ig = DiscreteLogConcave::inc_gamma(theta, lambda)
                    .map(|d| d.mean())
                    .unwrap_or(f64::NAN);
                (ig + 1.0) / beta
            }
        }
    }
}
