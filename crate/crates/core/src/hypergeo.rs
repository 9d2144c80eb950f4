//! Bessel-K and Confluent-U asset price diffusions built from squared Bessel
//! and CIR processes by a measure change with a ρ-excessive function u_ρ and
//! a monotone map F = v_{ρ+r}/u_ρ.

use crate::error::{Error, Result};
use crate::inversion::InverseCdfTable;
use crate::specfun::{ln_bessel_i, ln_bessel_k_pair, ln_gamma, ln_kummer_m, ln_kummer_u};
use crate::sqb::{bridge_to_zero, Boundary, Scheme, TimeGrid};
use crate::transforms::{time_transform, CirParams, CirSampler};
use crate::variates::VariateSource;

/// Shared interface of the two model families.
pub trait HypergeometricModel: std::fmt::Debug + Send + Sync {
    fn mu(&self) -> f64;
    fn nu(&self) -> f64;
    fn rho(&self) -> f64;
    fn r(&self) -> f64;
    /// Mean reversion of the underlying process (0 for a squared Bessel process).
    fn lambda1(&self) -> f64;
    /// ln 𝖥(x).
    fn ln_f(&self, x: f64) -> Result<f64>;
    /// ln u_ρ(x).
    fn ln_u(&self, x: f64) -> Result<f64>;
    /// ln v_{ρ+r}(x), so that 𝖥 = v/u.
    fn ln_v(&self, x: f64) -> Result<f64>;
    /// σ(𝖥(x))/𝖥(x) from the closed form.
    fn sigma_over_f(&self, x: f64) -> Result<f64>;
    /// Density of the tabulated FHT variable (τ0 itself, or the Tricomi variable).
    fn fht_variable_pdf(&self, x0: f64, v: f64) -> Result<f64>;
    /// Rough location of the FHT variable's mass.
    fn fht_variable_hint(&self, x0: f64) -> (f64, f64);
    /// (τ0, hitting time in the time scale of the underlying SQB process).
    fn fht_times(&self, v: f64) -> (f64, f64);
    /// Density of τ0 itself.
    fn fht_pdf(&self, x0: f64, tau: f64) -> Result<f64>;

    /// Underlying process with index μ > 0 and no absorption.
    fn underlying(&self) -> Result<CirParams> {
        let nu = self.nu();
        CirParams::new((self.mu() + 1.0) * nu * nu / 2.0, self.lambda1(), nu, Boundary::Reflecting)
    }

    fn f_map(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(self.ln_f(x)?.exp())
    }

    fn sigma(&self, x: f64) -> Result<f64> {
        Ok(self.f_map(x)? * self.sigma_over_f(x)?)
    }

    /// σ = ν√x |W|/u², with W obtained by differentiating ln u and ln v
    /// numerically. Used to cross-check the closed form.
    fn sigma_wronskian(&self, x: f64) -> Result<f64> {
        // Derivatives in ln x with a Richardson-extrapolated central difference.
        let d = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            let lx = x.ln();
            let c = |h: f64| -> Result<f64> { Ok((f((lx + h).exp())? - f((lx - h).exp())?) / (2.0 * h)) };
            let h = 1e-3;
            Ok((4.0 * c(h / 2.0)? - c(h)?) / 3.0)
        };
        let dlv = d(&|y| self.ln_v(y))? / x;
        let dlu = d(&|y| self.ln_u(y))? / x;
        let ratio = (self.ln_v(x)? - self.ln_u(x)?).exp();
        Ok(self.nu() * x.sqrt() * ratio * (dlv - dlu).abs())
    }

    /// Inverse map F ↦ x by bracketing, bisection in ln x and a Newton polish.
    fn x_map(&self, f: f64) -> Result<f64> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Bracket(format!("F = {f} outside (0, ∞)")));
        }
        let target = f.ln();
        let g = |lx: f64| -> Result<f64> { Ok(self.ln_f(lx.exp())? - target) };
        let (mut a, mut b) = (0.0f64, 0.0f64);
        let ga = g(0.0)?;
        if ga < 0.0 {
            b = 1.0;
            while g(b)? < 0.0 {
                a = b;
                b *= 2.0;
                if b > 700.0 {
                    return Err(Error::Bracket(format!("no x with F(x) = {f}")));
                }
            }
        } else {
            a = -1.0;
            while g(a)? > 0.0 {
                b = a;
                a *= 2.0;
                if a < -700.0 {
                    return Err(Error::Bracket(format!("no x with F(x) = {f}")));
                }
            }
        }
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if g(m)? < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let mut lx = 0.5 * (a + b);
        for _ in 0..3 {
            let x = lx.exp();
            // d ln F / d ln x = √x (σ/F)/ν
            let slope = x.sqrt() * self.sigma_over_f(x)? / self.nu();
            let step = g(lx)? / slope;
            if !step.is_finite() || step.abs() > (b - a).abs().max(1e-12) {
                break;
            }
            lx -= step;
            if step.abs() < 1e-15 * lx.abs().max(1.0) {
                break;
            }
        }
        Ok(lx.exp())
    }

    /// Inverse-CDF table of the FHT variable for a start at x0.
    fn fht_table(&self, x0: f64) -> Result<InverseCdfTable> {
        InverseCdfTable::build(
            |v| self.fht_variable_pdf(x0, v).unwrap_or(0.0),
            self.fht_variable_hint(x0),
            256,
        )
    }

    /// e^{−ρT} u(xN)/u(x0) in log space.
    fn weight_factor(&self, x0: f64, xn: f64, horizon: f64) -> Result<f64> {
        if !(xn > 0.0) {
            return Err(Error::domain("weight_factor", format!("x_N = {xn} must be positive")));
        }
        Ok((-self.rho() * horizon + self.ln_u(xn)? - self.ln_u(x0)?).exp())
    }
}

fn check_common(rho: f64, r: f64, c: f64, mu: f64, nu: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho = {rho} must be positive")));
    }
    if !(r > -rho && r.is_finite()) {
        return Err(Error::invalid(format!("r = {r} must exceed -rho")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("c = {c} must be positive")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("mu = {mu} must be positive")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid(format!("nu = {nu} must be positive")));
    }
    Ok(())
}

/// 𝖥(x) = c I_μ(2√(2(ρ+r)x)/ν) / K_μ(2√(2ρx)/ν) over a squared Bessel
/// process of index μ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK {
    pub rho: f64,
    pub r: f64,
    pub c: f64,
    pub mu: f64,
    pub nu: f64,
}

impl BesselK {
    pub fn new(rho: f64, r: f64, c: f64, mu: f64, nu: f64) -> Result<Self> {
        check_common(rho, r, c, mu, nu)?;
        Ok(BesselK { rho, r, c, mu, nu })
    }

    fn alpha(&self) -> f64 {
        2.0 * (2.0 * (self.rho + self.r)).sqrt() / self.nu
    }

    fn beta(&self) -> f64 {
        2.0 * (2.0 * self.rho).sqrt() / self.nu
    }

    /// Boundary 0 is exit for μ ≥ 1 and regular killing below.
    pub fn is_exit_boundary(&self) -> bool {
        self.mu >= 1.0
    }
}

impl HypergeometricModel for BesselK {
    fn mu(&self) -> f64 {
        self.mu
    }
    fn nu(&self) -> f64 {
        self.nu
    }
    fn rho(&self) -> f64 {
        self.rho
    }
    fn r(&self) -> f64 {
        self.r
    }
    fn lambda1(&self) -> f64 {
        0.0
    }

    fn ln_f(&self, x: f64) -> Result<f64> {
        let sx = x.sqrt();
        let lk = ln_bessel_k_pair(self.mu, self.beta() * sx)?.0;
        Ok(self.c.ln() + ln_bessel_i(self.mu, self.alpha() * sx)? - lk)
    }

    fn ln_u(&self, x: f64) -> Result<f64> {
        Ok(-0.5 * self.mu * x.ln() + ln_bessel_k_pair(self.mu, self.beta() * x.sqrt())?.0)
    }

    fn ln_v(&self, x: f64) -> Result<f64> {
        Ok(self.c.ln() - 0.5 * self.mu * x.ln() + ln_bessel_i(self.mu, self.alpha() * x.sqrt())?)
    }

    fn sigma_over_f(&self, x: f64) -> Result<f64> {
        let sx = x.sqrt();
        let (a, b) = (self.alpha(), self.beta());
        let w = a * sx;
        let z = b * sx;
        let ri = (ln_bessel_i(self.mu + 1.0, w)? - ln_bessel_i(self.mu, w)?).exp();
        let (k0, k1) = ln_bessel_k_pair(self.mu, z)?;
        let rk = (k1 - k0).exp();
        Ok(0.5 * self.nu * (a * ri + b * rk))
    }

    /// Generalised inverse Gaussian law of τ0.
    fn fht_variable_pdf(&self, x0: f64, tau: f64) -> Result<f64> {
        self.fht_pdf(x0, tau)
    }

    fn fht_variable_hint(&self, x0: f64) -> (f64, f64) {
        let c = 2.0 * x0 / (self.nu * self.nu);
        let m1 = self.mu + 1.0;
        let mode = 2.0 * c / (m1 + (m1 * m1 + 4.0 * self.rho * c).sqrt());
        (mode * 0.1, mode * 10.0)
    }

    fn fht_times(&self, v: f64) -> (f64, f64) {
        (v, v)
    }

    fn fht_pdf(&self, x0: f64, tau: f64) -> Result<f64> {
        if !(tau > 0.0) {
            return Ok(0.0);
        }
        let nu2 = self.nu * self.nu;
        let ln_norm = 0.5 * self.mu * (2.0 * x0 / (self.rho * nu2)).ln()
            - std::f64::consts::LN_2
            - ln_bessel_k_pair(self.mu, self.beta() * x0.sqrt())?.0;
        Ok((ln_norm - (self.mu + 1.0) * tau.ln() - self.rho * tau - 2.0 * x0 / (nu2 * tau)).exp())
    }
}

/// 𝖥(x) = c M((ρ+r)/λ1, μ+1, κx) / U(ρ/λ1, μ+1, κx) over a CIR process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfluentU {
    pub c: f64,
    pub rho: f64,
    pub lambda1: f64,
    pub mu: f64,
    pub nu: f64,
    pub r: f64,
}

impl ConfluentU {
    pub fn new(c: f64, rho: f64, lambda1: f64, mu: f64, nu: f64, r: f64) -> Result<Self> {
        check_common(rho, r, c, mu, nu)?;
        if !(lambda1 > 0.0 && lambda1.is_finite()) {
            return Err(Error::invalid(format!("lambda1 = {lambda1} must be positive")));
        }
        Ok(ConfluentU {
            c,
            rho,
            lambda1,
            mu,
            nu,
            r,
        })
    }

    /// υ = ρ/λ1.
    pub fn upsilon(&self) -> f64 {
        self.rho / self.lambda1
    }

    /// κ = 2λ1/ν².
    pub fn kappa(&self) -> f64 {
        2.0 * self.lambda1 / (self.nu * self.nu)
    }

    /// λ0 = (μ+1)ν²/2 of the underlying CIR process.
    pub fn lambda0(&self) -> f64 {
        (self.mu + 1.0) * self.nu * self.nu / 2.0
    }

    fn a_v(&self) -> f64 {
        (self.rho + self.r) / self.lambda1
    }

    /// Tricomi variable 𝒯(τ) = e^{−λ1τ}/(1 − e^{−λ1τ}).
    pub fn tricomi_of_tau(&self, tau: f64) -> f64 {
        1.0 / (self.lambda1 * tau).exp_m1()
    }

    /// Inverse of [`Self::tricomi_of_tau`].
    pub fn tau_of_tricomi(&self, t: f64) -> f64 {
        (1.0 / t).ln_1p() / self.lambda1
    }

    /// Tricomi exponential density with a = υ, b = μ+1, z = κx0.
    pub fn tricomi_pdf(&self, x0: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Ok(0.0);
        }
        let (a, b, z) = (self.upsilon(), self.mu + 1.0, self.kappa() * x0);
        let l = -z * t + (a - 1.0) * t.ln() + (b - a - 1.0) * t.ln_1p() - ln_gamma(a) - ln_kummer_u(a, b, z)?;
        Ok(l.exp())
    }
}

impl HypergeometricModel for ConfluentU {
    fn mu(&self) -> f64 {
        self.mu
    }
    fn nu(&self) -> f64 {
        self.nu
    }
    fn rho(&self) -> f64 {
        self.rho
    }
    fn r(&self) -> f64 {
        self.r
    }
    fn lambda1(&self) -> f64 {
        self.lambda1
    }

    fn ln_f(&self, x: f64) -> Result<f64> {
        let z = self.kappa() * x;
        let b = self.mu + 1.0;
        Ok(self.c.ln() + ln_kummer_m(self.a_v(), b, z)? - ln_kummer_u(self.upsilon(), b, z)?)
    }

    fn ln_u(&self, x: f64) -> Result<f64> {
        ln_kummer_u(self.upsilon(), self.mu + 1.0, self.kappa() * x)
    }

    fn ln_v(&self, x: f64) -> Result<f64> {
        Ok(self.c.ln() + ln_kummer_m(self.a_v(), self.mu + 1.0, self.kappa() * x)?)
    }

    fn sigma_over_f(&self, x: f64) -> Result<f64> {
        let k = self.kappa();
        let z = k * x;
        let b = self.mu + 1.0;
        let (av, ups) = (self.a_v(), self.upsilon());
        let rm = (ln_kummer_m(av + 1.0, b + 1.0, z)? - ln_kummer_m(av, b, z)?).exp();
        let ru = (ln_kummer_u(ups + 1.0, b + 1.0, z)? - ln_kummer_u(ups, b, z)?).exp();
        Ok(self.nu * x.sqrt() * k * (av / b * rm + ups * ru))
    }

    fn fht_variable_pdf(&self, x0: f64, t: f64) -> Result<f64> {
        self.tricomi_pdf(x0, t)
    }

    fn fht_variable_hint(&self, x0: f64) -> (f64, f64) {
        let z = self.kappa() * x0;
        let scale = self.upsilon().max(1.0) / z;
        (scale * 1e-3, scale * 10.0)
    }

    fn fht_times(&self, t: f64) -> (f64, f64) {
        (self.tau_of_tricomi(t), 1.0 / (self.lambda1 * t))
    }

    /// q(τ) = |𝒯'(τ)| p(𝒯(τ)).
    fn fht_pdf(&self, x0: f64, tau: f64) -> Result<f64> {
        if !(tau > 0.0) {
            return Ok(0.0);
        }
        let e = (self.lambda1 * tau).exp_m1();
        let t = 1.0 / e;
        let jac = self.lambda1 * (e + 1.0) / (e * e);
        Ok(jac * self.tricomi_pdf(x0, t)?)
    }
}

/// Exact path sampler: hitting time from the tabulated law, then a bridge of
/// the underlying process down to 0, mapped through 𝖥.
#[derive(Debug, Clone)]
pub struct ExactSampler<M> {
    model: M,
    grid: TimeGrid,
    s_grid: TimeGrid,
    decay: Vec<f64>,
    scheme: Scheme,
    f0: f64,
    x0: f64,
    table: InverseCdfTable,
}

impl<M: HypergeometricModel> ExactSampler<M> {
    pub fn new(model: M, grid: TimeGrid, scheme: Scheme, f0: f64) -> Result<Self> {
        if !matches!(scheme, Scheme::SeqFht | Scheme::BridgeFht) {
            return Err(Error::SchemeMismatch {
                scheme: scheme.name(),
                reason: "exact F-diffusion paths need a hitting-time conditioned scheme".into(),
            });
        }
        if scheme == Scheme::BridgeFht && !grid.is_dyadic() {
            return Err(Error::SchemeMismatch {
                scheme: scheme.name(),
                reason: format!("needs 2^k steps, grid has {}", grid.steps()),
            });
        }
        let x0 = model.x_map(f0)?;
        let table = model.fht_table(x0)?;
        let l1 = model.lambda1();
        let s_grid = grid.map(|t| time_transform(l1, t))?;
        let decay = grid.times().iter().map(|&t| (-l1 * t).exp()).collect();
        Ok(ExactSampler {
            model,
            grid,
            s_grid,
            decay,
            scheme,
            f0,
            x0,
            table,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn table(&self) -> &InverseCdfTable {
        &self.table
    }

    pub fn dimensions(&self) -> usize {
        self.scheme.dimensions(self.grid.steps())
    }

    /// τ0 drawn by inversion of the tabulated law.
    pub fn sample_fht<S: VariateSource + ?Sized>(&self, src: &mut S) -> f64 {
        self.model.fht_times(self.table.invert(src.uniform())).0
    }

    /// Writes the underlying path (x-space) into `out`; returns (τ0, SQB-time τ0).
    pub fn sample_underlying<S: VariateSource + ?Sized>(&self, src: &mut S, out: &mut [f64]) -> Result<(f64, f64)> {
        if out.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "output buffer holds {} values, grid has {}",
                out.len(),
                self.grid.len()
            )));
        }
        let v = self.table.invert(src.uniform());
        let (tau0, sigma0) = self.model.fht_times(v);
        let nu = self.model.nu();
        let scale = 4.0 / (nu * nu);
        bridge_to_zero(self.model.mu(), self.x0 * scale, sigma0, &self.s_grid, self.scheme, src, out)?;
        for (x, d) in out.iter_mut().zip(&self.decay) {
            *x = *x / scale * d;
        }
        out[0] = self.x0;
        Ok((tau0, sigma0))
    }

    /// Writes F on the grid into `out` and returns τ0.
    pub fn sample_into<S: VariateSource + ?Sized>(&self, src: &mut S, out: &mut [f64]) -> Result<f64> {
        let (tau0, _) = self.sample_underlying(src, out)?;
        for x in out.iter_mut().skip(1) {
            *x = if *x > 0.0 { self.model.f_map(*x)? } else { 0.0 };
        }
        out[0] = self.f0;
        Ok(tau0)
    }
}

/// Weighted sampler: the underlying process is simulated without absorption
/// and each path carries the factor e^{−ρT} u(X_N)/u(X_0).
#[derive(Debug, Clone)]
pub struct WeightedSampler<M> {
    model: M,
    cir: CirSampler,
    f0: f64,
    x0: f64,
    ln_u0: f64,
}

impl<M: HypergeometricModel> WeightedSampler<M> {
    /// Refuses μ ≥ 1, where the estimator's variance is not guaranteed
    /// finite, unless `force` is set.
    pub fn new(model: M, grid: TimeGrid, f0: f64, force: bool) -> Result<Self> {
        if model.mu() >= 1.0 && !force {
            return Err(Error::invalid(format!(
                "weighted estimator may have infinite variance for mu = {} >= 1",
                model.mu()
            )));
        }
        let x0 = model.x_map(f0)?;
        let cir = CirSampler::new(model.underlying()?, grid, Scheme::SeqNoAbs)?;
        let ln_u0 = model.ln_u(x0)?;
        Ok(WeightedSampler {
            model,
            cir,
            f0,
            x0,
            ln_u0,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn grid(&self) -> &TimeGrid {
        self.cir.grid()
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dimensions(&self) -> usize {
        Scheme::SeqNoAbs.dimensions(self.grid().steps())
    }

    /// Writes F on the grid into `out` and returns the path weight.
    pub fn sample_into<S: VariateSource + ?Sized>(&self, src: &mut S, out: &mut [f64]) -> Result<f64> {
        self.cir.sample_into(self.x0, src, out)?;
        let xn = out[out.len() - 1];
        let w = if xn > 0.0 {
            (-self.model.rho() * self.grid().horizon() + self.model.ln_u(xn)? - self.ln_u0).exp()
        } else {
            return Err(Error::domain("weight_factor", "X_N = 0"));
        };
        for x in out.iter_mut().skip(1) {
            *x = self.model.f_map(*x)?;
        }
        out[0] = self.f0;
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_to_infinity, Tolerance};
    use crate::stats::{ks_pvalue, ks_statistic_sorted_cdf, ks_test};
    use crate::variates::PseudoRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bk() -> BesselK {
        BesselK::new(0.001, 0.02, 154.4870, 0.25, 2.0).unwrap()
    }

    fn cu() -> ConfluentU {
        ConfluentU::new(788.3679, 0.001, 0.0009, 0.25, 2.0, 0.02).unwrap()
    }

    fn models() -> Vec<Box<dyn HypergeometricModel>> {
        vec![
            Box::new(bk()),
            Box::new(cu()),
            Box::new(BesselK::new(0.3, 0.1, 2.0, 1.4, 1.3).unwrap()),
            Box::new(ConfluentU::new(3.0, 0.2, 0.5, 0.6, 1.5, -0.1).unwrap()),
        ]
    }

    #[test]
    fn calibration_gives_quarter_vol() {
        let x = bk().x_map(100.0).unwrap();
        assert!((x - 24.8429063100505).abs() < 1e-6 * x, "{x}");
        assert!((bk().sigma_over_f(x).unwrap() - 0.25).abs() < 1e-4);
        let x = cu().x_map(100.0).unwrap();
        assert!((x - 15.2534318224125).abs() < 1e-6 * x, "{x}");
        assert!((cu().sigma_over_f(x).unwrap() - 0.25).abs() < 1e-4);
    }

    #[test]
    fn maps_increasing_and_round_trip() {
        for m in models() {
            let mut prev = 0.0;
            let mut x: f64 = 1e-6;
            while x <= 1e3 {
                let f = m.f_map(x).unwrap();
                assert!(f > prev, "{m:?} x={x}");
                prev = f;
                let back = m.x_map(f).unwrap();
                assert!((back - x).abs() <= 1e-10 * x, "{m:?} x={x} back={back}");
                x *= 3.1;
            }
            assert!(m.f_map(1e-12).unwrap() < 1e-3 * m.f_map(1.0).unwrap());
        }
    }

    #[test]
    fn sigma_closed_form_matches_wronskian() {
        for m in models() {
            let mut x: f64 = 1e-4;
            while x <= 1e3 {
                let a = m.sigma(x).unwrap();
                let b = m.sigma_wronskian(x).unwrap();
                assert!(a.is_finite() && a > 0.0);
                assert!((a - b).abs() <= 1e-6 * a, "{m:?} x={x}: {a} vs {b}");
                x *= 4.3;
            }
        }
    }

    #[test]
    fn fht_densities_normalised() {
        for m in models() {
            let x0 = m.x_map(100.0).unwrap_or(1.0);
            let hint = m.fht_variable_hint(x0);
            let f = |v: f64| m.fht_variable_pdf(x0, v).unwrap();
            let tol = Tolerance::new(1e-15, 1e-12);
            let mass = integrate(f, 0.0, hint.1, tol).unwrap().value
                + integrate_to_infinity(f, hint.1, hint.1, tol).unwrap().value;
            assert!((mass - 1.0).abs() < 1e-8, "{m:?}: {mass}");
        }
    }

    #[test]
    fn tricomi_time_change_round_trip() {
        let m = cu();
        for t in [1e-3, 0.3, 1.0, 17.0, 4e3] {
            assert!((m.tricomi_of_tau(m.tau_of_tricomi(t)) - t).abs() <= 1e-12 * t);
        }
        let (tau, s) = m.fht_times(2.5);
        assert!((time_transform(m.lambda1, tau) - s).abs() <= 1e-12 * s);
    }

    #[test]
    fn weight_factor_log_space_matches_naive() {
        let m = BesselK::new(0.3, 0.1, 2.0, 0.4, 2.0).unwrap();
        let (x0, xn, t) = (1.3, 0.7, 0.8);
        let naive = (-0.3f64 * t).exp() * m.ln_u(xn).unwrap().exp() / m.ln_u(x0).unwrap().exp();
        let w = m.weight_factor(x0, xn, t).unwrap();
        assert!((w - naive).abs() <= 1e-10 * naive);
        assert!(m.weight_factor(x0, 0.0, t).is_err());
    }

    #[test]
    fn gig_samples_follow_quadrature_cdf() {
        let m = BesselK::new(0.3, 0.1, 2.0, 0.4, 2.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let s = ExactSampler::new(m, grid, Scheme::SeqFht, 3.0).unwrap();
        let mut src = PseudoRandom::new(ChaCha8Rng::seed_from_u64(8));
        let n = 20_000;
        let mut taus: Vec<f64> = (0..n).map(|_| s.sample_fht(&mut src)).collect();
        taus.sort_by(f64::total_cmp);
        let tol = Tolerance::new(1e-15, 1e-11);
        let pdf = |t: f64| m.fht_pdf(s.x0(), t).unwrap();
        let mut acc = integrate(pdf, 0.0, taus[0], tol).unwrap().value;
        let mut cdf = vec![acc];
        for w in taus.windows(2) {
            acc += integrate(pdf, w[0], w[1], tol).unwrap().value;
            cdf.push(acc);
        }
        assert!(ks_pvalue(ks_statistic_sorted_cdf(&cdf), n) > 0.01);
    }

    #[test]
    fn exact_paths_zero_after_fht_and_positive_before() {
        let m = BesselK::new(0.3, 0.1, 2.0, 1.4, 2.0).unwrap();
        let grid = TimeGrid::uniform(4.0, 16).unwrap();
        let s = ExactSampler::new(m, grid.clone(), Scheme::BridgeFht, 1.0).unwrap();
        let mut src = PseudoRandom::new(ChaCha8Rng::seed_from_u64(21));
        let mut out = vec![0.0; grid.len()];
        let mut absorbed = 0;
        for _ in 0..2000 {
            let tau = s.sample_into(&mut src, &mut out).unwrap();
            for (t, f) in grid.times().iter().zip(&out) {
                assert_eq!(*t >= tau, *f == 0.0);
            }
            absorbed += usize::from(tau <= 4.0);
        }
        assert!(absorbed > 0);
    }

    #[test]
    fn confluent_fht_matches_sqb_time_law() {
        // s(τ0) = 1/(λ1 𝒯) compared against its own change-of-variables law.
        let m = ConfluentU::new(3.0, 0.2, 0.5, 0.6, 1.5, -0.1).unwrap();
        let x0 = 0.8;
        let table = m.fht_table(x0).unwrap();
        let mut src = PseudoRandom::new(ChaCha8Rng::seed_from_u64(4));
        let n = 20_000;
        let mut s: Vec<f64> = (0..n)
            .map(|_| time_transform(m.lambda1, m.fht_times(table.invert(src.uniform())).0))
            .collect();
        let sigma_pdf = |s: f64| {
            let t = 1.0 / (m.lambda1 * s);
            m.tricomi_pdf(x0, t).unwrap() / (m.lambda1 * s * s)
        };
        let direct = InverseCdfTable::build(sigma_pdf, (0.1, 10.0), 128).unwrap();
        let cdf = |v: f64| {
            // CDF by bisection on the independent table
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if direct.invert(mid) <= v {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let (_, p) = ks_test(&mut s, cdf);
        assert!(p > 0.01, "p = {p}");
    }
}
