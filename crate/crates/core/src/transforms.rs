//! CIR and CEV processes as time and scale transformations of the squared
//! Bessel process.

use crate::error::{Error, Result};
use crate::sqb::{Boundary, PathSkeleton, Scheme, SqbParams, TimeGrid};
use crate::variates::VariateSource;

/// s(t) = (e^{λ1 t} − 1)/λ1, or t when λ1 = 0. Accepts t = +∞.
pub fn time_transform(lambda1: f64, t: f64) -> f64 {
    if lambda1 == 0.0 {
        return t;
    }
    if t == f64::INFINITY {
        return time_transform_limit(lambda1);
    }
    (lambda1 * t).exp_m1() / lambda1
}

/// s(∞): +∞ for λ1 ≥ 0, 1/|λ1| otherwise.
pub fn time_transform_limit(lambda1: f64) -> f64 {
    if lambda1 >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lambda1
    }
}

/// s⁻¹(τ) for 0 ≤ τ < s(∞).
pub fn time_transform_inverse(lambda1: f64, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) || tau >= time_transform_limit(lambda1) {
        return Err(Error::domain(
            "time_transform_inverse",
            format!("tau = {tau} outside [0, {})", time_transform_limit(lambda1)),
        ));
    }
    if lambda1 == 0.0 {
        return Ok(tau);
    }
    Ok((lambda1 * tau).ln_1p() / lambda1)
}

/// s⁻¹ extended by +∞ beyond the range of s.
fn fht_back(lambda1: f64, tau: f64) -> f64 {
    if tau.is_finite() && tau < time_transform_limit(lambda1) {
        time_transform_inverse(lambda1, tau).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    }
}

/// dY = (λ0 − λ1 Y) dt + ν √Y dW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    lambda1: f64,
    sqb: SqbParams,
}

impl CirParams {
    pub fn new(lambda0: f64, lambda1: f64, nu: f64, boundary: Boundary) -> Result<Self> {
        if !lambda1.is_finite() {
            return Err(Error::invalid("lambda1 must be finite"));
        }
        Ok(CirParams {
            lambda1,
            sqb: SqbParams::new(lambda0, nu, boundary)?,
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.sqb.lambda0()
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn nu(&self) -> f64 {
        self.sqb.nu()
    }

    pub fn mu(&self) -> f64 {
        self.sqb.mu()
    }

    /// κ = 2λ1/ν².
    pub fn kappa(&self) -> f64 {
        2.0 * self.lambda1 / (self.nu() * self.nu())
    }

    /// The squared Bessel process the CIR path is built from.
    pub fn sqb(&self) -> &SqbParams {
        &self.sqb
    }

    /// p(t; x, y) = e^{λ1 t} p_SQB(s(t); x, e^{λ1 t} y).
    pub fn transition_pdf(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let g = (self.lambda1 * t).exp();
        Ok(g * self.sqb.transition_pdf(time_transform(self.lambda1, t), x, g * y)?)
    }

    /// Prepares a sampler bound to `grid`.
    pub fn sampler(&self, grid: &TimeGrid, scheme: Scheme) -> Result<CirSampler> {
        CirSampler::new(*self, grid.clone(), scheme)
    }

    pub fn sample_path<S: VariateSource + ?Sized>(
        &self,
        grid: &TimeGrid,
        scheme: Scheme,
        y0: f64,
        src: &mut S,
    ) -> Result<PathSkeleton> {
        let sampler = self.sampler(grid, scheme)?;
        let mut values = vec![0.0; grid.len()];
        let fht = sampler.sample_into(y0, src, &mut values)?;
        Ok(PathSkeleton {
            grid: grid.clone(),
            values,
            fht,
        })
    }
}

/// CIR path sampler with the transformed grid and decay factors precomputed.
#[derive(Debug, Clone)]
pub struct CirSampler {
    params: CirParams,
    grid: TimeGrid,
    s_grid: TimeGrid,
    decay: Vec<f64>,
    scheme: Scheme,
}

impl CirSampler {
    pub fn new(params: CirParams, grid: TimeGrid, scheme: Scheme) -> Result<Self> {
        let l1 = params.lambda1;
        let s_grid = grid.map(|t| time_transform(l1, t))?;
        let decay = grid.times().iter().map(|&t| (-l1 * t).exp()).collect();
        Ok(CirSampler {
            params,
            grid,
            s_grid,
            decay,
            scheme,
        })
    }

    pub fn params(&self) -> &CirParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Grid of the underlying squared Bessel process.
    pub fn s_grid(&self) -> &TimeGrid {
        &self.s_grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Samples the underlying SQB path on the s-grid into `out` and returns its
    /// hitting time in SQB time.
    pub fn sample_sqb<S: VariateSource + ?Sized>(&self, y0: f64, src: &mut S, out: &mut [f64]) -> Result<f64> {
        self.params.sqb.sample_into(&self.s_grid, self.scheme, y0, src, out)
    }

    /// Y_i = e^{−λ1 t_i} X_{s(t_i)}; returns the CIR hitting time.
    pub fn sample_into<S: VariateSource + ?Sized>(&self, y0: f64, src: &mut S, out: &mut [f64]) -> Result<f64> {
        let tau = self.sample_sqb(y0, src, out)?;
        for (v, d) in out.iter_mut().zip(&self.decay) {
            *v *= d;
        }
        Ok(fht_back(self.params.lambda1, tau))
    }
}

/// How a CEV path is built from the squared Bessel process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CevApproach {
    /// Map a CIR path through 𝖥.
    #[default]
    CirReduction,
    /// Map a driftless path through 𝖥, then restore the drift by F ↦ e^{rt}F.
    DriftRestore,
}

/// dF = rF dt + δ F^{β+1} dW with β < 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CevParams {
    r: f64,
    delta: f64,
    beta: f64,
    boundary: Boundary,
}

impl CevParams {
    pub fn new(r: f64, delta: f64, beta: f64) -> Result<Self> {
        Self::with_boundary(r, delta, beta, Boundary::Absorbing)
    }

    /// Reflecting boundary at 0 is only admissible for β < −1/2.
    pub fn with_boundary(r: f64, delta: f64, beta: f64, boundary: Boundary) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("delta = {delta} must be positive")));
        }
        if !(beta < 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta = {beta} must be negative")));
        }
        if !r.is_finite() {
            return Err(Error::invalid("r must be finite"));
        }
        let p = CevParams {
            r,
            delta,
            beta,
            boundary,
        };
        let sqb = p.cir()?.sqb;
        debug_assert!((sqb.mu() - p.mu()).abs() <= 1e-12 * p.mu().abs().max(1.0));
        Ok(p)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn lambda0(&self) -> f64 {
        2.0 + 1.0 / self.beta
    }

    pub fn lambda1(&self) -> f64 {
        2.0 * self.r * self.beta
    }

    pub fn mu(&self) -> f64 {
        0.5 / self.beta
    }

    /// The CIR process Y = X(F).
    pub fn cir(&self) -> Result<CirParams> {
        CirParams::new(self.lambda0(), self.lambda1(), 2.0, self.boundary)
    }

    fn ln_scale(&self) -> f64 {
        (self.delta * self.beta).powi(2).ln()
    }

    /// X(F) = F^{−2β}/(δ²β²).
    pub fn x_of_f(&self, f: f64) -> f64 {
        if f <= 0.0 {
            return 0.0;
        }
        (-2.0 * self.beta * f.ln() - self.ln_scale()).exp()
    }

    /// 𝖥(x) = (δ²β² x)^{−1/(2β)}, with 𝖥(0) = 0.
    pub fn f_of_x(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (-(self.ln_scale() + x.ln()) / (2.0 * self.beta)).exp()
    }

    /// Local volatility δF^β.
    pub fn local_vol(&self, f: f64) -> f64 {
        self.delta * f.powf(self.beta)
    }

    pub fn sampler(&self, grid: &TimeGrid, scheme: Scheme, approach: CevApproach) -> Result<CevSampler> {
        CevSampler::new(*self, grid.clone(), scheme, approach)
    }

    pub fn sample_path<S: VariateSource + ?Sized>(
        &self,
        grid: &TimeGrid,
        scheme: Scheme,
        approach: CevApproach,
        f0: f64,
        src: &mut S,
    ) -> Result<PathSkeleton> {
        let sampler = self.sampler(grid, scheme, approach)?;
        let mut values = vec![0.0; grid.len()];
        let fht = sampler.sample_into(f0, src, &mut values)?;
        Ok(PathSkeleton {
            grid: grid.clone(),
            values,
            fht,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CevSampler {
    params: CevParams,
    cir: CirSampler,
    approach: CevApproach,
    growth: Vec<f64>,
}

impl CevSampler {
    pub fn new(params: CevParams, grid: TimeGrid, scheme: Scheme, approach: CevApproach) -> Result<Self> {
        let growth = grid.times().iter().map(|&t| (params.r * t).exp()).collect();
        Ok(CevSampler {
            cir: CirSampler::new(params.cir()?, grid, scheme)?,
            params,
            approach,
            growth,
        })
    }

    pub fn params(&self) -> &CevParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        self.cir.grid()
    }

    pub fn scheme(&self) -> Scheme {
        self.cir.scheme()
    }

    pub fn approach(&self) -> CevApproach {
        self.approach
    }

    /// Writes F on the grid into `out`, returns the hitting time of 0.
    pub fn sample_into<S: VariateSource + ?Sized>(&self, f0: f64, src: &mut S, out: &mut [f64]) -> Result<f64> {
        if !(f0 > 0.0) {
            return Err(Error::domain("cev sample_path", format!("f0 = {f0} must be positive")));
        }
        let y0 = self.params.x_of_f(f0);
        let fht = match self.approach {
            CevApproach::CirReduction => {
                let fht = self.cir.sample_into(y0, src, out)?;
                for v in out.iter_mut() {
                    *v = self.params.f_of_x(*v);
                }
                fht
            }
            CevApproach::DriftRestore => {
                let tau = self.cir.sample_sqb(y0, src, out)?;
                for (v, g) in out.iter_mut().zip(&self.growth) {
                    *v = g * self.params.f_of_x(*v);
                }
                fht_back(self.params.lambda1(), tau)
            }
        };
        out[0] = f0;
        Ok(fht)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, Tolerance};
    use crate::specfun::reg_gamma_lower;
    use crate::stats::ks_statistic_sorted_cdf;
    use crate::stats::ks_pvalue;
    use crate::variates::PseudoRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn time_transform_values() {
        assert_eq!(time_transform(0.0, 1.7), 1.7);
        assert!((time_transform(0.1, 1.0) - 1.0517091807564762).abs() < 1e-15);
        assert_eq!(time_transform_limit(-1.0), 1.0);
        assert!(time_transform_inverse(-1.0, 1.0).is_err());
        assert!(time_transform_inverse(-1.0, 0.999).is_ok());
        for &l in &[-2.0, -0.08, 0.0, 1e-9, 0.3, 5.0] {
            for &t in &[1e-6, 0.01, 0.5, 1.0, 3.0] {
                let s = time_transform(l, t);
                let back = time_transform_inverse(l, s).unwrap();
                assert!((back - t).abs() <= 1e-14 * t, "λ1={l}, t={t}");
            }
        }
    }

    #[test]
    fn cir_with_zero_reversion_is_sqb() {
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let cir = CirParams::new(1.0, 0.0, 2.0, Boundary::Absorbing).unwrap();
        for scheme in [Scheme::SeqAbs, Scheme::SeqFht, Scheme::BridgeFht] {
            let a = cir
                .sample_path(&grid, scheme, 1.0, &mut PseudoRandom::new(ChaCha8Rng::seed_from_u64(5)))
                .unwrap();
            let b = cir
                .sqb()
                .sample_path(&grid, scheme, 1.0, &mut PseudoRandom::new(ChaCha8Rng::seed_from_u64(5)))
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cir_never_absorbed_fraction() {
        // μ = −0.5, λ1 = −1: SQB time never exceeds 1.
        let cir = CirParams::new(1.0, -1.0, 2.0, Boundary::Absorbing).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let sampler = cir.sampler(&grid, Scheme::SeqFht).unwrap();
        let mut src = PseudoRandom::new(ChaCha8Rng::seed_from_u64(17));
        let x0 = 1.0;
        let n = 100_000;
        let mut out = vec![0.0; grid.len()];
        let never = (0..n)
            .filter(|_| sampler.sample_into(x0, &mut src, &mut out).unwrap().is_infinite())
            .count() as f64
            / n as f64;
        let p = reg_gamma_lower(0.5, x0 * 1.0 / 2.0).unwrap();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((never - p).abs() < 4.0 * se, "{never} vs {p}");
    }

    #[test]
    fn cir_marginal_matches_transition_density() {
        let cir = CirParams::new(1.5, 0.7, 1.3, Boundary::Reflecting).unwrap();
        let grid = TimeGrid::uniform(0.8, 2).unwrap();
        let sampler = cir.sampler(&grid, Scheme::SeqNoAbs).unwrap();
        let mut src = PseudoRandom::new(ChaCha8Rng::seed_from_u64(99));
        let y0 = 0.6;
        let n = 20_000;
        let mut out = vec![0.0; grid.len()];
        let mut ys: Vec<f64> = (0..n)
            .map(|_| {
                sampler.sample_into(y0, &mut src, &mut out).unwrap();
                out[2]
            })
            .collect();
        ys.sort_by(f64::total_cmp);
        let tol = Tolerance::new(1e-13, 1e-10);
        let pdf = |y: f64| cir.transition_pdf(0.8, y0, y).unwrap();
        let mut acc = integrate(pdf, 0.0, ys[0], tol).unwrap().value;
        let mut cdf = vec![acc];
        for w in ys.windows(2) {
            acc += integrate(pdf, w[0], w[1], tol).unwrap().value;
            cdf.push(acc);
        }
        let d = ks_statistic_sorted_cdf(&cdf);
        assert!(ks_pvalue(d, n) > 0.01, "D = {d}");
    }

    #[test]
    fn cev_maps() {
        let p = CevParams::new(0.02, 2500.0, -2.0).unwrap();
        assert!((p.x_of_f(100.0) - 4.0).abs() < 1e-12);
        assert!((p.local_vol(100.0) - 0.25).abs() < 1e-15);
        assert_eq!(p.lambda0(), 1.5);
        assert_eq!(p.mu(), -0.25);
        assert!((p.lambda1() + 0.08).abs() < 1e-16);
        let mut f = 1e-3;
        while f <= 1e6 {
            assert!((p.f_of_x(p.x_of_f(f)) - f).abs() <= 1e-12 * f, "F={f}");
            f *= 1.7;
        }
        assert_eq!(p.f_of_x(0.0), 0.0);
        assert!(CevParams::with_boundary(0.0, 1.0, -0.3, Boundary::Reflecting).is_err());
        assert!(CevParams::with_boundary(0.0, 1.0, -0.7, Boundary::Reflecting).is_ok());
    }

    #[test]
    fn cev_approaches_agree() {
        let grid = TimeGrid::uniform(0.5, 32).unwrap();
        for (r, exact) in [(0.0, true), (0.05, false)] {
            let p = CevParams::new(r, 2500.0, -2.0).unwrap();
            let a = p.sampler(&grid, Scheme::SeqFht, CevApproach::CirReduction).unwrap();
            let b = p.sampler(&grid, Scheme::SeqFht, CevApproach::DriftRestore).unwrap();
            let mut ra = PseudoRandom::new(ChaCha8Rng::seed_from_u64(3));
            let mut rb = PseudoRandom::new(ChaCha8Rng::seed_from_u64(3));
            let (mut fa, mut fb) = (vec![0.0; 33], vec![0.0; 33]);
            for _ in 0..200 {
                let ta = a.sample_into(100.0, &mut ra, &mut fa).unwrap();
                let tb = b.sample_into(100.0, &mut rb, &mut fb).unwrap();
                if exact {
                    assert_eq!(fa, fb);
                    assert_eq!(ta, tb);
                } else {
                    for (x, y) in fa.iter().zip(&fb) {
                        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                    }
                }
            }
        }
    }
}
