//! Tabulated inverse CDFs for continuous laws on (0, ∞) that have a density
//! but no closed-form quantile.
//!
//! The CDF is integrated panel by panel on a log-spaced mesh, the mesh is
//! refined until a monotone cubic through (CDF, ln x) reproduces midpoints,
//! and the quantile is read off that cubic.

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_infinity, Tolerance};

const TAIL_BUDGET: f64 = 1e-11;
const MASS_TOL: f64 = 1e-6;
const ROUND_TRIP_TOL: f64 = 1e-8;
const MAX_KNOTS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct InverseCdfTable {
    knots: Vec<f64>,
    ln_knots: Vec<f64>,
    cdf_values: Vec<f64>,
    /// Per-interval end slopes of ln x against u, already clipped.
    slopes: Vec<(f64, f64)>,
    tail_masses: (f64, f64),
    total_mass: f64,
}

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-16,
        rel: 1e-11,
        max_intervals: 400,
    }
}

impl InverseCdfTable {
    /// Tabulates the density `pdf` supported on (0, ∞). `hint` is a rough
    /// interval holding most of the mass; it is widened until each tail
    /// carries at most 1e−11.
    pub fn build(pdf: impl Fn(f64) -> f64, hint: (f64, f64), n_knots: usize) -> Result<Self> {
        let (mut lo, mut hi) = hint;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Table(format!("bad support hint ({lo}, {hi})")));
        }
        if n_knots < 64 {
            return Err(Error::Table(format!("need at least 64 knots, got {n_knots}")));
        }
        let safe = |x: f64| {
            let v = pdf(x);
            if v.is_finite() && v > 0.0 {
                v
            } else {
                0.0
            }
        };

        let mut left = integrate(&safe, 0.0, lo, quad_tol())?.value;
        let mut guard = 0;
        while left > TAIL_BUDGET {
            lo *= 0.1;
            left = integrate(&safe, 0.0, lo, quad_tol())?.value;
            guard += 1;
            if guard > 300 {
                return Err(Error::Table("left tail does not vanish".into()));
            }
        }
        let mut right = integrate_to_infinity(&safe, hi, hi, quad_tol())?.value;
        guard = 0;
        while right > TAIL_BUDGET {
            hi *= 2.0;
            right = integrate_to_infinity(&safe, hi, hi, quad_tol())?.value;
            guard += 1;
            if guard > 1100 {
                return Err(Error::Table("right tail does not vanish".into()));
            }
        }

        let (llo, lhi) = (lo.ln(), hi.ln());
        let mut knots: Vec<f64> = (0..n_knots)
            .map(|i| (llo + (lhi - llo) * i as f64 / (n_knots - 1) as f64).exp())
            .collect();
        knots[0] = lo;
        knots[n_knots - 1] = hi;
        let mut masses = Vec::with_capacity(n_knots - 1);
        for w in knots.windows(2) {
            masses.push(integrate(&safe, w[0], w[1], quad_tol())?.value);
        }

        // Split panels carrying too much mass until roughly equal CDF steps.
        let cap = 2.0 / n_knots as f64;
        loop {
            let mut changed = false;
            let mut nk = vec![knots[0]];
            let mut nm = Vec::new();
            for (i, &m) in masses.iter().enumerate() {
                let (a, b) = (knots[i], knots[i + 1]);
                if m > cap && nk.len() < MAX_KNOTS {
                    let c = (a * b).sqrt();
                    nm.push(integrate(&safe, a, c, quad_tol())?.value);
                    nm.push(integrate(&safe, c, b, quad_tol())?.value);
                    nk.push(c);
                    changed = true;
                } else {
                    nm.push(m);
                }
                nk.push(b);
            }
            knots = nk;
            masses = nm;
            if !changed || knots.len() >= MAX_KNOTS {
                break;
            }
        }

        let total = left + masses.iter().sum::<f64>() + right;
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Table(format!("density integrates to {total}, not 1")));
        }

        // Midpoint round-trip refinement.
        loop {
            let table = Self::assemble(&knots, &masses, left, right, total, &safe)?;
            let mut split = Vec::new();
            for i in 0..masses.len() {
                let (c0, c1) = (table.cdf_values[i], table.cdf_values[i + 1]);
                if c1 - c0 < 1e-300 {
                    continue;
                }
                let um = 0.5 * (c0 + c1);
                let xm = table.invert(um);
                let part = if xm > knots[i] {
                    integrate(&safe, knots[i], xm, quad_tol())?.value / total
                } else {
                    0.0
                };
                if (c0 + part - um).abs() > ROUND_TRIP_TOL {
                    split.push(i);
                }
            }
            if split.is_empty() || knots.len() + split.len() > MAX_KNOTS {
                return Ok(table);
            }
            let mut nk = vec![knots[0]];
            let mut nm = Vec::new();
            let mut it = split.iter().peekable();
            for i in 0..masses.len() {
                let (a, b) = (knots[i], knots[i + 1]);
                if it.peek() == Some(&&i) {
                    it.next();
                    let c = (a * b).sqrt();
                    nm.push(integrate(&safe, a, c, quad_tol())?.value);
                    nm.push(integrate(&safe, c, b, quad_tol())?.value);
                    nk.push(c);
                } else {
                    nm.push(masses[i]);
                }
                nk.push(b);
            }
            knots = nk;
            masses = nm;
        }
    }

    fn assemble(
        knots: &[f64],
        masses: &[f64],
        left: f64,
        right: f64,
        total: f64,
        pdf: &impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut cdf_values = Vec::with_capacity(knots.len());
        let mut acc = left;
        cdf_values.push(acc / total);
        for &m in masses {
            acc += m;
            cdf_values.push(acc / total);
        }
        let ln_knots: Vec<f64> = knots.iter().map(|x| x.ln()).collect();
        // d(ln x)/du = total / (x f(x)).
        let deriv: Vec<f64> = knots
            .iter()
            .map(|&x| {
                let d = x * pdf(x);
                if d > 0.0 {
                    total / d
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let mut slopes = Vec::with_capacity(masses.len());
        for i in 0..masses.len() {
            let h = cdf_values[i + 1] - cdf_values[i];
            let dy = ln_knots[i + 1] - ln_knots[i];
            if !(h > 0.0) {
                slopes.push((0.0, 0.0));
                continue;
            }
            let delta = dy / h;
            let (mut m0, mut m1) = (deriv[i], deriv[i + 1]);
            if !m0.is_finite() {
                m0 = 3.0 * delta;
            }
            if !m1.is_finite() {
                m1 = 3.0 * delta;
            }
            let (a, b) = (m0 / delta, m1 / delta);
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m0 *= tau;
                m1 *= tau;
            }
            slopes.push((m0, m1));
        }
        if cdf_values.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Table("CDF not monotone".into()));
        }
        Ok(InverseCdfTable {
            knots: knots.to_vec(),
            ln_knots,
            cdf_values,
            slopes,
            tail_masses: (left / total, right / total),
            total_mass: total,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf_values
    }

    /// Probability outside the tabulated range, (left, right).
    pub fn tail_masses(&self) -> (f64, f64) {
        self.tail_masses
    }

    /// Mass of the density before normalisation.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Quantile at u. Values outside the tabulated CDF range are clamped.
    pub fn invert(&self, u: f64) -> f64 {
        let c = &self.cdf_values;
        let last = c.len() - 1;
        if !(u > c[0]) {
            return self.knots[0];
        }
        if u >= c[last] {
            return self.knots[last];
        }
        // Largest k with c[k] <= u.
        let k = c.partition_point(|&v| v <= u) - 1;
        if u == c[k] {
            return self.knots[k];
        }
        let h = c[k + 1] - c[k];
        let t = (u - c[k]) / h;
        let (m0, m1) = self.slopes[k];
        let (y0, y1) = (self.ln_knots[k], self.ln_knots[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let y = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        y.clamp(y0, y1).exp()
    }
}
