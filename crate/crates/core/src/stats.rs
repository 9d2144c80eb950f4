//! Summation and goodness-of-fit helpers used by the estimators and the
//! statistical test suites.

use crate::specfun::reg_gamma_upper;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean and unbiased sample variance (two passes, compensated).
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = CompensatedSum::new();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let mut q = CompensatedSum::new();
    xs.iter().for_each(|&x| q.add((x - mean) * (x - mean)));
    (mean, q.value() / (n - 1) as f64)
}

/// Asymptotic Kolmogorov survival function P{K > x}.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS statistic D for data against a CDF. Sorts `xs`.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    ks_statistic_sorted_cdf(&xs.iter().map(|&x| cdf(x)).collect::<Vec<_>>())
}

/// D from CDF values already evaluated at the sorted sample.
pub fn ks_statistic_sorted_cdf(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &f) in cdf_at_sorted.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(hi - f).max(f - lo);
    }
    d
}

/// p-value of a one-sample KS statistic with Stephens' small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample KS test; returns (D, p).
pub fn ks_test(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let d = ks_statistic(xs, cdf);
    (d, ks_pvalue(d, xs.len()))
}

/// Two-sample KS test; returns (D, p). Sorts both inputs.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> (f64, f64) {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    (d, ks_pvalue(d, ne.round().max(1.0) as usize))
}

/// Upper tail of the chi-square law with `dof` degrees of freedom. With no
/// degrees of freedom (a single pooled cell) the test cannot reject.
pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 || dof == 0.0 {
        return 1.0;
    }
    reg_gamma_upper(0.5 * dof, 0.5 * x).unwrap_or(f64::NAN)
}

/// Pearson goodness-of-fit test. Cells with expected count below `min_expected`
/// are pooled into their neighbour. Returns (statistic, dof, p).
pub fn chi_square_gof(observed: &[u64], expected: &[f64], min_expected: f64) -> (f64, usize, f64) {
    assert_eq!(observed.len(), expected.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o as f64;
        e_acc += e;
        if e_acc >= min_expected {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    (stat, dof, chi_square_sf(stat, dof as f64))
}

/// Two-sample chi-square homogeneity test on integer data. Returns (statistic, dof, p).
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_expected: f64) -> (f64, usize, f64) {
    let max = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let mut ca = vec![0u64; max + 1];
    let mut cb = vec![0u64; max + 1];
    a.iter().for_each(|&v| ca[v as usize] += 1);
    b.iter().for_each(|&v| cb[v as usize] += 1);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut x, mut y) = (0.0, 0.0);
    for k in 0..=max {
        x += ca[k] as f64;
        y += cb[k] as f64;
        let tot = x + y;
        if tot * na.min(nb) / (na + nb) >= min_expected {
            cells.push((x, y));
            x = 0.0;
            y = 0.0;
        }
    }
    if x + y > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += x;
                last.1 += y;
            }
            None => cells.push((x, y)),
        }
    }
    let mut stat = 0.0;
    for &(x, y) in &cells {
        let tot = x + y;
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = cells.len().saturating_sub(1);
    (stat, dof, chi_square_sf(stat, dof as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn mean_variance_basic() {
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_known_values() {
        // P{K > 1.36} ≈ 0.049
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn chi_square_sf_values() {
        // dof 2: sf = e^{-x/2}
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-14);
        assert_eq!(chi_square_sf(1e-18, 0.0), 1.0);
        let (_, dof, p) = chi_square_gof(&[3000, 0], &[2999.9, 0.1], 5.0);
        assert_eq!((dof, p), (0, 1.0));
    }

    #[test]
    fn uniform_grid_has_small_ks() {
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let (d, p) = ks_test(&mut xs, |x| x);
        assert!(d <= 0.5 / n as f64 + 1e-12);
        assert!(p > 0.99);
        let mut a: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let mut b: Vec<f64> = (0..500).map(|i| i as f64 + 0.5).collect();
        assert!(ks_two_sample(&mut a, &mut b).1 > 0.99);
    }
}
