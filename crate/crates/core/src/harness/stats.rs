//! Goodness-of-fit statistics, histograms and small regressions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::theory::FoldedCauchy;

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(invalid("no samples"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(invalid("samples contain NaN"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Kolmogorov–Smirnov distance between the empirical CDF and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let s = sorted_finite(samples)?;
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic Kolmogorov p-value for a distance `d` at effective size `n`.
pub fn ks_p_value(d: f64, n: f64) -> f64 {
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Order-independent mean: summation runs over the sorted values.
pub fn stable_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

/// Fraction of `values` satisfying `pred`, with its binomial standard error.
pub fn fraction<F: Fn(f64) -> bool>(values: &[f64], pred: F) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let p = values.iter().filter(|&&x| pred(x)).count() as f64 / n;
    Some((p, (p * (1.0 - p) / n).sqrt()))
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    let s = sorted_finite(values).ok()?;
    Some(quantile_sorted(&s, 0.5))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
}

impl Histogram {
    /// Counts samples into the given ascending edges; samples outside are
    /// dropped, the last bin is closed on the right.
    pub fn with_edges(samples: &[f64], edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("histogram edges must be strictly ascending"));
        }
        let bins = edges.len() - 1;
        let mut counts = vec![0u64; bins];
        let lo = edges[0];
        let hi = edges[bins];
        for &x in samples {
            if !(x >= lo && x <= hi) {
                continue;
            }
            let k = match edges.binary_search_by(|e| e.total_cmp(&x)) {
                Ok(k) => k.min(bins - 1),
                Err(k) => k - 1,
            };
            counts[k] += 1;
        }
        let total: u64 = counts.iter().sum();
        let density = counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, w)| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / (total as f64 * (w[1] - w[0]))
                }
            })
            .collect();
        Ok(Self {
            edges,
            counts,
            density,
        })
    }

    pub fn uniform(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(invalid("need at least one bin and hi > lo"));
        }
        let w = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + w * i as f64).collect();
        Self::with_edges(samples, edges)
    }

    /// Freedman–Diaconis bin width over `[lo, hi]` (the sample range when
    /// `None`), capped at 10 000 bins.
    pub fn freedman_diaconis(samples: &[f64], range: Option<(f64, f64)>) -> Result<Self> {
        let s = sorted_finite(samples)?;
        let (lo, hi) = range.unwrap_or((s[0], s[s.len() - 1]));
        let inside: Vec<f64> = s.iter().copied().filter(|x| *x >= lo && *x <= hi).collect();
        let pool = if inside.len() >= 2 { &inside } else { &s };
        let iqr = quantile_sorted(pool, 0.75) - quantile_sorted(pool, 0.25);
        let width = 2.0 * iqr / (pool.len() as f64).cbrt();
        let span = if hi > lo { hi - lo } else { 1.0 };
        let bins = if width > 0.0 {
            ((span / width).ceil() as usize).clamp(1, 10_000)
        } else {
            1
        };
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self::uniform(samples, lo, hi, bins)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Index of the bin containing `x`.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let n = self.counts.len();
        if x < self.edges[0] || x > self.edges[n] {
            return None;
        }
        Some(match self.edges.binary_search_by(|e| e.total_cmp(&x)) {
            Ok(k) => k.min(n - 1),
            Err(k) => k - 1,
        })
    }
}

/// Coefficients of `α ≈ 1 - C r - b r²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "C")]
    pub c: f64,
    pub b: f64,
    #[serde(rename = "stderr_C")]
    pub stderr_c: f64,
    pub stderr_b: f64,
    pub points: usize,
}

/// Unweighted least squares of `1 - α` on `(r, r²)` without intercept.
pub fn fit_alpha_vs_coupling(points: &[(f64, f64)]) -> Result<FitResult> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::SingularFit(format!(
            "need at least 3 distinct coupling values (got {})",
            distinct.len()
        )));
    }
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(r, alpha) in points {
        let y = 1.0 - alpha;
        let (x1, x2) = (r, r * r);
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        t1 += x1 * y;
        t2 += x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det.abs() > 1e-14 * s11 * s22) {
        return Err(Error::SingularFit("normal equations are rank deficient".into()));
    }
    let c = (s22 * t1 - s12 * t2) / det;
    let b = (s11 * t2 - s12 * t1) / det;
    let rss: f64 = points
        .iter()
        .map(|&(r, alpha)| (1.0 - alpha - c * r - b * r * r).powi(2))
        .sum();
    let dof = points.len().saturating_sub(2).max(1) as f64;
    let sigma2 = rss / dof;
    Ok(FitResult {
        c,
        b,
        stderr_c: (sigma2 * s22 / det).sqrt(),
        stderr_b: (sigma2 * s11 / det).sqrt(),
        points: points.len(),
    })
}

/// Maximum-likelihood width of a folded Cauchy law with known centre.
pub fn fit_folded_cauchy_width(samples: &[f64], center: f64) -> Result<f64> {
    let s = sorted_finite(samples)?;
    let loglik = |log_w: f64| -> f64 {
        let d = FoldedCauchy {
            center,
            width: log_w.exp(),
        };
        s.iter().map(|&x| d.pdf(x).max(1e-300).ln()).sum()
    };
    // The likelihood is unimodal in log-width for this family in practice;
    // bracket generously and polish with golden-section search.
    let (mut a, mut b) = (1e-6f64.ln(), 1e3f64.ln());
    let grid = 200;
    let mut best = (f64::NEG_INFINITY, a);
    for k in 0..=grid {
        let x = a + (b - a) * k as f64 / grid as f64;
        let l = loglik(x);
        if l > best.0 {
            best = (l, x);
        }
    }
    let step = (b - a) / grid as f64;
    a = best.1 - step;
    b = best.1 + step;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (loglik(c), loglik(d));
    while b - a > 1e-10 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = loglik(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = loglik(d);
        }
    }
    Ok((0.5 * (a + b)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, uniform};
    use crate::theory::CauchyParams;
    use proptest::prelude::*;

    #[test]
    fn ks_trivial_cases() {
        let unif = |x: f64| x.clamp(0.0, 1.0);
        assert_eq!(ks_statistic(&[0.5], unif).unwrap(), 0.5);
        assert_eq!(ks_statistic(&[0.0, 0.0, 0.0], unif).unwrap(), 1.0);
        assert!(ks_statistic(&[], unif).is_err());
    }

    #[test]
    fn ks_on_own_distribution_is_small() {
        let mut rng = substream(11, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| uniform(&mut rng)).collect();
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)).unwrap() < 0.01);
    }

    #[test]
    fn ks_two_sample_identical_and_disjoint() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&a, &[4.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn histogram_counts_and_density() {
        let h = Histogram::uniform(&[0.1, 0.2, 0.6, 1.0, 2.0], 0.0, 1.0, 2).unwrap();
        assert_eq!(h.counts, vec![2, 2]);
        let mass: f64 = h.density.iter().map(|d| d * 0.5).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(h.bin_of(0.5), Some(1));
        assert_eq!(h.bin_of(1.5), None);
        assert!(Histogram::with_edges(&[], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn freedman_diaconis_keeps_every_sample() {
        let mut rng = substream(2, 0);
        let xs: Vec<f64> = (0..5000).map(|_| uniform(&mut rng)).collect();
        let h = Histogram::freedman_diaconis(&xs, None).unwrap();
        assert_eq!(h.total(), 5000);
        assert!(h.counts.len() > 5);
    }

    #[test]
    fn exact_fit_recovery() {
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|k| {
                let r = 0.03 * k as f64;
                (r, 1.0 - 0.6 * r - 0.1 * r * r)
            })
            .collect();
        let f = fit_alpha_vs_coupling(&pts).unwrap();
        assert!((f.c - 0.6).abs() < 1e-9);
        assert!((f.b - 0.1).abs() < 1e-9);
        assert!(f.stderr_c < 1e-9 && f.stderr_b < 1e-9);
    }

    #[test]
    fn noisy_linear_fit_has_small_quadratic_term() {
        let mut rng = substream(5, 0);
        let pts: Vec<(f64, f64)> = (1..=40)
            .map(|k| {
                let r = 0.01 * k as f64;
                let noise = 1e-3 * (uniform(&mut rng) - 0.5);
                (r, 1.0 - 0.64 * r + noise)
            })
            .collect();
        let f = fit_alpha_vs_coupling(&pts).unwrap();
        assert!(f.b.abs() < 2.0 * f.stderr_b + 1e-12, "b = {} ± {}", f.b, f.stderr_b);
    }

    #[test]
    fn fit_rejects_degenerate_designs() {
        assert!(matches!(
            fit_alpha_vs_coupling(&[(0.1, 0.9), (0.1, 0.91), (0.2, 0.8)]),
            Err(Error::SingularFit(_))
        ));
    }

    #[test]
    fn folded_cauchy_width_recovered() {
        let mut rng = substream(9, 0);
        let law = CauchyParams::new(1.05, 0.2).unwrap();
        let xs: Vec<f64> = (0..20_000).map(|_| law.sample(&mut rng).abs()).collect();
        let w = fit_folded_cauchy_width(&xs, 1.05).unwrap();
        assert!((w - 0.2).abs() < 0.01, "{w}");
    }

    proptest! {
        #[test]
        fn ks_is_a_distance(xs in prop::collection::vec(0.0f64..1.0, 1..200)) {
            let d = ks_statistic(&xs, |x| x).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            let d2 = ks_two_sample(&xs, &xs).unwrap();
            prop_assert_eq!(d2, 0.0);
        }

        #[test]
        fn stable_mean_ignores_order(mut xs in prop::collection::vec(-1e6f64..1e6, 1..100)) {
            let a = stable_mean(&xs).unwrap();
            xs.reverse();
            prop_assert_eq!(a, stable_mean(&xs).unwrap());
        }
    }
}
