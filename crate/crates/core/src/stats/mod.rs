//! Test reports and the distributional tests behind them.
//!
//! Conformance reports pass when `p_value > alpha`. Designed-contrast
//! reports (marked with `details.designed_contrast = true`) pass when the
//! test rejects, i.e. `p_value < alpha`. Threshold checks carry no p-value
//! and record their threshold and margin in `details`.

pub mod claims;

pub use claims::*;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};
use statrs::function::erf::erfc;

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub alpha: f64,
    pub passed: bool,
    pub samples: usize,
    pub seed: u64,
    pub details: Map<String, Value>,
}

impl TestReport {
    pub fn conformance(name: &str, statistic: f64, p_value: f64, alpha: f64, samples: usize, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            p_value: Some(p_value),
            alpha,
            passed: p_value > alpha,
            samples,
            seed,
            details: Map::new(),
        }
    }

    /// A check decided by a fixed threshold rather than a reference
    /// distribution.
    pub fn threshold(name: &str, statistic: f64, threshold: f64, passed: bool, samples: usize, seed: u64) -> Self {
        let mut details = Map::new();
        details.insert("threshold".into(), threshold.into());
        details.insert("margin".into(), (threshold - statistic).into());
        Self {
            name: name.to_string(),
            statistic,
            p_value: None,
            alpha: 0.0,
            passed,
            samples,
            seed,
            details,
        }
    }

    /// Reinterprets a report as a designed contrast: it passes only if the
    /// original check failed. Composite criteria (variance bounds, fit
    /// quality) count as failures too; inconclusive reports never pass.
    pub fn into_contrast(mut self) -> Self {
        let inconclusive = self.details.get("inconclusive") == Some(&Value::Bool(true));
        self.passed = !self.passed && !inconclusive;
        self.name = format!("{}_contrast", self.name);
        self.details.insert("designed_contrast".into(), true.into());
        self
    }

    pub fn is_contrast(&self) -> bool {
        self.details.get("designed_contrast") == Some(&Value::Bool(true))
    }

    pub fn with_details(mut self, extra: Map<String, Value>) -> Self {
        self.details.extend(extra);
        self
    }

    pub fn detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided normal tail probability of `|z|`.
pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small lambda
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut s = 0.0;
        let mut k = 1.0_f64;
        loop {
            let term = y.powf(k * k);
            s += term;
            if term < 1e-17 {
                break;
            }
            k += 2.0;
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += sign * term;
            if term < 1e-17 {
                break;
            }
            sign = -sign;
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> KsResult {
    let v = sorted(xs);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
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
    KsResult {
        statistic: d,
        p_value: ks_p(d, na * nb / (na + nb)),
    }
}

/// Bonferroni-adjusted combination: `min(1, m * min p)`.
pub fn bonferroni(p_values: &[f64]) -> f64 {
    let m = p_values.len() as f64;
    let min = p_values.iter().copied().fold(1.0_f64, f64::min);
    (m * min).min(1.0)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Brown–Forsythe (median-centred Levene) test for equal variances.
/// Returns `(W, p)`.
pub fn levene(groups: &[Vec<f64>]) -> (f64, f64) {
    let k = groups.len();
    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = median(&mut g.clone());
            g.iter().map(|x| (x - m).abs()).collect()
        })
        .collect();
    let total: usize = deviations.iter().map(Vec::len).sum();
    let grand = deviations.iter().flatten().sum::<f64>() / total as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for z in &deviations {
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        between += z.len() as f64 * (mean - grand).powi(2);
        within += z.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    }
    let df1 = (k - 1) as f64;
    let df2 = (total - k) as f64;
    let w = (df2 / df1) * between / within;
    let p = FisherSnedecor::new(df1, df2)
        .map(|f| 1.0 - f.cdf(w))
        .unwrap_or(f64::NAN);
    (w, p.clamp(0.0, 1.0))
}

/// Pearson chi-square goodness of fit. Returns `(chi2, p)`.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> (f64, f64) {
    let chi2: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let df = (observed.len() - 1) as f64;
    let p = ChiSquared::new(df).map(|c| 1.0 - c.cdf(chi2)).unwrap_or(f64::NAN);
    (chi2, p.clamp(0.0, 1.0))
}

/// Chi-square test that `k` binomial proportions `hits[i] / totals[i]` are
/// equal (2 x k contingency table, `k - 1` degrees of freedom).
/// Returns `(chi2, p)`.
pub fn chi_square_proportions(hits: &[u64], totals: &[u64]) -> (f64, f64) {
    let h: u64 = hits.iter().sum();
    let n: u64 = totals.iter().sum();
    let q = h as f64 / n as f64;
    let mut chi2 = 0.0;
    for (&hi, &ti) in hits.iter().zip(totals) {
        let e_hit = ti as f64 * q;
        let e_miss = ti as f64 * (1.0 - q);
        if e_hit > 0.0 {
            chi2 += (hi as f64 - e_hit).powi(2) / e_hit;
        }
        if e_miss > 0.0 {
            chi2 += ((ti - hi) as f64 - e_miss).powi(2) / e_miss;
        }
    }
    let df = (hits.len() - 1) as f64;
    let p = ChiSquared::new(df).map(|c| 1.0 - c.cdf(chi2)).unwrap_or(f64::NAN);
    (chi2, p.clamp(0.0, 1.0))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-sided p-value of a sample correlation under independence
/// (Fisher z transform).
pub fn correlation_p(r: f64, n: usize) -> f64 {
    let z = r.clamp(-0.999_999_999, 0.999_999_999).atanh() * ((n as f64) - 3.0).sqrt();
    normal_two_sided(z)
}

/// Lag-1 autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    correlation(&xs[..xs.len() - 1], &xs[1..])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Weighted least squares `y = slope * x + intercept` with weights `1/s_i^2`.
/// Standard errors come from the supplied `s_i`; `r_squared` is the
/// unweighted coefficient of determination.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], s: &[f64]) -> LinearFit {
    let w: Vec<f64> = s.iter().map(|si| 1.0 / (si * si)).collect();
    let sw: f64 = w.iter().sum();
    let swx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let swy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let swxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let swxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * swxx - swx * swx;
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swxx * swy - swx * swxy) / det;
    let my = mean(y);
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r_squared,
        slope_se: (sw / det).sqrt(),
        intercept_se: (swxx / det).sqrt(),
    }
}

/// Ordinary least squares.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let fit = weighted_linear_fit(x, y, &vec![1.0; x.len()]);
    // rescale the standard errors by the residual variance
    let dof = (x.len() as f64 - 2.0).max(1.0);
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(x, y)| (y - fit.slope * x - fit.intercept).powi(2))
        .sum();
    let sigma = (ss_res / dof).sqrt();
    LinearFit {
        slope_se: fit.slope_se * sigma,
        intercept_se: fit.intercept_se * sigma,
        ..fit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_distribution_reference_values() {
        // P(K > 1.36) ~ 0.0495, P(K > 1.63) ~ 0.0098, P(K > 0.5) ~ 0.9639
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 2e-4);
        assert!((kolmogorov_q(1.628) - 0.0100).abs() < 2e-4);
        assert!((kolmogorov_q(0.5) - 0.9639).abs() < 2e-4);
        // the two series agree where they meet
        let a = kolmogorov_q(1.18 - 1e-12);
        let b = kolmogorov_q(1.18 + 1e-12);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959_963_985) - 0.975).abs() < 1e-9);
        assert!((normal_two_sided(2.575_829_3) - 0.01).abs() < 1e-8);
    }

    #[test]
    fn ks_detects_shift_and_accepts_null() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let c: Vec<f64> = b.iter().map(|x: &f64| x + 0.3).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
        let p = ks_one_sample(&b, normal_cdf).p_value;
        assert!(p > 0.01, "{p}");
        assert!(ks_one_sample(&c, normal_cdf).p_value < 1e-6);
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
    }

    #[test]
    fn ks_one_sample_calibrated() {
        let mut passes = 0;
        for seed in 0..100 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..500).map(|_| rng.sample(StandardNormal)).collect();
            if ks_one_sample(&a, normal_cdf).p_value > 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 95, "{passes}");
    }

    #[test]
    fn levene_and_chi_square() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let g = |rng: &mut ChaCha20Rng, s: f64| -> Vec<f64> {
            (0..1000).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
        };
        let same = vec![g(&mut rng, 1.0), g(&mut rng, 1.0), g(&mut rng, 1.0)];
        assert!(levene(&same).1 > 0.01);
        let diff = vec![g(&mut rng, 1.0), g(&mut rng, 1.0), g(&mut rng, 1.5)];
        assert!(levene(&diff).1 < 1e-6);

        let (chi, p) = chi_square(&[10.0, 10.0, 10.0], &[10.0, 10.0, 10.0]);
        assert_eq!(chi, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        // chi2 = 9.21 with 2 dof is the 1% point
        let (_, p) = chi_square(&[100.0 + 9.21_f64.sqrt() * 10.0 / 2f64.sqrt(), 100.0 - 9.21_f64.sqrt() * 10.0 / 2f64.sqrt(), 100.0], &[100.0; 3]);
        assert!((p - 0.01).abs() < 1e-3, "{p}");
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&x, &y);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_roundtrip_and_contrast() {
        let r = TestReport::conformance("x", 0.123_456_789_012_345_67, 0.001, 0.01, 10, 7)
            .detail("note", "a");
        assert!(!r.passed);
        let s = serde_json::to_string(&r).unwrap();
        let back: TestReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        let c = r.into_contrast();
        assert!(c.passed && c.is_contrast());
        let t = TestReport::threshold("t", 0.02, 0.05, true, 1, 0);
        let back: TestReport = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::to_string(&t).unwrap().contains("\"p_value\":null"));
    }
}
