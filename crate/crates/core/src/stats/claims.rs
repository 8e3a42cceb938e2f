//! Reports for the structural claims: isotropy and homogeneity of the walk,
//! Gaussian steps and Brownian scaling of the constrained walk, distance-only
//! dependence of hitting frequencies, and the normal-density/transition
//! probability identity.

use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use super::{
    bonferroni, chi_square_proportions, correlation_p, ks_one_sample, ks_two_sample, levene, mean,
    normal_cdf, normal_two_sided, variance, weighted_linear_fit, TestReport,
};
use crate::error::{Error, Result};
use crate::gaussian::{overlap_closed_form, realize_fs_distance, GaussianParams};
use crate::hilbert::{self, tangent_components, HorizontalFrame, State, TangentVector, C64};
use crate::walk::{par_trials, unconstrained_step, DisplacementSample, WalkConfig};

/// Fewest step samples accepted by the isotropy test.
pub const MIN_ISOTROPY_SAMPLES: usize = 1000;
/// Fewest trials accepted by the Gaussian-step test.
pub const MIN_STEP_TRIALS: usize = 1000;
/// Fewest samples accepted by the Born identity check.
pub const MIN_BORN_SAMPLES: usize = 100_000;
/// Histogram bins on the `[-2s, 2s]` window of the Born identity check.
pub const BORN_BINS: usize = 8;
/// Largest relative density deviation accepted by the Born identity check.
pub const BORN_TOLERANCE: f64 = 0.05;
/// Largest deviation of the analytic Born ratio from 1.
pub const BORN_ANALYTIC_TOLERANCE: f64 = 1e-4;
/// Relative tolerance on the common isotropy variance.
pub const VARIANCE_TOLERANCE: f64 = 0.05;
/// Spread of target distances tolerated by the equiprobability test.
pub const EQUIDISTANCE_TOLERANCE: f64 = 1e-6;

fn standardized(col: &[f64]) -> Vec<f64> {
    let m = mean(col);
    let s = col.iter().map(|x| (x - m).powi(2)).sum::<f64>().sqrt();
    if s == 0.0 {
        return vec![0.0; col.len()];
    }
    col.iter().map(|x| (x - m) / s).collect()
}

/// Bonferroni-adjusted p-value of all pairwise correlations between columns.
fn pairwise_correlation_p(cols: &[Vec<f64>]) -> (f64, f64) {
    if cols.len() < 2 {
        return (0.0, 1.0);
    }
    let n = cols[0].len();
    let z: Vec<Vec<f64>> = cols.iter().map(|c| standardized(c)).collect();
    let mut max_r: f64 = 0.0;
    let mut ps = Vec::with_capacity(cols.len() * (cols.len() - 1) / 2);
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let r: f64 = z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum();
            max_r = max_r.max(r.abs());
            ps.push(correlation_p(r, n));
        }
    }
    (max_r, bonferroni(&ps))
}

/// Composite isotropy test on real tangent coordinates (one column per
/// coordinate). `expected_variance` is the per-coordinate variance when known.
pub fn isotropy_test_coordinates(
    cols: &[Vec<f64>],
    expected_variance: Option<f64>,
    alpha: f64,
    seed: u64,
) -> Result<TestReport> {
    let samples = cols.first().map(Vec::len).unwrap_or(0);
    if samples < MIN_ISOTROPY_SAMPLES || cols.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "isotropy needs >= {MIN_ISOTROPY_SAMPLES} samples of >= 2 coordinates, got {samples} x {}",
            cols.len()
        )));
    }
    let variances: Vec<f64> = cols.iter().map(|c| variance(c)).collect();
    let pooled = mean(&variances);
    let reference = expected_variance.unwrap_or(pooled);

    let (w, p_levene) = levene(cols);
    let (max_r, p_corr) = pairwise_correlation_p(cols);
    let sd = reference.sqrt();
    let ks: Vec<f64> = cols
        .iter()
        .map(|c| ks_one_sample(c, |x| normal_cdf(x / sd)).p_value)
        .collect();
    let p_ks = bonferroni(&ks);
    let p = bonferroni(&[p_levene, p_corr, p_ks]);

    let mut report = TestReport::conformance("isotropy", w, p, alpha, samples, seed)
        .detail("coordinates", cols.len())
        .detail("p_levene", p_levene)
        .detail("p_correlation", p_corr)
        .detail("max_abs_correlation", max_r)
        .detail("p_normality", p_ks)
        .detail("common_variance", pooled);
    if let Some(e) = expected_variance {
        let rel = (pooled - e).abs() / e;
        report = report
            .detail("expected_variance", e)
            .detail("variance_rel_error", rel)
            .detail("variance_tolerance", VARIANCE_TOLERANCE);
        report.passed &= rel < VARIANCE_TOLERANCE;
    }
    Ok(report)
}

/// Isotropy of horizontal step vectors at a fixed base state. Coordinates are
/// the real and imaginary parts of the components in `frame`;
/// `expected_sq_norm` is `E|c_k|^2` per complex component (`v^2 dt^2 / hbar^2`
/// for GUE steps).
pub fn isotropy_test(
    steps: &[TangentVector],
    frame: &HorizontalFrame,
    expected_sq_norm: Option<f64>,
    alpha: f64,
    seed: u64,
) -> Result<TestReport> {
    if steps.len() < MIN_ISOTROPY_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "isotropy needs >= {MIN_ISOTROPY_SAMPLES} step samples, got {}",
            steps.len()
        )));
    }
    let cols = tangent_coordinates(steps, frame)?;
    let report = isotropy_test_coordinates(&cols, expected_sq_norm.map(|e| 0.5 * e), alpha, seed)?;
    let common = report.details["common_variance"].as_f64().unwrap_or(f64::NAN);
    Ok(report.detail("common_sq_norm", 2.0 * common))
}

/// Real coordinates of step vectors in `frame`: columns `2k` and `2k + 1`
/// hold the real and imaginary parts of component `k`.
pub fn tangent_coordinates(steps: &[TangentVector], frame: &HorizontalFrame) -> Result<Vec<Vec<f64>>> {
    let mut cols = vec![Vec::with_capacity(steps.len()); 2 * frame.len()];
    for t in steps {
        let c = tangent_components(t, frame)?;
        for (k, ck) in c.iter().enumerate() {
            cols[2 * k].push(ck.re);
            cols[2 * k + 1].push(ck.im);
        }
    }
    Ok(cols)
}

fn same_walk_shape(a: &WalkConfig, b: &WalkConfig) -> Result<()> {
    let mut diffs = Vec::new();
    if a.dim != b.dim {
        diffs.push("dim");
    }
    if a.steps != b.steps {
        diffs.push("steps");
    }
    if a.dt != b.dt {
        diffs.push("dt");
    }
    if a.hbar != b.hbar {
        diffs.push("hbar");
    }
    if a.stepper != b.stepper {
        diffs.push("stepper");
    }
    if a.ensemble.kind != b.ensemble.kind {
        diffs.push("ensemble kind");
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Error::ConfigMismatch(format!("walk configs differ in {}", diffs.join(", "))))
    }
}

/// Two-sample KS on final FS distances of walks from two initial states.
/// The configs must agree in dimension, steps, dt, hbar, stepper and
/// ensemble kind; the ensemble scale is compared by the test itself.
pub fn homogeneity_test(
    distances_a: &[f64],
    cfg_a: &WalkConfig,
    distances_b: &[f64],
    cfg_b: &WalkConfig,
    alpha: f64,
) -> Result<TestReport> {
    same_walk_shape(cfg_a, cfg_b)?;
    if distances_a.is_empty() || distances_b.is_empty() {
        return Err(Error::InsufficientSamples("homogeneity needs nonempty samples".into()));
    }
    let ks = ks_two_sample(distances_a, distances_b);
    Ok(TestReport::conformance(
        "homogeneity",
        ks.statistic,
        ks.p_value,
        alpha,
        distances_a.len() + distances_b.len(),
        cfg_a.seed,
    )
    .detail("mean_theta_a", mean(distances_a))
    .detail("mean_theta_b", mean(distances_b))
    .detail("scale_a", cfg_a.ensemble.scale)
    .detail("scale_b", cfg_b.ensemble.scale))
}

/// KS of each component of `d_N` against `N(0, N dt^2 v0^2)` plus pairwise
/// independence across components.
pub fn gaussian_step_test(sample: &DisplacementSample, alpha: f64, seed: u64) -> Result<TestReport> {
    let n = sample.trials();
    if n < MIN_STEP_TRIALS {
        return Err(Error::InsufficientSamples(format!(
            "gaussian step test needs >= {MIN_STEP_TRIALS} trials, got {n}"
        )));
    }
    let s2 = sample.expected_variance();
    let cols: Vec<Vec<f64>> = (0..sample.dim()).map(|j| sample.component(j)).collect();
    let variances: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>() / n as f64).collect();
    if s2 == 0.0 {
        let max_abs = cols.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
        return Ok(TestReport::threshold("gaussian_step", max_abs, 0.0, max_abs == 0.0, n, seed)
            .detail("degenerate", true)
            .detail("expected_variance", 0.0));
    }
    let s = s2.sqrt();
    let ks: Vec<f64> = cols
        .iter()
        .map(|c| ks_one_sample(c, |x| normal_cdf(x / s)))
        .map(|r| r.p_value)
        .collect();
    let d_max = cols
        .iter()
        .map(|c| ks_one_sample(c, |x| normal_cdf(x / s)).statistic)
        .fold(0.0, f64::max);
    let p_ks = bonferroni(&ks);
    let (max_r, p_corr) = pairwise_correlation_p(&cols);
    let p = if cols.len() > 1 { bonferroni(&[p_ks, p_corr]) } else { p_ks };
    let ratio = mean(&variances) / s2;
    Ok(TestReport::conformance("gaussian_step", d_max, p, alpha, n, seed)
        .detail("dim", sample.dim())
        .detail("steps", sample.steps)
        .detail("expected_variance", s2)
        .detail("component_variances", variances)
        .detail("variance_ratio", ratio)
        .detail("p_normality", p_ks)
        .detail("p_correlation", p_corr)
        .detail("max_abs_correlation", max_r))
}

/// Linear fit of `Var(d_N)` against `N dt`. Passes when `R^2 > 0.99` and the
/// intercept is consistent with zero; reports `D = slope / 2`.
pub fn brownian_scaling_fit(samples: &[DisplacementSample], alpha: f64, seed: u64) -> Result<TestReport> {
    let mut ns: Vec<usize> = samples.iter().map(|s| s.steps).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return Err(Error::InsufficientSamples(format!(
            "brownian scaling needs >= 4 distinct N, got {}",
            ns.len()
        )));
    }
    let dt = samples[0].dt;
    if samples.iter().any(|s| s.dt != dt) {
        return Err(Error::ConfigMismatch("brownian scaling needs a common dt".into()));
    }
    let total: usize = samples.iter().map(|s| s.trials()).sum();
    let x: Vec<f64> = samples.iter().map(|s| s.steps as f64 * dt).collect();
    // zero-mean variance estimate pooled across components
    let y: Vec<f64> = samples
        .iter()
        .map(|s| s.finals.iter().flatten().map(|v| v * v).sum::<f64>() / (s.trials() * s.dim()) as f64)
        .collect();
    let spans_decade = ns[ns.len() - 1] as f64 >= 10.0 * ns[0] as f64;
    let v0 = samples[0].v0;
    if y.iter().all(|&v| v == 0.0) {
        return Ok(TestReport::threshold("brownian_scaling", 0.0, 0.0, true, total, seed)
            .detail("degenerate", true)
            .detail("diffusion_coefficient", 0.0)
            .detail("spans_decade", spans_decade));
    }
    let se: Vec<f64> = samples
        .iter()
        .zip(&y)
        .map(|(s, v)| v * (2.0 / (s.trials() * s.dim()) as f64).sqrt())
        .collect();
    let fit = weighted_linear_fit(&x, &y, &se);
    let z = fit.intercept / fit.intercept_se;
    let p = normal_two_sided(z);
    let mut report = TestReport::conformance("brownian_scaling", fit.r_squared, p, alpha, total, seed)
        .detail("steps", ns.clone())
        .detail("variances", y.clone())
        .detail("slope", fit.slope)
        .detail("slope_se", fit.slope_se)
        .detail("intercept", fit.intercept)
        .detail("intercept_se", fit.intercept_se)
        .detail("r_squared", fit.r_squared)
        .detail("diffusion_coefficient", fit.slope / 2.0)
        .detail("expected_diffusion_coefficient", v0 * v0 * dt / 2.0)
        .detail("spans_decade", spans_decade);
    report.passed &= fit.r_squared > 0.99;
    Ok(report)
}

/// Per-target hit tallies of an equiprobability experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HitCounts {
    pub hits: Vec<u64>,
    pub walks: Vec<u64>,
}

/// `count` states at FS distance `theta` from `phi0`, pairwise farther apart
/// than `2 eps`. The distance is taken from the Gaussian pair realizing
/// `theta` at width `sigma`; the targets are images of one target under
/// random unitaries fixing `phi0`.
pub fn equidistant_targets<R: Rng + ?Sized>(
    phi0: &State,
    theta: f64,
    sigma: f64,
    count: usize,
    eps: f64,
    rng: &mut R,
) -> Result<Vec<State>> {
    let (g0, g1) = realize_fs_distance(theta, sigma)?;
    let theta = overlap_closed_form(&g0, &g1)?.sqrt().acos();
    let frame = HorizontalFrame::complete(phi0);
    let (c, s) = (theta.cos(), theta.sin());
    let mut targets: Vec<State> = Vec::with_capacity(count);
    let mut attempts = 0;
    while targets.len() < count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InvalidParameter(format!(
                "could not place {count} targets at theta = {theta} with separation > {}",
                2.0 * eps
            )));
        }
        // raw complex Gaussian direction; a gauge-fixed state would lose the
        // phase freedom when the complement is one-dimensional
        let dir: Vec<C64> = (0..frame.len())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let dir_norm = hilbert::norm(&dir);
        let mut v: Vec<C64> = phi0.amplitudes().iter().map(|a| a * c).collect();
        for (e, d) in frame.vectors().iter().zip(dir.iter().map(|d| d / dir_norm)) {
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi += s * d * ei;
            }
        }
        let t = State::new(v, phi0.basis())?;
        if targets.iter().all(|o| hilbert::fs_distance(o, &t) > 2.0 * eps) {
            targets.push(t);
        }
    }
    Ok(targets)
}

/// Walk `w` watches target `w mod k` only and records whether it enters the
/// `eps` ball within `cfg.steps` steps. Walks run on lanes `(group, w)`.
pub fn target_hit_counts(
    phi0: &State,
    targets: &[State],
    cfg: &WalkConfig,
    eps: f64,
    walks: usize,
    group: u64,
) -> Result<HitCounts> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(Error::InvalidParameter("no targets".into()));
    }
    let k = targets.len();
    let outcomes = par_trials(cfg.seed, group, walks, |w, rng| -> Result<bool> {
        let target = &targets[w % k];
        let mut phi = phi0.clone();
        if hilbert::fs_distance(&phi, target) < eps {
            return Ok(true);
        }
        for step in 1..=cfg.steps {
            let h = cfg.ensemble.sample(rng, step as u64);
            phi = unconstrained_step(&phi, &h, cfg.dt, cfg.hbar, cfg.stepper)?;
            if hilbert::fs_distance(&phi, target) < eps {
                return Ok(true);
            }
        }
        Ok(false)
    });
    let mut counts = HitCounts {
        hits: vec![0; k],
        walks: vec![0; k],
    };
    for (w, o) in outcomes.into_iter().enumerate() {
        counts.walks[w % k] += 1;
        if o? {
            counts.hits[w % k] += 1;
        }
    }
    Ok(counts)
}

/// Chi-square test of equal hit proportions. Fewer than 5 expected hits or
/// misses per target makes the report inconclusive (not passed).
pub fn equiprobability_test(counts: &HitCounts, alpha: f64, seed: u64) -> TestReport {
    let total_walks: u64 = counts.walks.iter().sum();
    let total_hits: u64 = counts.hits.iter().sum();
    let k = counts.hits.len() as f64;
    let expected_hits = total_hits as f64 / k;
    let expected_misses = (total_walks - total_hits) as f64 / k;
    if counts.hits.len() < 2 || expected_hits < 5.0 || expected_misses < 5.0 {
        let mut r = TestReport::conformance("equal_distance_equiprobability", 0.0, 1.0, alpha, total_walks as usize, seed)
            .detail("inconclusive", true)
            .detail("hits", counts.hits.clone())
            .detail("walks", counts.walks.clone());
        r.passed = false;
        return r;
    }
    let (chi2, p) = chi_square_proportions(&counts.hits, &counts.walks);
    TestReport::conformance("equal_distance_equiprobability", chi2, p, alpha, total_walks as usize, seed)
        .detail("inconclusive", false)
        .detail("hits", counts.hits.clone())
        .detail("walks", counts.walks.clone())
        .detail("hit_rate", total_hits as f64 / total_walks as f64)
}

/// Verifies that all targets sit at one FS distance from `phi0`, then runs
/// [`target_hit_counts`] and [`equiprobability_test`].
pub fn equal_distance_equiprobability(
    phi0: &State,
    targets: &[State],
    cfg: &WalkConfig,
    eps: f64,
    walks: usize,
    alpha: f64,
    group: u64,
) -> Result<TestReport> {
    if targets.len() < 3 {
        return Err(Error::InvalidParameter(format!("need >= 3 targets, got {}", targets.len())));
    }
    let d: Vec<f64> = targets.iter().map(|t| hilbert::fs_distance(phi0, t)).collect();
    let spread = d.iter().copied().fold(f64::MIN, f64::max) - d.iter().copied().fold(f64::MAX, f64::min);
    if spread > EQUIDISTANCE_TOLERANCE {
        return Err(Error::NotEquidistant { spread });
    }
    let counts = target_hit_counts(phi0, targets, cfg, eps, walks, group)?;
    Ok(equiprobability_test(&counts, alpha, cfg.seed)
        .detail("theta", d[0])
        .detail("capture_radius", eps))
}

/// `cos^2 theta(g_{0,s}, g_{b,delta}) / ((8 pi)^{d/2} delta^d)` at a
/// displacement `b` along the first axis.
pub fn born_rhs(b: f64, s: f64, delta: f64, d: usize) -> Result<f64> {
    let mut center = vec![0.0; d];
    center[0] = b;
    let c2 = overlap_closed_form(
        &GaussianParams::at_rest(vec![0.0; d], s)?,
        &GaussianParams::at_rest(center, delta)?,
    )?;
    Ok(c2 / ((8.0 * std::f64::consts::PI).powf(d as f64 / 2.0) * delta.powi(d as i32)))
}

fn normal_pdf_d(b: f64, s: f64, d: usize) -> f64 {
    (-(b * b) / (2.0 * s * s)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s).powi(d as i32)
}

/// Closed-form ratio of [`born_rhs`] at `delta = s/100` to the normal density
/// of variance `s^2`, on `points` displacements across `[-2s, 2s]`.
pub fn born_analytic_check(s: f64, d: usize, points: usize) -> Result<TestReport> {
    let delta = s / 100.0;
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let b = -2.0 * s + 4.0 * s * i as f64 / (points - 1) as f64;
        let ratio = born_rhs(b, s, delta, d)? / normal_pdf_d(b, s, d);
        worst = worst.max((ratio - 1.0).abs());
    }
    Ok(TestReport::threshold(
        "born_analytic",
        worst,
        BORN_ANALYTIC_TOLERANCE,
        worst < BORN_ANALYTIC_TOLERANCE,
        points,
        0,
    )
    .detail("sigma_walk", s)
    .detail("delta", delta)
    .detail("dim", d))
}

/// Histogram of one-dimensional `d_N` samples (bins of width `s/2` on
/// `[-2s, 2s]`) against the bin averages of [`born_rhs`] at `delta = s/100`.
/// Requires a passed, non-contrast Gaussian-step report for the ensemble.
pub fn born_identity_check(s: f64, samples: &[f64], precondition: &TestReport, seed: u64) -> Result<TestReport> {
    if !precondition.name.starts_with("gaussian_step") || !precondition.passed || precondition.is_contrast() {
        return Err(Error::Precondition(format!(
            "born identity needs a passed gaussian_step report, got {} (passed = {})",
            precondition.name, precondition.passed
        )));
    }
    if samples.len() < MIN_BORN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "born identity needs >= {MIN_BORN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_walk must be > 0, got {s}")));
    }
    let delta = s / 100.0;
    let width = 4.0 * s / BORN_BINS as f64;
    let lo = -2.0 * s;
    let mut counts = [0usize; BORN_BINS];
    for &x in samples {
        let idx = ((x - lo) / width).floor();
        if idx >= 0.0 && (idx as usize) < BORN_BINS {
            counts[idx as usize] += 1;
        }
    }
    let n = samples.len() as f64;
    let mut empirical = Vec::with_capacity(BORN_BINS);
    let mut predicted = Vec::with_capacity(BORN_BINS);
    let mut worst: f64 = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let a = lo + i as f64 * width;
        let rhs = simpson(|b| born_rhs(b, s, delta, 1).unwrap_or(f64::NAN), a, a + width, 64) / width;
        let emp = c as f64 / (n * width);
        worst = worst.max((emp - rhs).abs() / rhs);
        empirical.push(emp);
        predicted.push(rhs);
    }
    Ok(TestReport::threshold("born_identity", worst, BORN_TOLERANCE, worst < BORN_TOLERANCE, samples.len(), seed)
        .detail("sigma_walk", s)
        .detail("delta", delta)
        .detail("bin_edges", (0..=BORN_BINS).map(|i| lo + i as f64 * width).collect::<Vec<_>>())
        .detail("empirical_density", empirical)
        .detail("predicted_density", predicted)
        .detail("precondition", json!({"name": precondition.name, "p_value": precondition.p_value})))
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}
