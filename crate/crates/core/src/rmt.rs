//! Gaussian unitary and orthogonal ensembles.
//!
//! Variance conventions, with scale `v`:
//!
//! * GUE: `H_jj ~ N(0, v^2)`; for `j < k`, `Re H_jk` and `Im H_jk` are
//!   independent `N(0, v^2/2)`, so `E|H_jk|^2 = v^2`. Equivalently
//!   `E[H_ij H_lk] = v^2 delta_ik delta_jl`.
//! * GOE: `H_jj ~ N(0, 2 v^2)`, `H_jk ~ N(0, v^2)` real.
//!
//! The scale does not depend on the dimension. Samples are assembled from
//! their upper triangle, so they are exactly Hermitian.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Tolerances, C64};
use crate::rng::{lane_index, split_rng};
use crate::stats::{bonferroni, ks_two_sample, TestReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Gue,
    Goe,
    /// Independent diagonal entries with `N(0, v^2)` law and no coupling:
    /// the uncorrelated-level reference for spectral diagnostics.
    Poisson,
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnsembleKind::Gue => "gue",
            EnsembleKind::Goe => "goe",
            EnsembleKind::Poisson => "poisson",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub dim: usize,
    pub scale: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, dim: usize, scale: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            dim,
            scale,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidEnsemble(format!("dim must be >= 2, got {}", self.dim)));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidEnsemble(format!("scale must be > 0, got {}", self.scale)));
        }
        Ok(())
    }

    /// Draws one matrix of this ensemble.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, draw_index: u64) -> HermitianSample {
        let entries = match self.kind {
            EnsembleKind::Gue => gue_entries(self.dim, self.scale, rng),
            EnsembleKind::Goe => goe_entries(self.dim, self.scale, rng),
            EnsembleKind::Poisson => poisson_entries(self.dim, self.scale, rng),
        };
        HermitianSample {
            entries,
            spec: *self,
            draw_index,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianSample {
    pub entries: DMatrix<C64>,
    pub spec: EnsembleSpec,
    pub draw_index: u64,
}

impl HermitianSample {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Wraps an explicit Hermitian matrix, e.g. a translation generator.
    pub fn from_matrix(entries: DMatrix<C64>, spec: EnsembleSpec) -> Result<Self> {
        check_hermitian(&entries, Tolerances::default().hermitian)?;
        Ok(Self {
            entries,
            spec,
            draw_index: 0,
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigenvalues(&self.entries)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * std
}

fn gue_entries<R: Rng + ?Sized>(n: usize, v: f64, rng: &mut R) -> DMatrix<C64> {
    let off = v / std::f64::consts::SQRT_2;
    let mut h = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = C64::new(gaussian(rng, v), 0.0);
        for k in j + 1..n {
            let re = gaussian(rng, off);
            let im = gaussian(rng, off);
            h[(j, k)] = C64::new(re, im);
            h[(k, j)] = C64::new(re, -im);
        }
    }
    h
}

fn goe_entries<R: Rng + ?Sized>(n: usize, v: f64, rng: &mut R) -> DMatrix<C64> {
    let diag = v * std::f64::consts::SQRT_2;
    let mut h = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = C64::new(gaussian(rng, diag), 0.0);
        for k in j + 1..n {
            let x = gaussian(rng, v);
            h[(j, k)] = C64::new(x, 0.0);
            h[(k, j)] = C64::new(x, 0.0);
        }
    }
    h
}

fn poisson_entries<R: Rng + ?Sized>(n: usize, v: f64, rng: &mut R) -> DMatrix<C64> {
    let mut h = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = C64::new(gaussian(rng, v), 0.0);
    }
    h
}

pub fn sample_gue<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R, draw_index: u64) -> Result<HermitianSample> {
    spec.validate()?;
    if spec.kind != EnsembleKind::Gue {
        return Err(Error::InvalidEnsemble(format!("expected gue, got {}", spec.kind)));
    }
    Ok(spec.sample(rng, draw_index))
}

pub fn sample_goe<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R, draw_index: u64) -> Result<HermitianSample> {
    spec.validate()?;
    if spec.kind != EnsembleKind::Goe {
        return Err(Error::InvalidEnsemble(format!("expected goe, got {}", spec.kind)));
    }
    Ok(spec.sample(rng, draw_index))
}

pub fn hermitian_deviation(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    dev
}

fn check_hermitian(h: &DMatrix<C64>, tol: f64) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    let scale = h.iter().map(|x| x.norm()).fold(1.0_f64, f64::max);
    let deviation = hermitian_deviation(h);
    if deviation > tol * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues(h: &DMatrix<C64>) -> Result<Vec<f64>> {
    check_hermitian(h, Tolerances::default().hermitian)?;
    let mut ev: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Ascending eigenvalues with matching orthonormal eigenvectors (columns).
pub fn eigh(h: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    check_hermitian(h, Tolerances::default().hermitian)?;
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `min(s_k, s_{k+1}) / max(s_k, s_{k+1})` for consecutive level spacings.
pub fn spacing_ratios(levels: &[f64]) -> Vec<f64> {
    let spacings: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    spacings
        .windows(2)
        .filter_map(|w| {
            let (lo, hi) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            (hi > 0.0).then(|| lo / hi)
        })
        .collect()
}

/// Minimum number of matrices and of levels per matrix.
pub const MIN_SPACING_SAMPLES: usize = 100;
pub const MIN_SPACING_LEVELS: usize = 100;

/// Spacing ratios of every sample, computed in parallel. Enforces the
/// minimum sample and level counts.
pub fn spacing_ratio_samples(samples: &[HermitianSample]) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    if samples.len() < MIN_SPACING_SAMPLES {
        return Err(Error::TooFewLevels(format!(
            "{} samples, need at least {MIN_SPACING_SAMPLES}",
            samples.len()
        )));
    }
    if let Some(s) = samples.iter().find(|s| s.dim() < MIN_SPACING_LEVELS) {
        return Err(Error::TooFewLevels(format!(
            "{} levels, need at least {MIN_SPACING_LEVELS}",
            s.dim()
        )));
    }
    samples
        .par_iter()
        .map(|s| Ok(spacing_ratios(&s.eigenvalues()?)))
        .collect()
}

/// Mean spacing ratio over every consecutive pair of spacings of every
/// sample.
pub fn spacing_ratio_stat(samples: &[HermitianSample]) -> Result<f64> {
    let ratios = spacing_ratio_samples(samples)?;
    let count: usize = ratios.iter().map(Vec::len).sum();
    Ok(ratios.iter().flatten().sum::<f64>() / count as f64)
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of `diag(R)` absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let d = r[(c, c)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..n {
            q[(row, c)] *= ph;
        }
    }
    q
}

/// Haar-distributed real orthogonal matrix.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        if r[(c, c)] < 0.0 {
            for row in 0..n {
                q[(row, c)] = -q[(row, c)];
            }
        }
    }
    q.map(|x| C64::new(x, 0.0))
}

pub fn unitary_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let p = u.adjoint() * u;
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((p[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Two-sample comparison of `{H}` against `{U^-1 H U}`.
///
/// The two batches come from independent streams. Compared marginals: the
/// diagonal entry `H_00`, real and imaginary parts of `H_01` and of
/// `H_{n-1,0}`, and the quadratic forms `<phi|H|phi>` for three fixed probes
/// (a basis vector, the uniform superposition and a complex probe). The
/// p-value is Bonferroni-adjusted over the seven Kolmogorov–Smirnov tests.
pub fn conjugation_invariance_check(
    spec: &EnsembleSpec,
    u: &DMatrix<C64>,
    trials: usize,
    alpha: f64,
) -> Result<TestReport> {
    spec.validate()?;
    let n = spec.dim;
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u.nrows(),
        });
    }
    let deviation = unitary_deviation(u);
    if deviation > Tolerances::default().unitary {
        return Err(Error::NotUnitary { deviation });
    }
    if trials < 2 {
        return Err(Error::InsufficientSamples("need at least 2 trials".into()));
    }

    let probes: Vec<Vec<C64>> = {
        let mut e0 = vec![C64::new(0.0, 0.0); n];
        e0[0] = C64::new(1.0, 0.0);
        let flat = vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n];
        let raw: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(1.0 + k as f64 / n as f64, 0.7 * k as f64))
            .collect();
        let nr = crate::hilbert::norm(&raw);
        vec![e0, flat, raw.into_iter().map(|x| x / nr).collect()]
    };

    let features = |h: &DMatrix<C64>| -> Vec<f64> {
        let mut f = vec![
            h[(0, 0)].re,
            h[(0, 1)].re,
            h[(0, 1)].im,
            h[(n - 1, 0)].re,
            h[(n - 1, 0)].im,
        ];
        // H_{n-1,0} coincides with H_10 when n = 2; still a valid marginal.
        for p in &probes {
            let hp = h * nalgebra::DVector::from_column_slice(p);
            let q: C64 = p.iter().zip(hp.iter()).map(|(a, b)| a.conj() * b).sum();
            f.push(q.re);
        }
        f
    };

    let mut rng_a = split_rng(spec.seed, lane_index(1, 0));
    let mut rng_b = split_rng(spec.seed, lane_index(1, 1));
    let u_inv = u.adjoint();
    let mut raw: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(trials)).collect();
    let mut conj: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(trials)).collect();
    for t in 0..trials {
        let a = spec.sample(&mut rng_a, t as u64);
        for (col, x) in raw.iter_mut().zip(features(&a.entries)) {
            col.push(x);
        }
        let b = spec.sample(&mut rng_b, t as u64);
        let rotated = &u_inv * &b.entries * u;
        for (col, x) in conj.iter_mut().zip(features(&rotated)) {
            col.push(x);
        }
    }
    let names = ["h00", "re_h01", "im_h01", "re_hn0", "im_hn0", "probe_e0", "probe_flat", "probe_complex"];
    let mut p_values = Vec::new();
    let mut statistic: f64 = 0.0;
    let mut details = serde_json::Map::new();
    for ((name, a), b) in names.iter().zip(&raw).zip(&conj) {
        let ks = ks_two_sample(a, b);
        statistic = statistic.max(ks.statistic);
        p_values.push(ks.p_value);
        details.insert(format!("p_{name}"), ks.p_value.into());
    }
    let p = bonferroni(&p_values);
    details.insert("max_unitary_deviation".into(), deviation.into());
    details.insert("ensemble".into(), spec.kind.to_string().into());
    details.insert("dim".into(), n.into());
    Ok(TestReport::conformance(
        "conjugation_invariance",
        statistic,
        p,
        alpha,
        2 * trials,
        spec.seed,
    )
    .with_details(details))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn spec(kind: EnsembleKind, dim: usize) -> EnsembleSpec {
        EnsembleSpec::new(kind, dim, 1.0, 99).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(EnsembleSpec::new(EnsembleKind::Gue, 1, 1.0, 0).is_err());
        assert!(EnsembleSpec::new(EnsembleKind::Gue, 4, 0.0, 0).is_err());
        assert!(EnsembleSpec::new(EnsembleKind::Gue, 4, -1.0, 0).is_err());
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        for kind in [EnsembleKind::Gue, EnsembleKind::Goe] {
            let s = spec(kind, 16);
            let a = s.sample(&mut ChaCha20Rng::seed_from_u64(5), 0);
            let b = s.sample(&mut ChaCha20Rng::seed_from_u64(5), 0);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn samples_are_exactly_hermitian() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let gue = sample_gue(&spec(EnsembleKind::Gue, 32), &mut rng, 0).unwrap();
        assert_eq!(hermitian_deviation(&gue.entries), 0.0);
        let goe = sample_goe(&spec(EnsembleKind::Goe, 32), &mut rng, 0).unwrap();
        assert_eq!(hermitian_deviation(&goe.entries), 0.0);
        assert!(goe.entries.iter().all(|x| x.im == 0.0));
        assert!(sample_gue(&spec(EnsembleKind::Goe, 4), &mut rng, 0).is_err());
    }

    #[test]
    fn gue_moments_n512() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let h = sample_gue(&spec(EnsembleKind::Gue, 512), &mut rng, 0).unwrap().entries;
        let n = 512;
        let diag_mean = (0..n).map(|i| h[(i, i)].re).sum::<f64>() / n as f64;
        assert!(diag_mean.abs() < 3.0 / (n as f64).sqrt(), "{diag_mean}");
        let mut s = 0.0;
        let mut c = 0usize;
        for j in 0..n {
            for k in j + 1..n {
                s += h[(j, k)].re.powi(2);
                c += 1;
            }
        }
        let var = s / c as f64;
        assert!((var - 0.5).abs() < 0.025, "{var}");
    }

    #[test]
    fn goe_offdiagonal_variance_n512() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let h = sample_goe(&spec(EnsembleKind::Goe, 512), &mut rng, 0).unwrap().entries;
        let n = 512;
        let mut s = 0.0;
        let mut c = 0usize;
        for j in 0..n {
            for k in j + 1..n {
                s += h[(j, k)].re.powi(2);
                c += 1;
            }
        }
        let var = s / c as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn eigenvalue_cases() {
        let c = 2.5;
        let h = DMatrix::<C64>::identity(5, 5) * C64::new(c, 0.0);
        for e in eigenvalues(&h).unwrap() {
            assert!((e - c).abs() < 1e-12);
        }
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let ev = eigenvalues(&d).unwrap();
        for (a, b) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut bad = DMatrix::<C64>::zeros(2, 2);
        bad[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(eigenvalues(&bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn trace_and_reconstruction_n200() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let h = sample_gue(&spec(EnsembleKind::Gue, 200), &mut rng, 0).unwrap().entries;
        let (vals, q) = eigh(&h).unwrap();
        let trace: f64 = (0..200).map(|i| h[(i, i)].re).sum();
        assert!((trace - vals.iter().sum::<f64>()).abs() < 1e-9);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            200,
            vals.iter().map(|&x| C64::new(x, 0.0)),
        ));
        let rec = &q * lambda * q.adjoint();
        let rel = (rec - &h).norm() / h.norm();
        assert!(rel < 1e-9, "{rel}");
    }

    #[test]
    fn spacing_ratio_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let s = spec(EnsembleKind::Gue, 8);
        let few: Vec<_> = (0..5).map(|i| s.sample(&mut rng, i)).collect();
        assert!(matches!(spacing_ratio_stat(&few), Err(Error::TooFewLevels(_))));
        let small: Vec<_> = (0..100).map(|i| s.sample(&mut rng, i)).collect();
        assert!(matches!(spacing_ratio_stat(&small), Err(Error::TooFewLevels(_))));
        assert_eq!(spacing_ratios(&[0.0, 1.0, 3.0]), vec![0.5]);
    }

    #[test]
    fn independence_across_draws() {
        // correlation of H_01 between consecutive draws
        let s = spec(EnsembleKind::Gue, 4);
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let draws: Vec<f64> = (0..10_000).map(|i| s.sample(&mut rng, i).entries[(0, 1)].re).collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / draws.len() as f64;
        let cov = draws.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (draws.len() - 1) as f64;
        let rho = cov / var;
        assert!(rho.abs() < 3.0 / 100.0, "{rho}");
    }

    #[test]
    fn gue_covariance_identity() {
        // E[H_ij H_lk] = v^2 delta_ik delta_jl, checked on a 3x3 block
        let s = EnsembleSpec::new(EnsembleKind::Gue, 3, 1.3, 0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let trials = 40_000;
        let mut acc = vec![C64::new(0.0, 0.0); 81];
        for t in 0..trials {
            let h = s.sample(&mut rng, t).entries;
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..3 {
                        for k in 0..3 {
                            acc[((i * 3 + j) * 3 + l) * 3 + k] += h[(i, j)] * h[(l, k)];
                        }
                    }
                }
            }
        }
        let v2 = 1.3 * 1.3;
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    for k in 0..3 {
                        let m = acc[((i * 3 + j) * 3 + l) * 3 + k] / trials as f64;
                        let expected = if i == k && j == l { v2 } else { 0.0 };
                        assert!(
                            (m - C64::new(expected, 0.0)).norm() < 0.05 * v2,
                            "E[H{i}{j} H{l}{k}] = {m}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn haar_matrices_are_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        assert!(unitary_deviation(&haar_unitary(12, &mut rng)) < 1e-12);
        let o = haar_orthogonal(12, &mut rng);
        assert!(unitary_deviation(&o) < 1e-12);
        assert!(o.iter().all(|x| x.im == 0.0));
    }

    #[test]
    fn conjugation_check_identity_and_errors() {
        let s = EnsembleSpec::new(EnsembleKind::Gue, 6, 1.0, 17).unwrap();
        let id = DMatrix::<C64>::identity(6, 6);
        let r = conjugation_invariance_check(&s, &id, 500, 0.01).unwrap();
        assert!(r.passed, "{r:?}");
        let mut bad = id.clone();
        bad[(0, 0)] = C64::new(1.1, 0.0);
        assert!(matches!(
            conjugation_invariance_check(&s, &bad, 500, 0.01),
            Err(Error::NotUnitary { .. })
        ));
    }
}
