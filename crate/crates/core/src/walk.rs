//! Time-ordered evolution under independent random Hamiltonians.
//!
//! Each step applies `exp(-(i/hbar) H_k dt)` with a fresh ensemble draw
//! `H_k`. The constrained walk is the reduction to Gaussian states, where
//! every factor acts as a translation `H_k = xi_k . p` and the state is
//! displaced by `d_N = sum_k xi_k dt`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{ManifoldPoint, TranslationChart};
use crate::grid::Spectral;
use crate::hilbert::{self, State, TangentVector, C64};
use crate::rmt::{eigh, EnsembleSpec, HermitianSample};
use crate::rng::{lane_index, split_rng, Stream};
use crate::stats::{linear_fit, LinearFit};

/// Upper bound on `v dt / hbar` for the first-order stepper.
pub const FIRST_ORDER_BOUND: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    /// `Q exp(-i Lambda dt / hbar) Q^+` from the eigendecomposition.
    ExactEigen,
    /// `normalize(phi - (i/hbar) H phi dt)`.
    FirstOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub dim: usize,
    pub steps: usize,
    pub dt: f64,
    pub ensemble: EnsembleSpec,
    pub hbar: f64,
    pub stepper: Stepper,
    pub seed: u64,
    /// Snapshot stride; every `stride`-th state is stored.
    pub stride: usize,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.ensemble.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.ensemble.dim,
            });
        }
        if !(self.dt > 0.0) || !(self.hbar > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt and hbar must be > 0 (dt = {}, hbar = {})",
                self.dt, self.hbar
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("stride must be >= 1".into()));
        }
        if self.stepper == Stepper::FirstOrder {
            check_first_order(self.ensemble.scale, self.dt, self.hbar)?;
        }
        Ok(())
    }

    /// `v dt / hbar`.
    pub fn step_ratio(&self) -> f64 {
        self.ensemble.scale * self.dt / self.hbar
    }
}

fn check_first_order(scale: f64, dt: f64, hbar: f64) -> Result<()> {
    let ratio = scale * dt / hbar;
    if ratio > FIRST_ORDER_BOUND {
        return Err(Error::StepperBound {
            ratio,
            bound: FIRST_ORDER_BOUND,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkTrajectory {
    /// `(step, state)` snapshots.
    pub states: Vec<(usize, State)>,
    /// `theta(phi_0, phi_k)` for `k = 0..=N`.
    pub fs_distances: Vec<f64>,
    pub config: WalkConfig,
}

fn mat_vec(h: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
    let n = v.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (j, vj) in v.iter().enumerate() {
        if *vj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = h.column(j);
        for (o, hij) in out.iter_mut().zip(col.iter()) {
            *o += hij * vj;
        }
    }
    out
}

/// One factor `exp(-(i/hbar) H dt)` applied to `phi`.
pub fn unconstrained_step(phi: &State, h: &HermitianSample, dt: f64, hbar: f64, stepper: Stepper) -> Result<State> {
    if h.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: h.dim(),
        });
    }
    match stepper {
        Stepper::ExactEigen => {
            let (values, q) = eigh(&h.entries)?;
            let psi = DVector::from_column_slice(phi.amplitudes());
            let mut c = q.adjoint() * psi;
            for (ck, lk) in c.iter_mut().zip(&values) {
                *ck *= C64::from_polar(1.0, -lk * dt / hbar);
            }
            let out = q * c;
            Ok(State::from_unitary_image(out.iter().copied().collect(), phi.basis().to_string()))
        }
        Stepper::FirstOrder => {
            check_first_order(h.spec.scale, dt, hbar)?;
            let hphi = mat_vec(&h.entries, phi.amplitudes());
            let factor = C64::new(0.0, -dt / hbar);
            let v: Vec<C64> = phi
                .amplitudes()
                .iter()
                .zip(&hphi)
                .map(|(p, hp)| p + factor * hp)
                .collect();
            State::new(v, phi.basis())
        }
    }
}

/// Horizontal part of the first-order step `-(i/hbar) H phi dt`.
pub fn first_order_step_vector(phi: &State, h: &HermitianSample, dt: f64, hbar: f64) -> TangentVector {
    let hphi = mat_vec(&h.entries, phi.amplitudes());
    let factor = C64::new(0.0, -dt / hbar);
    let w: Vec<C64> = hphi.into_iter().map(|x| x * factor).collect();
    hilbert::horizontal_project(phi, &w)
}

/// `N` steps with an independent ensemble draw per step.
pub fn run_walk<R: Rng + ?Sized>(phi0: &State, cfg: &WalkConfig, rng: &mut R) -> Result<WalkTrajectory> {
    cfg.validate()?;
    if phi0.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            got: phi0.dim(),
        });
    }
    let mut states = vec![(0, phi0.clone())];
    let mut fs_distances = Vec::with_capacity(cfg.steps + 1);
    fs_distances.push(0.0);
    let mut phi = phi0.clone();
    for k in 1..=cfg.steps {
        let h = cfg.ensemble.sample(rng, k as u64);
        phi = unconstrained_step(&phi, &h, cfg.dt, cfg.hbar, cfg.stepper)?;
        fs_distances.push(hilbert::fs_distance(phi0, &phi));
        if k % cfg.stride == 0 || k == cfg.steps {
            states.push((k, phi.clone()));
        }
    }
    Ok(WalkTrajectory {
        states,
        fs_distances,
        config: cfg.clone(),
    })
}

/// Runs `trials` independent walks in parallel, trial `t` drawing from lane
/// `(group, t)` of `cfg.seed`. Results are in trial order.
pub fn run_walks(phi0: &State, cfg: &WalkConfig, trials: usize, group: u64) -> Result<Vec<WalkTrajectory>> {
    par_trials(cfg.seed, group, trials, |_, rng| run_walk(phi0, cfg, rng))
        .into_iter()
        .collect()
}

/// `theta(phi_0, phi_N)` for `trials` walks, trial `t` on lane `(group, t)`.
pub fn final_distances(phi0: &State, cfg: &WalkConfig, trials: usize, group: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    if phi0.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            got: phi0.dim(),
        });
    }
    par_trials(cfg.seed, group, trials, |_, rng| {
        let mut phi = phi0.clone();
        for k in 1..=cfg.steps {
            let h = cfg.ensemble.sample(rng, k as u64);
            phi = unconstrained_step(&phi, &h, cfg.dt, cfg.hbar, cfg.stepper)?;
        }
        Ok(hilbert::fs_distance(phi0, &phi))
    })
    .into_iter()
    .collect()
}

/// Horizontal first-order step vectors at a fixed base state, one ensemble
/// draw per sample on lane `(group, sample)` of `root`.
pub fn sample_step_vectors(
    phi: &State,
    spec: &EnsembleSpec,
    dt: f64,
    hbar: f64,
    count: usize,
    root: u64,
    group: u64,
) -> Result<Vec<TangentVector>> {
    spec.validate()?;
    if spec.dim != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            got: spec.dim,
        });
    }
    Ok(par_trials(root, group, count, |k, rng| {
        first_order_step_vector(phi, &spec.sample(rng, k as u64), dt, hbar)
    }))
}

/// Mean of `theta_k^2` across trajectories for every step `k`.
pub fn mean_square_distances(trajs: &[WalkTrajectory]) -> Vec<f64> {
    let len = trajs.iter().map(|t| t.fs_distances.len()).min().unwrap_or(0);
    (0..len)
        .map(|k| trajs.iter().map(|t| t.fs_distances[k].powi(2)).sum::<f64>() / trajs.len() as f64)
        .collect()
}

/// Linear fit of mean `theta^2` against `t = k dt` over the leading steps
/// with mean `theta^2 <= max_theta2`. Returns the fit and the number of
/// points used.
pub fn small_angle_fit(msd: &[f64], dt: f64, max_theta2: f64) -> Result<(LinearFit, usize)> {
    let used = msd.iter().take_while(|&&m| m <= max_theta2).count();
    if used < 5 {
        return Err(Error::InsufficientSamples(format!(
            "small-angle window has {used} points, need >= 5"
        )));
    }
    let t: Vec<f64> = (0..used).map(|k| k as f64 * dt).collect();
    Ok((linear_fit(&t, &msd[..used]), used))
}

/// Maps `f` over trials in parallel with one derived stream per trial.
pub fn par_trials<T, F>(root: u64, group: u64, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut Stream) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = split_rng(root, lane_index(group, t as u64));
            f(t, &mut rng)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedTrajectory {
    /// `d_k` for `k = 1..=N`.
    pub displacements: Vec<Vec<f64>>,
    /// `xi_k` for `k = 1..=N`.
    pub step_draws: Vec<Vec<f64>>,
    pub dt: f64,
    pub v0: f64,
}

impl ConstrainedTrajectory {
    /// `d_N`.
    pub fn final_displacement(&self) -> &[f64] {
        self.displacements.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn steps(&self) -> usize {
        self.step_draws.len()
    }

    pub fn dim(&self) -> usize {
        self.step_draws.first().map(Vec::len).unwrap_or(0)
    }
}

/// Gaussian-step walk: `xi_k ~ N(0, v0^2 I_d)` i.i.d., `d_N = sum xi_k dt`.
pub fn constrained_walk<R: Rng + ?Sized>(d: usize, n_steps: usize, dt: f64, v0: f64, rng: &mut R) -> Result<ConstrainedTrajectory> {
    if n_steps == 0 || d == 0 {
        return Err(Error::InvalidParameter("constrained walk needs N >= 1 and d >= 1".into()));
    }
    if !(v0 >= 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need v0 >= 0 and dt > 0 (v0 = {v0}, dt = {dt})")));
    }
    let mut displacements = Vec::with_capacity(n_steps);
    let mut step_draws = Vec::with_capacity(n_steps);
    let mut pos = vec![0.0; d];
    for _ in 0..n_steps {
        let xi: Vec<f64> = (0..d)
            .map(|_| v0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for (p, x) in pos.iter_mut().zip(&xi) {
            *p += x * dt;
        }
        displacements.push(pos.clone());
        step_draws.push(xi);
    }
    Ok(ConstrainedTrajectory {
        displacements,
        step_draws,
        dt,
        v0,
    })
}

/// Final displacements `d_N` of many constrained walks, without the
/// per-step history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSample {
    pub finals: Vec<Vec<f64>>,
    pub steps: usize,
    pub dt: f64,
    pub v0: f64,
}

impl DisplacementSample {
    /// `N dt^2 v0^2`, the per-component variance of `d_N`.
    pub fn expected_variance(&self) -> f64 {
        self.steps as f64 * self.dt * self.dt * self.v0 * self.v0
    }

    pub fn dim(&self) -> usize {
        self.finals.first().map(Vec::len).unwrap_or(0)
    }

    pub fn trials(&self) -> usize {
        self.finals.len()
    }

    /// Values of component `j` across trials.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.finals.iter().map(|f| f[j]).collect()
    }
}

/// `trials` constrained walks in parallel, trial `t` on lane `(group, t)`.
pub fn sample_final_displacements(
    d: usize,
    n_steps: usize,
    dt: f64,
    v0: f64,
    trials: usize,
    root: u64,
    group: u64,
) -> Result<DisplacementSample> {
    if n_steps == 0 || d == 0 {
        return Err(Error::InvalidParameter("constrained walk needs N >= 1 and d >= 1".into()));
    }
    let finals = par_trials(root, group, trials, |_, rng| {
        let mut pos = vec![0.0; d];
        for _ in 0..n_steps {
            for p in pos.iter_mut() {
                *p += v0 * dt * rng.sample::<f64, _>(StandardNormal);
            }
        }
        pos
    });
    Ok(DisplacementSample {
        finals,
        steps: n_steps,
        dt,
        v0,
    })
}

/// Applies the time-ordered product of `exp(-(i/hbar) xi_k dt p)` to a grid
/// Gaussian, one spectral factor per step.
pub fn evolve_translations(m: &ManifoldPoint, traj: &ConstrainedTrajectory) -> Result<State> {
    if traj.dim() != 1 {
        return Err(Error::InvalidParameter("grid translations are one-dimensional".into()));
    }
    let spectral = Spectral::new(m.grid);
    let mut psi = m.state.amplitudes().to_vec();
    for xi in &traj.step_draws {
        let shift = xi[0] * traj.dt;
        spectral.translate(&mut psi, shift);
    }
    State::new(psi, m.state.basis())
}

/// Classical velocity carried by the translation-tangent part of the step
/// generated by `H`: `xi_j = 2 sigma Re <e_j, -(i/hbar) H g>`.
pub fn project_onto_translations(h: &HermitianSample, chart: &TranslationChart) -> Result<Vec<f64>> {
    let base = chart.base();
    if h.dim() != base.dim() {
        return Err(Error::DimensionMismatch {
            expected: base.dim(),
            got: h.dim(),
        });
    }
    let hg = mat_vec(&h.entries, base.amplitudes());
    let factor = C64::new(0.0, -1.0 / chart.hbar);
    let scale = 2.0 * chart.sigma;
    Ok(chart
        .frame
        .vectors()
        .iter()
        .map(|e| scale * (factor * hilbert::inner(e, &hg)).re)
        .collect())
}

/// Sample-level convenience: translation velocities of `draws` ensemble
/// samples, drawn sequentially from `rng`.
pub fn sample_translation_velocities<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    chart: &TranslationChart,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    (0..draws)
        .map(|k| project_onto_translations(&spec.sample(rng, k as u64), chart))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drift {
    /// Drift rate (1/time).
    pub kappa: f64,
    /// Fubini–Study capture radius around each target.
    pub capture_radius: f64,
    /// Whether the random unitary step is applied before each drift step.
    pub noise: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftRun {
    pub trajectory: WalkTrajectory,
    /// Index of the captured target, if any.
    pub outcome: Option<usize>,
    /// Distance to the nearest target after each step (index 0 = start).
    pub target_distances: Vec<f64>,
}

fn nearest(phi: &State, targets: &[State]) -> (usize, f64) {
    targets
        .iter()
        .enumerate()
        .map(|(i, t)| (i, hilbert::fs_distance(phi, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("targets nonempty")
}

/// Random walk with a deterministic drift toward the nearest target:
/// `phi <- normalize(phi + kappa dt (chi <chi,phi> - phi |<chi,phi>|^2))`
/// after each random step. Stops at the first capture.
pub fn walk_with_drift<R: Rng + ?Sized>(
    phi0: &State,
    targets: &[State],
    drift: &Drift,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<DriftRun> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(Error::InvalidParameter("drift walk needs at least one target".into()));
    }
    for t in targets {
        if t.dim() != phi0.dim() {
            return Err(Error::DimensionMismatch {
                expected: phi0.dim(),
                got: t.dim(),
            });
        }
    }
    let needed = 2.0 * drift.capture_radius;
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            let distance = hilbert::fs_distance(&targets[i], &targets[j]);
            if distance <= needed {
                return Err(Error::OverlappingTargets { i, j, distance, needed });
            }
        }
    }

    let mut phi = phi0.clone();
    let mut states = vec![(0, phi0.clone())];
    let mut fs_distances = vec![0.0];
    let (mut idx, mut dist) = nearest(&phi, targets);
    let mut target_distances = vec![dist];
    let mut outcome = (dist < drift.capture_radius).then_some(idx);
    let mut k = 0;
    while outcome.is_none() && k < cfg.steps {
        k += 1;
        if drift.noise {
            let h = cfg.ensemble.sample(rng, k as u64);
            phi = unconstrained_step(&phi, &h, cfg.dt, cfg.hbar, cfg.stepper)?;
        }
        let (i, _) = nearest(&phi, targets);
        let chi = targets[i].amplitudes();
        let c = hilbert::inner(chi, phi.amplitudes());
        let rate = drift.kappa * cfg.dt;
        let v: Vec<C64> = phi
            .amplitudes()
            .iter()
            .zip(chi)
            .map(|(p, x)| p + rate * (x * c - p * c.norm_sqr()))
            .collect();
        phi = State::new(v, phi.basis())?;
        (idx, dist) = nearest(&phi, targets);
        target_distances.push(dist);
        fs_distances.push(hilbert::fs_distance(phi0, &phi));
        if k % cfg.stride == 0 {
            states.push((k, phi.clone()));
        }
        if dist < drift.capture_radius {
            outcome = Some(idx);
        }
    }
    if states.last().map(|s| s.0) != Some(k) {
        states.push((k, phi));
    }
    Ok(DriftRun {
        trajectory: WalkTrajectory {
            states,
            fs_distances,
            config: cfg.clone(),
        },
        outcome,
        target_distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{gaussian_state, translation_tangent_basis, GaussianParams, OscillatorBasis};
    use crate::grid::Grid;
    use crate::rmt::EnsembleKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn cfg(dim: usize, steps: usize, dt: f64, stepper: Stepper) -> WalkConfig {
        WalkConfig {
            dim,
            steps,
            dt,
            ensemble: EnsembleSpec::new(EnsembleKind::Gue, dim, 1.0, 1).unwrap(),
            hbar: 1.0,
            stepper,
            seed: 1,
            stride: 1,
        }
    }

    fn zero_sample(n: usize) -> HermitianSample {
        HermitianSample::from_matrix(
            DMatrix::zeros(n, n),
            EnsembleSpec::new(EnsembleKind::Gue, n, 1.0, 0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let phi = State::random(6, &mut rng);
        for stepper in [Stepper::ExactEigen, Stepper::FirstOrder] {
            let out = unconstrained_step(&phi, &zero_sample(6), 0.01, 1.0, stepper).unwrap();
            for (a, b) in out.amplitudes().iter().zip(phi.amplitudes()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn scalar_hamiltonian_is_a_phase() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let phi = State::random(5, &mut rng);
        let h = HermitianSample::from_matrix(
            DMatrix::identity(5, 5) * C64::new(3.7, 0.0),
            EnsembleSpec::new(EnsembleKind::Gue, 5, 1.0, 0).unwrap(),
        )
        .unwrap();
        let out = unconstrained_step(&phi, &h, 0.3, 1.0, Stepper::ExactEigen).unwrap();
        assert!(hilbert::fs_distance(&phi, &out) < 1e-12);
    }

    #[test]
    fn exact_stepper_preserves_norm_over_many_steps() {
        let c = cfg(8, 10_000, 0.1, Stepper::ExactEigen);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut phi = State::random(8, &mut rng);
        for k in 0..c.steps {
            let h = c.ensemble.sample(&mut rng, k as u64);
            phi = unconstrained_step(&phi, &h, c.dt, c.hbar, c.stepper).unwrap();
        }
        assert!((phi.norm() - 1.0).abs() < 1e-9, "{}", phi.norm());
    }

    #[test]
    fn flow_is_an_isometry() {
        let c = cfg(10, 1, 0.3, Stepper::ExactEigen);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut a = State::random(10, &mut rng);
        let mut b = State::random(10, &mut rng);
        let d0 = hilbert::fs_distance(&a, &b);
        for k in 0..100 {
            let h = c.ensemble.sample(&mut rng, k);
            a = unconstrained_step(&a, &h, c.dt, 1.0, c.stepper).unwrap();
            b = unconstrained_step(&b, &h, c.dt, 1.0, c.stepper).unwrap();
            assert!((a.norm() - 1.0).abs() < 1e-12);
            assert!((hilbert::fs_distance(&a, &b) - d0).abs() < 1e-10);
        }
    }

    #[test]
    fn first_order_bound_enforced() {
        let mut c = cfg(4, 1, 0.1, Stepper::FirstOrder);
        assert!(matches!(c.validate(), Err(Error::StepperBound { .. })));
        let phi = State::basis_state(4, 0);
        let h = c.ensemble.sample(&mut ChaCha20Rng::seed_from_u64(0), 0);
        assert!(matches!(
            unconstrained_step(&phi, &h, 0.1, 1.0, Stepper::FirstOrder),
            Err(Error::StepperBound { .. })
        ));
        c.dt = 0.05;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn run_walk_determinism_and_empty() {
        let phi = State::basis_state(6, 0);
        let c0 = cfg(6, 0, 0.02, Stepper::ExactEigen);
        let t = run_walk(&phi, &c0, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        assert_eq!(t.states.len(), 1);
        assert_eq!(t.fs_distances, vec![0.0]);

        let c = cfg(6, 50, 0.02, Stepper::ExactEigen);
        let a = run_walks(&phi, &c, 4, 0).unwrap();
        let b = run_walks(&phi, &c, 4, 0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.fs_distances, y.fs_distances);
        }
        assert_ne!(a[0].fs_distances, a[1].fs_distances);
        assert!(a[0].fs_distances.iter().all(|&t| (0.0..=std::f64::consts::FRAC_PI_2).contains(&t)));
    }

    #[test]
    fn constrained_walk_bookkeeping() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let t = constrained_walk(3, 100, 0.01, 2.0, &mut rng).unwrap();
        let mut sum = [0.0; 3];
        for xi in &t.step_draws {
            for (s, x) in sum.iter_mut().zip(xi) {
                *s += x * 0.01;
            }
        }
        assert_eq!(t.final_displacement(), &sum);
        let z = constrained_walk(1, 10, 0.01, 0.0, &mut rng).unwrap();
        assert_eq!(z.final_displacement(), &[0.0]);
        assert!(constrained_walk(1, 0, 0.01, 1.0, &mut rng).is_err());
    }

    #[test]
    fn constrained_walk_variance() {
        let finals: Vec<f64> = par_trials(9, 0, 10_000, |_, rng| {
            constrained_walk(1, 1000, 0.01, 1.0, rng).unwrap().final_displacement()[0]
        });
        let var = crate::stats::variance(&finals);
        assert!((var - 0.1).abs() < 0.01, "{var}");
    }

    #[test]
    fn final_displacement_sampler() {
        let a = sample_final_displacements(2, 100, 0.01, 1.0, 2000, 3, 0).unwrap();
        let b = sample_final_displacements(2, 100, 0.01, 1.0, 2000, 3, 0).unwrap();
        assert_eq!(a, b);
        let var = crate::stats::variance(&a.component(1));
        assert!((var / a.expected_variance() - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn final_distances_match_run_walk() {
        let phi = State::basis_state(6, 2);
        let c = cfg(6, 20, 0.02, Stepper::FirstOrder);
        let d = final_distances(&phi, &c, 3, 5).unwrap();
        let w = run_walks(&phi, &c, 3, 5).unwrap();
        for (x, t) in d.iter().zip(&w) {
            assert_eq!(*x, *t.fs_distances.last().unwrap());
        }
    }

    #[test]
    fn grid_translation_matches_displaced_gaussian() {
        let grid = Grid::new(-12.0, 12.0, 512, 1.0).unwrap();
        let m = gaussian_state(&GaussianParams::at_rest(vec![-0.5], 1.0).unwrap(), &grid).unwrap();
        let traj = constrained_walk(1, 1000, 0.01, 1.0, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        let evolved = evolve_translations(&m, &traj).unwrap();
        let target = gaussian_state(
            &GaussianParams::at_rest(vec![-0.5 + traj.final_displacement()[0]], 1.0).unwrap(),
            &grid,
        )
        .unwrap();
        let err = hilbert::norm(
            &evolved
                .amplitudes()
                .iter()
                .zip(target.state.amplitudes())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn translation_generator_recovered_on_grid() {
        let grid = Grid::new(-10.0, 10.0, 256, 1.0).unwrap();
        let m = gaussian_state(&GaussianParams::at_rest(vec![0.2], 1.0).unwrap(), &grid).unwrap();
        let chart = translation_tangent_basis(&m).unwrap();
        let p = Spectral::new(grid).momentum_matrix();
        let xi = 0.73;
        let h = HermitianSample::from_matrix(p * C64::new(xi, 0.0), EnsembleSpec::new(EnsembleKind::Gue, 256, 1.0, 0).unwrap()).unwrap();
        let got = project_onto_translations(&h, &chart).unwrap();
        assert!((got[0] - xi).abs() < 1e-6, "{got:?}");
    }

    #[test]
    fn translation_generator_recovered_in_oscillator_basis() {
        let basis = OscillatorBasis::new(3, 0.8, 1.0, 2).unwrap();
        let chart = basis.chart().unwrap();
        let xi = [0.3, -1.1, 0.5];
        let mut h = DMatrix::<C64>::zeros(basis.len(), basis.len());
        for (j, x) in xi.iter().enumerate() {
            h += basis.momentum(j) * C64::new(*x, 0.0);
        }
        let h = HermitianSample::from_matrix(h, EnsembleSpec::new(EnsembleKind::Gue, basis.len(), 1.0, 0).unwrap()).unwrap();
        let got = project_onto_translations(&h, &chart).unwrap();
        for (g, x) in got.iter().zip(xi) {
            assert!((g - x).abs() < 1e-12);
        }
    }

    #[test]
    fn goe_gives_no_translation() {
        let basis = OscillatorBasis::new(3, 0.8, 1.0, 2).unwrap();
        let chart = basis.chart().unwrap();
        let spec = EnsembleSpec::new(EnsembleKind::Goe, basis.len(), 1.0, 0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for xi in sample_translation_velocities(&spec, &chart, 1000, &mut rng).unwrap() {
            assert!(xi.iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn drift_without_noise_captures_monotonically() {
        let phi0 = State::basis_state(4, 0);
        let target = hilbert::normalize(&[C64::new(0.3, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.5), C64::new(0.0, 0.0)]).unwrap();
        let c = cfg(4, 500, 0.1, Stepper::ExactEigen);
        let drift = Drift {
            kappa: 2.0,
            capture_radius: 0.05,
            noise: false,
        };
        let run = walk_with_drift(&phi0, &[target], &drift, &c, &mut ChaCha20Rng::seed_from_u64(0)).unwrap();
        assert_eq!(run.outcome, Some(0));
        assert!(run.target_distances.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn no_drift_no_capture() {
        let phi0 = State::basis_state(4, 0);
        let target = State::basis_state(4, 1);
        let c = cfg(4, 200, 0.02, Stepper::ExactEigen);
        let drift = Drift {
            kappa: 0.0,
            capture_radius: 1e-3,
            noise: true,
        };
        let run = walk_with_drift(&phi0, &[target], &drift, &c, &mut ChaCha20Rng::seed_from_u64(0)).unwrap();
        assert_eq!(run.outcome, None);
        assert_eq!(run.target_distances.len(), 201);
    }

    #[test]
    fn overlapping_targets_rejected() {
        let phi0 = State::basis_state(3, 0);
        let a = State::basis_state(3, 1);
        let b = hilbert::normalize(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.05, 0.0)]).unwrap();
        let drift = Drift {
            kappa: 1.0,
            capture_radius: 0.1,
            noise: false,
        };
        let c = cfg(3, 10, 0.1, Stepper::ExactEigen);
        assert!(matches!(
            walk_with_drift(&phi0, &[a, b], &drift, &c, &mut ChaCha20Rng::seed_from_u64(0)),
            Err(Error::OverlappingTargets { .. })
        ));
    }
}
