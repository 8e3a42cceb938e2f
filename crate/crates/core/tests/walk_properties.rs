use statewalk_core::gaussian::OscillatorBasis;
use statewalk_core::hilbert::{fs_distance, State, C64};
use statewalk_core::rmt::{EnsembleKind, EnsembleSpec};
use statewalk_core::rng::split_rng;
use statewalk_core::stats::{correlation, lag1_autocorrelation, mean, variance};
use statewalk_core::walk::{
    constrained_walk, mean_square_distances, par_trials, run_walks, sample_translation_velocities,
    small_angle_fit, walk_with_drift, Drift, Stepper, WalkConfig,
};

fn gue_cfg(dim: usize, steps: usize, dt: f64, stepper: Stepper, seed: u64) -> WalkConfig {
    WalkConfig {
        dim,
        steps,
        dt,
        ensemble: EnsembleSpec::new(EnsembleKind::Gue, dim, 1.0, seed).unwrap(),
        hbar: 1.0,
        stepper,
        seed,
        stride: steps.max(1),
    }
}

#[test]
fn fs_msd_grows_linearly_at_small_angles() {
    let cfg = gue_cfg(64, 1000, 0.02, Stepper::FirstOrder, 7);
    let trajs = run_walks(&State::basis_state(64, 0), &cfg, 200, 0).unwrap();
    let msd = mean_square_distances(&trajs);
    assert_eq!(msd.len(), 1001);
    let (fit, used) = small_angle_fit(&msd, cfg.dt, 0.25).unwrap();
    assert!(fit.r_squared > 0.99, "R^2 = {} over {used} points", fit.r_squared);
    // per-step increment (n - 1)(v dt / hbar)^2
    let per_step = fit.slope * cfg.dt;
    assert!((per_step / (63.0 * 0.02f64.powi(2)) - 1.0).abs() < 0.1, "{per_step}");
    assert!(msd.iter().all(|m| *m <= std::f64::consts::FRAC_PI_2.powi(2)));
}

#[test]
fn step_draws_are_serially_independent() {
    let n = 1000;
    let bound = 3.0 / (n as f64).sqrt();
    let rhos: Vec<f64> = par_trials(3, 0, 200, |_, rng| {
        let t = constrained_walk(1, n, 0.01, 1.0, rng).unwrap();
        let xs: Vec<f64> = t.step_draws.iter().map(|x| x[0]).collect();
        lag1_autocorrelation(&xs)
    });
    let pooled = mean(&rhos);
    assert!(pooled.abs() < bound / (200f64).sqrt() * 3.0, "{pooled}");
    let outside = rhos.iter().filter(|r| r.abs() >= bound).count();
    assert!(outside <= 5, "{outside} of 200 beyond 3/sqrt(N)");
}

#[test]
fn gue_translation_velocities_are_isotropic() {
    let sigma = 0.8;
    let basis = OscillatorBasis::new(3, sigma, 1.0, 2).unwrap();
    let chart = basis.chart().unwrap();
    let spec = EnsembleSpec::new(EnsembleKind::Gue, basis.len(), 1.0, 5).unwrap();
    let xi = sample_translation_velocities(&spec, &chart, 10_000, &mut split_rng(5, 0)).unwrap();
    let cols: Vec<Vec<f64>> = (0..3).map(|j| xi.iter().map(|x| x[j]).collect()).collect();
    let expected = 2.0 * sigma * sigma;
    for c in &cols {
        assert!(mean(c).abs() < 4.0 * (expected / 1e4).sqrt());
        assert!((variance(c) / expected - 1.0).abs() < 0.05, "{}", variance(c));
    }
    for i in 0..3 {
        for j in i + 1..3 {
            assert!(correlation(&cols[i], &cols[j]).abs() < 3.0 / 100.0);
        }
    }
}

#[test]
fn closer_target_captured_more_often() {
    let phi0 = State::basis_state(3, 0);
    let c = |theta: f64, idx: usize| {
        let mut v = vec![C64::new(0.0, 0.0); 3];
        v[0] = theta.cos().into();
        v[idx] = theta.sin().into();
        State::new(v, "abstract").unwrap()
    };
    let targets = vec![c(0.4, 1), c(0.9, 2)];
    assert!(fs_distance(&phi0, &targets[0]) < fs_distance(&phi0, &targets[1]));
    let cfg = gue_cfg(3, 400, 0.05, Stepper::ExactEigen, 9);
    let drift = Drift {
        kappa: 1.0,
        capture_radius: 0.1,
        noise: true,
    };
    let outcomes = par_trials(9, 0, 1000, |_, rng| walk_with_drift(&phi0, &targets, &drift, &cfg, rng).unwrap().outcome);
    let first = outcomes.iter().filter(|o| **o == Some(0)).count();
    let second = outcomes.iter().filter(|o| **o == Some(1)).count();
    assert!(first >= second, "{first} vs {second}");
    assert!(first + second > 0);
}
