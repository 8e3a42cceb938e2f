//! Acceptance criteria as reusable checks. `verify-all` runs all of them and
//! the acceptance test target times each one.
//!
//! Every check draws from fixed stream groups (see [`groups`]) under the
//! suite seed, so results depend only on `(seed, quick)`.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::Serialize;
use statewalk_core::classical::{
    accelerated_frame_distance, action_difference, kinetic_offset, shared_endpoint_path, split_step_evolve,
    PacketPath, PotentialSpec,
};
use statewalk_core::gaussian::{
    gaussian_state, induced_metric_ratio, overlap_closed_form, overlap_quadrature, realize_fs_distance,
    wave_packet, GaussianParams, OscillatorBasis,
};
use statewalk_core::grid::Grid;
use statewalk_core::hilbert::{fs_distance, HorizontalFrame, State};
use statewalk_core::rmt::{conjugation_invariance_check, haar_unitary, spacing_ratio_samples, EnsembleKind, EnsembleSpec};
use statewalk_core::rng::{lane_index, split_rng};
use statewalk_core::stats::claims::{
    born_analytic_check, born_identity_check, brownian_scaling_fit, gaussian_step_test, homogeneity_test,
    isotropy_test, isotropy_test_coordinates, tangent_coordinates,
};
use statewalk_core::stats::{bonferroni, ks_two_sample, mean, normal_two_sided, variance, TestReport};
use statewalk_core::walk::{
    final_distances, mean_square_distances, par_trials, project_onto_translations, run_walks,
    sample_final_displacements, sample_step_vectors, small_angle_fit, DisplacementSample, Stepper, WalkConfig,
};
use statewalk_core::{Error, Result};

use crate::config::OverlapSection;
use crate::output::{StreamUse, Table};

/// Stream groups of the suite. Lane `(group, trial)` of the suite seed feeds
/// trial `trial` of the named sub-experiment.
pub mod groups {
    pub const OVERLAP_PAIRS: u64 = 101;
    pub const FS_ROUNDTRIP: u64 = 201;
    pub const INITIAL_STATE: u64 = 400;
    pub const ISOTROPY_STEPS: u64 = 401;
    pub const HOMOGENEITY_A: u64 = 402;
    pub const HOMOGENEITY_B: u64 = 403;
    pub const HOMOGENEITY_CONTRAST: u64 = 405;
    pub const MSD_WALKS: u64 = 406;
    pub const GAUSSIAN_STEP: u64 = 501;
    /// Plus the index of the step count.
    pub const BROWNIAN: u64 = 510;
    pub const HEAVY_TAILED: u64 = 520;
    /// Plus the index of the step count.
    pub const PERSISTENT: u64 = 530;
    pub const TRANSLATION_GUE: u64 = 601;
    pub const TRANSLATION_WALK: u64 = 602;
    pub const TRANSLATION_GOE: u64 = 603;
    pub const BORN: u64 = 701;
    pub const SPACING_GUE: u64 = 901;
    pub const SPACING_GOE: u64 = 902;
    pub const SPACING_POISSON: u64 = 903;
    pub const HAAR_GUE: u64 = 904;
    pub const HAAR_GOE: u64 = 905;
    /// Conjugation checks draw from lanes `(1, 0)` and `(1, 1)` of the suite
    /// seed.
    pub const CONJUGATION: u64 = 1;
}

/// Sample sizes of the suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sizes {
    pub overlap_pairs: usize,
    pub roundtrip_angles: usize,
    pub isotropy_samples: usize,
    pub homogeneity_walks: usize,
    pub msd_walks: usize,
    pub msd_steps: usize,
    pub step_trials: usize,
    pub step_count: usize,
    pub scaling_steps: Vec<usize>,
    pub translation_draws: usize,
    pub born_samples: usize,
    pub born_steps: usize,
    pub spacing_dim: usize,
    pub spacing_samples: usize,
    pub conjugation_trials: usize,
    pub action_intervals: usize,
}

impl Sizes {
    /// The sizes the acceptance criteria are stated at.
    pub fn full() -> Self {
        Self {
            overlap_pairs: 200,
            roundtrip_angles: 100,
            isotropy_samples: 10_000,
            homogeneity_walks: 1000,
            msd_walks: 200,
            msd_steps: 200,
            step_trials: 10_000,
            step_count: 1000,
            scaling_steps: vec![250, 500, 1000, 2000],
            translation_draws: 10_000,
            born_samples: 100_000,
            born_steps: 100,
            spacing_dim: 200,
            spacing_samples: 200,
            conjugation_trials: 4000,
            action_intervals: 1000,
        }
    }

    /// Smoke-run sizes: same checks, fewer samples.
    pub fn quick() -> Self {
        Self {
            overlap_pairs: 50,
            roundtrip_angles: 25,
            isotropy_samples: 2000,
            homogeneity_walks: 300,
            msd_walks: 50,
            msd_steps: 100,
            step_trials: 2000,
            step_count: 100,
            scaling_steps: vec![25, 50, 100, 200],
            translation_draws: 2000,
            born_samples: 100_000,
            born_steps: 4,
            spacing_dim: 100,
            spacing_samples: 100,
            conjugation_trials: 1000,
            action_intervals: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Suite {
    pub seed: u64,
    pub alpha: f64,
    pub sizes: Sizes,
}

impl Suite {
    pub fn new(seed: u64, alpha: f64, quick: bool) -> Self {
        Self {
            seed,
            alpha,
            sizes: if quick { Sizes::quick() } else { Sizes::full() },
        }
    }
}

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub reports: Vec<TestReport>,
    pub tables: Vec<Table>,
    pub streams: Vec<StreamUse>,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Self {
            id,
            title,
            reports: Vec::new(),
            tables: Vec::new(),
            streams: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect()
    }
}

pub type CheckFn = fn(&Suite) -> Result<Criterion>;

/// All criteria in order.
pub const CHECKS: [(u8, CheckFn); 9] = [
    (1, overlap_identity),
    (2, overlap_spot_values),
    (3, induced_metric),
    (4, isotropy_homogeneity),
    (5, constrained_walk_law),
    (6, translation_consistency),
    (7, born_identity),
    (8, newtonian_limit),
    (9, ensemble_sanity),
];

fn overlap_grid() -> Result<Grid> {
    Grid::new(-20.0, 20.0, 800, 1.0)
}

/// One row of the overlap table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapRow {
    pub sigma: f64,
    pub delta: f64,
    pub separation: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    /// Largest deviation between the 3D closed form and its axis product for
    /// a 3D pair drawn alongside.
    pub axis_product_error: f64,
}

/// Random Gaussian pairs at rest; pair `i` draws from lane `(group, i)`.
pub fn overlap_pairs(grid: &Grid, o: &OverlapSection, seed: u64, group: u64) -> Result<Vec<OverlapRow>> {
    par_trials(seed, group, o.pairs, |_, rng| -> Result<OverlapRow> {
        let mut width = || {
            if o.width_max > o.width_min {
                rng.random_range(o.width_min..o.width_max)
            } else {
                o.width_min
            }
        };
        let sigma = width();
        let delta = width();
        let mut center = || {
            if o.center_range > 0.0 {
                rng.random_range(-o.center_range..o.center_range)
            } else {
                0.0
            }
        };
        let a: Vec<f64> = (0..3).map(|_| center()).collect();
        let b: Vec<f64> = (0..3).map(|_| center()).collect();
        let p1 = GaussianParams::line(a[0], 0.0, sigma)?;
        let p2 = GaussianParams::line(b[0], 0.0, delta)?;
        let closed_form = overlap_closed_form(&p1, &p2)?;
        let quadrature = overlap_quadrature(&gaussian_state(&p1, grid)?, &gaussian_state(&p2, grid)?)?;
        let full = overlap_closed_form(
            &GaussianParams::at_rest(a.clone(), sigma)?,
            &GaussianParams::at_rest(b.clone(), delta)?,
        )?;
        let mut product = 1.0;
        for j in 0..3 {
            product *= overlap_closed_form(&GaussianParams::line(a[j], 0.0, sigma)?, &GaussianParams::line(b[j], 0.0, delta)?)?;
        }
        Ok(OverlapRow {
            sigma,
            delta,
            separation: (a[0] - b[0]).abs(),
            closed_form,
            quadrature,
            axis_product_error: (full - product).abs(),
        })
    })
    .into_iter()
    .collect()
}

pub fn overlap_table(rows: &[OverlapRow]) -> Table {
    let mut t = Table::new(
        "overlaps",
        &["sigma", "delta", "separation", "closed_form", "quadrature", "abs_error"],
    );
    for r in rows {
        t.push([
            r.sigma,
            r.delta,
            r.separation,
            r.closed_form,
            r.quadrature,
            (r.closed_form - r.quadrature).abs(),
        ]);
    }
    t
}

/// Reports on a batch of overlap rows.
pub fn overlap_reports(rows: &[OverlapRow], seed: u64) -> Vec<TestReport> {
    let quad = rows
        .iter()
        .map(|r| (r.closed_form - r.quadrature).abs())
        .fold(0.0, f64::max);
    let axis = rows.iter().map(|r| r.axis_product_error).fold(0.0, f64::max);
    vec![
        TestReport::threshold("overlap_quadrature", quad, 1e-8, quad < 1e-8, rows.len(), seed),
        TestReport::threshold("overlap_axis_product", axis, 1e-14, axis < 1e-14, rows.len(), seed),
    ]
}

pub fn overlap_identity(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(1, "closed-form overlap identity");
    let o = OverlapSection {
        pairs: s.sizes.overlap_pairs,
        ..OverlapSection::default()
    };
    let rows = overlap_pairs(&overlap_grid()?, &o, s.seed, groups::OVERLAP_PAIRS)?;
    c.reports = overlap_reports(&rows, s.seed);
    c.tables.push(overlap_table(&rows));
    c.streams.push(StreamUse::new("overlap pairs", groups::OVERLAP_PAIRS, o.pairs));
    Ok(c)
}

pub fn overlap_spot_values(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(2, "overlap spot value and distance round trip");
    let grid = overlap_grid()?;
    let g0 = gaussian_state(&GaussianParams::line(0.0, 0.0, 1.0)?, &grid)?;
    let g2 = gaussian_state(&GaussianParams::line(2.0, 0.0, 1.0)?, &grid)?;
    let spot = (overlap_quadrature(&g0, &g2)? - (-1.0f64).exp()).abs();
    c.reports
        .push(TestReport::threshold("overlap_spot_value", spot, 1e-8, spot < 1e-8, 1, s.seed));

    let n = s.sizes.roundtrip_angles;
    let rows: Vec<(f64, f64, f64)> = par_trials(s.seed, groups::FS_ROUNDTRIP, n, |_, rng| -> Result<_> {
        let theta = rng.random_range(0.05..1.5);
        let (p0, p1) = realize_fs_distance(theta, 1.0)?;
        let back = fs_distance(&gaussian_state(&p0, &grid)?.state, &gaussian_state(&p1, &grid)?.state);
        Ok((theta, (p1.center[0] - p0.center[0]).abs(), back))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let worst = rows.iter().map(|(t, _, b)| (t - b).abs()).fold(0.0, f64::max);
    c.reports
        .push(TestReport::threshold("fs_distance_roundtrip", worst, 1e-8, worst < 1e-8, n, s.seed));
    let mut t = Table::new("theta_roundtrip", &["theta", "separation", "theta_back", "abs_error"]);
    for (theta, sep, back) in rows {
        t.push([theta, sep, back, (theta - back).abs()]);
    }
    c.tables.push(t);
    c.streams.push(StreamUse::new("round-trip angles", groups::FS_ROUNDTRIP, n));
    Ok(c)
}

pub fn induced_metric(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(3, "induced metric constant");
    let coarse = Grid::new(-20.0, 20.0, 800, 1.0)?;
    let fine = Grid::new(-20.0, 20.0, 1600, 1.0)?;
    let mut t = Table::new("metric", &["sigma", "eps", "ratio", "ratio_refined", "expected"]);
    let (mut worst, mut worst_trunc) = (0.0f64, 0.0f64);
    for sigma in [0.5, 1.0, 2.0] {
        let eps = sigma / 100.0;
        let r1 = induced_metric_ratio(sigma, eps, &coarse)?;
        let r2 = induced_metric_ratio(sigma, eps, &fine)?;
        let expected = 1.0 / (2.0 * sigma);
        worst = worst.max((r1 - expected).abs());
        worst_trunc = worst_trunc.max((r1 - r2).abs());
        t.push([sigma, eps, r1, r2, expected]);
    }
    c.reports
        .push(TestReport::threshold("induced_metric", worst, 1e-4, worst < 1e-4, 3, s.seed));
    c.reports.push(TestReport::threshold(
        "induced_metric_truncation",
        worst_trunc,
        1e-6,
        worst_trunc < 1e-6,
        3,
        s.seed,
    ));
    c.tables.push(t);
    Ok(c)
}

pub fn isotropy_homogeneity(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(4, "step isotropy and homogeneity");
    let (n, dt, hbar) = (64, 0.01, 1.0);
    let phi = State::random(n, &mut split_rng(s.seed, lane_index(groups::INITIAL_STATE, 0)));
    let spec = EnsembleSpec::new(EnsembleKind::Gue, n, 1.0, s.seed)?;
    let count = s.sizes.isotropy_samples;
    let steps = sample_step_vectors(&phi, &spec, dt, hbar, count, s.seed, groups::ISOTROPY_STEPS)?;
    let frame = HorizontalFrame::complete(&phi);
    c.reports.push(isotropy_test(&steps, &frame, Some(dt * dt / (hbar * hbar)), s.alpha, s.seed)?);
    let mut cols = tangent_coordinates(&steps, &frame)?;
    for x in cols[0].iter_mut() {
        *x *= SQRT_2;
    }
    c.reports.push(
        isotropy_test_coordinates(&cols, Some(0.5 * dt * dt), s.alpha, s.seed)?
            .detail("perturbation", "variance of coordinate 0 doubled")
            .into_contrast(),
    );

    let walk = |scale: f64| -> Result<WalkConfig> {
        Ok(WalkConfig {
            dim: n,
            steps: 25,
            dt: 0.02,
            ensemble: EnsembleSpec::new(EnsembleKind::Gue, n, scale, s.seed)?,
            hbar,
            stepper: Stepper::FirstOrder,
            seed: s.seed,
            stride: 25,
        })
    };
    let cfg = walk(1.0)?;
    let walks = s.sizes.homogeneity_walks;
    let basis = State::basis_state(n, 0);
    let da = final_distances(&basis, &cfg, walks, groups::HOMOGENEITY_A)?;
    let db = final_distances(&phi, &cfg, walks, groups::HOMOGENEITY_B)?;
    c.reports.push(homogeneity_test(&da, &cfg, &db, &cfg, s.alpha)?);
    let cfg_fast = walk(2.0)?;
    let dc = final_distances(&basis, &cfg_fast, walks, groups::HOMOGENEITY_CONTRAST)?;
    c.reports.push(
        homogeneity_test(&da, &cfg, &dc, &cfg_fast, s.alpha)?
            .detail("perturbation", "second walk at twice the ensemble scale")
            .into_contrast(),
    );

    let msd_cfg = WalkConfig {
        steps: s.sizes.msd_steps,
        stride: s.sizes.msd_steps,
        ..cfg.clone()
    };
    let trajs = run_walks(&basis, &msd_cfg, s.sizes.msd_walks, groups::MSD_WALKS)?;
    let msd = mean_square_distances(&trajs);
    let per_step = (n - 1) as f64 * (msd_cfg.ensemble.scale * msd_cfg.dt / hbar).powi(2);
    c.reports
        .push(msd_report(&msd, msd_cfg.dt, 0.25, Some(per_step), trajs.len(), s.seed)?);
    c.tables.push(msd_table(&msd, msd_cfg.dt));

    let mut t = Table::new("theta_distances", &["set", "trial", "theta"]);
    for (set, d) in [("basis", &da), ("random", &db), ("contrast", &dc)] {
        for (i, x) in d.iter().enumerate() {
            t.push([set.to_string(), i.to_string(), x.to_string()]);
        }
    }
    c.tables.push(t);
    c.streams.extend([
        StreamUse::new("random initial state", groups::INITIAL_STATE, 1),
        StreamUse::new("isotropy step draws", groups::ISOTROPY_STEPS, count),
        StreamUse::new("homogeneity walks from basis state", groups::HOMOGENEITY_A, walks),
        StreamUse::new("homogeneity walks from random state", groups::HOMOGENEITY_B, walks),
        StreamUse::new("homogeneity contrast walks", groups::HOMOGENEITY_CONTRAST, walks),
        StreamUse::new("mean-square-distance walks", groups::MSD_WALKS, s.sizes.msd_walks),
    ]);
    Ok(c)
}

/// Small-angle fit of the mean square distance. Passes when `R^2 > 0.99`
/// and, if `expected_per_step` is given, the fitted per-step increment is
/// within 10% of it.
pub fn msd_report(
    msd: &[f64],
    dt: f64,
    max_theta2: f64,
    expected_per_step: Option<f64>,
    walks: usize,
    seed: u64,
) -> Result<TestReport> {
    let (fit, used) = small_angle_fit(msd, dt, max_theta2)?;
    let per_step = fit.slope * dt;
    let (rel, passed) = match expected_per_step {
        Some(e) => {
            let rel = (per_step / e - 1.0).abs();
            (rel, rel < 0.10 && fit.r_squared > 0.99)
        }
        None => (0.0, fit.r_squared > 0.99),
    };
    let mut r = TestReport::threshold("msd_small_angle_fit", rel, 0.10, passed, walks, seed)
        .detail("r_squared", fit.r_squared)
        .detail("slope", fit.slope)
        .detail("intercept", fit.intercept)
        .detail("per_step_increment", per_step)
        .detail("points_used", used)
        .detail("max_theta2", max_theta2);
    if let Some(e) = expected_per_step {
        r = r.detail("expected_per_step_increment", e);
    }
    Ok(r)
}

pub fn msd_table(msd: &[f64], dt: f64) -> Table {
    let mut t = Table::new("msd", &["k", "t", "msd"]);
    for (k, m) in msd.iter().enumerate() {
        t.push([k as f64, k as f64 * dt, *m]);
    }
    t
}

/// Table of final displacements, one column per component.
pub fn finals_table(name: &str, sample: &DisplacementSample) -> Table {
    let cols: Vec<String> = (1..=sample.dim()).map(|j| format!("d_{j}")).collect();
    let mut header = vec!["trial"];
    header.extend(cols.iter().map(String::as_str));
    let mut t = Table::new(name, &header);
    for (i, f) in sample.finals.iter().enumerate() {
        t.push(std::iter::once(i.to_string()).chain(f.iter().map(|x| x.to_string())));
    }
    t
}

pub fn constrained_walk_law(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(5, "constrained walk law and diffusive scaling");
    let (dt, v0) = (0.01, 1.0);
    let trials = s.sizes.step_trials;
    let sample = sample_final_displacements(1, s.sizes.step_count, dt, v0, trials, s.seed, groups::GAUSSIAN_STEP)?;
    let gauss = gaussian_step_test(&sample, s.alpha, s.seed)?;
    let ratio = gauss.details["variance_ratio"].as_f64().unwrap_or(f64::NAN);
    let rel = (ratio - 1.0).abs();
    c.reports.push(gauss);
    c.reports.push(
        TestReport::threshold("step_variance", rel, 0.10, rel < 0.10, trials, s.seed)
            .detail("variance_ratio", ratio),
    );

    let scaling: Vec<DisplacementSample> = s
        .sizes
        .scaling_steps
        .iter()
        .enumerate()
        .map(|(i, &n)| sample_final_displacements(1, n, dt, v0, trials, s.seed, groups::BROWNIAN + i as u64))
        .collect::<Result<_>>()?;
    c.reports.push(brownian_scaling_fit(&scaling, s.alpha, s.seed)?);

    // single heavy-tailed step rescaled to the right variance
    let t3 = StudentT::new(3.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let heavy = DisplacementSample {
        finals: par_trials(s.seed, groups::HEAVY_TAILED, trials, |_, rng| {
            vec![v0 * dt * t3.sample(rng) / 3f64.sqrt()]
        }),
        steps: 1,
        dt,
        v0,
    };
    c.reports.push(
        gaussian_step_test(&heavy, s.alpha, s.seed)?
            .detail("perturbation", "Student t(3) steps")
            .into_contrast(),
    );

    // steps sharing a persistent component: xi_k = v0 (rho w + sqrt(1 - rho^2) e_k)
    let rho: f64 = 0.2;
    let persistent: Vec<DisplacementSample> = s
        .sizes
        .scaling_steps
        .iter()
        .enumerate()
        .map(|(i, &n)| DisplacementSample {
            finals: par_trials(s.seed, groups::PERSISTENT + i as u64, trials, |_, rng| {
                let w: f64 = rng.sample(StandardNormal);
                let e: f64 = rng.sample(StandardNormal);
                let nf = n as f64;
                vec![v0 * dt * (rho * w * nf + (1.0 - rho * rho).sqrt() * nf.sqrt() * e)]
            }),
            steps: n,
            dt,
            v0,
        })
        .collect();
    c.reports.push(
        brownian_scaling_fit(&persistent, s.alpha, s.seed)?
            .detail("perturbation", "steps correlated through a shared component")
            .into_contrast(),
    );

    let mut t = Table::new("brownian", &["steps", "t", "variance", "expected"]);
    for smp in &scaling {
        let var = smp.finals.iter().map(|f| f[0] * f[0]).sum::<f64>() / smp.trials() as f64;
        t.push([smp.steps as f64, smp.steps as f64 * dt, var, smp.expected_variance()]);
    }
    c.tables.push(t);
    c.tables.push(finals_table("steps", &sample));
    c.streams.push(StreamUse::new("gaussian step trials", groups::GAUSSIAN_STEP, trials));
    for i in 0..s.sizes.scaling_steps.len() as u64 {
        c.streams
            .push(StreamUse::new("scaling trials", groups::BROWNIAN + i, trials));
        c.streams
            .push(StreamUse::new("persistent-step contrast", groups::PERSISTENT + i, trials));
    }
    c.streams
        .push(StreamUse::new("heavy-tailed contrast", groups::HEAVY_TAILED, trials));
    Ok(c)
}

pub fn translation_consistency(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(6, "ensemble to translation consistency");
    let (sigma, hbar, v) = (1.0, 1.0, 1.0);
    let basis = OscillatorBasis::new(3, sigma, hbar, 2)?;
    let chart = basis.chart()?;
    let draws = s.sizes.translation_draws;
    let spec = EnsembleSpec::new(EnsembleKind::Gue, basis.len(), v, s.seed)?;
    let xi: Vec<Vec<f64>> = par_trials(s.seed, groups::TRANSLATION_GUE, draws, |k, rng| {
        project_onto_translations(&spec.sample(rng, k as u64), &chart)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let cols: Vec<Vec<f64>> = (0..3).map(|j| xi.iter().map(|x| x[j]).collect()).collect();
    let vars: Vec<f64> = cols.iter().map(|c| variance(c)).collect();
    let pooled = mean(&vars);

    let ps: Vec<f64> = cols
        .iter()
        .zip(&vars)
        .map(|(c, v)| normal_two_sided(mean(c) / (v / draws as f64).sqrt()))
        .collect();
    let max_mean = cols.iter().map(|c| mean(c).abs()).fold(0.0, f64::max);
    c.reports.push(
        TestReport::conformance("translation_mean_zero", max_mean, bonferroni(&ps), s.alpha, draws, s.seed)
            .detail("means", cols.iter().map(|c| mean(c)).collect::<Vec<_>>()),
    );
    let aniso = vars.iter().map(|v| (v / pooled - 1.0).abs()).fold(0.0, f64::max);
    c.reports.push(
        TestReport::threshold("translation_isotropy", aniso, 0.05, aniso < 0.05, draws, s.seed)
            .detail("variances", vars.clone())
            .detail("expected_variance", 2.0 * sigma * sigma * v * v / (hbar * hbar)),
    );

    // sums of N consecutive velocities against the constrained walk at the
    // measured variance
    let (n, dt) = (10, 0.1);
    let groups_of_n = draws / n;
    let mut from_xi = Vec::with_capacity(3 * groups_of_n);
    for g in 0..groups_of_n {
        for j in 0..3 {
            from_xi.push(xi[g * n..(g + 1) * n].iter().map(|x| x[j] * dt).sum::<f64>());
        }
    }
    let walk = sample_final_displacements(3, n, dt, pooled.sqrt(), groups_of_n, s.seed, groups::TRANSLATION_WALK)?;
    let from_walk: Vec<f64> = walk.finals.iter().flatten().copied().collect();
    let ks = ks_two_sample(&from_xi, &from_walk);
    c.reports.push(
        TestReport::conformance(
            "translation_walk_consistency",
            ks.statistic,
            ks.p_value,
            s.alpha,
            from_xi.len() + from_walk.len(),
            s.seed,
        )
        .detail("v0_squared", pooled)
        .detail("steps", n)
        .detail("dt", dt),
    );

    let goe = EnsembleSpec::new(EnsembleKind::Goe, basis.len(), v, s.seed)?;
    let goe_draws = (draws / 10).max(100);
    let goe_xi: Vec<Vec<f64>> = par_trials(s.seed, groups::TRANSLATION_GOE, goe_draws, |k, rng| {
        project_onto_translations(&goe.sample(rng, k as u64), &chart)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let max_goe = goe_xi.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    c.reports.push(TestReport::threshold(
        "goe_translation_zero",
        max_goe,
        1e-12,
        max_goe <= 1e-12,
        goe_draws,
        s.seed,
    ));

    let mut t = Table::new("translation_velocities", &["draw", "xi_1", "xi_2", "xi_3"]);
    for (k, x) in xi.iter().enumerate() {
        t.push([k.to_string(), x[0].to_string(), x[1].to_string(), x[2].to_string()]);
    }
    c.tables.push(t);
    c.streams.extend([
        StreamUse::new("GUE draws for translation velocities", groups::TRANSLATION_GUE, draws),
        StreamUse::new("constrained walks at measured variance", groups::TRANSLATION_WALK, groups_of_n),
        StreamUse::new("GOE draws for translation velocities", groups::TRANSLATION_GOE, goe_draws),
    ]);
    Ok(c)
}

fn failed_precondition(name: &str, err: &Error, samples: usize, seed: u64) -> TestReport {
    TestReport::threshold(name, f64::INFINITY, 0.0, false, samples, seed).detail("error", err.to_string())
}

pub fn born_identity(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(7, "transition probability as walk density");
    let (dt, v0) = (0.01, 1.0);
    let steps = s.sizes.born_steps;
    let sw = (steps as f64).sqrt() * dt * v0;
    c.reports.push(born_analytic_check(sw, 1, 401)?);
    let trials = s.sizes.born_samples;
    let sample = sample_final_displacements(1, steps, dt, v0, trials, s.seed, groups::BORN)?;
    let pre = gaussian_step_test(&sample, s.alpha, s.seed)?;
    let xs = sample.component(0);
    let born = born_identity_check(sw, &xs, &pre, s.seed)
        .unwrap_or_else(|e| failed_precondition("born_identity", &e, trials, s.seed));
    let contrast = born_identity_check(1.2 * sw, &xs, &pre, s.seed)
        .map(|r| r.detail("perturbation", "walk width overstated by 20%").into_contrast())
        .unwrap_or_else(|e| failed_precondition("born_identity_contrast", &e, trials, s.seed));

    let mut t = Table::new("born_curve", &["bin_lo", "bin_hi", "empirical", "predicted"]);
    if let (Some(edges), Some(emp), Some(pred)) = (
        born.details.get("bin_edges").and_then(|v| v.as_array()),
        born.details.get("empirical_density").and_then(|v| v.as_array()),
        born.details.get("predicted_density").and_then(|v| v.as_array()),
    ) {
        for i in 0..emp.len() {
            t.push([&edges[i], &edges[i + 1], &emp[i], &pred[i]]);
        }
    }
    c.reports.push(pre);
    c.reports.push(born);
    c.reports.push(contrast);
    c.tables.push(t);
    c.streams.push(StreamUse::new("walk samples", groups::BORN, trials));
    Ok(c)
}

pub fn path_table(path: &PacketPath) -> Table {
    let mut t = Table::new("path", &["t", "x_mean", "p_mean", "energy", "sigma_eff"]);
    for i in 0..path.len() {
        t.push([path.times[i], path.x_mean[i], path.p_mean[i], path.energy[i], path.sigma_eff[i]]);
    }
    t
}

pub fn newtonian_limit(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(8, "Newtonian limit and action reduction");
    let grid = Grid::new(-15.0, 15.0, 1024, 1.0)?;
    let force = 2.0;
    let (mass, dt, steps) = (1.0, 1e-3, 1000);
    let phi0 = wave_packet(&GaussianParams::line(0.0, 0.0, 1.0)?, &grid)?;
    let path = split_step_evolve(&phi0, &PotentialSpec::Linear { force }, mass, dt, steps, steps)?;
    let (rx, rp) = path.newtonian_residuals();
    let worst = rx.max(rp);
    c.reports.push(
        TestReport::threshold("newtonian_limit", worst, 1e-6, worst < 1e-6, path.len(), s.seed)
            .detail("position_residual", rx)
            .detail("momentum_residual", rp)
            .detail("energy_drift", path.energy_drift()),
    );

    let (sigma, k) = (0.1, 1.0);
    let pot = PotentialSpec::Harmonic { k };
    let small = Grid::new(-3.0, 3.0, 600, 1.0)?;
    let n = s.sizes.action_intervals;
    let (start, end) = ((0.0, 0.0), (0.5, 0.3));
    let diffs: Vec<f64> = [0.0, 0.15, -0.25]
        .iter()
        .map(|&amp| {
            let (times, a, p) = shared_endpoint_path(n, 1.0, start, end, amp);
            action_difference(&small, sigma, &pot, mass, &times, &a, &p)
        })
        .collect::<Result<_>>()?;
    let spread = diffs.iter().copied().fold(f64::MIN, f64::max) - diffs.iter().copied().fold(f64::MAX, f64::min);
    let boundary = end.0 * end.1 - start.0 * start.1;
    let expected = -boundary - (kinetic_offset(sigma, mass, 1.0, 1) + 0.5 * k * sigma * sigma);
    c.reports.push(
        TestReport::threshold("action_path_independence", spread, 1e-4, spread < 1e-4, diffs.len(), s.seed)
            .detail("differences", diffs)
            .detail("expected_difference", expected),
    );

    let shifted = wave_packet(&GaussianParams::line(-1.0, 0.5, 1.0)?, &grid)?;
    let fs = accelerated_frame_distance(&shifted, force, mass, dt, steps)?;
    c.reports
        .push(TestReport::threshold("accelerated_frame", fs, 1e-6, fs < 1e-6, 1, s.seed));
    c.tables.push(path_table(&path));
    Ok(c)
}

/// Reference spacing-ratio means at large dimension.
pub fn spacing_oracle(kind: EnsembleKind) -> f64 {
    match kind {
        EnsembleKind::Gue => 0.600,
        EnsembleKind::Goe => 0.536,
        EnsembleKind::Poisson => 0.386,
    }
}

/// Threshold report of the mean spacing ratio against [`spacing_oracle`].
pub fn spacing_report(kind: EnsembleKind, dim: usize, ratios: &[Vec<f64>], seed: u64) -> TestReport {
    let all: Vec<f64> = ratios.iter().flatten().copied().collect();
    let m = mean(&all);
    let oracle = spacing_oracle(kind);
    let dev = (m - oracle).abs();
    TestReport::threshold(&format!("spacing_ratio_{kind}"), dev, 0.01, dev < 0.01, ratios.len(), seed)
        .detail("mean_ratio", m)
        .detail("oracle", oracle)
        .detail("dim", dim)
        .detail("ratios", all.len())
}

/// Spacing ratios of `count` samples; sample `k` on lane `(group, k)`.
pub fn spacing_ratio_report(spec: &EnsembleSpec, count: usize, group: u64, seed: u64) -> Result<(TestReport, Vec<Vec<f64>>)> {
    let samples = par_trials(seed, group, count, |k, rng| spec.sample(rng, k as u64));
    let ratios = spacing_ratio_samples(&samples)?;
    Ok((spacing_report(spec.kind, spec.dim, &ratios, seed), ratios))
}

pub fn conjugation_report(kind: EnsembleKind, dim: usize, trials: usize, alpha: f64, seed: u64, haar_group: u64) -> Result<TestReport> {
    let spec = EnsembleSpec::new(kind, dim, 1.0, seed)?;
    let u = haar_unitary(dim, &mut split_rng(seed, lane_index(haar_group, 0)));
    let r = conjugation_invariance_check(&spec, &u, trials, alpha)?;
    Ok(TestReport {
        name: format!("conjugation_invariance_{kind}"),
        ..r
    })
}

pub fn ensemble_sanity(s: &Suite) -> Result<Criterion> {
    let mut c = Criterion::new(9, "ensemble sanity");
    let mut t = Table::new("spacing_ratios", &["ensemble", "sample", "ratio"]);
    for (kind, group) in [
        (EnsembleKind::Gue, groups::SPACING_GUE),
        (EnsembleKind::Goe, groups::SPACING_GOE),
        (EnsembleKind::Poisson, groups::SPACING_POISSON),
    ] {
        let spec = EnsembleSpec::new(kind, s.sizes.spacing_dim, 1.0, s.seed)?;
        let (report, ratios) = spacing_ratio_report(&spec, s.sizes.spacing_samples, group, s.seed)?;
        c.reports.push(report);
        for (k, rs) in ratios.iter().enumerate() {
            for r in rs {
                t.push([kind.to_string(), k.to_string(), r.to_string()]);
            }
        }
        c.streams
            .push(StreamUse::new(format!("{kind} spacing samples"), group, s.sizes.spacing_samples));
    }
    let trials = s.sizes.conjugation_trials;
    c.reports
        .push(conjugation_report(EnsembleKind::Gue, 8, trials, s.alpha, s.seed, groups::HAAR_GUE)?);
    c.reports.push(
        conjugation_report(EnsembleKind::Goe, 8, trials, s.alpha, s.seed, groups::HAAR_GOE)?
            .detail("perturbation", "real symmetric ensemble under complex unitaries")
            .into_contrast(),
    );
    c.tables.push(t);
    c.streams.extend([
        StreamUse::new("Haar unitary for GUE conjugation", groups::HAAR_GUE, 1),
        StreamUse::new("Haar unitary for GOE conjugation", groups::HAAR_GOE, 1),
        StreamUse::new("conjugation batches (lanes 0 and 1)", groups::CONJUGATION, 2),
    ]);
    Ok(c)
}
