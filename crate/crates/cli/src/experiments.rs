//! The experiments behind each subcommand.

use rayon::prelude::*;
use serde_json::{json, Value};
use statewalk_core::classical::{accelerated_frame_distance, split_step_evolve, PotentialSpec};
use statewalk_core::gaussian::{wave_packet, GaussianParams};
use statewalk_core::grid::Grid;
use statewalk_core::hilbert::{State, C64};
use statewalk_core::rmt::{spacing_ratios, EnsembleKind, EnsembleSpec};
use statewalk_core::rng::{lane_index, split_rng};
use statewalk_core::stats::claims::{
    born_identity_check, brownian_scaling_fit, gaussian_step_test, homogeneity_test, isotropy_test,
    MIN_BORN_SAMPLES,
};
use statewalk_core::stats::TestReport;
use statewalk_core::hilbert::HorizontalFrame;
use statewalk_core::walk::{
    constrained_walk, final_distances, mean_square_distances, par_trials, run_walks, sample_final_displacements,
    sample_step_vectors, walk_with_drift, Drift, WalkConfig,
};
use statewalk_core::Result;

use crate::checks::{
    self, conjugation_report, finals_table, msd_report, msd_table, overlap_pairs, overlap_reports, overlap_table,
    path_table, spacing_report, Criterion, Suite,
};
use crate::config::{Experiment, ExperimentConfig, InitialState};
use crate::output::{StreamUse, Table};

/// Stream groups of the single experiments (the suite uses [`checks::groups`]).
pub mod groups {
    pub const OVERLAP_PAIRS: u64 = 1001;
    pub const SPACING: u64 = 1101;
    pub const HAAR: u64 = 1102;
    pub const INITIAL_STATE: u64 = 1200;
    pub const WALKS: u64 = 1201;
    pub const ISOTROPY_STEPS: u64 = 1202;
    pub const HOMOGENEITY_A: u64 = 1203;
    pub const HOMOGENEITY_B: u64 = 1204;
    pub const CONSTRAINED_FINALS: u64 = 1301;
    pub const CONSTRAINED_PATHS: u64 = 1302;
    /// Plus the index of the step count.
    pub const CONSTRAINED_SCALING: u64 = 1310;
    pub const DRIFT_WALKS: u64 = 1401;
}

/// Everything an experiment produces before it is written out.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub reports: Vec<TestReport>,
    pub tables: Vec<Table>,
    /// Extra JSON documents by file name.
    pub documents: Vec<(String, Value)>,
    pub streams: Vec<StreamUse>,
    /// Per-criterion results of `verify-all`.
    pub criteria: Vec<Criterion>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }
}

/// Progress callback: receives one line per completed stage.
pub type Progress<'a> = &'a mut dyn FnMut(&str);

pub fn run(experiment: Experiment, cfg: &ExperimentConfig, progress: Progress<'_>) -> Result<RunOutput> {
    match experiment {
        Experiment::GaussianOverlap => gaussian_overlap(cfg),
        Experiment::SampleGue => sample_ensemble(cfg, EnsembleKind::Gue),
        Experiment::SampleGoe => sample_ensemble(cfg, EnsembleKind::Goe),
        Experiment::Walk => walk(cfg),
        Experiment::ConstrainedWalk => constrained(cfg),
        Experiment::DriftWalk => drift(cfg),
        Experiment::ClassicalLimit => classical(cfg),
        Experiment::VerifyAll => verify_all(cfg, progress),
    }
}

fn grid(cfg: &ExperimentConfig) -> Result<Grid> {
    Grid::new(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.points, cfg.grid.hbar)
}

fn gaussian_overlap(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let o = &cfg.gaussian_overlap;
    let rows = overlap_pairs(&grid(cfg)?, o, cfg.seed, groups::OVERLAP_PAIRS)?;
    Ok(RunOutput {
        reports: overlap_reports(&rows, cfg.seed),
        tables: vec![overlap_table(&rows)],
        streams: vec![StreamUse::new("overlap pairs", groups::OVERLAP_PAIRS, o.pairs)],
        ..RunOutput::default()
    })
}

fn sample_ensemble(cfg: &ExperimentConfig, kind: EnsembleKind) -> Result<RunOutput> {
    let e = &cfg.ensemble;
    let spec = EnsembleSpec::new(kind, e.dim, e.scale, cfg.seed)?;
    let samples = par_trials(cfg.seed, groups::SPACING, e.samples, |k, rng| spec.sample(rng, k as u64));
    let levels: Vec<Vec<f64>> = samples.par_iter().map(|s| s.eigenvalues()).collect::<Result<_>>()?;
    let ratios: Vec<Vec<f64>> = levels.iter().map(|l| spacing_ratios(l)).collect();

    let mut eig = Table::new("eigenvalues", &["sample", "index", "eigenvalue"]);
    let mut rat = Table::new("spacing_ratios", &["sample", "index", "ratio"]);
    for (k, (l, r)) in levels.iter().zip(&ratios).enumerate() {
        for (i, x) in l.iter().enumerate() {
            eig.push([k.to_string(), i.to_string(), x.to_string()]);
        }
        for (i, x) in r.iter().enumerate() {
            rat.push([k.to_string(), i.to_string(), x.to_string()]);
        }
    }
    let mut reports = vec![spacing_report(kind, e.dim, &ratios, cfg.seed)];
    let conj = conjugation_report(kind, e.conjugation_dim, e.conjugation_trials, cfg.alpha, cfg.seed, groups::HAAR)?;
    // real symmetric matrices are not invariant under complex unitaries
    reports.push(match kind {
        EnsembleKind::Goe => conj
            .detail("perturbation", "real symmetric ensemble under complex unitaries")
            .into_contrast(),
        _ => conj,
    });
    Ok(RunOutput {
        reports,
        tables: vec![rat, eig],
        streams: vec![
            StreamUse::new(format!("{kind} samples"), groups::SPACING, e.samples),
            StreamUse::new("Haar unitary", groups::HAAR, 1),
            StreamUse::new("conjugation batches (lanes 0 and 1)", checks::groups::CONJUGATION, 2),
        ],
        ..RunOutput::default()
    })
}

fn walk_config(cfg: &ExperimentConfig, steps: usize) -> Result<WalkConfig> {
    let w = &cfg.walk;
    Ok(WalkConfig {
        dim: w.dim,
        steps,
        dt: w.dt,
        ensemble: EnsembleSpec::new(w.ensemble, w.dim, w.scale, cfg.seed)?,
        hbar: w.hbar,
        stepper: w.stepper,
        seed: cfg.seed,
        // only the final state is kept; distances are recorded every step
        stride: steps,
    })
}

fn walk(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let w = &cfg.walk;
    let random = State::random(w.dim, &mut split_rng(cfg.seed, lane_index(groups::INITIAL_STATE, 0)));
    let basis = State::basis_state(w.dim, 0);
    let phi0 = match w.initial {
        InitialState::Basis => basis.clone(),
        InitialState::Random => random.clone(),
    };
    let wc = walk_config(cfg, w.steps)?;
    let trajs = run_walks(&phi0, &wc, w.trials, groups::WALKS)?;
    let msd = mean_square_distances(&trajs);

    let mut traj = Table::new("trajectory", &["trial", "k", "t", "theta"]);
    for (i, tr) in trajs.iter().enumerate() {
        for (k, theta) in tr.fs_distances.iter().enumerate() {
            if k % cfg.stride == 0 || k == w.steps {
                traj.push([i.to_string(), k.to_string(), (k as f64 * w.dt).to_string(), theta.to_string()]);
            }
        }
    }

    let gue = w.ensemble == EnsembleKind::Gue;
    let per_step = gue.then(|| (w.dim - 1) as f64 * (w.scale * w.dt / w.hbar).powi(2));
    let mut reports = vec![msd_report(&msd, w.dt, w.msd_max_theta2, per_step, w.trials, cfg.seed)?];

    let steps = sample_step_vectors(
        &phi0,
        &wc.ensemble,
        w.dt,
        w.hbar,
        w.isotropy_samples,
        cfg.seed,
        groups::ISOTROPY_STEPS,
    )?;
    let expected = gue.then(|| (w.scale * w.dt / w.hbar).powi(2));
    reports.push(isotropy_test(&steps, &HorizontalFrame::complete(&phi0), expected, cfg.alpha, cfg.seed)?);

    let hc = walk_config(cfg, w.homogeneity_steps)?;
    let da = final_distances(&basis, &hc, w.homogeneity_walks, groups::HOMOGENEITY_A)?;
    let db = final_distances(&random, &hc, w.homogeneity_walks, groups::HOMOGENEITY_B)?;
    reports.push(homogeneity_test(&da, &hc, &db, &hc, cfg.alpha)?);
    let mut dist = Table::new("theta_distances", &["set", "trial", "theta"]);
    for (set, d) in [("basis", &da), ("random", &db)] {
        for (i, x) in d.iter().enumerate() {
            dist.push([set.to_string(), i.to_string(), x.to_string()]);
        }
    }

    Ok(RunOutput {
        reports,
        tables: vec![traj, msd_table(&msd, w.dt), dist],
        streams: vec![
            StreamUse::new("random initial state", groups::INITIAL_STATE, 1),
            StreamUse::new("walks", groups::WALKS, w.trials),
            StreamUse::new("isotropy step draws", groups::ISOTROPY_STEPS, w.isotropy_samples),
            StreamUse::new("homogeneity walks from basis state", groups::HOMOGENEITY_A, w.homogeneity_walks),
            StreamUse::new("homogeneity walks from random state", groups::HOMOGENEITY_B, w.homogeneity_walks),
        ],
        ..RunOutput::default()
    })
}

fn constrained(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let c = &cfg.constrained;
    let sample = sample_final_displacements(c.dim, c.steps, c.dt, c.v0, c.trials, cfg.seed, groups::CONSTRAINED_FINALS)?;
    let gauss = gaussian_step_test(&sample, cfg.alpha, cfg.seed)?;

    let scaling: Vec<_> = c
        .scaling_steps
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            sample_final_displacements(c.dim, n, c.dt, c.v0, c.trials, cfg.seed, groups::CONSTRAINED_SCALING + i as u64)
        })
        .collect::<Result<_>>()?;
    let mut reports = vec![gauss.clone(), brownian_scaling_fit(&scaling, cfg.alpha, cfg.seed)?];
    if c.dim == 1 && c.trials >= MIN_BORN_SAMPLES && c.v0 > 0.0 {
        let s = sample.expected_variance().sqrt();
        reports.push(born_identity_check(s, &sample.component(0), &gauss, cfg.seed).unwrap_or_else(|e| {
            TestReport::threshold("born_identity", f64::INFINITY, 0.0, false, c.trials, cfg.seed)
                .detail("error", e.to_string())
        }));
    }

    let record = c.record_trials.min(c.trials);
    let paths = par_trials(cfg.seed, groups::CONSTRAINED_PATHS, record, |_, rng| {
        constrained_walk(c.dim, c.steps, c.dt, c.v0, rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["trial".to_string(), "k".into(), "t".into()];
    header.extend((1..=c.dim).map(|j| format!("d_{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut traj = Table::new("trajectory", &header);
    for (i, p) in paths.iter().enumerate() {
        let origin = vec![0.0; c.dim];
        for (k, d) in std::iter::once(&origin).chain(&p.displacements).enumerate() {
            if k % cfg.stride == 0 || k == c.steps {
                traj.push(
                    [i.to_string(), k.to_string(), (k as f64 * c.dt).to_string()]
                        .into_iter()
                        .chain(d.iter().map(|x| x.to_string())),
                );
            }
        }
    }

    let mut scale_t = Table::new("brownian", &["steps", "t", "variance", "expected"]);
    for s in &scaling {
        let var = s.finals.iter().flatten().map(|x| x * x).sum::<f64>() / (s.trials() * s.dim()) as f64;
        scale_t.push([s.steps as f64, s.steps as f64 * c.dt, var, s.expected_variance()]);
    }

    let mut streams = vec![
        StreamUse::new("final displacements", groups::CONSTRAINED_FINALS, c.trials),
        StreamUse::new("recorded paths", groups::CONSTRAINED_PATHS, record),
    ];
    for i in 0..c.scaling_steps.len() as u64 {
        streams.push(StreamUse::new("scaling trials", groups::CONSTRAINED_SCALING + i, c.trials));
    }
    Ok(RunOutput {
        reports,
        tables: vec![finals_table("finals", &sample), traj, scale_t],
        streams,
        ..RunOutput::default()
    })
}

fn drift(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let d = &cfg.drift;
    let phi0 = State::basis_state(d.dim, 0);
    let targets: Vec<State> = d
        .target_thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut v = vec![C64::new(0.0, 0.0); d.dim];
            v[0] = theta.cos().into();
            v[i + 1] = theta.sin().into();
            State::new(v, phi0.basis())
        })
        .collect::<Result<_>>()?;
    let wc = WalkConfig {
        dim: d.dim,
        steps: d.steps,
        dt: d.dt,
        ensemble: EnsembleSpec::new(EnsembleKind::Gue, d.dim, d.scale, cfg.seed)?,
        hbar: 1.0,
        stepper: d.stepper,
        seed: cfg.seed,
        stride: d.steps,
    };
    let drift = Drift {
        kappa: d.kappa,
        capture_radius: d.capture_radius,
        noise: d.noise,
    };
    let runs = par_trials(cfg.seed, groups::DRIFT_WALKS, d.trials, |_, rng| {
        walk_with_drift(&phi0, &targets, &drift, &wc, rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut outcomes = Table::new("outcomes", &["trial", "target", "steps", "final_target_distance"]);
    let mut traj = Table::new("trajectory", &["trial", "k", "t", "theta"]);
    let mut counts = vec![0usize; targets.len()];
    for (i, r) in runs.iter().enumerate() {
        let steps = r.target_distances.len() - 1;
        outcomes.push([
            i.to_string(),
            r.outcome.map(|o| o.to_string()).unwrap_or_else(|| "none".into()),
            steps.to_string(),
            r.target_distances[steps].to_string(),
        ]);
        if let Some(o) = r.outcome {
            counts[o] += 1;
        }
        if i < d.record_trials {
            for (k, theta) in r.trajectory.fs_distances.iter().enumerate() {
                if k % cfg.stride == 0 || k == steps {
                    traj.push([i.to_string(), k.to_string(), (k as f64 * d.dt).to_string(), theta.to_string()]);
                }
            }
        }
    }
    // closer targets must be captured at least as often as farther ones
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| d.target_thetas[a].total_cmp(&d.target_thetas[b]));
    let violations = order.windows(2).filter(|w| counts[w[0]] < counts[w[1]]).count();
    let captured: usize = counts.iter().sum();
    let report = TestReport::threshold(
        "drift_capture_ordering",
        violations as f64,
        0.0,
        violations == 0 && captured > 0,
        d.trials,
        cfg.seed,
    )
    .detail("captures", counts.clone())
    .detail("target_thetas", d.target_thetas.clone())
    .detail("uncaptured", d.trials - captured);

    Ok(RunOutput {
        reports: vec![report],
        tables: vec![outcomes, traj],
        streams: vec![StreamUse::new("drift walks", groups::DRIFT_WALKS, d.trials)],
        ..RunOutput::default()
    })
}

fn classical(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let k = &cfg.classical;
    let g = grid(cfg)?;
    let phi0 = wave_packet(&GaussianParams::line(k.center, k.momentum, k.sigma)?, &g)?;
    let path = split_step_evolve(&phi0, &k.potential, k.mass, k.dt, k.steps, k.steps)?;
    let (rx, rp) = path.newtonian_residuals();
    let worst = rx.max(rp);
    let t_end = k.steps as f64 * k.dt;
    let (x_n, p_n) = k.potential.newtonian(k.mass, k.center, k.momentum, t_end);
    let mut reports = vec![TestReport::threshold(
        "newtonian_limit",
        worst,
        1e-6,
        worst < 1e-6,
        path.len(),
        cfg.seed,
    )
    .detail("position_residual", rx)
    .detail("momentum_residual", rp)];
    let mut comparison = json!({
        "potential": k.potential,
        "mass": k.mass,
        "sigma": k.sigma,
        "dt": k.dt,
        "steps": k.steps,
        "position_residual": rx,
        "momentum_residual": rp,
        "energy_drift": path.energy_drift(),
        "final": {
            "t": t_end,
            "x_mean": path.x_mean[path.len() - 1],
            "p_mean": path.p_mean[path.len() - 1],
            "x_newtonian": x_n,
            "p_newtonian": p_n,
        },
    });
    if let PotentialSpec::Linear { force } = k.potential {
        let fs = accelerated_frame_distance(&phi0, force, k.mass, k.dt, k.steps)?;
        comparison["accelerated_frame_distance"] = json!(fs);
        reports.push(TestReport::threshold("accelerated_frame", fs, 1e-6, fs < 1e-6, 1, cfg.seed));
    }
    let mut table = path_table(&path);
    if cfg.stride > 1 {
        let last = table.rows.len() - 1;
        table.rows = table
            .rows
            .into_iter()
            .enumerate()
            .filter(|(i, _)| i % cfg.stride == 0 || *i == last)
            .map(|(_, r)| r)
            .collect();
    }
    Ok(RunOutput {
        reports,
        tables: vec![table],
        documents: vec![("comparison.json".into(), comparison)],
        ..RunOutput::default()
    })
}

fn verify_all(cfg: &ExperimentConfig, progress: Progress<'_>) -> Result<RunOutput> {
    let suite = Suite::new(cfg.seed, cfg.alpha, cfg.verify.quick);
    let mut out = RunOutput::default();
    for (id, check) in checks::CHECKS {
        let c = check(&suite)?;
        progress(&format!(
            "criterion {id} ({}): {}",
            c.title,
            if c.passed() { "pass" } else { "FAIL" }
        ));
        out.reports.extend(c.reports.iter().cloned());
        out.tables.extend(c.tables.iter().cloned());
        out.streams.extend(c.streams.iter().cloned());
        out.criteria.push(c);
    }
    let criteria: Vec<Value> = out
        .criteria
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "title": c.title,
                "passed": c.passed(),
                "failures": c.failures(),
                "reports": c.reports,
            })
        })
        .collect();
    out.documents.push((
        "summary.json".into(),
        json!({
            "seed": cfg.seed,
            "alpha": cfg.alpha,
            "quick": cfg.verify.quick,
            "sizes": suite.sizes,
            "passed": out.passed(),
            "criteria": criteria,
        }),
    ));
    Ok(out)
}
