//! Command-line runner for statewalk experiments.
//!
//! [`execute`] runs one experiment from a config file and writes its tables,
//! reports and run manifest. The binary maps the outcome to exit codes
//! through [`RunError::exit_code`] and [`Outcome::exit_code`].

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use serde_json::json;

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::output::{OutputDir, RunManifest, SeedLineage};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TEST_FAILURE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] statewalk_core::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Command-line overrides on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub output_dir: PathBuf,
    pub passed: bool,
    pub failures: Vec<String>,
    pub reports: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_TEST_FAILURE
        }
    }
}

/// Applies `overrides` to `cfg`. `--trials` sets the primary trial count of
/// the experiment; `classical-limit` and `verify-all` have none.
pub fn apply_overrides(experiment: Experiment, cfg: &mut ExperimentConfig, o: &Overrides) -> Result<(), ConfigError> {
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &o.out {
        cfg.output_dir = out.clone();
    }
    if let Some(n) = o.trials {
        match experiment {
            Experiment::GaussianOverlap => cfg.gaussian_overlap.pairs = n,
            Experiment::SampleGue | Experiment::SampleGoe => cfg.ensemble.samples = n,
            Experiment::Walk => cfg.walk.trials = n,
            Experiment::ConstrainedWalk => cfg.constrained.trials = n,
            Experiment::DriftWalk => cfg.drift.trials = n,
            Experiment::ClassicalLimit | Experiment::VerifyAll => {}
        }
    }
    cfg.experiment = Some(experiment);
    cfg.validate().map_err(|e| match e {
        ConfigError::Invalid { message, .. } => ConfigError::Invalid {
            path: "command line".into(),
            line: 1,
            message,
        },
        other => other,
    })
}

/// Loads the config, runs `experiment` and writes all outputs.
pub fn execute(
    experiment: Experiment,
    config_path: &std::path::Path,
    overrides: &Overrides,
    progress: &mut dyn FnMut(&str),
) -> Result<Outcome, RunError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(named) = cfg.experiment {
        if named != experiment {
            let text = std::fs::read_to_string(config_path).unwrap_or_default();
            let line = text
                .lines()
                .position(|l| l.trim_start().starts_with("experiment"))
                .map(|i| i + 1)
                .unwrap_or(1);
            return Err(ConfigError::Invalid {
                path: config_path.display().to_string(),
                line,
                message: format!("experiment: config is for {named}, command line asks for {experiment}"),
            }
            .into());
        }
    }
    apply_overrides(experiment, &mut cfg, overrides)?;
    run_config(experiment, &cfg, progress)
}

/// Runs an already validated config.
pub fn run_config(
    experiment: Experiment,
    cfg: &ExperimentConfig,
    progress: &mut dyn FnMut(&str),
) -> Result<Outcome, RunError> {
    let started = chrono::Utc::now();
    let result = experiments::run(experiment, cfg, progress)?;

    let mut dir = OutputDir::create(&cfg.output_dir)?;
    for t in &result.tables {
        dir.write_table(t)?;
    }
    for (name, doc) in &result.documents {
        dir.write_json(name, doc)?;
    }
    dir.write_json(
        "reports.json",
        &json!({ "experiment": experiment.name(), "seed": cfg.seed, "reports": result.reports }),
    )?;

    let passed = result.passed();
    let outcome = Outcome {
        output_dir: cfg.output_dir.clone(),
        passed,
        failures: result
            .reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name.clone())
            .collect(),
        reports: result.reports.len(),
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: experiment.name().to_string(),
        config: serde_json::to_value(cfg).map_err(std::io::Error::other)?,
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        seed_lineage: SeedLineage::new(cfg.seed, result.streams),
        outputs: dir.records().to_vec(),
        exit_code: outcome.exit_code(),
    };
    dir.write_manifest(&manifest)?;
    Ok(outcome)
}
