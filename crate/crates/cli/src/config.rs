//! Experiment configuration: a TOML document with one section per module.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Unknown keys are rejected, and every error carries the line it refers to.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statewalk_core::classical::PotentialSpec;
use statewalk_core::rmt::EnsembleKind;
use statewalk_core::walk::{Stepper, FIRST_ORDER_BOUND};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GaussianOverlap,
    SampleGue,
    SampleGoe,
    Walk,
    ConstrainedWalk,
    DriftWalk,
    ClassicalLimit,
    VerifyAll,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::GaussianOverlap => "gaussian-overlap",
            Experiment::SampleGue => "sample-gue",
            Experiment::SampleGoe => "sample-goe",
            Experiment::Walk => "walk",
            Experiment::ConstrainedWalk => "constrained-walk",
            Experiment::DriftWalk => "drift-walk",
            Experiment::ClassicalLimit => "classical-limit",
            Experiment::VerifyAll => "verify-all",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// First basis vector.
    Basis,
    /// Haar-random state from the run seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment to run when none is given on the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Significance level of every conformance test.
    pub alpha: f64,
    /// Snapshot stride of recorded trajectories.
    pub stride: usize,
    pub grid: GridSection,
    pub gaussian_overlap: OverlapSection,
    pub ensemble: EnsembleSection,
    pub walk: WalkSection,
    pub constrained: ConstrainedSection,
    pub drift: DriftSection,
    pub classical: ClassicalSection,
    pub verify: VerifySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 20_240_917,
            output_dir: PathBuf::from("out"),
            alpha: 0.01,
            stride: 1,
            grid: GridSection::default(),
            gaussian_overlap: OverlapSection::default(),
            ensemble: EnsembleSection::default(),
            walk: WalkSection::default(),
            constrained: ConstrainedSection::default(),
            drift: DriftSection::default(),
            classical: ClassicalSection::default(),
            verify: VerifySection::default(),
        }
    }
}

/// Periodic position grid shared by the overlap and classical experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub hbar: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_min: -20.0,
            x_max: 20.0,
            points: 800,
            hbar: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapSection {
    /// Random pairs with widths in `[width_min, width_max]` and centers in
    /// `[-center_range, center_range]`.
    pub pairs: usize,
    pub width_min: f64,
    pub width_max: f64,
    pub center_range: f64,
}

impl Default for OverlapSection {
    fn default() -> Self {
        Self {
            pairs: 200,
            width_min: 0.5,
            width_max: 2.0,
            center_range: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub dim: usize,
    pub scale: f64,
    /// Matrices drawn for the spacing-ratio statistic.
    pub samples: usize,
    /// Dimension and trials of the conjugation-invariance check.
    pub conjugation_dim: usize,
    pub conjugation_trials: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            dim: 200,
            scale: 1.0,
            samples: 200,
            conjugation_dim: 8,
            conjugation_trials: 4000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub dim: usize,
    pub steps: usize,
    pub dt: f64,
    pub hbar: f64,
    pub scale: f64,
    pub ensemble: EnsembleKind,
    pub stepper: Stepper,
    pub initial: InitialState,
    pub trials: usize,
    /// Upper end of the small-angle window of the mean-square-distance fit.
    pub msd_max_theta2: f64,
    pub isotropy_samples: usize,
    pub homogeneity_walks: usize,
    pub homogeneity_steps: usize,
}

impl Default for WalkSection {
    fn default() -> Self {
        Self {
            dim: 64,
            steps: 1000,
            dt: 0.02,
            hbar: 1.0,
            scale: 1.0,
            ensemble: EnsembleKind::Gue,
            stepper: Stepper::FirstOrder,
            initial: InitialState::Basis,
            trials: 200,
            msd_max_theta2: 0.25,
            isotropy_samples: 10_000,
            homogeneity_walks: 1000,
            homogeneity_steps: 25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstrainedSection {
    pub dim: usize,
    pub steps: usize,
    pub dt: f64,
    pub v0: f64,
    pub trials: usize,
    /// Trials whose full path is written to the trajectory file.
    pub record_trials: usize,
    /// Step counts of the diffusion-scaling fit.
    pub scaling_steps: Vec<usize>,
}

impl Default for ConstrainedSection {
    fn default() -> Self {
        Self {
            dim: 1,
            steps: 1000,
            dt: 0.01,
            v0: 1.0,
            trials: 10_000,
            record_trials: 10,
            scaling_steps: vec![250, 500, 1000, 2000],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSection {
    pub dim: usize,
    /// Distance from the initial state of each target; one target per entry.
    pub target_thetas: Vec<f64>,
    pub kappa: f64,
    pub capture_radius: f64,
    pub noise: bool,
    pub steps: usize,
    pub dt: f64,
    pub scale: f64,
    pub stepper: Stepper,
    pub trials: usize,
    pub record_trials: usize,
}

impl Default for DriftSection {
    fn default() -> Self {
        Self {
            dim: 3,
            target_thetas: vec![0.4, 0.9],
            kappa: 1.0,
            capture_radius: 0.1,
            noise: true,
            steps: 400,
            dt: 0.05,
            scale: 1.0,
            stepper: Stepper::ExactEigen,
            trials: 1000,
            record_trials: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalSection {
    pub sigma: f64,
    pub mass: f64,
    pub center: f64,
    pub momentum: f64,
    pub dt: f64,
    pub steps: usize,
    pub potential: PotentialSpec,
}

impl Default for ClassicalSection {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            mass: 1.0,
            center: 0.0,
            momentum: 0.0,
            dt: 1e-3,
            steps: 1000,
            potential: PotentialSpec::Linear { force: 2.0 },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Reduced sample sizes for smoke runs. Statistical tolerances are not
    /// guaranteed at quick sizes.
    pub quick: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Invalid { path: String, line: usize, message: String },
}

/// A validation failure before it is anchored to a line.
struct Violation {
    section: Option<&'static str>,
    key: &'static str,
    message: String,
}

fn violation(section: Option<&'static str>, key: &'static str, message: impl Into<String>) -> Violation {
    Violation {
        section,
        key,
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates `text`; `origin` names the source in messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Invalid {
            path: origin.to_string(),
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate_against(text, origin)?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validates semantic constraints without source text (line 1 is
    /// reported).
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_against("", "<config>")
    }

    fn validate_against(&self, text: &str, origin: &str) -> Result<(), ConfigError> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(ConfigError::Invalid {
                path: origin.to_string(),
                line: locate(text, v.section, v.key),
                message: match v.section {
                    Some(s) => format!("{s}.{}: {}", v.key, v.message),
                    None => format!("{}: {}", v.key, v.message),
                },
            }),
        }
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let pos = |out: &mut Vec<Violation>, s: &'static str, k: &'static str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                out.push(violation(Some(s), k, format!("must be a positive finite number, got {x}")));
            }
        };
        let at_least = |out: &mut Vec<Violation>, s: Option<&'static str>, k: &'static str, x: usize, min: usize| {
            if x < min {
                out.push(violation(s, k, format!("must be >= {min}, got {x}")));
            }
        };

        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            out.push(violation(None, "alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        at_least(&mut out, None, "stride", self.stride, 1);

        let g = &self.grid;
        if !(g.x_max > g.x_min) {
            out.push(violation(Some("grid"), "x_max", "must exceed x_min"));
        }
        at_least(&mut out, Some("grid"), "points", g.points, 16);
        pos(&mut out, "grid", "hbar", g.hbar);

        let o = &self.gaussian_overlap;
        at_least(&mut out, Some("gaussian_overlap"), "pairs", o.pairs, 1);
        pos(&mut out, "gaussian_overlap", "width_min", o.width_min);
        if !(o.width_max >= o.width_min) {
            out.push(violation(Some("gaussian_overlap"), "width_max", "must be >= width_min"));
        }
        if !(o.center_range >= 0.0) {
            out.push(violation(Some("gaussian_overlap"), "center_range", "must be >= 0"));
        }

        let e = &self.ensemble;
        at_least(&mut out, Some("ensemble"), "dim", e.dim, 100);
        pos(&mut out, "ensemble", "scale", e.scale);
        at_least(&mut out, Some("ensemble"), "samples", e.samples, 100);
        at_least(&mut out, Some("ensemble"), "conjugation_dim", e.conjugation_dim, 2);
        at_least(&mut out, Some("ensemble"), "conjugation_trials", e.conjugation_trials, 2);

        let w = &self.walk;
        at_least(&mut out, Some("walk"), "dim", w.dim, 2);
        at_least(&mut out, Some("walk"), "steps", w.steps, 1);
        pos(&mut out, "walk", "dt", w.dt);
        pos(&mut out, "walk", "hbar", w.hbar);
        pos(&mut out, "walk", "scale", w.scale);
        at_least(&mut out, Some("walk"), "trials", w.trials, 1);
        pos(&mut out, "walk", "msd_max_theta2", w.msd_max_theta2);
        at_least(&mut out, Some("walk"), "isotropy_samples", w.isotropy_samples, 1000);
        at_least(&mut out, Some("walk"), "homogeneity_walks", w.homogeneity_walks, 2);
        at_least(&mut out, Some("walk"), "homogeneity_steps", w.homogeneity_steps, 1);
        if w.stepper == Stepper::FirstOrder && w.scale * w.dt / w.hbar > FIRST_ORDER_BOUND {
            out.push(violation(
                Some("walk"),
                "dt",
                format!(
                    "first-order stepper needs scale * dt / hbar <= {FIRST_ORDER_BOUND}, got {}",
                    w.scale * w.dt / w.hbar
                ),
            ));
        }
        if w.ensemble == EnsembleKind::Poisson {
            out.push(violation(Some("walk"), "ensemble", "walks use gue or goe"));
        }

        let c = &self.constrained;
        at_least(&mut out, Some("constrained"), "dim", c.dim, 1);
        at_least(&mut out, Some("constrained"), "steps", c.steps, 1);
        pos(&mut out, "constrained", "dt", c.dt);
        if !(c.v0 >= 0.0 && c.v0.is_finite()) {
            out.push(violation(Some("constrained"), "v0", "must be >= 0"));
        }
        at_least(&mut out, Some("constrained"), "trials", c.trials, 1000);
        let mut distinct = c.scaling_steps.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 4 || distinct[0] == 0 {
            out.push(violation(
                Some("constrained"),
                "scaling_steps",
                "needs at least 4 distinct positive step counts",
            ));
        }

        let d = &self.drift;
        at_least(&mut out, Some("drift"), "dim", d.dim, 2);
        if d.target_thetas.is_empty() || d.target_thetas.iter().any(|t| !(*t > 0.0 && *t < std::f64::consts::FRAC_PI_2)) {
            out.push(violation(Some("drift"), "target_thetas", "needs angles in (0, pi/2)"));
        }
        if d.target_thetas.len() >= d.dim {
            out.push(violation(Some("drift"), "target_thetas", "needs fewer targets than dim"));
        }
        if !(d.kappa >= 0.0) {
            out.push(violation(Some("drift"), "kappa", "must be >= 0"));
        }
        pos(&mut out, "drift", "capture_radius", d.capture_radius);
        at_least(&mut out, Some("drift"), "steps", d.steps, 1);
        pos(&mut out, "drift", "dt", d.dt);
        pos(&mut out, "drift", "scale", d.scale);
        at_least(&mut out, Some("drift"), "trials", d.trials, 1);

        let k = &self.classical;
        pos(&mut out, "classical", "sigma", k.sigma);
        pos(&mut out, "classical", "mass", k.mass);
        pos(&mut out, "classical", "dt", k.dt);
        at_least(&mut out, Some("classical"), "steps", k.steps, 1);
        match k.potential {
            PotentialSpec::Harmonic { k: stiffness } if !(stiffness > 0.0) => {
                out.push(violation(Some("classical"), "potential", "harmonic k must be > 0"));
            }
            PotentialSpec::Linear { force } if !force.is_finite() => {
                out.push(violation(Some("classical"), "potential", "force must be finite"));
            }
            _ => {}
        }
        out
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or before the first section), else the
/// section header, else 1.
fn locate(text: &str, section: Option<&str>, key: &str) -> usize {
    let mut current: Option<String> = None;
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if section == Some(name.as_str()) {
                header_line = Some(i + 1);
            }
            current = Some(name);
            continue;
        }
        let in_scope = match (section, current.as_deref()) {
            (None, None) => true,
            (Some(s), Some(c)) => c == s || c.starts_with(&format!("{s}.")),
            _ => false,
        };
        let dotted = section.map(|s| format!("{s}.{key}"));
        let matches_key = |k: &str| {
            line.strip_prefix(k)
                .map(|rest| rest.trim_start().starts_with('='))
                .unwrap_or(false)
        };
        if (in_scope && matches_key(key)) || (current.is_none() && dotted.as_deref().is_some_and(matches_key)) {
            return i + 1;
        }
        if in_scope && section.is_some() && line.starts_with(&format!("{key}.")) {
            return i + 1;
        }
    }
    header_line.unwrap_or(1)
}
