//! Experiment harness: scenarios, kernel-width sweeps and the multiscale
//! comparison, plus their CSV/JSON/SVG outputs.

mod concat;
mod sweep;

pub use concat::{run_concat_experiment, ConcatConfig, ConcatCurve, ConcatResult};
pub use sweep::{
    discriminator_heatmap, emit_outputs, run_sweep, run_trial, summarize, trace_svg, KernelSummary,
    SweepResult, SweepRow, TrialTrace,
};

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DiscreteDistribution, TrainConfig};
use crate::error::{check_dim, Error, Result};
use crate::kernels::KernelSpec;
use crate::metrics::DIVERGENCE_THRESHOLD;
use crate::rng::seeded;

/// Width grid of the `paper` preset.
pub const PAPER_WIDTHS: [f64; 7] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0];
/// Widths of the desk-scale sweep.
pub const DESK_WIDTHS: [f64; 3] = [0.05, 0.5, 5.0];
pub const RFF_FEATURES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Four true points on the unit circle.
    #[serde(rename = "circle4_d2")]
    Circle4D2,
    /// Ten true points uniform on the unit sphere in 10 dimensions.
    #[serde(rename = "sphere10_d10")]
    Sphere10D10,
    /// One true point at the origin and one generated point at distance 10 (2-d).
    DiracPair,
    /// JSON file with `{"true": <distribution>, "generated": <distribution>}`.
    Custom(PathBuf),
}

#[derive(Deserialize)]
struct CustomScenario {
    #[serde(rename = "true")]
    true_distribution: DiscreteDistribution,
    generated: DiscreteDistribution,
}

pub const DIRAC_DISTANCE: f64 = 10.0;

impl Scenario {
    /// True and initial generated distributions. Generated points are
    /// Gaussian with per-coordinate variance `1/d`, one per true point.
    pub fn build(&self, seed: u64) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
        let mut rng = seeded(seed);
        let gaussian = |rng: &mut rand_chacha::ChaCha20Rng, n: usize, d: usize| -> Vec<Vec<f64>> {
            let s = (1.0 / d as f64).sqrt();
            (0..n)
                .map(|_| {
                    (0..d)
                        .map(|_| s * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect()
        };
        match self {
            Scenario::Circle4D2 => {
                let truth = (0..4)
                    .map(|i| {
                        let a = i as f64 * PI / 2.0;
                        vec![a.cos(), a.sin()]
                    })
                    .collect();
                let gen = gaussian(&mut rng, 4, 2);
                Ok((
                    DiscreteDistribution::uniform(truth)?,
                    DiscreteDistribution::uniform(gen)?,
                ))
            }
            Scenario::Sphere10D10 => {
                let truth = (0..10)
                    .map(|_| loop {
                        let v: Vec<f64> = (0..10)
                            .map(|_| rng.sample::<f64, _>(StandardNormal))
                            .collect();
                        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if n > 1e-8 {
                            break v.into_iter().map(|x| x / n).collect();
                        }
                    })
                    .collect();
                let gen = gaussian(&mut rng, 10, 10);
                Ok((
                    DiscreteDistribution::uniform(truth)?,
                    DiscreteDistribution::uniform(gen)?,
                ))
            }
            Scenario::DiracPair => Ok((
                DiscreteDistribution::uniform(vec![vec![0.0, 0.0]])?,
                DiscreteDistribution::uniform(vec![vec![DIRAC_DISTANCE, 0.0]])?,
            )),
            Scenario::Custom(path) => {
                let text = std::fs::read_to_string(path)?;
                let c: CustomScenario = serde_json::from_str(&text)?;
                check_dim(c.true_distribution.dim(), c.generated.dim())?;
                Ok((c.true_distribution, c.generated))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Circle4D2 => "circle4_d2",
            Scenario::Sphere10D10 => "sphere10_d10",
            Scenario::DiracPair => "dirac_pair",
            Scenario::Custom(_) => "custom",
        }
    }
}

fn default_threshold() -> f64 {
    DIVERGENCE_THRESHOLD
}

fn default_trajectory_trials() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub kernels: Vec<KernelSpec>,
    pub trials: usize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_threshold")]
    pub divergence_threshold: f64,
    /// Trials per kernel whose full trajectories are kept and written out.
    #[serde(default = "default_trajectory_trials")]
    pub trajectory_trials: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// 20 trials on `circle4_d2` at widths 0.05, 0.5 and 5.
    pub fn desk() -> Self {
        Self::with_widths(&DESK_WIDTHS, 20)
    }

    /// 100 trials on `circle4_d2` over [`PAPER_WIDTHS`].
    pub fn paper() -> Self {
        Self::with_widths(&PAPER_WIDTHS, 100)
    }

    fn with_widths(widths: &[f64], trials: usize) -> Self {
        Self {
            scenario: Scenario::Circle4D2,
            kernels: widths
                .iter()
                .map(|&s| KernelSpec::rff(s, RFF_FEATURES, 0))
                .collect(),
            trials,
            train: TrainConfig::default(),
            master_seed: 0,
            divergence_threshold: DIVERGENCE_THRESHOLD,
            trajectory_trials: 1,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        if self.kernels.is_empty() {
            return Err(Error::InvalidInput("kernel sweep is empty".into()));
        }
        for k in &self.kernels {
            k.validate()?;
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::InvalidInput(
                "divergence threshold must be positive".into(),
            ));
        }
        self.train.validate()
    }
}
