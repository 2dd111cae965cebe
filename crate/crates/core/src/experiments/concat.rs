use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Scenario, RFF_FEATURES};
use crate::dynamics::{DiscriminatorState, Representation, Simulator, TrainConfig};
use crate::error::{Error, Result};
use crate::kernels::{sq_dist, Kernel, KernelSpec};
use crate::svg::{line_chart, Series};

fn default_widths() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

fn default_features() -> usize {
    RFF_FEATURES
}

fn default_record_every() -> usize {
    10
}

/// Fixed-width kernels against one kernel concatenating all widths, on the
/// `dirac_pair` scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcatConfig {
    #[serde(default = "default_widths")]
    pub widths: Vec<f64>,
    #[serde(default = "default_features")]
    pub features: usize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for ConcatConfig {
    fn default() -> Self {
        Self {
            widths: default_widths(),
            features: default_features(),
            train: TrainConfig::default(),
            seed: 0,
            record_every: default_record_every(),
        }
    }
}

impl ConcatConfig {
    /// The fixed kernels in width order, then the concatenated one.
    pub fn kernels(&self) -> Vec<KernelSpec> {
        let mut v: Vec<KernelSpec> = self
            .widths
            .iter()
            .map(|&s| KernelSpec::rff(s, self.features, self.seed))
            .collect();
        v.push(KernelSpec::rff_multiscale(
            self.widths.clone(),
            self.features,
            self.seed,
        ));
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcatCurve {
    pub kernel: KernelSpec,
    pub kernel_id: String,
    pub steps: Vec<usize>,
    pub distance: Vec<f64>,
    pub final_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcatResult {
    pub config: ConcatConfig,
    pub curves: Vec<ConcatCurve>,
}

fn run_curve(cfg: &ConcatConfig, spec: KernelSpec) -> Result<ConcatCurve> {
    let (p_r, p_g) = Scenario::DiracPair.build(cfg.seed)?;
    let kernel = Kernel::new(&spec, p_r.dim())?;
    let state = DiscriminatorState::zero(&kernel, &cfg.train.representation, p_r.points())?;
    let mut sim = Simulator::new(
        &kernel,
        p_r.points(),
        p_r.masses(),
        p_g.masses().to_vec(),
        &cfg.train,
        state,
    )?;
    let x0 = &p_r.points()[0];
    let mut gen = p_g.points().to_vec();
    let mut steps = vec![0];
    let mut distance = vec![sq_dist(x0, &gen[0]).sqrt()];
    for k in 1..=cfg.train.steps {
        if let Err(e) = sim.step(&mut gen) {
            return Err(match e {
                Error::NonFinite(m) => Error::NonFinite(format!("{m} at step {k}")),
                e => e,
            });
        }
        if k % cfg.record_every == 0 || k == cfg.train.steps {
            steps.push(k);
            distance.push(sq_dist(x0, &gen[0]).sqrt());
        }
    }
    Ok(ConcatCurve {
        kernel_id: spec.id(),
        kernel: spec,
        steps,
        final_distance: *distance.last().expect("step 0 recorded"),
        distance,
    })
}

/// Distance of the generated point to the true point along training, for
/// each fixed width and for the concatenated kernel, under one step budget.
pub fn run_concat_experiment(cfg: &ConcatConfig) -> Result<ConcatResult> {
    cfg.train.validate()?;
    if cfg.record_every == 0 {
        return Err(Error::InvalidInput("record_every must be >= 1".into()));
    }
    if matches!(cfg.train.representation, Representation::History) {
        return Err(Error::ModeMismatch(
            "the comparison runs random-feature kernels in parametric mode".into(),
        ));
    }
    let kernels = cfg.kernels();
    for k in &kernels {
        k.validate()?;
    }
    let curves = kernels
        .into_par_iter()
        .map(|spec| run_curve(cfg, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConcatResult {
        config: cfg.clone(),
        curves,
    })
}

impl ConcatResult {
    /// `concat.csv` (one distance column per kernel), `concat.json` and `concat.svg`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("concat.csv"))?;
        let mut header = vec!["step".to_string()];
        header.extend(self.curves.iter().map(|c| c.kernel_id.clone()));
        w.write_record(&header)?;
        let steps = &self.curves[0].steps;
        for (i, s) in steps.iter().enumerate() {
            let mut row = vec![s.to_string()];
            row.extend(self.curves.iter().map(|c| c.distance[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;

        #[derive(Serialize)]
        struct Final<'a> {
            kernel: &'a KernelSpec,
            kernel_id: &'a str,
            final_distance: f64,
        }
        #[derive(Serialize)]
        struct File<'a> {
            config: &'a ConcatConfig,
            curves: Vec<Final<'a>>,
        }
        let file = File {
            config: &self.config,
            curves: self
                .curves
                .iter()
                .map(|c| Final {
                    kernel: &c.kernel,
                    kernel_id: &c.kernel_id,
                    final_distance: c.final_distance,
                })
                .collect(),
        };
        fs::write(
            dir.join("concat.json"),
            serde_json::to_string_pretty(&file)? + "\n",
        )?;

        let series: Vec<Series> = self
            .curves
            .iter()
            .map(|c| Series {
                name: c.kernel_id.clone(),
                points: c
                    .steps
                    .iter()
                    .zip(&c.distance)
                    .map(|(&s, &d)| (s as f64, d))
                    .collect(),
            })
            .collect();
        fs::write(
            dir.join("concat.svg"),
            line_chart(
                "Distance to the true point",
                "step",
                "distance",
                &series,
                false,
            ),
        )?;
        Ok(())
    }
}
