use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::dynamics::{train, TrainingTrace};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::metrics::{divergence_fraction, normalized_wasserstein};
use crate::rng::child_seed;
use crate::svg::{line_chart, trajectory_plot, Heatmap, Series};

/// One (kernel, trial) outcome. `beta` is `None` when the trial failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kernel_index: usize,
    pub kernel_id: String,
    pub sigma_or_widths: String,
    pub trial: usize,
    pub beta: Option<f64>,
    pub divergence_fraction: Option<f64>,
    pub diverged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub kernel_id: String,
    pub sigma_or_widths: String,
    pub widths: Vec<f64>,
    pub trials: usize,
    pub completed: usize,
    pub median_beta: Option<f64>,
    pub mean_divergence_fraction: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrialTrace {
    pub kernel_index: usize,
    pub trial: usize,
    pub trace: TrainingTrace,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    /// Ordered by kernel index, then trial.
    pub rows: Vec<SweepRow>,
    pub seconds: Vec<f64>,
    pub summary: Vec<KernelSummary>,
    pub traces: Vec<TrialTrace>,
}

fn widths_label(w: &[f64]) -> String {
    w.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("+")
}

/// Runs a single trial: scenario from `child_seed(trial_seed, 0)`, RFF
/// frequencies from `child_seed(trial_seed, 1)` where `trial_seed =
/// child_seed(master_seed, trial)`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    kernel_index: usize,
    trial: usize,
) -> (SweepRow, Option<TrainingTrace>) {
    let base = &cfg.kernels[kernel_index];
    let mut row = SweepRow {
        kernel_index,
        kernel_id: base.id(),
        sigma_or_widths: widths_label(&base.widths()),
        trial,
        beta: None,
        divergence_fraction: None,
        diverged: false,
        error: None,
    };
    let trial_seed = child_seed(cfg.master_seed, trial as u64);
    let outcome = (|| -> Result<TrainingTrace> {
        let (p_r, p_g) = cfg.scenario.build(child_seed(trial_seed, 0))?;
        let spec = base.with_seed(child_seed(trial_seed, 1));
        let trace = train(&p_r, &p_g, &spec, &cfg.train)?;
        let last = trace.final_distribution()?;
        row.beta = Some(normalized_wasserstein(&p_r, &p_g, &last)?);
        let frac = divergence_fraction(&last, cfg.divergence_threshold);
        row.divergence_fraction = Some(frac);
        row.diverged = frac > 0.0 || trace.diverged();
        if let Some(d) = &trace.diagnostic {
            row.error = Some(d.clone());
        }
        Ok(trace)
    })();
    match outcome {
        Ok(trace) => (row, Some(trace)),
        Err(e) => {
            row.beta = None;
            row.error = Some(e.to_string());
            (row, None)
        }
    }
}

/// Every (kernel, trial) pair in parallel; results are ordered by index, so
/// the output does not depend on the thread count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.kernels.len())
        .flat_map(|k| (0..cfg.trials).map(move |t| (k, t)))
        .collect();
    let outcomes: Vec<(SweepRow, Option<TrainingTrace>, f64)> = jobs
        .par_iter()
        .map(|&(k, t)| {
            let start = Instant::now();
            let (row, trace) = run_trial(cfg, k, t);
            let keep = if t < cfg.trajectory_trials {
                trace
            } else {
                None
            };
            (row, keep, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut seconds = Vec::with_capacity(outcomes.len());
    let mut traces = Vec::new();
    for (&(k, t), (row, trace, s)) in jobs.iter().zip(outcomes) {
        rows.push(row);
        seconds.push(s);
        if let Some(trace) = trace {
            traces.push(TrialTrace {
                kernel_index: k,
                trial: t,
                trace,
            });
        }
    }
    let summary = summarize(cfg, &rows);
    Ok(SweepResult {
        config: cfg.clone(),
        rows,
        seconds,
        summary,
        traces,
    })
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Per-kernel median beta and mean divergence fraction over completed trials.
pub fn summarize(cfg: &ExperimentConfig, rows: &[SweepRow]) -> Vec<KernelSummary> {
    cfg.kernels
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.kernel_index == k).collect();
            let betas: Vec<f64> = mine.iter().filter_map(|r| r.beta).collect();
            let fracs: Vec<f64> = mine.iter().filter_map(|r| r.divergence_fraction).collect();
            KernelSummary {
                kernel_id: spec.id(),
                sigma_or_widths: widths_label(&spec.widths()),
                widths: spec.widths(),
                trials: mine.len(),
                completed: betas.len(),
                median_beta: median(betas),
                mean_divergence_fraction: if fracs.is_empty() {
                    None
                } else {
                    Some(fracs.iter().sum::<f64>() / fracs.len() as f64)
                },
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `sweep.csv`, `summary.json`, `timings.csv`, the sigma plots and the
/// kept trajectories (CSV + JSON, plus SVG for 2-d scenarios).
pub fn emit_outputs(result: &SweepResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    w.write_record([
        "kernel_id",
        "sigma_or_widths",
        "trial",
        "beta",
        "divergence_fraction",
        "diverged",
        "error",
    ])?;
    for r in &result.rows {
        w.write_record([
            r.kernel_id.clone(),
            r.sigma_or_widths.clone(),
            r.trial.to_string(),
            opt(r.beta),
            opt(r.divergence_fraction),
            r.diverged.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let mut t = csv::Writer::from_path(dir.join("timings.csv"))?;
    t.write_record(["kernel_id", "trial", "seconds"])?;
    for (r, s) in result.rows.iter().zip(&result.seconds) {
        t.write_record([r.kernel_id.clone(), r.trial.to_string(), format!("{s:.4}")])?;
    }
    t.flush()?;

    #[derive(Serialize)]
    struct SummaryFile<'a> {
        scenario: &'a str,
        trials: usize,
        master_seed: u64,
        steps: usize,
        divergence_threshold: f64,
        kernels: &'a [KernelSummary],
    }
    let cfg = &result.config;
    let file = SummaryFile {
        scenario: cfg.scenario.name(),
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        steps: cfg.train.steps,
        divergence_threshold: cfg.divergence_threshold,
        kernels: &result.summary,
    };
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&file)? + "\n",
    )?;

    // single-width kernels only; multiscale rows have no single sigma
    let by_sigma = |f: &dyn Fn(&KernelSummary) -> Option<f64>| -> Vec<(f64, f64)> {
        result
            .summary
            .iter()
            .filter(|s| s.widths.len() == 1)
            .filter_map(|s| f(s).map(|v| (s.widths[0], v)))
            .collect()
    };
    let beta = Series {
        name: "median beta".into(),
        points: by_sigma(&|s| s.median_beta),
    };
    fs::write(
        dir.join("beta_vs_sigma.svg"),
        line_chart(
            "Normalized Wasserstein distance",
            "kernel width sigma",
            "median beta",
            &[beta],
            true,
        ),
    )?;
    let frac = Series {
        name: "mean divergence fraction".into(),
        points: by_sigma(&|s| s.mean_divergence_fraction),
    };
    fs::write(
        dir.join("divergence_vs_sigma.svg"),
        line_chart(
            "Diverging generated points",
            "kernel width sigma",
            "mean fraction",
            &[frac],
            true,
        ),
    )?;

    if !result.traces.is_empty() {
        let tdir = dir.join("trajectories");
        fs::create_dir_all(&tdir)?;
        for tt in &result.traces {
            let stem = format!(
                "k{}_{}_trial{}",
                tt.kernel_index,
                result.config.kernels[tt.kernel_index].id(),
                tt.trial
            );
            tt.trace.write_csv(&tdir.join(format!("{stem}.csv")))?;
            tt.trace.write_json(&tdir.join(format!("{stem}.json")))?;
            if tt.trace.dim() == 2 {
                let heat = discriminator_heatmap(&tt.trace, 100)?;
                fs::write(
                    tdir.join(format!("{stem}.svg")),
                    trace_svg(&tt.trace, &stem, heat.as_ref()),
                )?;
            }
        }
    }
    Ok(())
}

/// Paths of every generated point over a 2-d trace, with the true points.
pub fn trace_svg(trace: &TrainingTrace, title: &str, heat: Option<&Heatmap>) -> String {
    let n = trace.gen_masses.len();
    let paths: Vec<Vec<[f64; 2]>> = (0..n)
        .map(|j| {
            trace
                .snapshots
                .iter()
                .map(|s| [s.points[j][0], s.points[j][1]])
                .collect()
        })
        .collect();
    let truth: Vec<[f64; 2]> = trace
        .true_distribution
        .points()
        .iter()
        .map(|p| [p[0], p[1]])
        .collect();
    trajectory_plot(title, &truth, &paths, heat)
}

/// Final discriminator sampled on an `n x n` grid over the trace's bounding box.
pub fn discriminator_heatmap(trace: &TrainingTrace, n: usize) -> Result<Option<Heatmap>> {
    let Some(state) = &trace.final_state else {
        return Ok(None);
    };
    if trace.dim() != 2 {
        return Err(Error::InvalidInput("heatmap needs a 2-d trace".into()));
    }
    let kernel = Kernel::new(&trace.kernel, 2)?;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    let pts = trace
        .snapshots
        .iter()
        .flat_map(|s| s.points.iter())
        .chain(trace.true_distribution.points());
    for p in pts.filter(|p| p.iter().all(|v| v.is_finite())) {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let pad = 0.1 * (x1 - x0).max(y1 - y0).max(1e-3);
    let bounds = [x0 - pad, x1 + pad, y0 - pad, y1 + pad];
    let mut values = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let x = bounds[0] + (c as f64 + 0.5) / n as f64 * (bounds[1] - bounds[0]);
            let y = bounds[2] + (r as f64 + 0.5) / n as f64 * (bounds[3] - bounds[2]);
            values.push(state.eval(&kernel, &[x, y])?);
        }
    }
    Ok(Some(Heatmap {
        bounds,
        nx: n,
        ny: n,
        values,
    }))
}
