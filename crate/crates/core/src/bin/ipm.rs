use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use isolated_points::divergence::{verify_linear_escape, DivergenceWitness};
use isolated_points::dynamics::{train, DiscreteDistribution, TrainConfig};
use isolated_points::experiments::{
    discriminator_heatmap, emit_outputs, run_concat_experiment, run_sweep, trace_svg, ConcatConfig,
    ExperimentConfig, Scenario,
};
use isolated_points::kernels::KernelSpec;
use isolated_points::metrics::{
    divergence_fraction, mmd_squared, wasserstein2, DIVERGENCE_THRESHOLD,
};
use isolated_points::rng::child_seed;
use isolated_points::stability::{
    check_corollary_support, classify_analytic, classify_collapsed, classify_numeric,
    find_bad_minimum, BadMinOptions, RegionSystem,
};

type AnyResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "ipm", version, about = "Isolated points model of GAN training")]
struct Cli {
    /// JSON config for the subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Named defaults for sweeps and simulations
    #[arg(long, global = true, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Desk,
}

#[derive(Subcommand)]
enum Command {
    /// Train once and write the trace (JSON + CSV, SVG in 2-d)
    Simulate,
    /// Classify a region system or a generated support
    Stability,
    /// Search for a stable collapsed equilibrium
    BadMin,
    /// Solve for the escape velocity and verify the straight-line escape
    Diverge,
    /// Kernel-width sweep with parallel trials
    Sweep {
        /// Trials per kernel (overrides the config)
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads; defaults to all cores
        #[arg(long)]
        threads: Option<usize>,
        /// Norm above which a generated point counts as diverged
        #[arg(long = "diverge-threshold")]
        diverge_threshold: Option<f64>,
    },
    /// Fixed widths against the concatenated kernel
    Concat,
    /// MMD^2, W2 and divergence fraction between two distribution files
    Metrics {
        first: PathBuf,
        second: PathBuf,
        /// Kernel spec as inline JSON
        #[arg(long, default_value = r#"{"variant":"exact_rbf","sigma":1.0}"#)]
        kernel: String,
        /// Norm above which a generated point counts as diverged
        #[arg(long = "diverge-threshold", default_value_t = DIVERGENCE_THRESHOLD)]
        diverge_threshold: f64,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> AnyResult<T> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn load<T: DeserializeOwned>(
    config: &Option<PathBuf>,
    default: impl FnOnce() -> T,
) -> AnyResult<T> {
    match config {
        Some(p) => read_json(p),
        None => Ok(default()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> AnyResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> AnyResult<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    #[serde(default)]
    scenario: Option<Scenario>,
    #[serde(default, rename = "true")]
    true_distribution: Option<DiscreteDistribution>,
    #[serde(default)]
    generated: Option<DiscreteDistribution>,
    kernel: KernelSpec,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default)]
    seed: u64,
}

fn simulate(cli: &Cli) -> AnyResult<()> {
    let mut cfg: SimulateConfig = load(&cli.config, || SimulateConfig {
        scenario: Some(Scenario::Circle4D2),
        true_distribution: None,
        generated: None,
        kernel: KernelSpec::rff(0.5, 1000, 0),
        train: TrainConfig::default(),
        seed: 0,
    })?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let (p_r, p_g) = match (cfg.true_distribution, cfg.generated, cfg.scenario) {
        (Some(r), Some(g), None) => (r, g),
        (None, None, Some(s)) => s.build(child_seed(cfg.seed, 0))?,
        _ => return Err("give either a scenario or both \"true\" and \"generated\"".into()),
    };
    let spec = if cli.seed.is_some() {
        cfg.kernel.with_seed(child_seed(cfg.seed, 1))
    } else {
        cfg.kernel
    };
    let trace = train(&p_r, &p_g, &spec, &cfg.train)?;
    fs::create_dir_all(&cli.out)?;
    trace.write_json(&cli.out.join("trace.json"))?;
    trace.write_csv(&cli.out.join("trace.csv"))?;
    if trace.dim() == 2 {
        let heat = discriminator_heatmap(&trace, 100)?;
        fs::write(
            cli.out.join("trace.svg"),
            trace_svg(&trace, &spec.id(), heat.as_ref()),
        )?;
    }
    let last = trace.metrics.last().expect("initial record");
    print_json(&serde_json::json!({
        "kernel": spec,
        "steps_run": trace.snapshots.last().map(|s| s.step),
        "diverged_at": trace.diverged_at,
        "final": last,
        "out": cli.out,
    }))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StabilityInput {
    Region {
        system: RegionSystem,
        #[serde(default)]
        points: Option<Vec<Vec<f64>>>,
    },
    Support {
        #[serde(rename = "true")]
        true_distribution: DiscreteDistribution,
        generated: DiscreteDistribution,
        kernel: KernelSpec,
        lambda: f64,
        #[serde(default = "one")]
        mu: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn stability(cli: &Cli) -> AnyResult<()> {
    let input: StabilityInput = load(&cli.config, || StabilityInput::Region {
        system: RegionSystem {
            true_point: vec![0.0, 0.0],
            true_mass: 0.5,
            gen_masses: vec![0.2, 0.2],
            kernel: KernelSpec::exact(1.0),
            lambda: 0.01,
            mu: 1.0,
        },
        points: None,
    })?;
    let value = match input {
        StabilityInput::Region { system, points } => {
            let report = match points {
                Some(p) => {
                    let mut r = classify_numeric(&system, &p)?;
                    if p == system.collapsed() {
                        r.condition = classify_analytic(&system)?.1;
                    }
                    r
                }
                None => classify_collapsed(&system)?,
            };
            serde_json::to_value(report)?
        }
        StabilityInput::Support {
            true_distribution,
            generated,
            kernel,
            lambda,
            mu,
        } => serde_json::to_value(check_corollary_support(
            &true_distribution,
            &generated,
            &kernel,
            lambda,
            mu,
        )?)?,
    };
    write_json(&cli.out.join("stability.json"), &value)?;
    print_json(&value)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BadMinConfig {
    system: RegionSystem,
    #[serde(default)]
    options: BadMinOptions,
}

fn bad_min(cli: &Cli) -> AnyResult<()> {
    let cfg: BadMinConfig = load(&cli.config, || BadMinConfig {
        system: RegionSystem {
            true_point: vec![0.0, 0.0],
            true_mass: 0.25,
            gen_masses: vec![0.25, 0.25],
            kernel: KernelSpec::exact(1.0),
            lambda: 0.01,
            mu: 1.0,
        },
        options: BadMinOptions::default(),
    })?;
    let report = find_bad_minimum(&cfg.system, &cfg.options)?;
    write_json(&cli.out.join("bad_min.json"), &report)?;
    print_json(&report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DivergeConfig {
    kernel: KernelSpec,
    eta_d: f64,
    eta_g: f64,
    lambda: f64,
    initial_point: Vec<f64>,
    direction: Vec<f64>,
    /// Verification steps; 0 skips the simulation.
    steps: usize,
}

impl Default for DivergeConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::exact(1.0),
            eta_d: 1e-3,
            eta_g: 1e-3,
            lambda: 1e-3,
            initial_point: vec![0.0, 0.0],
            direction: vec![1.0, 0.0],
            steps: 1000,
        }
    }
}

fn diverge(cli: &Cli) -> AnyResult<()> {
    let cfg: DivergeConfig = load(&cli.config, DivergeConfig::default)?;
    let w = DivergenceWitness::solve(
        &cfg.kernel,
        cfg.initial_point,
        cfg.direction,
        cfg.eta_d,
        cfg.eta_g,
        cfg.lambda,
    )?;
    write_json(&cli.out.join("witness.json"), &w)?;
    let mut value = serde_json::json!({ "witness": w });
    if cfg.steps > 0 {
        let esc = verify_linear_escape(&w, cfg.steps)?;
        let mut csv = csv::Writer::from_path(cli.out.join("escape.csv"))?;
        let mut header = vec!["step".to_string()];
        header.extend((0..w.dim()).map(|i| format!("coord_{i}")));
        header.push("deviation".into());
        csv.write_record(&header)?;
        for (k, p) in esc.trajectory.iter().enumerate() {
            let line = w.position(k as f64);
            let dev = p
                .iter()
                .zip(&line)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let mut row = vec![k.to_string()];
            row.extend(p.iter().map(|v| format!("{v:e}")));
            row.push(format!("{dev:e}"));
            csv.write_record(&row)?;
        }
        csv.flush()?;
        value["escape"] = serde_json::json!({
            "steps": esc.steps,
            "max_deviation": esc.max_deviation,
            "max_angle": esc.max_angle,
            "relative_deviation": esc.max_deviation / (esc.steps as f64 * w.velocity),
        });
    }
    print_json(&value)
}

fn sweep(
    cli: &Cli,
    trials: Option<usize>,
    threads: Option<usize>,
    threshold: Option<f64>,
) -> AnyResult<()> {
    let mut cfg: ExperimentConfig = load(&cli.config, || match cli.preset {
        Preset::Desk => ExperimentConfig::desk(),
        Preset::Paper => ExperimentConfig::paper(),
    })?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(t) = threshold {
        cfg.divergence_threshold = t;
    }
    let out = cfg.out_dir.clone().unwrap_or_else(|| cli.out.clone());
    let result = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| run_sweep(&cfg))?,
        None => run_sweep(&cfg)?,
    };
    emit_outputs(&result, &out)?;
    print_json(&result.summary)
}

fn concat(cli: &Cli) -> AnyResult<()> {
    let mut cfg: ConcatConfig = load(&cli.config, ConcatConfig::default)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let result = run_concat_experiment(&cfg)?;
    result.write(&cli.out)?;
    let finals: Vec<_> = result
        .curves
        .iter()
        .map(
            |c| serde_json::json!({ "kernel_id": c.kernel_id, "final_distance": c.final_distance }),
        )
        .collect();
    print_json(&finals)
}

fn metrics(first: &Path, second: &Path, kernel: &str, threshold: f64) -> AnyResult<()> {
    let p: DiscreteDistribution = read_json(first)?;
    let q: DiscreteDistribution = read_json(second)?;
    let spec: KernelSpec = serde_json::from_str(kernel)?;
    print_json(&serde_json::json!({
        "mmd2": mmd_squared(&p, &q, &spec)?,
        "w2": wasserstein2(&p, &q)?,
        "divergence_fraction": divergence_fraction(&q, threshold),
    }))
}

fn run(cli: &Cli) -> AnyResult<()> {
    match &cli.command {
        Command::Simulate => simulate(cli),
        Command::Stability => stability(cli),
        Command::BadMin => bad_min(cli),
        Command::Diverge => diverge(cli),
        Command::Sweep {
            trials,
            threads,
            diverge_threshold,
        } => sweep(cli, *trials, *threads, *diverge_threshold),
        Command::Concat => concat(cli),
        Command::Metrics {
            first,
            second,
            kernel,
            diverge_threshold,
        } => metrics(first, second, kernel, *diverge_threshold),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
