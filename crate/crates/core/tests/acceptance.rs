//! Acceptance checks. Prints one PASS/FAIL line per criterion and a summary.
//! Failures make the process exit non-zero only with `ACCEPTANCE_STRICT=1`,
//! so the rest of `cargo test --workspace` still runs.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use isolated_points::divergence::{
    build_divergent_discriminator, verify_linear_escape, DivergenceWitness,
};
use isolated_points::dynamics::{
    discriminator_step, DiscreteDistribution, DiscriminatorState, History, Representation,
    Simulator, TrainConfig,
};
use isolated_points::expansion::LocalExpansion;
use isolated_points::experiments::{
    emit_outputs, run_concat_experiment, run_sweep, ConcatConfig, ExperimentConfig, SweepResult,
};
use isolated_points::kernels::{Kernel, KernelSpec};
use isolated_points::metrics::{converged_generator_loss, generator_loss, wasserstein2};
use isolated_points::stability::{
    check_corollary_support, classify_analytic, classify_collapsed, classify_numeric,
    find_bad_minimum, simulate_region, BadMinOptions, Condition, RegionSystem, Verdict,
};

type Outcome = Result<String, String>;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Equilibrium discriminator of a region as a local expansion around the true point.
fn local_equilibrium(sys: &RegionSystem, pts: &[Vec<f64>], radius: f64) -> DiscriminatorState {
    let mut e = LocalExpansion::new(&sys.true_point, &sys.kernel.widths(), radius, 1e-15).unwrap();
    e.add_term(sys.true_mass / sys.lambda, &sys.true_point)
        .unwrap();
    for (y, q) in pts.iter().zip(&sys.gen_masses) {
        e.add_term(-q / sys.lambda, y).unwrap();
    }
    DiscriminatorState::Local(e)
}

fn region_cfg(sys: &RegionSystem, eta_d: f64, steps: usize, radius: f64) -> TrainConfig {
    TrainConfig {
        eta_d,
        eta_g: sys.mu * eta_d,
        lambda: sys.lambda,
        steps,
        snapshot_every: 1,
        prune_tol: 0.0,
        representation: Representation::Local {
            center: Some(sys.true_point.clone()),
            radius,
        },
        ..TrainConfig::default()
    }
}

fn c1_positive_excess() -> Outcome {
    let sys = RegionSystem::new(
        vec![0.0, 0.0],
        0.5,
        vec![0.2, 0.2],
        KernelSpec::exact(1.0),
        0.01,
        1.0,
    )
    .unwrap();
    let (verdict, _) = classify_analytic(&sys).unwrap();
    let report = classify_collapsed(&sys).unwrap();
    let max_root = report.max_real_root.unwrap_or(f64::NEG_INFINITY);
    // rigid 0.1 sigma shift, discriminator at its equilibrium
    let initial = vec![vec![0.1, 0.0]; 2];
    let state = local_equilibrium(&sys, &sys.collapsed(), 0.5);
    let cfg = region_cfg(&sys, 1e-3, 200_000, 0.5);
    let d = simulate_region(&sys, &sys.collapsed(), &initial, state, &cfg).unwrap();
    let hit = d.iter().position(|v| *v <= d[0] / 10.0);
    check(
        verdict == Verdict::Stable && max_root < 0.0 && hit.is_some(),
        format!(
            "analytic={verdict:?} max_real_root={max_root:.3e} contraction 10x at step {hit:?} (final ratio {:.3e})",
            d[d.len() - 1] / d[0]
        ),
    )
}

fn c2_negative_excess() -> Outcome {
    let sys = RegionSystem::new(
        vec![0.0, 0.0],
        0.25,
        vec![0.125; 4],
        KernelSpec::exact(1.0),
        0.01,
        1.0,
    )
    .unwrap();
    let report = classify_collapsed(&sys).unwrap();
    let max_root = report.max_real_root.unwrap_or(f64::NEG_INFINITY);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut pts: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            vec![1e-3 * a.cos(), 1e-3 * a.sin()]
        })
        .collect();
    let kernel = sys.build_kernel().unwrap();
    let cfg = region_cfg(&sys, 1e-3, 0, 0.5);
    let truth = [sys.true_point.clone()];
    let tm = [sys.true_mass];
    let state = local_equilibrium(&sys, &sys.collapsed(), 0.5);
    let mut sim =
        Simulator::new(&kernel, &truth, &tm, sys.gen_masses.clone(), &cfg, state).unwrap();
    let mut exit = None;
    for k in 1..=1_000_000 {
        sim.step(&mut pts).unwrap();
        if pts.iter().any(|y| dist(y, &sys.true_point) > 0.05) {
            exit = Some(k);
            break;
        }
    }
    check(
        max_root > 0.0 && exit.is_some(),
        format!("max_real_root={max_root:.4} left the 0.05 sigma ball at step {exit:?}"),
    )
}

fn c3_dirac_boundary() -> Outcome {
    let damped = RegionSystem::new(
        vec![0.0, 0.0],
        1.0,
        vec![1.0],
        KernelSpec::exact(1.0),
        0.01,
        1.0,
    )
    .unwrap();
    let (v_damped, _) = classify_analytic(&damped).unwrap();
    let free = RegionSystem {
        lambda: 0.0,
        ..damped.clone()
    };
    let (v_free, c_free) = classify_analytic(&free).unwrap();
    let report = classify_collapsed(&free).unwrap();
    let max_abs_re = report
        .eigenvalues
        .iter()
        .map(|e| e[0].abs())
        .fold(0.0, f64::max);
    let steps = 10_000;
    let kernel = free.build_kernel().unwrap();
    let cfg = region_cfg(&free, 1e-3, steps, 0.5);
    let state = DiscriminatorState::zero(
        &kernel,
        &cfg.representation,
        std::slice::from_ref(&free.true_point),
    )
    .unwrap();
    let d = simulate_region(&free, &free.collapsed(), &[vec![0.01, 0.0]], state, &cfg).unwrap();
    let first = d[..=steps / 2].iter().cloned().fold(0.0, f64::max);
    let second = d[steps / 2..].iter().cloned().fold(0.0, f64::max);
    let change = (second - first).abs() / first;
    check(
        v_damped == Verdict::Stable
            && v_free == Verdict::Indeterminate
            && c_free == Condition::Boundary
            && max_abs_re <= 1e-9
            && change < 0.05,
        format!(
            "lambda=0.01 {v_damped:?}; lambda=0 {c_free:?} max|Re|={max_abs_re:.1e}; amplitude change {:.2}%",
            100.0 * change
        ),
    )
}

fn c4_support() -> Outcome {
    let truth: Vec<Vec<f64>> = (0..4)
        .map(|i| {
            let a = i as f64 * std::f64::consts::FRAC_PI_2;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let p_r = DiscreteDistribution::uniform(truth.clone()).unwrap();
    let spec = KernelSpec::exact(0.1);
    let matched = check_corollary_support(&p_r, &p_r, &spec, 0.01, 1.0).unwrap();
    let mut unstable = 0;
    let mut total = 0;
    for double in 0..4 {
        for empty in 0..4 {
            if empty == double {
                continue;
            }
            let mut gen = vec![truth[double].clone()];
            for (i, x) in truth.iter().enumerate() {
                if i != empty {
                    gen.push(x.clone());
                }
            }
            let p_g = DiscreteDistribution::uniform(gen).unwrap();
            let v = check_corollary_support(&p_r, &p_g, &spec, 0.01, 1.0).unwrap();
            total += 1;
            if v.verdict == Verdict::Unstable {
                unstable += 1;
            }
        }
    }
    check(
        matched.verdict == Verdict::Stable && unstable == total,
        format!(
            "perfect matching {:?}; 2-on-1 unstable {unstable}/{total}",
            matched.verdict
        ),
    )
}

fn c5_bad_minimum() -> Outcome {
    let start = Instant::now();
    let sys = |sigma: f64| {
        RegionSystem::new(
            vec![0.0, 0.0],
            0.25,
            vec![0.25, 0.25],
            KernelSpec::exact(sigma),
            0.01,
            1.0,
        )
        .unwrap()
    };
    let a = find_bad_minimum(&sys(1.0), &BadMinOptions::default()).map_err(|e| e.to_string())?;
    let b = find_bad_minimum(&sys(0.5), &BadMinOptions::default()).map_err(|e| e.to_string())?;
    let real_ok = a.max_real_root.is_none_or(|r| r < -a.tol_root);
    let finite = a.equilibrium.iter().flatten().all(|v| v.is_finite());
    let da: Vec<f64> = a.equilibrium.iter().map(|y| dist(y, &[0.0, 0.0])).collect();
    let db: Vec<f64> = b.equilibrium.iter().map(|y| dist(y, &[0.0, 0.0])).collect();
    let scale_err = da
        .iter()
        .zip(&db)
        .map(|(x, y)| (y - 0.5 * x).abs() / (0.5 * x))
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    check(
        real_ok && finite && scale_err < 1e-6 && secs < 5.0,
        format!(
            "largest real psi root {:?} (tol {:.1e}), max Re {:.3}; distances {:?}; sigma scaling rel err {scale_err:.1e}; {secs:.2}s",
            a.max_real_root, a.tol_root, a.max_real_part, da
        ),
    )
}

fn c6_divergence() -> Outcome {
    let start = Instant::now();
    let (eta_d, eta_g) = (1e-3, 1e-3);
    let w = DivergenceWitness::solve(
        &KernelSpec::exact(1.0),
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        eta_d,
        eta_g,
        1e-3,
    )
    .map_err(|e| e.to_string())?;
    let esc = verify_linear_escape(&w, 1000).map_err(|e| e.to_string())?;
    let bound = 1e-8 * 1000.0 * w.velocity;
    let kernel = Kernel::new(&w.kernel, 2).unwrap();
    let f0 = build_divergent_discriminator(&w).unwrap();
    let g = f0.grad(&kernel, &w.initial_point).unwrap();
    let claimed: Vec<f64> = w
        .direction
        .iter()
        .map(|u| eta_d / eta_g * w.velocity * u)
        .collect();
    let grad_err = dist(&g, &claimed);
    let secs = start.elapsed().as_secs_f64();
    check(
        w.residual.abs() < 1e-12 && esc.max_deviation < bound && grad_err < 1e-10 && secs < 5.0,
        format!(
            "v0={:.6e} |F(v0)|={:.1e}; escape deviation {:.2e} (bound {bound:.2e}); grad f0 = {:.6e} vs (eta_d/eta_g) v0 = {:.6e}, err {grad_err:.2e}; {secs:.2}s",
            w.velocity,
            w.residual.abs(),
            esc.max_deviation,
            g[0],
            claimed[0]
        ),
    )
}

fn c7_cross_validation() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let (mut agree, mut total) = (0, 0);
    let mut mismatches = Vec::new();
    while total < 50 {
        let d = rng.random_range(1..=3);
        let n = if rng.random_bool(0.5) {
            1
        } else {
            rng.random_range(2..=4)
        };
        let sigma = 10f64.powf(rng.random_range(-0.5..0.5));
        let gen_masses: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.5)).collect();
        let total_q: f64 = gen_masses.iter().sum();
        let p = total_q * rng.random_range(0.5..1.5);
        let lambda = 10f64.powf(rng.random_range(-3.0..-1.0));
        let mu = 10f64.powf(rng.random_range(-0.3..0.3));
        let sys = RegionSystem::new(
            vec![0.0; d],
            p,
            gen_masses,
            KernelSpec::exact(sigma),
            lambda,
            mu,
        )
        .unwrap();
        let (va, cond) = classify_analytic(&sys).unwrap();
        if cond == Condition::Boundary {
            continue;
        }
        total += 1;
        let vn = classify_numeric(&sys, &sys.collapsed()).unwrap().verdict;
        if va == vn {
            agree += 1;
        } else {
            mismatches.push(format!("{cond:?}: {va:?} vs {vn:?}"));
        }
    }
    check(
        agree == total,
        format!("{agree}/{total} agree {mismatches:?}"),
    )
}

fn c8_derivatives() -> Outcome {
    let specs = [
        KernelSpec::exact(0.8),
        KernelSpec::multiscale(vec![0.5, 1.0, 2.0]),
        KernelSpec::rff(1.0, 200, 3),
        KernelSpec::rff_multiscale(vec![0.5, 2.0], 100, 4),
    ];
    let d = 3;
    let h = 1e-5;
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let (mut worst_rel, mut worst_abs) = (0.0f64, 0.0f64);
    for spec in &specs {
        let k = Kernel::new(spec, d).unwrap();
        let sigma = spec.widths()[0];
        for _ in 0..50 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            // offsets of order sigma keep gradients away from zero
            let r = sigma * rng.random_range(0.3..2.0);
            let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nd = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, u)| a + r * u / nd).collect();
            let bump = |v: &[f64], i: usize, s: f64| {
                let mut w = v.to_vec();
                w[i] += s;
                w
            };
            let g = k.grad_x(&x, &y).unwrap();
            let fd: Vec<f64> = (0..d)
                .map(|i| {
                    (k.eval(&bump(&x, i, h), &y).unwrap() - k.eval(&bump(&x, i, -h), &y).unwrap())
                        / (2.0 * h)
                })
                .collect();
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst_rel = worst_rel.max(dist(&g, &fd) / gn);
            let hx = k.hess_xx(&x, &y).unwrap();
            let hc = k.cross_hess(&x, &y).unwrap();
            for i in 0..d {
                let gp = k.grad_x(&bump(&x, i, h), &y).unwrap();
                let gm = k.grad_x(&bump(&x, i, -h), &y).unwrap();
                let yp = k.grad_x(&x, &bump(&y, i, h)).unwrap();
                let ym = k.grad_x(&x, &bump(&y, i, -h)).unwrap();
                for a in 0..d {
                    worst_abs = worst_abs.max((hx[(a, i)] - (gp[a] - gm[a]) / (2.0 * h)).abs());
                    worst_abs = worst_abs.max((hc[(a, i)] - (yp[a] - ym[a]) / (2.0 * h)).abs());
                }
            }
        }
    }
    check(
        worst_rel < 1e-6 && worst_abs < 1e-4,
        format!("gradient rel err {worst_rel:.1e}, hessian abs err {worst_abs:.1e} over 4 variants x 50 inputs"),
    )
}

fn c9_rff_fidelity() -> Outcome {
    let approx = Kernel::new(&KernelSpec::rff(1.0, 1000, 42), 2).unwrap();
    let exact = Kernel::new(&KernelSpec::exact(1.0), 2).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let r = rng.random_range(0.0..3.0);
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let y = vec![x[0] + r * a.cos(), x[1] + r * a.sin()];
        worst = worst.max((approx.eval(&x, &y).unwrap() - exact.eval(&x, &y).unwrap()).abs());
    }
    check(worst < 0.1, format!("max |K_rff - K| = {worst:.4}"))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn c10_transport() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for n in 1..=5 {
        let perms = permutations(n);
        for _ in 0..20 {
            let pts = |rng: &mut ChaCha20Rng| -> Vec<Vec<f64>> {
                (0..n)
                    .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                    .collect()
            };
            let (a, b) = (pts(&mut rng), pts(&mut rng));
            let brute = perms
                .iter()
                .map(|p| (0..n).map(|i| dist(&a[i], &b[p[i]]).powi(2)).sum::<f64>() / n as f64)
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            let w = wasserstein2(
                &DiscreteDistribution::uniform(a).unwrap(),
                &DiscreteDistribution::uniform(b).unwrap(),
            )
            .unwrap();
            worst = worst.max((w - brute).abs());
        }
    }
    let mut violations = 0;
    let random_dist = |rng: &mut ChaCha20Rng| {
        let n = rng.random_range(1..=5);
        let pts = (0..n)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let m = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        DiscreteDistribution::new(pts, m).unwrap()
    };
    for _ in 0..50 {
        let (p, q, r) = (
            random_dist(&mut rng),
            random_dist(&mut rng),
            random_dist(&mut rng),
        );
        let pq = wasserstein2(&p, &q).unwrap();
        let qp = wasserstein2(&q, &p).unwrap();
        let qr = wasserstein2(&q, &r).unwrap();
        let pr = wasserstein2(&p, &r).unwrap();
        let pp = wasserstein2(&p, &p).unwrap();
        if pq < 0.0 || (pq - qp).abs() > 1e-9 || pr > pq + qr + 1e-9 || pp > 1e-9 {
            violations += 1;
        }
    }
    check(
        worst < 1e-9 && violations == 0,
        format!("max |W2 - brute force| = {worst:.1e}; metric axiom violations {violations}/50"),
    )
}

fn c11_loss_identity() -> Outcome {
    let (sigma, lambda) = (1.0, 0.01);
    let spec = KernelSpec::exact(sigma);
    let kernel = Kernel::new(&spec, 1).unwrap();
    let cfg = TrainConfig {
        eta_d: 1e-3,
        lambda,
        ..TrainConfig::default()
    };
    let mut errs = Vec::new();
    for r in [0.5, 1.0, 2.0] {
        let (x, y) = (vec![0.0], vec![r]);
        let mut state = DiscriminatorState::History(History::new());
        // rho^steps = e^-100
        for _ in 0..10_000_000 {
            discriminator_step(
                &mut state,
                &kernel,
                std::slice::from_ref(&x),
                &[1.0],
                std::slice::from_ref(&y),
                &[1.0],
                &cfg,
            )
            .unwrap();
        }
        let p_g = DiscreteDistribution::uniform(vec![y.clone()]).unwrap();
        let loss = generator_loss(&state, &kernel, &p_g).unwrap();
        let closed = (1.0 - (-r * r / (2.0 * sigma * sigma)).exp()) / lambda;
        let via_kernel = converged_generator_loss(&x, &y, &spec, lambda).unwrap();
        errs.push((loss - closed).abs().max((via_kernel - closed).abs()));
    }
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    check(
        worst < 1e-4,
        format!(
            "errors {:?}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    )
}

fn desk_sweep() -> (SweepResult, f64) {
    let start = Instant::now();
    let result = run_sweep(&ExperimentConfig::desk()).unwrap();
    (result, start.elapsed().as_secs_f64())
}

fn c12_trends(result: &SweepResult, secs: f64) -> Outcome {
    let s = &result.summary;
    let frac = |i: usize| s[i].mean_divergence_fraction.unwrap_or(f64::NAN);
    let beta = |i: usize| s[i].median_beta.unwrap_or(f64::NAN);
    check(
        frac(0) > frac(1) && beta(1) < beta(0).min(beta(2)) && secs < 900.0,
        format!(
            "divergence fraction {:.3}/{:.3}/{:.3}, median beta {:.3}/{:.3}/{:.3} at sigma 0.05/0.5/5; {secs:.0}s",
            frac(0),
            frac(1),
            frac(2),
            beta(0),
            beta(1),
            beta(2)
        ),
    )
}

fn c13_concat() -> Outcome {
    let r = run_concat_experiment(&ConcatConfig::default()).map_err(|e| e.to_string())?;
    let f: Vec<f64> = r.curves.iter().map(|c| c.final_distance).collect();
    let starts_ok = r.curves.iter().all(|c| c.distance[0] == 10.0);
    check(
        starts_ok && f[3] < f[2] && f[0] > 1.0,
        format!(
            "final distance sigma 0.1={:.3} 1={:.3} 10={:.3} concatenated={:.3}",
            f[0], f[1], f[2], f[3]
        ),
    )
}

fn c14_determinism(first: &SweepResult) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    emit_outputs(first, &a).map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(2)
        .build()
        .map_err(|e| e.to_string())?;
    let second = pool
        .install(|| run_sweep(&ExperimentConfig::desk()))
        .map_err(|e| e.to_string())?;
    emit_outputs(&second, &b).map_err(|e| e.to_string())?;
    let ca = std::fs::read(a.join("sweep.csv")).map_err(|e| e.to_string())?;
    let cb = std::fs::read(b.join("sweep.csv")).map_err(|e| e.to_string())?;
    check(
        ca == cb,
        format!(
            "sweep.csv {} bytes, identical across {} and 2 threads: {}",
            ca.len(),
            rayon::current_num_threads(),
            ca == cb
        ),
    )
}

/// Numeric arguments select criteria, e.g. `cargo test --test acceptance -- 1 4`.
fn selected(id: usize) -> bool {
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    only.is_empty() || only.contains(&id) || (id == 12 && only.contains(&14))
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    if !selected(id) {
        return true;
    }
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, ok) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("{tag} criterion {id:>2} {name}: {detail} [{secs:.1}s]");
    ok
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = Vec::new();
    let mut record = |id: usize, ok: bool| {
        if !ok {
            failed.push(id);
        }
    };
    record(1, run(1, "positive excess is stable", c1_positive_excess));
    record(2, run(2, "negative excess is unstable", c2_negative_excess));
    record(3, run(3, "single point boundary", c3_dirac_boundary));
    record(4, run(4, "support matching", c4_support));
    record(5, run(5, "approximate mode collapse", c5_bad_minimum));
    record(6, run(6, "divergence witness", c6_divergence));
    record(7, run(7, "analytic vs numeric", c7_cross_validation));
    record(8, run(8, "kernel derivatives", c8_derivatives));
    record(9, run(9, "random feature fidelity", c9_rff_fidelity));
    record(10, run(10, "optimal transport", c10_transport));
    record(11, run(11, "converged loss identity", c11_loss_identity));
    let mut sweep = None;
    record(
        12,
        run(12, "kernel width trends", || {
            let (result, secs) = desk_sweep();
            let out = c12_trends(&result, secs);
            sweep = Some(result);
            out
        }),
    );
    record(13, run(13, "multiscale kernel", c13_concat));
    record(
        14,
        run(14, "sweep determinism", || match &sweep {
            Some(r) => c14_determinism(r),
            None => Err("criterion 12 sweep did not complete".into()),
        }),
    );
    drop(record);
    if failed.is_empty() {
        println!("all selected criteria passed");
    } else {
        println!("{} criteria failed: {failed:?}", failed.len());
        if std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
