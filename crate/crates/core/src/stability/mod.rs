//! Local stability of equilibria around a single true point.
//!
//! Near an isolated true point `x` with mass `p` and generated points `y_j`
//! with masses `q_j`, the dynamics reduce to a system whose equilibria are the
//! critical points of the restricted MMD
//!
//! ```text
//! J(Y) = p^2 K(x, x) / 2 - sum_j p q_j K(x, y_j) + sum_jk q_j q_k K(y_j, y_k) / 2
//! ```
//!
//! with discriminator `f* = (p K(., x) - sum_j q_j K(., y_j)) / lambda`. Linearizing
//! gives the quadratic eigenproblem `det((s + lambda)(sI + Q) + R) = 0`; its roots
//! decide local stability for small step sizes.

mod bad_min;
mod qep;

pub use bad_min::{check_ksep, find_bad_minimum, ring_configuration, ring_radius, BadMinOptions};
pub use qep::{psi_det, psi_roots};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    assign_regions, DiscreteDistribution, DiscriminatorState, History, HistoryTerm, Simulator,
    TermClass, TrainConfig,
};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{norm, Kernel, KernelSpec};

/// One true point and the generated masses in its neighborhood.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSystem {
    pub true_point: Vec<f64>,
    pub true_mass: f64,
    pub gen_masses: Vec<f64>,
    pub kernel: KernelSpec,
    pub lambda: f64,
    pub mu: f64,
}

impl RegionSystem {
    pub fn new(
        true_point: Vec<f64>,
        true_mass: f64,
        gen_masses: Vec<f64>,
        kernel: KernelSpec,
        lambda: f64,
        mu: f64,
    ) -> Result<Self> {
        let sys = Self {
            true_point,
            true_mass,
            gen_masses,
            kernel,
            lambda,
            mu,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if self.true_point.is_empty() {
            return Err(Error::InvalidInput("true point has dimension 0".into()));
        }
        if self.gen_masses.is_empty() {
            return Err(Error::InvalidInput("region has no generated points".into()));
        }
        if !(self.true_mass > 0.0) || self.gen_masses.iter().any(|q| !(*q > 0.0)) {
            return Err(Error::InvalidInput("masses must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput("lambda must be nonnegative".into()));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidInput("mu must be positive".into()));
        }
        if !self.kernel.is_exact() {
            return Err(Error::InvalidInput(
                "stability analysis needs an exact (rbf or multiscale) kernel".into(),
            ));
        }
        self.kernel.validate()
    }

    pub fn dim(&self) -> usize {
        self.true_point.len()
    }

    pub fn len(&self) -> usize {
        self.gen_masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gen_masses.is_empty()
    }

    /// `p - sum_j q_j`.
    pub fn excess(&self) -> f64 {
        self.true_mass - self.gen_masses.iter().sum::<f64>()
    }

    pub fn build_kernel(&self) -> Result<Kernel> {
        Kernel::new(&self.kernel, self.dim())
    }

    /// Every generated point placed on the true point.
    pub fn collapsed(&self) -> Vec<Vec<f64>> {
        vec![self.true_point.clone(); self.len()]
    }

    fn check_points(&self, pts: &[Vec<f64>]) -> Result<()> {
        if pts.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} generated points, got {}",
                self.len(),
                pts.len()
            )));
        }
        for p in pts {
            check_dim(self.dim(), p.len())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Indeterminate,
}

/// Which analytic criterion produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Positive excess mass.
    PositiveExcess,
    /// Negative excess shared by two or more generated points.
    NegativeExcess,
    /// Single generated point, damping/curvature bound positive.
    SinglePointStable,
    /// Single generated point, damping/curvature bound negative.
    SinglePointUnstable,
    Boundary,
    NumericOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub condition: Condition,
    pub equilibrium: Vec<Vec<f64>>,
    /// Roots of `psi` as `[re, im]`.
    pub eigenvalues: Vec<[f64; 2]>,
    pub max_real_part: f64,
    /// Largest root with negligible imaginary part, if any.
    pub max_real_root: Option<f64>,
    pub tol_root: f64,
    /// Distance of each generated point to the true point, in units of the largest width.
    pub distances_sigma: Vec<f64>,
    pub restricted_mmd: f64,
    pub gradient_norm: f64,
    /// Analytic verdict for the same system, when the analytic criteria apply.
    pub analytic: Option<Verdict>,
}

/// Restricted MMD `J` of one region.
pub fn restricted_mmd(sys: &RegionSystem, pts: &[Vec<f64>]) -> Result<f64> {
    sys.check_points(pts)?;
    let k = sys.build_kernel()?;
    Ok(restricted_mmd_with(sys, &k, pts))
}

fn restricted_mmd_with(sys: &RegionSystem, k: &Kernel, pts: &[Vec<f64>]) -> f64 {
    let x = &sys.true_point;
    let p = sys.true_mass;
    let mut j = 0.5 * p * p * k.eval_unchecked(x, x);
    for (y, q) in pts.iter().zip(&sys.gen_masses) {
        j -= p * q * k.eval_unchecked(x, y);
    }
    for (y1, q1) in pts.iter().zip(&sys.gen_masses) {
        for (y2, q2) in pts.iter().zip(&sys.gen_masses) {
            j += 0.5 * q1 * q2 * k.eval_unchecked(y1, y2);
        }
    }
    j
}

/// `dJ/dy_j = -p q_j dK(y_j, x) + q_j sum_k q_k dK(y_j, y_k)`, which equals
/// `-lambda q_j grad f*(y_j)`.
pub fn restricted_mmd_grad(sys: &RegionSystem, pts: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    sys.check_points(pts)?;
    let k = sys.build_kernel()?;
    Ok(restricted_mmd_grad_with(sys, &k, pts))
}

fn restricted_mmd_grad_with(sys: &RegionSystem, k: &Kernel, pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = sys.dim();
    pts.iter()
        .zip(&sys.gen_masses)
        .map(|(y, q)| {
            let mut g = vec![0.0; d];
            k.accumulate_grad(y, &sys.true_point, -sys.true_mass * q, &mut g);
            for (z, qk) in pts.iter().zip(&sys.gen_masses) {
                k.accumulate_grad(y, z, q * qk, &mut g);
            }
            g
        })
        .collect()
}

/// Full `Nd x Nd` Hessian of `J`.
pub fn restricted_mmd_hessian(sys: &RegionSystem, pts: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    sys.check_points(pts)?;
    let k = sys.build_kernel()?;
    Ok(restricted_mmd_hessian_with(sys, &k, pts))
}

fn restricted_mmd_hessian_with(sys: &RegionSystem, k: &Kernel, pts: &[Vec<f64>]) -> DMatrix<f64> {
    let (n, d) = (sys.len(), sys.dim());
    let mut h = DMatrix::zeros(n * d, n * d);
    let q = &sys.gen_masses;
    for j in 0..n {
        let mut block = DMatrix::zeros(d, d);
        k.accumulate_hess(&pts[j], &sys.true_point, -sys.true_mass * q[j], &mut block);
        for kk in 0..n {
            if kk != j {
                k.accumulate_hess(&pts[j], &pts[kk], q[j] * q[kk], &mut block);
            }
        }
        h.view_mut((j * d, j * d), (d, d)).copy_from(&block);
        for kk in 0..n {
            if kk != j {
                let c =
                    k.cross_hess(&pts[j], &pts[kk]).expect("dimensions checked") * (q[j] * q[kk]);
                h.view_mut((j * d, kk * d), (d, d)).copy_from(&c);
            }
        }
    }
    h
}

/// Equilibrium discriminator `f* = (p K(., x) - sum_j q_j K(., y_j)) / lambda` in history form.
pub fn equilibrium_discriminator(
    sys: &RegionSystem,
    pts: &[Vec<f64>],
) -> Result<DiscriminatorState> {
    sys.check_points(pts)?;
    if sys.lambda <= 0.0 {
        return Err(Error::ZeroRegularization);
    }
    let mut terms = vec![HistoryTerm {
        coef: sys.true_mass / sys.lambda,
        center: sys.true_point.clone(),
        class: TermClass::TruePoint(0),
    }];
    for (j, (y, q)) in pts.iter().zip(&sys.gen_masses).enumerate() {
        terms.push(HistoryTerm {
            coef: -q / sys.lambda,
            center: y.clone(),
            class: TermClass::Generated(j),
        });
    }
    Ok(DiscriminatorState::History(History::from_terms(terms)))
}

/// `lambda * Hess f*(y)`, which stays finite as `lambda -> 0`.
fn scaled_hessian(sys: &RegionSystem, k: &Kernel, pts: &[Vec<f64>], y: &[f64]) -> DMatrix<f64> {
    let d = sys.dim();
    let mut h = DMatrix::zeros(d, d);
    k.accumulate_hess(y, &sys.true_point, sys.true_mass, &mut h);
    for (z, q) in pts.iter().zip(&sys.gen_masses) {
        k.accumulate_hess(y, z, -q, &mut h);
    }
    h
}

/// Linearization blocks: `Q_jj = -mu q_j Hess f*(y_j)`, `R_jk = mu q_j q_k d2K/dy dy'(y_j, y_k)`.
///
/// With `lambda = 0` an equilibrium exists only where `f*` vanishes to second
/// order; then `Q = 0`, otherwise this is an error.
pub fn assemble_qr(sys: &RegionSystem, pts: &[Vec<f64>]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    sys.check_points(pts)?;
    let k = sys.build_kernel()?;
    let (n, d) = (sys.len(), sys.dim());
    let q = &sys.gen_masses;
    let mut qm = DMatrix::zeros(n * d, n * d);
    let mut rm = DMatrix::zeros(n * d, n * d);
    for j in 0..n {
        let lh = scaled_hessian(sys, &k, pts, &pts[j]);
        let block = if sys.lambda > 0.0 {
            lh * (-sys.mu * q[j] / sys.lambda)
        } else {
            let scale = sys.true_mass * k.constants().0;
            if lh.amax() > 1e-12 * scale {
                return Err(Error::ZeroRegularization);
            }
            DMatrix::zeros(d, d)
        };
        qm.view_mut((j * d, j * d), (d, d)).copy_from(&block);
        for kk in 0..n {
            let c = k.cross_hess(&pts[j], &pts[kk])? * (sys.mu * q[j] * q[kk]);
            rm.view_mut((j * d, kk * d), (d, d)).copy_from(&c);
        }
    }
    Ok((qm, rm))
}

/// Sign-based classification with the analytic criteria, in order: positive
/// excess; negative excess with several points; then the single-point bounds.
pub fn classify_analytic(sys: &RegionSystem) -> Result<(Verdict, Condition)> {
    sys.validate()?;
    let delta = sys.excess();
    let n = sys.len();
    if delta > 0.0 {
        return Ok((Verdict::Stable, Condition::PositiveExcess));
    }
    if delta < 0.0 && n >= 2 {
        return Ok((Verdict::Unstable, Condition::NegativeExcess));
    }
    if n == 1 {
        let (k1, k2, k3, k4) = sys.build_kernel()?.constants();
        let q = sys.gen_masses[0];
        let l2 = sys.lambda * sys.lambda;
        let lower = sys.mu * delta * k1 * q + l2.min(sys.mu * q * q * k3);
        if lower > 0.0 {
            return Ok((Verdict::Stable, Condition::SinglePointStable));
        }
        let upper = sys.mu * delta * k2 * q + l2.min(sys.mu * q * q * k4);
        if upper < 0.0 {
            return Ok((Verdict::Unstable, Condition::SinglePointUnstable));
        }
    }
    Ok((Verdict::Indeterminate, Condition::Boundary))
}

/// Root tolerance relative to the spectral scale.
fn root_tolerance(roots: &[Complex<f64>], lambda: f64) -> f64 {
    let scale = roots.iter().map(|r| r.norm()).fold(lambda, f64::max);
    1e-9 * scale.max(f64::MIN_POSITIVE)
}

/// Classifies an equilibrium from the roots of `psi`: stable if every root has
/// real part below `-tol`, unstable if one exceeds `+tol`.
pub fn classify_numeric(sys: &RegionSystem, pts: &[Vec<f64>]) -> Result<StabilityReport> {
    sys.validate()?;
    let k = sys.build_kernel()?;
    let (q, r) = assemble_qr(sys, pts)?;
    let roots = psi_roots(&q, &r, sys.lambda)?;
    let tol = root_tolerance(&roots, sys.lambda);
    let max_re = roots.iter().map(|s| s.re).fold(f64::NEG_INFINITY, f64::max);
    let max_real_root = roots
        .iter()
        .filter(|s| s.im.abs() <= tol)
        .map(|s| s.re)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let verdict = if max_re < -tol {
        Verdict::Stable
    } else if max_re > tol {
        Verdict::Unstable
    } else {
        Verdict::Indeterminate
    };
    let sigma = sys.kernel.widths().into_iter().fold(0.0, f64::max);
    let grad = restricted_mmd_grad_with(sys, &k, pts);
    let gnorm = grad.iter().flatten().fold(0.0f64, |a, g| a.max(g.abs()));
    let analytic = {
        let at_true = pts.iter().all(|y| y == &sys.true_point);
        if at_true {
            match classify_analytic(sys)? {
                (_, Condition::Boundary) => None,
                (v, _) => Some(v),
            }
        } else {
            None
        }
    };
    Ok(StabilityReport {
        verdict,
        condition: Condition::NumericOnly,
        equilibrium: pts.to_vec(),
        eigenvalues: roots.iter().map(|s| [s.re, s.im]).collect(),
        max_real_part: max_re,
        max_real_root,
        tol_root: tol,
        distances_sigma: pts
            .iter()
            .map(|y| {
                let diff: Vec<f64> = y.iter().zip(&sys.true_point).map(|(a, b)| a - b).collect();
                norm(&diff) / sigma
            })
            .collect(),
        restricted_mmd: restricted_mmd_with(sys, &k, pts),
        gradient_norm: gnorm,
        analytic,
    })
}

/// Numeric report at the collapsed equilibrium, with the analytic criterion attached.
pub fn classify_collapsed(sys: &RegionSystem) -> Result<StabilityReport> {
    let mut report = classify_numeric(sys, &sys.collapsed())?;
    report.condition = classify_analytic(sys)?.1;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportVerdict {
    pub verdict: Verdict,
    pub region_sizes: Vec<usize>,
    pub excess: Vec<f64>,
    pub region_verdicts: Vec<Option<Verdict>>,
}

/// Stability of a generated distribution sitting on the true support: each
/// occupied true point is classified as a collapsed region.
pub fn check_corollary_support(
    p_r: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    kernel: &KernelSpec,
    lambda: f64,
    mu: f64,
) -> Result<SupportVerdict> {
    check_dim(p_r.dim(), p_g.dim())?;
    let n = p_g.len() as f64;
    if p_g.masses().iter().any(|m| (m - 1.0 / n).abs() > 1e-12) {
        return Err(Error::InvalidInput(
            "generated masses must be uniform".into(),
        ));
    }
    let assignment = assign_regions(p_r, p_g, 1e-12)?;
    if !assignment.unassigned.is_empty() {
        return Err(Error::InvalidInput(
            "generated support is not contained in the true support".into(),
        ));
    }
    let mut region_verdicts = Vec::new();
    for (i, members) in assignment.members.iter().enumerate() {
        if members.is_empty() {
            region_verdicts.push(None);
            continue;
        }
        let sys = RegionSystem::new(
            p_r.points()[i].clone(),
            p_r.masses()[i],
            members.iter().map(|&j| p_g.masses()[j]).collect(),
            kernel.clone(),
            lambda,
            mu,
        )?;
        region_verdicts.push(Some(classify_analytic(&sys)?.0));
    }
    let verdict = if region_verdicts.contains(&Some(Verdict::Unstable)) {
        Verdict::Unstable
    } else if region_verdicts
        .iter()
        .flatten()
        .all(|v| *v == Verdict::Stable)
    {
        Verdict::Stable
    } else {
        Verdict::Indeterminate
    };
    Ok(SupportVerdict {
        verdict,
        region_sizes: assignment.members.iter().map(|m| m.len()).collect(),
        excess: assignment.excess,
        region_verdicts,
    })
}

/// Runs the local joint dynamics of one region from `initial` and returns the
/// largest distance of any generated point to `reference` after each step
/// (index 0 is the initial distance). `cfg.eta_g / cfg.eta_d` must equal `sys.mu`.
pub fn simulate_region(
    sys: &RegionSystem,
    reference: &[Vec<f64>],
    initial: &[Vec<f64>],
    state: DiscriminatorState,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    sys.check_points(reference)?;
    sys.check_points(initial)?;
    if (cfg.mu() - sys.mu).abs() > 1e-12 * sys.mu || (cfg.lambda - sys.lambda).abs() > 0.0 {
        return Err(Error::InvalidInput(
            "training config does not match the region's mu and lambda".into(),
        ));
    }
    let k = sys.build_kernel()?;
    let truth = [sys.true_point.clone()];
    let tm = [sys.true_mass];
    let mut sim = Simulator::new(&k, &truth, &tm, sys.gen_masses.clone(), cfg, state)?;
    let mut pts = initial.to_vec();
    let dist = |pts: &[Vec<f64>]| {
        pts.iter()
            .zip(reference)
            .map(|(a, b)| crate::kernels::sq_dist(a, b).sqrt())
            .fold(0.0, f64::max)
    };
    let mut out = Vec::with_capacity(cfg.steps + 1);
    out.push(dist(&pts));
    for _ in 0..cfg.steps {
        sim.step(&mut pts)?;
        out.push(dist(&pts));
    }
    Ok(out)
}
