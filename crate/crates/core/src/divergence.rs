//! Self-propelled escape of an isolated generated point.
//!
//! A generated point with no true point nearby only sees its own history in
//! the discriminator. For a translation-invariant kernel `K = phi(|x - x'|)`
//! there is a velocity `v0 > 0` at which the point moves in a straight line
//! forever, `y_k = y_0 + k v0 u`, provided
//!
//! ```text
//! F(v) = v + eta_g eta_d sum_{j >= 0} rho^j phi'(j v) = 0,   rho = 1 - eta_d lambda.
//! ```
//!
//! The discriminator that sustains the motion is
//! `f^k(x) = -eta_d sum_j rho^j phi(|x - y_0 - (k - 1 - j) v0 u|)`.

use serde::Serialize;

use crate::dynamics::{
    DiscriminatorState, History, HistoryTerm, Simulator, TermClass, TrainConfig,
};
use crate::error::{Error, Result};
use crate::kernels::{norm, Kernel, KernelSpec};

/// Series terms beyond this are never summed.
const MAX_TERMS: usize = 100_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceWitness {
    pub kernel: KernelSpec,
    pub initial_point: Vec<f64>,
    pub direction: Vec<f64>,
    pub velocity: f64,
    pub rho: f64,
    pub eta_d: f64,
    pub eta_g: f64,
    pub lambda: f64,
    /// Last series index summed when evaluating `F(v0)`.
    pub j_max: usize,
    /// Bound on the dropped part of `F(v0)`.
    pub tail_bound: f64,
    pub residual: f64,
    /// Brackets of further sign changes found by the scan.
    pub other_brackets: Vec<[f64; 2]>,
}

fn widths(spec: &KernelSpec) -> Result<Vec<f64>> {
    if !spec.is_exact() {
        return Err(Error::InvalidInput(
            "divergence analysis needs an exact radial kernel".into(),
        ));
    }
    spec.validate()?;
    Ok(spec.widths())
}

fn phi(ws: &[f64], r: f64) -> f64 {
    ws.iter().map(|s| (-r * r / (2.0 * s * s)).exp()).sum()
}

fn dphi(ws: &[f64], r: f64) -> f64 {
    ws.iter()
        .map(|s| -(r / (s * s)) * (-r * r / (2.0 * s * s)).exp())
        .sum()
}

/// `sup |phi'|`, attained at `r = sigma` for each width.
fn dphi_sup(ws: &[f64]) -> f64 {
    ws.iter().map(|s| (-0.5f64).exp() / s).sum()
}

/// Bound on `sum_{j > J} rho^j |phi'(j v)|`: the smaller of the geometric bound
/// and, once `J v` is past every width (where `|phi'|` decreases), the integral
/// bound `phi(J v) / v`.
fn series_tail(ws: &[f64], v: f64, rho: f64, j: usize) -> f64 {
    let sigma_max = ws.iter().cloned().fold(0.0, f64::max);
    let geometric = if rho < 1.0 {
        rho.powf(j as f64 + 1.0) / (1.0 - rho) * dphi_sup(ws)
    } else {
        f64::INFINITY
    };
    let r = j as f64 * v;
    let gaussian = if r >= sigma_max {
        phi(ws, r) / v
    } else {
        f64::INFINITY
    };
    geometric.min(gaussian)
}

#[derive(Clone, Copy, Debug)]
struct Residual {
    value: f64,
    j_max: usize,
    tail: f64,
}

/// `F(v)` summed until the tail is below `tol`; with `sign_only`, stops as
/// soon as the sign is certain (every `phi'` term is non-positive, so partial
/// sums only decrease).
fn residual(ws: &[f64], v: f64, rho: f64, eta: f64, tol: f64, sign_only: bool) -> Result<Residual> {
    let mut sum = 0.0;
    let mut w = 1.0;
    let mut j = 0usize;
    loop {
        sum += w * dphi(ws, j as f64 * v);
        let value = v + eta * sum;
        let tail = eta * series_tail(ws, v, rho, j);
        if tail <= tol || (sign_only && (value < 0.0 || value - tail > 0.0)) {
            return Ok(Residual {
                value,
                j_max: j,
                tail,
            });
        }
        j += 1;
        w *= rho;
        if j > MAX_TERMS {
            return Err(Error::InvalidInput(format!(
                "velocity series did not converge within {MAX_TERMS} terms at v = {v:e}"
            )));
        }
    }
}

fn residual_tol(v: f64) -> f64 {
    1e-16 * v.max(1e-300)
}

/// `F(v, rho)` for the radial profile of `spec`.
pub fn velocity_residual(
    v: f64,
    rho: f64,
    spec: &KernelSpec,
    eta_g: f64,
    eta_d: f64,
) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::InvalidInput("velocity must be positive".into()));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidInput("rho must lie in (0, 1]".into()));
    }
    let ws = widths(spec)?;
    Ok(residual(&ws, v, rho, eta_g * eta_d, residual_tol(v), false)?.value)
}

/// Smallest positive root of `F`, bracketed on the grid `sigma 2^m`, `m = -30..=10`.
#[allow(clippy::type_complexity)]
pub fn solve_velocity(
    rho: f64,
    spec: &KernelSpec,
    eta_g: f64,
    eta_d: f64,
) -> Result<(f64, usize, f64, f64, Vec<[f64; 2]>)> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidInput("rho must lie in (0, 1]".into()));
    }
    let ws = widths(spec)?;
    let eta = eta_g * eta_d;
    let sigma = ws.iter().cloned().fold(0.0, f64::max);
    let grid: Vec<f64> = (-30..=10).map(|m| sigma * 2f64.powi(m)).collect();
    let mut signs = Vec::with_capacity(grid.len());
    for &v in &grid {
        let r = residual(&ws, v, rho, eta, residual_tol(v), true)?;
        signs.push(r.value >= 0.0);
    }
    let mut brackets = Vec::new();
    for i in 1..grid.len() {
        if !signs[i - 1] && signs[i] {
            brackets.push([grid[i - 1], grid[i]]);
        }
    }
    let Some(&[mut lo, mut hi]) = brackets.first() else {
        return Err(Error::NoDivergenceVelocity(format!(
            "F has no sign change on [{:e}, {:e}]",
            grid[0],
            grid[grid.len() - 1]
        )));
    };
    let mut best = residual(&ws, hi, rho, eta, residual_tol(hi), false)?;
    let mut v = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = residual(&ws, mid, rho, eta, residual_tol(mid), false)?;
        if r.value.abs() < best.value.abs() {
            best = r;
            v = mid;
        }
        if r.value < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if r.value.abs() < 1e-15 * mid.max(1.0) {
            break;
        }
    }
    if !(best.value.abs() < 1e-12 * v.max(1.0)) {
        return Err(Error::NoDivergenceVelocity(format!(
            "bisection stalled with residual {:e}",
            best.value
        )));
    }
    Ok((v, best.j_max, best.tail, best.value, brackets[1..].to_vec()))
}

impl DivergenceWitness {
    /// Solves for the escape velocity of a point starting at `initial_point` along `direction`.
    pub fn solve(
        spec: &KernelSpec,
        initial_point: Vec<f64>,
        direction: Vec<f64>,
        eta_d: f64,
        eta_g: f64,
        lambda: f64,
    ) -> Result<Self> {
        if initial_point.len() != direction.len() || direction.is_empty() {
            return Err(Error::InvalidInput(
                "point and direction dimensions differ".into(),
            ));
        }
        let n = norm(&direction);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput("direction must be nonzero".into()));
        }
        let direction: Vec<f64> = direction.iter().map(|v| v / n).collect();
        let rho = 1.0 - eta_d * lambda;
        let (velocity, j_max, tail_bound, residual, other_brackets) =
            solve_velocity(rho, spec, eta_g, eta_d)?;
        Ok(Self {
            kernel: spec.clone(),
            initial_point,
            direction,
            velocity,
            rho,
            eta_d,
            eta_g,
            lambda,
            j_max,
            tail_bound,
            residual,
            other_brackets,
        })
    }

    pub fn dim(&self) -> usize {
        self.initial_point.len()
    }

    /// `y_0 + k v0 u`.
    pub fn position(&self, k: f64) -> Vec<f64> {
        self.initial_point
            .iter()
            .zip(&self.direction)
            .map(|(x, u)| x + k * self.velocity * u)
            .collect()
    }

    /// Number of history terms needed so that, for evaluation points ahead of
    /// the trail (`(x - y_k) . u >= 0`), the dropped terms contribute below `tol`.
    pub fn history_terms(&self, tol: f64) -> Result<usize> {
        let ws = widths(&self.kernel)?;
        let v = self.velocity;
        let mut j = 0usize;
        loop {
            // terms j' > j sit at distance >= (j' + 1) v behind the point
            let a = (j as f64 + 2.0) * v;
            let gaussian: f64 = ws
                .iter()
                .map(|s| s * s / (a * v) * (-a * a / (2.0 * s * s)).exp())
                .sum::<f64>()
                + phi(&ws, a);
            let geometric = if self.rho < 1.0 {
                self.rho.powf(j as f64 + 1.0) / (1.0 - self.rho) * ws.len() as f64
            } else {
                f64::INFINITY
            };
            if self.eta_d * gaussian.min(geometric) < tol {
                return Ok(j + 1);
            }
            j += 1;
            if j > MAX_TERMS {
                return Err(Error::InvalidInput(
                    "witness history does not converge".into(),
                ));
            }
        }
    }
}

/// `f^k` as a truncated history (dropped tail below `1e-13` ahead of the point).
pub fn build_divergent_discriminator_at(
    w: &DivergenceWitness,
    k: usize,
) -> Result<DiscriminatorState> {
    let terms = w.history_terms(1e-13)?;
    let mut out = Vec::with_capacity(terms);
    let mut c = w.eta_d;
    for j in 0..terms {
        out.push(HistoryTerm {
            coef: -c,
            center: w.position(k as f64 - 1.0 - j as f64),
            class: TermClass::Fixed,
        });
        c *= w.rho;
    }
    // oldest first, like a history built step by step
    out.reverse();
    Ok(DiscriminatorState::History(History::from_terms(out)))
}

/// The initial discriminator `f^0`.
pub fn build_divergent_discriminator(w: &DivergenceWitness) -> Result<DiscriminatorState> {
    build_divergent_discriminator_at(w, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscapeReport {
    pub steps: usize,
    /// `max_k |y_k - (y_0 + k v0 u)|`.
    pub max_deviation: f64,
    /// Largest angle between a displacement `y_k - y_0` and `u`.
    pub max_angle: f64,
    pub trajectory: Vec<Vec<f64>>,
}

/// Runs the isolated-point system (unit generated mass, no true point) from
/// `(f^0, y_0)` and measures the deviation from the straight line.
pub fn verify_linear_escape(w: &DivergenceWitness, steps: usize) -> Result<EscapeReport> {
    verify_escape_with_velocity(w, w.velocity, steps)
}

/// As [`verify_linear_escape`], but the comparison line uses `velocity`
/// (useful for checking that a wrong velocity drifts).
pub fn verify_escape_with_velocity(
    w: &DivergenceWitness,
    velocity: f64,
    steps: usize,
) -> Result<EscapeReport> {
    let kernel = Kernel::new(&w.kernel, w.dim())?;
    let mut state = build_divergent_discriminator(w)?;
    if velocity != w.velocity {
        let mut alt = w.clone();
        alt.velocity = velocity;
        state = build_divergent_discriminator(&alt)?;
    }
    let cfg = TrainConfig {
        eta_d: w.eta_d,
        eta_g: w.eta_g,
        lambda: w.lambda,
        steps,
        snapshot_every: 1,
        prune_tol: 0.0,
        ..TrainConfig::default()
    };
    let mut sim = Simulator::new(&kernel, &[], &[], vec![1.0], &cfg, state)?;
    let mut pts = vec![w.initial_point.clone()];
    let mut traj = vec![w.initial_point.clone()];
    let mut max_dev: f64 = 0.0;
    let mut max_angle: f64 = 0.0;
    for k in 1..=steps {
        sim.step(&mut pts)?;
        let expected: Vec<f64> = w
            .initial_point
            .iter()
            .zip(&w.direction)
            .map(|(x, u)| x + k as f64 * velocity * u)
            .collect();
        let dev: Vec<f64> = pts[0].iter().zip(&expected).map(|(a, b)| a - b).collect();
        max_dev = max_dev.max(norm(&dev));
        let disp: Vec<f64> = pts[0]
            .iter()
            .zip(&w.initial_point)
            .map(|(a, b)| a - b)
            .collect();
        let dn = norm(&disp);
        let cos = crate::kernels::dot(&disp, &w.direction) / dn;
        max_angle = max_angle.max(cos.clamp(-1.0, 1.0).acos());
        traj.push(pts[0].clone());
    }
    Ok(EscapeReport {
        steps,
        max_deviation: max_dev,
        max_angle,
        trajectory: traj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_limits() {
        let spec = KernelSpec::exact(1.0);
        let big = velocity_residual(1e3, 0.999, &spec, 1e-3, 1e-3).unwrap();
        assert!((big - 1e3).abs() < 1e-9);
        let small = velocity_residual(1e-4, 1.0, &spec, 1e-3, 1e-3).unwrap();
        let smaller = velocity_residual(3e-5, 1.0, &spec, 1e-3, 1e-3).unwrap();
        assert!(small < 0.0 && smaller < small);
    }

    #[test]
    fn first_term_vanishes() {
        assert_eq!(dphi(&[1.0], 0.0), 0.0);
        assert_eq!(dphi(&[0.5, 2.0], 0.0), 0.0);
    }

    #[test]
    fn large_lambda_has_no_velocity() {
        let spec = KernelSpec::exact(1.0);
        assert!(matches!(
            solve_velocity(0.5, &spec, 1e-3, 1e-3),
            Err(Error::NoDivergenceVelocity(_))
        ));
    }

    #[test]
    fn velocity_brackets_a_sign_change() {
        let spec = KernelSpec::exact(1.0);
        let rho = 1.0 - 1e-6;
        let (v, ..) = solve_velocity(rho, &spec, 1e-3, 1e-3).unwrap();
        let e = 1e-9 * v;
        assert!(velocity_residual(v - e, rho, &spec, 1e-3, 1e-3).unwrap() < 0.0);
        assert!(velocity_residual(v + e, rho, &spec, 1e-3, 1e-3).unwrap() > 0.0);
    }

    #[test]
    fn trail_decays_geometrically() {
        let w = DivergenceWitness::solve(
            &KernelSpec::exact(1.0),
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            1e-3,
            1e-3,
            1e-3,
        )
        .unwrap();
        let f = build_divergent_discriminator(&w).unwrap();
        let h = f.history().unwrap().terms();
        let n = h.len();
        // newest term last; coefficients shrink by rho going back in time
        assert!((h[n - 2].coef / h[n - 1].coef - w.rho).abs() < 1e-15);
        assert_eq!(h[n - 1].coef, -w.eta_d);
    }
}
