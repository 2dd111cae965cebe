//! Local minima of the restricted MMD with several generated points near one
//! true point (approximate mode collapse).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    classify_numeric, restricted_mmd_grad_with, restricted_mmd_hessian_with, restricted_mmd_with,
    RegionSystem, StabilityReport,
};
use crate::error::{Error, Result};
use crate::kernels::{dot, sq_dist, Kernel, KernelSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BadMinOptions {
    /// Largest pairwise cosine between ring directions.
    pub delta: f64,
    /// Stop when `sigma * max |dJ/dy|` falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for BadMinOptions {
    fn default() -> Self {
        Self {
            delta: 0.0,
            grad_tol: 1e-13,
            max_iter: 200_000,
        }
    }
}

fn single_width(sys: &RegionSystem) -> Result<f64> {
    match sys.kernel {
        KernelSpec::ExactRbf { sigma } => Ok(sigma),
        _ => Err(Error::InvalidInput(
            "ring construction needs a single-width rbf kernel".into(),
        )),
    }
}

/// `n` unit vectors in dimension `d` with pairwise cosine at most `delta`.
///
/// In the plane the directions are equally spaced, which is optimal; otherwise
/// a greedy pass over a fixed candidate pool is used and its size is the bound.
pub fn unit_directions(n: usize, d: usize, delta: f64) -> Result<Vec<Vec<f64>>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(
            "need at least one direction and dimension".into(),
        ));
    }
    if d == 1 {
        let all = [vec![1.0], vec![-1.0]];
        let max = if delta >= -1.0 { 2 } else { 1 };
        if n > max {
            return Err(Error::Packing {
                count: n,
                dim: d,
                delta,
                found: max,
            });
        }
        return Ok(all[..n].to_vec());
    }
    if d == 2 {
        let n_max = if delta >= 1.0 {
            usize::MAX
        } else {
            (std::f64::consts::TAU / delta.clamp(-1.0, 1.0).acos() + 1e-12).floor() as usize
        };
        if n > n_max {
            return Err(Error::Packing {
                count: n,
                dim: d,
                delta,
                found: n_max,
            });
        }
        return Ok((0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect());
    }
    let mut pool: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[k] = s;
            pool.push(e);
        }
    }
    if d <= 8 {
        let total = 3usize.pow(d as u32);
        for code in 0..total {
            let mut v = vec![0.0; d];
            let mut c = code;
            for vi in v.iter_mut() {
                *vi = (c % 3) as f64 - 1.0;
                c /= 3;
            }
            let nz = v.iter().filter(|x| **x != 0.0).count();
            if nz >= 2 {
                let s = (nz as f64).sqrt();
                v.iter_mut().for_each(|x| *x /= s);
                pool.push(v);
            }
        }
    }
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    for v in pool {
        if chosen.iter().all(|c| dot(c, &v) <= delta + 1e-15) {
            chosen.push(v);
            if chosen.len() == n {
                return Ok(chosen);
            }
        }
    }
    Err(Error::Packing {
        count: n,
        dim: d,
        delta,
        found: chosen.len(),
    })
}

/// Smallest `r` with `exp(-r^2 (1 - delta)) sum q / 2 <= p exp(-r^2 / 2)`; when the
/// inequality already holds at the origin every radius works and `r = 1` is returned.
pub fn ring_radius(sys: &RegionSystem, delta: f64) -> Result<f64> {
    if !(delta < 0.5) {
        return Err(Error::InvalidInput("delta must be below 1/2".into()));
    }
    let s: f64 = sys.gen_masses.iter().sum();
    let lhs = |r: f64| 0.5 * (-r * r * (1.0 - delta)).exp() * s;
    let rhs = |r: f64| sys.true_mass * (-r * r / 2.0).exp();
    if lhs(0.0) <= rhs(0.0) {
        return Ok(1.0);
    }
    // lhs/rhs is strictly decreasing in r because 1 - delta > 1/2
    let mut hi = 1.0;
    while lhs(hi) > rhs(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidInput("ring radius does not exist".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) > rhs(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Generated points `x + r sigma u_j` on a ring of well-separated directions.
pub fn ring_configuration(sys: &RegionSystem, delta: f64) -> Result<Vec<Vec<f64>>> {
    let sigma = single_width(sys)?;
    let dirs = unit_directions(sys.len(), sys.dim(), delta)?;
    let r = ring_radius(sys, delta)?;
    Ok(dirs
        .iter()
        .map(|u| {
            sys.true_point
                .iter()
                .zip(u)
                .map(|(x, ui)| x + r * sigma * ui)
                .collect()
        })
        .collect())
}

/// `sum_{j != k} q_j q_k K(y_j, y_k) / 2 < p sum_j q_j K(x, y_j)`.
pub fn check_ksep(sys: &RegionSystem, pts: &[Vec<f64>]) -> Result<bool> {
    sys.check_points(pts)?;
    let k = sys.build_kernel()?;
    let q = &sys.gen_masses;
    let mut lhs = 0.0;
    for j in 0..pts.len() {
        for l in 0..pts.len() {
            if j != l {
                lhs += 0.5 * q[j] * q[l] * k.eval_unchecked(&pts[j], &pts[l]);
            }
        }
    }
    let rhs: f64 = pts
        .iter()
        .zip(q)
        .map(|(y, qj)| sys.true_mass * qj * k.eval_unchecked(&sys.true_point, y))
        .sum();
    Ok(lhs < rhs)
}

fn flatten(pts: &[Vec<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        pts.iter().map(|p| p.len()).sum(),
        pts.iter().flatten().copied(),
    )
}

fn unflatten(v: &DVector<f64>, d: usize) -> Vec<Vec<f64>> {
    v.as_slice().chunks(d).map(|c| c.to_vec()).collect()
}

/// Descends the restricted MMD from the ring configuration, then classifies the
/// minimum through the linearized dynamics.
///
/// Armijo gradient descent makes the bulk of the progress; once it can no
/// longer decrease `J` in floating point, Newton steps with the exact Hessian
/// (pseudo-inverse, since rotations about the true point are flat) finish the
/// job.
pub fn find_bad_minimum(sys: &RegionSystem, opts: &BadMinOptions) -> Result<StabilityReport> {
    sys.validate()?;
    if sys.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least two generated points".into(),
        ));
    }
    let sigma = single_width(sys)?;
    let k = Kernel::new(&sys.kernel, sys.dim())?;
    let d = sys.dim();
    let mut pts = ring_configuration(sys, opts.delta)?;
    let mut j = restricted_mmd_with(sys, &k, &pts);
    let qmax = sys.gen_masses.iter().cloned().fold(0.0, f64::max);
    let qsum: f64 = sys.gen_masses.iter().sum();
    // inverse curvature scale of J
    let t_base = sigma * sigma / (qmax * (sys.true_mass + qsum));
    let mut t = t_base;
    let gnorm = |g: &[Vec<f64>]| g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())) * sigma;
    let mut newton = false;
    let mut iter = 0;
    loop {
        let g = restricted_mmd_grad_with(sys, &k, &pts);
        let gn = gnorm(&g);
        if gn < opts.grad_tol {
            break;
        }
        iter += 1;
        if iter > opts.max_iter {
            return Err(Error::LineSearch(format!(
                "no convergence after {} iterations, scaled gradient {gn:e}",
                opts.max_iter
            )));
        }
        let x = flatten(&pts);
        let gv = flatten(&g);
        if newton {
            let h = restricted_mmd_hessian_with(sys, &k, &pts);
            let step = newton_step(&h, &gv)?;
            let cand = unflatten(&(&x - &step), d);
            let gc = gnorm(&restricted_mmd_grad_with(sys, &k, &cand));
            if !(gc < gn) {
                return Err(Error::LineSearch(format!(
                    "newton step stalled at scaled gradient {gn:e}"
                )));
            }
            pts = cand;
            j = restricted_mmd_with(sys, &k, &pts);
        } else {
            let g2 = gv.norm_squared();
            let mut accepted = false;
            while t > 1e-30 * t_base {
                let cand = unflatten(&(&x - &gv * t), d);
                let jc = restricted_mmd_with(sys, &k, &cand);
                if jc <= j - 1e-4 * t * g2 {
                    if jc == j {
                        break;
                    }
                    pts = cand;
                    j = jc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                t = (t * 2.0).min(1e6 * t_base);
            } else {
                // J no longer resolves the decrease; switch to Newton on the gradient
                newton = true;
            }
        }
        if pts
            .iter()
            .any(|y| sq_dist(y, &sys.true_point).sqrt() > 100.0 * sigma)
        {
            return Err(Error::NoFiniteMinimum(
                "a generated point left the 100-sigma ball".into(),
            ));
        }
    }
    let j0 = 0.5 * (sys.true_mass.powi(2) + sys.gen_masses.iter().map(|q| q * q).sum::<f64>());
    if !(j < j0 * (1.0 - 1e-9)) {
        return Err(Error::NoFiniteMinimum(format!(
            "minimum value {j} does not improve on the separated value {j0}"
        )));
    }
    classify_numeric(sys, &pts)
}

fn newton_step(h: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(g, 1e-10 * smax)
        .map_err(|e| Error::LineSearch(format!("newton solve failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(sigma: f64) -> RegionSystem {
        RegionSystem::new(
            vec![0.0, 0.0],
            0.25,
            vec![0.25, 0.25],
            KernelSpec::exact(sigma),
            0.01,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn antipodal_pair() {
        let u = unit_directions(2, 2, 0.0).unwrap();
        assert!((dot(&u[0], &u[1]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn packing_limits() {
        assert!(matches!(
            unit_directions(5, 2, 0.3),
            Err(Error::Packing { found: 4, .. })
        ));
        // brute-force: 5 planar directions always have an adjacent angle <= 2 pi / 5
        assert!((std::f64::consts::TAU / 5.0).cos() > 0.3);
        let six = unit_directions(6, 3, 0.0).unwrap();
        for a in 0..6 {
            for b in 0..a {
                assert!(dot(&six[a], &six[b]) <= 1e-15);
            }
        }
        assert!(unit_directions(7, 3, 0.0).is_err());
    }

    #[test]
    fn ring_satisfies_separation() {
        for (p, q) in [(0.25, vec![0.25, 0.25]), (0.1, vec![0.3, 0.3, 0.2])] {
            let s = RegionSystem::new(vec![1.0, -1.0], p, q, KernelSpec::exact(0.7), 0.01, 1.0)
                .unwrap();
            let ring = ring_configuration(&s, 0.0).unwrap();
            assert!(check_ksep(&s, &ring).unwrap());
        }
    }

    #[test]
    fn ksep_extremes() {
        let s = RegionSystem::new(
            vec![0.0],
            0.9,
            vec![0.05, 0.05],
            KernelSpec::exact(1.0),
            0.01,
            1.0,
        )
        .unwrap();
        assert!(check_ksep(&s, &s.collapsed()).unwrap());
        assert!(!check_ksep(&s, &[vec![100.0], vec![-100.0]]).unwrap());
    }

    #[test]
    fn bad_minimum_is_a_critical_point() {
        let r = find_bad_minimum(&sys(1.0), &BadMinOptions::default()).unwrap();
        assert!(r.gradient_norm < 1e-12);
        assert!(r.distances_sigma.iter().all(|d| *d > 0.1 && *d < 5.0));
    }
}
