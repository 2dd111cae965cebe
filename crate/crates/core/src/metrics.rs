//! Distances between distributions and failure-mode statistics.

use crate::dynamics::{DiscreteDistribution, DiscriminatorState};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{norm, Kernel, KernelSpec};

pub use crate::transport::{optimal_plan, wasserstein2, TransportPlan};

/// Norm above which a generated point counts as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 2.0;

/// Squared kernel MMD, `sum p p' K - 2 sum p q K + sum q q' K`.
pub fn mmd_squared(
    p_r: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    spec: &KernelSpec,
) -> Result<f64> {
    let kernel = Kernel::new(spec, p_r.dim())?;
    mmd_squared_with(p_r, p_g, &kernel)
}

pub fn mmd_squared_with(
    p_r: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    kernel: &Kernel,
) -> Result<f64> {
    check_dim(p_r.dim(), p_g.dim())?;
    check_dim(kernel.dim(), p_r.dim())?;
    let gram = |a: &DiscreteDistribution, b: &DiscreteDistribution| -> f64 {
        let mut s = 0.0;
        for (x, p) in a.points().iter().zip(a.masses()) {
            for (y, q) in b.points().iter().zip(b.masses()) {
                s += p * q * kernel.eval_unchecked(x, y);
            }
        }
        s
    };
    Ok(gram(p_r, p_r) - 2.0 * gram(p_r, p_g) + gram(p_g, p_g))
}

/// `W_2(P_g^k, P_r) / W_2(P_g^0, P_r)`.
pub fn normalized_wasserstein(
    p_r: &DiscreteDistribution,
    p_g0: &DiscreteDistribution,
    p_gk: &DiscreteDistribution,
) -> Result<f64> {
    let w0 = wasserstein2(p_g0, p_r)?;
    if w0 == 0.0 {
        return Err(Error::Undefined(
            "initial generated distribution already equals the target".into(),
        ));
    }
    Ok(wasserstein2(p_gk, p_r)? / w0)
}

/// Fraction of generated points (by count) with norm above `threshold`.
pub fn divergence_fraction(p_g: &DiscreteDistribution, threshold: f64) -> f64 {
    let n = p_g.points().iter().filter(|x| norm(x) > threshold).count();
    n as f64 / p_g.len() as f64
}

/// Generator loss `-sum_j q_j f(y_j)`.
pub fn generator_loss(
    state: &DiscriminatorState,
    kernel: &Kernel,
    p_g: &DiscreteDistribution,
) -> Result<f64> {
    let mut s = 0.0;
    for (y, q) in p_g.points().iter().zip(p_g.masses()) {
        s -= q * state.eval(kernel, y)?;
    }
    Ok(s)
}

/// Generator loss at the converged discriminator for one true and one
/// generated unit mass: `(K(y, y) - K(x, y)) / lambda`.
pub fn converged_generator_loss(
    x0: &[f64],
    y0: &[f64],
    spec: &KernelSpec,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::ZeroRegularization);
    }
    let kernel = Kernel::new(spec, x0.len())?;
    Ok((kernel.eval(y0, y0)? - kernel.eval(x0, y0)?) / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(x: Vec<f64>) -> DiscreteDistribution {
        DiscreteDistribution::uniform(vec![x]).unwrap()
    }

    #[test]
    fn mmd_closed_forms() {
        let spec = KernelSpec::exact(1.5);
        let p = DiscreteDistribution::new(vec![vec![0.0, 1.0], vec![2.0, -1.0]], vec![0.4, 0.6])
            .unwrap();
        assert!(mmd_squared(&p, &p, &spec).unwrap().abs() < 1e-12);
        let r: f64 = 1.3;
        let v = mmd_squared(&single(vec![0.0, 0.0]), &single(vec![r, 0.0]), &spec).unwrap();
        let expected = 2.0 * (1.0 - (-r * r / (2.0 * 1.5 * 1.5)).exp());
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn wasserstein_simple_cases() {
        let p = single(vec![0.0, 0.0]);
        let q = single(vec![3.0, 4.0]);
        assert_eq!(wasserstein2(&p, &q).unwrap(), 5.0);
        assert_eq!(wasserstein2(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn normalized_wasserstein_endpoints() {
        let p_r = DiscreteDistribution::uniform(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let g0 = DiscreteDistribution::uniform(vec![vec![0.0, 0.5], vec![0.0, -0.5]]).unwrap();
        assert_eq!(normalized_wasserstein(&p_r, &g0, &g0).unwrap(), 1.0);
        assert_eq!(normalized_wasserstein(&p_r, &g0, &p_r).unwrap(), 0.0);
        assert!(normalized_wasserstein(&p_r, &p_r, &g0).is_err());
        let far = g0.scaled(10.0);
        assert!(normalized_wasserstein(&p_r, &g0, &far).unwrap() > 1.0);
    }

    #[test]
    fn divergence_fraction_counts() {
        let circle: Vec<Vec<f64>> = (0..8)
            .map(|k| {
                let t = k as f64 * 0.7;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let c = DiscreteDistribution::uniform(circle.clone()).unwrap();
        assert_eq!(divergence_fraction(&c, 2.0), 0.0);
        assert_eq!(divergence_fraction(&c.scaled(3.0), 2.0), 1.0);
        let mut mixed = circle;
        mixed[0] = vec![3.0, 0.0];
        mixed[5] = vec![0.0, -2.5];
        let m = DiscreteDistribution::uniform(mixed).unwrap();
        assert_eq!(divergence_fraction(&m, 2.0), 0.25);
    }

    #[test]
    fn converged_loss_limits() {
        let spec = KernelSpec::exact(1.0);
        assert_eq!(
            converged_generator_loss(&[1.0], &[1.0], &spec, 0.1).unwrap(),
            0.0
        );
        let far = converged_generator_loss(&[0.0], &[1e3], &spec, 0.1).unwrap();
        assert!((far - 10.0).abs() < 1e-12);
        assert!(converged_generator_loss(&[0.0], &[1.0], &spec, 0.0).is_err());
    }
}
