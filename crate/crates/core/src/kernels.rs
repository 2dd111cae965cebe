//! Kernels for the discriminator.
//!
//! Three families are supported: the exact RBF kernel
//! `K(x, x') = exp(-|x - x'|^2 / (2 sigma^2))`, its random-Fourier-feature
//! approximation, and multi-scale sums of RBF kernels (exact or via
//! concatenated feature maps). Every variant is translation invariant.
//!
//! A [`KernelSpec`] is the serializable description; a [`Kernel`] is the
//! evaluated form with sampled frequencies, built once and shared.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::{child_seed, seeded};

/// Normalization of the random Fourier feature map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RffNorm {
    /// `sqrt(1/R)` per cos/sin pair, so `a(x).a(x) = 1` like the exact kernel.
    #[default]
    Unit,
    /// `sqrt(2/R)` per cos/sin pair, so `a(x).a(x) = 2`. Kept for comparison runs.
    TwoOverR,
}

impl RffNorm {
    fn is_unit(&self) -> bool {
        *self == RffNorm::Unit
    }

    fn scale(self, features: usize) -> f64 {
        match self {
            RffNorm::Unit => (1.0 / features as f64).sqrt(),
            RffNorm::TwoOverR => (2.0 / features as f64).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelSpec {
    ExactRbf {
        sigma: f64,
    },
    Rff {
        sigma: f64,
        features: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "RffNorm::is_unit")]
        norm: RffNorm,
    },
    Multiscale {
        sigmas: Vec<f64>,
    },
    /// Concatenated RFF maps, one block of `features` frequencies per width.
    RffMultiscale {
        sigmas: Vec<f64>,
        features: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "RffNorm::is_unit")]
        norm: RffNorm,
    },
}

impl KernelSpec {
    pub fn exact(sigma: f64) -> Self {
        KernelSpec::ExactRbf { sigma }
    }

    pub fn rff(sigma: f64, features: usize, seed: u64) -> Self {
        KernelSpec::Rff {
            sigma,
            features,
            seed,
            norm: RffNorm::Unit,
        }
    }

    /// Multi-scale exact kernel; widths are sorted into canonical order.
    pub fn multiscale(mut sigmas: Vec<f64>) -> Self {
        sigmas.sort_by(f64::total_cmp);
        KernelSpec::Multiscale { sigmas }
    }

    pub fn rff_multiscale(mut sigmas: Vec<f64>, features: usize, seed: u64) -> Self {
        sigmas.sort_by(f64::total_cmp);
        KernelSpec::RffMultiscale {
            sigmas,
            features,
            seed,
            norm: RffNorm::Unit,
        }
    }

    pub fn widths(&self) -> Vec<f64> {
        match self {
            KernelSpec::ExactRbf { sigma } | KernelSpec::Rff { sigma, .. } => vec![*sigma],
            KernelSpec::Multiscale { sigmas } | KernelSpec::RffMultiscale { sigmas, .. } => {
                sigmas.clone()
            }
        }
    }

    /// True for kernels with closed-form derivatives (no sampled features).
    pub fn is_exact(&self) -> bool {
        matches!(
            self,
            KernelSpec::ExactRbf { .. } | KernelSpec::Multiscale { .. }
        )
    }

    pub fn is_feature_based(&self) -> bool {
        !self.is_exact()
    }

    /// Same spec with the frequency seed replaced (no-op for exact kernels).
    pub fn with_seed(&self, new_seed: u64) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            KernelSpec::Rff { seed, .. } | KernelSpec::RffMultiscale { seed, .. } => {
                *seed = new_seed
            }
            _ => {}
        }
        spec
    }

    /// Short identifier used in file names and CSV rows.
    pub fn id(&self) -> String {
        let widths = self
            .widths()
            .iter()
            .map(|s| format!("{s}"))
            .collect::<Vec<_>>()
            .join("+");
        match self {
            KernelSpec::ExactRbf { .. } => format!("rbf_{widths}"),
            KernelSpec::Rff { features, .. } => format!("rff{features}_{widths}"),
            KernelSpec::Multiscale { .. } => format!("ms_{widths}"),
            KernelSpec::RffMultiscale { features, .. } => format!("rffms{features}_{widths}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let widths = self.widths();
        if widths.is_empty() {
            return Err(Error::InvalidInput(
                "kernel needs at least one width".into(),
            ));
        }
        for &s in &widths {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "kernel width must be positive and finite, got {s}"
                )));
            }
        }
        if widths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "multiscale widths must be strictly increasing".into(),
            ));
        }
        if let KernelSpec::Rff { features, .. } | KernelSpec::RffMultiscale { features, .. } = self
        {
            if *features == 0 {
                return Err(Error::InvalidInput("feature count must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Frequencies `w_r ~ N(0, I / sigma^2)` for one feature block, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureFrequencies {
    dim: usize,
    sigma: f64,
    rows: Vec<f64>,
}

impl FeatureFrequencies {
    /// Draws `features` rows deterministically from `seed` (one standard
    /// normal per coordinate, scaled by `1/sigma`).
    pub fn sample(sigma: f64, features: usize, dim: usize, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) || features == 0 || dim == 0 {
            return Err(Error::InvalidInput(format!(
                "bad frequency parameters sigma={sigma} features={features} dim={dim}"
            )));
        }
        let mut rng = seeded(seed);
        let rows = (0..features * dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z / sigma
            })
            .collect();
        Ok(Self { dim, sigma, rows })
    }

    pub fn features(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.dim..(r + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.dim)
    }
}

/// Concatenated RFF blocks with a common per-block scale.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    blocks: Vec<FeatureFrequencies>,
    scale: f64,
}

impl FeatureMap {
    pub fn new(blocks: Vec<FeatureFrequencies>, scale: f64) -> Self {
        Self { blocks, scale }
    }

    pub fn blocks(&self) -> &[FeatureFrequencies] {
        &self.blocks
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Length of `a(x)`: two entries per frequency.
    pub fn len(&self) -> usize {
        2 * self.blocks.iter().map(|b| b.features()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frequencies(&self) -> impl Iterator<Item = &[f64]> {
        self.blocks.iter().flat_map(|b| b.rows())
    }

    /// Interleaved `[cos(w_1.x), sin(w_1.x), cos(w_2.x), ...] * scale`.
    pub fn map(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for w in self.frequencies() {
            let (s, c) = dot(w, x).sin_cos();
            out.push(self.scale * c);
            out.push(self.scale * s);
        }
        out
    }

    /// Unscaled `(cos, sin)` of every phase `w.x`; shared by value and gradient evaluation.
    pub(crate) fn phases(&self, x: &[f64], out: &mut Vec<(f64, f64)>) {
        out.clear();
        out.extend(self.frequencies().map(|w| {
            let (s, c) = dot(w, x).sin_cos();
            (c, s)
        }));
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Exact { inv_sq: Vec<f64> },
    Features(FeatureMap),
}

/// An evaluable kernel on `R^dim`.
#[derive(Clone, Debug)]
pub struct Kernel {
    spec: KernelSpec,
    dim: usize,
    repr: Repr,
}

impl Kernel {
    pub fn new(spec: &KernelSpec, dim: usize) -> Result<Self> {
        spec.validate()?;
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        let repr = match spec {
            KernelSpec::ExactRbf { sigma } => Repr::Exact {
                inv_sq: vec![1.0 / (sigma * sigma)],
            },
            KernelSpec::Multiscale { sigmas } => Repr::Exact {
                inv_sq: sigmas.iter().map(|s| 1.0 / (s * s)).collect(),
            },
            KernelSpec::Rff {
                sigma,
                features,
                seed,
                norm,
            } => Repr::Features(FeatureMap::new(
                vec![FeatureFrequencies::sample(*sigma, *features, dim, *seed)?],
                norm.scale(*features),
            )),
            KernelSpec::RffMultiscale {
                sigmas,
                features,
                seed,
                norm,
            } => {
                let blocks = sigmas
                    .iter()
                    .enumerate()
                    .map(|(b, s)| {
                        FeatureFrequencies::sample(*s, *features, dim, child_seed(*seed, b as u64))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Repr::Features(FeatureMap::new(blocks, norm.scale(*features)))
            }
        };
        Ok(Self {
            spec: spec.clone(),
            dim,
            repr,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature_map(&self) -> Option<&FeatureMap> {
        match &self.repr {
            Repr::Features(map) => Some(map),
            Repr::Exact { .. } => None,
        }
    }

    fn check(&self, x: &[f64], y: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x, y)?;
        Ok(self.eval_unchecked(x, y))
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check(x, y)?;
        let mut g = vec![0.0; self.dim];
        self.accumulate_grad(x, y, 1.0, &mut g);
        Ok(g)
    }

    /// `d^2 K / dx^2` at `(x, y)`.
    pub fn hess_xx(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x, y)?;
        let mut h = DMatrix::zeros(self.dim, self.dim);
        self.accumulate_hess(x, y, 1.0, &mut h);
        Ok(h)
    }

    /// `d^2 K / dx dx'` at `(x, y)`.
    pub fn cross_hess(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x, y)?;
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        match &self.repr {
            Repr::Exact { .. } => {
                self.accumulate_hess(x, y, -1.0, &mut h);
            }
            Repr::Features(map) => {
                let s2 = map.scale * map.scale;
                for w in map.frequencies() {
                    let (sx, cx) = dot(w, x).sin_cos();
                    let (sy, cy) = dot(w, y).sin_cos();
                    let coef = s2 * (sx * sy + cx * cy);
                    add_outer(&mut h, w, w, coef);
                }
            }
        }
        Ok(h)
    }

    /// Curvature constants `(k1, k2, k3, k4)` bounding the kernel Hessians at coincident points.
    pub fn constants(&self) -> (f64, f64, f64, f64) {
        let k: f64 = self.spec.widths().iter().map(|s| 1.0 / (s * s)).sum();
        (k, k, k, k)
    }

    /// Radial profile `phi(r)` with `K(x, x') = phi(|x - x'|)`; exact kernels only.
    pub fn radial(&self, r: f64) -> Result<f64> {
        match &self.repr {
            Repr::Exact { inv_sq } => Ok(inv_sq.iter().map(|a| (-0.5 * a * r * r).exp()).sum()),
            Repr::Features(_) => Err(Error::InvalidInput(
                "radial profile needs an exact kernel".into(),
            )),
        }
    }

    /// `phi'(r)`; exact kernels only.
    pub fn radial_derivative(&self, r: f64) -> Result<f64> {
        match &self.repr {
            Repr::Exact { inv_sq } => Ok(inv_sq
                .iter()
                .map(|a| -a * r * (-0.5 * a * r * r).exp())
                .sum()),
            Repr::Features(_) => Err(Error::InvalidInput(
                "radial profile needs an exact kernel".into(),
            )),
        }
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.repr {
            Repr::Exact { inv_sq } => {
                let r2 = sq_dist(x, y);
                inv_sq.iter().map(|a| (-0.5 * a * r2).exp()).sum()
            }
            Repr::Features(map) => dot(&map.map(x), &map.map(y)),
        }
    }

    /// `out += c * dK/dx (x, y)`
    pub(crate) fn accumulate_grad(&self, x: &[f64], y: &[f64], c: f64, out: &mut [f64]) {
        match &self.repr {
            Repr::Exact { inv_sq } => {
                let r2 = sq_dist(x, y);
                let mut s = 0.0;
                for a in inv_sq {
                    s += a * (-0.5 * a * r2).exp();
                }
                for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
                    *o -= c * s * (xi - yi);
                }
            }
            Repr::Features(map) => {
                // d/dx [cos(w.x) cos(w.y) + sin(w.x) sin(w.y)] = w [-sin(w.x) cos(w.y) + cos(w.x) sin(w.y)]
                let s2 = map.scale * map.scale;
                for w in map.frequencies() {
                    let (sx, cx) = dot(w, x).sin_cos();
                    let (sy, cy) = dot(w, y).sin_cos();
                    let coef = c * s2 * (-sx * cy + cx * sy);
                    for (o, wi) in out.iter_mut().zip(w) {
                        *o += coef * wi;
                    }
                }
            }
        }
    }

    /// `out += c * d^2K/dx^2 (x, y)`
    pub(crate) fn accumulate_hess(&self, x: &[f64], y: &[f64], c: f64, out: &mut DMatrix<f64>) {
        match &self.repr {
            Repr::Exact { inv_sq } => {
                let r2 = sq_dist(x, y);
                let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                for a in inv_sq {
                    let k = (-0.5 * a * r2).exp();
                    add_outer(out, &diff, &diff, c * k * a * a);
                    for i in 0..self.dim {
                        out[(i, i)] -= c * k * a;
                    }
                }
            }
            Repr::Features(map) => {
                let s2 = map.scale * map.scale;
                for w in map.frequencies() {
                    let (sx, cx) = dot(w, x).sin_cos();
                    let (sy, cy) = dot(w, y).sin_cos();
                    let coef = -c * s2 * (cx * cy + sx * sy);
                    add_outer(out, w, w, coef);
                }
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn add_outer(m: &mut DMatrix<f64>, u: &[f64], v: &[f64], c: f64) {
    for (i, ui) in u.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            m[(i, j)] += c * ui * vj;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    const E_HALF: f64 = 0.606_530_659_712_633_4;

    fn random_pair(rng: &mut impl Rng, d: usize, spread: f64) -> (Vec<f64>, Vec<f64>) {
        let x = (0..d).map(|_| rng.random_range(-spread..spread)).collect();
        let y = (0..d).map(|_| rng.random_range(-spread..spread)).collect();
        (x, y)
    }

    fn fd_grad(k: &Kernel, x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (k.eval(&xp, y).unwrap() - k.eval(&xm, y).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn exact_values() {
        let k = Kernel::new(&KernelSpec::exact(1.0), 2).unwrap();
        assert_eq!(k.eval(&[0.3, -1.2], &[0.3, -1.2]).unwrap(), 1.0);
        assert!((k.eval(&[1.0, 0.0], &[0.0, 0.0]).unwrap() - E_HALF).abs() < 1e-15);
        let ms = Kernel::new(&KernelSpec::multiscale(vec![10.0, 1.0]), 2).unwrap();
        assert_eq!(ms.eval(&[2.0, 5.0], &[2.0, 5.0]).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = Kernel::new(&KernelSpec::exact(1.0), 2).unwrap();
        assert!(matches!(
            k.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(k.grad_x(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn degenerate_widths_rejected() {
        assert!(Kernel::new(&KernelSpec::exact(0.0), 2).is_err());
        assert!(Kernel::new(&KernelSpec::exact(-1.0), 2).is_err());
        assert!(Kernel::new(&KernelSpec::Multiscale { sigmas: vec![] }, 2).is_err());
        assert!(Kernel::new(
            &KernelSpec::Multiscale {
                sigmas: vec![2.0, 1.0]
            },
            2
        )
        .is_err());
        assert!(Kernel::new(&KernelSpec::rff(1.0, 0, 1), 2).is_err());
    }

    #[test]
    fn gradient_closed_forms() {
        let k = Kernel::new(&KernelSpec::exact(1.0), 2).unwrap();
        let g = k.grad_x(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((g[0] + E_HALF).abs() < 1e-15 && g[1] == 0.0);
        for spec in [
            KernelSpec::exact(0.7),
            KernelSpec::multiscale(vec![1.0, 2.0]),
            KernelSpec::rff(1.0, 64, 3),
        ] {
            let k = Kernel::new(&spec, 3).unwrap();
            let x = [0.2, -0.4, 1.1];
            assert!(k.grad_x(&x, &x).unwrap().iter().all(|v| v.abs() < 1e-15));
        }
        let ms = Kernel::new(&KernelSpec::multiscale(vec![1.0, 2.0]), 2).unwrap();
        let g = ms.grad_x(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let expected = -(E_HALF + 0.25 * (-1.0f64 / 8.0).exp());
        assert!((g[0] - expected).abs() < 1e-15);
        let fd = fd_grad(&ms, &[1.0, 0.0], &[0.0, 0.0], 1e-5);
        assert!((fd[0] - g[0]).abs() < 1e-6 * g[0].abs());
    }

    #[test]
    fn hessians_at_coincident_points() {
        for (sigma, expected) in [(1.0, 1.0), (2.0, 0.25)] {
            let k = Kernel::new(&KernelSpec::exact(sigma), 2).unwrap();
            let x = [0.5, 0.5];
            let h = k.hess_xx(&x, &x).unwrap();
            let c = k.cross_hess(&x, &x).unwrap();
            assert_eq!(h, DMatrix::identity(2, 2) * -expected);
            assert_eq!(c, DMatrix::identity(2, 2) * expected);
        }
    }

    #[test]
    fn constants_per_variant() {
        let k = |s: KernelSpec| Kernel::new(&s, 2).unwrap().constants();
        assert_eq!(k(KernelSpec::exact(1.0)), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(k(KernelSpec::exact(2.0)), (0.25, 0.25, 0.25, 0.25));
        assert_eq!(k(KernelSpec::rff(2.0, 10, 0)), (0.25, 0.25, 0.25, 0.25));
        assert_eq!(
            k(KernelSpec::multiscale(vec![1.0, 2.0])),
            (1.25, 1.25, 1.25, 1.25)
        );
    }

    #[test]
    fn feature_map_normalization() {
        let spec = KernelSpec::rff(1.0, 50, 9);
        let k = Kernel::new(&spec, 2).unwrap();
        let map = k.feature_map().unwrap();
        let a0 = map.map(&[0.0, 0.0]);
        let s = (1.0f64 / 50.0).sqrt();
        for pair in a0.chunks(2) {
            assert_eq!(pair, &[s, 0.0]);
        }
        let a = map.map(&[0.3, -2.0]);
        assert!((dot(&a, &a) - 1.0).abs() < 1e-14);

        let wide = KernelSpec::Rff {
            sigma: 1.0,
            features: 50,
            seed: 9,
            norm: RffNorm::TwoOverR,
        };
        let k2 = Kernel::new(&wide, 2).unwrap();
        let x = [0.3, -2.0];
        assert!((k2.eval(&x, &x).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rff_eval_is_feature_inner_product() {
        let k = Kernel::new(&KernelSpec::rff(0.8, 200, 5), 3).unwrap();
        let map = k.feature_map().unwrap();
        let (x, y) = ([0.1, 0.2, -0.3], [1.0, -0.5, 0.25]);
        assert_eq!(
            k.eval(&x, &y).unwrap().to_bits(),
            dot(&map.map(&x), &map.map(&y)).to_bits()
        );
    }

    #[test]
    fn frequency_statistics() {
        let sigma = 0.5;
        let f = FeatureFrequencies::sample(sigma, 20_000, 2, 11).unwrap();
        let n = f.rows.len() as f64;
        let mean = f.rows.iter().sum::<f64>() / n;
        let var = f.rows.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
        let target = 1.0 / (sigma * sigma);
        // standard errors: sqrt(var/n) for the mean, var*sqrt(2/n) for the variance
        assert!(mean.abs() < 5.0 * (target / n).sqrt());
        assert!((var - target).abs() < 5.0 * target * (2.0 / n).sqrt());
        assert_eq!(f, FeatureFrequencies::sample(sigma, 20_000, 2, 11).unwrap());
    }

    #[test]
    fn rbf_satisfies_unit_range() {
        let k = Kernel::new(&KernelSpec::exact(0.7), 3).unwrap();
        let mut rng = crate::rng::seeded(1);
        for _ in 0..200 {
            let (x, y) = random_pair(&mut rng, 3, 4.0);
            let v = k.eval(&x, &y).unwrap();
            assert!((0.0..=1.0).contains(&v));
            assert_eq!(v, k.eval(&y, &x).unwrap());
        }
    }

    #[test]
    fn spec_json_shapes() {
        let exact: KernelSpec =
            serde_json::from_str(r#"{"variant":"exact_rbf","sigma":1.0}"#).unwrap();
        assert_eq!(exact, KernelSpec::exact(1.0));
        let rff: KernelSpec =
            serde_json::from_str(r#"{"variant":"rff","sigma":1.0,"features":1000,"seed":42}"#)
                .unwrap();
        assert_eq!(rff, KernelSpec::rff(1.0, 1000, 42));
        let ms: KernelSpec =
            serde_json::from_str(r#"{"variant":"multiscale","sigmas":[0.1,1.0,10.0]}"#).unwrap();
        assert_eq!(ms, KernelSpec::multiscale(vec![0.1, 1.0, 10.0]));
        assert_eq!(
            serde_json::to_string(&rff).unwrap(),
            r#"{"variant":"rff","sigma":1.0,"features":1000,"seed":42}"#
        );
    }
}
