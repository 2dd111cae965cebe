//! Truncated Taylor-moment expansion of a Gaussian kernel sum around a fixed center.
//!
//! A discriminator `f(x) = sum_h c_h exp(-|x - z_h|^2 / (2 sigma^2))` whose centers
//! and evaluation points all stay within `radius` of `center` is stored as
//!
//! ```text
//! f(x) = exp(-|u|^2 / 2) * sum_{|a| <= p} M_a u^a,   u = (x - center) / sigma
//! M_a  = sum_h c_h exp(-|w_h|^2 / 2) w_h^a / a!,     w_h = (z_h - center) / sigma
//! ```
//!
//! Each term's truncation error is at most `|c_h| (|u||w|)^(p+1) / (p+1)! * e^(|u||w|)`,
//! and the order `p` is picked so that bound is below `tol` on the whole ball.
//! Adding a term or evaluating costs `O(C(p + d, d))` regardless of how many
//! terms have been absorbed, which makes long local simulations cheap.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};

const MAX_ORDER: usize = 60;

#[derive(Clone, Debug, Serialize)]
struct Block {
    sigma: f64,
    moments: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalExpansion {
    center: Vec<f64>,
    radius: f64,
    order: usize,
    blocks: Vec<Block>,
    #[serde(skip)]
    exponents: Vec<u16>,
    #[serde(skip)]
    inv_factorial: Vec<f64>,
}

impl LocalExpansion {
    /// Expansion of a (multi-width) RBF kernel sum, exact to `tol` per unit of
    /// absolute coefficient mass on the ball of `radius` around `center`.
    pub fn new(center: &[f64], sigmas: &[f64], radius: f64, tol: f64) -> Result<Self> {
        if center.is_empty() || sigmas.is_empty() {
            return Err(Error::InvalidInput(
                "expansion needs a center and a width".into(),
            ));
        }
        if !(radius.is_finite() && radius > 0.0 && tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "expansion radius {radius} / tolerance {tol} must be positive"
            )));
        }
        let sigma_min = sigmas.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(sigma_min > 0.0) {
            return Err(Error::InvalidInput("kernel widths must be positive".into()));
        }
        let rho2 = (radius / sigma_min).powi(2);
        let order = required_order(rho2, tol).ok_or_else(|| {
            Error::InvalidInput(format!(
                "expansion radius {radius} is too large for width {sigma_min}"
            ))
        })?;
        let (exponents, inv_factorial) = multi_indices(center.len(), order);
        let n = inv_factorial.len();
        Ok(Self {
            center: center.to_vec(),
            radius,
            order,
            blocks: sigmas
                .iter()
                .map(|&sigma| Block {
                    sigma,
                    moments: vec![0.0; n],
                })
                .collect(),
            exponents,
            inv_factorial,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn check_inside(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        let dist = crate::kernels::sq_dist(x, &self.center).sqrt();
        // small slack so a point sitting exactly on the boundary is accepted
        if !(dist <= self.radius * (1.0 + 1e-12)) {
            return Err(Error::OutsideExpansion {
                distance: dist,
                radius: self.radius,
            });
        }
        Ok(())
    }

    fn powers(&self, v: &[f64]) -> Vec<f64> {
        let p = self.order + 1;
        let mut out = vec![1.0; v.len() * p];
        for (i, &vi) in v.iter().enumerate() {
            for k in 1..p {
                out[i * p + k] = out[i * p + k - 1] * vi;
            }
        }
        out
    }

    fn monomial(&self, a: usize, pw: &[f64]) -> f64 {
        let d = self.dim();
        let p = self.order + 1;
        let mut m = 1.0;
        for (i, &e) in self.exponents[a * d..(a + 1) * d].iter().enumerate() {
            m *= pw[i * p + e as usize];
        }
        m
    }

    /// Multiplies every moment by `factor` (regularization decay).
    pub fn scale(&mut self, factor: f64) {
        for b in &mut self.blocks {
            b.moments.iter_mut().for_each(|m| *m *= factor);
        }
    }

    /// Absorbs `coef * K(., z)`.
    pub fn add_term(&mut self, coef: f64, z: &[f64]) -> Result<()> {
        self.check_inside(z)?;
        for bi in 0..self.blocks.len() {
            let sigma = self.blocks[bi].sigma;
            let w: Vec<f64> = z
                .iter()
                .zip(&self.center)
                .map(|(a, c)| (a - c) / sigma)
                .collect();
            let weight = coef * (-0.5 * crate::kernels::dot(&w, &w)).exp();
            let pw = self.powers(&w);
            for a in 0..self.inv_factorial.len() {
                let m = self.monomial(a, &pw);
                self.blocks[bi].moments[a] += weight * m * self.inv_factorial[a];
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_inside(x)?;
        let mut total = 0.0;
        for b in &self.blocks {
            let u: Vec<f64> = x
                .iter()
                .zip(&self.center)
                .map(|(a, c)| (a - c) / b.sigma)
                .collect();
            let pw = self.powers(&u);
            let s: f64 = (0..b.moments.len())
                .map(|a| b.moments[a] * self.monomial(a, &pw))
                .sum();
            total += (-0.5 * crate::kernels::dot(&u, &u)).exp() * s;
        }
        Ok(total)
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_inside(x)?;
        let d = self.dim();
        let p = self.order + 1;
        let mut g = vec![0.0; d];
        for b in &self.blocks {
            let u: Vec<f64> = x
                .iter()
                .zip(&self.center)
                .map(|(a, c)| (a - c) / b.sigma)
                .collect();
            let pw = self.powers(&u);
            let mut s = 0.0;
            let mut ds = vec![0.0; d];
            for a in 0..b.moments.len() {
                let m = b.moments[a];
                if m == 0.0 {
                    continue;
                }
                let ex = &self.exponents[a * d..(a + 1) * d];
                s += m * self.monomial(a, &pw);
                for i in 0..d {
                    let ei = ex[i] as usize;
                    if ei == 0 {
                        continue;
                    }
                    let mut t = m * ei as f64 * pw[i * p + ei - 1];
                    for (l, &el) in ex.iter().enumerate() {
                        if l != i {
                            t *= pw[l * p + el as usize];
                        }
                    }
                    ds[i] += t;
                }
            }
            let env = (-0.5 * crate::kernels::dot(&u, &u)).exp() / b.sigma;
            for i in 0..d {
                g[i] += env * (ds[i] - u[i] * s);
            }
        }
        Ok(g)
    }
}

/// Smallest order whose truncation bound on a ball of normalized squared radius
/// `rho2` is below `tol`.
fn required_order(rho2: f64, tol: f64) -> Option<usize> {
    let growth = rho2.exp();
    let mut term = 1.0; // rho2^n / n!
    for n in 1..=MAX_ORDER + 1 {
        term *= rho2 / n as f64;
        if term * growth <= tol {
            return Some(n - 1);
        }
    }
    None
}

/// All multi-indices of total degree <= order, graded, with their `1/a!`.
fn multi_indices(d: usize, order: usize) -> (Vec<u16>, Vec<f64>) {
    let mut exps = Vec::new();
    let mut inv = Vec::new();
    let mut cur = vec![0u16; d];
    for total in 0..=order {
        fill(&mut cur, 0, total, &mut exps, &mut inv);
    }
    (exps, inv)
}

fn fill(cur: &mut [u16], pos: usize, left: usize, exps: &mut Vec<u16>, inv: &mut Vec<f64>) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u16;
        exps.extend_from_slice(cur);
        inv.push(cur.iter().map(|&e| 1.0 / factorial(e as usize)).product());
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k as u16;
        fill(cur, pos + 1, left - k, exps, inv);
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
