//! Joint discriminator/generator dynamics of the isolated points model.
//!
//! The discriminator ascends the regularized MMD objective,
//! `f <- (1 - eta_d lambda) f + eta_d (sum_i p_i K(., x_i) - sum_j q_j K(., y_j))`,
//! and each generated point then ascends it, `y_j <- y_j + eta_g q_j grad f(y_j)`.
//! The generated masses `q_j` never change.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::expansion::LocalExpansion;
use crate::kernels::{dot, norm, sq_dist, Kernel, KernelSpec};
use crate::metrics;

/// Weighted point set; masses are normalized to sum to one on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct DiscreteDistribution {
    points: Vec<Vec<f64>>,
    masses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    points: Vec<Vec<f64>>,
    #[serde(default)]
    masses: Option<Vec<f64>>,
}

impl TryFrom<RawDistribution> for DiscreteDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw.masses {
            Some(m) => Self::new(raw.points, m),
            None => Self::uniform(raw.points),
        }
    }
}

impl From<DiscreteDistribution> for RawDistribution {
    fn from(d: DiscreteDistribution) -> Self {
        RawDistribution {
            points: d.points,
            masses: Some(d.masses),
        }
    }
}

impl DiscreteDistribution {
    pub fn new(points: Vec<Vec<f64>>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("distribution has no points".into()));
        }
        if points.len() != masses.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} masses",
                points.len(),
                masses.len()
            )));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::InvalidInput(
                "points must have dimension >= 1".into(),
            ));
        }
        for p in &points {
            check_dim(d, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("distribution point".into()));
            }
        }
        if masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidInput(
                "masses must be positive and finite".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        let masses = masses.into_iter().map(|m| m / total).collect();
        Ok(Self { points, masses })
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n.max(1)].into_iter().take(n).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same masses, new locations.
    pub fn with_points(&self, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() != self.points.len() {
            return Err(Error::InvalidInput("point count changed".into()));
        }
        Self::new(points, self.masses.clone())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| p.iter().map(|v| v * c).collect())
                .collect(),
            masses: self.masses.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    /// Discriminator first; generators then follow the updated discriminator
    /// evaluated at their pre-step positions.
    #[default]
    Alternating,
    /// Both players use the state from the start of the iteration.
    Simultaneous,
}

/// How the discriminator function is stored during training.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    /// Parametric for feature kernels, history for exact kernels.
    #[default]
    Auto,
    History,
    Parametric,
    /// Moment expansion on a ball; exact kernels only. The center defaults to
    /// the single true point when there is exactly one.
    Local {
        #[serde(default)]
        center: Option<Vec<f64>>,
        radius: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub eta_d: f64,
    pub eta_g: f64,
    pub lambda: f64,
    pub steps: usize,
    pub snapshot_every: usize,
    /// Relative to the largest history coefficient.
    pub prune_tol: f64,
    pub update_order: UpdateOrder,
    pub representation: Representation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta_d: 1e-3,
            eta_g: 1e-3,
            lambda: 0.01,
            steps: 40_000,
            snapshot_every: 100,
            prune_tol: 1e-12,
            update_order: UpdateOrder::Alternating,
            representation: Representation::Auto,
        }
    }
}

impl TrainConfig {
    pub fn mu(&self) -> f64 {
        self.eta_g / self.eta_d
    }

    pub fn rho(&self) -> f64 {
        1.0 - self.eta_d * self.lambda
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_d > 0.0 && self.eta_d.is_finite()) {
            return Err(Error::InvalidInput("eta_d must be positive".into()));
        }
        if !(self.eta_g > 0.0 && self.eta_g.is_finite()) {
            return Err(Error::InvalidInput("eta_g must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput("lambda must be nonnegative".into()));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidInput("snapshot_every must be >= 1".into()));
        }
        if !(self.prune_tol >= 0.0) {
            return Err(Error::InvalidInput("prune_tol must be nonnegative".into()));
        }
        if !self.mu().is_finite() {
            return Err(Error::InvalidInput("eta_g / eta_d is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermClass {
    TruePoint(usize),
    Generated(usize),
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryTerm {
    pub coef: f64,
    pub center: Vec<f64>,
    pub class: TermClass,
}

/// `f(x) = sum_h c_h K(x, z_h)`. One consolidated term per true point; a
/// generated point that has not moved since its last contribution reuses it.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct History {
    terms: Vec<HistoryTerm>,
    #[serde(skip)]
    true_slots: Vec<Option<usize>>,
    #[serde(skip)]
    gen_slots: Vec<Option<usize>>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<HistoryTerm>) -> Self {
        let mut h = Self {
            terms,
            ..Self::default()
        };
        h.rebuild_slots();
        h
    }

    pub fn terms(&self) -> &[HistoryTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn rebuild_slots(&mut self) {
        self.true_slots.clear();
        self.gen_slots.clear();
        for (idx, t) in self.terms.iter().enumerate() {
            let slots = match t.class {
                TermClass::TruePoint(i) => (&mut self.true_slots, i),
                TermClass::Generated(j) => (&mut self.gen_slots, j),
                TermClass::Fixed => continue,
            };
            let (v, i) = slots;
            if v.len() <= i {
                v.resize(i + 1, None);
            }
            // later terms win so the generated slot tracks the newest contribution
            v[i] = Some(idx);
        }
    }

    pub fn push(&mut self, coef: f64, center: &[f64], class: TermClass) {
        let slot = match class {
            TermClass::TruePoint(i) => self.true_slots.get(i).copied().flatten(),
            TermClass::Generated(j) => self.gen_slots.get(j).copied().flatten(),
            TermClass::Fixed => None,
        };
        if let Some(idx) = slot {
            let t = &mut self.terms[idx];
            if t.center
                .iter()
                .zip(center)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            {
                t.coef += coef;
                return;
            }
        }
        self.terms.push(HistoryTerm {
            coef,
            center: center.to_vec(),
            class,
        });
        let idx = self.terms.len() - 1;
        let (v, i) = match class {
            TermClass::TruePoint(i) => (&mut self.true_slots, i),
            TermClass::Generated(j) => (&mut self.gen_slots, j),
            TermClass::Fixed => return,
        };
        if v.len() <= i {
            v.resize(i + 1, None);
        }
        v[i] = Some(idx);
    }

    pub fn scale(&mut self, factor: f64) {
        self.terms.iter_mut().for_each(|t| t.coef *= factor);
    }

    /// Drops terms with `|c| < tol * max |c|`.
    pub fn prune(&mut self, tol: f64) {
        if tol <= 0.0 {
            return;
        }
        let max = self.terms.iter().map(|t| t.coef.abs()).fold(0.0, f64::max);
        let cut = tol * max;
        let before = self.terms.len();
        self.terms.retain(|t| t.coef.abs() >= cut && t.coef != 0.0);
        if self.terms.len() != before {
            self.rebuild_slots();
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DiscriminatorState {
    Parametric { theta: Vec<f64> },
    History(History),
    Local(LocalExpansion),
}

impl DiscriminatorState {
    /// The zero discriminator in the requested representation.
    pub fn zero(kernel: &Kernel, repr: &Representation, true_points: &[Vec<f64>]) -> Result<Self> {
        let state = match repr {
            Representation::Auto if kernel.feature_map().is_some() => {
                Self::parametric_zero(kernel)?
            }
            Representation::Auto | Representation::History => Self::History(History::new()),
            Representation::Parametric => Self::parametric_zero(kernel)?,
            Representation::Local { center, radius } => {
                if !kernel.spec().is_exact() {
                    return Err(Error::ModeMismatch(
                        "local expansion needs an exact kernel".into(),
                    ));
                }
                let center = match (center, true_points) {
                    (Some(c), _) => c.clone(),
                    (None, [x]) => x.clone(),
                    (None, _) => {
                        return Err(Error::InvalidInput(
                            "local expansion needs a center when there are several true points"
                                .into(),
                        ))
                    }
                };
                check_dim(kernel.dim(), center.len())?;
                Self::Local(LocalExpansion::new(
                    &center,
                    &kernel.spec().widths(),
                    *radius,
                    1e-15,
                )?)
            }
        };
        Ok(state)
    }

    fn parametric_zero(kernel: &Kernel) -> Result<Self> {
        let map = kernel.feature_map().ok_or_else(|| {
            Error::ModeMismatch("parametric discriminator needs a feature kernel".into())
        })?;
        Ok(Self::Parametric {
            theta: vec![0.0; map.len()],
        })
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Self::Parametric { .. } => "parametric",
            Self::History(_) => "history",
            Self::Local(_) => "local",
        }
    }

    pub fn check_mode(&self, kernel: &Kernel) -> Result<()> {
        match self {
            Self::Parametric { theta } => match kernel.feature_map() {
                Some(m) if m.len() == theta.len() => Ok(()),
                Some(m) => Err(Error::ModeMismatch(format!(
                    "theta has {} entries, feature map {}",
                    theta.len(),
                    m.len()
                ))),
                None => Err(Error::ModeMismatch(
                    "parametric discriminator needs a feature kernel".into(),
                )),
            },
            Self::History(_) => Ok(()),
            Self::Local(ex) => {
                if kernel.spec().is_exact() && ex.dim() == kernel.dim() {
                    Ok(())
                } else {
                    Err(Error::ModeMismatch(
                        "local expansion needs a matching exact kernel".into(),
                    ))
                }
            }
        }
    }

    /// Multiplies the whole function by `factor`.
    pub fn scale(&mut self, factor: f64) {
        match self {
            Self::Parametric { theta } => theta.iter_mut().for_each(|t| *t *= factor),
            Self::History(h) => h.scale(factor),
            Self::Local(ex) => ex.scale(factor),
        }
    }

    /// Adds `coef * K(., center)`.
    pub fn add_term(
        &mut self,
        kernel: &Kernel,
        coef: f64,
        center: &[f64],
        class: TermClass,
    ) -> Result<()> {
        check_dim(kernel.dim(), center.len())?;
        match self {
            Self::Parametric { theta } => {
                let map = kernel
                    .feature_map()
                    .ok_or_else(|| Error::ModeMismatch("no feature map".into()))?;
                for (t, a) in theta.iter_mut().zip(map.map(center)) {
                    *t += coef * a;
                }
            }
            Self::History(h) => h.push(coef, center, class),
            Self::Local(ex) => ex.add_term(coef, center)?,
        }
        Ok(())
    }

    pub fn eval(&self, kernel: &Kernel, x: &[f64]) -> Result<f64> {
        check_dim(kernel.dim(), x.len())?;
        match self {
            Self::Parametric { theta } => {
                let map = kernel
                    .feature_map()
                    .ok_or_else(|| Error::ModeMismatch("no feature map".into()))?;
                Ok(dot(&map.map(x), theta))
            }
            Self::History(h) => Ok(h
                .terms
                .iter()
                .map(|t| t.coef * kernel.eval_unchecked(x, &t.center))
                .sum()),
            Self::Local(ex) => ex.eval(x),
        }
    }

    pub fn grad(&self, kernel: &Kernel, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(kernel.dim(), x.len())?;
        match self {
            Self::Parametric { theta } => {
                let map = kernel
                    .feature_map()
                    .ok_or_else(|| Error::ModeMismatch("no feature map".into()))?;
                let mut g = vec![0.0; x.len()];
                let s = map.scale();
                for (r, w) in map.frequencies().enumerate() {
                    let (sn, cs) = dot(w, x).sin_cos();
                    let c = s * (-sn * theta[2 * r] + cs * theta[2 * r + 1]);
                    for (gi, wi) in g.iter_mut().zip(w) {
                        *gi += c * wi;
                    }
                }
                Ok(g)
            }
            Self::History(h) => {
                let mut g = vec![0.0; x.len()];
                for t in &h.terms {
                    kernel.accumulate_grad(x, &t.center, t.coef, &mut g);
                }
                Ok(g)
            }
            Self::Local(ex) => ex.grad(x),
        }
    }

    /// Second derivative of the discriminator; not available for local expansions.
    pub fn hessian(&self, kernel: &Kernel, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(kernel.dim(), x.len())?;
        let d = x.len();
        let mut out = DMatrix::zeros(d, d);
        match self {
            Self::Parametric { theta } => {
                let map = kernel
                    .feature_map()
                    .ok_or_else(|| Error::ModeMismatch("no feature map".into()))?;
                let s = map.scale();
                for (r, w) in map.frequencies().enumerate() {
                    let (sn, cs) = dot(w, x).sin_cos();
                    let c = -s * (cs * theta[2 * r] + sn * theta[2 * r + 1]);
                    for i in 0..d {
                        for j in 0..d {
                            out[(i, j)] += c * w[i] * w[j];
                        }
                    }
                }
            }
            Self::History(h) => {
                for t in &h.terms {
                    kernel.accumulate_hess(x, &t.center, t.coef, &mut out);
                }
            }
            Self::Local(_) => {
                return Err(Error::ModeMismatch(
                    "local expansion does not provide second derivatives".into(),
                ))
            }
        }
        Ok(out)
    }

    pub fn history(&self) -> Option<&History> {
        match self {
            Self::History(h) => Some(h),
            _ => None,
        }
    }

    pub fn theta(&self) -> Option<&[f64]> {
        match self {
            Self::Parametric { theta } => Some(theta),
            _ => None,
        }
    }

    /// Number of stored reals or terms, for reporting.
    pub fn size(&self) -> usize {
        match self {
            Self::Parametric { theta } => theta.len(),
            Self::History(h) => h.len(),
            Self::Local(_) => 1,
        }
    }
}

fn check_masses(points: &[Vec<f64>], masses: &[f64]) -> Result<()> {
    if points.len() != masses.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} masses",
            points.len(),
            masses.len()
        )));
    }
    Ok(())
}

/// One discriminator ascent step on the regularized MMD objective.
#[allow(clippy::too_many_arguments)]
pub fn discriminator_step(
    state: &mut DiscriminatorState,
    kernel: &Kernel,
    true_points: &[Vec<f64>],
    true_masses: &[f64],
    gen_points: &[Vec<f64>],
    gen_masses: &[f64],
    cfg: &TrainConfig,
) -> Result<()> {
    state.check_mode(kernel)?;
    check_masses(true_points, true_masses)?;
    check_masses(gen_points, gen_masses)?;
    state.scale(cfg.rho());
    for (i, (x, p)) in true_points.iter().zip(true_masses).enumerate() {
        state.add_term(kernel, cfg.eta_d * p, x, TermClass::TruePoint(i))?;
    }
    for (j, (y, q)) in gen_points.iter().zip(gen_masses).enumerate() {
        state.add_term(kernel, -cfg.eta_d * q, y, TermClass::Generated(j))?;
    }
    if let DiscriminatorState::History(h) = state {
        h.prune(cfg.prune_tol);
    }
    Ok(())
}

/// Moves each generated point along `eta_g q_j grad f` evaluated at its current position.
pub fn generator_step(
    gen_points: &mut [Vec<f64>],
    gen_masses: &[f64],
    state: &DiscriminatorState,
    kernel: &Kernel,
    eta_g: f64,
) -> Result<()> {
    check_masses(gen_points, gen_masses)?;
    let grads = gen_points
        .iter()
        .map(|y| state.grad(kernel, y))
        .collect::<Result<Vec<_>>>()?;
    for ((y, g), q) in gen_points.iter_mut().zip(grads).zip(gen_masses) {
        for (yi, gi) in y.iter_mut().zip(g) {
            *yi += eta_g * q * gi;
        }
    }
    Ok(())
}

/// Stepper for the joint dynamics over raw point/mass slices. Masses need not
/// be normalized, which is what the single-region systems require.
pub struct Simulator<'a> {
    kernel: &'a Kernel,
    true_points: &'a [Vec<f64>],
    true_masses: &'a [f64],
    gen_masses: Vec<f64>,
    cfg: TrainConfig,
    state: DiscriminatorState,
    true_features: Option<Vec<f64>>,
    phases: Vec<Vec<(f64, f64)>>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        kernel: &'a Kernel,
        true_points: &'a [Vec<f64>],
        true_masses: &'a [f64],
        gen_masses: Vec<f64>,
        cfg: &TrainConfig,
        state: DiscriminatorState,
    ) -> Result<Self> {
        cfg.validate()?;
        check_masses(true_points, true_masses)?;
        for x in true_points {
            check_dim(kernel.dim(), x.len())?;
        }
        state.check_mode(kernel)?;
        let true_features = match (&state, kernel.feature_map()) {
            (DiscriminatorState::Parametric { .. }, Some(map)) => {
                let mut acc = vec![0.0; map.len()];
                for (x, p) in true_points.iter().zip(true_masses) {
                    for (a, v) in acc.iter_mut().zip(map.map(x)) {
                        *a += p * v;
                    }
                }
                Some(acc)
            }
            _ => None,
        };
        Ok(Self {
            kernel,
            true_points,
            true_masses,
            phases: vec![Vec::new(); gen_masses.len()],
            gen_masses,
            cfg: cfg.clone(),
            state,
            true_features,
        })
    }

    pub fn state(&self) -> &DiscriminatorState {
        &self.state
    }

    pub fn into_state(self) -> DiscriminatorState {
        self.state
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// One full iteration. Returns `NonFinite` if any coordinate blows up.
    pub fn step(&mut self, gen: &mut [Vec<f64>]) -> Result<()> {
        check_masses(gen, &self.gen_masses)?;
        if self.true_features.is_some() {
            self.step_parametric(gen)?;
        } else {
            let early = match self.cfg.update_order {
                UpdateOrder::Simultaneous => Some(
                    gen.iter()
                        .map(|y| self.state.grad(self.kernel, y))
                        .collect::<Result<Vec<_>>>()?,
                ),
                UpdateOrder::Alternating => None,
            };
            discriminator_step(
                &mut self.state,
                self.kernel,
                self.true_points,
                self.true_masses,
                gen,
                &self.gen_masses,
                &self.cfg,
            )?;
            let grads = match early {
                Some(g) => g,
                None => gen
                    .iter()
                    .map(|y| self.state.grad(self.kernel, y))
                    .collect::<Result<Vec<_>>>()?,
            };
            for ((y, g), q) in gen.iter_mut().zip(grads).zip(&self.gen_masses) {
                for (yi, gi) in y.iter_mut().zip(g) {
                    *yi += self.cfg.eta_g * q * gi;
                }
            }
        }
        for y in gen.iter() {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("generated point coordinate".into()));
            }
        }
        Ok(())
    }

    // Feature phases of each generated point are computed once and shared by
    // the theta update and the gradient, both of which use pre-step positions.
    fn step_parametric(&mut self, gen: &mut [Vec<f64>]) -> Result<()> {
        let map = self.kernel.feature_map().expect("checked in new");
        let s = map.scale();
        let DiscriminatorState::Parametric { theta } = &mut self.state else {
            unreachable!("parametric path requires parametric state")
        };
        for (y, ph) in gen.iter().zip(self.phases.iter_mut()) {
            map.phases(y, ph);
        }
        let grad_of = |theta: &[f64], ph: &[(f64, f64)], d: usize| {
            let mut g = vec![0.0; d];
            for ((w, &(c, sn)), t) in map.frequencies().zip(ph).zip(theta.chunks_exact(2)) {
                let k = s * (-sn * t[0] + c * t[1]);
                for (gi, wi) in g.iter_mut().zip(w) {
                    *gi += k * wi;
                }
            }
            g
        };
        let d = self.kernel.dim();
        let early: Option<Vec<Vec<f64>>> = match self.cfg.update_order {
            UpdateOrder::Simultaneous => {
                Some(self.phases.iter().map(|ph| grad_of(theta, ph, d)).collect())
            }
            UpdateOrder::Alternating => None,
        };
        let rho = self.cfg.rho();
        let eta_d = self.cfg.eta_d;
        let tf = self.true_features.as_ref().expect("parametric");
        for (t, a) in theta.iter_mut().zip(tf) {
            *t = rho * *t + eta_d * a;
        }
        for (ph, q) in self.phases.iter().zip(&self.gen_masses) {
            let c = eta_d * q * s;
            for (t, &(cs, sn)) in theta.chunks_exact_mut(2).zip(ph) {
                t[0] -= c * cs;
                t[1] -= c * sn;
            }
        }
        let grads = match early {
            Some(g) => g,
            None => self.phases.iter().map(|ph| grad_of(theta, ph, d)).collect(),
        };
        for ((y, g), q) in gen.iter_mut().zip(grads).zip(&self.gen_masses) {
            for (yi, gi) in y.iter_mut().zip(g) {
                *yi += self.cfg.eta_g * q * gi;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub points: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub step: usize,
    pub mmd2: f64,
    pub w2: f64,
    pub divergence_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainingTrace {
    pub kernel: KernelSpec,
    pub config: TrainConfig,
    pub true_distribution: DiscreteDistribution,
    pub gen_masses: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub metrics: Vec<MetricRecord>,
    /// Step at which a non-finite coordinate stopped the run.
    pub diverged_at: Option<usize>,
    pub diagnostic: Option<String>,
    #[serde(skip)]
    pub final_state: Option<DiscriminatorState>,
}

#[derive(Serialize)]
struct TraceFile<'a> {
    kernel: &'a KernelSpec,
    config: &'a TrainConfig,
    dim: usize,
    true_distribution: &'a DiscreteDistribution,
    gen_masses: &'a [f64],
    snapshot_steps: Vec<usize>,
    metrics: &'a [MetricRecord],
    diverged_at: Option<usize>,
    diagnostic: &'a Option<String>,
    discriminator_mode: Option<&'static str>,
    discriminator_size: Option<usize>,
}

impl TrainingTrace {
    pub fn initial_points(&self) -> &[Vec<f64>] {
        &self.snapshots[0].points
    }

    pub fn final_points(&self) -> &[Vec<f64>] {
        &self
            .snapshots
            .last()
            .expect("trace has an initial snapshot")
            .points
    }

    pub fn final_distribution(&self) -> Result<DiscreteDistribution> {
        DiscreteDistribution::new(self.final_points().to_vec(), self.gen_masses.clone())
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn dim(&self) -> usize {
        self.true_distribution.dim()
    }

    /// Snapshot CSV: `step,point_index,coord_0,...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["step".to_string(), "point_index".to_string()];
        header.extend((0..self.dim()).map(|i| format!("coord_{i}")));
        w.write_record(&header)?;
        for snap in &self.snapshots {
            for (j, p) in snap.points.iter().enumerate() {
                let mut row = vec![snap.step.to_string(), j.to_string()];
                row.extend(p.iter().map(|v| format!("{v:e}")));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Metadata and snapshot index; coordinates live in the CSV.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = TraceFile {
            kernel: &self.kernel,
            config: &self.config,
            dim: self.dim(),
            true_distribution: &self.true_distribution,
            gen_masses: &self.gen_masses,
            snapshot_steps: self.snapshots.iter().map(|s| s.step).collect(),
            metrics: &self.metrics,
            diverged_at: self.diverged_at,
            diagnostic: &self.diagnostic,
            discriminator_mode: self.final_state.as_ref().map(|s| s.mode()),
            discriminator_size: self.final_state.as_ref().map(|s| s.size()),
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &file)?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

/// Runs the joint dynamics from a zero discriminator.
pub fn train(
    p_r: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    spec: &KernelSpec,
    cfg: &TrainConfig,
) -> Result<TrainingTrace> {
    check_dim(p_r.dim(), p_g.dim())?;
    let kernel = Kernel::new(spec, p_r.dim())?;
    let state = DiscriminatorState::zero(&kernel, &cfg.representation, p_r.points())?;
    train_from(p_r, p_g, &kernel, cfg, state)
}

/// Runs the joint dynamics from a given discriminator state.
pub fn train_from(
    p_r: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    kernel: &Kernel,
    cfg: &TrainConfig,
    state: DiscriminatorState,
) -> Result<TrainingTrace> {
    check_dim(p_r.dim(), p_g.dim())?;
    check_dim(kernel.dim(), p_r.dim())?;
    let mut sim = Simulator::new(
        kernel,
        p_r.points(),
        p_r.masses(),
        p_g.masses().to_vec(),
        cfg,
        state,
    )?;
    let mut gen = p_g.points().to_vec();
    let record = |step: usize, pts: &[Vec<f64>]| -> Result<MetricRecord> {
        let dist = p_g.with_points(pts.to_vec())?;
        Ok(MetricRecord {
            step,
            mmd2: metrics::mmd_squared_with(p_r, &dist, kernel)?,
            // distances can overflow long before coordinates do
            w2: metrics::wasserstein2(p_r, &dist).unwrap_or(f64::NAN),
            divergence_fraction: metrics::divergence_fraction(&dist, metrics::DIVERGENCE_THRESHOLD),
        })
    };
    let mut snapshots = vec![Snapshot {
        step: 0,
        points: gen.clone(),
    }];
    let mut records = vec![record(0, &gen)?];
    let mut diverged_at = None;
    let mut diagnostic = None;
    for k in 1..=cfg.steps {
        match sim.step(&mut gen) {
            Ok(()) => {}
            Err(e @ (Error::NonFinite(_) | Error::OutsideExpansion { .. })) => {
                diverged_at = Some(k);
                diagnostic = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
        if k % cfg.snapshot_every == 0 || k == cfg.steps {
            snapshots.push(Snapshot {
                step: k,
                points: gen.clone(),
            });
            records.push(record(k, &gen)?);
        }
    }
    Ok(TrainingTrace {
        kernel: kernel.spec().clone(),
        config: cfg.clone(),
        true_distribution: p_r.clone(),
        gen_masses: p_g.masses().to_vec(),
        snapshots,
        metrics: records,
        diverged_at,
        diagnostic,
        final_state: Some(sim.into_state()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionAssignment {
    pub members: Vec<Vec<usize>>,
    /// `p_i - sum_{j in N_i} q_j`.
    pub excess: Vec<f64>,
    pub unassigned: Vec<usize>,
}

/// Assigns each generated point to its nearest true point if within `radius`.
pub fn assign_regions(
    p_r: &DiscreteDistribution,
    p_g: &DiscreteDistribution,
    radius: f64,
) -> Result<RegionAssignment> {
    check_dim(p_r.dim(), p_g.dim())?;
    if !(radius >= 0.0) {
        return Err(Error::InvalidInput("radius must be nonnegative".into()));
    }
    let mut members = vec![Vec::new(); p_r.len()];
    let mut unassigned = Vec::new();
    for (j, y) in p_g.points().iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (i, x) in p_r.points().iter().enumerate() {
            let d = sq_dist(x, y);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, d)) if radius > 0.0 && d.sqrt() <= radius => members[i].push(j),
            _ => unassigned.push(j),
        }
    }
    let excess = members
        .iter()
        .zip(p_r.masses())
        .map(|(m, p)| p - m.iter().map(|&j| p_g.masses()[j]).sum::<f64>())
        .collect();
    Ok(RegionAssignment {
        members,
        excess,
        unassigned,
    })
}

/// Sampling scheme for [`measure_isolation`]: each region is probed at
/// `radial` evenly spaced radii (including center and boundary) along
/// `angular` directions in the plane, or along the coordinate axes and the
/// inter-center direction in higher dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolationGrid {
    pub radial: usize,
    pub angular: usize,
}

impl Default for IsolationGrid {
    fn default() -> Self {
        Self {
            radial: 8,
            angular: 64,
        }
    }
}

fn region_probes(
    center: &[f64],
    radius: f64,
    toward: &[f64],
    grid: IsolationGrid,
) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if d == 2 {
        for a in 0..grid.angular.max(1) {
            let t = std::f64::consts::TAU * a as f64 / grid.angular.max(1) as f64;
            dirs.push(vec![t.cos(), t.sin()]);
        }
    } else {
        for k in 0..d {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[k] = s;
                dirs.push(e);
            }
        }
    }
    let diff: Vec<f64> = toward.iter().zip(center).map(|(a, b)| a - b).collect();
    let n = norm(&diff);
    if n > 0.0 {
        let u: Vec<f64> = diff.iter().map(|v| v / n).collect();
        dirs.push(u.iter().map(|v| -v).collect());
        dirs.push(u);
    }
    let levels = grid.radial.max(1);
    let mut out = vec![center.to_vec()];
    for l in 1..=levels {
        let r = radius * l as f64 / levels as f64;
        for u in &dirs {
            out.push(center.iter().zip(u).map(|(c, ui)| c + r * ui).collect());
        }
    }
    out
}

/// Largest cross-region kernel gradient norm over the probe grid.
pub fn measure_isolation(
    kernel: &Kernel,
    regions: &[(Vec<f64>, f64)],
    grid: IsolationGrid,
) -> Result<f64> {
    for (c, r) in regions {
        check_dim(kernel.dim(), c.len())?;
        if !(*r >= 0.0) {
            return Err(Error::InvalidInput(
                "region radius must be nonnegative".into(),
            ));
        }
    }
    let mut eps: f64 = 0.0;
    for (i, (ci, ri)) in regions.iter().enumerate() {
        for (j, (cj, rj)) in regions.iter().enumerate() {
            if i == j {
                continue;
            }
            let pi = region_probes(ci, *ri, cj, grid);
            let pj = region_probes(cj, *rj, ci, grid);
            for x in &pi {
                for y in &pj {
                    eps = eps.max(norm(&kernel.grad_x(x, y)?));
                }
            }
        }
    }
    Ok(eps)
}
