//! Mn/Gn/1 analytics: state-dependent Poisson arrivals and state-dependent
//! general service.
//!
//! Arrivals occur at rate `lambda_n` while `n` customers are present; a
//! service that commences with `n` in the system draws from `G_n`. The
//! conditional residual service transform at arrival instants follows the
//! forward recursion
//!
//! ```text
//! R*_1 = D*_{lambda_1, G_1}
//! R*_n = (1 - G*_n(lambda_n)) D*_{lambda_n, G_n}
//!        + G*_n(lambda_n) D*_{lambda_n, R_{n-1}},   n >= 2
//! ```
//!
//! and the time-average probabilities obey the birth-death-like balance
//! `pi_{n-1} lambda_{n-1} (1 - R*_{n-1}(lambda_n)) = pi_n lambda_n
//! G*_n(lambda_n)` with `R*_0 = G*_1`.
//!
//! No closed tail is available here, so normalization watches the balance
//! ratios and completes the sum geometrically once they stabilize.

use serde::{Deserialize, Serialize};

use crate::dd;
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::schedule::RateSchedule;
use crate::transforms::{d_operator, Transform};

/// Default recursion depth when the caller has no better bound.
pub const DEFAULT_N_MAX: usize = 500;

/// Successive ratios must agree within this tolerance ...
const RATIO_STABLE_TOL: f64 = 1e-10;

/// ... over this many consecutive indices before the tail is completed.
const RATIO_STABLE_RUN: usize = 10;

/// Emitted mass beyond which the truncated tail is considered negligible.
const TAIL_EPS: f64 = 1e-9;

/// Service distributions indexed by the count at service commencement:
/// `G_1 ..= G_M` in the head, then a constant tail spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSchedule {
    head: Vec<DistributionSpec>,
    tail: DistributionSpec,
}

impl ServiceSchedule {
    pub fn new(head: Vec<DistributionSpec>, tail: DistributionSpec) -> Result<Self> {
        for d in head.iter().chain(std::iter::once(&tail)) {
            d.validate()?;
        }
        Ok(ServiceSchedule { head, tail })
    }

    pub fn constant(spec: DistributionSpec) -> Result<Self> {
        ServiceSchedule::new(Vec::new(), spec)
    }

    /// Distribution of a service commencing with `n >= 1` in the system.
    pub fn get(&self, n: usize) -> &DistributionSpec {
        debug_assert!(n >= 1);
        self.head.get(n - 1).unwrap_or(&self.tail)
    }

    pub fn head(&self) -> &[DistributionSpec] {
        &self.head
    }

    pub fn tail(&self) -> &DistributionSpec {
        &self.tail
    }

    pub fn validate(&self) -> Result<()> {
        for d in self.head.iter().chain(std::iter::once(&self.tail)) {
            d.validate()?;
        }
        Ok(())
    }
}

/// A single-server queue with state-dependent Poisson arrivals (`lambda_n`
/// while `n` are present) and state-dependent service (`G_n` for a service
/// commencing with `n` present).
#[derive(Debug, Clone, PartialEq)]
pub struct MnGn1Model {
    lambda: RateSchedule,
    services: ServiceSchedule,
}

impl MnGn1Model {
    /// Builds a model and enforces the tail load condition
    /// `lambda_bar * mean(G_bar) < 1`.
    pub fn new(lambda: RateSchedule, services: ServiceSchedule) -> Result<Self> {
        let model = MnGn1Model::new_unchecked(lambda, services)?;
        if !model.is_stable() {
            return Err(Error::Instability(format!(
                "tail load {} must be below 1",
                model.tail_load()
            )));
        }
        Ok(model)
    }

    /// Builds a model without the stability check.
    pub fn new_unchecked(lambda: RateSchedule, services: ServiceSchedule) -> Result<Self> {
        lambda.validate()?;
        services.validate()?;
        Ok(MnGn1Model { lambda, services })
    }

    pub fn lambda(&self) -> &RateSchedule {
        &self.lambda
    }

    pub fn services(&self) -> &ServiceSchedule {
        &self.services
    }

    /// Arrival rate with `n >= 0` customers present.
    pub fn lambda_at(&self, n: usize) -> f64 {
        self.lambda.get(n)
    }

    /// Service distribution for a commencement count of `n >= 1`.
    pub fn service_at(&self, n: usize) -> &DistributionSpec {
        self.services.get(n)
    }

    /// `lambda_bar * mean(G_bar)`.
    pub fn tail_load(&self) -> f64 {
        self.lambda.tail() * self.services.tail().mean()
    }

    pub fn is_stable(&self) -> bool {
        self.tail_load() < 1.0
    }
}

/// Steady state of an Mn/Gn/1 queue up to the stabilized truncation point.
#[derive(Debug, Clone)]
pub struct MnGn1Solution {
    /// `R*_1 ..= R*_{n_star}` (residual service at arrival instants).
    pub residuals: Vec<Transform>,
    /// Normalized time-average probabilities `pi_0 ..= pi_{n_star}`.
    pub pi: Vec<f64>,
}

impl MnGn1Solution {
    /// Residual service transform seen by an arrival finding `n >= 1`.
    pub fn residual(&self, n: usize) -> &Transform {
        debug_assert!(n >= 1);
        &self.residuals[(n - 1).min(self.residuals.len() - 1)]
    }
}

/// One forward step: `R*_n` from `R*_{n-1}` (or `R*_1` when there is no
/// predecessor). Mixture weights come from the tree's own evaluation so
/// every constant describes the same distribution.
fn residual_step(model: &MnGn1Model, n: usize, prev: Option<&Transform>) -> Result<Transform> {
    let lam = model.lambda_at(n);
    let base = Transform::base(model.service_at(n).clone())?;
    let fresh = d_operator(&base, lam)?;
    match prev {
        None => Ok(fresh),
        Some(r_prev) => {
            let g = base.eval_precise(lam);
            let carried = d_operator(r_prev, lam)?;
            Ok(Transform::mix_precise(
                vec![dd::sub(dd::ONE, g), g],
                vec![fresh, carried],
            ))
        }
    }
}

/// Forward recursion for the conditional residual service transforms
/// `R*_1 ..= R*_{n_max}`.
pub fn residuals_mngn1(model: &MnGn1Model, n_max: usize) -> Result<Vec<Transform>> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let mut out: Vec<Transform> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let r = residual_step(model, n, out.last())?;
        out.push(r);
    }
    Ok(out)
}

/// Probability that an arrival finding `n >= 2` customers is the first to
/// arrive during the current service: `1 - G*_n(lambda_n)`.
pub fn first_arrival_prob(model: &MnGn1Model, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "first-arrival probability is defined for n >= 2, got {n}"
        )));
    }
    Ok(1.0 - model.service_at(n).lst(model.lambda_at(n)))
}

/// Steady state via the balance product
/// `pi_n = pi_0 (lambda_0 / lambda_n) prod_k (1 - R*_{k-1}(lambda_k)) /
/// G*_k(lambda_k)`, normalized once the ratios stabilize.
///
/// No closed tail exists for this model, so the recursion runs until the
/// balance ratios agree to `1e-10` over ten consecutive indices; from
/// there the weights are continued geometrically — both because that is
/// the tail behaviour the stabilization certifies and because residual
/// towers amplify arithmetic noise with depth, so running them past
/// stabilization only degrades the result.
pub fn steady_state_mngn1(model: &MnGn1Model, n_max: usize) -> Result<MnGn1Solution> {
    if !model.is_stable() {
        return Err(Error::Instability(format!(
            "tail load {} must be below 1",
            model.tail_load()
        )));
    }
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }

    // Unnormalized weights p_n (p_0 = 1), with the residual towers built
    // incrementally and only while the ratios are still moving.
    let mut residuals: Vec<Transform> = Vec::new();
    let mut p = vec![1.0];
    let mut ratios: Vec<f64> = Vec::new();
    let mut stabilized_at: Option<usize> = None;
    for n in 1..=n_max {
        let lam_n = model.lambda_at(n);
        // R*_0 = G*_1; beyond that, the recursion output evaluated at the
        // next arrival rate.
        let upward = if n == 1 {
            1.0 - model.service_at(1).lst(lam_n)
        } else {
            1.0 - residuals[n - 2].eval(lam_n)
        };
        let downward = model.service_at(n).lst(lam_n);
        if downward <= 0.0 {
            return Err(Error::NonConvergence(format!(
                "G*_{n}(lambda_{n}) vanished; balance ratio undefined"
            )));
        }
        // p_n / p_{n-1} = (lambda_{n-1} / lambda_n) * upward / downward
        let w = p[n - 1] * (model.lambda_at(n - 1) / lam_n) * upward / downward;
        ratios.push(w / p[n - 1]);
        p.push(w);

        let k = ratios.len();
        if k >= RATIO_STABLE_RUN
            && ratios[k - RATIO_STABLE_RUN..]
                .windows(2)
                .all(|w2| (w2[1] - w2[0]).abs() < RATIO_STABLE_TOL)
        {
            stabilized_at = Some(n);
            break;
        }
        residuals.push(residual_step(model, n, residuals.last()).map_err(|e| {
            Error::NonConvergence(format!(
                "residual recursion failed at depth {n} before the balance ratios \
                 stabilized ({e}); head rates close to the tail rate worsen the \
                 conditioning of deep towers"
            ))
        })?);
    }
    let stabilized_at = stabilized_at.ok_or_else(|| {
        Error::NonConvergence(format!(
            "balance ratios did not stabilize within n_max = {n_max}; \
             the truncated tail mass cannot be certified below 1e-8"
        ))
    })?;
    let tail_ratio = *ratios.last().unwrap();
    if tail_ratio >= 1.0 {
        return Err(Error::Instability(format!(
            "stabilized balance ratio {tail_ratio} at n = {stabilized_at} is not below 1"
        )));
    }

    // Continue geometrically until the remaining tail is negligible, then
    // normalize with the closed geometric remainder.
    let mut n_cut = p.len() - 1;
    while n_cut < n_max {
        let running: f64 = p.iter().sum();
        if p[n_cut] * tail_ratio / (1.0 - tail_ratio) < TAIL_EPS * running {
            break;
        }
        p.push(p[n_cut] * tail_ratio);
        n_cut += 1;
    }
    let total: f64 = p.iter().sum::<f64>() + p[n_cut] * tail_ratio / (1.0 - tail_ratio);
    let pi: Vec<f64> = p.iter().map(|w| w / total).collect();
    residuals.truncate(n_cut);
    Ok(MnGn1Solution { residuals, pi })
}
