//! G/Mn/1 analytics: queue-length-dependent exponential service.
//!
//! Service runs at rate `mu_n` while `n` customers are present; the rate
//! schedule must be eventually constant (tail `mu_bar`), which anchors the
//! residual recursion: for `n >= head_len` the conditional residual
//! inter-arrival transform at departures equals the plain G/M/1 residual of
//! the tail queue, and below the head it satisfies
//!
//! ```text
//! R*_n = (1 - G*(mu_{n+1})) D*_{mu_{n+1},G} + G*(mu_{n+1}) D*_{mu_{n+1},R_{n+1}}
//! ```
//!
//! Steady state follows from two-step balance,
//! `a_n / a_{n-1} = G*(mu_n) / (1 - R*_n(mu_n))`, and level crossing
//! `a_{n-1} lambda = pi_n mu_n`.

use crate::dd;
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::gm1::{self, Gm1Model};
use crate::schedule::RateSchedule;
use crate::transforms::{self, d_operator, inverse_d, Transform};

/// Emitted arrays run to `head_len + max(50, ceil(log tail / log sigma))`.
const EMIT_MIN_BEYOND_HEAD: usize = 50;

/// A single-server queue with renewal arrivals and exponential service at
/// rate `mu_n` when `n` customers are in the system (`n >= 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Gmn1Model {
    inter_arrival: DistributionSpec,
    mu: RateSchedule,
}

impl Gmn1Model {
    /// Builds a model and enforces `lambda < tail rate`.
    ///
    /// The head of the schedule may be anything positive; only the constant
    /// tail decides stability.
    pub fn new(inter_arrival: DistributionSpec, mu: RateSchedule) -> Result<Self> {
        let model = Gmn1Model::new_unchecked(inter_arrival, mu)?;
        if !model.is_stable() {
            return Err(Error::Instability(format!(
                "arrival rate {} must be below the tail service rate {}",
                model.arrival_rate(),
                model.mu.tail()
            )));
        }
        Ok(model)
    }

    /// Builds a model without the stability check.
    pub fn new_unchecked(inter_arrival: DistributionSpec, mu: RateSchedule) -> Result<Self> {
        inter_arrival.validate()?;
        mu.validate()?;
        Ok(Gmn1Model { inter_arrival, mu })
    }

    pub fn inter_arrival(&self) -> &DistributionSpec {
        &self.inter_arrival
    }

    pub fn mu(&self) -> &RateSchedule {
        &self.mu
    }

    /// Service rate with `n >= 1` customers present.
    pub fn mu_at(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        self.mu.get(n - 1)
    }

    pub fn arrival_rate(&self) -> f64 {
        1.0 / self.inter_arrival.mean()
    }

    pub fn is_stable(&self) -> bool {
        self.arrival_rate() < self.mu.tail()
    }

    fn tail_gm1(&self) -> Result<Gm1Model> {
        Gm1Model::new(self.inter_arrival.clone(), self.mu.tail())
    }
}

/// Steady state of a G/Mn/1 queue: the conditional residual transforms and
/// the normalized epoch distributions.
#[derive(Debug, Clone)]
pub struct Gmn1Solution {
    /// `R*_0 ..= R*_N` where `N` is the schedule head length; indices past
    /// `N` reuse the last entry.
    pub residuals: Vec<Transform>,
    /// Arrival-epoch probabilities, normalized over the emitted range plus
    /// the analytic geometric tail.
    pub a: Vec<f64>,
    /// Time-average probabilities on the same index range.
    pub pi: Vec<f64>,
    /// Geometric ratio of the constant-rate tail.
    pub sigma_tail: f64,
}

impl Gmn1Solution {
    /// Residual transform at departures leaving `n` behind.
    pub fn residual(&self, n: usize) -> &Transform {
        &self.residuals[n.min(self.residuals.len() - 1)]
    }
}

fn residuals_with_tail(model: &Gmn1Model) -> Result<(Vec<Transform>, f64)> {
    let tail_model = model.tail_gm1()?;
    let sigma_tail = gm1::solve_sigma(&tail_model)?;
    let anchor = gm1::residual_lst(&tail_model, sigma_tail)?;
    let n = model.mu.head_len();
    let base = Transform::base(model.inter_arrival.clone())?;

    let mut rev = Vec::with_capacity(n + 1);
    rev.push(anchor);
    for idx in (0..n).rev() {
        // R*_idx from R*_{idx+1}; the relevant rate is mu_{idx+1}. The
        // mixture weight G*(mu) is taken from the tree's own evaluation so
        // that all constants describe the same distribution.
        let rate = model.mu_at(idx + 1);
        let g = base.eval_precise(rate);
        let fresh = d_operator(&base, rate)?;
        let carried = d_operator(rev.last().unwrap(), rate)?;
        rev.push(Transform::mix_precise(
            vec![dd::sub(dd::ONE, g), g],
            vec![fresh, carried],
        ));
    }
    rev.reverse();
    Ok((rev, sigma_tail))
}

/// Conditional residual inter-arrival transforms `R*_0 ..= R*_N`, built
/// backwards from the constant-tail anchor.
pub fn residuals_gmn1(model: &Gmn1Model) -> Result<Vec<Transform>> {
    if !model.is_stable() {
        return Err(Error::Instability(format!(
            "arrival rate {} must be below the tail service rate {}",
            model.arrival_rate(),
            model.mu().tail()
        )));
    }
    residuals_with_tail(model).map(|(r, _)| r)
}

/// Probability that a departure leaving `n >= 0` behind is the first to
/// depart during the current inter-arrival time: `1 - G*(mu_{n+1})`.
pub fn first_departure_prob(model: &Gmn1Model, n: usize) -> f64 {
    1.0 - model.inter_arrival.lst(model.mu_at(n + 1))
}

/// The model seen from `k` levels up: service rates `mu_{n+k}`.
///
/// The residual transforms commute with this shift:
/// `residuals(shift(m, k))[0] == residuals(m)[k]`.
pub fn shift_model(model: &Gmn1Model, k: usize) -> Gmn1Model {
    Gmn1Model {
        inter_arrival: model.inter_arrival.clone(),
        mu: model.mu.shift(k),
    }
}

/// G/M/c as a G/Mn/1 schedule: `mu_n = n mu` for `n < c` in the head and a
/// constant tail `c mu` from there on.
pub fn build_gmc(inter_arrival: DistributionSpec, c: u32, mu: f64) -> Result<Gmn1Model> {
    if c == 0 {
        return Err(Error::Domain("server count must be >= 1".into()));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Domain(format!(
            "per-server rate must be positive, got {mu}"
        )));
    }
    let head = (1..c).map(|k| f64::from(k) * mu).collect();
    let schedule = RateSchedule::new(head, f64::from(c) * mu)?;
    Gmn1Model::new(inter_arrival, schedule)
}

/// Steady state: arrival-epoch probabilities by the two-step product,
/// time-average probabilities by level crossing, both normalized with an
/// analytic geometric completion of the constant tail.
pub fn steady_state_gmn1(model: &Gmn1Model) -> Result<Gmn1Solution> {
    let (residuals, sigma_tail) = {
        if !model.is_stable() {
            return Err(Error::Instability(format!(
                "arrival rate {} must be below the tail service rate {}",
                model.arrival_rate(),
                model.mu().tail()
            )));
        }
        residuals_with_tail(model)?
    };
    let n_head = model.mu.head_len();
    let lambda = model.arrival_rate();

    let beyond = ((1e-12f64.ln() / sigma_tail.ln()).ceil().max(0.0) as usize)
        .clamp(EMIT_MIN_BEYOND_HEAD, 10_000);
    let n_star = n_head + beyond;

    // Unnormalized arrival-epoch weights via the balance ratios. Past the
    // head the ratio is constant; evaluate it once there.
    let ratio_at = |n: usize| -> f64 {
        let rate = model.mu_at(n);
        let r = residuals[n.min(n_head)].eval(rate);
        model.inter_arrival.lst(rate) / (1.0 - r)
    };
    let tail_ratio = ratio_at(n_head + 1);
    if !(tail_ratio > 0.0 && tail_ratio < 1.0) {
        return Err(Error::Instability(format!(
            "tail balance ratio {tail_ratio} must lie in (0, 1)"
        )));
    }

    let mut a_raw = Vec::with_capacity(n_star + 1);
    a_raw.push(1.0);
    for n in 1..=n_star {
        let ratio = if n <= n_head + 1 { ratio_at(n) } else { tail_ratio };
        let prev = *a_raw.last().unwrap();
        a_raw.push(prev * ratio);
    }
    let total_a: f64 =
        a_raw.iter().sum::<f64>() + a_raw[n_star] * tail_ratio / (1.0 - tail_ratio);
    let a: Vec<f64> = a_raw.iter().map(|w| w / total_a).collect();

    // Level crossing: pi_n mu_n = lambda a_{n-1}; pi_0 closes the sum, with
    // the same geometric tail ratio past the head.
    let mut pi = vec![0.0; n_star + 1];
    for n in 1..=n_star {
        pi[n] = lambda * a[n - 1] / model.mu_at(n);
    }
    let tail_mass = pi[n_star] * tail_ratio / (1.0 - tail_ratio);
    pi[0] = 1.0 - pi[1..].iter().sum::<f64>() - tail_mass;
    if pi[0] <= 0.0 {
        return Err(Error::NonConvergence(format!(
            "computed pi_0 = {} is not positive",
            pi[0]
        )));
    }

    Ok(Gmn1Solution {
        residuals,
        a,
        pi,
        sigma_tail,
    })
}

/// Recovers `R*_{n+1}` from `R*_n` by solving the residual recursion for
/// the carried branch and applying the inverse construction.
///
/// The `gamma` of the inverse (the carried density at zero) is estimated
/// from the large-`s` behaviour of the solved branch; the forward,
/// tail-anchored recursion needs no such estimate and stays the default.
pub fn reverse_residual(model: &Gmn1Model, r_n: &Transform, n: usize) -> Result<Transform> {
    let rate = model.mu_at(n + 1);
    let g = model.inter_arrival.lst(rate);
    if g <= 0.0 {
        return Err(Error::Domain(format!(
            "G*({rate}) vanished; the carried branch is unrecoverable"
        )));
    }
    let base = Transform::base(model.inter_arrival.clone())?;
    let fresh = d_operator(&base, rate)?;
    // H = D*_{rate, R_{n+1}} = (R*_n - (1 - g) D*_{rate,G}) / g: a signed
    // combination whose weights still sum to one.
    let h = Transform::linear_combination(
        vec![1.0 / g, -(1.0 - g) / g],
        vec![r_n.clone(), fresh],
    );
    let gamma = transforms::estimate_gamma_refined(&h, rate);
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidDensity(gamma));
    }
    inverse_d(&h, gamma, rate)
}
