//! Parametric nonnegative distributions.
//!
//! [`DistributionSpec`] is the shared currency of the whole crate: every
//! family carries a closed-form CDF, Laplace-Stieltjes transform
//! `F*(s) = E[exp(-sX)]`, mean, and an inverse-CDF sampler. The five
//! families all have strictly positive mean, so `P(X in (0, inf)) > 0`
//! holds for every constructible instance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dd::{self, Dd};
use crate::error::{Error, Result};

/// Tolerance on the probability-vector sum of a hyperexponential.
const PROB_SUM_TOL: f64 = 1e-12;

/// A parametric nonnegative distribution with closed-form CDF, LST, mean,
/// and sampler.
///
/// Serializes as a tagged record, e.g.
/// `{"family":"erlang","shape":2,"rate":3.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Exponential with the given rate (mean `1/rate`).
    Exponential { rate: f64 },
    /// Unit mass at `value > 0`.
    Deterministic { value: f64 },
    /// Sum of `shape` independent exponentials with the given rate.
    Erlang { shape: u32, rate: f64 },
    /// Mixture of exponentials: branch `i` has probability `probs[i]` and
    /// rate `rates[i]`.
    HyperExponential { probs: Vec<f64>, rates: Vec<f64> },
    /// Uniform on `[lo, hi]` with `0 <= lo < hi`.
    Uniform { lo: f64, hi: f64 },
}

impl DistributionSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = DistributionSpec::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        let d = DistributionSpec::Deterministic { value };
        d.validate()?;
        Ok(d)
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        let d = DistributionSpec::Erlang { shape, rate };
        d.validate()?;
        Ok(d)
    }

    pub fn hyper_exponential(probs: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let d = DistributionSpec::HyperExponential { probs, rates };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = DistributionSpec::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    /// Checks the parameter constraints of the family.
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64, what: &str| -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{what} must be a positive real, got {x}")))
            }
        };
        match self {
            DistributionSpec::Exponential { rate } => positive(*rate, "exponential rate"),
            DistributionSpec::Deterministic { value } => positive(*value, "deterministic value"),
            DistributionSpec::Erlang { shape, rate } => {
                if *shape == 0 {
                    return Err(Error::Domain("erlang shape must be >= 1".into()));
                }
                positive(*rate, "erlang rate")
            }
            DistributionSpec::HyperExponential { probs, rates } => {
                if probs.is_empty() || probs.len() != rates.len() {
                    return Err(Error::Domain(format!(
                        "hyperexponential needs matching nonempty probs/rates, got {}/{}",
                        probs.len(),
                        rates.len()
                    )));
                }
                for &p in probs {
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::Domain(format!(
                            "hyperexponential probabilities must be nonnegative, got {p}"
                        )));
                    }
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::Domain(format!(
                        "hyperexponential probabilities must sum to 1 within {PROB_SUM_TOL}, got {sum}"
                    )));
                }
                for &r in rates {
                    positive(r, "hyperexponential rate")?;
                }
                Ok(())
            }
            DistributionSpec::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && lo < hi) {
                    return Err(Error::Domain(format!(
                        "uniform requires 0 <= lo < hi, got lo={lo}, hi={hi}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// E[X]; strictly positive for every valid instance.
    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::Deterministic { value } => *value,
            DistributionSpec::Erlang { shape, rate } => f64::from(*shape) / rate,
            DistributionSpec::HyperExponential { probs, rates } => probs
                .iter()
                .zip(rates)
                .map(|(p, r)| p / r)
                .sum(),
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// `P(X <= x)`; zero for `x < 0`, nondecreasing in `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            DistributionSpec::Exponential { rate } => -(-rate * x).exp_m1(),
            DistributionSpec::Deterministic { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::Erlang { shape, rate } => {
                // 1 - exp(-rx) * sum_{i<shape} (rx)^i / i!
                let rx = rate * x;
                let mut term = 1.0;
                let mut sum = 1.0;
                for i in 1..*shape {
                    term *= rx / f64::from(i);
                    sum += term;
                }
                1.0 - (-rx).exp() * sum
            }
            DistributionSpec::HyperExponential { probs, rates } => probs
                .iter()
                .zip(rates)
                .map(|(p, r)| p * (-(-r * x).exp_m1()))
                .sum(),
            DistributionSpec::Uniform { lo, hi } => {
                if x <= *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
        }
    }

    /// Closed-form Laplace-Stieltjes transform `F*(s) = E[exp(-sX)]`.
    ///
    /// Defined for `s >= 0` (and well-behaved for the slightly negative
    /// arguments used by numerical differentiation at the origin).
    pub fn lst(&self, s: f64) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => rate / (rate + s),
            DistributionSpec::Deterministic { value } => (-s * value).exp(),
            DistributionSpec::Erlang { shape, rate } => (rate / (rate + s)).powi(*shape as i32),
            DistributionSpec::HyperExponential { probs, rates } => probs
                .iter()
                .zip(rates)
                .map(|(p, r)| p * r / (r + s))
                .sum(),
            DistributionSpec::Uniform { lo, hi } => {
                if s == 0.0 {
                    return 1.0;
                }
                // exp(-s*lo) * (1 - exp(-s*(hi-lo))) / (s*(hi-lo)), via expm1
                // so that s -> 0 stays fully accurate.
                let width = hi - lo;
                (-s * lo).exp() * (-(-s * width).exp_m1()) / (s * width)
            }
        }
    }

    /// Derivative of the transform, `d/ds F*(s) = -E[X exp(-sX)]`. Kept as
    /// an independent closed form to cross-check the jet recurrences.
    #[cfg(test)]
    pub(crate) fn lst_deriv(&self, s: f64) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => -rate / ((rate + s) * (rate + s)),
            DistributionSpec::Deterministic { value } => -value * (-s * value).exp(),
            DistributionSpec::Erlang { shape, rate } => {
                let k = f64::from(*shape);
                -k / (rate + s) * (rate / (rate + s)).powi(*shape as i32)
            }
            DistributionSpec::HyperExponential { probs, rates } => probs
                .iter()
                .zip(rates)
                .map(|(p, r)| -p * r / ((r + s) * (r + s)))
                .sum(),
            DistributionSpec::Uniform { lo, hi } => {
                let (a, b) = (*lo, *hi);
                if s * b < 1e-3 {
                    // Power-series branch: the direct formula cancels near 0.
                    let m = |k: u32| moment_uniform(a, b, k);
                    -m(1) + s * m(2) - 0.5 * s * s * m(3) + s * s * s / 6.0 * m(4)
                } else {
                    // -d/ds of (exp(-sa) - exp(-sb)) / (s(b-a))
                    let ea = (-s * a).exp();
                    let eb = (-s * b).exp();
                    -((a / s + 1.0 / (s * s)) * ea - (b / s + 1.0 / (s * s)) * eb) / (b - a)
                }
            }
        }
    }

    /// Inverse-CDF draw. Consumes a fixed number of uniforms per call for
    /// each family, which keeps replicated streams aligned.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => exp_draw(rng, *rate),
            DistributionSpec::Deterministic { value } => *value,
            DistributionSpec::Erlang { shape, rate } => {
                (0..*shape).map(|_| exp_draw(rng, *rate)).sum()
            }
            DistributionSpec::HyperExponential { probs, rates } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut idx = rates.len() - 1;
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        idx = i;
                        break;
                    }
                }
                exp_draw(rng, rates[idx])
            }
            DistributionSpec::Uniform { lo, hi } => lo + rng.gen::<f64>() * (hi - lo),
        }
    }
}

pub(crate) fn exp_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.gen(); // [0, 1)
    -(-u).ln_1p() / rate // -ln(1-u)/rate
}

/// Scaled Taylor coefficients of the transform at `s`:
/// `c_j = (d^j/ds^j F*)(s) / j! = (-1)^j E[X^j exp(-sX)] / j!`.
///
/// Carried in double-double: the queueing recursions stack residual
/// operators at a common rate, and that tower is numerically expanding in
/// the higher coefficients — per-order independent rounding in the base
/// jet would be amplified by a constant factor per level. The recurrences
/// below keep all per-order arithmetic in double-double; the only f64
/// seeds are single transcendental factors that scale a whole jet
/// consistently (a consistent scale is a perturbation of the distribution
/// itself, which the recursions damp).
pub(crate) fn lst_jet(spec: &DistributionSpec, s: f64, order: usize) -> Vec<Dd> {
    let mut c = Vec::with_capacity(order + 1);
    match spec {
        DistributionSpec::Exponential { rate } => {
            let denom = dd::add(Dd::from_f64(*rate), Dd::from_f64(s));
            c.push(dd::div(Dd::from_f64(*rate), denom));
            for j in 1..=order {
                c.push(dd::neg(dd::div(c[j - 1], denom)));
            }
        }
        DistributionSpec::Deterministic { value } => {
            c.push(dd::exp(dd::neg(dd::mul(
                Dd::from_f64(s),
                Dd::from_f64(*value),
            ))));
            let neg_d = Dd::from_f64(-*value);
            for j in 1..=order {
                c.push(dd::div(dd::mul(c[j - 1], neg_d), Dd::from_f64(j as f64)));
            }
        }
        DistributionSpec::Erlang { shape, rate } => {
            let denom = dd::add(Dd::from_f64(*rate), Dd::from_f64(s));
            let ratio = dd::div(Dd::from_f64(*rate), denom);
            let mut head = dd::ONE;
            for _ in 0..*shape {
                head = dd::mul(head, ratio);
            }
            c.push(head);
            let k0 = f64::from(*shape);
            for j in 1..=order {
                // -(k0 - 1 + j) / j is formed in double-double from exact
                // integer parts: per-order f64 jitter here would be
                // amplified through deep residual towers.
                let factor = dd::div(
                    dd::div(Dd::from_f64(-(k0 - 1.0 + j as f64)), Dd::from_f64(j as f64)),
                    denom,
                );
                c.push(dd::mul(c[j - 1], factor));
            }
        }
        DistributionSpec::HyperExponential { probs, rates } => {
            c.resize(order + 1, dd::ZERO);
            for (p, r) in probs.iter().zip(rates) {
                let denom = dd::add(Dd::from_f64(*r), Dd::from_f64(s));
                let mut term = dd::div(dd::mul(Dd::from_f64(*p), Dd::from_f64(*r)), denom);
                c[0] = dd::add(c[0], term);
                for cj in c.iter_mut().take(order + 1).skip(1) {
                    term = dd::neg(dd::div(term, denom));
                    *cj = dd::add(*cj, term);
                }
            }
        }
        DistributionSpec::Uniform { lo, hi } => {
            // c_j = (-1)^j / (b - a) * int_a^b x^j e^{-sx} dx / j!. Shift to
            // y = x - a and expand the binomial; every piece is a positive
            // series, so nothing cancels:
            //   T_j = e^{-sa} sum_i a^{j-i}/(j-i)! * P_i,
            //   P_i = int_0^w y^i e^{-sy} dy / i!
            //       = sum_{m > i} e^{-sw} s^{m-i-1} w^m / m!.
            let (a, b) = (*lo, *hi);
            let w = b - a;
            let p = uniform_incomplete(s, w, order);
            // a^k / k! table
            let mut apow = Vec::with_capacity(order + 1);
            apow.push(dd::ONE);
            for k in 1..=order {
                apow.push(dd::div(
                    dd::mul(apow[k - 1], Dd::from_f64(a)),
                    Dd::from_f64(k as f64),
                ));
            }
            let ea = dd::exp(dd::neg(dd::mul(Dd::from_f64(s), Dd::from_f64(a))));
            let wd = Dd::from_f64(w);
            for j in 0..=order {
                let mut t = dd::ZERO;
                for i in 0..=j {
                    t = dd::add(t, dd::mul(apow[j - i], p[i]));
                }
                let signed = if j % 2 == 0 { t } else { dd::neg(t) };
                c.push(dd::div(dd::mul(signed, ea), wd));
            }
        }
    }
    c
}

/// `P_i = int_0^w y^i e^{-sy} dy / i!` for `i = 0..=order`, as convergent
/// positive sums (Poisson tails), stable for every `s >= 0`. The leading
/// terms `e^{-sw} w^{i+1}/(i+1)!` are chained in double-double from a
/// single f64 exponential seed.
fn uniform_incomplete(s: f64, w: f64, order: usize) -> Vec<Dd> {
    let sw = dd::mul(Dd::from_f64(s), Dd::from_f64(w));
    // lead_i = e^{-sw} w^{i+1} / (i+1)!
    let mut lead = dd::mul(dd::exp(dd::neg(sw)), Dd::from_f64(w));
    let mut out = Vec::with_capacity(order + 1);
    for i in 0..=order {
        let mut acc = dd::ZERO;
        let mut term = lead;
        let mut m = i + 1;
        loop {
            acc = dd::add(acc, term);
            m += 1;
            term = dd::div(dd::mul(term, sw), Dd::from_f64(m as f64));
            // magnitude test: for slightly negative s (numeric slopes at
            // the origin) the series alternates
            if term.hi.abs() < acc.hi.abs() * 1e-35 + 1e-320 {
                break;
            }
        }
        out.push(acc);
        lead = dd::div(dd::mul(lead, Dd::from_f64(w)), Dd::from_f64(i as f64 + 2.0));
    }
    out
}

/// k-th raw moment of Uniform(a, b): (b^{k+1} - a^{k+1}) / ((k+1)(b-a)).
#[cfg(test)]
fn moment_uniform(a: f64, b: f64, k: u32) -> f64 {
    let kp = k + 1;
    (b.powi(kp as i32) - a.powi(kp as i32)) / (f64::from(kp) * (b - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validation() {
        assert!(DistributionSpec::exponential(0.0).is_err());
        assert!(DistributionSpec::exponential(-1.0).is_err());
        assert!(DistributionSpec::deterministic(0.0).is_err());
        assert!(DistributionSpec::erlang(0, 1.0).is_err());
        assert!(DistributionSpec::uniform(2.0, 1.0).is_err());
        assert!(DistributionSpec::uniform(-0.5, 1.0).is_err());
        assert!(DistributionSpec::uniform(0.0, 1.0).is_ok());
        assert!(DistributionSpec::hyper_exponential(vec![0.5, 0.4], vec![1.0, 2.0]).is_err());
        assert!(DistributionSpec::hyper_exponential(vec![0.5, 0.5], vec![1.0, -2.0]).is_err());
        assert!(DistributionSpec::hyper_exponential(vec![0.5, 0.5], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn means() {
        assert_eq!(DistributionSpec::exponential(2.0).unwrap().mean(), 0.5);
        assert_eq!(DistributionSpec::deterministic(1.5).unwrap().mean(), 1.5);
        assert_eq!(DistributionSpec::erlang(2, 2.0).unwrap().mean(), 1.0);
        assert_eq!(DistributionSpec::uniform(1.0, 3.0).unwrap().mean(), 2.0);
        let h = DistributionSpec::hyper_exponential(vec![0.25, 0.75], vec![1.0, 3.0]).unwrap();
        assert!((h.mean() - (0.25 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn cdf_basics() {
        let e = DistributionSpec::exponential(2.0).unwrap();
        assert_eq!(e.cdf(-1.0), 0.0);
        assert!((e.cdf(0.5) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let d = DistributionSpec::deterministic(1.0).unwrap();
        assert_eq!(d.cdf(0.999), 0.0);
        assert_eq!(d.cdf(1.0), 1.0);
        let er = DistributionSpec::erlang(2, 2.0).unwrap();
        // 1 - e^{-2x}(1 + 2x) at x = 1
        assert!((er.cdf(1.0) - (1.0 - (-2.0f64).exp() * 3.0)).abs() < 1e-15);
        let u = DistributionSpec::uniform(1.0, 3.0).unwrap();
        assert_eq!(u.cdf(0.5), 0.0);
        assert_eq!(u.cdf(2.0), 0.5);
        assert_eq!(u.cdf(4.0), 1.0);
    }

    #[test]
    fn lst_at_zero_is_one() {
        let specs = [
            DistributionSpec::exponential(0.7).unwrap(),
            DistributionSpec::deterministic(2.0).unwrap(),
            DistributionSpec::erlang(3, 1.5).unwrap(),
            DistributionSpec::hyper_exponential(vec![0.3, 0.7], vec![0.5, 2.0]).unwrap(),
            DistributionSpec::uniform(0.0, 2.0).unwrap(),
        ];
        for d in &specs {
            assert!((d.lst(0.0) - 1.0).abs() < 1e-15, "{d:?}");
        }
    }

    #[test]
    fn lst_deriv_matches_difference_quotient() {
        let specs = [
            DistributionSpec::exponential(0.7).unwrap(),
            DistributionSpec::deterministic(2.0).unwrap(),
            DistributionSpec::erlang(3, 1.5).unwrap(),
            DistributionSpec::hyper_exponential(vec![0.3, 0.7], vec![0.5, 2.0]).unwrap(),
            DistributionSpec::uniform(0.5, 2.0).unwrap(),
        ];
        for d in &specs {
            for &s in &[1e-5, 0.3, 1.0, 4.0] {
                let h = 1e-6;
                let fd = (d.lst(s + h) - d.lst(s - h)) / (2.0 * h);
                assert!(
                    (d.lst_deriv(s) - fd).abs() < 1e-7,
                    "{d:?} at s={s}: {} vs {fd}",
                    d.lst_deriv(s)
                );
            }
        }
    }

    #[test]
    fn lst_jet_matches_closed_forms() {
        let specs = [
            DistributionSpec::exponential(0.7).unwrap(),
            DistributionSpec::deterministic(2.0).unwrap(),
            DistributionSpec::erlang(3, 1.5).unwrap(),
            DistributionSpec::hyper_exponential(vec![0.3, 0.7], vec![0.5, 2.0]).unwrap(),
            DistributionSpec::uniform(0.5, 2.0).unwrap(),
            DistributionSpec::uniform(0.0, 1.0).unwrap(),
        ];
        for d in &specs {
            for &s in &[0.0, 0.3, 1.0, 4.0] {
                let jet = lst_jet(d, s, 3);
                assert!((jet[0].to_f64() - d.lst(s)).abs() < 1e-13, "{d:?} value at {s}");
                assert!(
                    (jet[1].to_f64() - d.lst_deriv(s)).abs() < 1e-11,
                    "{d:?} deriv at {s}: {} vs {}",
                    jet[1].to_f64(),
                    d.lst_deriv(s)
                );
                // second coefficient against a central difference of the
                // first derivative
                let h = 1e-5;
                let fd = (d.lst_deriv(s + h) - d.lst_deriv(s - h)) / (2.0 * h) / 2.0;
                assert!((jet[2].to_f64() - fd).abs() < 1e-6, "{d:?} c2 at {s}");
            }
        }
    }

    #[test]
    fn lst_jet_high_order_moments() {
        // c_j = (-1)^j E[X^j e^{-sX}] / j!; at s = 0 these are the scaled
        // raw moments. Uniform(0, 1): E[X^j] = 1/(j+1).
        let u = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let jet = lst_jet(&u, 0.0, 40);
        for (j, c) in jet.iter().enumerate() {
            let mut expected = 1.0 / (j as f64 + 1.0);
            for k in 1..=j {
                expected /= k as f64;
            }
            if j % 2 == 1 {
                expected = -expected;
            }
            assert!(
                (c.to_f64() - expected).abs() <= 1e-13 * expected.abs().max(1e-300),
                "j={j}: {} vs {expected}",
                c.to_f64()
            );
        }
    }

    #[test]
    fn uniform_lst_small_s_stable() {
        let u = DistributionSpec::uniform(0.0, 2.0).unwrap();
        // series: 1 - s + (2/3) s^2/2 ...  at s = 1e-9
        let v = u.lst(1e-9);
        assert!((v - (1.0 - 1e-9)).abs() < 1e-15);
    }

    #[test]
    fn serde_tagged_record() {
        let d = DistributionSpec::erlang(2, 3.0).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"family":"erlang","shape":2,"rate":3.0}"#);
        let back: DistributionSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad: std::result::Result<DistributionSpec, _> =
            serde_json::from_str(r#"{"family":"erlang","shape":2,"rate":3.0,"x":1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn sampler_hits_mean() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let specs = [
            DistributionSpec::exponential(2.0).unwrap(),
            DistributionSpec::erlang(3, 1.5).unwrap(),
            DistributionSpec::hyper_exponential(vec![0.3, 0.7], vec![0.5, 2.0]).unwrap(),
            DistributionSpec::uniform(0.5, 2.5).unwrap(),
        ];
        for d in &specs {
            let n = 200_000;
            let m: f64 = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
            assert!(
                (m - d.mean()).abs() < 0.02 * d.mean().max(1.0),
                "{d:?}: {m} vs {}",
                d.mean()
            );
        }
    }
}
