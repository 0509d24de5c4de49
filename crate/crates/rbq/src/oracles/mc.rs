//! Monte Carlo references for the conditional residual `X - Y | X >= Y`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};

/// Draws `(X, Y)` pairs until `samples` of them satisfy `X >= Y` and
/// averages `X - Y` over the accepted pairs.
pub fn residual_mean_mc(
    f: &DistributionSpec,
    lambda: f64,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    accept_reject(f, lambda, samples, seed, |acc, d| *acc += d)
}

/// Empirical CDF of `X - Y | X >= Y` at `w` from `samples` accepted pairs.
pub fn residual_cdf_mc(
    f: &DistributionSpec,
    lambda: f64,
    w: f64,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    accept_reject(f, lambda, samples, seed, |acc, d| {
        if d <= w {
            *acc += 1.0;
        }
    })
}

fn accept_reject(
    f: &DistributionSpec,
    lambda: f64,
    samples: u64,
    seed: u64,
    mut record: impl FnMut(&mut f64, f64),
) -> Result<f64> {
    f.validate()?;
    if samples == 0 {
        return Err(Error::Estimation("need at least one sample".into()));
    }
    let exp = DistributionSpec::exponential(lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0u64;
    let mut attempts = 0u64;
    let mut acc = 0.0;
    let max_attempts = samples.saturating_mul(1000);
    while accepted < samples {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Estimation(format!(
                "acceptance rate below 0.1% after {attempts} attempts"
            )));
        }
        let x = f.sample(&mut rng);
        let y = exp.sample(&mut rng);
        if x >= y {
            record(&mut acc, x - y);
            accepted += 1;
        }
    }
    Ok(acc / samples as f64)
}
