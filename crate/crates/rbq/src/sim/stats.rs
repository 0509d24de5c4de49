//! Measurement containers and estimators for simulation runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::tracker::SegmentTracker;

/// Version tag of the serialized statistics record.
pub const STATS_SCHEMA_VERSION: u32 = 1;

/// One residual observation: the exact time to the next scheduled event on
/// the general-distribution side, and whether the sampling event was the
/// first of its kind within the current interval/service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub value: f64,
    pub first: bool,
}

/// Two-step transition counts through one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TstCounter {
    pub state: u32,
    pub up: u64,
    pub down: u64,
    /// Measured simulated time behind the counts.
    pub elapsed: f64,
}

/// Measurements of one replication (or the merge of several).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    /// Measured (post-warmup) simulated time.
    pub elapsed: f64,
    /// Events processed, warmup included.
    pub events: u64,
    /// Post-warmup arrival / departure counts.
    pub arrivals: u64,
    pub departures: u64,
    /// Whole-run counts for the conservation identity
    /// `total_arrivals = total_departures + final_state`.
    pub total_arrivals: u64,
    pub total_departures: u64,
    pub final_state: u32,
    /// Time spent with `n` customers present (post-warmup), indexed by `n`.
    pub time_in_state: Vec<f64>,
    /// Arrivals that found `n` present.
    pub arrivals_finding: Vec<u64>,
    /// Departures that left `n` behind.
    pub departures_leaving: Vec<u64>,
    /// Residual samples keyed by `n`: for queue-length-dependent service
    /// models the residual inter-arrival at departures leaving `n`; for
    /// state-dependent arrival models the residual service at arrivals
    /// finding `n`.
    pub residual_samples: Vec<Vec<ResidualSample>>,
    /// Durations of empty periods (departure into the empty state until the
    /// next arrival).
    pub idle_periods: Vec<f64>,
    /// Two-step transition counters for small states.
    pub tst: Vec<TstCounter>,
    /// User-attached rate-balance trackers.
    pub trackers: Vec<SegmentTracker>,
    /// True when the configured model fails its stability condition; such
    /// runs are capped rather than rejected.
    pub unstable: bool,
}

impl SimStats {
    pub(crate) fn new(unstable: bool) -> SimStats {
        SimStats {
            elapsed: 0.0,
            events: 0,
            arrivals: 0,
            departures: 0,
            total_arrivals: 0,
            total_departures: 0,
            final_state: 0,
            time_in_state: Vec::new(),
            arrivals_finding: Vec::new(),
            departures_leaving: Vec::new(),
            residual_samples: Vec::new(),
            idle_periods: Vec::new(),
            tst: Vec::new(),
            trackers: Vec::new(),
            unstable,
        }
    }

    /// Fraction of measured time spent with `n` present.
    pub fn pi_hat(&self, n: usize) -> f64 {
        if self.elapsed <= 0.0 {
            return 0.0;
        }
        self.time_in_state.get(n).copied().unwrap_or(0.0) / self.elapsed
    }

    /// Fraction of measured arrivals that found `n` present.
    pub fn a_hat(&self, n: usize) -> f64 {
        if self.arrivals == 0 {
            return 0.0;
        }
        self.arrivals_finding.get(n).copied().unwrap_or(0) as f64 / self.arrivals as f64
    }

    /// Fraction of measured departures that left `n` behind.
    pub fn d_hat(&self, n: usize) -> f64 {
        if self.departures == 0 {
            return 0.0;
        }
        self.departures_leaving.get(n).copied().unwrap_or(0) as f64 / self.departures as f64
    }

    /// Residual samples recorded at level `n`.
    pub fn residuals_at(&self, n: usize) -> &[ResidualSample] {
        self.residual_samples
            .get(n)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Empirical conditional residual transform at level `n`.
    pub fn residual_lst(&self, n: usize, s_grid: &[f64]) -> Result<Vec<LstEstimate>> {
        let values: Vec<f64> = self.residuals_at(n).iter().map(|r| r.value).collect();
        empirical_lst(&values, s_grid)
    }

    /// Fraction of residual samples at level `n` flagged as first within
    /// their interval/service; `None` when no samples exist.
    pub fn first_fraction(&self, n: usize) -> Option<f64> {
        let samples = self.residuals_at(n);
        if samples.is_empty() {
            return None;
        }
        Some(samples.iter().filter(|r| r.first).count() as f64 / samples.len() as f64)
    }

    /// Folds another replication into this one. Counts and sample lists
    /// merge; tracker imbalance fields keep per-run semantics via max.
    pub(crate) fn merge(&mut self, other: &SimStats) {
        self.elapsed += other.elapsed;
        self.events += other.events;
        self.arrivals += other.arrivals;
        self.departures += other.departures;
        self.total_arrivals += other.total_arrivals;
        self.total_departures += other.total_departures;
        // summed across replications, so the conservation identity keeps
        // holding for the aggregate
        self.final_state += other.final_state;
        merge_f64(&mut self.time_in_state, &other.time_in_state);
        merge_u64(&mut self.arrivals_finding, &other.arrivals_finding);
        merge_u64(&mut self.departures_leaving, &other.departures_leaving);
        if self.residual_samples.len() < other.residual_samples.len() {
            self.residual_samples
                .resize(other.residual_samples.len(), Vec::new());
        }
        for (mine, theirs) in self.residual_samples.iter_mut().zip(&other.residual_samples) {
            mine.extend_from_slice(theirs);
        }
        self.idle_periods.extend_from_slice(&other.idle_periods);
        if self.tst.is_empty() {
            self.tst = other.tst.clone();
        } else {
            for (mine, theirs) in self.tst.iter_mut().zip(&other.tst) {
                debug_assert_eq!(mine.state, theirs.state);
                mine.up += theirs.up;
                mine.down += theirs.down;
                mine.elapsed += theirs.elapsed;
            }
        }
        if self.trackers.is_empty() {
            self.trackers = other
                .trackers
                .iter()
                .map(SegmentTracker::summary_clone)
                .collect();
        } else {
            for (mine, theirs) in self.trackers.iter_mut().zip(&other.trackers) {
                mine.absorb(theirs);
            }
        }
        self.unstable |= other.unstable;
    }

    /// Versioned view for serialization: the record embeds
    /// [`STATS_SCHEMA_VERSION`] next to the statistics.
    pub fn record(&self) -> SimStatsRecord<'_> {
        SimStatsRecord {
            version: STATS_SCHEMA_VERSION,
            stats: self,
        }
    }

    /// Writes the residual samples as flat CSV rows `n,residual,first_flag`.
    pub fn write_residual_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,residual,first_flag")?;
        for (n, samples) in self.residual_samples.iter().enumerate() {
            for r in samples {
                writeln!(w, "{},{},{}", n, r.value, u8::from(r.first))?;
            }
        }
        Ok(())
    }
}

fn merge_f64(into: &mut Vec<f64>, from: &[f64]) {
    if into.len() < from.len() {
        into.resize(from.len(), 0.0);
    }
    for (a, b) in into.iter_mut().zip(from) {
        *a += b;
    }
}

fn merge_u64(into: &mut Vec<u64>, from: &[u64]) {
    if into.len() < from.len() {
        into.resize(from.len(), 0);
    }
    for (a, b) in into.iter_mut().zip(from) {
        *a += b;
    }
}

/// Serialized form of [`SimStats`] with an explicit schema version.
#[derive(Debug, Serialize)]
pub struct SimStatsRecord<'a> {
    pub version: u32,
    #[serde(flatten)]
    pub stats: &'a SimStats,
}

/// Point estimate of an LST with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstEstimate {
    pub s: f64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Empirical LST of a sample: mean of `exp(-s x)` with the sample standard
/// error at each grid point.
pub fn empirical_lst(samples: &[f64], s_grid: &[f64]) -> Result<Vec<LstEstimate>> {
    if samples.is_empty() {
        return Err(Error::Estimation("empty sample".into()));
    }
    let m = samples.len() as f64;
    Ok(s_grid
        .iter()
        .map(|&s| {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for &x in samples {
                let v = (-s * x).exp();
                sum += v;
                sum_sq += v * v;
            }
            let mean = sum / m;
            let var = if samples.len() < 2 {
                0.0
            } else {
                ((sum_sq - sum * sum / m) / (m - 1.0)).max(0.0)
            };
            LstEstimate {
                s,
                estimate: mean,
                std_error: (var / m).sqrt(),
            }
        })
        .collect())
}

/// All replications of a simulation run: the merged view plus the
/// per-replication statistics used for confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub aggregate: SimStats,
    pub replications: Vec<SimStats>,
}

impl SimReport {
    /// Mean and standard error across replications of a per-replication
    /// statistic.
    pub fn across<F: Fn(&SimStats) -> f64>(&self, f: F) -> (f64, f64) {
        mean_se(&self.replications.iter().map(f).collect::<Vec<_>>())
    }
}

/// Mean and standard error of a small sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_lst_examples() {
        let est = empirical_lst(&[0.0, 0.0, 0.0], &[1.0]).unwrap();
        assert_eq!(est[0].estimate, 1.0);
        assert_eq!(est[0].std_error, 0.0);

        let est = empirical_lst(&[2.0f64.ln()], &[1.0]).unwrap();
        assert!((est[0].estimate - 0.5).abs() < 1e-15);
        assert_eq!(est[0].std_error, 0.0);

        assert!(empirical_lst(&[], &[1.0]).is_err());
    }

    #[test]
    fn empirical_lst_exponential_draws() {
        use rand::SeedableRng;
        let d = crate::dist::DistributionSpec::exponential(2.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..1_000_000).map(|_| d.sample(&mut rng)).collect();
        let est = empirical_lst(&xs, &[2.0]).unwrap();
        assert!(
            (est[0].estimate - 0.5).abs() < 3.0 * est[0].std_error,
            "{} +- {}",
            est[0].estimate,
            est[0].std_error
        );
        assert!(est[0].std_error < 1e-3);
    }

    #[test]
    fn record_embeds_version() {
        let stats = SimStats::new(false);
        let json = serde_json::to_value(stats.record()).unwrap();
        assert_eq!(json["version"], serde_json::json!(STATS_SCHEMA_VERSION));
        assert!(json.get("elapsed").is_some());
    }

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_se(&[1.0, 1.0, 1.0]);
        assert_eq!(m, 1.0);
        assert_eq!(se, 0.0);
        let (m, se) = mean_se(&[0.0, 2.0]);
        assert_eq!(m, 1.0);
        assert!((se - 1.0).abs() < 1e-12);
    }
}
