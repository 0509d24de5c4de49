//! Discrete-event simulation of G/Mn/1 and Mn/Gn/1 queues.
//!
//! The engine keeps the general-distribution side of each model on an
//! exact event calendar and resamples the exponential side at every event
//! with the current state's rate, which is valid by memorylessness. For
//! G/Mn/1 the scheduled epoch is the next arrival, so the residual
//! inter-arrival time at a departure is `scheduled - now` with no
//! estimation error; for Mn/Gn/1 the same holds for the residual service
//! time at an arrival. Each service in Mn/Gn/1 is drawn from the
//! distribution selected by the count present at its commencement.
//!
//! Replications are independent and deterministic given `(seed,
//! replication)`; they may run on several threads and are merged in
//! replication order, so the output is identical however they are
//! scheduled.

mod rng;
pub mod stats;
pub mod tracker;

pub use stats::{empirical_lst, mean_se, LstEstimate, ResidualSample, SimReport, SimStats, TstCounter};
pub use tracker::{Partition, Region, SegmentTracker};

use serde::{Deserialize, Serialize};

use crate::dist::exp_draw;
use crate::error::{Error, Result};
use crate::gmn1::Gmn1Model;
use crate::mngn1::MnGn1Model;
use rng::{stream, StreamRole};

/// Event cap applied to time-horizon runs (and any unstable model), so a
/// saturated queue cannot spin forever.
const HARD_EVENT_CAP: u64 = 50_000_000;

/// The two simulated model classes. Plain G/M/1 and G/M/c are constant and
/// staircase schedules of the first.
#[derive(Debug, Clone, PartialEq)]
pub enum QueueModel {
    GMn1(Gmn1Model),
    MnGn1(MnGn1Model),
}

impl QueueModel {
    pub fn is_stable(&self) -> bool {
        match self {
            QueueModel::GMn1(m) => m.is_stable(),
            QueueModel::MnGn1(m) => m.is_stable(),
        }
    }
}

/// Run length: a fixed number of events or a simulated-time horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    Events(u64),
    TimeHorizon(f64),
}

/// Full description of a simulation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: QueueModel,
    pub seed: u64,
    pub stop: StopRule,
    /// Events discarded before measurement starts.
    pub warmup_events: u64,
    /// Rate-balance partitions tracked during the run.
    pub trackers: Vec<Partition>,
    /// Two-step transition counters are kept for states `1..=tst_max`.
    pub tst_max: u32,
    pub replications: u32,
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
}

impl SimConfig {
    pub fn new(model: QueueModel, seed: u64, stop: StopRule) -> SimConfig {
        SimConfig {
            model,
            seed,
            stop,
            warmup_events: 0,
            trackers: Vec::new(),
            tst_max: 5,
            replications: 1,
            threads: 1,
        }
    }

    /// Default warmup: 10% of the event budget.
    pub fn with_default_warmup(mut self) -> SimConfig {
        if let StopRule::Events(n) = self.stop {
            self.warmup_events = n / 10;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        match self.stop {
            StopRule::Events(n) => {
                if n == 0 {
                    return Err(Error::Config("event budget must be >= 1".into()));
                }
                if self.warmup_events >= n {
                    return Err(Error::Config(format!(
                        "warmup ({}) must be below the event budget ({n})",
                        self.warmup_events
                    )));
                }
            }
            StopRule::TimeHorizon(t) => {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Config(format!(
                        "time horizon must be positive, got {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Runs all replications and merges them in order.
///
/// An unstable model is not an error: the run is capped and flagged in the
/// returned statistics.
pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    if !config.model.is_stable() {
        log::warn!("model fails its stability condition; the run is event-capped");
    }
    let reps = config.replications;
    let threads = if config.threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        config.threads
    }
    .min(reps as usize)
    .max(1);

    let mut results: Vec<Option<SimStats>> = vec![None; reps as usize];
    if threads <= 1 {
        for (r, slot) in results.iter_mut().enumerate() {
            *slot = Some(run_replication(config, r as u32));
        }
    } else {
        let next = std::sync::atomic::AtomicU32::new(0);
        let slots = std::sync::Mutex::new(&mut results);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let r = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if r >= reps {
                        break;
                    }
                    let stats = run_replication(config, r);
                    slots.lock().unwrap()[r as usize] = Some(stats);
                });
            }
        });
    }

    let replications: Vec<SimStats> = results.into_iter().map(Option::unwrap).collect();
    let mut aggregate = SimStats::new(!config.model.is_stable());
    for r in &replications {
        aggregate.merge(r);
    }
    Ok(SimReport {
        aggregate,
        replications,
    })
}

/// What the engine does at one event.
#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Arrival,
    Departure,
}

/// Model-specific behaviour behind the shared event loop.
trait Dynamics {
    /// Time and kind of the next event from state `n` at time `t`.
    fn next_event(&mut self, t: f64, n: u32) -> (f64, EventKind);
    /// State update on an arrival at `te` (state was `n`). Returns the
    /// residual sample recorded at this event, if any.
    fn on_arrival(&mut self, te: f64, n: u32) -> Option<ResidualSample>;
    /// State update on a departure at `te` (state after is `n`).
    fn on_departure(&mut self, te: f64, n: u32) -> Option<ResidualSample>;
}

/// G/Mn/1: renewal arrivals on the calendar, exponential service resampled
/// per event at the current rate. Residuals are sampled at departures.
struct GmnDynamics<'a> {
    model: &'a Gmn1Model,
    arrival_rng: rand_chacha::ChaCha8Rng,
    service_rng: rand_chacha::ChaCha8Rng,
    next_arrival: f64,
    departures_this_interarrival: u64,
}

impl<'a> GmnDynamics<'a> {
    fn new(model: &'a Gmn1Model, seed: u64, replication: u32) -> Self {
        let mut arrival_rng = stream(seed, replication, StreamRole::Arrival);
        let service_rng = stream(seed, replication, StreamRole::Service);
        let first = model.inter_arrival().sample(&mut arrival_rng);
        GmnDynamics {
            model,
            arrival_rng,
            service_rng,
            next_arrival: first,
            departures_this_interarrival: 0,
        }
    }
}

impl Dynamics for GmnDynamics<'_> {
    fn next_event(&mut self, t: f64, n: u32) -> (f64, EventKind) {
        if n == 0 {
            return (self.next_arrival, EventKind::Arrival);
        }
        let rate = self.model.mu_at(n as usize);
        let dt = exp_draw(&mut self.service_rng, rate);
        if self.next_arrival <= t + dt {
            (self.next_arrival, EventKind::Arrival)
        } else {
            (t + dt, EventKind::Departure)
        }
    }

    fn on_arrival(&mut self, te: f64, _n: u32) -> Option<ResidualSample> {
        self.departures_this_interarrival = 0;
        self.next_arrival = te + self.model.inter_arrival().sample(&mut self.arrival_rng);
        None
    }

    fn on_departure(&mut self, te: f64, _n_after: u32) -> Option<ResidualSample> {
        let sample = ResidualSample {
            value: self.next_arrival - te,
            first: self.departures_this_interarrival == 0,
        };
        self.departures_this_interarrival += 1;
        Some(sample)
    }
}

/// Mn/Gn/1: the running service stays on the calendar (drawn from the
/// distribution picked by the count at commencement), arrivals are
/// exponential and resampled per event at the current rate. Residuals are
/// sampled at arrivals that find the server busy.
struct MngnDynamics<'a> {
    model: &'a MnGn1Model,
    arrival_rng: rand_chacha::ChaCha8Rng,
    service_rng: rand_chacha::ChaCha8Rng,
    completion: f64,
    arrivals_this_service: u64,
}

impl<'a> MngnDynamics<'a> {
    fn new(model: &'a MnGn1Model, seed: u64, replication: u32) -> Self {
        MngnDynamics {
            model,
            arrival_rng: stream(seed, replication, StreamRole::Arrival),
            service_rng: stream(seed, replication, StreamRole::Service),
            completion: f64::INFINITY,
            arrivals_this_service: 0,
        }
    }

    fn commence_service(&mut self, te: f64, count_at_commencement: u32) {
        let spec = self.model.service_at(count_at_commencement as usize);
        self.completion = te + spec.sample(&mut self.service_rng);
        self.arrivals_this_service = 0;
    }
}

impl Dynamics for MngnDynamics<'_> {
    fn next_event(&mut self, t: f64, n: u32) -> (f64, EventKind) {
        let rate = self.model.lambda_at(n as usize);
        let t_arr = t + exp_draw(&mut self.arrival_rng, rate);
        if n == 0 || t_arr <= self.completion {
            (t_arr, EventKind::Arrival)
        } else {
            (self.completion, EventKind::Departure)
        }
    }

    fn on_arrival(&mut self, te: f64, n: u32) -> Option<ResidualSample> {
        if n == 0 {
            self.commence_service(te, 1);
            None
        } else {
            let sample = ResidualSample {
                value: self.completion - te,
                first: self.arrivals_this_service == 0,
            };
            self.arrivals_this_service += 1;
            Some(sample)
        }
    }

    fn on_departure(&mut self, te: f64, n_after: u32) -> Option<ResidualSample> {
        if n_after >= 1 {
            self.commence_service(te, n_after);
        } else {
            self.completion = f64::INFINITY;
        }
        None
    }
}

/// For which event side residual samples are recorded.
#[derive(Clone, Copy, PartialEq)]
enum SampleAt {
    Departure,
    Arrival,
}

fn run_replication(config: &SimConfig, replication: u32) -> SimStats {
    match &config.model {
        QueueModel::GMn1(m) => {
            let dynamics = GmnDynamics::new(m, config.seed, replication);
            drive(config, dynamics, SampleAt::Departure, !m.is_stable())
        }
        QueueModel::MnGn1(m) => {
            let dynamics = MngnDynamics::new(m, config.seed, replication);
            drive(config, dynamics, SampleAt::Arrival, !m.is_stable())
        }
    }
}

fn drive<D: Dynamics>(
    config: &SimConfig,
    mut dynamics: D,
    sample_at: SampleAt,
    unstable: bool,
) -> SimStats {
    let mut stats = SimStats::new(unstable);
    let (event_cap, horizon) = match config.stop {
        StopRule::Events(n) => (n, f64::INFINITY),
        StopRule::TimeHorizon(t) => (HARD_EVENT_CAP, t),
    };
    let warmup = config.warmup_events.min(event_cap.saturating_sub(1));

    let mut t = 0.0_f64;
    let mut n: u32 = 0;
    let mut measuring = false;
    let mut measure_start = 0.0;
    let mut became_empty_at: Option<f64> = None;
    let mut trackers: Vec<SegmentTracker> = Vec::new();
    let mut tst: Vec<SegmentTracker> = Vec::new();

    for idx in 0..event_cap {
        if idx == warmup {
            measuring = true;
            measure_start = t;
            trackers = config
                .trackers
                .iter()
                .map(|p| SegmentTracker::new(p.clone(), n))
                .collect();
            tst = (1..=config.tst_max)
                .map(|k| SegmentTracker::new(Partition::two_step(k).expect("k >= 1"), n))
                .collect();
        }
        let (te, kind) = dynamics.next_event(t, n);
        if te > horizon {
            if measuring {
                bump(&mut stats.time_in_state, n as usize, horizon - t);
            }
            t = horizon;
            break;
        }
        if measuring {
            bump(&mut stats.time_in_state, n as usize, te - t);
        }
        match kind {
            EventKind::Arrival => {
                stats.total_arrivals += 1;
                if measuring {
                    stats.arrivals += 1;
                    bump_u64(&mut stats.arrivals_finding, n as usize);
                    if n == 0 {
                        if let Some(start) = became_empty_at {
                            stats.idle_periods.push(te - start);
                        }
                    }
                }
                let sample = dynamics.on_arrival(te, n);
                if measuring && sample_at == SampleAt::Arrival {
                    if let Some(s) = sample {
                        push_sample(&mut stats.residual_samples, n as usize, s);
                    }
                }
                became_empty_at = None;
                n += 1;
            }
            EventKind::Departure => {
                stats.total_departures += 1;
                n -= 1;
                if measuring {
                    stats.departures += 1;
                    bump_u64(&mut stats.departures_leaving, n as usize);
                }
                let sample = dynamics.on_departure(te, n);
                if measuring && sample_at == SampleAt::Departure {
                    if let Some(s) = sample {
                        push_sample(&mut stats.residual_samples, n as usize, s);
                    }
                }
                if n == 0 {
                    became_empty_at = Some(te);
                }
            }
        }
        for tracker in trackers.iter_mut().chain(tst.iter_mut()) {
            tracker.observe(te, n);
        }
        t = te;
        stats.events += 1;
    }

    stats.final_state = n;
    stats.elapsed = t - measure_start;
    stats.trackers = trackers;
    stats.tst = tst
        .iter()
        .enumerate()
        .map(|(i, tr)| TstCounter {
            state: i as u32 + 1,
            up: tr.count_up(),
            down: tr.count_down(),
            elapsed: stats.elapsed,
        })
        .collect();
    stats
}

fn bump(v: &mut Vec<f64>, idx: usize, by: f64) {
    if v.len() <= idx {
        v.resize(idx + 1, 0.0);
    }
    v[idx] += by;
}

fn bump_u64(v: &mut Vec<u64>, idx: usize) {
    if v.len() <= idx {
        v.resize(idx + 1, 0);
    }
    v[idx] += 1;
}

fn push_sample(v: &mut Vec<Vec<ResidualSample>>, idx: usize, s: ResidualSample) {
    if v.len() <= idx {
        v.resize(idx + 1, Vec::new());
    }
    v[idx].push(s);
}

/// One row of the two-step transition rate table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TstRate {
    pub state: u32,
    pub up_rate: f64,
    pub down_rate: f64,
    /// `|up - down|` in count form; at most one on any path.
    pub count_gap: u64,
    /// Rate gap relative to the larger of the two rates.
    pub relative_gap: f64,
}

/// Per-state table of two-step up/down transition rates.
pub fn tst_rate_report(stats: &SimStats) -> Vec<TstRate> {
    stats
        .tst
        .iter()
        .map(|c| {
            let (up_rate, down_rate) = if c.elapsed > 0.0 {
                (c.up as f64 / c.elapsed, c.down as f64 / c.elapsed)
            } else {
                (0.0, 0.0)
            };
            let denom = up_rate.max(down_rate);
            TstRate {
                state: c.state,
                up_rate,
                down_rate,
                count_gap: c.up.abs_diff(c.down),
                relative_gap: if denom > 0.0 {
                    (up_rate - down_rate).abs() / denom
                } else {
                    0.0
                },
            }
        })
        .collect()
}
