//! Config file schema: model, simulation options, output options.
//!
//! Strictly validated — unknown fields are rejected so typos fail loudly.

use std::path::PathBuf;

use serde::Deserialize;

use rbq::dist::DistributionSpec;
use rbq::error::{Error, Result};
use rbq::gm1::Gm1Model;
use rbq::gmn1::{self, Gmn1Model};
use rbq::mngn1::{MnGn1Model, ServiceSchedule};
use rbq::schedule::RateSchedule;
use rbq::sim::{Partition, QueueModel, Region, SimConfig, StopRule};

pub const DEFAULT_S_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const DEFAULT_N_MAX: usize = 20;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Gm1 {
        inter_arrival: DistributionSpec,
        mu: f64,
    },
    Gmn1 {
        inter_arrival: DistributionSpec,
        mu: RateSchedule,
    },
    Gmc {
        inter_arrival: DistributionSpec,
        servers: u32,
        mu: f64,
    },
    Mngn1 {
        lambda: RateSchedule,
        services: ServiceSchedule,
    },
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Gm1 { .. } => "gm1",
            ModelConfig::Gmn1 { .. } => "gmn1",
            ModelConfig::Gmc { .. } => "gmc",
            ModelConfig::Mngn1 { .. } => "mngn1",
        }
    }

    /// The analytic model; enforces the stability condition.
    pub fn build_gm1(&self) -> Result<Option<Gm1Model>> {
        Ok(match self {
            ModelConfig::Gm1 { inter_arrival, mu } => {
                Some(Gm1Model::new(inter_arrival.clone(), *mu)?)
            }
            _ => None,
        })
    }

    pub fn build_gmn1(&self) -> Result<Option<Gmn1Model>> {
        Ok(match self {
            ModelConfig::Gm1 { inter_arrival, mu } => Some(Gmn1Model::new(
                inter_arrival.clone(),
                RateSchedule::constant(*mu)?,
            )?),
            ModelConfig::Gmn1 { inter_arrival, mu } => {
                Some(Gmn1Model::new(inter_arrival.clone(), mu.clone())?)
            }
            ModelConfig::Gmc {
                inter_arrival,
                servers,
                mu,
            } => Some(gmn1::build_gmc(inter_arrival.clone(), *servers, *mu)?),
            ModelConfig::Mngn1 { .. } => None,
        })
    }

    pub fn build_mngn1(&self) -> Result<Option<MnGn1Model>> {
        Ok(match self {
            ModelConfig::Mngn1 { lambda, services } => {
                Some(MnGn1Model::new(lambda.clone(), services.clone())?)
            }
            _ => None,
        })
    }

    /// The simulated model (same dynamics for every kind in its class).
    /// Stability is NOT enforced here: the simulator accepts unstable
    /// models, warns, and caps the run.
    pub fn build_queue_model(&self) -> Result<QueueModel> {
        Ok(match self {
            ModelConfig::Gm1 { inter_arrival, mu } => QueueModel::GMn1(
                Gmn1Model::new_unchecked(inter_arrival.clone(), RateSchedule::constant(*mu)?)?,
            ),
            ModelConfig::Gmn1 { inter_arrival, mu } => {
                QueueModel::GMn1(Gmn1Model::new_unchecked(inter_arrival.clone(), mu.clone())?)
            }
            ModelConfig::Gmc {
                inter_arrival,
                servers,
                mu,
            } => {
                let head = (1..*servers).map(|k| f64::from(k) * mu).collect();
                let schedule = RateSchedule::new(head, f64::from(*servers) * mu)?;
                QueueModel::GMn1(Gmn1Model::new_unchecked(inter_arrival.clone(), schedule)?)
            }
            ModelConfig::Mngn1 { lambda, services } => QueueModel::MnGn1(
                MnGn1Model::new_unchecked(lambda.clone(), services.clone())?,
            ),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub seed: u64,
    #[serde(default)]
    pub events: Option<u64>,
    #[serde(default)]
    pub time_horizon: Option<f64>,
    /// Events discarded before measurement; defaults to 10% of the event
    /// budget.
    #[serde(default)]
    pub warmup: Option<u64>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_tst_max")]
    pub tst_max: u32,
    #[serde(default)]
    pub trackers: Vec<PartitionConfig>,
    /// Worker threads; 0 means one per core.
    #[serde(default)]
    pub threads: usize,
}

fn default_replications() -> u32 {
    10
}

fn default_tst_max() -> u32 {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    /// Level crossing: D = {n <= level}, U above.
    Level { level: u32 },
    /// Two-step transitions through `state`.
    TwoStep { state: u32 },
    /// Explicit D and U state lists; everything else is M, states beyond
    /// the listed ones take `tail` ("down" | "mid" | "up").
    Sets {
        down: Vec<u32>,
        up: Vec<u32>,
        tail: String,
    },
}

impl PartitionConfig {
    pub fn build(&self) -> Result<Partition> {
        match self {
            PartitionConfig::Level { level } => Ok(Partition::level(*level)),
            PartitionConfig::TwoStep { state } => Partition::two_step(*state),
            PartitionConfig::Sets { down, up, tail } => {
                let region = match tail.as_str() {
                    "down" => Region::Down,
                    "mid" => Region::Mid,
                    "up" => Region::Up,
                    other => {
                        return Err(Error::Config(format!(
                            "tail region must be down|mid|up, got {other}"
                        )))
                    }
                };
                Partition::from_sets(down, up, region)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub s_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub n_max: Option<usize>,
    /// When set, `simulate` streams the raw residual samples here as CSV.
    #[serde(default)]
    pub residual_samples_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Test knob: simulate a different model than the analytic one. The
    /// verdict table is then expected to fail — used as a negative control.
    #[serde(default)]
    pub sim_model_override: Option<ModelConfig>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.model {
            ModelConfig::Gm1 { inter_arrival, mu } => {
                inter_arrival.validate()?;
                positive(*mu, "mu")?;
            }
            ModelConfig::Gmn1 { inter_arrival, mu } => {
                inter_arrival.validate()?;
                mu.validate()?;
            }
            ModelConfig::Gmc {
                inter_arrival,
                servers,
                mu,
            } => {
                inter_arrival.validate()?;
                positive(*mu, "mu")?;
                if *servers == 0 {
                    return Err(Error::Config("servers must be >= 1".into()));
                }
            }
            ModelConfig::Mngn1 { lambda, services } => {
                lambda.validate()?;
                services.validate()?;
            }
        }
        if let Some(sim) = &self.sim {
            match (sim.events, sim.time_horizon) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "give either events or time_horizon, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(Error::Config(
                        "the sim section needs events or time_horizon".into(),
                    ))
                }
                _ => {}
            }
            for t in &sim.trackers {
                t.build()?;
            }
        }
        if let Some(out) = &self.output {
            if let Some(grid) = &out.s_grid {
                if grid.is_empty() || grid.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                    return Err(Error::Config(
                        "s_grid entries must be nonnegative reals".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn s_grid(&self) -> Vec<f64> {
        self.output
            .as_ref()
            .and_then(|o| o.s_grid.clone())
            .unwrap_or_else(|| DEFAULT_S_GRID.to_vec())
    }

    pub fn n_max(&self) -> usize {
        self.output
            .as_ref()
            .and_then(|o| o.n_max)
            .unwrap_or(DEFAULT_N_MAX)
    }

    /// The simulator configuration (requires a sim section).
    pub fn sim_config(
        &self,
        seed_override: Option<u64>,
        threads_override: Option<usize>,
    ) -> Result<SimConfig> {
        let sim = self
            .sim
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a sim section".into()))?;
        let model = self
            .verify
            .as_ref()
            .and_then(|v| v.sim_model_override.as_ref())
            .unwrap_or(&self.model)
            .build_queue_model()?;
        let stop = match (sim.events, sim.time_horizon) {
            (Some(n), None) => StopRule::Events(n),
            (None, Some(t)) => StopRule::TimeHorizon(t),
            _ => return Err(Error::Config("give either events or time_horizon".into())),
        };
        let mut config = SimConfig::new(model, seed_override.unwrap_or(sim.seed), stop);
        config.warmup_events = match sim.warmup {
            Some(w) => w,
            None => sim.events.map_or(0, |n| n / 10),
        };
        config.replications = sim.replications;
        config.tst_max = sim.tst_max;
        config.threads = threads_override.unwrap_or(sim.threads);
        config.trackers = sim
            .trackers
            .iter()
            .map(PartitionConfig::build)
            .collect::<Result<_>>()?;
        config.validate()?;
        Ok(config)
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {x}")))
    }
}
