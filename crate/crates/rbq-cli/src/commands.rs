//! The three commands: analytic tables, simulation reports, and the
//! analyze-vs-simulate verdict table.

use rbq::error::{Error, Result};
use rbq::gm1;
use rbq::gmn1;
use rbq::mngn1;
use rbq::sim::{self, simulate, tst_rate_report, SimReport, SimStats};
use rbq::transforms::Transform;

use crate::config::{ModelConfig, RunConfig};
use crate::report::*;

/// Number of residual blocks reported for state-dependent models.
const RESIDUAL_BLOCKS: usize = 4;

pub fn analyze(config: &RunConfig) -> Result<AnalyzeReport> {
    let grid = config.s_grid();
    let n_max = config.n_max();
    let lst_block = |n: usize, t: &Transform| ResidualBlock {
        n,
        mean: sig12(t.mean()),
        lst: grid
            .iter()
            .map(|&s| GridValue {
                s: sig12(s),
                value: sig12(t.eval(s)),
            })
            .collect(),
    };
    match &config.model {
        ModelConfig::Gm1 { .. } => {
            let model = config.model.build_gm1()?.unwrap();
            let sol = gm1::steady_state(&model)?;
            let len = n_max.min(sol.emit_len()).max(1);
            Ok(AnalyzeReport {
                schema_version: SCHEMA_VERSION,
                command: "analyze",
                model_kind: config.model.kind(),
                sigma: Some(sig12(sol.sigma)),
                sigma_tail: None,
                rho: Some(sig12(sol.rho)),
                sojourn_rate: Some(sig12(sol.sojourn_rate)),
                a: Some(sig12_vec(
                    &(0..len).map(|n| sol.a(n)).collect::<Vec<_>>(),
                )),
                pi: sig12_vec(&(0..len).map(|n| sol.pi(n)).collect::<Vec<_>>()),
                residuals: vec![lst_block(0, sol.residual())],
            })
        }
        ModelConfig::Gmn1 { .. } | ModelConfig::Gmc { .. } => {
            let model = config.model.build_gmn1()?.unwrap();
            let sol = gmn1::steady_state_gmn1(&model)?;
            let len = n_max.min(sol.pi.len());
            Ok(AnalyzeReport {
                schema_version: SCHEMA_VERSION,
                command: "analyze",
                model_kind: config.model.kind(),
                sigma: None,
                sigma_tail: Some(sig12(sol.sigma_tail)),
                rho: None,
                sojourn_rate: None,
                a: Some(sig12_vec(&sol.a[..len])),
                pi: sig12_vec(&sol.pi[..len]),
                residuals: sol
                    .residuals
                    .iter()
                    .enumerate()
                    .map(|(n, t)| lst_block(n, t))
                    .collect(),
            })
        }
        ModelConfig::Mngn1 { .. } => {
            let model = config.model.build_mngn1()?.unwrap();
            let sol = mngn1::steady_state_mngn1(&model, mngn1::DEFAULT_N_MAX)?;
            let len = n_max.min(sol.pi.len());
            Ok(AnalyzeReport {
                schema_version: SCHEMA_VERSION,
                command: "analyze",
                model_kind: config.model.kind(),
                sigma: None,
                sigma_tail: None,
                rho: None,
                sojourn_rate: None,
                a: None,
                pi: sig12_vec(&sol.pi[..len]),
                residuals: sol
                    .residuals
                    .iter()
                    .take(RESIDUAL_BLOCKS.min(n_max))
                    .enumerate()
                    .map(|(i, t)| lst_block(i + 1, t))
                    .collect(),
            })
        }
    }
}

pub fn run_simulation(
    config: &RunConfig,
    seed_override: Option<u64>,
    threads_override: Option<usize>,
) -> Result<(sim::SimConfig, SimReport)> {
    let sim_config = config.sim_config(seed_override, threads_override)?;
    let report = simulate(&sim_config)?;
    if let Some(path) = config
        .output
        .as_ref()
        .and_then(|o| o.residual_samples_csv.as_ref())
    {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        report
            .aggregate
            .write_residual_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok((sim_config, report))
}

pub fn simulate_report(
    config: &RunConfig,
    seed_override: Option<u64>,
    threads_override: Option<usize>,
) -> Result<SimulateReport> {
    let grid = config.s_grid();
    let n_max = config.n_max();
    let (sim_config, report) = run_simulation(config, seed_override, threads_override)?;
    let agg = &report.aggregate;

    let state_len = |len: usize| len.min(n_max);
    let pi_hat: Vec<f64> = (0..state_len(agg.time_in_state.len()))
        .map(|n| sig12(agg.pi_hat(n)))
        .collect();
    let a_hat: Vec<f64> = (0..state_len(agg.arrivals_finding.len()))
        .map(|n| sig12(agg.a_hat(n)))
        .collect();
    let d_hat: Vec<f64> = (0..state_len(agg.departures_leaving.len()))
        .map(|n| sig12(agg.d_hat(n)))
        .collect();

    let residuals: Vec<EmpiricalResidualBlock> = (0..agg.residual_samples.len().min(n_max))
        .filter(|&n| !agg.residuals_at(n).is_empty())
        .map(|n| {
            let rows = agg
                .residual_lst(n, &grid)
                .map(|v| {
                    v.into_iter()
                        .map(|e| LstRow {
                            s: sig12(e.s),
                            estimate: sig12(e.estimate),
                            std_error: sig12(e.std_error),
                        })
                        .collect()
                })
                .unwrap_or_default();
            EmpiricalResidualBlock {
                n,
                samples: agg.residuals_at(n).len(),
                first_fraction: agg.first_fraction(n).map(sig12),
                lst: rows,
            }
        })
        .collect();

    let idle_lst = if agg.idle_periods.is_empty() {
        None
    } else {
        Some(
            sim::empirical_lst(&agg.idle_periods, &grid)?
                .into_iter()
                .map(|e| LstRow {
                    s: sig12(e.s),
                    estimate: sig12(e.estimate),
                    std_error: sig12(e.std_error),
                })
                .collect(),
        )
    };

    let conservation_ok = report
        .replications
        .iter()
        .all(|r| r.total_arrivals == r.total_departures + u64::from(r.final_state));

    Ok(SimulateReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        model_kind: config.model.kind(),
        seed: sim_config.seed,
        replications: sim_config.replications,
        events_total: agg.events,
        elapsed_total: sig12(agg.elapsed),
        unstable: agg.unstable,
        conservation_ok,
        rbp_max_imbalance: agg
            .trackers
            .iter()
            .map(|t| t.max_imbalance())
            .max()
            .unwrap_or(0),
        pi_hat,
        a_hat,
        d_hat,
        idle_periods: agg.idle_periods.len(),
        idle_lst,
        rbp: agg
            .trackers
            .iter()
            .enumerate()
            .map(|(i, t)| RbpBlock {
                tracker: i,
                count_up: t.count_up(),
                count_down: t.count_down(),
                max_imbalance: t.max_imbalance(),
                violations: t.violations(),
            })
            .collect(),
        // rates from the merged counts; the <=1 count identity is pathwise,
        // so the gap is the worst case over replications
        tst: tst_rate_report(agg)
            .into_iter()
            .map(|r| TstBlock {
                state: r.state,
                up_rate: sig12(r.up_rate),
                down_rate: sig12(r.down_rate),
                count_gap: per_rep_tst_gap(&report, r.state),
            })
            .collect(),
        residuals,
        per_replication: report
            .replications
            .iter()
            .map(|r| ReplicationSummary {
                events: r.events,
                elapsed: sig12(r.elapsed),
                arrivals: r.arrivals,
                departures: r.departures,
                final_state: r.final_state,
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct Checks {
    rows: Vec<CheckRow>,
}

impl Checks {
    fn new() -> Checks {
        Checks { rows: Vec::new() }
    }

    /// |analytic - empirical| <= tolerance.
    fn close(&mut self, name: String, analytic: f64, empirical: f64, tolerance: f64) {
        let passed = (analytic - empirical).abs() <= tolerance;
        self.rows.push(CheckRow {
            name,
            analytic: sig12(analytic),
            empirical: sig12(empirical),
            tolerance: sig12(tolerance),
            passed,
        });
    }

    /// empirical <= bound (count-style checks).
    fn at_most(&mut self, name: String, bound: f64, empirical: f64) {
        self.rows.push(CheckRow {
            name,
            analytic: bound,
            empirical,
            tolerance: 0.0,
            passed: empirical <= bound,
        });
    }
}

fn mean_se(report: &SimReport, f: impl Fn(&SimStats) -> f64) -> (f64, f64) {
    let (m, se) = report.across(f);
    (m, se.max(1e-12))
}

/// Worst per-replication two-step count gap at `state` (the pathwise bound
/// applies within one trajectory, not to merged counts).
fn per_rep_tst_gap(report: &SimReport, state: u32) -> u64 {
    report
        .replications
        .iter()
        .flat_map(|r| r.tst.iter().filter(|c| c.state == state))
        .map(|c| c.up.abs_diff(c.down))
        .max()
        .unwrap_or(0)
}

/// Minimum aggregate sample count before a statistical check is emitted.
const MIN_SAMPLES: usize = 500;

pub fn verify(
    config: &RunConfig,
    seed_override: Option<u64>,
    threads_override: Option<usize>,
) -> Result<VerifyReport> {
    let sim_section = config
        .sim
        .as_ref()
        .ok_or_else(|| Error::Config("verify needs a sim section".into()))?;
    if sim_section.replications < 2 {
        return Err(Error::Config(
            "verify needs at least 2 replications for its error bars".into(),
        ));
    }
    let grid = config.s_grid();
    let (sim_config, report) = run_simulation(config, seed_override, threads_override)?;
    let mut checks = Checks::new();

    match &config.model {
        ModelConfig::Gm1 { .. } => {
            let model = config.model.build_gm1()?.unwrap();
            let sol = gm1::steady_state(&model)?;
            let resid =
                (sol.sigma - model.inter_arrival().lst(model.mu() * (1.0 - sol.sigma))).abs();
            checks.close("sigma_fixed_point_residual".into(), 0.0, resid, 1e-12);
            let (pi0, se) = mean_se(&report, |r| r.pi_hat(0));
            checks.close("pi_0".into(), 1.0 - sol.rho, pi0, 3.0 * se);
            for n in 1..=3usize {
                let (ratio, se) = mean_se(&report, |r| r.a_hat(n) / r.a_hat(n - 1));
                checks.close(format!("a_ratio_{n}"), sol.sigma, ratio, 3.0 * se);
            }
            let resid = sol.residual();
            residual_checks(&mut checks, &report, &grid, 0, 3, |_n| {
                move |s: f64| resid.eval(s)
            });
            for &s in &grid {
                if report.aggregate.idle_periods.len() < MIN_SAMPLES {
                    break;
                }
                let (m, se) = mean_se(&report, |r| {
                    sim::empirical_lst(&r.idle_periods, &[s])
                        .map(|v| v[0].estimate)
                        .unwrap_or(f64::NAN)
                });
                checks.close(
                    format!("idle_lst_s{s}"),
                    sol.residual().eval(s),
                    m,
                    3.0 * se,
                );
            }
            let gmn = config.model.build_gmn1()?.unwrap();
            first_departure_checks(&mut checks, &report, &gmn);
        }
        ModelConfig::Gmn1 { .. } | ModelConfig::Gmc { .. } => {
            let model = config.model.build_gmn1()?.unwrap();
            let sol = gmn1::steady_state_gmn1(&model)?;
            for n in 0..=5usize.min(sol.pi.len() - 1) {
                let (pi, se) = mean_se(&report, |r| r.pi_hat(n));
                checks.close(format!("pi_{n}"), sol.pi[n], pi, 3.0 * se);
            }
            let sol_ref = &sol;
            residual_checks(&mut checks, &report, &grid, 0, 3, |n| {
                move |s: f64| sol_ref.residual(n).eval(s)
            });
            first_departure_checks(&mut checks, &report, &model);
        }
        ModelConfig::Mngn1 { .. } => {
            let model = config.model.build_mngn1()?.unwrap();
            let sol = mngn1::steady_state_mngn1(&model, mngn1::DEFAULT_N_MAX)?;
            for n in 0..=5usize.min(sol.pi.len() - 1) {
                let (pi, se) = mean_se(&report, |r| r.pi_hat(n));
                checks.close(format!("pi_{n}"), sol.pi[n], pi, 3.0 * se);
            }
            let sol_ref = &sol;
            residual_checks(&mut checks, &report, &grid, 1, 3, |n| {
                move |s: f64| sol_ref.residual(n).eval(s)
            });
            for n in 2..=3usize {
                if report.aggregate.residuals_at(n).len() < MIN_SAMPLES {
                    continue;
                }
                let expected = mngn1::first_arrival_prob(&model, n)?;
                let (frac, se) =
                    mean_se(&report, |r| r.first_fraction(n).unwrap_or(f64::NAN));
                checks.close(format!("first_arrival_{n}"), expected, frac, 3.0 * se);
            }
        }
    }

    // pathwise and count checks, common to every model kind
    for (i, tracker) in report.aggregate.trackers.iter().enumerate() {
        checks.at_most(
            format!("rbp_max_imbalance_{i}"),
            1.0,
            tracker.max_imbalance() as f64,
        );
    }
    for row in tst_rate_report(&report.aggregate) {
        checks.at_most(
            format!("tst_count_gap_{}", row.state),
            1.0,
            per_rep_tst_gap(&report, row.state) as f64,
        );
    }
    let violations = report
        .replications
        .iter()
        .filter(|r| r.total_arrivals != r.total_departures + u64::from(r.final_state))
        .count();
    checks.at_most("conservation_violations".into(), 0.0, violations as f64);

    let all_passed = checks.rows.iter().all(|c| c.passed);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        model_kind: config.model.kind(),
        seed: sim_config.seed,
        checks: checks.rows,
        all_passed,
    })
}

/// Residual-transform checks for levels `n_lo..=n_hi` on the grid.
fn residual_checks<F, G>(
    checks: &mut Checks,
    report: &SimReport,
    grid: &[f64],
    n_lo: usize,
    n_hi: usize,
    analytic: F,
) where
    F: Fn(usize) -> G,
    G: Fn(f64) -> f64,
{
    for n in n_lo..=n_hi {
        if report.aggregate.residuals_at(n).len() < MIN_SAMPLES {
            continue;
        }
        let at = analytic(n);
        for &s in grid {
            let (m, se) = mean_se(report, |r| {
                r.residual_lst(n, &[s])
                    .map(|v| v[0].estimate)
                    .unwrap_or(f64::NAN)
            });
            checks.close(format!("residual_lst_n{n}_s{s}"), at(s), m, 3.0 * se);
        }
    }
}

fn first_departure_checks(checks: &mut Checks, report: &SimReport, model: &gmn1::Gmn1Model) {
    for n in 0..=2usize {
        if report.aggregate.residuals_at(n).len() < MIN_SAMPLES {
            continue;
        }
        let expected = gmn1::first_departure_prob(model, n);
        let (frac, se) = mean_se(report, |r| r.first_fraction(n).unwrap_or(f64::NAN));
        checks.close(format!("first_departure_{n}"), expected, frac, 3.0 * se);
    }
}
