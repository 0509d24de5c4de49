//! Report structures and their JSON/CSV rendering.
//!
//! Every float is rounded to 12 significant digits before serialization so
//! fixed-seed runs produce diff-stable bytes.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 12 significant decimal digits (exact decimal rounding via the
/// formatter, not arithmetic scaling).
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn sig12_vec(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(sig12).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridValue {
    pub s: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualBlock {
    /// Queue length the transform is conditioned on; for a plain G/M/1 the
    /// single block applies to every n.
    pub n: usize,
    pub mean: f64,
    pub lst: Vec<GridValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub model_kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_tail: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sojourn_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    pub pi: Vec<f64>,
    pub residuals: Vec<ResidualBlock>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LstRow {
    pub s: f64,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalResidualBlock {
    pub n: usize,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_fraction: Option<f64>,
    pub lst: Vec<LstRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RbpBlock {
    pub tracker: usize,
    pub count_up: u64,
    pub count_down: u64,
    pub max_imbalance: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TstBlock {
    pub state: u32,
    pub up_rate: f64,
    pub down_rate: f64,
    pub count_gap: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationSummary {
    pub events: u64,
    pub elapsed: f64,
    pub arrivals: u64,
    pub departures: u64,
    pub final_state: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub model_kind: &'static str,
    pub seed: u64,
    pub replications: u32,
    pub events_total: u64,
    pub elapsed_total: f64,
    pub unstable: bool,
    pub conservation_ok: bool,
    pub rbp_max_imbalance: u64,
    pub pi_hat: Vec<f64>,
    pub a_hat: Vec<f64>,
    pub d_hat: Vec<f64>,
    pub idle_periods: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idle_lst: Option<Vec<LstRow>>,
    pub rbp: Vec<RbpBlock>,
    pub tst: Vec<TstBlock>,
    pub residuals: Vec<EmpiricalResidualBlock>,
    pub per_replication: Vec<ReplicationSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub analytic: f64,
    pub empirical: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub model_kind: &'static str,
    pub seed: u64,
    pub checks: Vec<CheckRow>,
    pub all_passed: bool,
}

/// Long-format CSV: `section,name,n,s,value`.
pub trait ToCsv {
    fn to_csv(&self) -> String;
}

fn csv_row(out: &mut String, section: &str, name: &str, n: &str, s: &str, value: impl ToString) {
    out.push_str(section);
    out.push(',');
    out.push_str(name);
    out.push(',');
    out.push_str(n);
    out.push(',');
    out.push_str(s);
    out.push(',');
    out.push_str(&value.to_string());
    out.push('\n');
}

impl ToCsv for AnalyzeReport {
    fn to_csv(&self) -> String {
        let mut out = String::from("section,name,n,s,value\n");
        if let Some(v) = self.sigma {
            csv_row(&mut out, "scalar", "sigma", "", "", v);
        }
        if let Some(v) = self.sigma_tail {
            csv_row(&mut out, "scalar", "sigma_tail", "", "", v);
        }
        if let Some(v) = self.rho {
            csv_row(&mut out, "scalar", "rho", "", "", v);
        }
        if let Some(v) = self.sojourn_rate {
            csv_row(&mut out, "scalar", "sojourn_rate", "", "", v);
        }
        if let Some(a) = &self.a {
            for (n, v) in a.iter().enumerate() {
                csv_row(&mut out, "dist", "a", &n.to_string(), "", v);
            }
        }
        for (n, v) in self.pi.iter().enumerate() {
            csv_row(&mut out, "dist", "pi", &n.to_string(), "", v);
        }
        for block in &self.residuals {
            csv_row(
                &mut out,
                "residual",
                "mean",
                &block.n.to_string(),
                "",
                block.mean,
            );
            for gv in &block.lst {
                csv_row(
                    &mut out,
                    "residual",
                    "lst",
                    &block.n.to_string(),
                    &gv.s.to_string(),
                    gv.value,
                );
            }
        }
        out
    }
}

impl ToCsv for SimulateReport {
    fn to_csv(&self) -> String {
        let mut out = String::from("section,name,n,s,value\n");
        csv_row(&mut out, "scalar", "seed", "", "", self.seed);
        csv_row(&mut out, "scalar", "replications", "", "", self.replications);
        csv_row(&mut out, "scalar", "events_total", "", "", self.events_total);
        csv_row(&mut out, "scalar", "elapsed_total", "", "", self.elapsed_total);
        csv_row(&mut out, "scalar", "unstable", "", "", self.unstable);
        csv_row(
            &mut out,
            "scalar",
            "conservation_ok",
            "",
            "",
            self.conservation_ok,
        );
        csv_row(
            &mut out,
            "scalar",
            "rbp_max_imbalance",
            "",
            "",
            self.rbp_max_imbalance,
        );
        for (n, v) in self.pi_hat.iter().enumerate() {
            csv_row(&mut out, "dist", "pi_hat", &n.to_string(), "", v);
        }
        for (n, v) in self.a_hat.iter().enumerate() {
            csv_row(&mut out, "dist", "a_hat", &n.to_string(), "", v);
        }
        for (n, v) in self.d_hat.iter().enumerate() {
            csv_row(&mut out, "dist", "d_hat", &n.to_string(), "", v);
        }
        for block in &self.residuals {
            for row in &block.lst {
                csv_row(
                    &mut out,
                    "residual",
                    "lst",
                    &block.n.to_string(),
                    &row.s.to_string(),
                    row.estimate,
                );
            }
        }
        for t in &self.tst {
            csv_row(
                &mut out,
                "tst",
                "count_gap",
                &t.state.to_string(),
                "",
                t.count_gap,
            );
        }
        out
    }
}

impl ToCsv for VerifyReport {
    fn to_csv(&self) -> String {
        let mut out = String::from("name,analytic,empirical,tolerance,passed\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.name, c.analytic, c.empirical, c.tolerance, c.passed
            ));
        }
        out.push_str(&format!("all,,,,{}\n", self.all_passed));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_rounding() {
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(123456.789012345), 123456.789012);
        assert_eq!(sig12(-1.23456789012345e-7), -1.23456789012e-7);
    }
}
