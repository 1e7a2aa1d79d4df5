//! Reproduction of the published sample-size and simulation tables.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::power::{self, AssignmentMode, AssumptionSet, Rounding};
use crate::sim::{self, scenarios, SimConfig};
use crate::ErrorSpec;

/// Within-arm outcome SD used to translate κ into dollar effects.
pub const JTPA_OUTCOME_SD: f64 = 16758.88;
pub const JTPA_P_Z: f64 = 0.67;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSizeRow {
    pub kappa: f64,
    pub tau: f64,
    pub conservative_n: f64,
    pub alternative_n: f64,
    pub conservative_exact: f64,
    pub alternative_exact: f64,
}

pub fn kappa_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 20.0).collect()
}

/// One row per κ in `kappas`, under general assignment at `p_z`.
pub fn sample_size_table(
    pi: f64,
    p_z: f64,
    kappas: &[f64],
    err: &ErrorSpec,
    rounding: Rounding,
) -> Result<Vec<SampleSizeRow>> {
    let a = AssumptionSet::new(AssignmentMode::GeneralAssignment, true);
    kappas
        .iter()
        .map(|&kappa| {
            let n = power::required_n(kappa, pi, p_z, a, err)?;
            Ok(SampleSizeRow {
                kappa,
                tau: (kappa * JTPA_OUTCOME_SD * 100.0).round() / 100.0,
                conservative_n: power::round_sample_size(n.n_high, rounding),
                alternative_n: power::round_sample_size(n.n_star, rounding),
                conservative_exact: n.n_high,
                alternative_exact: n.n_star,
            })
        })
        .collect()
}

/// First-stage effect used by the two analytic tables.
pub fn analytic_table_pi(which: &str) -> Option<f64> {
    match which {
        "1" => Some(0.63),
        "2" => Some(0.4),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTableRow {
    pub table: &'static str,
    pub label: String,
    pub n: usize,
    pub tau: f64,
    pub pi: f64,
    pub kappa: f64,
    pub power_late: f64,
    pub mcse_late: f64,
    pub power_itt: f64,
    pub mcse_itt: f64,
    pub reported_late: f64,
    pub reported_itt: Option<f64>,
    pub scaled_ate_power: Option<f64>,
    pub redraws: u64,
}

/// Re-simulates every row of a B table.
pub fn simulate_table(
    which: &str,
    reps: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<SimTableRow>> {
    let rows = scenarios::table(which)
        .ok_or_else(|| Error::Config(format!("unknown simulation table {which:?}")))?;
    let err = ErrorSpec::conventional();
    rows.into_iter()
        .map(|s| {
            let cfg = SimConfig {
                n: s.n,
                reps,
                alpha: err.alpha(),
                seed,
            };
            let r = sim::simulate_power_with_workers(&s.spec, &cfg, workers)?;
            let scaled = (s.table == "B4")
                .then(|| {
                    power::scaled_ate_power(
                        scenarios::B4_ATE_KAPPA,
                        s.spec.p_c,
                        s.n as f64,
                        s.spec.p_z,
                        &err,
                    )
                })
                .transpose()?;
            Ok(SimTableRow {
                table: s.table,
                label: s.label,
                n: s.n,
                tau: s.spec.tau,
                pi: s.spec.p_c,
                kappa: sim::kappa_of_spec(&s.spec)?,
                power_late: r.power_late,
                mcse_late: r.mcse_late,
                power_itt: r.power_itt,
                mcse_itt: r.mcse_itt,
                reported_late: s.reported_late,
                reported_itt: s.reported_itt,
                scaled_ate_power: scaled,
                redraws: r.redraws,
            })
        })
        .collect()
}
