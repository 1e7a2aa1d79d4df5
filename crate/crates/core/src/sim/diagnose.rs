//! Stratum-mean diagnostics from summary tables and simulated samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::engine::SimConfig;
use super::strata::{
    generate_sample, ordered_means_of_spec, ordered_verdict, population_moments, StrataSpec,
};
use crate::error::{Error, Result};

/// One (Z, D) cell of a summary table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub count: u64,
    #[serde(default)]
    pub mean: Option<f64>,
}

impl TableCell {
    pub fn new(count: u64, mean: f64) -> Self {
        Self {
            count,
            mean: Some(mean),
        }
    }

    pub fn empty() -> Self {
        Self {
            count: 0,
            mean: None,
        }
    }

    fn sum(&self, name: &str) -> Result<f64> {
        match (self.count, self.mean) {
            (0, _) => Ok(0.0),
            (k, Some(m)) if m.is_finite() => Ok(k as f64 * m),
            _ => Err(Error::InfeasibleTable(format!(
                "{name} has units but no finite mean"
            ))),
        }
    }
}

/// Counts and mean outcomes by assignment and uptake.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedTable {
    pub z0_d0: TableCell,
    pub z0_d1: TableCell,
    pub z1_d0: TableCell,
    pub z1_d1: TableCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StratumMeans {
    pub p_c: f64,
    pub p_nt: f64,
    pub p_at: f64,
    pub mean_nt: Option<f64>,
    pub mean_at: Option<f64>,
    pub mean_c: f64,
    /// Complier mean among the controls, net of never-takers.
    pub mean_c_control: Option<f64>,
    /// Complier mean among the treated, net of always-takers.
    pub mean_c_treated: Option<f64>,
    pub expected_nt_in_control: f64,
    pub expected_at_in_treated: f64,
    pub expected_c_control: f64,
    pub expected_c_treated: f64,
    pub ordered_means: bool,
}

const COUNT_TOLERANCE: f64 = 1e-9;

/// Decomposes the mixed cells of a table under monotonicity and random
/// assignment.
pub fn stratum_means_from_table(t: &ObservedTable) -> Result<StratumMeans> {
    let n0 = (t.z0_d0.count + t.z0_d1.count) as f64;
    let n1 = (t.z1_d0.count + t.z1_d1.count) as f64;
    if n0 == 0.0 || n1 == 0.0 {
        return Err(Error::InfeasibleTable("an assignment arm is empty".into()));
    }
    let s00 = t.z0_d0.sum("z0_d0")?;
    let s01 = t.z0_d1.sum("z0_d1")?;
    let s10 = t.z1_d0.sum("z1_d0")?;
    let s11 = t.z1_d1.sum("z1_d1")?;

    let p_at = t.z0_d1.count as f64 / n0;
    let p_nt = t.z1_d0.count as f64 / n1;
    let p_c = 1.0 - p_at - p_nt;
    if p_c <= COUNT_TOLERANCE {
        return Err(Error::InfeasibleTable(format!(
            "implied complier share {p_c:.6} is not positive (p_at = {p_at:.6}, p_nt = {p_nt:.6})"
        )));
    }
    let mean_at = (t.z0_d1.count > 0).then(|| s01 / t.z0_d1.count as f64);
    let mean_nt = (t.z1_d0.count > 0).then(|| s10 / t.z1_d0.count as f64);

    let nt_control = p_nt * n0;
    let at_treated = p_at * n1;
    let c_control = t.z0_d0.count as f64 - nt_control;
    let c_treated = t.z1_d1.count as f64 - at_treated;
    let net = |cell_sum: f64, others: f64, other_mean: Option<f64>, compliers: f64| {
        (compliers > COUNT_TOLERANCE)
            .then(|| (cell_sum - others * other_mean.unwrap_or(0.0)) / compliers)
    };
    let mean_c_control = net(s00, nt_control, mean_nt, c_control);
    let mean_c_treated = net(s11, at_treated, mean_at, c_treated);
    let total_c = c_control + c_treated;
    let mean_c = (mean_c_control.unwrap_or(0.0) * c_control.max(0.0)
        + mean_c_treated.unwrap_or(0.0) * c_treated.max(0.0))
        / total_c;

    let ordered_means = ordered_verdict(
        p_nt,
        mean_nt.unwrap_or(f64::NAN),
        mean_c,
        p_at,
        mean_at.unwrap_or(f64::NAN),
    );
    Ok(StratumMeans {
        p_c,
        p_nt,
        p_at,
        mean_nt,
        mean_at,
        mean_c,
        mean_c_control,
        mean_c_treated,
        expected_nt_in_control: nt_control,
        expected_at_in_treated: at_treated,
        expected_c_control: c_control,
        expected_c_treated: c_treated,
        ordered_means,
    })
}

/// Sample covariance of reduced-form and first-stage residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub n: usize,
    pub gamma_hat: f64,
    pub pi_hat: f64,
    pub cov_zeta_nu: f64,
    pub var_zeta: f64,
    pub var_nu: f64,
    pub cauchy_schwarz_bound: f64,
    pub cauchy_schwarz_holds: bool,
    pub std_error: f64,
    pub z_score: f64,
    pub population_cov: f64,
    pub ordered_means: bool,
}

pub fn covariance_diagnostics(spec: &StrataSpec, cfg: &SimConfig) -> Result<CovarianceReport> {
    spec.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = generate_sample(spec, cfg.n, &mut rng);
    let n = s.len() as f64;
    let mean = |f: &dyn Fn(usize) -> f64| (0..s.len()).map(f).sum::<f64>() / n;
    let zbar = mean(&|i| s.z[i] as f64);
    let dbar = mean(&|i| s.d[i] as f64);
    let ybar = mean(&|i| s.y[i]);
    let var_z = mean(&|i| (s.z[i] as f64 - zbar).powi(2));
    if var_z == 0.0 {
        return Err(Error::DegenerateSample("an assignment arm is empty"));
    }
    let gamma_hat = mean(&|i| (s.y[i] - ybar) * (s.z[i] as f64 - zbar)) / var_z;
    let pi_hat = mean(&|i| (s.d[i] as f64 - dbar) * (s.z[i] as f64 - zbar)) / var_z;

    let zeta: Vec<f64> = (0..s.len())
        .map(|i| s.y[i] - ybar - gamma_hat * (s.z[i] as f64 - zbar))
        .collect();
    let nu: Vec<f64> = (0..s.len())
        .map(|i| s.d[i] as f64 - dbar - pi_hat * (s.z[i] as f64 - zbar))
        .collect();
    let cov = mean(&|i| zeta[i] * nu[i]);
    let var_zeta = mean(&|i| zeta[i] * zeta[i]);
    let var_nu = mean(&|i| nu[i] * nu[i]);
    let bound = (var_zeta * var_nu).sqrt();
    let spread = mean(&|i| (zeta[i] * nu[i] - cov).powi(2));
    let std_error = (spread / n).sqrt();

    Ok(CovarianceReport {
        n: cfg.n,
        gamma_hat,
        pi_hat,
        cov_zeta_nu: cov,
        var_zeta,
        var_nu,
        cauchy_schwarz_bound: bound,
        cauchy_schwarz_holds: cov.abs() <= bound * (1.0 + 1e-12),
        std_error,
        z_score: if std_error > 0.0 {
            cov / std_error
        } else {
            0.0
        },
        population_cov: population_moments(spec)?.cov_zeta_nu,
        ordered_means: ordered_means_of_spec(spec).satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naturalization() -> ObservedTable {
        ObservedTable {
            z0_d0: TableCell::new(69, -0.527),
            z0_d1: TableCell::new(90, 0.048),
            z1_d0: TableCell::empty(),
            z1_d1: TableCell::new(244, 0.055),
        }
    }

    #[test]
    fn one_sided_table() {
        let r = stratum_means_from_table(&naturalization()).unwrap();
        // hand oracle: p_at = 90/159, 138.1 always-takers among 244
        let p_at = 90.0 / 159.0;
        let at11 = p_at * 244.0;
        let c11 = 244.0 - at11;
        let m11 = (244.0 * 0.055 - at11 * 0.048) / c11;
        let mc = (69.0 * -0.527 + c11 * m11) / (69.0 + c11);
        assert!((r.expected_at_in_treated - at11).abs() < 1e-9);
        assert!((r.expected_at_in_treated - 138.1).abs() < 0.05);
        assert!((r.expected_c_treated - 105.9).abs() < 0.05);
        assert!((r.mean_c_treated.unwrap() - 0.064).abs() < 5e-4);
        assert!((r.mean_c - mc).abs() < 1e-12);
        assert!((r.mean_c + 0.17).abs() < 0.005);
        assert_eq!(r.mean_at, Some(0.048));
        assert_eq!(r.p_nt, 0.0);
        assert!(r.ordered_means);
    }

    #[test]
    fn two_sided_table_nonempty_nt() {
        let t = ObservedTable {
            z0_d0: TableCell::new(10733, 0.442),
            z0_d1: TableCell::empty(),
            z1_d0: TableCell::new(1781, 0.435),
            z1_d1: TableCell::new(869, 0.577),
        };
        let r = stratum_means_from_table(&t).unwrap();
        assert_eq!(r.mean_nt, Some(0.435));
        assert!(r.mean_c > 0.435);
        assert!(r.ordered_means);
    }

    #[test]
    fn full_compliance() {
        let t = ObservedTable {
            z0_d0: TableCell::new(50, 1.0),
            z0_d1: TableCell::empty(),
            z1_d0: TableCell::empty(),
            z1_d1: TableCell::new(40, 3.0),
        };
        let r = stratum_means_from_table(&t).unwrap();
        assert_eq!((r.p_c, r.p_nt, r.p_at), (1.0, 0.0, 0.0));
        assert!((r.mean_c - (50.0 + 120.0) / 90.0).abs() < 1e-12);
        assert!(r.ordered_means);
    }

    #[test]
    fn infeasible_tables() {
        // 60% always-takers in control, 60% never-takers in treatment
        let t = ObservedTable {
            z0_d0: TableCell::new(40, 0.0),
            z0_d1: TableCell::new(60, 0.0),
            z1_d0: TableCell::new(60, 0.0),
            z1_d1: TableCell::new(40, 0.0),
        };
        assert!(matches!(
            stratum_means_from_table(&t),
            Err(Error::InfeasibleTable(_))
        ));
        let missing_mean = ObservedTable {
            z0_d0: TableCell {
                count: 5,
                mean: None,
            },
            ..naturalization()
        };
        assert!(stratum_means_from_table(&missing_mean).is_err());
    }
}
