//! Wald IV and intention-to-treat estimators.

use serde::Serialize;

use crate::dist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaldFit {
    pub tau_hat: f64,
    pub var_hat: f64,
    pub z: f64,
    pub reject: bool,
    pub pi_hat: f64,
    pub mean_sq_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IttFit {
    pub gamma_hat: f64,
    pub var_hat: f64,
    pub z: f64,
    pub reject: bool,
}

struct ArmSums {
    n: [usize; 2],
    d: [usize; 2],
    y: [f64; 2],
}

fn arm_sums(z: &[u8], d: Option<&[u8]>, y: &[f64]) -> Result<ArmSums> {
    if z.len() != y.len() || d.is_some_and(|d| d.len() != y.len()) {
        return Err(Error::DegenerateSample("z, d and y differ in length"));
    }
    let mut s = ArmSums {
        n: [0; 2],
        d: [0; 2],
        y: [0.0; 2],
    };
    for i in 0..y.len() {
        let arm = match z[i] {
            0 => 0,
            1 => 1,
            _ => return Err(Error::DegenerateSample("z must be 0 or 1")),
        };
        s.n[arm] += 1;
        s.y[arm] += y[i];
        if let Some(d) = d {
            match d[i] {
                0 => {}
                1 => s.d[arm] += 1,
                _ => return Err(Error::DegenerateSample("d must be 0 or 1")),
            }
        }
    }
    if s.n[0] == 0 || s.n[1] == 0 {
        return Err(Error::DegenerateSample("an assignment arm is empty"));
    }
    Ok(s)
}

fn z_stat(est: f64, var: f64) -> f64 {
    if var > 0.0 {
        est / var.sqrt()
    } else if est == 0.0 {
        0.0
    } else {
        est.signum() * f64::INFINITY
    }
}

/// Wald IV estimate `cov(Y,Z)/cov(D,Z)` with its heteroskedasticity-robust
/// plug-in variance and a two-sided level-`alpha` test of τ = 0.
pub fn wald_iv_estimate(z: &[u8], d: &[u8], y: &[f64], alpha: f64) -> Result<WaldFit> {
    let crit = dist::critical_value(alpha)?;
    wald_with_critical(z, d, y, crit)
}

pub(crate) fn wald_with_critical(z: &[u8], d: &[u8], y: &[f64], crit: f64) -> Result<WaldFit> {
    let s = arm_sums(z, Some(d), y)?;
    // exact integer test for a vanishing first stage
    if s.d[1] * s.n[0] == s.d[0] * s.n[1] {
        return Err(Error::DegenerateSample("no first-stage variation"));
    }
    let n = y.len() as f64;
    let (n0, n1) = (s.n[0] as f64, s.n[1] as f64);
    let pi_hat = s.d[1] as f64 / n1 - s.d[0] as f64 / n0;
    let gamma_hat = s.y[1] / n1 - s.y[0] / n0;
    let tau_hat = gamma_hat / pi_hat;

    let zbar = n1 / n;
    let dbar = (s.d[0] + s.d[1]) as f64 / n;
    let ybar = (s.y[0] + s.y[1]) / n;
    let cov_dz = zbar * (1.0 - zbar) * pi_hat;

    let mut meat = 0.0;
    let mut sq = 0.0;
    for i in 0..y.len() {
        let e = (y[i] - ybar) - tau_hat * (d[i] as f64 - dbar);
        let zc = z[i] as f64 - zbar;
        sq += e * e;
        meat += e * e * zc * zc;
    }
    meat /= n;
    let var_hat = meat / (n * cov_dz * cov_dz);
    let zs = z_stat(tau_hat, var_hat);
    Ok(WaldFit {
        tau_hat,
        var_hat,
        z: zs,
        reject: zs.abs() > crit,
        pi_hat,
        mean_sq_residual: sq / n,
    })
}

/// Difference in arm means with unpooled `n − 1` variances.
pub fn itt_estimate(z: &[u8], y: &[f64], alpha: f64) -> Result<IttFit> {
    let crit = dist::critical_value(alpha)?;
    itt_with_critical(z, y, crit)
}

pub(crate) fn itt_with_critical(z: &[u8], y: &[f64], crit: f64) -> Result<IttFit> {
    let s = arm_sums(z, None, y)?;
    if s.n[0] < 2 || s.n[1] < 2 {
        return Err(Error::DegenerateSample(
            "an assignment arm has fewer than two units",
        ));
    }
    let means = [s.y[0] / s.n[0] as f64, s.y[1] / s.n[1] as f64];
    let mut ss = [0.0; 2];
    for i in 0..y.len() {
        let arm = z[i] as usize;
        ss[arm] += (y[i] - means[arm]).powi(2);
    }
    let var_hat = (0..2)
        .map(|a| ss[a] / (s.n[a] - 1) as f64 / s.n[a] as f64)
        .sum::<f64>();
    let gamma_hat = means[1] - means[0];
    let zs = z_stat(gamma_hat, var_hat);
    Ok(IttFit {
        gamma_hat,
        var_hat,
        z: zs,
        reject: zs.abs() > crit,
    })
}
