//! Parallel Monte-Carlo power estimation and bound validation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{itt_with_critical, wald_with_critical};
use super::strata::{generate_into, ordered_means_of_spec, tau_for_kappa, Sample, StrataSpec};
use crate::dist;
use crate::error::{Error, Result};
use crate::power::{self, AssumptionSet};
use crate::{DesignPoint, ErrorSpec};

/// Redraws per replication before the spec is declared unusable.
const MAX_ATTEMPTS: u64 = 1 << 12;
/// Replication index occupies the low bits of the ChaCha stream id.
const ATTEMPT_SHIFT: u32 = 48;
/// Fraction of redrawn samples above which a warning is attached.
const REDRAW_WARNING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> usize {
    1000
}
fn default_reps() -> usize {
    5000
}
fn default_alpha() -> f64 {
    0.05
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            reps: default_reps(),
            alpha: default_alpha(),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::Config(format!(
                "n must be at least 4 (got {})",
                self.n
            )));
        }
        if self.reps == 0 || (self.reps as u64) >= (1 << ATTEMPT_SHIFT) {
            return Err(Error::Config(format!(
                "reps must lie in [1, 2^{ATTEMPT_SHIFT}) (got {})",
                self.reps
            )));
        }
        dist::critical_value(self.alpha)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub reps: usize,
    pub n: usize,
    pub power_late: f64,
    pub mcse_late: f64,
    pub power_itt: f64,
    pub mcse_itt: f64,
    pub mean_tau_hat: f64,
    pub mean_gamma_hat: f64,
    pub mean_pi_hat: f64,
    /// Samples discarded because either estimator was undefined.
    pub redraws: u64,
    pub warning: Option<String>,
}

pub(crate) fn mcse(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

#[derive(Clone, Copy)]
struct Replicate {
    late: bool,
    itt: bool,
    tau_hat: f64,
    gamma_hat: f64,
    pi_hat: f64,
    redraws: u64,
}

fn replicate(
    spec: &StrataSpec,
    cfg: &SimConfig,
    crit: f64,
    rep: u64,
    buf: &mut Sample,
) -> Result<Replicate> {
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep | (attempt << ATTEMPT_SHIFT));
        generate_into(spec, cfg.n, &mut rng, buf);
        let wald = match wald_with_critical(&buf.z, &buf.d, &buf.y, crit) {
            Ok(w) => w,
            Err(Error::DegenerateSample(_)) => continue,
            Err(e) => return Err(e),
        };
        let itt = match itt_with_critical(&buf.z, &buf.y, crit) {
            Ok(f) => f,
            Err(Error::DegenerateSample(_)) => continue,
            Err(e) => return Err(e),
        };
        return Ok(Replicate {
            late: wald.reject,
            itt: itt.reject,
            tau_hat: wald.tau_hat,
            gamma_hat: itt.gamma_hat,
            pi_hat: wald.pi_hat,
            redraws: attempt,
        });
    }
    Err(Error::Config(format!(
        "replication {rep}: no usable sample in {MAX_ATTEMPTS} draws at n = {}",
        cfg.n
    )))
}

fn run(spec: &StrataSpec, cfg: &SimConfig) -> Result<SimResult> {
    spec.validate()?;
    cfg.validate()?;
    let crit = dist::critical_value(cfg.alpha)?;
    let reps: Vec<Replicate> = (0..cfg.reps as u64)
        .into_par_iter()
        .map_init(
            || Sample::with_capacity(cfg.n),
            |buf, rep| replicate(spec, cfg, crit, rep, buf),
        )
        .collect::<Result<_>>()?;

    let r = cfg.reps as f64;
    let mut late = 0usize;
    let mut itt = 0usize;
    let (mut tau, mut gamma, mut pi) = (0.0, 0.0, 0.0);
    let mut redraws = 0u64;
    for x in &reps {
        late += x.late as usize;
        itt += x.itt as usize;
        tau += x.tau_hat;
        gamma += x.gamma_hat;
        pi += x.pi_hat;
        redraws += x.redraws;
    }
    let power_late = late as f64 / r;
    let power_itt = itt as f64 / r;
    let redraw_rate = redraws as f64 / (redraws as f64 + r);
    let warning = (redraw_rate > REDRAW_WARNING).then(|| {
        format!(
            "{redraws} samples redrawn ({:.2}% of draws); power refers to the conditional design",
            100.0 * redraw_rate
        )
    });
    Ok(SimResult {
        reps: cfg.reps,
        n: cfg.n,
        power_late,
        mcse_late: mcse(power_late, cfg.reps),
        power_itt,
        mcse_itt: mcse(power_itt, cfg.reps),
        mean_tau_hat: tau / r,
        mean_gamma_hat: gamma / r,
        mean_pi_hat: pi / r,
        redraws,
        warning,
    })
}

/// Simulates rejection rates of the Wald IV and ITT tests on the global
/// rayon pool. Results depend only on `spec` and `cfg`.
pub fn simulate_power(spec: &StrataSpec, cfg: &SimConfig) -> Result<SimResult> {
    run(spec, cfg)
}

/// As [`simulate_power`] on a dedicated pool of `workers` threads
/// (`0` uses the global pool).
pub fn simulate_power_with_workers(
    spec: &StrataSpec,
    cfg: &SimConfig,
    workers: usize,
) -> Result<SimResult> {
    if workers == 0 {
        return run(spec, cfg);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run(spec, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationPoint {
    pub kappa: f64,
    pub tau: f64,
    pub sim_power: f64,
    pub mcse: f64,
    pub lower: f64,
    pub ordered_lower: f64,
    pub upper: f64,
    /// `lower − slack ≤ sim_power ≤ upper + slack` with
    /// `slack = 3·mcse + 0.5/reps`; the half-replication term keeps a
    /// rate of exactly 0 or 1 (where the binomial mcse vanishes) comparable.
    pub contained: bool,
    pub ordered_means: bool,
    /// `sim_power ≥ ordered_lower − slack`; only meaningful when the
    /// population satisfies ordered means.
    pub contained_ordered: Option<bool>,
}

pub const VALIDATION_COLUMNS: [&str; 10] = [
    "kappa",
    "tau",
    "sim_power",
    "mcse",
    "lower",
    "ordered_lower",
    "upper",
    "contained",
    "ordered_means",
    "contained_ordered",
];

/// Sweeps effect sizes for a template spec (its `tau` is replaced) and
/// compares simulated Wald power with the analytic bounds.
///
/// Every grid point reuses `cfg.seed`, so the points share random numbers.
pub fn validate_bounds(
    template: &StrataSpec,
    kappa_grid: &[f64],
    cfg: &SimConfig,
    workers: usize,
) -> Result<Vec<ValidationPoint>> {
    template.validate()?;
    cfg.validate()?;
    let err = ErrorSpec::new(cfg.alpha, 0.2)?;
    let assumptions = AssumptionSet::auto(template.p_z, true);
    let mut out = Vec::with_capacity(kappa_grid.len());
    for &kappa in kappa_grid {
        let tau = tau_for_kappa(template, kappa)?;
        let spec = template.with_tau(tau);
        let design = DesignPoint::new(kappa, spec.pi(), cfg.n as f64, spec.p_z)?;
        let b = power::late_power_bounds(&design, assumptions, &err)?;
        let ordered_lower = b.ordered_lower.unwrap_or(b.lower);
        let sim = simulate_power_with_workers(&spec, cfg, workers)?;
        let m = sim.mcse_late;
        let slack = 3.0 * m + 0.5 / cfg.reps as f64;
        let p = sim.power_late;
        let ordered = ordered_means_of_spec(&spec).satisfied;
        out.push(ValidationPoint {
            kappa,
            tau,
            sim_power: p,
            mcse: m,
            lower: b.lower,
            ordered_lower,
            upper: b.upper,
            contained: b.lower - slack <= p && p <= b.upper + slack,
            ordered_means: ordered,
            contained_ordered: ordered.then_some(p >= ordered_lower - slack),
        });
    }
    Ok(out)
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("grid must be start:stop:step (got {s:?})"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (v[0], v[1], v[2]);
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(Error::Config(format!("grid has {count} points")));
    }
    // round to the step's decimal precision so 0.05 steps print cleanly
    Ok((0..count)
        .map(|i| {
            let x = start + step * i as f64;
            (x * 1e12).round() / 1e12
        })
        .collect())
}
