//! Principal-strata superpopulation: parameters, moments, and sampling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Proportions below this are treated as an empty stratum.
pub const SPARSE_STRATUM: f64 = 1e-9;
const PROPORTION_SUM_TOLERANCE: f64 = 1e-12;

/// Distribution family of the within-stratum potential outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeFamily {
    #[default]
    Normal,
}

/// A superpopulation of compliers, never-takers and always-takers.
///
/// Never-takers only ever reveal their control outcome and always-takers
/// their treated outcome, so only those distributions are parameterised.
/// The treated complier mean is `mu_c0 + tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrataSpec {
    pub mu_c0: f64,
    pub sd_c0: f64,
    pub sd_c1: f64,
    #[serde(default)]
    pub tau: f64,
    pub mu_nt: f64,
    pub sd_nt: f64,
    pub mu_at: f64,
    pub sd_at: f64,
    /// Complier share, equal to the first-stage effect π.
    pub p_c: f64,
    pub p_nt: f64,
    pub p_at: f64,
    #[serde(default = "default_p_z")]
    pub p_z: f64,
    #[serde(default)]
    pub family: OutcomeFamily,
}

fn default_p_z() -> f64 {
    0.5
}

impl StrataSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_c", self.p_c), ("p_nt", self.p_nt), ("p_at", self.p_at)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(domain(name, "must lie in [0, 1]", p));
            }
        }
        if self.p_c <= 0.0 {
            return Err(domain("p_c", "must be positive", self.p_c));
        }
        let total = self.p_c + self.p_nt + self.p_at;
        if (total - 1.0).abs() > PROPORTION_SUM_TOLERANCE {
            return Err(domain("p_c + p_nt + p_at", "must equal 1", total));
        }
        for (name, sd) in [
            ("sd_c0", self.sd_c0),
            ("sd_c1", self.sd_c1),
            ("sd_nt", self.sd_nt),
            ("sd_at", self.sd_at),
        ] {
            if !(sd > 0.0 && sd.is_finite()) {
                return Err(domain(name, "must be positive and finite", sd));
            }
        }
        for (name, mu) in [
            ("mu_c0", self.mu_c0),
            ("mu_nt", self.mu_nt),
            ("mu_at", self.mu_at),
            ("tau", self.tau),
        ] {
            if !mu.is_finite() {
                return Err(domain(name, "must be finite", mu));
            }
        }
        if !(self.p_z > 0.0 && self.p_z < 1.0) {
            return Err(domain("p_z", "must lie in (0, 1)", self.p_z));
        }
        Ok(())
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn pi(&self) -> f64 {
        self.p_c
    }

    /// Observable (stratum, arm) cells with their probabilities.
    pub(crate) fn cells(&self) -> [Cell; 6] {
        let (p1, p0) = (self.p_z, 1.0 - self.p_z);
        let c1 = Cell::new(self.p_c * p1, 1, 1, self.mu_c0 + self.tau, self.sd_c1);
        let c0 = Cell::new(self.p_c * p0, 0, 0, self.mu_c0, self.sd_c0);
        let nt1 = Cell::new(self.p_nt * p1, 1, 0, self.mu_nt, self.sd_nt);
        let nt0 = Cell::new(self.p_nt * p0, 0, 0, self.mu_nt, self.sd_nt);
        let at1 = Cell::new(self.p_at * p1, 1, 1, self.mu_at, self.sd_at);
        let at0 = Cell::new(self.p_at * p0, 0, 1, self.mu_at, self.sd_at);
        [c1, c0, nt1, nt0, at1, at0]
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell {
    pub prob: f64,
    pub z: u8,
    pub d: u8,
    pub mean: f64,
    pub var: f64,
}

impl Cell {
    fn new(prob: f64, z: u8, d: u8, mean: f64, sd: f64) -> Self {
        Self {
            prob,
            z,
            d,
            mean,
            var: sd * sd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Stratum {
    Complier,
    NeverTaker,
    AlwaysTaker,
}

/// One simulated study.
#[derive(Debug, Clone, Default)]
pub struct Sample {
    pub z: Vec<u8>,
    pub d: Vec<u8>,
    pub y: Vec<f64>,
    pub strata: Vec<Stratum>,
}

impl Sample {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            z: Vec::with_capacity(n),
            d: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            strata: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn clear(&mut self) {
        self.z.clear();
        self.d.clear();
        self.y.clear();
        self.strata.clear();
    }
}

/// Draws `n` i.i.d. units from the superpopulation.
pub fn generate_sample<R: Rng + ?Sized>(spec: &StrataSpec, n: usize, rng: &mut R) -> Sample {
    let mut sample = Sample::with_capacity(n);
    generate_into(spec, n, rng, &mut sample);
    sample
}

/// As [`generate_sample`], reusing the buffers of `out`.
pub fn generate_into<R: Rng + ?Sized>(spec: &StrataSpec, n: usize, rng: &mut R, out: &mut Sample) {
    out.clear();
    let nt_cut = spec.p_c + spec.p_nt;
    for _ in 0..n {
        let u: f64 = rng.random();
        let stratum = if u < spec.p_c {
            Stratum::Complier
        } else if u < nt_cut {
            Stratum::NeverTaker
        } else {
            Stratum::AlwaysTaker
        };
        let assigned = rng.random::<f64>() < spec.p_z;
        let noise: f64 = rng.sample(StandardNormal);
        let (d, y) = match stratum {
            Stratum::Complier if assigned => (1, spec.mu_c0 + spec.tau + spec.sd_c1 * noise),
            Stratum::Complier => (0, spec.mu_c0 + spec.sd_c0 * noise),
            Stratum::NeverTaker => (0, spec.mu_nt + spec.sd_nt * noise),
            Stratum::AlwaysTaker => (1, spec.mu_at + spec.sd_at * noise),
        };
        out.z.push(assigned as u8);
        out.d.push(d);
        out.y.push(y);
        out.strata.push(stratum);
    }
}

/// `Var(Y | Z = z)` as a three-component normal mixture.
pub fn arm_variance(spec: &StrataSpec, z: u8) -> f64 {
    let (w, first, second) =
        spec.cells()
            .iter()
            .filter(|c| c.z == z)
            .fold((0.0, 0.0, 0.0), |(w, m1, m2), c| {
                (
                    w + c.prob,
                    m1 + c.prob * c.mean,
                    m2 + c.prob * (c.var + c.mean * c.mean),
                )
            });
    let mean = first / w;
    second / w - mean * mean
}

/// `E[Var(Y | Z)]` over assignment.
pub fn expected_within_arm_variance(spec: &StrataSpec) -> f64 {
    spec.p_z * arm_variance(spec, 1) + (1.0 - spec.p_z) * arm_variance(spec, 0)
}

/// Effect size `τ / √E[Var(Y|Z)]` implied by the spec.
pub fn kappa_of_spec(spec: &StrataSpec) -> Result<f64> {
    spec.validate()?;
    let var = expected_within_arm_variance(spec);
    if !(var > 0.0) {
        return Err(domain("E[Var(Y|Z)]", "must be positive", var));
    }
    Ok(spec.tau / var.sqrt())
}

const BRACKET_DOUBLINGS: usize = 80;
const MONOTONE_PROBES: usize = 64;

/// Finds the `tau` for which `kappa_of_spec` hits `kappa_target`.
///
/// κ(τ) is bounded as τ grows because the complier shift also inflates
/// the treated-arm variance, so targets above the supremum are errors.
pub fn tau_for_kappa(template: &StrataSpec, kappa_target: f64) -> Result<f64> {
    template.validate()?;
    if !(kappa_target >= 0.0) || !kappa_target.is_finite() {
        return Err(domain(
            "kappa_target",
            "must be nonnegative and finite",
            kappa_target,
        ));
    }
    if kappa_target == 0.0 {
        return Ok(0.0);
    }
    let kappa_at = |tau: f64| kappa_of_spec(&template.with_tau(tau));

    let scale = expected_within_arm_variance(&template.with_tau(0.0)).sqrt();
    let mut hi = scale.max(1e-12);
    let mut found = false;
    for _ in 0..BRACKET_DOUBLINGS {
        if kappa_at(hi)? > kappa_target {
            found = true;
            break;
        }
        hi *= 2.0;
    }
    if !found {
        return Err(Error::Bracket {
            target: kappa_target,
            reason: format!(
                "kappa({hi:e}) = {:.6} never exceeds the target",
                kappa_at(hi)?
            ),
        });
    }

    let mut prev = 0.0;
    for i in 1..=MONOTONE_PROBES {
        let tau = hi * i as f64 / MONOTONE_PROBES as f64;
        let k = kappa_at(tau)?;
        if k <= prev {
            return Err(Error::Bracket {
                target: kappa_target,
                reason: format!(
                    "kappa(tau) not increasing on [0, {hi:.6}]: kappa({tau:.6}) = {k:.6} <= {prev:.6}"
                ),
            });
        }
        prev = k;
    }

    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let k = kappa_at(mid)?;
        if (k - kappa_target).abs() <= 1e-12 {
            return Ok(mid);
        }
        if k < kappa_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expected observed stratum means and the ordered-means verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderedMeans {
    pub ybar_nt: f64,
    pub ybar_c: f64,
    pub ybar_at: f64,
    pub satisfied: bool,
}

pub(crate) fn ordered_verdict(p_nt: f64, nt: f64, c: f64, p_at: f64, at: f64) -> bool {
    let lower_ok = p_nt < SPARSE_STRATUM || nt <= c;
    let upper_ok = p_at < SPARSE_STRATUM || c <= at;
    lower_ok && upper_ok
}

pub fn ordered_means_of_spec(spec: &StrataSpec) -> OrderedMeans {
    let ybar_c = spec.mu_c0 + spec.p_z * spec.tau;
    OrderedMeans {
        ybar_nt: spec.mu_nt,
        ybar_c,
        ybar_at: spec.mu_at,
        satisfied: ordered_verdict(spec.p_nt, spec.mu_nt, ybar_c, spec.p_at, spec.mu_at),
    }
}

/// Population moments entering the Wald IV variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationMoments {
    pub gamma: f64,
    pub pi: f64,
    /// `Cov(ζ, ν)` for the reduced-form and first-stage residuals.
    pub cov_zeta_nu: f64,
    pub var_zeta: f64,
    pub var_nu: f64,
    /// `E[ε²(Z − E[Z])²] / Cov²(D, Z)`, i.e. `N·V`.
    pub scaled_wald_variance: f64,
}

/// Exact moments of the superpopulation, by enumeration of cells.
pub fn population_moments(spec: &StrataSpec) -> Result<PopulationMoments> {
    spec.validate()?;
    let cells = spec.cells();
    let p = spec.p_z;
    let ey: f64 = cells.iter().map(|c| c.prob * c.mean).sum();
    let ed: f64 = cells.iter().map(|c| c.prob * c.d as f64).sum();
    let cov_zy: f64 = cells
        .iter()
        .map(|c| c.prob * c.z as f64 * c.mean)
        .sum::<f64>()
        - p * ey;
    let cov_zd: f64 = cells
        .iter()
        .map(|c| c.prob * (c.z * c.d) as f64)
        .sum::<f64>()
        - p * ed;
    let var_z = p * (1.0 - p);
    let gamma = cov_zy / var_z;
    let pi = cov_zd / var_z;
    let tau = spec.tau;

    let mut cov_zeta_nu = 0.0;
    let mut var_zeta = 0.0;
    let mut var_nu = 0.0;
    let mut meat = 0.0;
    for c in &cells {
        let zc = c.z as f64 - p;
        let zeta_mean = c.mean - ey - gamma * zc;
        let nu = c.d as f64 - ed - pi * zc;
        let eps_mean = c.mean - ey - tau * (c.d as f64 - ed);
        cov_zeta_nu += c.prob * zeta_mean * nu;
        var_zeta += c.prob * (c.var + zeta_mean * zeta_mean);
        var_nu += c.prob * nu * nu;
        meat += c.prob * zc * zc * (c.var + eps_mean * eps_mean);
    }
    Ok(PopulationMoments {
        gamma,
        pi,
        cov_zeta_nu,
        var_zeta,
        var_nu,
        scaled_wald_variance: meat / (cov_zd * cov_zd),
    })
}

/// Large-sample noncentrality `|τ| / √V` of the Wald test at sample size `n`.
pub fn asymptotic_ncp(spec: &StrataSpec, n: f64) -> Result<f64> {
    let m = population_moments(spec)?;
    Ok(spec.tau.abs() * (n / m.scaled_wald_variance).sqrt())
}
