//! Analytic power bounds for the Wald IV estimator of the LATE.
//!
//! Every bound reduces to a noncentrality `τ/√V` expressed purely in the
//! investigation parameters:
//!
//! ```text
//! ncp² = s·κ²·N·π² / (1 + κ²·v ± 2κ·√v)
//! ```
//!
//! with `s = p_z(1 − p_z)` and `v` the ceiling placed on `E[ν²]`, the
//! residual variance of uptake given assignment. Under equal assignment
//! `v = (0.5 − π/2)(0.5 + π/2)`; the general-assignment regime assumes
//! homoskedastic residuals and takes `v = 0.25`. Dropping the `±` term
//! gives the bound that holds under ordered stratum means.
//!
//! Power bounds use both terms of the two-sided normal power formula. The
//! MDES and sample-size solvers keep only the leading term, so feeding a
//! solved value back into a power bound returns `1 − β` plus the neglected
//! term `Φ(−c* − M)` (about 1e-6 at α = 0.05, β = 0.2).

use serde::Serialize;

use crate::dist::{cdf_extended, ErrorSpec};
use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Denominators at or below this are treated as zero.
const DEGENERATE_DENOMINATOR: f64 = 1e-12;
const EQUAL_ASSIGNMENT_TOLERANCE: f64 = 1e-12;

/// Which assignment regime the bounds rest on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    /// `P(Z = 1) = 0.5`, `E[ν²]` at its largest value given π.
    EqualAssignment,
    /// Any `p_z`, homoskedastic residuals, `E[ν²] = 0.25`.
    GeneralAssignment,
}

impl AssignmentMode {
    /// Equal assignment when `p_z` is one half, general otherwise.
    pub fn for_assignment<T: Scalar>(p_z: T) -> Self {
        if (p_z - T::lit(0.5)).abs() <= T::lit(EQUAL_ASSIGNMENT_TOLERANCE) {
            Self::EqualAssignment
        } else {
            Self::GeneralAssignment
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionSet {
    pub mode: AssignmentMode,
    pub ordered_means: bool,
}

impl AssumptionSet {
    pub fn new(mode: AssignmentMode, ordered_means: bool) -> Self {
        Self {
            mode,
            ordered_means,
        }
    }

    /// Mode picked from `p_z`, as the CLI does.
    pub fn auto<T: Scalar>(p_z: T, ordered_means: bool) -> Self {
        Self::new(AssignmentMode::for_assignment(p_z), ordered_means)
    }
}

/// Investigation parameters of a planned study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignPoint<T> {
    /// Effect size `τ / √E[Var(Y|Z)]`. Only `|κ|` enters the bounds.
    pub kappa: T,
    /// First-stage effect, the complier share.
    pub pi: T,
    pub n: T,
    pub p_z: T,
}

impl<T: Scalar> DesignPoint<T> {
    pub fn new(kappa: T, pi: T, n: T, p_z: T) -> Result<Self> {
        let d = Self { kappa, pi, n, p_z };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kappa.is_finite() {
            return Err(domain("kappa", "must be finite", self.kappa.as_f64()));
        }
        check_pi(self.pi)?;
        check_n(self.n)?;
        check_p_z(self.p_z)
    }
}

fn check_pi<T: Scalar>(pi: T) -> Result<()> {
    if pi > T::zero() && pi <= T::one() {
        Ok(())
    } else {
        Err(domain("pi", "must lie in (0, 1]", pi.as_f64()))
    }
}

fn check_n<T: Scalar>(n: T) -> Result<()> {
    if n > T::zero() && n.is_finite() {
        Ok(())
    } else {
        Err(domain("n", "must be positive and finite", n.as_f64()))
    }
}

fn check_p_z<T: Scalar>(p_z: T) -> Result<()> {
    if p_z > T::zero() && p_z < T::one() {
        Ok(())
    } else {
        Err(domain("p_z", "must lie in (0, 1)", p_z.as_f64()))
    }
}

fn check_mode<T: Scalar>(mode: AssignmentMode, p_z: T) -> Result<()> {
    if mode == AssignmentMode::EqualAssignment
        && (p_z - T::lit(0.5)).abs() > T::lit(EQUAL_ASSIGNMENT_TOLERANCE)
    {
        return Err(domain(
            "p_z",
            "must equal 0.5 under equal assignment",
            p_z.as_f64(),
        ));
    }
    Ok(())
}

/// Lower, upper and (optionally) ordered-means lower power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBounds<T> {
    pub lower: T,
    pub upper: T,
    pub ordered_lower: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NcpBounds<T> {
    pub lower: T,
    /// `+∞` when the perfect-square denominator vanishes.
    pub upper: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovariateNcp<T> {
    pub lower: T,
    pub upper: T,
    pub ordered: T,
}

/// Share of residual variation explained by pre-assignment covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovariateAdjust<T> {
    /// Variation in D left unexplained by Z that the covariates explain.
    pub r2_dw: T,
    /// Same for Y.
    pub r2_yw: T,
}

impl<T: Scalar> CovariateAdjust<T> {
    pub fn new(r2_dw: T, r2_yw: T) -> Result<Self> {
        let c = Self { r2_dw, r2_yw };
        c.validate()?;
        Ok(c)
    }

    pub fn none() -> Self {
        Self {
            r2_dw: T::zero(),
            r2_yw: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r2) in [("r2_dw", self.r2_dw), ("r2_yw", self.r2_yw)] {
            if !(r2 >= T::zero() && r2 < T::one()) {
                return Err(domain(name, "must lie in [0, 1)", r2.as_f64()));
            }
        }
        Ok(())
    }
}

/// Ceiling used for `E[ν²]` in the given regime.
pub fn max_nu_sq<T: Scalar>(pi: T, mode: AssignmentMode) -> T {
    match mode {
        AssignmentMode::EqualAssignment => {
            let half = T::lit(0.5);
            (half - pi / T::lit(2.0)) * (half + pi / T::lit(2.0))
        }
        AssignmentMode::GeneralAssignment => T::lit(0.25),
    }
}

/// Two-sided power `Φ(−c* + ncp) + Φ(−c* − ncp)`.
pub fn power_from_ncp<T: Scalar>(ncp: T, alpha: T) -> Result<T> {
    if ncp.is_nan() || ncp < T::zero() {
        return Err(domain("ncp", "must be nonnegative", ncp.as_f64()));
    }
    let c = crate::dist::critical_value(alpha)?;
    Ok(cdf_extended(-c + ncp) + cdf_extended(-c - ncp))
}

/// `(lower, ordered, upper)` noncentralities with covariate scalings.
fn ncp_triplet<T: Scalar>(
    d: &DesignPoint<T>,
    mode: AssignmentMode,
    c: &CovariateAdjust<T>,
) -> (T, T, T) {
    let kappa = d.kappa.abs();
    let v = max_nu_sq(d.pi, mode);
    let numer = d.p_z * (T::one() - d.p_z) * kappa * kappa * d.n * d.pi * d.pi;
    let y_part = T::one() - c.r2_yw;
    let d_part = (T::one() - c.r2_dw) * v;

    let middle = y_part + kappa * kappa * d_part;
    let cross = T::lit(2.0) * kappa * (y_part * d_part).sqrt();
    // (√y − κ√d)² is the exact form of middle − cross
    let gap = (y_part.sqrt() - kappa * d_part.sqrt()).powi(2);

    let lower = (numer / (middle + cross)).sqrt();
    let ordered = (numer / middle).sqrt();
    let upper = if gap <= T::lit(DEGENERATE_DENOMINATOR) {
        if numer == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        (numer / gap).sqrt()
    };
    (lower, ordered, upper)
}

/// Bounds on `τ/√V` for one design point.
pub fn ncp_bounds<T: Scalar>(d: &DesignPoint<T>, a: AssumptionSet) -> Result<NcpBounds<T>> {
    d.validate()?;
    check_mode(a.mode, d.p_z)?;
    let (lower, _, upper) = ncp_triplet(d, a.mode, &CovariateAdjust::none());
    Ok(NcpBounds { lower, upper })
}

fn bounds_from_triplet<T: Scalar>(
    (lower, ordered, upper): (T, T, T),
    a: AssumptionSet,
    err: &ErrorSpec<T>,
) -> Result<PowerBounds<T>> {
    let alpha = err.alpha();
    Ok(PowerBounds {
        lower: power_from_ncp(lower, alpha)?,
        upper: power_from_ncp(upper, alpha)?,
        ordered_lower: if a.ordered_means {
            Some(power_from_ncp(ordered, alpha)?)
        } else {
            None
        },
    })
}

/// Power bounds for the Wald IV test at a design point.
pub fn late_power_bounds<T: Scalar>(
    d: &DesignPoint<T>,
    a: AssumptionSet,
    err: &ErrorSpec<T>,
) -> Result<PowerBounds<T>> {
    d.validate()?;
    check_mode(a.mode, d.p_z)?;
    bounds_from_triplet(ncp_triplet(d, a.mode, &CovariateAdjust::none()), a, err)
}

/// Noncentrality bounds for covariate-adjusted 2SLS.
pub fn covariate_ncp_bounds<T: Scalar>(
    d: &DesignPoint<T>,
    c: &CovariateAdjust<T>,
    a: AssumptionSet,
) -> Result<CovariateNcp<T>> {
    d.validate()?;
    c.validate()?;
    check_mode(a.mode, d.p_z)?;
    let (lower, ordered, upper) = ncp_triplet(d, a.mode, c);
    Ok(CovariateNcp {
        lower,
        upper,
        ordered,
    })
}

/// Power bounds for covariate-adjusted 2SLS.
pub fn covariate_power_bounds<T: Scalar>(
    d: &DesignPoint<T>,
    c: &CovariateAdjust<T>,
    a: AssumptionSet,
    err: &ErrorSpec<T>,
) -> Result<PowerBounds<T>> {
    let ncp = covariate_ncp_bounds(d, c, a)?;
    bounds_from_triplet((ncp.lower, ncp.ordered, ncp.upper), a, err)
}

/// Bounds on the minimum detectable effect size.
///
/// `kappa_high` is the conservative MDES and `kappa_star` the one implied
/// by ordered means. Either is `+∞` when the sample cannot reach the
/// target power under that bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mdes<T> {
    pub kappa_low: T,
    pub kappa_high: T,
    pub kappa_star: T,
}

impl<T: Scalar> Mdes<T> {
    pub fn is_attainable(&self) -> bool {
        self.kappa_high.is_finite() && self.kappa_star.is_finite()
    }

    /// Why a bound is unattainable, if one is.
    pub fn unattainable_reason(&self) -> Option<String> {
        match (self.kappa_high.is_finite(), self.kappa_star.is_finite()) {
            (true, true) => None,
            (false, true) => Some(
                "conservative MDES unattainable at this N: 2·pi·sqrt(N·p_z(1-p_z)) <= 2M·sqrt(E[nu^2])"
                    .to_string(),
            ),
            _ => Some(
                "MDES unattainable at this N: 4·pi²·N·p_z(1-p_z) <= 4M²·E[nu^2]".to_string(),
            ),
        }
    }
}

fn check_power_regime<T: Scalar>(err: &ErrorSpec<T>) -> Result<()> {
    if err.beta() >= T::lit(0.5) {
        return Err(domain(
            "beta",
            "must be below 0.5 for the one-term solvers",
            err.beta().as_f64(),
        ));
    }
    Ok(())
}

/// Minimum detectable effect size bounds.
pub fn mdes<T: Scalar>(
    pi: T,
    n: T,
    p_z: T,
    a: AssumptionSet,
    err: &ErrorSpec<T>,
) -> Result<Mdes<T>> {
    check_pi(pi)?;
    check_n(n)?;
    check_p_z(p_z)?;
    check_mode(a.mode, p_z)?;
    check_power_regime(err)?;

    let m = err.multiplier();
    let two = T::lit(2.0);
    let v = max_nu_sq(pi, a.mode);
    let s = p_z * (T::one() - p_z);
    let signal = two * pi * (n * s).sqrt();
    let noise = two * m * v.sqrt();

    let kappa_low = two * m / (signal + noise);
    let high_den = signal - noise;
    let kappa_high = if high_den > T::zero() {
        two * m / high_den
    } else {
        T::infinity()
    };
    let radicand = signal * signal - noise * noise;
    let kappa_star = if radicand > T::zero() {
        two * m / radicand.sqrt()
    } else {
        T::infinity()
    };
    Ok(Mdes {
        kappa_low,
        kappa_high,
        kappa_star,
    })
}

/// Required-sample-size bounds. `n_high` is the conservative answer and
/// `n_star` the one implied by ordered means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSize<T> {
    pub n_low: T,
    pub n_high: T,
    pub n_star: T,
}

/// Solves for the sample size reaching power `1 − β`.
pub fn required_n<T: Scalar>(
    kappa: T,
    pi: T,
    p_z: T,
    a: AssumptionSet,
    err: &ErrorSpec<T>,
) -> Result<SampleSize<T>> {
    let kappa = kappa.abs();
    if !(kappa > T::zero() && kappa.is_finite()) {
        return Err(domain(
            "kappa",
            "must be nonzero and finite (N is infinite at kappa = 0)",
            kappa.as_f64(),
        ));
    }
    check_pi(pi)?;
    check_p_z(p_z)?;
    check_mode(a.mode, p_z)?;
    check_power_regime(err)?;

    let m = err.multiplier();
    let v = max_nu_sq(pi, a.mode);
    let s = p_z * (T::one() - p_z);
    let scale = m * m / (s * kappa * kappa * pi * pi);
    let middle = T::one() + kappa * kappa * v;
    let cross = T::lit(2.0) * kappa * v.sqrt();
    Ok(SampleSize {
        n_low: scale * (T::one() - kappa * v.sqrt()).powi(2),
        n_high: scale * (middle + cross),
        n_star: scale * middle,
    })
}

/// Power implied by scaling a full-compliance ATE analysis by π².
pub fn scaled_ate_power<T: Scalar>(kappa: T, pi: T, n: T, p_z: T, err: &ErrorSpec<T>) -> Result<T> {
    check_pi(pi)?;
    check_n(n)?;
    check_p_z(p_z)?;
    let ncp = kappa.abs() * pi * (n * p_z * (T::one() - p_z)).sqrt();
    power_from_ncp(ncp, err.alpha())
}

/// Presentation rounding for sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    /// Round up; never under-powers.
    #[default]
    Ceil,
    /// Round half away from zero; used to reproduce published tables.
    Nearest,
}

pub fn round_sample_size<T: Scalar>(n: T, mode: Rounding) -> T {
    match mode {
        Rounding::Ceil => n.ceil(),
        Rounding::Nearest => n.round(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::phi_cdf;

    const EQUAL: AssignmentMode = AssignmentMode::EqualAssignment;
    const GENERAL: AssignmentMode = AssignmentMode::GeneralAssignment;

    fn conv() -> ErrorSpec<f64> {
        ErrorSpec::conventional()
    }

    /// Two-term power written out directly from Φ.
    fn power_oracle(ncp: f64, alpha: f64) -> f64 {
        let c = crate::dist::phi_inv(1.0 - alpha / 2.0).unwrap();
        phi_cdf(-c + ncp).unwrap() + phi_cdf(-c - ncp).unwrap()
    }

    #[test]
    fn power_from_ncp_examples() {
        assert!((power_from_ncp(0.0f64, 0.05).unwrap() - 0.05).abs() < 1e-15);
        // Φ(0) + Φ(−2c*)
        let p = power_from_ncp(1.959963984540054f64, 0.05).unwrap();
        assert!((p - 0.5000442877191607).abs() < 1e-12, "{p}");
        let p = power_from_ncp(2.801585218112968f64, 0.05).unwrap();
        assert!((p - 0.8000009605622265).abs() < 1e-12, "{p}");
        assert!(power_from_ncp(-0.1f64, 0.05).is_err());
        assert_eq!(power_from_ncp(f64::INFINITY, 0.05).unwrap(), 1.0);
    }

    #[test]
    fn full_compliance_collapses_bounds() {
        let d = DesignPoint::new(0.2, 1.0, 800.0, 0.5).unwrap();
        let b = ncp_bounds(&d, AssumptionSet::new(EQUAL, false)).unwrap();
        let expect = 0.2 * 800f64.sqrt() / 2.0;
        assert!((b.lower - expect).abs() < 1e-12);
        assert!((b.upper - expect).abs() < 1e-12);
        assert!((expect - 2.828427).abs() < 1e-6);
    }

    #[test]
    fn upper_ncp_infinite_on_perfect_square() {
        let d = DesignPoint::new(2.0f64, 0.37, 500.0, 0.3).unwrap();
        let b = ncp_bounds(&d, AssumptionSet::new(GENERAL, false)).unwrap();
        assert!(b.upper.is_infinite());
        assert!(b.lower.is_finite());
        let p = late_power_bounds(&d, AssumptionSet::new(GENERAL, true), &conv()).unwrap();
        assert_eq!(p.upper, 1.0);
    }

    #[test]
    fn ncp_matches_direct_formula() {
        // κ=0.5976, π=0.2, N=2500, equal assignment, written out longhand
        let (k, pi, n) = (0.5976f64, 0.2f64, 2500.0f64);
        let v = (0.5 - pi / 2.0) * (0.5 + pi / 2.0);
        let num = 0.25 * k * k * n * pi * pi;
        let lo = (num / (1.0 + k * k * v + 2.0 * k * v.sqrt())).sqrt();
        let hi = (num / (1.0 + k * k * v - 2.0 * k * v.sqrt())).sqrt();
        let d = DesignPoint::new(k, pi, n, 0.5).unwrap();
        let b = ncp_bounds(&d, AssumptionSet::new(EQUAL, false)).unwrap();
        assert!((b.lower - lo).abs() < 1e-12);
        assert!((b.upper - hi).abs() < 1e-9);
        assert!((b.lower - 2.311328501441197).abs() < 1e-12, "{}", b.lower);
    }

    #[test]
    fn equal_mode_requires_half_assignment() {
        let d = DesignPoint::new(0.2, 0.5, 800.0, 0.6).unwrap();
        assert!(ncp_bounds(&d, AssumptionSet::new(EQUAL, false)).is_err());
        assert!(ncp_bounds(&d, AssumptionSet::new(GENERAL, false)).is_ok());
    }

    #[test]
    fn design_point_validation() {
        assert!(DesignPoint::new(0.2, 0.0, 100.0, 0.5).is_err());
        assert!(DesignPoint::new(0.2, 1.2, 100.0, 0.5).is_err());
        assert!(DesignPoint::new(0.2, 0.5, 0.0, 0.5).is_err());
        assert!(DesignPoint::new(0.2, 0.5, 10.0, 1.0).is_err());
        assert!(DesignPoint::new(f64::NAN, 0.5, 10.0, 0.5).is_err());
    }

    #[test]
    fn null_effect_gives_size() {
        let d = DesignPoint::new(0.0, 0.37, 1234.0, 0.5).unwrap();
        let b = late_power_bounds(&d, AssumptionSet::new(EQUAL, true), &conv()).unwrap();
        assert!((b.lower - 0.05).abs() < 1e-15);
        assert!((b.upper - 0.05).abs() < 1e-15);
        assert!((b.ordered_lower.unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn ate_special_case_power() {
        let d = DesignPoint::new(0.2, 1.0, 784.0, 0.5).unwrap();
        let b = late_power_bounds(&d, AssumptionSet::new(EQUAL, false), &conv()).unwrap();
        let oracle = power_oracle(0.2 * 28.0 / 2.0, 0.05);
        assert!((b.lower - oracle).abs() < 1e-12);
        assert!((b.upper - b.lower).abs() < 1e-12);
        assert!((b.lower - 0.800).abs() < 1e-3);
    }

    #[test]
    fn negative_kappa_uses_magnitude() {
        let a = AssumptionSet::new(EQUAL, true);
        let pos = late_power_bounds(&DesignPoint::new(0.3, 0.5, 900.0, 0.5).unwrap(), a, &conv());
        let neg = late_power_bounds(
            &DesignPoint::new(-0.3, 0.5, 900.0, 0.5).unwrap(),
            a,
            &conv(),
        );
        assert_eq!(pos.unwrap(), neg.unwrap());
    }

    #[test]
    fn mdes_full_compliance() {
        let m = mdes(1.0, 784.0, 0.5, AssumptionSet::new(EQUAL, false), &conv()).unwrap();
        let expect = 2.0 * 2.801585218112968 / 28.0;
        for k in [m.kappa_low, m.kappa_high, m.kappa_star] {
            assert!((k - expect).abs() < 1e-12);
        }
        assert!((expect - 0.200113).abs() < 1e-6);
    }

    #[test]
    fn mdes_unattainable_when_sample_too_small() {
        let m = mdes(0.3, 20.0, 0.5, AssumptionSet::new(EQUAL, false), &conv()).unwrap();
        // π√N = 1.34 < 2M√v = 5.34
        assert!(m.kappa_high.is_infinite());
        assert!(m.kappa_star.is_infinite());
        assert!(m.kappa_low.is_finite());
        assert!(!m.is_attainable());
        assert!(m.unattainable_reason().is_some());
    }

    #[test]
    fn mdes_rejects_low_power_regime() {
        let err = ErrorSpec::new(0.05, 0.6).unwrap();
        assert!(mdes(0.5, 100.0, 0.5, AssumptionSet::new(EQUAL, false), &err).is_err());
    }

    #[test]
    fn mdes_table_one_round_trip() {
        let m = mdes(
            0.63,
            9861.0,
            0.67,
            AssumptionSet::new(GENERAL, false),
            &conv(),
        )
        .unwrap();
        assert!((m.kappa_high - 0.10).abs() < 5e-4, "{}", m.kappa_high);
    }

    #[test]
    fn required_n_examples() {
        let a = AssumptionSet::new(GENERAL, true);
        let n = required_n(0.10, 0.63, 0.67, a, &conv()).unwrap();
        assert_eq!(round_sample_size(n.n_high, Rounding::Nearest), 9861.0);
        assert_eq!(round_sample_size(n.n_star, Rounding::Nearest), 8966.0);
        let n = required_n(0.15, 0.4, 0.67, a, &conv()).unwrap();
        assert_eq!(round_sample_size(n.n_high, Rounding::Nearest), 11395.0);
        assert_eq!(round_sample_size(n.n_star, Rounding::Nearest), 9916.0);

        let m = 2.801585218112968f64;
        let n = required_n(0.2, 1.0, 0.5, AssumptionSet::new(EQUAL, false), &conv()).unwrap();
        let expect = 4.0 * m * m / 0.04;
        for x in [n.n_low, n.n_high, n.n_star] {
            assert!(((x - expect) / expect).abs() < 1e-12);
        }
        assert!((expect - 784.888).abs() < 1e-3);
        assert!(required_n(0.0, 0.5, 0.5, a, &conv()).is_err());
    }

    #[test]
    fn required_n_ordering() {
        let a = AssumptionSet::new(EQUAL, false);
        for &k in &[0.05, 0.2, 0.7, 1.5, 4.0] {
            for &pi in &[0.05, 0.3, 0.9] {
                let n = required_n(k, pi, 0.5, a, &conv()).unwrap();
                assert!(n.n_low <= n.n_star && n.n_star <= n.n_high);
            }
        }
    }

    #[test]
    fn covariate_zero_adjust_matches_plain() {
        let d = DesignPoint::new(0.37, 0.45, 1800.0, 0.5).unwrap();
        let a = AssumptionSet::new(EQUAL, true);
        let c = covariate_ncp_bounds(&d, &CovariateAdjust::none(), a).unwrap();
        let p = ncp_bounds(&d, a).unwrap();
        assert_eq!(c.lower, p.lower);
        assert_eq!(c.upper, p.upper);
    }

    #[test]
    fn covariate_ordered_example() {
        let (k, pi, n) = (0.2f64, 0.5f64, 1500.0f64);
        let v = (0.5 - pi / 2.0) * (0.5 + pi / 2.0);
        let oracle = (0.25 * k * k * n * pi * pi / (0.5 + k * k * v)).sqrt();
        let d = DesignPoint::new(k, pi, n, 0.5).unwrap();
        let adj = CovariateAdjust::new(0.0, 0.5).unwrap();
        let c = covariate_ncp_bounds(&d, &adj, AssumptionSet::new(EQUAL, true)).unwrap();
        assert!((c.ordered - oracle).abs() < 1e-12);
    }

    #[test]
    fn covariate_domain() {
        assert!(CovariateAdjust::new(0.0, 1.0).is_err());
        assert!(CovariateAdjust::new(-0.1, 0.0).is_err());
        assert!(CovariateAdjust::new(0.99, 0.0).is_ok());
    }

    #[test]
    fn covariate_ncp_weakly_increasing() {
        let d = DesignPoint::new(0.3, 0.4, 1000.0, 0.35).unwrap();
        let a = AssumptionSet::new(GENERAL, true);
        let grid: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        for &fixed in &grid {
            for w in grid.windows(2) {
                let lo = covariate_ncp_bounds(&d, &CovariateAdjust::new(w[0], fixed).unwrap(), a);
                let hi = covariate_ncp_bounds(&d, &CovariateAdjust::new(w[1], fixed).unwrap(), a);
                let (lo, hi) = (lo.unwrap(), hi.unwrap());
                assert!(hi.lower >= lo.lower && hi.ordered >= lo.ordered);
                let lo = covariate_ncp_bounds(&d, &CovariateAdjust::new(fixed, w[0]).unwrap(), a);
                let hi = covariate_ncp_bounds(&d, &CovariateAdjust::new(fixed, w[1]).unwrap(), a);
                let (lo, hi) = (lo.unwrap(), hi.unwrap());
                assert!(hi.lower >= lo.lower && hi.ordered >= lo.ordered);
            }
        }
    }

    #[test]
    fn scaled_ate_examples() {
        let e = conv();
        let p = scaled_ate_power(0.625, 0.2, 2500.0, 0.5, &e).unwrap();
        // ncp = 0.625 · 0.2 · √625 = 3.125
        assert!((p - power_oracle(3.125, 0.05)).abs() < 1e-12, "{p}");
        assert!((p - 0.8779979765).abs() < 1e-9, "{p}");
        let q = scaled_ate_power(0.625, 1.0, 100.0, 0.5, &e).unwrap();
        assert!((p - q).abs() < 1e-12);
        assert!((scaled_ate_power(0.0, 0.2, 2500.0, 0.5, &e).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn perfect_square_identity() {
        for i in 0..50 {
            for j in 0..=25 {
                let k = i as f64 * 0.1;
                let v = j as f64 * 0.01;
                let lhs = 1.0 + k * k * v - 2.0 * k * v.sqrt();
                let rhs = (1.0 - k * v.sqrt()).powi(2);
                assert!((lhs - rhs).abs() < 1e-12 && rhs >= 0.0);
            }
        }
    }

    #[test]
    fn rounding_modes() {
        assert_eq!(round_sample_size(24461.19, Rounding::Nearest), 24461.0);
        assert_eq!(round_sample_size(24461.19, Rounding::Ceil), 24462.0);
        assert_eq!(Rounding::default(), Rounding::Ceil);
    }

    #[test]
    fn single_precision_table_value() {
        let a = AssumptionSet::new(GENERAL, true);
        let err = ErrorSpec::<f32>::conventional();
        let n = required_n(0.10f32, 0.63, 0.67, a, &err).unwrap();
        assert!((n.n_high - 9860.897).abs() < 0.05, "{}", n.n_high);
    }
}
