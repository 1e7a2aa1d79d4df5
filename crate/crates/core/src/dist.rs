//! Standard-normal kernel used by every power formula.
//!
//! The CDF combines two expansions, both of which converge to full `f64`
//! precision on their ranges:
//!
//! * for `|x| < 3` the positive-term series
//!   `Φ(x) = 1/2 + φ(x) · Σ x^(2k+1) / (1·3·5···(2k+1))`,
//! * for `|x| ≥ 3` the Laplace continued fraction for the Mills ratio,
//!   evaluated bottom-up, which yields the tail `Φ(-|x|)` with small
//!   relative error.
//!
//! The quantile starts from the Abramowitz–Stegun 26.2.23 rational
//! approximation (|error| < 4.5e-4) and polishes it with Halley steps on
//! the CDF above.

use crate::error::{domain, Result};
use crate::scalar::Scalar;

const SERIES_LIMIT: f64 = 3.0;
const CF_DEPTH: usize = 80;
const MAX_SERIES_TERMS: usize = 500;

/// Type-I and type-II error tolerances of a two-sided test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSpec<T> {
    alpha: T,
    beta: T,
}

impl<T: Scalar> ErrorSpec<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        check_open_unit("alpha", alpha)?;
        check_open_unit("beta", beta)?;
        Ok(Self { alpha, beta })
    }

    /// `α = 0.05`, `β = 0.2`.
    pub fn conventional() -> Self {
        Self {
            alpha: T::lit(0.05),
            beta: T::lit(0.2),
        }
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Two-sided critical value `Φ⁻¹(1 − α/2)`.
    pub fn critical_value(&self) -> T {
        critical_value(self.alpha).expect("alpha validated at construction")
    }

    /// `Φ⁻¹(1 − α/2) + Φ⁻¹(1 − β)`.
    pub fn multiplier(&self) -> T {
        multiplier(*self).expect("tolerances validated at construction")
    }
}

fn check_open_unit<T: Scalar>(name: &'static str, p: T) -> Result<()> {
    if p > T::zero() && p < T::one() {
        Ok(())
    } else {
        Err(domain(name, "must lie in (0, 1)", p.as_f64()))
    }
}

/// Standard normal density.
pub fn phi_pdf<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    (-half * x * x).exp() / (T::TAU()).sqrt()
}

/// Standard normal CDF. Absolute error is below 1e-15 in `f64`.
pub fn phi_cdf<T: Scalar>(x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(domain("x", "must be finite", x.as_f64()));
    }
    Ok(cdf_finite(x))
}

/// CDF that also accepts `±∞`, used where a noncentrality may be infinite.
pub(crate) fn cdf_extended<T: Scalar>(x: T) -> T {
    if x == T::infinity() {
        T::one()
    } else if x == T::neg_infinity() {
        T::zero()
    } else {
        cdf_finite(x)
    }
}

fn cdf_finite<T: Scalar>(x: T) -> T {
    let limit = T::lit(SERIES_LIMIT);
    if x.abs() < limit {
        T::lit(0.5) + central_series(x)
    } else if x < T::zero() {
        upper_tail(-x)
    } else {
        T::one() - upper_tail(x)
    }
}

/// `Φ(x) − 1/2` for moderate `x`.
fn central_series<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut denom = T::one();
    for _ in 0..MAX_SERIES_TERMS {
        denom = denom + T::lit(2.0);
        term = term * x2 / denom;
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum * phi_pdf(x)
}

/// `1 − Φ(x)` for `x ≥ 3` via the continued fraction
/// `φ(x) / (x + 1/(x + 2/(x + 3/(x + ...))))`.
fn upper_tail<T: Scalar>(x: T) -> T {
    let mut tail = T::zero();
    for k in (1..=CF_DEPTH).rev() {
        tail = T::lit(k as f64) / (x + tail);
    }
    phi_pdf(x) / (x + tail)
}

/// Standard normal quantile. `|Φ(phi_inv(p)) − p| ≤ 1e-15` in `f64`.
pub fn phi_inv<T: Scalar>(p: T) -> Result<T> {
    check_open_unit("p", p).map_err(|_| domain("p", "must lie in (0, 1)", p.as_f64()))?;
    let half = T::lit(0.5);
    if p == half {
        return Ok(T::zero());
    }
    if p > half {
        // 1 − p is exact for p in [0.5, 1)
        return Ok(-lower_quantile(T::one() - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile<T: Scalar>(p: T) -> T {
    let t = (T::lit(-2.0) * p.ln()).sqrt();
    let num = T::lit(2.515517) + t * (T::lit(0.802853) + t * T::lit(0.010328));
    let den = T::one() + t * (T::lit(1.432788) + t * (T::lit(0.189269) + t * T::lit(0.001308)));
    let mut x = -(t - num / den);

    let tol = T::epsilon() * T::lit(4.0);
    for _ in 0..8 {
        let density = phi_pdf(x);
        if density == T::zero() {
            break;
        }
        let u = (cdf_finite(x) - p) / density;
        let step = u / (T::one() + T::lit(0.5) * x * u);
        x = x - step;
        if step.abs() <= tol * x.abs().max(T::one()) {
            break;
        }
    }
    x
}

/// `c* = Φ⁻¹(1 − α/2)`.
pub fn critical_value<T: Scalar>(alpha: T) -> Result<T> {
    check_open_unit("alpha", alpha)?;
    phi_inv(T::one() - alpha / T::lit(2.0))
}

/// Power-analysis multiplier `M = Φ⁻¹(1 − α/2) + Φ⁻¹(1 − β)`.
pub fn multiplier<T: Scalar>(err: ErrorSpec<T>) -> Result<T> {
    Ok(critical_value(err.alpha)? + phi_inv(T::one() - err.beta)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series for erf, accurate for |z| up to about 2.
    fn erf_series(z: f64) -> f64 {
        let mut sum = 0.0;
        let mut power = z;
        let mut fact = 1.0;
        for n in 0..60 {
            if n > 0 {
                fact *= n as f64;
                power *= z * z;
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * power / (fact * (2 * n + 1) as f64);
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    /// Composite Simpson integration of the density over [a, b].
    fn simpson_density(a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(a) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_matches_erf_series_in_the_core() {
        for &x in &[-2.5, -1.0, -0.3, 0.0, 0.7, 1.959963985, 2.9] {
            let oracle = 0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2));
            let got = phi_cdf(x).unwrap();
            assert!((got - oracle).abs() < 1e-12, "x={x}: {got} vs {oracle}");
        }
        assert!((phi_cdf(1.959963985f64).unwrap() - 0.975).abs() < 1e-9);
    }

    #[test]
    fn deep_lower_tail_matches_quadrature() {
        // tail mass beyond 8 via Simpson on [8, 40]
        let oracle = simpson_density(8.0, 40.0, 200_000);
        let got = phi_cdf(-8.0f64).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-9, "{got} vs {oracle}");
        assert!((got - 6.22096057427178e-16).abs() < 1e-24);
    }

    #[test]
    fn cdf_symmetry_and_median() {
        assert_eq!(phi_cdf(0.0f64).unwrap(), 0.5);
        let mut x = -8.0f64;
        while x <= 8.0 {
            let a = phi_cdf(-x).unwrap();
            let b = 1.0 - phi_cdf(x).unwrap();
            assert!((a - b).abs() <= 1e-15, "x={x}");
            x += 0.137;
        }
    }

    #[test]
    fn cdf_rejects_non_finite() {
        assert!(phi_cdf(f64::NAN).is_err());
        assert!(phi_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_strictly_increasing_on_grid() {
        let mut prev = phi_cdf(-8.0f64).unwrap();
        for i in 1..=1600 {
            let x = -8.0 + i as f64 * 0.01;
            let cur = phi_cdf(x).unwrap();
            // above ~5.5 Φ is within one ulp of 1 and cannot resolve 0.01 steps
            if x < 5.5 {
                assert!(cur > prev, "plateau at x={x}");
            } else {
                assert!(cur >= prev);
            }
            prev = cur;
        }
    }

    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi_cdf(mid).unwrap() < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(phi_inv(0.5f64).unwrap(), 0.0);
        for &(p, frozen) in &[(0.975, 1.959963984540054), (0.8, 0.8416212335729143)] {
            let oracle = bisect_quantile(p);
            assert!((oracle - frozen).abs() < 1e-12);
            assert!((phi_inv(p).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_domain_errors() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(phi_inv(p).is_err(), "p={p}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 0..=1200 {
            let x = -6.0 + 0.01 * i as f64;
            let back = phi_inv(phi_cdf(x).unwrap()).unwrap();
            assert!((back - x).abs() < 1e-8, "x={x} back={back}");
        }
        for &p in &[
            1e-300f64,
            1e-100,
            1e-20,
            1e-8,
            0.01,
            0.3,
            0.7,
            0.99,
            1.0 - 1e-12,
        ] {
            let x = phi_inv(p).unwrap();
            let resid = (phi_cdf(x).unwrap() - p).abs();
            assert!(
                resid <= 1e-10 && resid <= 1e-12 * p.max(1e-4),
                "p={p} resid={resid}"
            );
        }
    }

    #[test]
    fn multiplier_examples() {
        let m = |a: f64, b: f64| ErrorSpec::new(a, b).unwrap().multiplier();
        let oracle = |a: f64, b: f64| bisect_quantile(1.0 - a / 2.0) + bisect_quantile(1.0 - b);
        assert!((m(0.05, 0.2) - 2.801585218112968).abs() < 1e-10);
        assert!((m(0.05, 0.2) - oracle(0.05, 0.2)).abs() < 1e-10);
        assert!((m(0.05, 0.5) - 1.959963984540054).abs() < 1e-12);
        assert!((m(0.01, 0.1) - oracle(0.01, 0.1)).abs() < 1e-10);
        assert!((m(0.01, 0.1) - 3.857380869093501).abs() < 1e-10);
    }

    #[test]
    fn multiplier_decreasing_in_both_tolerances() {
        let grid: Vec<f64> = (1..20).map(|i| i as f64 * 0.025).collect();
        for &a in &grid {
            for w in grid.windows(2) {
                let m0 = ErrorSpec::new(a, w[0]).unwrap().multiplier();
                let m1 = ErrorSpec::new(a, w[1]).unwrap().multiplier();
                assert!(m1 < m0);
                let m0 = ErrorSpec::new(w[0], a).unwrap().multiplier();
                let m1 = ErrorSpec::new(w[1], a).unwrap().multiplier();
                assert!(m1 < m0);
            }
        }
    }

    #[test]
    fn error_spec_validation() {
        assert!(ErrorSpec::new(0.0, 0.2).is_err());
        assert!(ErrorSpec::new(0.05, 1.0).is_err());
        let e = ErrorSpec::<f64>::conventional();
        assert!(e.critical_value() > 0.0 && e.critical_value().is_finite());
    }

    #[test]
    fn single_precision_path() {
        let c = critical_value(0.05f32).unwrap();
        assert!((c - 1.959964).abs() < 1e-5);
        assert!((phi_cdf(1.0f32).unwrap() - 0.8413447).abs() < 1e-6);
    }
}
