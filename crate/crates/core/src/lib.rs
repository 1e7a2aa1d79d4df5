//! Power analysis for local average treatment effects.
//!
//! * [`dist`]: standard-normal CDF, quantile and the power multiplier.
//! * [`power`]: analytic power bounds, MDES and sample-size solvers for
//!   the Wald IV estimator.
//! * [`sim`]: principal-strata Monte-Carlo engine used to check the bounds.
//! * [`tables`]: reproduction of the published sample-size and simulation tables.
//! * [`cli`]: the `late-power` command-line front end.
//!
//! The analytic modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix them to `f64`, which is what the simulator and CLI use.

pub mod cli;
pub mod dist;
mod error;
pub mod power;
mod scalar;
pub mod sim;
pub mod tables;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ErrorSpec = dist::ErrorSpec<f64>;
pub type DesignPoint = power::DesignPoint<f64>;
pub type PowerBounds = power::PowerBounds<f64>;
pub type NcpBounds = power::NcpBounds<f64>;
pub type CovariateAdjust = power::CovariateAdjust<f64>;
pub type CovariateNcp = power::CovariateNcp<f64>;
pub type Mdes = power::Mdes<f64>;
pub type SampleSize = power::SampleSize<f64>;

pub use power::{AssignmentMode, AssumptionSet, Rounding};
