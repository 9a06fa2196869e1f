//! Estimators, diagnostics and closed forms for heavy-tailed data.
//!
//! Modules follow the workflow: special functions and quadrature at the
//! bottom, distributions and samplers above them, then the estimators
//! (κ, tail fits, shadow moments, inequality, p-value meta-distribution,
//! tail option pricing) that the CLI exposes.

// `!(x > 0.0)` style guards are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dists;
pub mod error;
pub mod inequality;
pub mod kappa;
pub mod optim;
pub mod pvmeta;
pub mod quad;
pub mod rng;
pub mod sample;
pub mod shadow;
pub mod special;
pub mod tailfit;
pub mod tailoptions;

pub use dists::{Dist, Lognormal, ParetoI, StableParams, StudentT, TwoStateGaussian};
pub use error::{Error, Result};
pub use sample::Sample;
