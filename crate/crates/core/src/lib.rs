//! Simulation and analysis toolkit for the generalized Barndorff-Nielsen–Shephard
//! stochastic-volatility model with superposed Lévy subordinators, together with
//! a minute-bar pipeline that labels future jump clusters and predicts the
//! mixing weight `θ` with from-scratch classifiers.
//!
//! Modules, bottom up:
//!
//! - [`levy`]: compound-Poisson subordinators on a time grid.
//! - [`bns`]: variance and log-price paths, microstructure noise, correlation functionals.
//! - [`market`]: minute-bar ingestion, preprocessing, resampling, statistics, realized measures.
//! - [`labeling`]: windowed features and the binary `θ` target.
//! - [`classifiers`]: nine classifiers and the precision/recall/F1 report.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bns;
pub mod classifiers;
pub mod error;
pub mod labeling;
pub mod levy;
pub mod market;
pub mod rng;

pub use error::{Error, Result};

/// Guide chapters compiled as doctests so their snippets stay current.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/subordinators.md")]
    mod subordinators {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/market-data.md")]
    mod market_data {}
    #[doc = include_str!("../../../book/src/labeling.md")]
    mod labeling {}
    #[doc = include_str!("../../../book/src/classifiers.md")]
    mod classifiers {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
