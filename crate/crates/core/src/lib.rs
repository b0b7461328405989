//! Conditional variance estimation with dense ReLU networks, and
//! residual-bootstrap confidence intervals for the conditional mean.
//!
//! The model is `y = f*(x) + sqrt(g*(x)) * eps` with `x` in `[0,1]^d` and
//! unit-variance noise. The crate provides
//!
//! - [`relu_net`]: from-scratch dense ReLU networks trained by Adam on the
//!   squared loss, with a finite-difference gradient check;
//! - [`variance`]: mean fits and the residual, direct and homoscedastic
//!   variance estimators;
//! - [`bootstrap`]: the four-way-split residual bootstrap that calibrates a
//!   confidence half-width from held-out replicate losses, plus naive and
//!   standard bootstrap baselines;
//! - [`scenarios`]: five synthetic data-generating processes;
//! - [`eval`]: variance-MSE benchmarks, coverage experiments and
//!   prediction intervals for tabular data;
//! - [`io`] and [`cli`]: CSV ingestion and output, config files and the
//!   `hetvar` command line.
//!
//! See the `examples/` directory of this crate for one runnable program
//! per capability.

pub mod bootstrap;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod io;
pub mod relu_net;
pub mod scenarios;
pub mod seed;
pub mod variance;

pub use dataset::{Dataset, Interval};
pub use error::{Error, Result};
pub use relu_net::{Network, NetworkArch, TrainConfig};
