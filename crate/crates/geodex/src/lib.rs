//! Geostatistics toolkit built around two equivalent views of spatial
//! regression and a constructive answer to non-stationarity.
//!
//! The crate covers the classical pipeline — empirical semivariograms,
//! parametric variogram models (Gaussian / exponential), least-squares model
//! fitting, and kriging — next to the weight-space view of the same problem
//! (Bayesian linear regression over explicit basis functions). The two views
//! are tied together by [`regression::equivalence_check`], which asserts
//! numerically that basis-function regression with a Gaussian weight prior
//! and kernel (GP) regression with the induced covariance produce the same
//! predictive distribution.
//!
//! On top of that sits [`expansion`]: given a field whose variogram cloud is
//! too dispersed to be explained by distance alone, learn one or more latent
//! coordinates per sample so that a stationary Gaussian variogram fits in the
//! augmented space. [`synthetic`] provides seeded generators (stationary GP
//! draws and two-regime composites) used to exercise that machinery without
//! external data.
//!
//! Modules:
//! * [`sample`] — point observations, distance matrices, column standardization
//! * [`variogram`] — clouds, binning, models, fitting, Moran's I
//! * [`regression`] — weight-space and function-space prediction, hyperparameters
//! * [`expansion`] — latent-coordinate learning and stationarity reporting
//! * [`synthetic`] — seeded field generators and subsampling
//! * [`plot`] — self-contained SVG emission for the CLI and the browser demo

pub mod error;
pub mod expansion;
pub mod linalg;
pub mod optim;
pub mod plot;
pub mod regression;
pub mod sample;
pub mod synthetic;
pub mod variogram;

pub use error::{Error, Result};
