//! Cognitive antenna subarray selection for direction-of-arrival estimation.
//!
//! Given an `M`-element phased array, the toolkit picks the `K`-element
//! subarray that minimizes the Cramér-Rao bound on DoA error for the target
//! scene encoded in the received snapshots. Training data is generated by
//! exhaustive CRB labeling of simulated sample covariances; a small
//! convolutional network (and an SVM baseline) then learns the covariance →
//! subarray map so selection runs at inference cost instead of search cost.
//!
//! Module map:
//! - [`geometry`]: ULA/UCA/RDA construction, K-of-M subarray enumeration.
//! - [`signal`]: steering vectors and derivatives, snapshot simulation,
//!   sample covariance, covariance feature channels.
//! - [`crb`]: CRB evaluation per subarray, exhaustive best-subarray search,
//!   class-set reduction.
//! - [`dataset`]: labeled training-set construction and its binary format.
//! - [`nn`]: the from-scratch CNN classifier with SGD-momentum training.
//! - [`baselines`]: linear SVM and random-selection baselines.
//! - [`doa`]: Bartlett beamforming, RMSE evaluation, the cognitive scan loop.

pub mod baselines;
pub mod crb;
pub mod dataset;
pub mod doa;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod nn;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
