//! Adversarial and strong-adversarial rates of linear classifiers on a
//! balanced two-class Gaussian mixture `0.5 N(mu+, sigma^2 I) + 0.5 N(mu-, sigma^2 I)`.
//!
//! Closed forms live in [`rates`], the optimal perturbations behind them in
//! [`geometry`], Monte Carlo counterparts in [`simulate`] and the classifiers
//! under study in [`learn`].

pub mod error;
pub mod geometry;
pub mod learn;
pub mod model;
pub mod numerics;
pub mod rates;
pub mod simulate;
pub mod visual;

pub use error::{Error, Result};
pub use model::{
    Class, GaussianMixtureSpec, LinearClassifier, MeanLayout, NormOrder, Perturbation,
    PerturbationBudget, Provenance, RateReport, RateStdErr, StatusCounts,
};
pub use numerics::Probability;
