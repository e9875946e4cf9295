//! Maximum-likelihood fitting and bootstrap evaluation of heavy-tailed
//! frequency distributions.
//!
//! The crate implements a complete pipeline for asking whether frequency
//! data (segment counts per language, word counts per corpus, or anything
//! with the same shape) follows a power law or one of its rivals:
//!
//! 1. [`dist`] defines the candidate families (power law, lognormal,
//!    exponential, Poisson) on the integer support {xmin, xmin+1, ...}.
//! 2. [`fit`] estimates parameters by maximum likelihood, with an optional
//!    scan for the support cutoff xmin that minimizes the KS distance.
//! 3. [`gof`] turns a fit into a plausibility judgment via a
//!    Kolmogorov-Smirnov parametric bootstrap.
//! 4. [`compare`] weighs plausible candidates against each other with
//!    Vuong's likelihood-ratio test for non-nested models.
//! 5. [`rank`] provides classical rank-frequency laws (Zipf, geometric,
//!    Whitworth, negative logarithmic, Yule-Simon) and the legacy
//!    least-squares R^2 fit they were historically assessed with.
//! 6. [`corpus`] ingests wordlists and frequency tables.
//! 7. [`generate`] simulates generative processes (preferential attachment,
//!    birth-death, stick-breaking) whose outcomes the laws describe.
//! 8. [`batch`] drives the whole pipeline over many languages and
//!    aggregates the verdicts.

pub mod batch;
pub mod compare;
pub mod corpus;
pub mod dist;
mod error;
pub mod fit;
pub mod generate;
pub mod gof;
mod optim;
pub mod rank;
pub mod seed;

pub use crate::dist::{
    cdf, hurwitz_zeta, log_likelihood, pmf, sample, ModelKind, ModelParams, Sample, Support,
};
pub use crate::error::{Error, Result};
