//! Single-shot post-processing for photon-number-resolving detectors.
//!
//! A lossy detector with Poissonian dark counts is described by its
//! conditional matrix `P(m|n)` ([`detector`]). Inverting it against a known
//! photon-number prior ([`priors`]) gives `P(n|m)`, from which
//! [`inference`] derives the optimisation map `m -> argmax_n P(n|m)` and the
//! raw and optimised measurement fidelities. [`montecarlo`] simulates
//! individual shots as an independent check, and [`cli`] drives the whole
//! pipeline from the command line.

pub mod cli;
pub mod detector;
pub mod error;
pub mod inference;
pub mod montecarlo;
pub mod priors;
pub mod render;

pub use detector::{build_matrix, conditional_prob, poisson_pmf, ConditionalMatrix, DetectorParams};
pub use error::{Error, Result};
pub use inference::{optimisation_map, posterior, OptimisationReport, PosteriorMatrix};
pub use priors::{custom_prior, pdc_prior, uniform_prior, NumberPrior};
