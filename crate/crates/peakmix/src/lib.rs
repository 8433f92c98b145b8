//! Quantitative analysis of mixed DNA traces.
//!
//! The crate evaluates peak-height likelihoods for DNA mixtures exactly by
//! probability propagation in a junction tree: genotypes of unknown
//! contributors are represented as Markov chains of allele counts and partial
//! sums, and per-allele likelihood factors enter through binary auxiliary
//! variables. On top of the likelihood it provides maximum likelihood
//! estimation of the peak-height model, likelihood ratios between contributor
//! hypotheses, posterior genotype deconvolution, trace simulation, and
//! model-adequacy diagnostics (probability transforms, predictive intervals
//! and prequential monitors).
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `peakmix` binary for the batch command-line interface.

pub mod diag;
pub mod engine;
pub mod error;
pub mod gamma;
pub mod infer;
pub mod io;
pub mod marker;
pub mod num;
pub mod peak;

pub mod cli;

pub use error::{Error, Result};
