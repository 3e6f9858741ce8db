//! Spatially adaptive Bayesian binary regression on 2-D lattices.
//!
//! The latent activation-probability field gets an adaptive Gaussian Markov
//! random field prior built from second-order lattice differences with
//! locally varying increment variances. Posterior inference runs through
//! data-augmented Gibbs sampling (probit, logit, and general normal
//! scale-mixture links), with parameter expansion for the half-t global
//! scale and an optional miscoding (robustification) step. Kernel-based
//! ALE/KDA baselines with Monte Carlo permutation thresholds, simulation
//! generators, and posterior evaluation (probability maps, MSPE, DIC,
//! chain diagnostics) round out the toolkit; the `peakmeta` binary ties
//! them into reproducible batch runs.

pub mod baselines;
pub mod cli;
pub mod dist;
pub mod engine;
pub mod error;
pub mod eval;
pub mod field;
pub mod gmrf;
pub mod grid;
pub mod io;
pub mod model;
pub mod simgen;
pub mod validation;

pub use engine::{ChainConfig, ChainOutput, ChainState, SampleStream};
pub use error::{Error, Result};
pub use field::{PeakField, TruthMap};
pub use grid::LatticeGrid;
pub use model::{Link, ModelSpec};
