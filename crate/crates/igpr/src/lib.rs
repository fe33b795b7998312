//! Likelihood-free Bayesian inference via inverse Gaussian process regression.
//!
//! The central idea: when a simulator `d = G(theta, xi)` has an intractable
//! likelihood, regress *backwards* — from simulated data vectors to the
//! parameter components that produced them — with a Gaussian process, and
//! evaluate that GP at the observed data point. The GP's predictive Gaussian
//! is then an approximation of the marginal posterior of that component.
//!
//! The crate provides:
//!
//! * [`gp`] — GP regression with observation noise: kernels, marginal-likelihood
//!   hyperparameter fitting, noisy prediction, and local training-set selection.
//! * [`inference`] — the three inverse-regression algorithms (single-batch,
//!   proposal-prior, adaptive tempered), the independent-Gaussian algebra used
//!   to correct for sampling from a proposal instead of the prior, and marginal
//!   moment extraction from the weighted-Gaussian posterior.
//! * [`abc`] — an ABC rejection baseline and a brute-force posterior-mean
//!   oracle used for convergence testing.
//! * [`models`] — four stochastic forward models (a 1-D erf toy, an S-system
//!   metabolic pathway, blowfly population dynamics, Hodgkin-Huxley), plus a
//!   deterministic identity model for test scaffolding.
//! * [`stats`] — the fixed 16-dimensional summary-statistics vector extracted
//!   from raw time series.

pub mod abc;
pub mod dist;
pub mod error;
pub mod gp;
pub mod inference;
pub mod models;
pub mod seed;
pub mod stats;

pub use dist::{IndependentGaussian, PriorDim, PriorSpec};
pub use error::{Error, Result};
pub use gp::{
    gp_fit, gp_predict, log_marginal_likelihood, select_local, FitConfig, GaussianPrediction,
    GpHyperparams, KernelFamily, KernelSpec, TrainingSet,
};
pub use inference::{
    adaptive_igpr, basic_igpr, combine_with_proposal, distance, proposal_igpr, AdaptiveOutcome,
    BasicOutcome, CombinedGaussian, IgprOptions, IterationRecord, ProposalOutcome, RunRecord,
    TemperingSchedule, WeightedGaussianPosterior, PRECISION_FLOOR,
};
pub use models::SimulationModel;
pub use stats::{moments, summary_stats, SummaryVector, TimeSeries, SUMMARY_DIM};
