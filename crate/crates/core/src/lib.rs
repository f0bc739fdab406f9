//! Approximate cross-validation for structured models with latent variables.
//!
//! A model maps parameters and a structure (a sequence or a graph) to log
//! potentials. Data weights enter the weighted marginal likelihood, and
//! derivatives with respect to both come from dual numbers. Exact CV refits
//! each fold; IJ and NS replace refits with one linear solve per fold.
//!
//! Runnable examples, one per capability:
//!
//! - `weighted_marginals`: forward recursion, elimination and enumeration
//! - `derivatives`: gradients, Hessians and weight Jacobians
//! - `gaussian_loo`: a custom objective with closed-form answers
//! - `hmm_lscv`, `crf_lscv`: leave one structure out
//! - `event_lwcv`: leave points out of one long sequence
//! - `spatial_ising`: a hidden field on a grid
//! - `future_folds`: leave-future-out and the two weighting schemes
//! - `inexact_sweep`: IJ at iterates short of the optimum

pub mod acv;
pub mod autodiff;
pub mod commands;
pub mod config;
pub mod cv;
pub mod data;
pub mod error;
pub mod io;
pub mod marginal;
pub mod model;
pub mod models;
pub mod optimize;
pub mod problem;

pub use error::{Error, Result};
