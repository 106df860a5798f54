//! Berk-Nash equilibria of misspecified Markov decision processes.
//!
//! A continuous model is declared as an [`SMDPSpec`](model::SMDPSpec) (true kernel,
//! a parametric family of subjective kernels, payoff, discount). [`discretize`]
//! turns it into a [`FiniteSMDP`](discretize::FiniteSMDP) on a truncated box,
//! on which [`equilibrium::solve_berk_nash`] searches for a joint state-action
//! measure `m` and belief `nu` such that
//!
//! * actions in the support of `m` are optimal under the `nu`-mixed kernel,
//! * `nu` only charges parameters minimising the weighted KL divergence given `m`,
//! * the state marginal of `m` is stationary under the true kernel.
//!
//! [`learning`] simulates a Bayesian agent on the same grid.

// `!(x > 0.0)` is the NaN-rejecting form used in argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod discretize;
pub mod divergence;
pub mod equilibrium;
mod error;
pub mod examples;
pub mod export;
mod ext;
pub mod learning;
pub mod model;
pub mod special;
pub mod stationary;

pub use error::{Error, Result};
pub use ext::ExtReal;
