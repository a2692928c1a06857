// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Discrete pulse design for singlet-triplet qubits.
//!
//! A small policy network is trained on one-step greedy labels (with
//! local-optimum configurations filtered out) and then rolled forward to
//! design pulse sequences. Greedy, revised greedy, GRAPE and CRAB baselines
//! run on the same discrete action space, with optional Kraus noise.
//!
//! Module map:
//! - [`quantum`]: states, propagators, fidelities, Kraus channels.
//! - [`control`]: Hamiltonians, action sets and cached step propagators.
//! - [`dataset`]: greedy oracle, training data, evaluation suites, file IO.
//! - [`mlp`]: the policy network and its trainer.
//! - [`policy`]: the network-driven preparation loop.
//! - [`baselines`]: GA, RG, GRAPE and CRAB.
//! - [`bench`]: suite runs, noise sweeps, histograms and trajectories.

// `!(a > b)` checks deliberately treat NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod control;
pub mod dataset;
pub mod error;
pub mod mlp;
pub mod policy;
pub mod quantum;
pub mod rng;

pub use error::{Error, Result};
