// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised anywhere in the pulse-design pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("action index {index} out of range for {count} actions")]
    ActionOutOfRange { index: usize, count: usize },

    /// Model, dataset or suite metadata disagree with each other.
    #[error("metadata mismatch: {0}")]
    Mismatch(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("record {index}: {reason}")]
    CorruptRecord { index: usize, reason: String },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
