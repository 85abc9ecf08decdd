//! Collaborative representation distance (CRD) for patch-based anomaly
//! detection.
//!
//! A memory bank of normal patch features is folded into a single symmetric
//! `d × d` matrix; scoring a batch of query patches is then one dense matrix
//! multiply, independent of how many patches the bank held. Exact
//! nearest-neighbor baselines, evaluation metrics and file formats live
//! alongside.

pub mod bank;
pub mod baselines;
pub mod crd;
pub mod error;
pub mod evalkit;
pub mod io;

pub use bank::{FeatureBank, QueryBatch};
pub use baselines::{greedy_coreset, knn_avg_distance, nn_distance, CoresetSelection, NnResult};
pub use crd::{build_scorer, crd_score, residual_score, solve_coefficients, CoefVector, CrdScorer};
pub use error::{Error, Result};
pub use evalkit::{aggregate_image_score, auroc, calibrate_threshold, PatchGrid, ScoredImage, Threshold};

/// Regularization weight used when none is given.
pub const DEFAULT_LAMBDA: f64 = 5.0;

/// λ grid for sensitivity sweeps.
pub const LAMBDA_GRID: [f64; 5] = [0.1, 1.0, 3.0, 5.0, 10.0];
