//! Benchmark harness for single-cell RNA-seq expression recovery methods.
//!
//! The harness turns a high-quality count matrix into a reference standing
//! in for true expression, simulates noisy observations from it by Poisson
//! downsampling with Gamma-distributed per-cell sequencing efficiencies
//! (or by marginal-matched amended downsampling), and scores recovery
//! method outputs against the reference with correlation, correlation-
//! matrix-distance, and clustering-agreement metrics.
//!
//! Modules:
//! - [`matrix`]: sparse genes × cells matrices, file formats, summaries
//! - [`refbuild`]: reference filtering and synthetic data with planted clusters
//! - [`downsample`]: Poisson-Gamma and amended (marginal-matched) downsampling
//! - [`metrics`]: correlations, CMD, adjusted Rand index, pair Jaccard
//! - [`cluster`]: truncated PCA, k-means, Ward hierarchical clustering
//!
//! Every stochastic operation takes an explicit seed and derives one random
//! substream per cell, so results are bit-identical for any worker count.

pub mod cluster;
pub mod downsample;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod refbuild;
pub mod rng;

pub use error::{Error, Result};
