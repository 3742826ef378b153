//! Benchmarking dense square matrix multiplication: tiled host backends, a
//! compute-only trial harness and the statistics used to rank backends by
//! FLOPS (bootstrap intervals, Welch ANOVA, Games-Howell).

pub mod backends;
pub mod harness;
pub mod matrix;
pub mod stats;

pub use backends::{Backend, BackendError, PoolConfig, Registry, TileConfig};
pub use matrix::{flop_count, generate, max_abs_rel_diff, GenSpec, Matrix, MatrixError};
