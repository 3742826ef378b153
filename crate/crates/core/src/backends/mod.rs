//! Multiplication algorithms under test.
//!
//! Every backend is externally pure: it reads two immutable operands and
//! returns a freshly allocated product. The parallel backends spawn and join
//! their own workers inside each call and keep no state between calls, so a
//! single backend value may be shared and called from several threads at once.

mod ffi;
mod naive;
mod registry;
mod tiled;

use std::num::NonZeroUsize;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{Matrix, MatrixError};

pub use ffi::{ForeignBackend, ForeignMultiplyFn, GPU_TILED_SYMBOL};
pub use naive::{naive_multiply, Naive};
pub use registry::{BackendDescriptor, BackendHandle, Registry, Resolved, BUILTIN_NAMES};
pub use tiled::{
    tiled_parallel_multiply, tiled_pool_multiply, tiled_seq_multiply, TiledParallel, TiledPool,
    TiledSeq,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("shape mismatch: cannot multiply {left_rows}x{left_cols} by {right_rows}x{right_cols}")]
    Shape {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("backend {0:?} is already registered")]
    Conflict(String),
    #[error("unknown backend {0:?}")]
    Unknown(String),
    #[error("{0}")]
    Matrix(#[from] MatrixError),
    #[error("backend {name:?} failed: {message}")]
    External { name: String, message: String },
}

/// Square tile edge `K` used by the tiled backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TileConfig {
    k: NonZeroUsize,
}

impl TileConfig {
    pub const DEFAULT_EDGE: usize = 32;

    pub fn new(k: usize) -> Result<Self, BackendError> {
        NonZeroUsize::new(k)
            .map(|k| Self { k })
            .ok_or_else(|| BackendError::InvalidConfig("tile edge must be at least 1".into()))
    }

    pub fn k(&self) -> usize {
        self.k.get()
    }
}

impl Default for TileConfig {
    fn default() -> Self {
        Self::new(Self::DEFAULT_EDGE).unwrap()
    }
}

impl TryFrom<usize> for TileConfig {
    type Error = BackendError;
    fn try_from(k: usize) -> Result<Self, Self::Error> {
        Self::new(k)
    }
}

impl From<TileConfig> for usize {
    fn from(t: TileConfig) -> usize {
        t.k()
    }
}

/// Worker count for the parallel backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct PoolConfig {
    threads: NonZeroUsize,
}

impl PoolConfig {
    pub fn new(threads: usize) -> Result<Self, BackendError> {
        NonZeroUsize::new(threads)
            .map(|threads| Self { threads })
            .ok_or_else(|| BackendError::InvalidConfig("thread count must be at least 1".into()))
    }

    pub fn threads(&self) -> usize {
        self.threads.get()
    }
}

impl Default for PoolConfig {
    /// One worker per available hardware thread.
    fn default() -> Self {
        Self {
            threads: std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN),
        }
    }
}

impl TryFrom<usize> for PoolConfig {
    type Error = BackendError;
    fn try_from(n: usize) -> Result<Self, Self::Error> {
        Self::new(n)
    }
}

impl From<PoolConfig> for usize {
    fn from(p: PoolConfig) -> usize {
        p.threads()
    }
}

/// Output of one backend call.
#[derive(Debug, Clone)]
pub struct Product {
    pub matrix: Matrix,
    /// Compute time measured by the backend itself (e.g. device events that
    /// exclude host/device copies). When `None` the harness uses wall time
    /// around the call.
    pub compute_time: Option<Duration>,
}

impl From<Matrix> for Product {
    fn from(matrix: Matrix) -> Self {
        Self {
            matrix,
            compute_time: None,
        }
    }
}

/// A matrix multiplication implementation selectable by name.
pub trait Backend: Send + Sync {
    fn multiply(&self, a: &Matrix, b: &Matrix) -> Result<Product, BackendError>;
}

impl<F> Backend for F
where
    F: Fn(&Matrix, &Matrix) -> Result<Matrix, BackendError> + Send + Sync,
{
    fn multiply(&self, a: &Matrix, b: &Matrix) -> Result<Product, BackendError> {
        self(a, b).map(Product::from)
    }
}

pub(crate) fn check_inner(a: &Matrix, b: &Matrix) -> Result<(), BackendError> {
    if a.cols() != b.rows() {
        return Err(BackendError::Shape {
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    Ok(())
}
