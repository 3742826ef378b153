//! Adapter for multiplication kernels behind a C ABI (device kernels, vendor
//! libraries).
//!
//! The foreign side implements
//!
//! ```c
//! int32_t tilebench_gpu_tiled_multiply(
//!     const double *a, const double *b,   /* row-major, m*k and k*n */
//!     size_t m, size_t k, size_t n,
//!     size_t tile,                         /* tile / block edge */
//!     double *out,                         /* caller-allocated, m*n */
//!     double *compute_seconds);            /* kernel time, or < 0 if not measured */
//! ```
//!
//! Status codes: `0` ok, `1` no capable device, `2` device allocation
//! failure, anything else is a generic failure. Transfers between host and
//! device must stay outside `compute_seconds`.

use std::time::Duration;

use super::{check_inner, Backend, BackendError, Product, TileConfig};
use crate::matrix::Matrix;

/// Symbol exported by the device backend library.
pub const GPU_TILED_SYMBOL: &str = "tilebench_gpu_tiled_multiply";

pub type ForeignMultiplyFn = unsafe extern "C" fn(
    a: *const f64,
    b: *const f64,
    m: usize,
    k: usize,
    n: usize,
    tile: usize,
    out: *mut f64,
    compute_seconds: *mut f64,
) -> i32;

pub struct ForeignBackend {
    name: String,
    func: ForeignMultiplyFn,
    tile: TileConfig,
}

impl ForeignBackend {
    /// # Safety
    ///
    /// `func` must follow the contract in the module docs: read exactly
    /// `m*k` and `k*n` elements, write exactly `m*n` elements to `out`, write
    /// one value to `compute_seconds`, and return without retaining pointers.
    pub unsafe fn new(name: impl Into<String>, func: ForeignMultiplyFn, tile: TileConfig) -> Self {
        Self {
            name: name.into(),
            func,
            tile,
        }
    }

    fn fail(&self, message: impl Into<String>) -> BackendError {
        BackendError::External {
            name: self.name.clone(),
            message: message.into(),
        }
    }
}

impl Backend for ForeignBackend {
    fn multiply(&self, a: &Matrix, b: &Matrix) -> Result<Product, BackendError> {
        check_inner(a, b)?;
        let (m, k, n) = (a.rows(), a.cols(), b.cols());
        let mut out = vec![0.0f64; m * n];
        let mut seconds = -1.0f64;
        // SAFETY: buffers have the advertised lengths and outlive the call;
        // the constructor's contract covers the callee.
        let status = unsafe {
            (self.func)(
                a.as_slice().as_ptr(),
                b.as_slice().as_ptr(),
                m,
                k,
                n,
                self.tile.k(),
                out.as_mut_ptr(),
                &mut seconds,
            )
        };
        match status {
            0 => {}
            1 => return Err(self.fail("no capable device")),
            2 => return Err(self.fail("device memory allocation failed")),
            s => return Err(self.fail(format!("status {s}"))),
        }
        let matrix = Matrix::new(m, n, out)?;
        let compute_time = (seconds.is_finite() && seconds > 0.0).then(|| Duration::from_secs_f64(seconds));
        Ok(Product {
            matrix,
            compute_time,
        })
    }
}
