use super::{check_inner, Backend, BackendError, Product};
use crate::matrix::Matrix;

/// Untiled triple loop. Each `c[i][j]` is summed in index order
/// `k = 0..a.cols()`; this is the correctness oracle for every other backend.
pub fn naive_multiply(a: &Matrix, b: &Matrix) -> Result<Matrix, BackendError> {
    check_inner(a, b)?;
    let (m, inner, n) = (a.rows(), a.cols(), b.cols());
    let (ad, bd) = (a.as_slice(), b.as_slice());
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let a_row = &ad[i * inner..(i + 1) * inner];
        for j in 0..n {
            let mut sum = 0.0;
            for (k, &av) in a_row.iter().enumerate() {
                sum += av * bd[k * n + j];
            }
            c[i * n + j] = sum;
        }
    }
    Ok(Matrix::from_parts(m, n, c))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Naive;

impl Backend for Naive {
    fn multiply(&self, a: &Matrix, b: &Matrix) -> Result<Product, BackendError> {
        naive_multiply(a, b).map(Product::from)
    }
}
