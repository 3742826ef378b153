//! Dense row-major matrices, seeded generation and the exact FLOP count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid range: lo = {lo} exceeds hi = {hi}")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("data length {len} does not match {rows}x{cols}")]
    LengthMismatch { rows: usize, cols: usize, len: usize },
    #[error("non-finite element at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    Shape {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
}

/// Dense matrix of `f64` stored row-major: element `(i, j)` lives at `i * cols + j`.
///
/// Every element is finite and both dimensions are at least one. A `Matrix`
/// is immutable once built, so it can be shared freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(MatrixError::LengthMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite {
                row: idx / cols,
                col: idx % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Mostly useful in tests.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, MatrixError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        check_dims(n_rows, n_cols)?;
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(MatrixError::InvalidDimension(format!(
                    "row {i} has {} columns, expected {n_cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(n_rows, n_cols, data)
    }

    pub fn identity(n: usize) -> Result<Self, MatrixError> {
        check_dims(n, n)?;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Ok(Self { rows: n, cols: n, data })
    }

    /// Wraps a buffer produced by a multiplication kernel. The caller
    /// guarantees the length; finiteness is checked by whoever consumes the
    /// result (see [`Matrix::check_finite`]).
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub(crate) fn check_finite(&self) -> Result<(), MatrixError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(idx) => Err(MatrixError::NonFinite {
                row: idx / self.cols,
                col: idx % self.cols,
            }),
            None => Ok(()),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.rows && j < self.cols).then(|| self.data[i * self.cols + j])
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<(), MatrixError> {
    if rows == 0 || cols == 0 {
        return Err(MatrixError::InvalidDimension(format!(
            "{rows}x{cols} has a zero dimension"
        )));
    }
    Ok(())
}

/// Parameters of a random matrix: shape, closed sampling range and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub rows: usize,
    pub cols: usize,
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn square(n: usize, lo: f64, hi: f64, seed: u64) -> Self {
        Self {
            rows: n,
            cols: n,
            lo,
            hi,
            seed,
        }
    }
}

/// Fills a matrix with i.i.d. uniform draws on `[spec.lo, spec.hi]`.
///
/// The stream is ChaCha8 seeded through `seed_from_u64`, which is specified
/// to be identical on every platform. Each element consumes one 64-bit word:
/// the top 53 bits give `u` in `[0, 1)` and the element is `lo + u * (hi - lo)`.
pub fn generate(spec: &GenSpec) -> Result<Matrix, MatrixError> {
    check_dims(spec.rows, spec.cols)?;
    if !(spec.lo.is_finite() && spec.hi.is_finite()) {
        return Err(MatrixError::InvalidRange {
            lo: spec.lo,
            hi: spec.hi,
        });
    }
    if spec.lo > spec.hi {
        return Err(MatrixError::InvalidRange {
            lo: spec.lo,
            hi: spec.hi,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.hi - spec.lo;
    let data = (0..spec.rows * spec.cols)
        .map(|_| {
            let u = unit_f64(rng.next_u64());
            // lo + u*width can round one ulp past hi for wide ranges
            (spec.lo + u * width).min(spec.hi)
        })
        .collect();
    Ok(Matrix::from_parts(spec.rows, spec.cols, data))
}

#[inline]
pub(crate) fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exact floating point operation count of an `n x n` product: `n^2` dot
/// products of `n` multiplies and `n - 1` adds, i.e. `2n^3 - n^2`.
pub fn flop_count(n: u64) -> Result<u128, MatrixError> {
    if n == 0 {
        return Err(MatrixError::InvalidDimension(
            "flop count of a 0x0 product".into(),
        ));
    }
    let n = n as u128;
    Ok(2 * n * n * n - n * n)
}

/// Largest elementwise relative difference, `|a - b| / max(|a|, |b|, 1)`.
pub fn max_abs_rel_diff(a: &Matrix, b: &Matrix) -> Result<f64, MatrixError> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(MatrixError::Shape {
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    #[test]
    fn degenerate_range_forces_value() {
        let m = generate(&GenSpec::square(1, 3.0, 3.0, 7)).unwrap();
        assert_eq!(m.as_slice(), &[3.0]);
    }

    #[test]
    fn small_matrix_in_range() {
        let m = generate(&GenSpec::square(2, 2.0, 5.0, 42)).unwrap();
        assert!(m.as_slice().iter().all(|&v| (2.0..=5.0).contains(&v)));
    }

    #[test]
    fn large_matrix_mean_near_midpoint() {
        let m = generate(&GenSpec::square(1000, 2.0, 5.0, 1)).unwrap();
        let mean = m.as_slice().iter().sum::<f64>() / m.as_slice().len() as f64;
        assert!((mean - 3.5).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn generate_rejects_bad_specs() {
        assert!(matches!(
            generate(&GenSpec::square(2, 5.0, 2.0, 0)),
            Err(MatrixError::InvalidRange { .. })
        ));
        let zero_rows = GenSpec {
            rows: 0,
            cols: 3,
            lo: 0.0,
            hi: 1.0,
            seed: 0,
        };
        assert!(matches!(
            generate(&zero_rows),
            Err(MatrixError::InvalidDimension(_))
        ));
    }

    #[test]
    fn generated_stream_is_pinned() {
        // Guards against silent changes in the generator or the mapping.
        let a = generate(&GenSpec::square(2, 0.0, 1.0, 0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let expected: Vec<f64> = (0..4).map(|_| unit_f64(RngCore::next_u64(&mut rng))).collect();
        assert_eq!(a.as_slice(), expected.as_slice());
    }

    #[test]
    fn flop_count_values() {
        assert_eq!(flop_count(1).unwrap(), 1);
        assert_eq!(flop_count(2).unwrap(), 12);
        assert_eq!(flop_count(10_000).unwrap(), 1_999_900_000_000);
        assert!(flop_count(100_000).is_ok());
        assert!(flop_count(0).is_err());
    }

    #[test]
    fn flop_count_matches_loop_count() {
        for n in 1..=64u64 {
            let mut ops = 0u128;
            for _i in 0..n {
                for _j in 0..n {
                    ops += 1; // first product seeds the sum
                    for _k in 1..n {
                        ops += 2;
                    }
                }
            }
            assert_eq!(flop_count(n).unwrap(), ops, "n = {n}");
        }
    }

    #[test]
    fn rel_diff_examples() {
        let a = Matrix::from_rows(&[[1.0]]).unwrap();
        let b = Matrix::from_rows(&[[2.0]]).unwrap();
        assert_eq!(max_abs_rel_diff(&a, &a).unwrap(), 0.0);
        assert_eq!(max_abs_rel_diff(&a, &b).unwrap(), 0.5);
        let c = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            max_abs_rel_diff(&a, &c),
            Err(MatrixError::Shape { .. })
        ));
    }

    #[test]
    fn constructor_invariants() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(MatrixError::NonFinite { row: 0, col: 1 })
        ));
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.get(1, 0), Some(3.0));
        assert_eq!(m.get(2, 0), None);
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }

    proptest! {
        #[test]
        fn generation_is_deterministic_and_in_range(
            rows in 1usize..20, cols in 1usize..20,
            lo in -10.0f64..10.0, width in 0.0f64..10.0, seed: u64,
        ) {
            let spec = GenSpec { rows, cols, lo, hi: lo + width, seed };
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            prop_assert_eq!(a.as_slice().len(), rows * cols);
            prop_assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
            prop_assert!(a.as_slice().iter().all(|&v| spec.lo <= v && v <= spec.hi));
        }

        #[test]
        fn flop_count_strictly_increasing(n in 1u64..100_000) {
            prop_assert!(flop_count(n + 1).unwrap() > flop_count(n).unwrap());
        }

        #[test]
        fn rel_diff_is_symmetric(seed_a: u64, seed_b: u64, n in 1usize..8) {
            let a = generate(&GenSpec::square(n, -3.0, 3.0, seed_a)).unwrap();
            let b = generate(&GenSpec::square(n, -3.0, 3.0, seed_b)).unwrap();
            prop_assert_eq!(max_abs_rel_diff(&a, &b).unwrap(), max_abs_rel_diff(&b, &a).unwrap());
        }
    }
}
