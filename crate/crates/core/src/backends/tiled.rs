//! Cache-tiled multiplication: one sequential schedule and two host-parallel
//! schedules over the same tile kernel.
//!
//! The loop nest is `i0, j0` over output tiles, then `k0` over the shared
//! dimension, then `i, j, k` inside the tile. Output tiles never overlap, so
//! the `(i0, j0)` grid can be spread across workers. The `k0` phases of one
//! tile all update the same cells and stay on the worker that owns the tile.
//! Because every schedule runs the identical per-tile kernel, the parallel
//! results are bitwise-equal to the sequential one for any worker count.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::thread;

use super::{check_inner, Backend, BackendError, PoolConfig, Product, TileConfig};
use crate::matrix::Matrix;

/// One output tile: origin plus the clipped extent, computed once per tile
/// so the inner loops run against local bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Tile {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Output tiles of an `m x n` product in row-major `(i0, j0)` order.
/// Edge tiles are clipped when `k` does not divide the dimension.
pub(crate) fn tile_grid(m: usize, n: usize, k: usize) -> Vec<Tile> {
    let mut tiles = Vec::with_capacity(m.div_ceil(k) * n.div_ceil(k));
    for row0 in (0..m).step_by(k) {
        let rows = k.min(m - row0);
        for col0 in (0..n).step_by(k) {
            tiles.push(Tile {
                row0,
                col0,
                rows,
                cols: k.min(n - col0),
            });
        }
    }
    tiles
}

/// Accumulates `A[tile rows, :] * B[:, tile cols]` into `out`, where cell
/// `(i, j)` of the tile is `out[i * stride + j]` and starts at zero.
///
/// For each `k0` phase the cell's running sum is loaded once, extended over
/// the phase in local storage, and written back once.
fn accumulate_tile(a: &Matrix, b: &Matrix, tile: Tile, k: usize, out: &mut [f64], stride: usize) {
    let inner = a.cols();
    let n = b.cols();
    let (ad, bd) = (a.as_slice(), b.as_slice());
    let (t_rows, t_cols) = (tile.rows, tile.cols);
    for k0 in (0..inner).step_by(k) {
        let k_end = (k0 + k).min(inner);
        for i in 0..t_rows {
            let a_base = (tile.row0 + i) * inner;
            let a_seg = &ad[a_base + k0..a_base + k_end];
            let out_row = &mut out[i * stride..i * stride + t_cols];
            for (j, cell) in out_row.iter_mut().enumerate() {
                let col = tile.col0 + j;
                let mut sum = *cell;
                for (kk, &av) in a_seg.iter().enumerate() {
                    sum += av * bd[(k0 + kk) * n + col];
                }
                *cell = sum;
            }
        }
    }
}

/// A finished output tile held in its own `rows x cols` buffer.
struct TileResult {
    tile: Tile,
    values: Vec<f64>,
}

fn compute_tile(a: &Matrix, b: &Matrix, tile: Tile, k: usize) -> TileResult {
    let mut values = vec![0.0; tile.rows * tile.cols];
    accumulate_tile(a, b, tile, k, &mut values, tile.cols);
    TileResult { tile, values }
}

/// Copies per-worker tile buffers into the product. With debug assertions on,
/// checks that every output cell is written by exactly one tile.
fn scatter(m: usize, n: usize, results: impl IntoIterator<Item = TileResult>) -> Matrix {
    let mut c = vec![0.0; m * n];
    let mut written = if cfg!(debug_assertions) {
        vec![false; m * n]
    } else {
        Vec::new()
    };
    for TileResult { tile, values } in results {
        for i in 0..tile.rows {
            let dst = (tile.row0 + i) * n + tile.col0;
            c[dst..dst + tile.cols].copy_from_slice(&values[i * tile.cols..(i + 1) * tile.cols]);
            if cfg!(debug_assertions) {
                for w in &mut written[dst..dst + tile.cols] {
                    assert!(!*w, "output cell written by two tiles");
                    *w = true;
                }
            }
        }
    }
    if cfg!(debug_assertions) {
        assert!(written.iter().all(|&w| w), "output cell never written");
    }
    Matrix::from_parts(m, n, c)
}

pub fn tiled_seq_multiply(a: &Matrix, b: &Matrix, t: &TileConfig) -> Result<Matrix, BackendError> {
    check_inner(a, b)?;
    let (m, n, k) = (a.rows(), b.cols(), t.k());
    let mut c = vec![0.0; m * n];
    for tile in tile_grid(m, n, k) {
        let origin = tile.row0 * n + tile.col0;
        accumulate_tile(a, b, tile, k, &mut c[origin..], n);
    }
    Ok(Matrix::from_parts(m, n, c))
}

/// Static schedule over the collapsed `(i0, j0)` grid: the tile list is split
/// into `threads` contiguous chunks and worker `w` computes chunk `w`.
pub fn tiled_parallel_multiply(
    a: &Matrix,
    b: &Matrix,
    t: &TileConfig,
    p: &PoolConfig,
) -> Result<Matrix, BackendError> {
    check_inner(a, b)?;
    let (m, n, k) = (a.rows(), b.cols(), t.k());
    let tiles = tile_grid(m, n, k);
    let workers = p.threads().min(tiles.len());
    let total = tiles.len();
    let chunks: Vec<&[Tile]> = (0..workers)
        .map(|w| &tiles[w * total / workers..(w + 1) * total / workers])
        .collect();

    let results: Vec<Vec<TileResult>> = thread::scope(|s| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| {
                s.spawn(move || {
                    chunk
                        .iter()
                        .map(|&tile| compute_tile(a, b, tile, k))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("tile worker panicked"))
            .collect()
    });
    Ok(scatter(m, n, results.into_iter().flatten()))
}

/// Task-queue schedule: every output tile is queued as one task and a pool of
/// `threads` workers pops tasks under a mutex until the queue is empty. Each
/// task runs the full `k0, i, j, k` nest for its tile.
pub fn tiled_pool_multiply(
    a: &Matrix,
    b: &Matrix,
    t: &TileConfig,
    p: &PoolConfig,
) -> Result<Matrix, BackendError> {
    check_inner(a, b)?;
    let (m, n, k) = (a.rows(), b.cols(), t.k());
    let queue: Mutex<VecDeque<Tile>> = Mutex::new(tile_grid(m, n, k).into());
    let workers = p.threads().min(queue.lock().unwrap().len());

    let results: Vec<Vec<TileResult>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        // the guard drops before the tile is computed
                        let next = queue.lock().unwrap().pop_front();
                        match next {
                            Some(tile) => done.push(compute_tile(a, b, tile, k)),
                            None => break done,
                        }
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pool worker panicked"))
            .collect()
    });
    debug_assert!(queue.lock().unwrap().is_empty());
    Ok(scatter(m, n, results.into_iter().flatten()))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TiledSeq {
    pub tile: TileConfig,
}

impl Backend for TiledSeq {
    fn multiply(&self, a: &Matrix, b: &Matrix) -> Result<Product, BackendError> {
        tiled_seq_multiply(a, b, &self.tile).map(Product::from)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TiledParallel {
    pub tile: TileConfig,
    pub pool: PoolConfig,
}

impl Backend for TiledParallel {
    fn multiply(&self, a: &Matrix, b: &Matrix) -> Result<Product, BackendError> {
        tiled_parallel_multiply(a, b, &self.tile, &self.pool).map(Product::from)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TiledPool {
    pub tile: TileConfig,
    pub pool: PoolConfig,
}

impl Backend for TiledPool {
    fn multiply(&self, a: &Matrix, b: &Matrix) -> Result<Product, BackendError> {
        tiled_pool_multiply(a, b, &self.tile, &self.pool).map(Product::from)
    }
}
