//! Dense vector kernels with a fixed summation order.
//!
//! Reductions are computed block-by-block (serial combine of per-block
//! partial sums), so results are bit-identical for any thread count. Maps
//! parallelize over disjoint chunks and are order-independent anyway.

use rayon::prelude::*;

/// Block length for deterministic reductions and parallel maps.
const BLOCK: usize = 1 << 13;

/// Minimum length before fanning work out to the thread pool.
const PAR_MIN: usize = 1 << 15;

fn parallel(len: usize) -> bool {
    len >= PAR_MIN && rayon::current_num_threads() > 1
}

fn block_sum(x: &[f64], f: impl Fn(usize, f64) -> f64 + Sync, base: usize) -> f64 {
    let mut acc = 0.0;
    for (i, &v) in x.iter().enumerate() {
        acc += f(base + i, v);
    }
    acc
}

fn reduce_blocks(x: &[f64], f: impl Fn(usize, f64) -> f64 + Sync) -> f64 {
    if parallel(x.len()) {
        let partials: Vec<f64> = x
            .par_chunks(BLOCK)
            .enumerate()
            .map(|(b, chunk)| block_sum(chunk, &f, b * BLOCK))
            .collect();
        partials.iter().sum()
    } else {
        x.chunks(BLOCK).enumerate().map(|(b, chunk)| block_sum(chunk, &f, b * BLOCK)).sum()
    }
}

/// Euclidean norm squared.
pub fn norm2_sq(x: &[f64]) -> f64 {
    reduce_blocks(x, |_, v| v * v)
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    norm2_sq(x).sqrt()
}

/// Dot product with the same fixed block order as [`norm2_sq`].
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    reduce_blocks(x, |i, v| v * y[i])
}

/// `out = x`.
pub fn copy_into(x: &[f64], out: &mut [f64]) {
    out.copy_from_slice(x);
}

/// `out[i] = x[i] + t * dx[i]`.
pub fn add_scaled_into(x: &[f64], t: f64, dx: &[f64], out: &mut [f64]) {
    assert_eq!(x.len(), dx.len());
    assert_eq!(x.len(), out.len());
    if parallel(x.len()) {
        out.par_chunks_mut(BLOCK)
            .zip(x.par_chunks(BLOCK).zip(dx.par_chunks(BLOCK)))
            .for_each(|(o, (xs, ds))| {
                for i in 0..o.len() {
                    o[i] = xs[i] + t * ds[i];
                }
            });
    } else {
        for i in 0..out.len() {
            out[i] = x[i] + t * dx[i];
        }
    }
}

/// `y += t * x`.
pub fn axpy(t: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    if parallel(x.len()) {
        y.par_chunks_mut(BLOCK).zip(x.par_chunks(BLOCK)).for_each(|(ys, xs)| {
            for i in 0..ys.len() {
                ys[i] += t * xs[i];
            }
        });
    } else {
        for i in 0..y.len() {
            y[i] += t * x[i];
        }
    }
}

/// `x *= t`.
pub fn scale(x: &mut [f64], t: f64) {
    for v in x.iter_mut() {
        *v *= t;
    }
}

/// `out[i] = x[i] * y[i]`.
pub fn mul_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), out.len());
    if parallel(x.len()) {
        out.par_chunks_mut(BLOCK)
            .zip(x.par_chunks(BLOCK).zip(y.par_chunks(BLOCK)))
            .for_each(|(o, (xs, ys))| {
                for i in 0..o.len() {
                    o[i] = xs[i] * ys[i];
                }
            });
    } else {
        for i in 0..out.len() {
            out[i] = x[i] * y[i];
        }
    }
}

/// `out[i] = f(x[i])` with chunked parallelism.
pub fn map_into(x: &[f64], out: &mut [f64], f: impl Fn(f64) -> f64 + Sync) {
    assert_eq!(x.len(), out.len());
    if parallel(x.len()) {
        out.par_chunks_mut(BLOCK).zip(x.par_chunks(BLOCK)).for_each(|(o, xs)| {
            for i in 0..o.len() {
                o[i] = f(xs[i]);
            }
        });
    } else {
        for i in 0..out.len() {
            out[i] = f(x[i]);
        }
    }
}

/// Deterministic (fixed block order) sum of `f(i, x[i])`.
pub fn map_sum(x: &[f64], f: impl Fn(usize, f64) -> f64 + Sync) -> f64 {
    reduce_blocks(x, f)
}

/// `out = x - y`.
pub fn sub_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), out.len());
    for i in 0..out.len() {
        out[i] = x[i] - y[i];
    }
}

/// Smallest entry; `+inf` for an empty slice.
pub fn min_entry(x: &[f64]) -> f64 {
    if parallel(x.len()) {
        let partials: Vec<f64> = x
            .par_chunks(BLOCK)
            .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        partials.into_iter().fold(f64::INFINITY, f64::min)
    } else {
        x.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// True if every entry is strictly positive.
pub fn all_positive(x: &[f64]) -> bool {
    x.iter().all(|&v| v > 0.0)
}
