#![allow(dead_code)]

use a1gm::{DenseMatrix, MaskMatrix, MatrixTriple};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn positive_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.05..2.0))
}

pub fn random_triple(rng: &mut ChaCha8Rng, i: usize, j: usize, n: usize, m: usize) -> MatrixTriple {
    let x = positive_matrix(rng, i, j);
    let y = positive_matrix(rng, n, j);
    let z = positive_matrix(rng, i, m);
    MatrixTriple::new(x, y, z).unwrap()
}

pub fn positive_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(0.05..2.0)).collect()
}

/// Missing entries exactly at `k1` random rows × `k2` random columns.
pub fn random_grid_mask(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    k1: usize,
    k2: usize,
) -> MaskMatrix {
    let mut r = vec![false; rows];
    let mut c = vec![false; cols];
    sample(rng, rows, k1).into_iter().for_each(|k| r[k] = true);
    sample(rng, cols, k2).into_iter().for_each(|k| c[k] = true);
    MaskMatrix::from_fn(rows, cols, |i, j| !(r[i] && c[j]))
}

/// Grid mask for a ~`frac` missing share with the given shape.
pub fn grid_mask_with_fraction(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    frac: f64,
) -> MaskMatrix {
    let k1 = ((rows as f64 * frac.sqrt()).ceil() as usize).clamp(1, rows - 1);
    let k2 = ((frac * (rows * cols) as f64 / k1 as f64).ceil() as usize).clamp(1, cols - 1);
    random_grid_mask(rng, rows, cols, k1, k2)
}

pub fn random_permutation(rng: &mut ChaCha8Rng, len: usize) -> Vec<usize> {
    sample(rng, len, len).into_vec()
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Random `(I, J, N, M)` with `I, J ∈ [1, max_ij)` and `N, M ∈ [lo_nm, max_nm)`.
pub fn random_dims(
    rng: &mut ChaCha8Rng,
    max_ij: usize,
    lo_nm: usize,
    max_nm: usize,
) -> (usize, usize, usize, usize) {
    (
        rng.gen_range(1..max_ij),
        rng.gen_range(1..max_ij),
        rng.gen_range(lo_nm..max_nm),
        rng.gen_range(lo_nm..max_nm),
    )
}
