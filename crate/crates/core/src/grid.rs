//! Grid-like masks and the A1GM pipeline.
//!
//! A mask is grid-like when its missing entries are exactly `S1 × S2` for a
//! set of rows `S1` and a set of columns `S2`. Such a mask can be permuted so
//! that every missing entry sits in the bottom-right block, which turns
//! rank-1 missing NMF into rank-1 NMMF of the three observed blocks:
//!
//! ```text
//! [ X  Z ]   rows 0..I
//! [ Y  · ]   rows I..I+N
//! ```
//!
//! Masks that are not grid-like are first expanded to the smallest grid-like
//! mask containing them, which marks additional entries as missing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{masked_kl_outer, DenseMatrix, MaskMatrix, MatrixTriple};
use crate::nmmf::rank1_from_sums;

/// Rows (`S1`) and columns (`S2`) holding at least one missing entry, 0-based
/// and sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSets {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl GridSets {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.cols.is_empty()
    }

    /// `|S1| · |S2|`.
    pub fn product_size(&self) -> usize {
        self.rows.len() * self.cols.len()
    }
}

pub fn grid_sets(phi: &MaskMatrix) -> GridSets {
    let mut row_hit = vec![false; phi.rows()];
    let mut col_hit = vec![false; phi.cols()];
    for i in 0..phi.rows() {
        for (j, &observed) in phi.row(i).iter().enumerate() {
            if !observed {
                row_hit[i] = true;
                col_hit[j] = true;
            }
        }
    }
    let select = |hits: Vec<bool>| {
        hits.into_iter()
            .enumerate()
            .filter_map(|(k, hit)| hit.then_some(k))
            .collect()
    };
    GridSets {
        rows: select(row_hit),
        cols: select(col_hit),
    }
}

/// True iff the missing entries are exactly `S1 × S2`.
pub fn is_grid_like(phi: &MaskMatrix) -> bool {
    phi.missing_count() == grid_sets(phi).product_size()
}

/// Outcome of [`expand_to_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridExpansion {
    /// Mask whose missing entries are exactly `S1 × S2`.
    pub mask: MaskMatrix,
    pub sets: GridSets,
    pub original_missing: usize,
    pub expanded_missing: usize,
    /// `expanded_missing / original_missing`, or 1 when nothing is missing.
    pub increase_rate: f64,
}

/// Marks every entry of `S1 × S2` as missing.
///
/// Fails with [`Error::TooManyMissing`] when every row or every column holds a
/// missing value, since no fully observed block would remain.
pub fn expand_to_grid(phi: &MaskMatrix) -> Result<GridExpansion> {
    let sets = grid_sets(phi);
    let original_missing = phi.missing_count();
    if original_missing > 0 && (sets.rows.len() == phi.rows() || sets.cols.len() == phi.cols()) {
        return Err(Error::TooManyMissing {
            rows: phi.rows(),
            cols: phi.cols(),
            missing_rows: sets.rows.len(),
            missing_cols: sets.cols.len(),
        });
    }
    let mut row_in = vec![false; phi.rows()];
    let mut col_in = vec![false; phi.cols()];
    sets.rows.iter().for_each(|&r| row_in[r] = true);
    sets.cols.iter().for_each(|&c| col_in[c] = true);
    let mask = MaskMatrix::from_fn(phi.rows(), phi.cols(), |i, j| !(row_in[i] && col_in[j]));
    let expanded_missing = sets.product_size();
    let increase_rate = if original_missing == 0 {
        1.0
    } else {
        expanded_missing as f64 / original_missing as f64
    };
    Ok(GridExpansion {
        mask,
        sets,
        original_missing,
        expanded_missing,
        increase_rate,
    })
}

/// A permutation of `0..len`, stored as `src[new_index] = old_index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self((0..len).collect())
    }

    pub fn from_vec(src: Vec<usize>) -> Result<Self> {
        let p = Self(src);
        if !p.is_valid() {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        for &k in &self.0 {
            if k >= seen.len() || std::mem::replace(&mut seen[k], true) {
                return false;
            }
        }
        true
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (new, &old) in self.0.iter().enumerate() {
            inv[old] = new;
        }
        Self(inv)
    }

    /// `out[k] = values[src[k]]`.
    pub fn apply<T: Copy>(&self, values: &[T]) -> Vec<T> {
        assert_eq!(values.len(), self.0.len());
        self.0.iter().map(|&k| values[k]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPair {
    pub rows: Permutation,
    pub cols: Permutation,
}

/// Disjoint swaps moving `S1` into the last `|S1|` rows and `S2` into the last
/// `|S2|` columns. The k-th smallest index of `S ∩ Bᶜ` is swapped with the
/// k-th smallest of `Sᶜ ∩ B`, where `B` is the trailing block; the result is
/// its own inverse.
pub fn build_permutations(sets: &GridSets, rows: usize, cols: usize) -> PermutationPair {
    PermutationPair {
        rows: trailing_swaps(&sets.rows, rows),
        cols: trailing_swaps(&sets.cols, cols),
    }
}

fn trailing_swaps(set: &[usize], len: usize) -> Permutation {
    assert!(set.len() <= len);
    let start = len - set.len();
    let mut member = vec![false; len];
    set.iter().for_each(|&k| member[k] = true);
    let outside = set.iter().copied().filter(|&k| k < start);
    let vacant = (start..len).filter(|&k| !member[k]);
    let mut perm = Permutation::identity(len);
    for (from, to) in outside.zip(vacant) {
        perm.swap(from, to);
    }
    perm
}

/// Factors produced by A1GM, before any cost is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1gmFactors {
    /// Row factor, length `rows(T)`.
    pub c: Vec<f64>,
    /// Column factor, length `cols(T)`.
    pub d: Vec<f64>,
    pub sets: GridSets,
    pub original_missing: usize,
    pub expanded_missing: usize,
    pub increase_rate: f64,
}

impl A1gmFactors {
    pub fn reconstruction(&self) -> DenseMatrix {
        crate::matrix::outer(&self.c, &self.d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1gmResult {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub increase_rate: f64,
    /// `D_Φ(T, c⊗d)` on the caller's mask.
    pub masked_cost: f64,
    /// Same cost restricted to the entries left observed by grid expansion.
    pub expanded_masked_cost: f64,
}

impl A1gmResult {
    pub fn reconstruction(&self) -> DenseMatrix {
        crate::matrix::outer(&self.c, &self.d)
    }
}

/// Runs A1GM and evaluates the masked KL cost of its reconstruction.
pub fn a1gm(phi: &MaskMatrix, t: &DenseMatrix) -> Result<A1gmResult> {
    let expansion = expand_checked(phi, t)?;
    let factors = solve_expanded(&expansion, t)?;
    let masked_cost = masked_kl_outer(phi, t, &factors.c, &factors.d)?;
    let expanded_masked_cost = masked_kl_outer(&expansion.mask, t, &factors.c, &factors.d)?;
    Ok(A1gmResult {
        c: factors.c,
        d: factors.d,
        increase_rate: factors.increase_rate,
        masked_cost,
        expanded_masked_cost,
    })
}

/// The A1GM factorization alone: expand, permute, closed-form NMMF, re-permute.
/// `O(rows · cols)`.
pub fn a1gm_factors(phi: &MaskMatrix, t: &DenseMatrix) -> Result<A1gmFactors> {
    let expansion = expand_checked(phi, t)?;
    solve_expanded(&expansion, t)
}

fn expand_checked(phi: &MaskMatrix, t: &DenseMatrix) -> Result<GridExpansion> {
    t.ensure_shape(phi.shape())?;
    if phi.observed_count() == 0 {
        return Err(Error::EmptyMask);
    }
    for i in 0..t.rows() {
        for (j, (&v, &observed)) in t.row(i).iter().zip(phi.row(i)).enumerate() {
            if observed && !(v > 0.0) {
                return Err(Error::NonPositive {
                    block: "T",
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    expand_to_grid(phi)
}

fn solve_expanded(expansion: &GridExpansion, t: &DenseMatrix) -> Result<A1gmFactors> {
    let (rows, cols) = t.shape();
    let perms = build_permutations(&expansion.sets, rows, cols);
    let triple = split_blocks(
        t,
        &perms,
        expansion.sets.rows.len(),
        expansion.sets.cols.len(),
    );
    let f = rank1_from_sums(
        &triple.x.row_sums(),
        &triple.x.col_sums(),
        &triple.y.row_sums(),
        &triple.y.col_sums(),
        &triple.z.row_sums(),
        &triple.z.col_sums(),
        1.0,
        1.0,
    )?;
    let mut c = f.w;
    c.extend(f.a);
    let mut d = f.h;
    d.extend(f.b);
    let c = perms.rows.inverse().apply(&c);
    let d = perms.cols.inverse().apply(&d);
    Ok(A1gmFactors {
        c,
        d,
        sets: expansion.sets.clone(),
        original_missing: expansion.original_missing,
        expanded_missing: expansion.expanded_missing,
        increase_rate: expansion.increase_rate,
    })
}

/// Permutes `t` and cuts it into the observed blocks `X`, `Y`, `Z` around the
/// trailing `n_missing_rows × n_missing_cols` hole.
pub fn split_blocks(
    t: &DenseMatrix,
    perms: &PermutationPair,
    n_missing_rows: usize,
    n_missing_cols: usize,
) -> MatrixTriple {
    let (rows, cols) = t.shape();
    let (i, j) = (rows - n_missing_rows, cols - n_missing_cols);
    let (rp, cp) = (perms.rows.as_slice(), perms.cols.as_slice());
    let gather = |r: std::ops::Range<usize>, c: std::ops::Range<usize>| {
        let mut data = Vec::with_capacity(r.len() * c.len());
        for &src_row in &rp[r.clone()] {
            let src = t.row(src_row);
            data.extend(cp[c.clone()].iter().map(|&k| src[k]));
        }
        DenseMatrix::new(r.len(), c.len(), data).expect("block size")
    };
    MatrixTriple {
        x: gather(0..i, 0..j),
        y: gather(i..rows, 0..j),
        z: gather(0..i, j..cols),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::masked_kl;
    use crate::nmmf::best_rank1_nmf;

    fn mask(rows: &[&[u8]]) -> MaskMatrix {
        MaskMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn grid_sets_examples() {
        let s = grid_sets(&MaskMatrix::ones(3, 4));
        assert!(s.rows.is_empty() && s.cols.is_empty());

        let mut phi = MaskMatrix::ones(3, 4);
        phi.set(1, 2, false);
        let s = grid_sets(&phi);
        assert_eq!((s.rows, s.cols), (vec![1], vec![2]));

        let s = grid_sets(&mask(&[&[1, 0], &[0, 1]]));
        assert_eq!((s.rows, s.cols), (vec![0, 1], vec![0, 1]));
    }

    #[test]
    fn grid_like_examples() {
        assert!(is_grid_like(&MaskMatrix::ones(2, 3)));
        assert!(!is_grid_like(&mask(&[&[1, 0], &[0, 1]])));
        assert!(is_grid_like(&mask(&[&[1, 0], &[1, 0]])));
        assert!(is_grid_like(&mask(&[&[1, 0, 0], &[1, 1, 1], &[1, 0, 0]])));
    }

    #[test]
    fn expansion_examples() {
        let phi = mask(&[&[1, 1, 1], &[1, 0, 0], &[1, 0, 0]]);
        let e = expand_to_grid(&phi).unwrap();
        assert_eq!(e.mask, phi);
        assert_eq!(e.increase_rate, 1.0);

        assert!(matches!(
            expand_to_grid(&mask(&[&[1, 0], &[0, 1]])),
            Err(Error::TooManyMissing { .. })
        ));

        let e = expand_to_grid(&mask(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 1]])).unwrap();
        assert_eq!(e.mask, mask(&[&[0, 0, 1], &[0, 0, 1], &[1, 1, 1]]));
        assert_eq!((e.original_missing, e.expanded_missing), (2, 4));
        assert_eq!(e.increase_rate, 2.0);

        let e = expand_to_grid(&MaskMatrix::ones(2, 2)).unwrap();
        assert_eq!(e.increase_rate, 1.0);
    }

    #[test]
    fn expansion_refuses_full_row_or_column_coverage() {
        // every column has a missing entry, but one row is clean
        let phi = mask(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0], &[1, 1, 1]]);
        assert!(matches!(
            expand_to_grid(&phi),
            Err(Error::TooManyMissing {
                missing_cols: 3,
                ..
            })
        ));
    }

    #[test]
    fn expansion_is_idempotent() {
        let e = expand_to_grid(&mask(&[&[0, 1, 1, 1], &[1, 1, 0, 1], &[1, 1, 1, 1]])).unwrap();
        let again = expand_to_grid(&e.mask).unwrap();
        assert_eq!(again.mask, e.mask);
        assert_eq!(again.increase_rate, 1.0);
    }

    #[test]
    fn permutation_examples() {
        let p = build_permutations(
            &GridSets {
                rows: vec![],
                cols: vec![],
            },
            3,
            2,
        );
        assert_eq!(p.rows, Permutation::identity(3));
        assert_eq!(p.cols, Permutation::identity(2));

        let p = build_permutations(
            &GridSets {
                rows: vec![0],
                cols: vec![],
            },
            3,
            1,
        );
        assert_eq!(p.rows.as_slice(), &[2, 1, 0]);

        let p = build_permutations(
            &GridSets {
                rows: vec![1, 3],
                cols: vec![],
            },
            4,
            1,
        );
        assert_eq!(p.rows.as_slice(), &[0, 2, 1, 3]);
    }

    #[test]
    fn permutations_are_involutions() {
        let sets = GridSets {
            rows: vec![0, 2, 5],
            cols: vec![1, 3],
        };
        let p = build_permutations(&sets, 7, 6);
        assert!(p.rows.is_valid() && p.cols.is_valid());
        assert_eq!(p.rows.inverse(), p.rows);
        assert_eq!(p.cols.inverse(), p.cols);
        let v: Vec<usize> = (10..17).collect();
        assert_eq!(p.rows.inverse().apply(&p.rows.apply(&v)), v);
    }

    #[test]
    fn permutation_moves_grid_to_bottom_right() {
        let phi = mask(&[
            &[1, 0, 1, 0, 1],
            &[1, 1, 1, 1, 1],
            &[1, 0, 1, 0, 1],
            &[1, 1, 1, 1, 1],
        ]);
        let sets = grid_sets(&phi);
        let p = build_permutations(&sets, 4, 5);
        let moved = phi.permuted(p.rows.as_slice(), p.cols.as_slice());
        let expected = MaskMatrix::from_fn(4, 5, |i, j| !(i >= 2 && j >= 3));
        assert_eq!(moved, expected);
    }

    #[test]
    fn permutation_from_vec_validates() {
        assert!(Permutation::from_vec(vec![1, 0, 2]).is_ok());
        assert!(Permutation::from_vec(vec![1, 1, 2]).is_err());
        assert!(Permutation::from_vec(vec![0, 3]).is_err());
    }

    #[test]
    fn full_mask_matches_plain_rank1() {
        let t = DenseMatrix::from_rows(&[[1.0, 2.0, 0.5], [3.0, 4.0, 9.0]]).unwrap();
        let r = a1gm(&MaskMatrix::ones(2, 3), &t).unwrap();
        let f = best_rank1_nmf(&t).unwrap();
        assert_eq!(r.c, f.w);
        assert_eq!(r.d, f.h);
        assert_eq!(r.increase_rate, 1.0);
        assert_eq!(r.masked_cost, r.expanded_masked_cost);
    }

    #[test]
    fn missing_positions_are_never_read() {
        let phi = mask(&[&[1, 1, 1], &[1, 0, 1], &[1, 1, 1]]);
        let mut t = DenseMatrix::from_fn(3, 3, |i, j| 1.0 + (i * 3 + j) as f64);
        let a = a1gm(&phi, &t).unwrap();
        t.set(1, 1, f64::NAN);
        let b = a1gm(&phi, &t).unwrap();
        assert_eq!(a, b);
        t.set(1, 1, -5.0);
        assert_eq!(a1gm(&phi, &t).unwrap(), a);
    }

    #[test]
    fn rejects_bad_input() {
        let t = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            a1gm(&MaskMatrix::ones(2, 2), &t),
            Err(Error::NonPositive {
                block: "T",
                row: 0,
                col: 1,
                ..
            })
        ));
        assert!(matches!(
            a1gm(&MaskMatrix::from_fn(2, 2, |_, _| false), &t),
            Err(Error::EmptyMask)
        ));
        assert!(matches!(
            a1gm(&MaskMatrix::ones(3, 2), &t),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn cost_is_reported_on_the_original_mask() {
        let phi = mask(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 1]]);
        let t = DenseMatrix::from_fn(3, 3, |i, j| 1.0 + ((i * 7 + j * 3) % 5) as f64);
        let r = a1gm(&phi, &t).unwrap();
        let recon = r.reconstruction();
        assert!((r.masked_cost - masked_kl(&phi, &t, &recon).unwrap()).abs() < 1e-14);
        let e = expand_to_grid(&phi).unwrap();
        assert!((r.expanded_masked_cost - masked_kl(&e.mask, &t, &recon).unwrap()).abs() < 1e-14);
        assert!(r.masked_cost >= r.expanded_masked_cost);
    }
}
