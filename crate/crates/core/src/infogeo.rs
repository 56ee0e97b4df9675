//! Log-linear model of an NMMF triple on the L-shaped poset
//! `Ω = Ω_X ∪ Ω_Y ∪ Ω_Z` and its natural (θ) and expectation (η) coordinates.
//!
//! Indices are 0-based: `(0, 0)` is the least element. `Ω_X = [0,I)×[0,J)`,
//! `Ω_Y = [I,I+N)×[0,J)`, `Ω_Z = [0,I)×[J,J+M)`, ordered by
//! `(k,l) ≤ (s,t) ⇔ k ≤ s ∧ l ≤ t`. The model is
//!
//! ```text
//! p(k,l) = exp( Σ_{(s,t) ≤ (k,l)} θ_st ),     η_kl = Σ_{(k,l) ≤ (s,t)} p(s,t).
//! ```
//!
//! One-body parameters have `k = 0` or `l = 0`; all others are two-body.
//!
//! This module only checks solver outputs; nothing in the solvers depends on it.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockDims {
    pub i: usize,
    pub j: usize,
    pub n: usize,
    pub m: usize,
}

impl BlockDims {
    pub fn rows(&self) -> usize {
        self.i + self.n
    }

    pub fn cols(&self) -> usize {
        self.j + self.m
    }

    pub fn contains(&self, k: usize, l: usize) -> bool {
        (k < self.i && l < self.cols()) || (k < self.rows() && l < self.j)
    }
}

/// Distribution on `Ω` with its θ and η coordinates, stored on the bounding
/// `(I+N)×(J+M)` grid. Entries of the empty corner are zero and unused.
#[derive(Debug, Clone, PartialEq)]
pub struct PosetModel {
    dims: BlockDims,
    p: DenseMatrix,
    theta: DenseMatrix,
    eta: DenseMatrix,
}

/// Builds `p` from a positive triple normalized to unit mass, then solves θ and η.
pub fn model_from_triple(t: &MatrixTriple) -> Result<PosetModel> {
    t.x.ensure_positive("X")?;
    t.y.ensure_positive("Y")?;
    t.z.ensure_positive("Z")?;
    let (i, j, n, m) = t.dims();
    if i == 0 || j == 0 {
        return Err(Error::ZeroMass { block: "X" });
    }
    let dims = BlockDims { i, j, n, m };
    let total = t.x.total_sum() + t.y.total_sum() + t.z.total_sum();
    let p = DenseMatrix::from_fn(dims.rows(), dims.cols(), |k, l| {
        if k < i && l < j {
            t.x.get(k, l) / total
        } else if k >= i && l < j {
            t.y.get(k - i, l) / total
        } else if k < i {
            t.z.get(k, l - j) / total
        } else {
            0.0
        }
    });
    Ok(PosetModel::from_p(dims, p))
}

impl PosetModel {
    fn from_p(dims: BlockDims, p: DenseMatrix) -> Self {
        let eta = upset_sums(&p);
        let theta = solve_theta(&dims, &p);
        Self {
            dims,
            p,
            theta,
            eta,
        }
    }

    pub fn dims(&self) -> BlockDims {
        self.dims
    }

    pub fn p(&self, k: usize, l: usize) -> Result<f64> {
        self.check(k, l)?;
        Ok(self.p.get(k, l))
    }

    pub fn theta(&self, k: usize, l: usize) -> Result<f64> {
        self.check(k, l)?;
        Ok(self.theta.get(k, l))
    }

    pub fn total_mass(&self) -> f64 {
        self.elements().map(|(k, l)| self.p.get(k, l)).sum()
    }

    /// All elements of `Ω` in row-major order, which is a linear extension of `≤`.
    pub fn elements(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.dims;
        (0..d.rows()).flat_map(move |k| {
            (0..d.cols())
                .filter(move |&l| d.contains(k, l))
                .map(move |l| (k, l))
        })
    }

    /// One-body elements: `(k, 0)` for every row and `(0, l)` for every column.
    pub fn one_body(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.dims;
        (0..d.rows())
            .map(|k| (k, 0))
            .chain((1..d.cols()).map(|l| (0, l)))
    }

    pub fn two_body(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.elements().filter(|&(k, l)| k > 0 && l > 0)
    }

    /// Rebuilds `p` from θ by summing over each down-set.
    pub fn p_from_theta(&self) -> DenseMatrix {
        let d = self.dims;
        DenseMatrix::from_fn(d.rows(), d.cols(), |k, l| {
            if !d.contains(k, l) {
                return 0.0;
            }
            let mut s = 0.0;
            for a in 0..=k {
                for b in 0..=l {
                    s += self.theta.get(a, b);
                }
            }
            s.exp()
        })
    }

    fn check(&self, k: usize, l: usize) -> Result<()> {
        if self.dims.contains(k, l) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { row: k, col: l })
        }
    }
}

/// `η_kl`, the mass of the up-set of `(k, l)` within `Ω`.
pub fn eta_of(model: &PosetModel, k: usize, l: usize) -> Result<f64> {
    model.check(k, l)?;
    Ok(model.eta.get(k, l))
}

/// Full θ map on the bounding grid (zero outside `Ω`); `θ_00` is the log-normalizer term.
pub fn theta_of(model: &PosetModel) -> &DenseMatrix {
    &model.theta
}

/// Suffix sums over the zero-padded grid; the corner contributes nothing.
fn upset_sums(p: &DenseMatrix) -> DenseMatrix {
    let (rows, cols) = p.shape();
    let mut eta = DenseMatrix::zeros(rows, cols);
    for k in (0..rows).rev() {
        let mut run = 0.0;
        for l in (0..cols).rev() {
            run += p.get(k, l);
            let below = if k + 1 < rows { eta.get(k + 1, l) } else { 0.0 };
            eta.set(k, l, run + below);
        }
    }
    eta
}

/// `θ_kl = log p(k,l) - Σ_{(s,t) < (k,l)} θ_st`, solved in row-major order.
/// Every down-set of `Ω` is the full rectangle `[0,k]×[0,l]`.
fn solve_theta(dims: &BlockDims, p: &DenseMatrix) -> DenseMatrix {
    let mut theta = DenseMatrix::zeros(dims.rows(), dims.cols());
    for k in 0..dims.rows() {
        for l in 0..dims.cols() {
            if !dims.contains(k, l) {
                continue;
            }
            let mut below = 0.0;
            for a in 0..=k {
                for b in 0..=l {
                    if (a, b) != (k, l) {
                        below += theta.get(a, b);
                    }
                }
            }
            theta.set(k, l, p.get(k, l).ln() - below);
        }
    }
    theta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank1Report {
    pub theta_ok: bool,
    pub eta_ok: bool,
    /// `max |θ_kl|` over two-body elements.
    pub max_theta_violation: f64,
    /// `max |η_kl - η_k0 η_0l|` over two-body elements.
    pub max_eta_violation: f64,
}

/// θ-condition (every two-body θ vanishes) and η-condition
/// (`η_kl = η_k0 · η_0l` on two-body elements) at tolerance `tol`.
///
/// On the full rectangle (`N = 0` or `M = 0`) both conditions characterize
/// simultaneous rank-1 triples. When both `Y` and `Z` are present the up-sets
/// of `Ω` are not rectangles and the η-condition fails even for exactly rank-1
/// triples; see [`block_eta_violation`] for a form that stays exact.
pub fn check_simultaneous_rank1(model: &PosetModel, tol: f64) -> Rank1Report {
    let mut max_theta: f64 = 0.0;
    let mut max_eta: f64 = 0.0;
    for (k, l) in model.two_body() {
        max_theta = max_theta.max(model.theta.get(k, l).abs());
        let prod = model.eta.get(k, 0) * model.eta.get(0, l);
        max_eta = max_eta.max((model.eta.get(k, l) - prod).abs());
    }
    Rank1Report {
        theta_ok: max_theta <= tol,
        eta_ok: max_eta <= tol,
        max_theta_violation: max_theta,
        max_eta_violation: max_eta,
    }
}

/// η-factorization checked separately on the two rectangular sub-posets
/// `Ω_X ∪ Ω_Y` and `Ω_X ∪ Ω_Z`, each renormalized to unit mass. A triple
/// with positive `X` is simultaneously rank-1 iff both stacks are rank-1, so
/// this vanishes exactly on the θ-condition's solution set.
pub fn block_eta_violation(model: &PosetModel) -> f64 {
    let d = model.dims;
    let stacked = model.p.submatrix(0..d.rows(), 0..d.j);
    let side = model.p.submatrix(0..d.i, 0..d.cols());
    rectangle_eta_violation(&stacked).max(rectangle_eta_violation(&side))
}

fn rectangle_eta_violation(p: &DenseMatrix) -> f64 {
    let total = p.total_sum();
    let eta = upset_sums(&p.scaled(1.0 / total));
    let mut worst: f64 = 0.0;
    for k in 1..p.rows() {
        for l in 1..p.cols() {
            worst = worst.max((eta.get(k, l) - eta.get(k, 0) * eta.get(0, l)).abs());
        }
    }
    worst
}

/// Largest one-body η difference between two models on the same `Ω`.
pub fn max_one_body_eta_gap(input: &PosetModel, projected: &PosetModel) -> Result<f64> {
    if input.dims != projected.dims {
        return Err(Error::ShapeMismatch {
            expected: (input.dims.rows(), input.dims.cols()),
            found: (projected.dims.rows(), projected.dims.cols()),
        });
    }
    Ok(input
        .one_body()
        .map(|(k, l)| (input.eta.get(k, l) - projected.eta.get(k, l)).abs())
        .fold(0.0, f64::max))
}

/// True iff every one-body η agrees within `tol`. In block-local terms these
/// are all of `η^X_{i0}`, `η^X_{0j}`, the first-column entries `η^Y_{n0}` and
/// the first-row entries `η^Z_{0m}`.
pub fn conservation_check(input: &PosetModel, projected: &PosetModel, tol: f64) -> Result<bool> {
    Ok(max_one_body_eta_gap(input, projected)? <= tol)
}
