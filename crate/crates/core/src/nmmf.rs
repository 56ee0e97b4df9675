//! Closed-form best rank-1 NMMF under the KL divergence.
//!
//! For positive `X (I×J)`, `Y (N×J)`, `Z (I×M)` and weights `α, β ≥ 0`, the
//! minimizer of `D(X, w⊗h) + α D(Y, a⊗h) + β D(Z, w⊗b)` is
//!
//! ```text
//! w_i = √S(X) / (S(X) + β S(Z)) · (Σ_j X_ij + β Σ_m Z_im)
//! h_j = √S(X) / (S(X) + α S(Y)) · (Σ_i X_ij + α Σ_n Y_nj)
//! a_n = Σ_j Y_nj / √S(X)
//! b_m = Σ_i Z_im / √S(X)
//! ```
//!
//! One pass over the data: `O(IJ + NJ + IM)`.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixTriple, Rank1Factors};

/// Replacement value used by [`best_rank1_nmmf_clamped`] unless overridden.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-12;

pub fn best_rank1_nmmf(t: &MatrixTriple, alpha: f64, beta: f64) -> Result<Rank1Factors> {
    check_weight("alpha", alpha)?;
    check_weight("beta", beta)?;
    t.x.ensure_positive("X")?;
    t.y.ensure_positive("Y")?;
    t.z.ensure_positive("Z")?;
    rank1_from_sums(
        &t.x.row_sums(),
        &t.x.col_sums(),
        &t.y.row_sums(),
        &t.y.col_sums(),
        &t.z.row_sums(),
        &t.z.col_sums(),
        alpha,
        beta,
    )
}

/// Same as [`best_rank1_nmmf`] after replacing every entry below `eps` by `eps`.
pub fn best_rank1_nmmf_clamped(
    t: &MatrixTriple,
    alpha: f64,
    beta: f64,
    eps: f64,
) -> Result<Rank1Factors> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "clamp eps must be > 0, got {eps}"
        )));
    }
    let clamped = MatrixTriple {
        x: t.x.clamped_below(eps),
        y: t.y.clamped_below(eps),
        z: t.z.clamped_below(eps),
    };
    best_rank1_nmmf(&clamped, alpha, beta)
}

/// Best rank-1 KL approximation of a single positive matrix:
/// `(w⊗h)_ij = rowsum_i · colsum_j / S(X)`.
pub fn best_rank1_nmf(x: &DenseMatrix) -> Result<Rank1Factors> {
    x.ensure_positive("X")?;
    rank1_nmf_unchecked(x)
}

/// The rank-1 formula without the positivity check. Still the KL optimum for
/// non-negative input with `S(X) > 0`; used where zeros are legitimate.
pub(crate) fn rank1_nmf_unchecked(x: &DenseMatrix) -> Result<Rank1Factors> {
    rank1_from_sums(&x.row_sums(), &x.col_sums(), &[], &[], &[], &[], 1.0, 1.0)
}

/// The closed form expressed on marginals only.
///
/// `x_rows`/`x_cols` are row and column sums of `X`; `y_rows` has length `N`,
/// `y_cols` length `J`; `z_rows` length `I`, `z_cols` length `M`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn rank1_from_sums(
    x_rows: &[f64],
    x_cols: &[f64],
    y_rows: &[f64],
    y_cols: &[f64],
    z_rows: &[f64],
    z_cols: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<Rank1Factors> {
    let sx: f64 = x_rows.iter().sum();
    if !(sx > 0.0) {
        return Err(Error::ZeroMass { block: "X" });
    }
    let sy: f64 = y_rows.iter().sum();
    let sz: f64 = z_cols.iter().sum();
    let root = sx.sqrt();

    let wscale = root / (sx + beta * sz);
    let w = if z_cols.is_empty() {
        x_rows.iter().map(|&r| wscale * r).collect()
    } else {
        x_rows
            .iter()
            .zip(z_rows)
            .map(|(&r, &zr)| wscale * (r + beta * zr))
            .collect()
    };
    let hscale = root / (sx + alpha * sy);
    let h = if y_rows.is_empty() {
        x_cols.iter().map(|&c| hscale * c).collect()
    } else {
        x_cols
            .iter()
            .zip(y_cols)
            .map(|(&c, &yc)| hscale * (c + alpha * yc))
            .collect()
    };
    let a = y_rows.iter().map(|&r| r / root).collect();
    let b = z_cols.iter().map(|&c| c / root).collect();
    Ok(Rank1Factors { w, h, a, b })
}

fn check_weight(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be finite and >= 0, got {value}"
        )))
    }
}
