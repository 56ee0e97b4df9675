//! Iterative rank-1 solvers for masked KL NMF, used as references for A1GM.
//!
//! Random initialization draws from `ChaCha8Rng::seed_from_u64(seed)`
//! (`rand_chacha`), sampling the open interval (0, 1). ChaCha output is
//! specified independently of platform, so traces are reproducible anywhere.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{masked_kl, masked_kl_outer, DenseMatrix, MaskMatrix, Rank1Factors};
use crate::nmmf::rank1_nmf_unchecked;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Evaluate the cost (and the stopping rule) every this many iterations.
    pub check_every: usize,
    pub seed: u64,
    /// Added to update denominators to avoid 0/0.
    pub eps_guard: f64,
}

impl Default for IterativeConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-4,
            check_every: 10,
            seed: 0,
            eps_guard: 1e-12,
        }
    }
}

impl IterativeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.check_every == 0 {
            return Err(Error::InvalidArgument("check_every must be >= 1".into()));
        }
        if !(self.eps_guard > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps_guard must be > 0, got {}",
                self.eps_guard
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeResult {
    pub factors: Rank1Factors,
    pub iterations: usize,
    /// Masked cost at the initial point followed by one value per check.
    pub cost_trace: Vec<f64>,
    pub converged: bool,
}

impl IterativeResult {
    pub fn reconstruction(&self) -> DenseMatrix {
        self.factors.reconstruct_x()
    }

    pub fn final_cost(&self) -> f64 {
        *self
            .cost_trace
            .last()
            .expect("trace holds the initial cost")
    }
}

fn check_inputs(phi: &MaskMatrix, t: &DenseMatrix, strict: bool) -> Result<()> {
    if t.shape() != phi.shape() {
        return Err(Error::ShapeMismatch {
            expected: phi.shape(),
            found: t.shape(),
        });
    }
    if phi.observed_count() == 0 {
        return Err(Error::EmptyMask);
    }
    for i in 0..t.rows() {
        for (j, (&v, &observed)) in t.row(i).iter().zip(phi.row(i)).enumerate() {
            let bad = if strict { !(v > 0.0) } else { !(v >= 0.0) };
            if observed && (bad || !v.is_finite()) {
                return Err(Error::NonPositive {
                    block: "T",
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Rank-1 KL-WNMF by multiplicative updates.
///
/// ```text
/// h_j ← h_j · Σ_i Φ_ij T_ij w_i / (w_i h_j + ε)  /  (Σ_i Φ_ij w_i + ε)
/// w_i ← w_i · Σ_j Φ_ij T_ij h_j / (w_i h_j + ε)  /  (Σ_j Φ_ij h_j + ε)
/// ```
///
/// Every `check_every` iterations the run stops once
/// `(cost_prev - cost_now) / cost_initial < tol`.
pub fn wnmf_rank1(
    phi: &MaskMatrix,
    t: &DenseMatrix,
    cfg: &IterativeConfig,
) -> Result<IterativeResult> {
    cfg.validate()?;
    check_inputs(phi, t, false)?;
    let (rows, cols) = t.shape();
    let eps = cfg.eps_guard;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w: Vec<f64> = (0..rows).map(|_| rng.sample(Open01)).collect();
    let mut h: Vec<f64> = (0..cols).map(|_| rng.sample(Open01)).collect();

    let initial = masked_kl_outer(phi, t, &w, &h)?;
    let mut trace = vec![initial];
    let mut last_checked = initial;
    let mut converged = initial == 0.0;
    let mut iterations = 0;

    let mut num = vec![0.0; cols];
    let mut den = vec![0.0; cols];
    while !converged && iterations < cfg.max_iter {
        iterations += 1;

        num.iter_mut().for_each(|v| *v = 0.0);
        den.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..rows {
            let wi = w[i];
            let (tr, mr) = (t.row(i), phi.row(i));
            for j in 0..cols {
                if mr[j] {
                    num[j] += tr[j] * wi / (wi * h[j] + eps);
                    den[j] += wi;
                }
            }
        }
        for j in 0..cols {
            h[j] *= num[j] / (den[j] + eps);
        }

        for i in 0..rows {
            let wi = w[i];
            let (tr, mr) = (t.row(i), phi.row(i));
            let (mut n, mut d) = (0.0, 0.0);
            for j in 0..cols {
                if mr[j] {
                    n += tr[j] * h[j] / (wi * h[j] + eps);
                    d += h[j];
                }
            }
            w[i] = wi * n / (d + eps);
        }

        if iterations % cfg.check_every == 0 || iterations == cfg.max_iter {
            let cost = masked_kl_outer(phi, t, &w, &h)?;
            trace.push(cost);
            if (last_checked - cost) / initial < cfg.tol {
                converged = true;
            }
            last_checked = cost;
        }
    }

    Ok(IterativeResult {
        factors: Rank1Factors::new(w, h),
        iterations,
        cost_trace: trace,
        converged,
    })
}

/// How [`em_rank1_with_init`] fills missing entries before the first m-step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmInit {
    ObservedMean,
    Constant(f64),
}

/// em-algorithm for rank-1 missing NMF with the observed mean as initial fill.
pub fn em_rank1(
    phi: &MaskMatrix,
    t: &DenseMatrix,
    cfg: &IterativeConfig,
) -> Result<IterativeResult> {
    em_rank1_with_init(phi, t, cfg, EmInit::ObservedMean)
}

/// Alternates an m-step (closed-form rank-1 KL fit of the completed matrix)
/// with an e-step (overwrite missing entries by that fit) until the masked
/// cost changes by less than `tol` relative between iterations.
pub fn em_rank1_with_init(
    phi: &MaskMatrix,
    t: &DenseMatrix,
    cfg: &IterativeConfig,
    init: EmInit,
) -> Result<IterativeResult> {
    cfg.validate()?;
    check_inputs(phi, t, true)?;
    let (rows, cols) = t.shape();

    let fill = match init {
        EmInit::ObservedMean => {
            let (mut s, mut n) = (0.0, 0usize);
            for i in 0..rows {
                for (&v, &o) in t.row(i).iter().zip(phi.row(i)) {
                    if o {
                        s += v;
                        n += 1;
                    }
                }
            }
            s / n as f64
        }
        EmInit::Constant(v) if v >= 0.0 && v.is_finite() => v,
        EmInit::Constant(v) => {
            return Err(Error::InvalidArgument(format!(
                "em fill value must be >= 0, got {v}"
            )))
        }
    };
    let mut filled = DenseMatrix::from_fn(rows, cols, |i, j| {
        if phi.is_observed(i, j) {
            t.get(i, j)
        } else {
            fill
        }
    });

    let no_missing = phi.missing_count() == 0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut prev: Option<Rank1Factors> = None;
    let mut factors;
    loop {
        iterations += 1;
        factors = rank1_nmf_unchecked(&filled)?;
        let cost = masked_kl_outer(phi, t, &factors.w, &factors.h)?;
        if let (Some(old), Some(&prev_cost)) = (&prev, trace.last()) {
            let prev_cost: f64 = prev_cost;
            if cost_change(phi, t, old, &factors).abs() < cfg.tol * prev_cost {
                converged = true;
            }
        }
        trace.push(cost);
        if no_missing {
            converged = true;
        }
        if converged || iterations >= cfg.max_iter {
            break;
        }
        for i in 0..rows {
            let wi = factors.w[i];
            let mr = phi.row(i);
            let fr = filled.row_mut(i);
            for j in 0..cols {
                if !mr[j] {
                    fr[j] = wi * factors.h[j];
                }
            }
        }
        prev = Some(factors);
    }

    Ok(IterativeResult {
        factors,
        iterations,
        cost_trace: trace,
        converged,
    })
}

/// `D_Φ(T, old) - D_Φ(T, new)` summed entry by entry. Differencing the two
/// totals loses everything below `ε · cost`, which near the fixed point is
/// where all of the change is.
fn cost_change(phi: &MaskMatrix, t: &DenseMatrix, old: &Rank1Factors, new: &Rank1Factors) -> f64 {
    let log_ratio = |a: f64, b: f64| ((a - b) / b).ln_1p();
    let rw: Vec<f64> = old
        .w
        .iter()
        .zip(&new.w)
        .map(|(&a, &b)| log_ratio(a, b))
        .collect();
    let rh: Vec<f64> = old
        .h
        .iter()
        .zip(&new.h)
        .map(|(&a, &b)| log_ratio(a, b))
        .collect();
    let mut total = 0.0;
    for i in 0..t.rows() {
        for (j, (&v, &observed)) in t.row(i).iter().zip(phi.row(i)).enumerate() {
            if observed {
                let (o, n) = (old.w[i] * old.h[j], new.w[i] * new.h[j]);
                total += v * (rw[i] + rh[j]) + n - o;
            }
        }
    }
    total
}

/// `D_Φ(T, A) / D_Φ(T, B)`: 1 means parity. Both costs zero also gives 1; a
/// zero denominator with a positive numerator gives infinity.
pub fn relative_error(
    phi: &MaskMatrix,
    t: &DenseMatrix,
    recon_a1gm: &DenseMatrix,
    recon_wnmf: &DenseMatrix,
) -> Result<f64> {
    let num = masked_kl(phi, t, recon_a1gm)?;
    let den = masked_kl(phi, t, recon_wnmf)?;
    Ok(cost_ratio(num, den))
}

pub fn cost_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}
