mod common;

use a1gm::baselines::{em_rank1_with_init, EmInit};
use a1gm::grid::{build_permutations, split_blocks};
use a1gm::infogeo::{block_eta_violation, check_simultaneous_rank1, model_from_triple};
use a1gm::{
    a1gm, a1gm_factors, em_rank1, expand_to_grid, masked_kl, outer, wnmf_rank1, DenseMatrix,
    ErrorKind, IterativeConfig, MaskMatrix,
};
use common::*;
use rand::Rng;

fn tight_wnmf() -> IterativeConfig {
    IterativeConfig {
        max_iter: 200_000,
        tol: 1e-14,
        check_every: 10,
        ..Default::default()
    }
}

fn tight_em() -> IterativeConfig {
    IterativeConfig {
        max_iter: 100_000,
        tol: 1e-22,
        ..Default::default()
    }
}

/// Data equal to `c⊗d` where observed; junk in the missing cells.
fn rank1_with_holes(phi: &MaskMatrix, c: &[f64], d: &[f64]) -> DenseMatrix {
    DenseMatrix::from_fn(c.len(), d.len(), |i, j| {
        if phi.is_observed(i, j) {
            c[i] * d[j]
        } else {
            -7.0
        }
    })
}

#[test]
fn worked_example_factors_are_recovered() {
    // w = (1.5, 1.3, 1.9), a = (1.9, 1.1), h = (1.8, 1.6, 1.3), b = (0.85, 3.4).
    // S(w) = S(h) = 4.7 = sqrt(S(X)), so the solver's normalization returns them unchanged.
    // Missing rows {1, 3} and columns {0, 4} scatter the grid.
    let row_of = [0, 2, 4, 1, 3];
    let col_of = [1, 2, 3, 0, 4];
    let (w, a) = ([1.5, 1.3, 1.9], [1.9, 1.1]);
    let (h, b) = ([1.8, 1.6, 1.3], [0.85, 3.4]);
    let mut c = vec![0.0; 5];
    let mut d = vec![0.0; 5];
    for (k, v) in w.iter().chain(&a).enumerate() {
        c[row_of[k]] = *v;
    }
    for (k, v) in h.iter().chain(&b).enumerate() {
        d[col_of[k]] = *v;
    }
    let phi = MaskMatrix::from_fn(5, 5, |i, j| !((i == 1 || i == 3) && (j == 0 || j == 4)));
    let t = rank1_with_holes(&phi, &c, &d);
    let out = a1gm(&phi, &t).unwrap();
    assert_eq!(out.increase_rate, 1.0);
    assert!(max_rel_diff(&out.c, &c) <= 1e-14, "{:?}", out.c);
    assert!(max_rel_diff(&out.d, &d) <= 1e-14, "{:?}", out.d);
    assert!(out.masked_cost.abs() <= 1e-12);
    // missing entries are completed as a_n b_m
    let r = out.reconstruction();
    assert!((r.get(1, 0) - 1.9 * 0.85).abs() <= 1e-13);
    assert!((r.get(3, 4) - 1.1 * 3.4).abs() <= 1e-13);
}

#[test]
fn grid_like_input_matches_converged_wnmf() {
    let mut rng = rng(30);
    for (rows, cols) in [(6, 5), (20, 10), (15, 15)] {
        for _ in 0..3 {
            let k1 = rng.gen_range(1..rows / 2);
            let k2 = rng.gen_range(1..cols / 2);
            let phi = random_grid_mask(&mut rng, rows, cols, k1, k2);
            let t = positive_matrix(&mut rng, rows, cols);
            let ours = a1gm(&phi, &t).unwrap();
            let theirs = wnmf_rank1(&phi, &t, &tight_wnmf()).unwrap();
            let (p, q) = (ours.reconstruction(), theirs.reconstruction());
            let diff = max_rel_diff(p.as_slice(), q.as_slice());
            assert!(diff <= 1e-6, "{rows}x{cols}: {diff}");
            assert!(ours.masked_cost <= theirs.final_cost() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn a1gm_is_the_em_fixed_point() {
    let mut rng = rng(31);
    for _ in 0..5 {
        let (rows, cols) = (rng.gen_range(4..15), rng.gen_range(4..15));
        let phi = grid_mask_with_fraction(&mut rng, rows, cols, 0.1);
        let t = positive_matrix(&mut rng, rows, cols);
        let ours = a1gm(&phi, &t).unwrap().reconstruction();
        let em = em_rank1(&phi, &t, &tight_em()).unwrap();
        assert!(em.converged);
        let diff = max_rel_diff(ours.as_slice(), em.reconstruction().as_slice());
        assert!(
            diff <= 1e-8,
            "{rows}x{cols}: {diff} after {} iterations",
            em.iterations
        );
    }
}

#[test]
fn em_limit_does_not_depend_on_initial_fill() {
    let mut rng = rng(32);
    let phi = random_grid_mask(&mut rng, 9, 7, 3, 2);
    let t = positive_matrix(&mut rng, 9, 7);
    let from_mean = em_rank1_with_init(&phi, &t, &tight_em(), EmInit::ObservedMean).unwrap();
    let from_zero = em_rank1_with_init(&phi, &t, &tight_em(), EmInit::Constant(0.0)).unwrap();
    let diff = max_rel_diff(
        from_mean.reconstruction().as_slice(),
        from_zero.reconstruction().as_slice(),
    );
    assert!(diff <= 1e-8, "{diff}");
}

#[test]
fn a1gm_beats_random_rank1_candidates_on_grid_masks() {
    let mut rng = rng(33);
    for _ in 0..5 {
        let (rows, cols) = (rng.gen_range(3..9), rng.gen_range(3..9));
        let phi = random_grid_mask(&mut rng, rows, cols, 1, 2);
        let t = positive_matrix(&mut rng, rows, cols);
        let best = a1gm(&phi, &t).unwrap().masked_cost;
        for _ in 0..1000 {
            let u: Vec<f64> = (0..rows).map(|_| rng.gen_range(0.01..2.0)).collect();
            let v: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.01..2.0)).collect();
            let cost = masked_kl(&phi, &t, &outer(&u, &v)).unwrap();
            assert!(best <= cost, "{best} > {cost}");
        }
    }
}

#[test]
fn reconstruction_commutes_with_permutations() {
    let mut rng = rng(34);
    for _ in 0..20 {
        let (rows, cols) = (rng.gen_range(3..12), rng.gen_range(3..12));
        let phi = MaskMatrix::from_fn(rows, cols, |_, _| rng.gen_bool(0.9));
        let t = positive_matrix(&mut rng, rows, cols);
        let rp = random_permutation(&mut rng, rows);
        let cp = random_permutation(&mut rng, cols);
        let base = match a1gm(&phi, &t) {
            Ok(r) => r.reconstruction(),
            Err(e) => {
                assert_eq!(e.kind(), ErrorKind::InfeasibleMask);
                assert!(a1gm(&phi.permuted(&rp, &cp), &t.permuted(&rp, &cp)).is_err());
                continue;
            }
        };
        let moved = a1gm(&phi.permuted(&rp, &cp), &t.permuted(&rp, &cp))
            .unwrap()
            .reconstruction();
        let expected = base.permuted(&rp, &cp);
        let diff = max_rel_diff(moved.as_slice(), expected.as_slice());
        assert!(diff <= 1e-12, "{diff}");
    }
}

#[test]
fn outputs_are_simultaneous_rank1_in_theta() {
    let mut rng = rng(35);
    for _ in 0..10 {
        let (rows, cols) = (rng.gen_range(4..10), rng.gen_range(4..10));
        let phi = random_grid_mask(&mut rng, rows, cols, 2, 2);
        let t = positive_matrix(&mut rng, rows, cols);
        let f = a1gm_factors(&phi, &t).unwrap();
        let perms = build_permutations(&f.sets, rows, cols);
        let triple = split_blocks(&f.reconstruction(), &perms, 2, 2);
        let model = model_from_triple(&triple).unwrap();
        let report = check_simultaneous_rank1(&model, 1e-8);
        assert!(report.theta_ok, "{report:?}");
        assert!(block_eta_violation(&model) <= 1e-12);
    }
}

#[test]
fn seeded_wnmf_is_reproducible() {
    let mut rng = rng(36);
    let phi = random_grid_mask(&mut rng, 12, 8, 2, 3);
    let t = positive_matrix(&mut rng, 12, 8);
    let cfg = IterativeConfig {
        seed: 99,
        ..Default::default()
    };
    let a = wnmf_rank1(&phi, &t, &cfg).unwrap();
    let b = wnmf_rank1(&phi, &t, &cfg).unwrap();
    assert_eq!(a, b);
    let bits =
        |r: &a1gm::IterativeResult| r.cost_trace.iter().map(|c| c.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    let other = wnmf_rank1(&phi, &t, &IterativeConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(bits(&a), bits(&other));
}

#[test]
fn expansion_rates_on_constructed_masks() {
    // Two missing entries on a diagonal expand to a 2×2 grid.
    let phi = MaskMatrix::from_fn(4, 4, |i, j| !((i, j) == (0, 1) || (i, j) == (2, 3)));
    let e = expand_to_grid(&phi).unwrap();
    assert_eq!((e.original_missing, e.expanded_missing), (2, 4));
    assert_eq!(e.increase_rate, 2.0);
    assert!(!e.mask.is_observed(0, 3) && !e.mask.is_observed(2, 1));
    // A full column of missing values is infeasible.
    let phi = MaskMatrix::from_fn(3, 3, |_, j| j != 1);
    assert_eq!(
        a1gm(&phi, &DenseMatrix::filled(3, 3, 1.0))
            .unwrap_err()
            .kind(),
        ErrorKind::InfeasibleMask
    );
}
