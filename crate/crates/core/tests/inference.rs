//! Calibration of the permutation tests, the asymptotic ξ test and screening.

use rayon::prelude::*;
use rearranged_dependence::harness::{planted_screen, sample_ranks, PlantedRole};
use rearranged_dependence::inference::spearman_permutation_test;
use rearranged_dependence::rng::child_seed;
use rearranged_dependence::{
    bh_fdr, chatterjee_test, permutation_test, pseudo_observations, screen, CopulaModel, MeasureKind, ScreenOptions,
    ScreenRow, TiePolicy,
};

fn comonotone(n: usize) -> rearranged_dependence::RankedSample {
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    pseudo_observations(&xs, &xs, TiePolicy::Strict, 0).unwrap()
}

fn rejection_rate(reps: u64, alpha: f64, p: impl Fn(u64) -> f64 + Sync) -> f64 {
    let hits = (0..reps).into_par_iter().filter(|&r| p(r) <= alpha).count();
    hits as f64 / reps as f64
}

#[test]
fn comonotone_sample_reaches_the_smallest_p_value() {
    let s = comonotone(100);
    for seed in 0..50 {
        let t = permutation_test(&s, MeasureKind::Rho, 199, seed).unwrap();
        assert_eq!(t.p_value, 1.0 / 200.0, "seed {seed}");
    }
    assert!(permutation_test(&s, MeasureKind::Rho, 0, 0).is_err());
}

#[test]
fn permutation_p_values_are_super_uniform() {
    let rate = rejection_rate(500, 0.05, |r| {
        let s = sample_ranks(&CopulaModel::Independence, 200, TiePolicy::Random, child_seed(3, r)).unwrap();
        permutation_test(&s, MeasureKind::Rho, 19, child_seed(4, r)).unwrap().p_value
    });
    assert!(rate <= 0.07, "{rate}");
}

#[test]
fn chatterjee_test_level_and_power() {
    let rate = rejection_rate(500, 0.05, |r| {
        let s = sample_ranks(&CopulaModel::Independence, 200, TiePolicy::Random, child_seed(5, r)).unwrap();
        chatterjee_test(&s).unwrap().p_value
    });
    assert!((0.03..=0.07).contains(&rate), "{rate}");
    assert!(chatterjee_test(&comonotone(200)).unwrap().p_value < 1e-6);
}

#[test]
fn test_results_are_reproducible() {
    let s = sample_ranks(&CopulaModel::Gaussian { p: 0.3 }, 80, TiePolicy::Random, 8).unwrap();
    for kind in [MeasureKind::Rho, MeasureKind::Tau, MeasureKind::Zeta1] {
        let a = permutation_test(&s, kind, 99, 17).unwrap();
        let b = permutation_test(&s, kind, 99, 17).unwrap();
        assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
    }
    let a = spearman_permutation_test(&s, 99, 17).unwrap();
    assert_eq!(a.p_value, spearman_permutation_test(&s, 99, 17).unwrap().p_value);
}

#[test]
fn benjamini_hochberg_examples() {
    assert_eq!(bh_fdr(&[0.01, 0.04, 0.03, 0.5], 0.05).unwrap(), vec![0]);
    assert!(bh_fdr(&[1.0; 6], 0.05).unwrap().is_empty());
    let all = bh_fdr(&[0.05 / 12.0; 6], 0.05).unwrap();
    assert_eq!(all, (0..6).collect::<Vec<_>>());
    assert!(bh_fdr(&[0.1], 0.0).is_err());
}

#[test]
fn constant_response_flags_every_row() {
    let data = planted_screen([1, 1, 1], 20, 0.1, 1);
    let response = vec![Some(3.0); 20];
    for tie_policy in [TiePolicy::Random, TiePolicy::Strict] {
        let opts = ScreenOptions { permutations: 19, tie_policy, ..Default::default() };
        let rep = screen(&data.rows, &response, &opts).unwrap();
        assert!(rep.entries.iter().all(|e| e.flag.is_some() && e.p_value.is_none()));
        assert!(rep.selected_rearranged.is_empty());
    }
}

#[test]
fn screening_null_selections_respect_the_fdr_level() {
    let m = 10;
    let total: usize = (0..50u64)
        .map(|r| {
            let data = planted_screen([0, 0, m], 23, 0.1, child_seed(21, r));
            let opts = ScreenOptions { permutations: 199, seed: child_seed(22, r), ..Default::default() };
            screen(&data.rows, &data.response, &opts).unwrap().selected_rearranged.len()
        })
        .sum();
    let mean = total as f64 / 50.0;
    assert!(mean <= 0.05 * m as f64, "{mean}");
}

#[test]
fn screening_recovers_planted_parabolas() {
    for r in 0..4u64 {
        let data = planted_screen([3, 3, 4], 40, 0.1, child_seed(31, r));
        let opts = ScreenOptions { seed: child_seed(32, r), ..Default::default() };
        let rep = screen(&data.rows, &data.response, &opts).unwrap();
        for id in data.ids(PlantedRole::Parabola) {
            assert!(rep.selected_rearranged.contains(&id), "run {r}: {id}");
            assert!(rep.difference.contains(&id), "run {r}: {id}");
        }
        for id in data.ids(PlantedRole::Monotone) {
            assert!(rep.selected_spearman.contains(&id), "run {r}: {id}");
        }
    }
    let short = vec![ScreenRow { id: "short".into(), values: vec![Some(1.0); 3] }];
    let rep = screen(&short, &[Some(1.0), Some(2.0)], &ScreenOptions::default()).unwrap();
    assert!(rep.entries[0].flag.is_some());
}
