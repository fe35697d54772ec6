//! Sampling and discretization of the parametric models.

use rearranged_dependence::estimation::{kendall, spearman};
use rearranged_dependence::{
    checkerboard_measure, pseudo_observations, rearranged_checkerboard_measure, Checkerboard64, CopulaModel,
    MeasureKind, TiePolicy,
};
use std::f64::consts::PI;

fn ranked(model: CopulaModel, n: usize, seed: u64) -> rearranged_dependence::RankedSample {
    let (xs, ys): (Vec<f64>, Vec<f64>) = model.sample(n, seed).unwrap().into_iter().unzip();
    pseudo_observations(&xs, &ys, TiePolicy::Strict, 0).unwrap()
}

#[test]
fn gaussian_sample_rank_correlations() {
    let s = ranked(CopulaModel::Gaussian { p: 0.75 }, 100_000, 1);
    assert!((kendall(&s) - 0.540).abs() < 0.02, "tau {}", kendall(&s));
    for p in [0.25, 0.75] {
        let s = ranked(CopulaModel::Gaussian { p }, 100_000, 2);
        let rho = 6.0 / PI * (p / 2.0).asin();
        assert!((spearman(&s) - rho).abs() < 0.02, "p={p}: {}", spearman(&s));
    }
}

#[test]
fn gumbel_sample_matches_its_cdf() {
    let m = CopulaModel::Gumbel { theta: 3.0 };
    let pts = m.sample(200_000, 3).unwrap();
    let s = ranked(m, 50_000, 4);
    assert!((kendall(&s) - 2.0 / 3.0).abs() < 0.01);
    for (u, v) in [(0.2, 0.3), (0.5, 0.5), (0.9, 0.4)] {
        let freq = pts.iter().filter(|&&(x, y)| x <= u && y <= v).count() as f64 / pts.len() as f64;
        let c = m.cdf(u, v).unwrap();
        // Binomial standard error is below 1.2e-3.
        assert!((freq - c).abs() < 5e-3, "({u}, {v}): {freq} vs {c}");
    }
}

#[test]
fn ordinal_sum_sample_and_induced_matrix() {
    let m = CopulaModel::OrdinalSumHalfPi;
    let pts = m.sample(100_000, 5).unwrap();
    let upper = pts.iter().filter(|&&(x, y)| x > 0.5 && y > 0.5).all(|&(x, y)| (x - y).abs() < 1e-12);
    assert!(upper);
    // Lower-left quarter: 2Π block; upper diagonal: comonotone.
    let a = Checkerboard64::induced(&m, 4, 4).unwrap();
    let expected = [[2.0, 2.0, 0.0, 0.0], [2.0, 2.0, 0.0, 0.0], [0.0, 0.0, 4.0, 0.0], [0.0, 0.0, 0.0, 4.0]];
    for (k, row) in expected.iter().enumerate() {
        for (l, &x) in row.iter().enumerate() {
            assert!((a.get(k, l) - x).abs() < 1e-12);
        }
    }
    let a2 = Checkerboard64::induced(&m, 2, 2).unwrap();
    assert!((checkerboard_measure(&a2, MeasureKind::Blomqvist).unwrap() - 1.0).abs() < 1e-12);
    assert!((checkerboard_measure(&a, MeasureKind::Blomqvist).unwrap() - 1.0).abs() < 1e-12);
    assert!(rearranged_checkerboard_measure(&a, MeasureKind::Rho).unwrap() < 0.99);
}

#[test]
fn induced_checkerboards_converge_uniformly() {
    let m = CopulaModel::Gaussian { p: 0.75 };
    let gap = |n: usize| {
        let g = Checkerboard64::induced(&m, n, n).unwrap().to_grid();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let (u, v) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                worst = worst.max((g.cdf(u, v) - m.cdf(u, v).unwrap()).abs());
            }
        }
        worst
    };
    let gaps: Vec<f64> = [8, 16, 32].iter().map(|&n| gap(n)).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn induced_gaussian_r_is_near_the_closed_form() {
    let m = CopulaModel::Gaussian { p: 0.75 };
    let a = Checkerboard64::induced(&m, 64, 64).unwrap();
    let r = rearranged_checkerboard_measure(&a, MeasureKind::R).unwrap();
    assert!((r - 0.355).abs() < 0.01, "{r}");
    let closed = m.analytic_value(MeasureKind::R).unwrap();
    assert!(r < closed);
}
