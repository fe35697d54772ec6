//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rearranged_dependence::estimation::random_ranks;
use rearranged_dependence::{
    empirical_checkerboard, Bandwidth, Checkerboard64, CheckerboardMatrix, Grid64, GridCopula, RankedSample,
    StepFunction,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random checkerboard matrix: a convex combination of one to three coarsened
/// random permutations, so exact zeros and fractional entries both occur.
pub fn random_matrix(seed: u64, n1: usize, n2: usize) -> Checkerboard64 {
    let mut r = rng(seed);
    let parts = r.random_range(1..=3);
    let base = n1.max(n2);
    let mut acc = vec![0.0; n1 * n2];
    let mut weights: Vec<f64> = (0..parts).map(|_| r.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    for w in weights {
        let n = r.random_range(base..=3 * base);
        let s = RankedSample::from_ranks((1..=n).collect(), random_ranks(n, r.random())).unwrap();
        let m: Checkerboard64 = empirical_checkerboard(&s, Bandwidth::new(n1, n2)).unwrap();
        for (a, x) in acc.iter_mut().zip(m.as_slice()) {
            *a += w * x;
        }
    }
    CheckerboardMatrix::new(n1, n2, acc).unwrap()
}

/// Random square permutation matrix scaled to a checkerboard.
pub fn random_permutation_matrix(seed: u64, n: usize) -> Checkerboard64 {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(seed));
    CheckerboardMatrix::from_permutation(&perm).unwrap()
}

/// Strictly increasing breaks from 0 to 1 with `cells` cells of width at
/// least `0.2 / cells`.
pub fn random_breaks<R: Rng>(r: &mut R, cells: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..cells).map(|_| 0.2 + r.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let mut b = Vec::with_capacity(cells + 1);
    let mut acc = 0.0;
    b.push(0.0);
    for x in &w[..cells - 1] {
        acc += x / total;
        b.push(acc);
    }
    b.push(1.0);
    b
}

/// North-west corner transport plan between the margins `du` and `dv`,
/// visiting rows and columns in the given orders.
fn corner_plan(du: &[f64], dv: &[f64], ru: &[usize], rv: &[usize]) -> Vec<f64> {
    let (k, l) = (du.len(), dv.len());
    let mut m = vec![0.0; k * l];
    let mut su: Vec<f64> = ru.iter().map(|&i| du[i]).collect();
    let mut sv: Vec<f64> = rv.iter().map(|&j| dv[j]).collect();
    let (mut i, mut j) = (0, 0);
    while i < k && j < l {
        let x = su[i].min(sv[j]);
        m[ru[i] * l + rv[j]] += x;
        su[i] -= x;
        sv[j] -= x;
        if i + 1 == k {
            j += 1;
        } else if j + 1 == l || su[i] <= sv[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    m
}

/// Random grid copula on non-uniform breaks: a mixture of independence and
/// randomly ordered corner transport plans.
pub fn random_grid(seed: u64, k: usize, l: usize) -> Grid64 {
    let mut r = rng(seed);
    let u = random_breaks(&mut r, k);
    let v = random_breaks(&mut r, l);
    let du: Vec<f64> = u.windows(2).map(|w| w[1] - w[0]).collect();
    let dv: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let lam: f64 = r.random::<f64>() * 0.5;
    let mut mass: Vec<f64> = (0..k * l).map(|c| lam * du[c / l] * dv[c % l]).collect();
    let parts = r.random_range(1..=3);
    for _ in 0..parts {
        let mut ru: Vec<usize> = (0..k).collect();
        let mut rv: Vec<usize> = (0..l).collect();
        ru.shuffle(&mut r);
        rv.shuffle(&mut r);
        let plan = corner_plan(&du, &dv, &ru, &rv);
        for (m, p) in mass.iter_mut().zip(plan) {
            *m += (1.0 - lam) / parts as f64 * p;
        }
    }
    GridCopula::new(u, v, mass).unwrap()
}

pub fn random_step(seed: u64, pieces: usize) -> StepFunction<f64> {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..pieces).map(|_| 0.05 + r.random::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let p = w.iter().map(|x| (x / total, r.random_range(-1.0..1.0))).collect();
    StepFunction::new(p).unwrap()
}

/// Evaluation points `i / (m - 1)` in both coordinates.
pub fn lattice(m: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            pts.push((i as f64 / (m - 1) as f64, j as f64 / (m - 1) as f64));
        }
    }
    pts
}

/// Maximum of `g1 - g2` over the lattice.
pub fn max_excess(g1: &Grid64, g2: &Grid64, m: usize) -> f64 {
    lattice(m).into_iter().map(|(u, v)| g1.cdf(u, v) - g2.cdf(u, v)).fold(f64::NEG_INFINITY, f64::max)
}
