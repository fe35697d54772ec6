//! Permutation tests of independence, Chatterjee's asymptotic test,
//! Benjamini–Hochberg selection and the screening pipeline.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{
    chatterjee_xi, estimate_many, pseudo_observations, spearman, BandwidthMode, RankedSample, TiePolicy,
};
use crate::measures::MeasureKind;
use crate::rng::child_seed;
use crate::special::normal_sf;

/// Smallest number of permutation replicates accepted.
pub const MIN_PERMUTATIONS: usize = 19;

/// Outcome of a one-sided test of independence.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Permutation replicates (0 for asymptotic tests).
    pub replicates: usize,
    pub seed: u64,
    pub method: String,
    /// Set when the null distribution reuses the observed bandwidth instead
    /// of re-selecting it per replicate.
    pub approximate: bool,
}

impl fmt::Display for TestResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: statistic {:.6}, p = {:.6}", self.method, self.statistic, self.p_value)?;
        if self.approximate {
            f.write_str(" (approximate)")?;
        }
        Ok(())
    }
}

/// Settings shared by the permutation tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOptions {
    pub replicates: usize,
    pub seed: u64,
    pub bandwidth: BandwidthMode,
    /// Reuse the observed bandwidth for every replicate.
    pub fast: bool,
}

impl PermutationOptions {
    pub fn new(replicates: usize, seed: u64) -> Self {
        PermutationOptions { replicates, seed, bandwidth: BandwidthMode::Auto, fast: false }
    }

    fn check(&self) -> Result<()> {
        if self.replicates < MIN_PERMUTATIONS {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_PERMUTATIONS} permutations, got {}",
                self.replicates
            )));
        }
        Ok(())
    }
}

/// Add-one permutation p-value: `(1 + #{replicate >= observed}) / (B + 1)`.
pub fn permutation_p_value(observed: f64, replicates: &[f64]) -> f64 {
    // Rounding noise must not turn a tie into a strict exceedance.
    let cut = observed - 1e-12 * observed.abs().max(1.0);
    let hits = replicates.iter().filter(|&&r| r >= cut).count();
    (1 + hits) as f64 / (replicates.len() + 1) as f64
}

/// Permutation test of `R_μ > 0` for one measure.
pub fn permutation_test(s: &RankedSample, kind: MeasureKind, replicates: usize, seed: u64) -> Result<TestResult> {
    let mut out = permutation_tests(s, &[kind], &PermutationOptions::new(replicates, seed))?;
    Ok(out.remove(0))
}

/// Permutation tests for several measures. Each replicate permutes the
/// response ranks once and selects one bandwidth shared by all measures, as
/// the observed statistic does.
pub fn permutation_tests(
    s: &RankedSample,
    kinds: &[MeasureKind],
    opts: &PermutationOptions,
) -> Result<Vec<TestResult>> {
    opts.check()?;
    for k in kinds {
        k.validate()?;
    }
    let (observed, b) = estimate_many(s, kinds, opts.bandwidth)?;
    let null_mode = if opts.fast { BandwidthMode::Explicit(b) } else { opts.bandwidth };
    let reps: Vec<Vec<f64>> = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let perm = s.shuffled(child_seed(opts.seed, r as u64));
            estimate_many(&perm, kinds, null_mode).map(|(v, _)| v)
        })
        .collect::<Result<_>>()?;
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(j, kind)| {
            let null: Vec<f64> = reps.iter().map(|v| v[j]).collect();
            TestResult {
                statistic: observed[j],
                p_value: permutation_p_value(observed[j], &null),
                replicates: opts.replicates,
                seed: opts.seed,
                method: format!("permutation R_{kind}"),
                approximate: opts.fast,
            }
        })
        .collect())
}

/// One-sided permutation test of Spearman's ρ > 0.
pub fn spearman_permutation_test(s: &RankedSample, replicates: usize, seed: u64) -> Result<TestResult> {
    PermutationOptions::new(replicates, seed).check()?;
    let observed = spearman(s);
    let null: Vec<f64> =
        (0..replicates).into_par_iter().map(|r| spearman(&s.shuffled(child_seed(seed, r as u64)))).collect();
    Ok(TestResult {
        statistic: observed,
        p_value: permutation_p_value(observed, &null),
        replicates,
        seed,
        method: "permutation spearman".into(),
        approximate: false,
    })
}

/// Chatterjee's test: under independence `√n ξ` is asymptotically normal with
/// variance 2/5; the p-value is the upper normal tail.
pub fn chatterjee_test(s: &RankedSample) -> Result<TestResult> {
    let (tu, tv) = s.tie_counts();
    if tu + tv > 0 {
        return Err(Error::Ties { axis: if tu > 0 { "x" } else { "y" }, count: tu.max(tv) });
    }
    let xi = chatterjee_xi(s);
    let z = (s.n() as f64).sqrt() * xi / 0.4f64.sqrt();
    Ok(TestResult {
        statistic: xi,
        p_value: normal_sf(z),
        replicates: 0,
        seed: 0,
        method: "chatterjee asymptotic".into(),
        approximate: false,
    })
}

/// Benjamini–Hochberg step-up selection at rate `q`; returns the selected
/// indices in increasing order.
pub fn bh_fdr(p_values: &[f64], q: f64) -> Result<Vec<usize>> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("FDR level must lie in (0, 1], got {q}")));
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let cutoff = order
        .iter()
        .enumerate()
        .filter(|&(rank, &i)| p_values[i] <= (rank + 1) as f64 * q / m as f64)
        .map(|(_, &i)| p_values[i])
        .next_back();
    Ok(match cutoff {
        Some(t) => (0..m).filter(|&i| p_values[i] <= t).collect(),
        None => Vec::new(),
    })
}

/// One row of a screening dataset; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenRow {
    pub id: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenOptions {
    pub kind: MeasureKind,
    pub permutations: usize,
    pub fdr: f64,
    pub seed: u64,
    pub tie_policy: TiePolicy,
    pub bandwidth: BandwidthMode,
    pub fast: bool,
    /// Rows with fewer complete observations are skipped.
    pub min_observations: usize,
}

impl Default for ScreenOptions {
    fn default() -> Self {
        ScreenOptions {
            kind: MeasureKind::Rho,
            permutations: 999,
            fdr: 0.05,
            seed: 0,
            tie_policy: TiePolicy::Random,
            bandwidth: BandwidthMode::Auto,
            fast: false,
            min_observations: 16,
        }
    }
}

/// Per-row screening result.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenEntry {
    pub id: String,
    pub observations: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub spearman: Option<f64>,
    pub spearman_p: Option<f64>,
    pub selected_rearranged: bool,
    pub selected_spearman: bool,
    /// Why the row was skipped, if it was.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScreenReport {
    /// Tested rows sorted by rearranged-test p-value, then flagged rows.
    pub entries: Vec<ScreenEntry>,
    pub selected_rearranged: Vec<String>,
    pub selected_spearman: Vec<String>,
    /// Selected by the rearranged test but not by Spearman.
    pub difference: Vec<String>,
}

/// Tests every row against the response with the rearranged permutation test
/// and a one-sided Spearman permutation test, applies BH to both sets of
/// p-values and reports the rows only the rearranged test selects.
pub fn screen(rows: &[ScreenRow], response: &[Option<f64>], opts: &ScreenOptions) -> Result<ScreenReport> {
    PermutationOptions::new(opts.permutations, opts.seed).check()?;
    let mut entries: Vec<ScreenEntry> =
        rows.iter().enumerate().map(|(r, row)| screen_row(r, row, response, opts)).collect::<Result<_>>()?;
    let tested: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].flag.is_none()).collect();
    let p: Vec<f64> = tested.iter().map(|&i| entries[i].p_value.expect("tested")).collect();
    let ps: Vec<f64> = tested.iter().map(|&i| entries[i].spearman_p.expect("tested")).collect();
    for j in bh_fdr(&p, opts.fdr)? {
        entries[tested[j]].selected_rearranged = true;
    }
    for j in bh_fdr(&ps, opts.fdr)? {
        entries[tested[j]].selected_spearman = true;
    }
    entries.sort_by(|a, b| match (a.p_value, b.p_value) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let pick = |f: fn(&ScreenEntry) -> bool| entries.iter().filter(|e| f(e)).map(|e| e.id.clone()).collect::<Vec<_>>();
    Ok(ScreenReport {
        selected_rearranged: pick(|e| e.selected_rearranged),
        selected_spearman: pick(|e| e.selected_spearman),
        difference: pick(|e| e.selected_rearranged && !e.selected_spearman),
        entries,
    })
}

fn screen_row(index: usize, row: &ScreenRow, response: &[Option<f64>], opts: &ScreenOptions) -> Result<ScreenEntry> {
    let mut entry = ScreenEntry {
        id: row.id.clone(),
        observations: 0,
        statistic: None,
        p_value: None,
        spearman: None,
        spearman_p: None,
        selected_rearranged: false,
        selected_spearman: false,
        flag: None,
    };
    if row.values.len() != response.len() {
        entry.flag = Some(format!("row has {} values, response has {}", row.values.len(), response.len()));
        return Ok(entry);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        response.iter().zip(&row.values).filter_map(|(t, v)| Some(((*t)?, (*v)?))).unzip();
    entry.observations = xs.len();
    if xs.len() < opts.min_observations {
        entry.flag = Some(format!("too many missing values ({} complete)", xs.len()));
        return Ok(entry);
    }
    if xs.iter().all(|&x| x == xs[0]) || ys.iter().all(|&y| y == ys[0]) {
        entry.flag = Some("constant values: every observation is tied".into());
        return Ok(entry);
    }
    let seed = child_seed(opts.seed, index as u64);
    let s = match pseudo_observations(&xs, &ys, opts.tie_policy, child_seed(seed, 0)) {
        Ok(s) => s,
        Err(e) => {
            entry.flag = Some(e.to_string());
            return Ok(entry);
        }
    };
    let popts = PermutationOptions {
        replicates: opts.permutations,
        seed: child_seed(seed, 1),
        bandwidth: opts.bandwidth,
        fast: opts.fast,
    };
    let r = permutation_tests(&s, &[opts.kind], &popts)?.remove(0);
    let sp = spearman_permutation_test(&s, opts.permutations, child_seed(seed, 2))?;
    entry.statistic = Some(r.statistic);
    entry.p_value = Some(r.p_value);
    entry.spearman = Some(sp.statistic);
    entry.spearman_p = Some(sp.p_value);
    Ok(entry)
}

/// k-nearest-neighbour regression evaluated at each observed `x`: the mean
/// response of the `k` observations closest in `x` (the point itself
/// included), preferring the left neighbour on equal distance. Returns
/// `(x, fit)` pairs sorted by `x`.
pub fn knn_fit(xs: &[f64], ys: &[f64], k: usize) -> Result<Vec<(f64, f64)>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch("x and y lengths differ".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let sx: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let sy: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    let k = k.min(n);
    Ok((0..n)
        .map(|i| {
            let (mut lo, mut hi) = (i, i + 1);
            while hi - lo < k {
                let take_left = match (lo > 0, hi < n) {
                    (true, true) => sx[i] - sx[lo - 1] <= sx[hi] - sx[i],
                    (l, _) => l,
                };
                if take_left {
                    lo -= 1;
                } else {
                    hi += 1;
                }
            }
            (sx[i], sy[lo..hi].iter().sum::<f64>() / (hi - lo) as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::random_ranks;

    #[test]
    fn bh_examples() {
        assert_eq!(bh_fdr(&[0.01, 0.04, 0.03, 0.5], 0.05).unwrap(), vec![0]);
        assert!(bh_fdr(&[1.0; 5], 0.05).unwrap().is_empty());
        let m = 8;
        let p = vec![0.05 / (2.0 * m as f64); m];
        assert_eq!(bh_fdr(&p, 0.05).unwrap().len(), m);
        assert!(bh_fdr(&[], 0.05).unwrap().is_empty());
        assert!(bh_fdr(&[0.1], 0.0).is_err());
        assert_eq!(bh_fdr(&[0.3, 0.9, 1.0], 1.0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn p_value_convention() {
        assert_eq!(permutation_p_value(1.0, &[0.5; 199]), 0.005);
        assert_eq!(permutation_p_value(0.0, &[0.5; 9]), 1.0);
        assert_eq!(permutation_p_value(0.5, &[0.5, 0.2, 0.7, 0.1]), 0.6);
    }

    #[test]
    fn permutation_test_on_comonotone_data() {
        let r: Vec<usize> = (1..=100).collect();
        let s = RankedSample::from_ranks(r.clone(), r).unwrap();
        let t = permutation_test(&s, MeasureKind::Rho, 199, 3).unwrap();
        assert_eq!(t.p_value, 0.005);
        assert!(permutation_test(&s, MeasureKind::Rho, 0, 3).is_err());
        assert_eq!(t, permutation_test(&s, MeasureKind::Rho, 199, 3).unwrap());
    }

    #[test]
    fn chatterjee_test_examples() {
        let r: Vec<usize> = (1..=200).collect();
        let s = RankedSample::from_ranks(r.clone(), r).unwrap();
        assert!(chatterjee_test(&s).unwrap().p_value < 1e-6);
        // n = 2: Σ|Δr| = 1 = (n² - 1)/3, so ξ = 0 and p = 1/2.
        let s = RankedSample::from_ranks(vec![1, 2], vec![1, 2]).unwrap();
        let t = chatterjee_test(&s).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 0.5);
    }

    #[test]
    fn knn_examples() {
        let xs = [0.0, 1.0, 2.0, 3.0, 10.0];
        let ys = [1.0, 2.0, 3.0, 4.0, 5.0];
        let fit = knn_fit(&xs, &ys, 3).unwrap();
        assert_eq!(fit[0], (0.0, 2.0));
        assert_eq!(fit[1], (1.0, 2.0));
        assert_eq!(fit[2], (2.0, 3.0));
        assert_eq!(fit[4], (10.0, 4.0));
        // Equal distances prefer the left neighbour.
        let fit = knn_fit(&[0.0, 1.0, 2.0], &[0.0, 10.0, 20.0], 2).unwrap();
        assert_eq!(fit[1], (1.0, 5.0));
    }

    #[test]
    fn screen_flags_and_sorting() {
        let t = 30;
        let response: Vec<Option<f64>> = (0..t).map(|i| Some(i as f64)).collect();
        let mono = ScreenRow { id: "mono".into(), values: (0..t).map(|i| Some(i as f64 * 2.0)).collect() };
        let noise =
            ScreenRow { id: "noise".into(), values: random_ranks(t, 5).into_iter().map(|r| Some(r as f64)).collect() };
        let sparse = ScreenRow { id: "sparse".into(), values: (0..t).map(|i| (i < 10).then_some(i as f64)).collect() };
        let opts = ScreenOptions { permutations: 99, ..Default::default() };
        let rep = screen(&[noise, sparse, mono], &response, &opts).unwrap();
        assert_eq!(rep.entries[0].id, "mono");
        assert_eq!(rep.entries[2].id, "sparse");
        assert!(rep.entries[2].flag.is_some());
        assert!(rep.selected_rearranged.contains(&"mono".to_string()));
        assert!(rep.selected_spearman.contains(&"mono".to_string()));
        assert!(!rep.difference.contains(&"mono".to_string()));
        let constant: Vec<Option<f64>> = vec![Some(1.0); t];
        let rep = screen(&[ScreenRow { id: "a".into(), values: response.clone() }], &constant, &opts).unwrap();
        assert!(rep.entries[0].flag.is_some());
        assert!(screen(&[], &response, &opts).unwrap().entries.is_empty());
    }
}
