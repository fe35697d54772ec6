//! Rank-based estimation: pseudo-observations, the empirical checkerboard
//! copula, cross-validated bandwidth selection and the rearranged estimators.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::checkerboard::{CellSplit, CheckerboardMatrix};
use crate::error::{Error, Result};
use crate::measures::{checkerboard_measure, rearranged_checkerboard_measure, MeasureKind};
use crate::rearrangement::{multivariate_rearrange, ConditionalTable};
use crate::rng::{child_seed, rng_from_seed};
use crate::scalar::Scalar;

/// How tied observations are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Break ties uniformly at random (seeded).
    #[default]
    Random,
    /// Reject any tie.
    Strict,
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(TiePolicy::Random),
            "strict" => Ok(TiePolicy::Strict),
            _ => Err(Error::InvalidParameter(format!("unknown tie policy `{s}`"))),
        }
    }
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiePolicy::Random => "random",
            TiePolicy::Strict => "strict",
        })
    }
}

/// A bivariate sample reduced to its ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSample {
    // 1-based ranks; both are permutations of 1..=n.
    u: Vec<usize>,
    v: Vec<usize>,
    u_ties: usize,
    v_ties: usize,
}

impl RankedSample {
    /// Builds a sample from rank vectors, which must be permutations of 1..=n.
    pub fn from_ranks(u: Vec<usize>, v: Vec<usize>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch(format!("{} vs {} ranks", u.len(), v.len())));
        }
        check_permutation(&u, "u")?;
        check_permutation(&v, "v")?;
        Ok(RankedSample { u, v, u_ties: 0, v_ties: 0 })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn u_ranks(&self) -> &[usize] {
        &self.u
    }

    pub fn v_ranks(&self) -> &[usize] {
        &self.v
    }

    /// Number of observations involved in ties on each axis before resolution.
    pub fn tie_counts(&self) -> (usize, usize) {
        (self.u_ties, self.v_ties)
    }

    /// Normalized ranks `(rank_u / (n + 1), rank_v / (n + 1))`.
    pub fn pseudo_observations(&self) -> Vec<(f64, f64)> {
        let d = (self.n() + 1) as f64;
        self.u.iter().zip(&self.v).map(|(&a, &b)| (a as f64 / d, b as f64 / d)).collect()
    }

    /// The same sample with `v` ranks replaced, e.g. by a permutation of them.
    pub fn with_v_ranks(&self, v: Vec<usize>) -> Result<Self> {
        check_permutation(&v, "v")?;
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch("rank vector length".into()));
        }
        Ok(RankedSample { u: self.u.clone(), v, u_ties: self.u_ties, v_ties: self.v_ties })
    }

    /// Uniformly permutes the `v` ranks, destroying any dependence.
    pub fn shuffled(&self, seed: u64) -> Self {
        let mut v = self.v.clone();
        v.shuffle(&mut rng_from_seed(seed));
        RankedSample { u: self.u.clone(), v, u_ties: self.u_ties, v_ties: self.v_ties }
    }

    // 0-based ranks.
    fn zero_based(&self) -> (Vec<usize>, Vec<usize>) {
        (self.u.iter().map(|r| r - 1).collect(), self.v.iter().map(|r| r - 1).collect())
    }
}

fn check_permutation(r: &[usize], axis: &str) -> Result<()> {
    let n = r.len();
    let mut seen = vec![false; n];
    for &x in r {
        if x == 0 || x > n || seen[x - 1] {
            return Err(Error::Data(format!("{axis} ranks are not a permutation of 1..={n}")));
        }
        seen[x - 1] = true;
    }
    Ok(())
}

/// Ranks of `xs` (1-based) with ties resolved per `policy`; returns the ranks
/// and the number of observations that were tied.
pub fn rank_with_ties(xs: &[f64], policy: TiePolicy, seed: u64, axis: &'static str) -> Result<(Vec<usize>, usize)> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(axis));
    }
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut rng = rng_from_seed(seed);
    let mut tied = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            if end - start == n && policy == TiePolicy::Random {
                return Err(Error::Degenerate(axis));
            }
            tied += end - start;
            if policy == TiePolicy::Random {
                order[start..end].shuffle(&mut rng);
            }
        }
        start = end;
    }
    if tied > 0 && policy == TiePolicy::Strict {
        return Err(Error::Ties { axis, count: tied });
    }
    let mut ranks = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    Ok((ranks, tied))
}

/// Ranks a bivariate sample.
pub fn pseudo_observations(xs: &[f64], ys: &[f64], policy: TiePolicy, seed: u64) -> Result<RankedSample> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!("{} x values, {} y values", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: xs.len() });
    }
    let (u, u_ties) = rank_with_ties(xs, policy, child_seed(seed, 0), "x")?;
    let (v, v_ties) = rank_with_ties(ys, policy, child_seed(seed, 1), "y")?;
    Ok(RankedSample { u, v, u_ties, v_ties })
}

/// Checkerboard resolution `(N1, N2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bandwidth {
    pub n1: usize,
    pub n2: usize,
}

impl Bandwidth {
    pub fn new(n1: usize, n2: usize) -> Self {
        Bandwidth { n1, n2 }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidParameter("bandwidth must be positive".into()));
        }
        let big = self.n1.max(self.n2);
        if big > n {
            return Err(Error::BandwidthTooLarge { requested: big, available: n });
        }
        Ok(())
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n1, self.n2)
    }
}

/// How the bandwidth is chosen for a sample of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BandwidthMode {
    /// Cross-validated selection.
    #[default]
    Auto,
    /// `N_i = ⌊n^{s_i}⌋`.
    Fixed {
        s1: f64,
        s2: f64,
    },
    Explicit(Bandwidth),
}

impl BandwidthMode {
    pub fn resolve(&self, s: &RankedSample) -> Result<Bandwidth> {
        let n = s.n();
        let b = match *self {
            BandwidthMode::Auto => return select_bandwidth(s),
            BandwidthMode::Fixed { s1, s2 } => Bandwidth::new(power_floor(n, s1)?, power_floor(n, s2)?),
            BandwidthMode::Explicit(b) => b,
        };
        b.check(n)?;
        Ok(b)
    }
}

impl fmt::Display for BandwidthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthMode::Auto => f.write_str("auto"),
            BandwidthMode::Fixed { s1, s2 } => write!(f, "fixed:{s1},{s2}"),
            BandwidthMode::Explicit(b) => write!(f, "explicit:{},{}", b.n1, b.n2),
        }
    }
}

impl FromStr for BandwidthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad bandwidth `{s}`; use auto, fixed:s1,s2 or explicit:N1,N2"));
        if s == "auto" {
            return Ok(BandwidthMode::Auto);
        }
        let (tag, rest) = s.split_once(':').ok_or_else(bad)?;
        let (a, b) = rest.split_once(',').ok_or_else(bad)?;
        match tag {
            "fixed" => {
                let s1: f64 = a.trim().parse().map_err(|_| bad())?;
                let s2: f64 = b.trim().parse().map_err(|_| bad())?;
                if !(s1 > 0.0 && s1 <= 1.0 && s2 > 0.0 && s2 <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "bandwidth exponents must lie in (0, 1], got {s1}, {s2}"
                    )));
                }
                Ok(BandwidthMode::Fixed { s1, s2 })
            }
            "explicit" => {
                let n1: usize = a.trim().parse().map_err(|_| bad())?;
                let n2: usize = b.trim().parse().map_err(|_| bad())?;
                if n1 == 0 || n2 == 0 {
                    return Err(bad());
                }
                Ok(BandwidthMode::Explicit(Bandwidth::new(n1, n2)))
            }
            _ => Err(bad()),
        }
    }
}

// ⌊n^s⌋, robust to n^s landing a hair below an integer.
fn power_floor(n: usize, s: f64) -> Result<usize> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("bandwidth exponent must lie in (0, 1], got {s}")));
    }
    let x = (n as f64).powf(s);
    let mut c = x.floor() as usize;
    if ((c + 1) as f64 - x).abs() < 1e-9 * x {
        c += 1;
    }
    Ok(c.max(1))
}

/// Integer `k`-th root: the largest `r` with `r^k <= n`.
pub fn integer_root(n: usize, k: u32) -> usize {
    let mut r = (n as f64).powf(1.0 / k as f64).round() as usize;
    while r > 0 && r.checked_pow(k).is_none_or(|p| p > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(k).is_some_and(|p| p <= n) {
        r += 1;
    }
    r
}

/// Empirical checkerboard copula: the permutation checkerboard of the ranks,
/// coarsened to `b` by exact overlaps in O(n) without building the `n × n`
/// matrix.
pub fn empirical_checkerboard<T: Scalar>(s: &RankedSample, b: Bandwidth) -> Result<CheckerboardMatrix<T>> {
    let n = s.n();
    b.check(n)?;
    let (x, y) = s.zero_based();
    let counts = overlap_counts(&x, &y, n, b);
    let nn = T::from_usize_lossy(n);
    let data = counts.iter().map(|&c| T::from_usize_lossy(c as usize) / nn).collect();
    Ok(CheckerboardMatrix::from_raw(b.n1, b.n2, data))
}

// Integer cell weights: entry (k, l) is n * a[k][l].
fn overlap_counts(x: &[usize], y: &[usize], n: usize, b: Bandwidth) -> Vec<u64> {
    let mut counts = vec![0u64; b.n1 * b.n2];
    for (&xi, &yi) in x.iter().zip(y) {
        let su = CellSplit::new(xi, n, b.n1);
        let sv = CellSplit::new(yi, n, b.n2);
        for &(k, wu) in su.parts() {
            for &(l, wv) in sv.parts() {
                counts[k * b.n2 + l] += (wu * wv) as u64;
            }
        }
    }
    counts
}

/// Above this size the leave-one-out term of the CV criterion is estimated
/// from a fixed random subset of observations.
pub const CV_FULL_LIMIT: usize = 10_000;
/// Size of that subset.
pub const CV_SUBSAMPLE: usize = 500;

/// Least-squares cross-validation criterion
/// `∫∫ ĉ² - (2/n) Σ_i ĉ^{-i}(Û_i, V̂_i)`, where `ĉ^{-i}` is the empirical
/// checkerboard density of the sample without observation `i`, re-ranked
/// among the remaining `n - 1` points.
pub fn cv_score(s: &RankedSample, b: Bandwidth) -> Result<f64> {
    let n = s.n();
    if n < 3 {
        return Err(Error::SampleTooSmall { needed: 3, got: n });
    }
    b.check(n)?;
    let big = b.n1.max(b.n2);
    if big > n - 1 {
        return Err(Error::BandwidthTooLarge { requested: big, available: n - 1 });
    }
    let ctx = CvContext::new(s);
    let px = ctx.x_plan(b.n1);
    let py = ctx.y_plan(b.n2);
    Ok(ctx.score(&px, &py, &mut Vec::new()))
}

// Leave-one-out cells are evaluated without refitting. Dropping observation
// i shifts the ranks above it down by one, so a fine-cell range [c0, c1) of
// the (n-1)-point grid is a range of original ranks whose endpoints move by
// at most one. Since every rank row and column holds exactly one
// observation, moving an endpoint changes a rectangle count by at most one,
// decided by looking up that single observation. Counts over the unshifted
// ranges come from one O(n) pass per bandwidth, and the at most two partially
// covered fine rows and columns are again single observations.
struct CvContext {
    n: usize,
    x: Vec<usize>,
    y: Vec<usize>,
    inv_x: Vec<usize>,
    inv_y: Vec<usize>,
    // Observations entering the leave-one-out term.
    subset: Vec<usize>,
}

// Geometry of coarse cell k for a grid of m fine cells.
#[derive(Clone, Copy)]
struct CoarseCell {
    full: (usize, usize),
    partial: [(usize, usize); 2],
    n_partial: usize,
}

impl CoarseCell {
    fn new(k: usize, m: usize, coarse: usize) -> Self {
        let lo = k * m;
        let hi = (k + 1) * m;
        let c0 = lo.div_ceil(coarse);
        let c1 = hi / coarse;
        let mut partial = [(0, 0); 2];
        let mut n_partial = 0;
        if c0 * coarse > lo {
            partial[n_partial] = (c0 - 1, c0 * coarse - lo);
            n_partial += 1;
        }
        if c1 * coarse < hi {
            partial[n_partial] = (c1, hi - c1 * coarse);
            n_partial += 1;
        }
        CoarseCell { full: (c0, c1), partial, n_partial }
    }

    fn partials(&self) -> &[(usize, usize)] {
        &self.partial[..self.n_partial]
    }

    // Overlap weight of fine cell `f` with this coarse cell.
    fn weight(&self, f: usize, coarse: usize) -> usize {
        if f >= self.full.0 && f < self.full.1 {
            return coarse;
        }
        self.partials().iter().find(|p| p.0 == f).map_or(0, |p| p.1)
    }
}

const NO_CELL: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

// Leave-one-out view of one observation along one axis: where its cell's
// full range sits after removing it, and the single observations on the
// range boundaries and partially covered fine cells, described by their rank
// on the other axis.
#[derive(Clone, Copy)]
struct LooAxis {
    cell: u32,
    // Unshifted full range [c0, c1) and the shifted range in original ranks.
    c0: u32,
    c1: u32,
    lo: u32,
    hi: u32,
    // Other-axis rank of the observation leaving (at c0) or entering (at c1)
    // the range through the shift; NONE when the endpoint does not move.
    leave: u32,
    enter: u32,
    // Partially covered fine cells: (overlap weight, other-axis rank of its
    // observation re-ranked without i).
    partial: [(u32, u32); 2],
    n_partial: u32,
    // Whether observation i itself lies in the shifted range.
    self_in: bool,
    // Whether the full range is nonempty.
    has_full: bool,
}

// Everything about one axis at one candidate resolution that does not depend
// on the other axis.
struct AxisPlan {
    coarse: usize,
    cells: Vec<CoarseCell>,
    // Per observation: cell whose unshifted full range contains its rank.
    full_of: Vec<u32>,
    // Per observation: overlap with the full-sample grid.
    split: Vec<CellSplit>,
    loo: Vec<LooAxis>,
}

impl AxisPlan {
    // `own` are this axis's ranks, `other` the other axis's, `inv` the inverse
    // of `own`.
    fn new(own: &[usize], other: &[usize], inv: &[usize], coarse: usize, subset: &[usize]) -> Self {
        let n = own.len();
        let m = n - 1;
        let cells: Vec<CoarseCell> = (0..coarse).map(|k| CoarseCell::new(k, m, coarse)).collect();
        let mut owner = vec![NO_CELL; n];
        for (k, c) in cells.iter().enumerate() {
            for slot in &mut owner[c.full.0..c.full.1] {
                *slot = k as u32;
            }
        }
        let loo = subset
            .iter()
            .map(|&i| {
                let (xi, yi) = (own[i], other[i]);
                let k = ((xi + 1) * coarse / (n + 1)).min(coarse - 1);
                let cell = &cells[k];
                let (c0, c1) = cell.full;
                let lift = |f: usize| f + usize::from(f >= xi);
                let drop_other = |r: usize| (r - usize::from(r > yi)) as u32;
                let has_full = c1 > c0;
                let (lo, hi) = if has_full { (lift(c0), lift(c1 - 1) + 1) } else { (c0, c1) };
                let leave = if has_full && lo > c0 { other[inv[c0]] as u32 } else { NONE };
                let enter = if has_full && hi > c1 { other[inv[c1]] as u32 } else { NONE };
                let mut partial = [(0, 0); 2];
                for (slot, &(f, w)) in partial.iter_mut().zip(cell.partials()) {
                    *slot = (w as u32, drop_other(other[inv[lift(f)]]));
                }
                LooAxis {
                    cell: k as u32,
                    c0: c0 as u32,
                    c1: c1 as u32,
                    lo: lo as u32,
                    hi: hi as u32,
                    leave,
                    enter,
                    partial,
                    n_partial: cell.partials().len() as u32,
                    self_in: has_full && (lo..hi).contains(&xi),
                    has_full,
                }
            })
            .collect();
        AxisPlan {
            coarse,
            cells,
            full_of: own.iter().map(|&r| owner[r]).collect(),
            split: own.iter().map(|&r| CellSplit::new(r, n, coarse)).collect(),
            loo,
        }
    }
}

impl CvContext {
    fn new(s: &RankedSample) -> Self {
        let n = s.n();
        let (x, y) = s.zero_based();
        let mut inv_x = vec![0; n];
        let mut inv_y = vec![0; n];
        for i in 0..n {
            inv_x[x[i]] = i;
            inv_y[y[i]] = i;
        }
        let subset = if n > CV_FULL_LIMIT {
            let mut rng = rng_from_seed(child_seed(0x0c0f_fee5, n as u64));
            let mut idx: Vec<usize> = (0..n).collect();
            let (head, _) = idx.partial_shuffle(&mut rng, CV_SUBSAMPLE);
            let mut head = head.to_vec();
            head.sort_unstable();
            head
        } else {
            (0..n).collect()
        };
        CvContext { n, x, y, inv_x, inv_y, subset }
    }

    fn x_plan(&self, coarse: usize) -> AxisPlan {
        AxisPlan::new(&self.x, &self.y, &self.inv_x, coarse, &self.subset)
    }

    fn y_plan(&self, coarse: usize) -> AxisPlan {
        AxisPlan::new(&self.y, &self.x, &self.inv_y, coarse, &self.subset)
    }

    fn score(&self, px: &AxisPlan, py: &AxisPlan, scratch: &mut Vec<u64>) -> f64 {
        let n = self.n;
        let m = n - 1;
        let (n1, n2) = (px.coarse, py.coarse);
        // First half: integer cell weights of the full fit. Second half:
        // observation counts over unshifted full ranges.
        scratch.clear();
        scratch.resize(2 * n1 * n2, 0);
        let (counts, full) = scratch.split_at_mut(n1 * n2);
        for j in 0..n {
            for &(k, wu) in px.split[j].parts() {
                for &(l, wv) in py.split[j].parts() {
                    counts[k * n2 + l] += (wu * wv) as u64;
                }
            }
            let (fk, fl) = (px.full_of[j], py.full_of[j]);
            if fk != NO_CELL && fl != NO_CELL {
                full[fk as usize * n2 + fl as usize] += 1;
            }
        }
        let nn = n as f64;
        let first = counts.iter().map(|&c| (c as f64 / nn).powi(2)).sum::<f64>() / (n1 * n2) as f64;

        let full_w = (n1 * n2) as i64;
        let inside = |r: u32, lo: u32, hi: u32| r >= lo && r < hi;
        let mut loo: i64 = 0;
        for (a, b) in px.loo.iter().zip(&py.loo) {
            let mut total: i64 = 0;
            if a.has_full && b.has_full {
                let mut c = full[a.cell as usize * n2 + b.cell as usize] as i64;
                // Shift the x-range against the unshifted y-range, then the
                // y-range against the shifted x-range.
                c -= i64::from(a.leave != NONE && inside(a.leave, b.c0, b.c1));
                c += i64::from(a.enter != NONE && inside(a.enter, b.c0, b.c1));
                c -= i64::from(b.leave != NONE && inside(b.leave, a.lo, a.hi));
                c += i64::from(b.enter != NONE && inside(b.enter, a.lo, a.hi));
                c -= i64::from(a.self_in && b.self_in);
                total += full_w * c;
            }
            let cv = &py.cells[b.cell as usize];
            for &(wu, r) in &a.partial[..a.n_partial as usize] {
                total += (wu as usize * cv.weight(r as usize, n2)) as i64;
            }
            for &(wv, r) in &b.partial[..b.n_partial as usize] {
                if inside(r, a.c0, a.c1) {
                    total += (n1 * wv as usize) as i64;
                }
            }
            loo += total;
        }
        // Each leave-one-out density is total / m.
        let loo_mean = loo as f64 / m as f64 / self.subset.len() as f64;
        first - 2.0 * loo_mean
    }
}

/// Candidate resolutions `⌊n^{1/4}⌋ ..= ⌊n^{1/2}⌋` per axis, thinned to every
/// other value when the full grid would exceed 400 pairs.
pub fn bandwidth_candidates(n: usize) -> Result<Vec<usize>> {
    if n < 16 {
        return Err(Error::SampleTooSmall { needed: 16, got: n });
    }
    let lo = integer_root(n, 4).max(1);
    let hi = integer_root(n, 2).min(n - 1);
    let stride = if (hi - lo + 1).pow(2) > 400 { 2 } else { 1 };
    Ok((lo..=hi).step_by(stride).collect())
}

/// Minimizes the CV criterion over the candidate grid. Near-ties go to the
/// smaller `N1 + N2`, then the smaller `N1`.
pub fn select_bandwidth(s: &RankedSample) -> Result<Bandwidth> {
    let cands = bandwidth_candidates(s.n())?;
    let ctx = CvContext::new(s);
    let xs: Vec<AxisPlan> = cands.iter().map(|&c| ctx.x_plan(c)).collect();
    let ys: Vec<AxisPlan> = cands.iter().map(|&c| ctx.y_plan(c)).collect();
    let mut scratch = Vec::new();
    let mut best: Option<(f64, Bandwidth)> = None;
    for px in &xs {
        for py in &ys {
            let b = Bandwidth::new(px.coarse, py.coarse);
            let cv = ctx.score(px, py, &mut scratch);
            let better = match best {
                None => true,
                Some((bcv, bb)) => {
                    let tol = 1e-12 * bcv.abs().max(1.0);
                    if cv < bcv - tol {
                        true
                    } else if cv <= bcv + tol {
                        (b.n1 + b.n2, b.n1) < (bb.n1 + bb.n2, bb.n1)
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some((cv, b));
            }
        }
    }
    Ok(best.expect("candidate grid is nonempty").1)
}

/// A rearranged estimate together with the bandwidth it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub bandwidth: Bandwidth,
}

/// The rearranged estimator `R̂_μ`: μ of the SI rearrangement of the empirical
/// checkerboard copula.
pub fn estimate_r(s: &RankedSample, kind: MeasureKind, mode: BandwidthMode) -> Result<Estimate> {
    let b = mode.resolve(s)?;
    let a = empirical_checkerboard::<f64>(s, b)?;
    Ok(Estimate { value: rearranged_checkerboard_measure(&a, kind)?, bandwidth: b })
}

/// Several rearranged estimates sharing one bandwidth selection.
pub fn estimate_many(s: &RankedSample, kinds: &[MeasureKind], mode: BandwidthMode) -> Result<(Vec<f64>, Bandwidth)> {
    let b = mode.resolve(s)?;
    let a = empirical_checkerboard::<f64>(s, b)?;
    let r = crate::rearrangement::si_rearrange_grid(&a.to_grid());
    let values = kinds.iter().map(|&k| crate::measures::measure(&r, k)).collect::<Result<_>>()?;
    Ok((values, b))
}

/// Chatterjee's ξ: `1 - 3 Σ |r_{i+1} - r_i| / (n² - 1)` with `r` the `y`-ranks
/// ordered by `x`.
pub fn chatterjee_xi(s: &RankedSample) -> f64 {
    let n = s.n();
    let mut by_x = vec![0usize; n];
    for (&u, &v) in s.u.iter().zip(&s.v) {
        by_x[u - 1] = v;
    }
    let total: usize = by_x.windows(2).map(|w| w[0].abs_diff(w[1])).sum();
    let nf = n as f64;
    1.0 - 3.0 * total as f64 / (nf * nf - 1.0)
}

/// Sample Spearman rank correlation.
pub fn spearman(s: &RankedSample) -> f64 {
    let n = s.n() as f64;
    let d2: f64 = s.u.iter().zip(&s.v).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Sample Blomqvist β: four times the share of points strictly below both
/// medians, minus one.
pub fn blomqvist(s: &RankedSample) -> f64 {
    let n = s.n();
    let both = s.u.iter().zip(&s.v).filter(|&(&a, &b)| 2 * a < n + 1 && 2 * b < n + 1).count();
    4.0 * both as f64 / n as f64 - 1.0
}

/// Sample Kendall rank correlation, O(n log n) by inversion counting.
pub fn kendall(s: &RankedSample) -> f64 {
    let n = s.n();
    let mut by_x = vec![0usize; n];
    for (&u, &v) in s.u.iter().zip(&s.v) {
        by_x[u - 1] = v;
    }
    let inv = count_inversions(&mut by_x);
    let pairs = (n * (n - 1) / 2) as f64;
    1.0 - 2.0 * inv as f64 / pairs
}

fn count_inversions(a: &mut [usize]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut a[..mid]) + count_inversions(&mut a[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if a[i] <= a[j] {
            merged.push(a[i]);
            i += 1;
        } else {
            merged.push(a[j]);
            inv += (mid - i) as u64;
            j += 1;
        }
    }
    merged.extend_from_slice(&a[i..mid]);
    merged.extend_from_slice(&a[j..n]);
    a.copy_from_slice(&merged);
    inv
}

/// The conventional estimate of μ reported next to `R̂_μ`: `|ρ̂|`, `|τ̂|`,
/// `|β̂|` and Chatterjee's ξ for ρ, τ, β and r; otherwise μ of the unrearranged empirical
/// checkerboard (absolute value for concordance measures).
pub fn classical_estimate(s: &RankedSample, kind: MeasureKind, b: Bandwidth) -> Result<f64> {
    Ok(match kind {
        MeasureKind::Rho => spearman(s).abs(),
        MeasureKind::Tau => kendall(s).abs(),
        MeasureKind::R => chatterjee_xi(s),
        MeasureKind::Blomqvist => blomqvist(s).abs(),
        MeasureKind::Gini => checkerboard_measure(&empirical_checkerboard::<f64>(s, b)?, kind)?.abs(),
        _ => checkerboard_measure(&empirical_checkerboard::<f64>(s, b)?, kind)?,
    })
}

/// Grid used by [`multivariate_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiGrid {
    /// Cells per predictor axis.
    pub cells: usize,
    /// Response levels.
    pub levels: usize,
}

impl MultiGrid {
    /// `⌊n^{1/(2(d+1))}⌋` cells per axis and `⌊n^{1/3}⌋` response levels.
    pub fn default_for(n: usize, d: usize) -> Self {
        MultiGrid { cells: integer_root(n, 2 * (d as u32 + 1)).max(1), levels: integer_root(n, 3).max(1) }
    }
}

/// Largest supported number of predictors.
pub const MAX_PREDICTORS: usize = 3;

/// Rearranged measure of the dependence of `y` on the predictor vector.
///
/// Every predictor and the response are reduced to ranks; each observation
/// spreads its mass over the product grid by exact per-axis overlaps, exactly
/// as in the bivariate empirical checkerboard. Cells without mass are dropped.
/// With one predictor this reproduces [`estimate_r`] at bandwidth
/// `(cells, levels)`.
pub fn multivariate_estimate(
    predictors: &[Vec<f64>],
    y: &[f64],
    kind: MeasureKind,
    grid: Option<MultiGrid>,
    policy: TiePolicy,
    seed: u64,
) -> Result<f64> {
    let d = predictors.len();
    if d == 0 || d > MAX_PREDICTORS {
        return Err(Error::UnsupportedDimension(d));
    }
    let n = y.len();
    if predictors.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch("predictor and response lengths differ".into()));
    }
    if n < 16 {
        return Err(Error::SampleTooSmall { needed: 16, got: n });
    }
    let grid = grid.unwrap_or_else(|| MultiGrid::default_for(n, d));
    if grid.cells == 0 || grid.levels == 0 || grid.cells > n || grid.levels > n {
        return Err(Error::InvalidParameter(format!("grid {}x{} invalid for n = {n}", grid.cells, grid.levels)));
    }
    let mut ranks = Vec::with_capacity(d);
    for (a, p) in predictors.iter().enumerate() {
        ranks.push(rank_with_ties(p, policy, child_seed(seed, a as u64), "x")?.0);
    }
    let (yr, _) = rank_with_ties(y, policy, child_seed(seed, d as u64), "y")?;
    let g = grid.cells;
    let levels = grid.levels;
    let cells = g.pow(d as u32);
    // Integer weights; every observation contributes g^d * levels in total.
    let mut counts = vec![0u64; cells * levels];
    let mut parts: Vec<(usize, u64)> = Vec::with_capacity(1 << d);
    for i in 0..n {
        parts.clear();
        parts.push((0, 1));
        for r in &ranks {
            let split = CellSplit::new(r[i] - 1, n, g);
            let mut next = Vec::with_capacity(parts.len() * 2);
            for &(idx, w) in &parts {
                for &(k, wk) in split.parts() {
                    next.push((idx * g + k, w * wk as u64));
                }
            }
            parts = next;
        }
        let sy = CellSplit::new(yr[i] - 1, n, levels);
        for &(idx, w) in &parts {
            for &(l, wl) in sy.parts() {
                counts[idx * levels + l] += w * wl as u64;
            }
        }
    }
    let per_obs = (g.pow(d as u32) * levels) as f64;
    let total = n as f64 * per_obs;
    let mut weights = Vec::new();
    let mut rows = Vec::new();
    for c in 0..cells {
        let row = &counts[c * levels..(c + 1) * levels];
        let mass: u64 = row.iter().sum();
        if mass == 0 {
            continue;
        }
        weights.push(mass as f64 / total);
        let mut acc = 0u64;
        rows.push(
            row.iter()
                .map(|&x| {
                    acc += x;
                    acc as f64 / mass as f64
                })
                .collect::<Vec<_>>(),
        );
    }
    let table = ConditionalTable::new(weights, rows)?;
    crate::measures::measure(&multivariate_rearrange(&table.refined()), kind)
}

/// A uniform random permutation of `1..=n`.
pub fn random_ranks(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut r: Vec<usize> = (1..=n).collect();
    r.shuffle(&mut rng);
    r
}
