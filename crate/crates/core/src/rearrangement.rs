//! Decreasing rearrangement of step functions and the SI/SD rearrangement of
//! checkerboard and grid copulas.

use crate::checkerboard::{coalesce, CheckerboardMatrix, GridCopula};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Step function on [0,1] given as `(width, value)` pieces from left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    pieces: Vec<(T, T)>,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(pieces: Vec<(T, T)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidStepFunction("no pieces".into()));
        }
        if let Some(&(w, v)) = pieces.iter().find(|(w, v)| !(w.is_finite() && v.is_finite()) || *w <= T::zero()) {
            return Err(Error::InvalidStepFunction(format!("bad piece (width {w}, value {v})")));
        }
        let total: T = pieces.iter().map(|p| p.0).sum();
        if (total - T::one()).abs() > T::lit(T::ORDER_TOL) {
            return Err(Error::InvalidStepFunction(format!("widths sum to {total}, expected 1")));
        }
        Ok(StepFunction { pieces })
    }

    pub(crate) fn from_pieces_unchecked(pieces: Vec<(T, T)>) -> Self {
        StepFunction { pieces }
    }

    pub fn pieces(&self) -> &[(T, T)] {
        &self.pieces
    }

    /// Value at `t`, right-continuous; `t = 1` takes the last piece.
    pub fn value_at(&self, t: T) -> T {
        let mut left = T::zero();
        for &(w, v) in &self.pieces {
            left = left + w;
            if t < left {
                return v;
            }
        }
        self.pieces[self.pieces.len() - 1].1
    }

    pub fn integral(&self) -> T {
        self.pieces.iter().map(|&(w, v)| w * v).sum()
    }

    /// `∫_0^1 |f|^p`.
    pub fn lp_norm_pow(&self, p: T) -> T {
        self.pieces.iter().map(|&(w, v)| w * v.abs().powf(p)).sum()
    }

    /// Measure of `{t : f(t) > y}`.
    pub fn distribution(&self, y: T) -> T {
        self.pieces.iter().filter(|p| p.1 > y).map(|p| p.0).sum()
    }

    pub fn is_nonincreasing(&self, tol: T) -> bool {
        self.pieces.windows(2).all(|w| w[1].1 <= w[0].1 + tol)
    }

    /// The nonincreasing equimeasurable rearrangement. Pieces with equal value
    /// keep their relative order.
    pub fn decreasing_rearrangement(&self) -> Self {
        let mut pieces = self.pieces.clone();
        pieces.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite values"));
        StepFunction { pieces }
    }
}

/// Indices sorting `values` into nonincreasing order (stable), or the
/// identity if they are already nonincreasing up to `tol`.
fn descending_order<T: Scalar>(values: impl Fn(usize) -> T, n: usize, tol: T) -> Vec<usize> {
    let sorted = (1..n).all(|k| values(k) <= values(k - 1) + tol);
    let mut idx: Vec<usize> = (0..n).collect();
    if !sorted {
        idx.sort_by(|&a, &b| values(b).partial_cmp(&values(a)).expect("finite values"));
    }
    idx
}

/// SI rearrangement of a checkerboard copula at the resolution of its grid.
///
/// Each column of cumulative row sums is sorted into nonincreasing order and
/// the result differenced back. Where a row keeps its source across adjacent
/// levels the original entry is copied, so an SI input is returned unchanged.
pub fn si_rearrange<T: Scalar>(a: &CheckerboardMatrix<T>) -> CheckerboardMatrix<T> {
    let (n1, n2) = (a.rows(), a.cols());
    let b = a.cumulative_rows();
    let w = n2 + 1;
    let tol = a.order_tol();
    let mut prev: Vec<usize> = (0..n1).collect();
    let mut out = vec![T::zero(); n1 * n2];
    for l in 1..=n2 {
        let cur = descending_order(|k| b[k * w + l], n1, tol);
        for k in 0..n1 {
            let x = if cur[k] == prev[k] { a.get(cur[k], l - 1) } else { b[cur[k] * w + l] - b[prev[k] * w + l - 1] };
            out[k * n2 + l - 1] = x.max(T::zero());
        }
        prev = cur;
    }
    CheckerboardMatrix::from_raw(n1, n2, out)
}

/// SD rearrangement: the SI rearrangement with rows reversed.
pub fn sd_rearrange<T: Scalar>(a: &CheckerboardMatrix<T>) -> CheckerboardMatrix<T> {
    si_rearrange(a).reverse_rows()
}

/// Conditional distribution table: for each of `K` conditioning cells with
/// probability `weights[k]`, the conditional CDF of the response at levels
/// `levels[1..=L]` (with `levels[0] = 0` and `levels[L] = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable<T> {
    weights: Vec<T>,
    levels: Vec<T>,
    // K x L, entry (k, l) is the conditional CDF at levels[l + 1].
    cdf: Vec<T>,
}

impl<T: Scalar> ConditionalTable<T> {
    /// Table on the uniform response grid `l / L`.
    pub fn new(weights: Vec<T>, cdf_rows: Vec<Vec<T>>) -> Result<Self> {
        let l = cdf_rows.first().map_or(0, Vec::len);
        Self::with_levels(weights, crate::checkerboard::uniform_breaks(l), cdf_rows)
    }

    pub fn with_levels(weights: Vec<T>, levels: Vec<T>, cdf_rows: Vec<Vec<T>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || cdf_rows.len() != k {
            return Err(Error::InvalidTable(format!("{} weights but {} rows", k, cdf_rows.len())));
        }
        let l = levels.len().saturating_sub(1);
        if l == 0 || cdf_rows.iter().any(|r| r.len() != l) {
            return Err(Error::InvalidTable("rows must have one entry per response level".into()));
        }
        if levels[0] != T::zero() || levels[l] != T::one() || levels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTable("levels must increase strictly from 0 to 1".into()));
        }
        let tol = T::lit(T::MARGIN_TOL);
        if weights.iter().any(|w| !(w.is_finite() && *w > T::zero())) {
            return Err(Error::InvalidTable("weights must be positive".into()));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidTable(format!("weights sum to {total}")));
        }
        for (i, row) in cdf_rows.iter().enumerate() {
            let mut last = T::zero();
            for &x in row {
                if !x.is_finite() || x < last - tol || x > T::one() + tol {
                    return Err(Error::InvalidTable(format!("row {i} is not a distribution function")));
                }
                last = x;
            }
            if (last - T::one()).abs() > tol {
                return Err(Error::InvalidTable(format!("row {i} does not reach 1")));
            }
        }
        for j in 0..l {
            let s: T = weights.iter().zip(&cdf_rows).map(|(&w, r)| w * r[j]).sum();
            if (s - levels[j + 1]).abs() > tol {
                return Err(Error::InvalidTable(format!("response margin violated at level {}", j + 1)));
            }
        }
        Ok(ConditionalTable { weights, levels, cdf: cdf_rows.concat() })
    }

    /// Table of a checkerboard copula: uniform weights, row-normalized
    /// cumulative sums.
    pub fn from_checkerboard(a: &CheckerboardMatrix<T>) -> Self {
        Self::from_grid(&a.to_grid())
    }

    pub fn from_grid(g: &GridCopula<T>) -> Self {
        let (k, l) = (g.u_cells(), g.v_cells());
        let u = g.u_breaks();
        let weights: Vec<T> = u.windows(2).map(|w| w[1] - w[0]).collect();
        let mut cdf = Vec::with_capacity(k * l);
        for (i, &w) in weights.iter().enumerate() {
            for j in 1..=l {
                cdf.push(g.row_cum(i, j) / w);
            }
        }
        ConditionalTable { weights, levels: g.v_breaks().to_vec(), cdf }
    }

    /// Inserts every response level at which two conditional CDFs cross.
    ///
    /// Between consecutive levels each conditional CDF of a grid copula is
    /// linear, so once the crossings are levels the order of the cells is
    /// constant on every interval and level-wise rearrangement is exact for
    /// all `v`, not only at the original levels.
    pub fn refined(&self) -> Self {
        let k = self.cells();
        let l = self.levels.len() - 1;
        let tol = T::lit(T::ORDER_TOL);
        let mut levels = vec![T::zero()];
        let mut cdf: Vec<T> = Vec::new();
        let mut rows: Vec<Vec<T>> = vec![Vec::new(); k];
        let mut ts: Vec<T> = Vec::new();
        for j in 0..l {
            let lo = |i: usize| if j == 0 { T::zero() } else { self.cdf(i, j - 1) };
            let hi = |i: usize| self.cdf(i, j);
            ts.clear();
            for a in 0..k {
                for b in a + 1..k {
                    let d0 = lo(a) - lo(b);
                    let d1 = hi(a) - hi(b);
                    if (d0 > tol && d1 < -tol) || (d0 < -tol && d1 > tol) {
                        ts.push(d0 / (d0 - d1));
                    }
                }
            }
            ts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let (v0, v1) = (self.levels[j], self.levels[j + 1]);
            let mut last = T::zero();
            for &t in ts.iter() {
                let v = v0 + t * (v1 - v0);
                if t - last <= tol
                    || T::one() - t <= tol
                    || v - *levels.last().expect("nonempty") <= T::lit(T::BREAK_TOL)
                {
                    continue;
                }
                last = t;
                levels.push(v);
                for (i, row) in rows.iter_mut().enumerate() {
                    row.push(lo(i) + t * (hi(i) - lo(i)));
                }
            }
            levels.push(v1);
            for (i, row) in rows.iter_mut().enumerate() {
                row.push(hi(i));
            }
        }
        for row in rows {
            cdf.extend(row);
        }
        ConditionalTable { weights: self.weights.clone(), levels, cdf }
    }

    pub fn cells(&self) -> usize {
        self.weights.len()
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn cdf(&self, k: usize, l: usize) -> T {
        self.cdf[k * (self.levels.len() - 1) + l]
    }
}

/// SI rearrangement of a conditional table, returned as a grid copula whose
/// u-breaks are the union of the cumulative-weight breakpoints across levels.
pub fn multivariate_rearrange<T: Scalar>(t: &ConditionalTable<T>) -> GridCopula<T> {
    let k = t.cells();
    let l = t.levels.len() - 1;
    let tol = T::lit(T::ORDER_TOL);
    let orders: Vec<Vec<usize>> = (0..l).map(|j| descending_order(|i| t.cdf(i, j), k, tol)).collect();
    // Per level, the right edges of the rearranged pieces.
    let edges: Vec<Vec<T>> = orders
        .iter()
        .map(|ord| {
            let mut acc = T::zero();
            ord.iter()
                .enumerate()
                .map(|(pos, &i)| {
                    acc = acc + t.weights[i];
                    if pos + 1 == k {
                        T::one()
                    } else {
                        acc
                    }
                })
                .collect()
        })
        .collect();
    let mut all: Vec<T> = vec![T::zero()];
    for e in &edges {
        all.extend_from_slice(e);
    }
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let breaks = coalesce(all);
    let two = T::lit(2.0);
    let cells = breaks.len() - 1;
    let mut mass = vec![T::zero(); cells * l];
    let mut cursor = vec![0usize; l];
    for c in 0..cells {
        let mid = (breaks[c] + breaks[c + 1]) / two;
        let width = breaks[c + 1] - breaks[c];
        let mut below = T::zero();
        for j in 0..l {
            while cursor[j] + 1 < k && edges[j][cursor[j]] <= mid {
                cursor[j] += 1;
            }
            let f = t.cdf(orders[j][cursor[j]], j);
            mass[c * l + j] = (width * (f - below)).max(T::zero());
            below = f;
        }
    }
    GridCopula::from_parts(breaks, t.levels.clone(), mass)
}

/// Exact SI rearrangement of a grid copula: the conditional table is
/// [refined](ConditionalTable::refined) at every crossing of two conditional
/// CDFs before the level-wise rearrangement. At the original levels this
/// agrees with [`si_rearrange`]; between levels it can lie strictly below it.
pub fn si_rearrange_grid<T: Scalar>(g: &GridCopula<T>) -> GridCopula<T> {
    multivariate_rearrange(&ConditionalTable::from_grid(g).refined())
}
