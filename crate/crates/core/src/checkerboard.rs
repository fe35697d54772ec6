//! Finite copula representations.
//!
//! A [`CheckerboardMatrix`] is an `N1 × N2` nonnegative matrix whose columns sum
//! to `N1` and rows to `N2`; its copula has density `a[k][l]` on cell `(k, l)`
//! of the uniform grid. A [`GridCopula`] generalizes this to arbitrary
//! breakpoints and stores cell masses directly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::models::CopulaModel;
use crate::rearrangement::StepFunction;
use crate::scalar::{pairwise_sum, Scalar};
use crate::special::adaptive_gl;

/// Checkerboard matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckerboardMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> CheckerboardMatrix<T> {
    /// Validates the margin constraints and rescales away rounding-level drift.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix("matrix must have at least one row and column".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        let mut m = CheckerboardMatrix { rows, cols, data };
        let tol = T::lit(T::MARGIN_TOL);
        for (idx, x) in m.data.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidMatrix(format!("non-finite entry at index {idx}")));
            }
            if *x < T::zero() {
                if *x < -tol {
                    return Err(Error::InvalidMatrix(format!(
                        "negative entry {x} at ({}, {})",
                        idx / cols,
                        idx % cols
                    )));
                }
                *x = T::zero();
            }
        }
        let n1 = T::from_usize_lossy(rows);
        let n2 = T::from_usize_lossy(cols);
        for k in 0..rows {
            let s = m.row_sum(k);
            if ((s - n2) / n2).abs() > tol {
                return Err(Error::InvalidMatrix(format!("row {k} sums to {s}, expected {cols}")));
            }
        }
        for l in 0..cols {
            let s = m.col_sum(l);
            if ((s - n1) / n1).abs() > tol {
                return Err(Error::InvalidMatrix(format!("column {l} sums to {s}, expected {rows}")));
            }
        }
        m.renormalize();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n1 = rows.len();
        let n2 = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n2) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::new(n1, n2, rows.concat())
    }

    /// Built by code that guarantees the margins mathematically.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        CheckerboardMatrix { rows, cols, data }
    }

    /// The independence copula Π: every entry 1.
    pub fn independence(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![T::one(); rows * cols])
    }

    /// The comonotone copula at resolution `n`: `n` times the identity.
    pub fn comonotone(n: usize) -> Self {
        Self::from_permutation(&(0..n).collect::<Vec<_>>()).expect("identity is a permutation")
    }

    /// The countermonotone copula at resolution `n`.
    pub fn countermonotone(n: usize) -> Self {
        Self::from_permutation(&(0..n).rev().collect::<Vec<_>>()).expect("reversal is a permutation")
    }

    /// `n` times the permutation matrix with a one at `(i, perm[i])`.
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        let mut data = vec![T::zero(); n * n];
        for (i, &j) in perm.iter().enumerate() {
            if j >= n || seen[j] {
                return Err(Error::InvalidMatrix("not a permutation".into()));
            }
            seen[j] = true;
            data[i * n + j] = T::from_usize_lossy(n);
        }
        if n == 0 {
            return Err(Error::InvalidMatrix("empty permutation".into()));
        }
        Ok(Self::from_raw(n, n, data))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> T {
        self.data[k * self.cols + l]
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols).map(<[T]>::to_vec).collect()
    }

    pub fn row_sum(&self, k: usize) -> T {
        self.row(k).iter().copied().sum()
    }

    pub fn col_sum(&self, l: usize) -> T {
        (0..self.rows).map(|k| self.get(k, l)).sum()
    }

    /// Largest relative deviation of any row or column sum from its target.
    pub fn margin_error(&self) -> f64 {
        let n1 = T::from_usize_lossy(self.rows);
        let n2 = T::from_usize_lossy(self.cols);
        let rows = (0..self.rows).map(|k| ((self.row_sum(k) - n2) / n2).abs());
        let cols = (0..self.cols).map(|l| ((self.col_sum(l) - n1) / n1).abs());
        rows.chain(cols).fold(0.0, |acc, e| acc.max(e.as_f64()))
    }

    // Rescale rows then columns; skipped when the drift is at rounding level
    // so already-normalized input is returned bit-for-bit.
    fn renormalize(&mut self) {
        let slack = T::epsilon() * T::lit(64.0);
        for _ in 0..3 {
            let n2 = T::from_usize_lossy(self.cols);
            for k in 0..self.rows {
                let s = self.row_sum(k);
                if s > T::zero() && ((s - n2) / n2).abs() > slack {
                    let f = n2 / s;
                    for x in &mut self.data[k * self.cols..(k + 1) * self.cols] {
                        *x = *x * f;
                    }
                }
            }
            let n1 = T::from_usize_lossy(self.rows);
            for l in 0..self.cols {
                let s = self.col_sum(l);
                if s > T::zero() && ((s - n1) / n1).abs() > slack {
                    let f = n1 / s;
                    for k in 0..self.rows {
                        self.data[k * self.cols + l] = self.data[k * self.cols + l] * f;
                    }
                }
            }
        }
    }

    pub fn reverse_rows(&self) -> Self {
        let data = self.data.chunks(self.cols).rev().flatten().copied().collect();
        Self::from_raw(self.rows, self.cols, data)
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for l in 0..self.cols {
            for k in 0..self.rows {
                data.push(self.get(k, l));
            }
        }
        Self::from_raw(self.cols, self.rows, data)
    }

    /// Cumulative row sums `B[k][l] = sum_{j < l} a[k][j]`, `l = 0..=cols`.
    pub fn cumulative_rows(&self) -> Vec<T> {
        let w = self.cols + 1;
        let mut b = vec![T::zero(); self.rows * w];
        for k in 0..self.rows {
            let mut acc = T::zero();
            for l in 0..self.cols {
                acc = acc + self.get(k, l);
                b[k * w + l + 1] = acc;
            }
        }
        b
    }

    /// Tolerance under which cumulative row sums count as ordered.
    pub(crate) fn order_tol(&self) -> T {
        T::lit(T::ORDER_TOL) * T::from_usize_lossy(self.cols.max(1))
    }

    /// Whether the rows are ordered by majorization, i.e. every column of
    /// cumulative row sums is nonincreasing in the row index. This is exactly
    /// the condition under which the checkerboard copula is stochastically
    /// increasing.
    pub fn is_stochastically_increasing(&self) -> bool {
        let b = self.cumulative_rows();
        let w = self.cols + 1;
        let tol = self.order_tol();
        (1..=self.cols).all(|l| (1..self.rows).all(|k| b[k * w + l] <= b[(k - 1) * w + l] + tol))
    }

    pub fn is_stochastically_decreasing(&self) -> bool {
        self.reverse_rows().is_stochastically_increasing()
    }

    /// Embeds into the uniform-grid [`GridCopula`] with masses `a / (N1 N2)`.
    pub fn to_grid(&self) -> GridCopula<T> {
        let scale = T::from_usize_lossy(self.rows) * T::from_usize_lossy(self.cols);
        let mass = self.data.iter().map(|&a| a / scale).collect();
        GridCopula::from_parts(uniform_breaks(self.rows), uniform_breaks(self.cols), mass)
    }

    /// Induced checkerboard of a model: `a = N1 N2 V_C(cell)` from four corner
    /// evaluations of the model CDF.
    pub fn induced(model: &CopulaModel, n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter("resolution must be positive".into()));
        }
        let w = n2 + 1;
        let mut grid = vec![0.0; (n1 + 1) * w];
        for i in 0..=n1 {
            for j in 0..=n2 {
                grid[i * w + j] = model.cdf(i as f64 / n1 as f64, j as f64 / n2 as f64)?;
            }
        }
        let scale = (n1 * n2) as f64;
        let mut data = Vec::with_capacity(n1 * n2);
        for k in 0..n1 {
            for l in 0..n2 {
                let vol = grid[(k + 1) * w + l + 1] - grid[k * w + l + 1] - grid[(k + 1) * w + l] + grid[k * w + l];
                data.push(T::lit(vol.max(0.0) * scale));
            }
        }
        Self::new(n1, n2, data)
    }

    /// The `N1 × N2` checkerboard approximation of this (finer) checkerboard
    /// copula, using exact overlap areas between fine and coarse cells.
    pub fn coarsen(&self, n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter("bandwidth must be positive".into()));
        }
        if n1 > self.rows {
            return Err(Error::BandwidthTooLarge { requested: n1, available: self.rows });
        }
        if n2 > self.cols {
            return Err(Error::BandwidthTooLarge { requested: n2, available: self.cols });
        }
        let rsplit: Vec<_> = (0..self.rows).map(|i| CellSplit::new(i, self.rows, n1)).collect();
        let csplit: Vec<_> = (0..self.cols).map(|j| CellSplit::new(j, self.cols, n2)).collect();
        let mut out = vec![T::zero(); n1 * n2];
        for (i, rs) in rsplit.iter().enumerate() {
            for (j, cs) in csplit.iter().enumerate() {
                let p = self.get(i, j);
                if p == T::zero() {
                    continue;
                }
                for &(k, wu) in rs.parts() {
                    for &(l, wv) in cs.parts() {
                        out[k * n2 + l] = out[k * n2 + l] + p * T::from_usize_lossy(wu * wv);
                    }
                }
            }
        }
        let denom = T::from_usize_lossy(self.rows) * T::from_usize_lossy(self.cols);
        for x in &mut out {
            *x = *x / denom;
        }
        Ok(Self::from_raw(n1, n2, out))
    }

    /// Markov product `C_A * C_B`, whose checkerboard matrix is `(1/N) A B`
    /// where `N` is the shared inner resolution.
    pub fn markov_product(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let inner = T::from_usize_lossy(self.cols);
        let mut out = vec![T::zero(); self.rows * other.cols];
        for k in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(k, j);
                if a == T::zero() {
                    continue;
                }
                for m in 0..other.cols {
                    out[k * other.cols + m] = out[k * other.cols + m] + a * other.get(j, m);
                }
            }
        }
        for x in &mut out {
            *x = *x / inner;
        }
        Ok(Self::from_raw(self.rows, other.cols, out))
    }

    /// CSV form: first line `N1,N2`, then one line per row.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.rows, self.cols);
        for row in self.data.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Data("empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Data(format!("bad header `{header}`, expected `N1,N2`")))?;
        if dims.len() != 2 {
            return Err(Error::Data(format!("bad header `{header}`, expected `N1,N2`")));
        }
        let mut data = Vec::with_capacity(dims[0] * dims[1]);
        let mut nrows = 0;
        for line in lines {
            nrows += 1;
            let before = data.len();
            for tok in line.split(',') {
                let x: f64 = tok.trim().parse().map_err(|_| Error::Data(format!("bad number `{tok}`")))?;
                data.push(T::lit(x));
            }
            if data.len() - before != dims[1] {
                return Err(Error::Data(format!(
                    "row {nrows} has {} entries, expected {}",
                    data.len() - before,
                    dims[1]
                )));
            }
        }
        if nrows != dims[0] {
            return Err(Error::Data(format!("found {nrows} rows, expected {}", dims[0])));
        }
        Self::new(dims[0], dims[1], data)
    }
}

/// How fine cell `i` of a `fine`-cell partition of [0,1] splits over a coarser
/// `coarse`-cell partition. Weights are overlap lengths in units of
/// `1 / (fine * coarse)`, so a fine cell has total weight `coarse`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellSplit {
    parts: [(usize, usize); 2],
    len: usize,
}

impl CellSplit {
    pub(crate) fn new(i: usize, fine: usize, coarse: usize) -> Self {
        debug_assert!(coarse <= fine);
        let lo = i * coarse;
        let hi = lo + coarse;
        let k0 = lo / fine;
        let boundary = (k0 + 1) * fine;
        if hi <= boundary {
            CellSplit { parts: [(k0, coarse), (0, 0)], len: 1 }
        } else {
            CellSplit { parts: [(k0, boundary - lo), (k0 + 1, hi - boundary)], len: 2 }
        }
    }

    pub(crate) fn parts(&self) -> &[(usize, usize)] {
        &self.parts[..self.len]
    }
}

pub(crate) fn uniform_breaks<T: Scalar>(n: usize) -> Vec<T> {
    let nn = T::from_usize_lossy(n);
    (0..=n).map(|i| if i == n { T::one() } else { T::from_usize_lossy(i) / nn }).collect()
}

/// Copula with piecewise-constant density on a rectangular (possibly
/// non-uniform) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCopula<T> {
    u: Vec<T>,
    v: Vec<T>,
    mass: Vec<T>,
    // (K+1) x (L+1) cumulative masses: C at the grid nodes.
    cum: Vec<T>,
}

impl<T: Scalar> GridCopula<T> {
    pub fn new(u_breaks: Vec<T>, v_breaks: Vec<T>, mass: Vec<T>) -> Result<Self> {
        validate_breaks(&u_breaks, "u")?;
        validate_breaks(&v_breaks, "v")?;
        let k = u_breaks.len() - 1;
        let l = v_breaks.len() - 1;
        if mass.len() != k * l {
            return Err(Error::InvalidGrid(format!("expected {} cell masses, got {}", k * l, mass.len())));
        }
        if let Some(x) = mass.iter().find(|x| !x.is_finite() || **x < T::zero()) {
            return Err(Error::InvalidGrid(format!("invalid cell mass {x}")));
        }
        let tol = T::lit(T::MARGIN_TOL);
        for i in 0..k {
            let s: T = mass[i * l..(i + 1) * l].iter().copied().sum();
            if (s - (u_breaks[i + 1] - u_breaks[i])).abs() > tol {
                return Err(Error::InvalidGrid(format!("u-margin violated in cell row {i}")));
            }
        }
        for j in 0..l {
            let s: T = (0..k).map(|i| mass[i * l + j]).sum();
            if (s - (v_breaks[j + 1] - v_breaks[j])).abs() > tol {
                return Err(Error::InvalidGrid(format!("v-margin violated in cell column {j}")));
            }
        }
        Ok(Self::from_parts(u_breaks, v_breaks, mass))
    }

    pub(crate) fn from_parts(u: Vec<T>, v: Vec<T>, mass: Vec<T>) -> Self {
        let k = u.len() - 1;
        let l = v.len() - 1;
        let w = l + 1;
        let mut cum = vec![T::zero(); (k + 1) * w];
        for i in 0..k {
            let mut row = T::zero();
            for j in 0..l {
                row = row + mass[i * l + j];
                cum[(i + 1) * w + j + 1] = cum[i * w + j + 1] + row;
            }
        }
        GridCopula { u, v, mass, cum }
    }

    pub fn independence() -> Self {
        Self::from_parts(vec![T::zero(), T::one()], vec![T::zero(), T::one()], vec![T::one()])
    }

    pub fn u_breaks(&self) -> &[T] {
        &self.u
    }

    pub fn v_breaks(&self) -> &[T] {
        &self.v
    }

    pub fn masses(&self) -> &[T] {
        &self.mass
    }

    pub fn u_cells(&self) -> usize {
        self.u.len() - 1
    }

    pub fn v_cells(&self) -> usize {
        self.v.len() - 1
    }

    #[inline]
    pub fn mass(&self, k: usize, l: usize) -> T {
        self.mass[k * self.v_cells() + l]
    }

    /// C at grid node `(u_i, v_j)`.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> T {
        self.cum[i * (self.v_cells() + 1) + j]
    }

    /// `sum_{j < l} m[k][j]`: mass of u-cell `k` below level `v_l`.
    #[inline]
    pub fn row_cum(&self, k: usize, l: usize) -> T {
        self.node(k + 1, l) - self.node(k, l)
    }

    pub fn eval_cdf(&self, u: T, v: T) -> Result<T> {
        if !(u >= T::zero() && u <= T::one() && v >= T::zero() && v <= T::one()) {
            return Err(Error::Domain(u.as_f64(), v.as_f64()));
        }
        Ok(self.cdf(u, v))
    }

    /// C(u, v) for `(u, v)` already known to lie in the unit square.
    pub fn cdf(&self, u: T, v: T) -> T {
        let (k, a) = locate(&self.u, u);
        let (l, b) = locate(&self.v, v);
        let c00 = self.node(k, l);
        let c10 = self.node(k + 1, l);
        let c01 = self.node(k, l + 1);
        let c11 = self.node(k + 1, l + 1);
        c00 + a * (c10 - c00) + b * (c01 - c00) + a * b * (c11 - c10 - c01 + c00)
    }

    /// ∂₁C(u, v), right-continuous in `u`.
    pub fn partial1(&self, u: T, v: T) -> T {
        let (k, _) = locate(&self.u, u);
        let (l, b) = locate(&self.v, v);
        let w = self.u[k + 1] - self.u[k];
        (self.row_cum(k, l) + b * self.mass(k, l)) / w
    }

    /// Density at `(u, v)`.
    pub fn density(&self, u: T, v: T) -> T {
        let (k, _) = locate(&self.u, u);
        let (l, _) = locate(&self.v, v);
        self.mass(k, l) / ((self.u[k + 1] - self.u[k]) * (self.v[l + 1] - self.v[l]))
    }

    /// For each level `v_l`, `l = 1..=L`, the step function `u ↦ ∂₁C(u, v_l)`.
    pub fn partial1_slices(&self) -> Vec<StepFunction<T>> {
        (1..=self.v_cells())
            .map(|l| {
                let pieces = (0..self.u_cells())
                    .map(|k| {
                        let w = self.u[k + 1] - self.u[k];
                        (w, self.row_cum(k, l) / w)
                    })
                    .collect();
                StepFunction::from_pieces_unchecked(pieces)
            })
            .collect()
    }

    /// Whether every slice `u ↦ ∂₁C(u, v_l)` is nonincreasing.
    pub fn is_stochastically_increasing(&self) -> bool {
        let tol = T::lit(T::ORDER_TOL) * T::from_usize_lossy(self.u_cells().max(self.v_cells()));
        self.partial1_slices().iter().all(|s| s.is_nonincreasing(tol))
    }
}

impl<T: Scalar> From<&CheckerboardMatrix<T>> for GridCopula<T> {
    fn from(a: &CheckerboardMatrix<T>) -> Self {
        a.to_grid()
    }
}

fn validate_breaks<T: Scalar>(b: &[T], axis: &str) -> Result<()> {
    if b.len() < 2 {
        return Err(Error::InvalidGrid(format!("{axis}-breaks need at least two points")));
    }
    if b[0] != T::zero() || b[b.len() - 1] != T::one() {
        return Err(Error::InvalidGrid(format!("{axis}-breaks must start at 0 and end at 1")));
    }
    if b.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid(format!("{axis}-breaks must be strictly increasing")));
    }
    Ok(())
}

/// Cell index `k` with `b[k] <= x < b[k+1]` (right-continuous) and the local
/// coordinate in [0,1]. `x = 1` maps to the last cell.
#[inline]
pub(crate) fn locate<T: Scalar>(b: &[T], x: T) -> (usize, T) {
    let n = b.len() - 1;
    let k = b.partition_point(|&t| t <= x).saturating_sub(1).min(n - 1);
    let w = b[k + 1] - b[k];
    let a = ((x - b[k]) / w).max(T::zero()).min(T::one());
    (k, a)
}

/// Merges two sorted breakpoint lists, dropping points closer than the
/// scalar's breakpoint tolerance.
pub(crate) fn merge_breaks<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut all: Vec<T> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.partial_cmp(y).expect("finite breaks"));
    coalesce(all)
}

pub(crate) fn coalesce<T: Scalar>(sorted: Vec<T>) -> Vec<T> {
    let tol = T::lit(T::BREAK_TOL);
    let mut out: Vec<T> = Vec::with_capacity(sorted.len());
    for x in sorted {
        match out.last() {
            Some(&last) if x - last <= tol => {
                // Keep the exact endpoint 1.
                if x == T::one() {
                    *out.last_mut().expect("nonempty") = x;
                }
            }
            _ => out.push(x),
        }
    }
    if out.len() >= 2 && out[0] != T::zero() {
        out[0] = T::zero();
    }
    out
}

/// `∫_0^1 |f0 + (f1 - f0) t|^p dt`, exact for every `p >= 1`.
pub(crate) fn abs_linear_pow_integral<T: Scalar>(f0: T, f1: T, p: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let a0 = f0.abs();
    let a1 = f1.abs();
    if p == one {
        if f0 * f1 >= T::zero() {
            return (a0 + a1) / two;
        }
        return (a0 * a0 + a1 * a1) / (two * (a0 + a1));
    }
    if p == two {
        return (f0 * f0 + f0 * f1 + f1 * f1) / T::lit(3.0);
    }
    let pp1 = p + one;
    if f0 * f1 < T::zero() {
        // Root at t0 = a0 / (a0 + a1); each side integrates a linear ramp.
        let t0 = a0 / (a0 + a1);
        return (t0 * a0.powf(p) + (one - t0) * a1.powf(p)) / pp1;
    }
    let hi = a0.max(a1);
    let lo = a0.min(a1);
    if hi == T::zero() {
        return T::zero();
    }
    if (hi - lo) / hi < T::lit(1e-4) {
        return adaptive_gl(&|t: T| (a0 + (a1 - a0) * t).powf(p), T::zero(), one, T::epsilon() * hi.powf(p));
    }
    (hi.powf(pp1) - lo.powf(pp1)) / (pp1 * (hi - lo))
}

/// The `D_p` distance between two grid copulas:
/// `(∫∫ |∂₁C₁ - ∂₁C₂|^p du dv)^{1/p}`, integrated exactly on the merged grid.
pub fn d_p_distance<T: Scalar>(g1: &GridCopula<T>, g2: &GridCopula<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::InvalidParameter(format!("D_p needs p >= 1, got {p}")));
    }
    let ub = merge_breaks(&g1.u, &g2.u);
    let vb = merge_breaks(&g1.v, &g2.v);
    let two = T::lit(2.0);
    let mut terms = Vec::with_capacity(ub.len());
    for wu in ub.windows(2) {
        let um = (wu[0] + wu[1]) / two;
        let mut acc = T::zero();
        for wv in vb.windows(2) {
            let vm = (wv[0] + wv[1]) / two;
            // Slices are linear in v across a merged cell, so evaluate at the
            // cell's v-edges using the cell located by its midpoint.
            let d = |v: T| slice_value(g1, um, vm, v) - slice_value(g2, um, vm, v);
            acc = acc + (wv[1] - wv[0]) * abs_linear_pow_integral(d(wv[0]), d(wv[1]), p);
        }
        terms.push((wu[1] - wu[0]) * acc);
    }
    Ok(pairwise_sum(&terms).powf(T::one() / p))
}

// ∂₁C(u, v) using the cell that contains (um, vm), extended linearly in v.
fn slice_value<T: Scalar>(g: &GridCopula<T>, um: T, vm: T, v: T) -> T {
    let (k, _) = locate(&g.u, um);
    let (l, _) = locate(&g.v, vm);
    let h = g.v[l + 1] - g.v[l];
    let b = (v - g.v[l]) / h;
    (g.row_cum(k, l) + b * g.mass(k, l)) / (g.u[k + 1] - g.u[k])
}
