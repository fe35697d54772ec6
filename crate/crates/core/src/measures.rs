//! Classical concordance and distance-based measures of grid copulas, and
//! their rearranged versions.

use std::fmt;
use std::str::FromStr;

use crate::checkerboard::{abs_linear_pow_integral, merge_breaks, CheckerboardMatrix, GridCopula};
use crate::error::{Error, Result};
use crate::rearrangement::si_rearrange_grid;
use crate::scalar::{pairwise_sum, Scalar};
use crate::special::{adaptive_gl, ln_beta};

/// A dependence measure of a bivariate copula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    /// Spearman's ρ.
    Rho,
    /// Kendall's τ.
    Tau,
    /// Gini's γ.
    Gini,
    /// Blomqvist's β. Its rearranged version does not characterize
    /// independence or complete dependence.
    Blomqvist,
    /// Schweizer–Wolff σ_p, `p >= 1`.
    SchweizerWolff(f64),
    /// ζ₁ = 3 ∫∫ |∂₁C(u, v) - v| du dv.
    Zeta1,
    /// Chatterjee's rank correlation, 6 ∫∫ (∂₁C(u, v) - v)² du dv.
    R,
}

impl MeasureKind {
    /// The measures whose rearranged versions are dependence measures in the
    /// strong sense (zero exactly at Π, one exactly at complete dependence).
    pub const AXIOM_VALID: [MeasureKind; 7] = [
        MeasureKind::Rho,
        MeasureKind::Tau,
        MeasureKind::Gini,
        MeasureKind::SchweizerWolff(1.0),
        MeasureKind::SchweizerWolff(2.0),
        MeasureKind::Zeta1,
        MeasureKind::R,
    ];

    pub fn is_axiom_valid(&self) -> bool {
        !matches!(self, MeasureKind::Blomqvist)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MeasureKind::SchweizerWolff(p) if !(p >= 1.0 && p.is_finite()) => {
                Err(Error::InvalidParameter(format!("Schweizer-Wolff needs p >= 1, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureKind::Rho => f.write_str("rho"),
            MeasureKind::Tau => f.write_str("tau"),
            MeasureKind::Gini => f.write_str("gini"),
            MeasureKind::Blomqvist => f.write_str("beta"),
            MeasureKind::SchweizerWolff(p) => write!(f, "sw{p}"),
            MeasureKind::Zeta1 => f.write_str("zeta1"),
            MeasureKind::R => f.write_str("r"),
        }
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().as_str() {
            "rho" | "spearman" => MeasureKind::Rho,
            "tau" | "kendall" => MeasureKind::Tau,
            "gini" | "gamma" => MeasureKind::Gini,
            "beta" | "blomqvist" => MeasureKind::Blomqvist,
            "zeta1" => MeasureKind::Zeta1,
            "r" | "xi" | "chatterjee" => MeasureKind::R,
            other => match other.strip_prefix("sw") {
                Some(p) => {
                    let p: f64 = p
                        .trim_start_matches(':')
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("unknown measure `{s}`")))?;
                    MeasureKind::SchweizerWolff(p)
                }
                None => return Err(Error::InvalidParameter(format!("unknown measure `{s}`"))),
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Concordance function `Q(C1, C2) = 4 ∫∫ C1 dC2 - 1`, exact on the merged grid.
pub fn concordance_q<T: Scalar>(g1: &GridCopula<T>, g2: &GridCopula<T>) -> T {
    let ub = merge_breaks(g1.u_breaks(), g2.u_breaks());
    let vb = merge_breaks(g1.v_breaks(), g2.v_breaks());
    let w = vb.len();
    let nodes: Vec<T> = ub.iter().flat_map(|&u| vb.iter().map(move |&v| g1.cdf(u, v))).collect();
    let mut terms = Vec::with_capacity((ub.len() - 1) * (w - 1));
    for i in 0..ub.len() - 1 {
        for j in 0..w - 1 {
            let dens = g2.density(ub[i], vb[j]);
            if dens == T::zero() {
                continue;
            }
            let area = (ub[i + 1] - ub[i]) * (vb[j + 1] - vb[j]);
            let corners = nodes[i * w + j] + nodes[(i + 1) * w + j] + nodes[i * w + j + 1] + nodes[(i + 1) * w + j + 1];
            terms.push(dens * area * corners);
        }
    }
    pairwise_sum(&terms) - T::one()
}

/// Evaluates a measure on a grid copula.
pub fn measure<T: Scalar>(g: &GridCopula<T>, kind: MeasureKind) -> Result<T> {
    kind.validate()?;
    let four = T::lit(4.0);
    Ok(match kind {
        MeasureKind::Rho => {
            T::lit(12.0) * cell_integral(g, |w, h, c| w * h * c.iter().copied().sum::<T>() / four) - T::lit(3.0)
        }
        MeasureKind::Tau => {
            let l = g.v_cells();
            let terms: Vec<T> = (0..g.u_cells())
                .flat_map(|k| (0..l).map(move |j| (k, j)))
                .map(|(k, j)| {
                    g.mass(k, j) * (g.node(k, j) + g.node(k + 1, j) + g.node(k, j + 1) + g.node(k + 1, j + 1))
                })
                .collect();
            pairwise_sum(&terms) - T::one()
        }
        MeasureKind::Gini => gini(g),
        MeasureKind::Blomqvist => {
            let half = T::lit(0.5);
            four * g.cdf(half, half) - T::one()
        }
        MeasureKind::SchweizerWolff(p) => schweizer_wolff(g, T::lit(p)),
        MeasureKind::Zeta1 => T::lit(3.0) * slice_deviation(g, T::one()),
        MeasureKind::R => T::lit(6.0) * slice_deviation(g, T::lit(2.0)),
    })
}

/// The rearranged measure: the measure of the SI rearrangement.
pub fn rearranged_measure<T: Scalar>(g: &GridCopula<T>, kind: MeasureKind) -> Result<T> {
    measure(&si_rearrange_grid(g), kind)
}

pub fn checkerboard_measure<T: Scalar>(a: &CheckerboardMatrix<T>, kind: MeasureKind) -> Result<T> {
    measure(&a.to_grid(), kind)
}

pub fn rearranged_checkerboard_measure<T: Scalar>(a: &CheckerboardMatrix<T>, kind: MeasureKind) -> Result<T> {
    rearranged_measure(&a.to_grid(), kind)
}

// Sums f(width, height, corner C-values) over grid cells.
fn cell_integral<T: Scalar>(g: &GridCopula<T>, f: impl Fn(T, T, [T; 4]) -> T) -> T {
    let (u, v) = (g.u_breaks(), g.v_breaks());
    let mut terms = Vec::with_capacity(g.u_cells() * g.v_cells());
    for k in 0..g.u_cells() {
        for j in 0..g.v_cells() {
            let c = [g.node(k, j), g.node(k + 1, j), g.node(k, j + 1), g.node(k + 1, j + 1)];
            terms.push(f(u[k + 1] - u[k], v[j + 1] - v[j], c));
        }
    }
    pairwise_sum(&terms)
}

fn gini<T: Scalar>(g: &GridCopula<T>) -> T {
    let one = T::one();
    let diag = merge_breaks(g.u_breaks(), g.v_breaks());
    let flipped: Vec<T> = g.v_breaks().iter().rev().map(|&v| one - v).collect();
    let anti = merge_breaks(g.u_breaks(), &flipped);
    // C restricted to either diagonal is quadratic between breakpoints, so
    // Simpson's rule is exact piecewise.
    let simpson = |b: &[T], f: &dyn Fn(T) -> T| {
        let terms: Vec<T> = b
            .windows(2)
            .map(|w| {
                let m = (w[0] + w[1]) / T::lit(2.0);
                (w[1] - w[0]) / T::lit(6.0) * (f(w[0]) + T::lit(4.0) * f(m) + f(w[1]))
            })
            .collect();
        pairwise_sum(&terms)
    };
    let d = simpson(&diag, &|t| g.cdf(t, t));
    let a = simpson(&anti, &|t| g.cdf(t, (one - t).max(T::zero())));
    T::lit(4.0) * (d + a) - T::lit(2.0)
}

// ∫∫ |∂₁C(u, v) - v|^p. Within a cell the integrand is linear in v.
fn slice_deviation<T: Scalar>(g: &GridCopula<T>, p: T) -> T {
    let (u, v) = (g.u_breaks(), g.v_breaks());
    let mut terms = Vec::with_capacity(g.u_cells() * g.v_cells());
    for k in 0..g.u_cells() {
        let w = u[k + 1] - u[k];
        for j in 0..g.v_cells() {
            let g0 = g.row_cum(k, j) / w - v[j];
            let g1 = g.row_cum(k, j + 1) / w - v[j + 1];
            terms.push(w * (v[j + 1] - v[j]) * abs_linear_pow_integral(g0, g1, p));
        }
    }
    pairwise_sum(&terms)
}

/// `‖M - Π‖_p^p = 2 B(p + 2, p + 1) / (p + 1)`.
fn sw_normalizer<T: Scalar>(p: T) -> T {
    let pf = p.as_f64();
    if pf == 1.0 {
        return T::one() / T::lit(12.0);
    }
    if pf == 2.0 {
        return T::one() / T::lit(90.0);
    }
    T::lit(2.0 / (pf + 1.0) * ln_beta(pf + 2.0, pf + 1.0).exp())
}

fn schweizer_wolff<T: Scalar>(g: &GridCopula<T>, p: T) -> T {
    let (u, v) = (g.u_breaks(), g.v_breaks());
    let two = T::lit(2.0);
    let mut terms = Vec::with_capacity(g.u_cells() * g.v_cells());
    for k in 0..g.u_cells() {
        for j in 0..g.v_cells() {
            let area = (u[k + 1] - u[k]) * (v[j + 1] - v[j]);
            let d00 = g.node(k, j) - u[k] * v[j];
            let d10 = g.node(k + 1, j) - u[k + 1] * v[j];
            let d01 = g.node(k, j + 1) - u[k] * v[j + 1];
            let d11 = g.node(k + 1, j + 1) - u[k + 1] * v[j + 1];
            terms.push(area * bilinear_abs_pow(d00, d10, d01, d11, p, two));
        }
    }
    let total = pairwise_sum(&terms);
    (total / sw_normalizer(p)).powf(T::one() / p)
}

// ∫_0^1∫_0^1 |bilinear|^p for the given corner values.
fn bilinear_abs_pow<T: Scalar>(d00: T, d10: T, d01: T, d11: T, p: T, two: T) -> T {
    let zero = T::zero();
    if p == two {
        let same = d00 * d00 + d10 * d10 + d01 * d01 + d11 * d11;
        let edge = d00 * d10 + d00 * d01 + d10 * d11 + d01 * d11;
        let cross = d00 * d11 + d10 * d01;
        return same / T::lit(9.0) + edge / T::lit(9.0) + cross / T::lit(18.0);
    }
    let all_pos = d00 >= zero && d10 >= zero && d01 >= zero && d11 >= zero;
    let all_neg = d00 <= zero && d10 <= zero && d01 <= zero && d11 <= zero;
    if p == T::one() && (all_pos || all_neg) {
        return ((d00 + d10 + d01 + d11) / T::lit(4.0)).abs();
    }
    // Inner integral over the v-direction is exact; the outer one is smooth
    // between the sign changes of the two v-edges.
    let lower = |a: T| d00 + (d10 - d00) * a;
    let upper = |a: T| d01 + (d11 - d01) * a;
    let inner = |a: T| abs_linear_pow_integral(lower(a), upper(a), p);
    let mut cuts = vec![zero, T::one()];
    for (e0, e1) in [(d00, d10), (d01, d11)] {
        if e0 * e1 < zero {
            cuts.push(e0 / (e0 - e1));
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let scale = [d00, d10, d01, d11].iter().fold(zero, |m, x| m.max(x.abs()));
    if scale == zero {
        return zero;
    }
    let tol = T::epsilon() * T::lit(16.0) * scale.powf(p);
    cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| adaptive_gl(&inner, w[0], w[1], tol)).sum()
}
