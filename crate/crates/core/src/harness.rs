//! Monte Carlo harness: simulation tables, power curves and timing runs.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{
    classical_estimate, estimate_many, estimate_r, pseudo_observations, BandwidthMode, RankedSample, TiePolicy,
};
use crate::inference::{chatterjee_test, permutation_tests, PermutationOptions, ScreenRow};
use crate::measures::MeasureKind;
use crate::models::CopulaModel;
use crate::rng::{child_seed, rng_from_seed};

/// Reference values of the rearranged measures for the noisy parabola model,
/// obtained once from very large samples. Only σ ∈ {0.1, 0.3} are tabulated.
pub fn parabola_reference(sigma: f64, kind: MeasureKind) -> Option<f64> {
    let table: [(f64, [(MeasureKind, f64); 4]); 2] = [
        (
            0.1,
            [(MeasureKind::Rho, 0.580), (MeasureKind::Tau, 0.404), (MeasureKind::R, 0.22), (MeasureKind::Zeta1, 0.46)],
        ),
        (
            0.3,
            [(MeasureKind::Rho, 0.232), (MeasureKind::Tau, 0.155), (MeasureKind::R, 0.04), (MeasureKind::Zeta1, 0.19)],
        ),
    ];
    table.iter().find(|(s, _)| *s == sigma).and_then(|(_, vals)| vals.iter().find(|(k, _)| *k == kind).map(|&(_, v)| v))
}

/// Population value of `R_μ` under `model`: closed form when available,
/// otherwise the tabulated parabola reference.
pub fn true_value(model: &CopulaModel, kind: MeasureKind) -> Option<f64> {
    match (model.analytic_value(kind), model) {
        (Ok(v), _) => Some(v),
        (Err(_), CopulaModel::NoisyParabola { sigma }) => parabola_reference(*sigma, kind),
        _ => None,
    }
}

/// Draws a sample from `model` and reduces it to ranks.
pub fn sample_ranks(model: &CopulaModel, n: usize, policy: TiePolicy, seed: u64) -> Result<RankedSample> {
    let pairs = model.sample(n, child_seed(seed, 0))?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    pseudo_observations(&xs, &ys, policy, child_seed(seed, 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub model: CopulaModel,
    pub n: usize,
    pub reps: usize,
    pub kinds: Vec<MeasureKind>,
    pub seed: u64,
    pub bandwidth: BandwidthMode,
    pub tie_policy: TiePolicy,
}

/// Mean and standard deviation of the estimates for one measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRow {
    pub model: CopulaModel,
    pub n: usize,
    pub kind: MeasureKind,
    pub true_value: Option<f64>,
    pub mean: f64,
    pub sd: f64,
    pub classical_mean: f64,
    pub classical_sd: f64,
    pub mean_n1: f64,
    pub mean_n2: f64,
}

/// Sample mean and (n - 1)-normalized standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Repeats estimation on independent samples; replication `r` uses seed
/// `child_seed(seed, r)`, so the result does not depend on thread count.
pub fn simulate(cfg: &SimulationConfig) -> Result<Vec<SimulationRow>> {
    if cfg.reps == 0 || cfg.kinds.is_empty() {
        return Err(Error::InvalidParameter("simulation needs at least one replication and one measure".into()));
    }
    for k in &cfg.kinds {
        k.validate()?;
    }
    struct Rep {
        r: Vec<f64>,
        classical: Vec<f64>,
        n1: usize,
        n2: usize,
    }
    let reps: Vec<Rep> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let s = sample_ranks(&cfg.model, cfg.n, cfg.tie_policy, child_seed(cfg.seed, r as u64))?;
            let (values, b) = estimate_many(&s, &cfg.kinds, cfg.bandwidth)?;
            let classical = cfg.kinds.iter().map(|&k| classical_estimate(&s, k, b)).collect::<Result<_>>()?;
            Ok(Rep { r: values, classical, n1: b.n1, n2: b.n2 })
        })
        .collect::<Result<_>>()?;
    let n1: Vec<f64> = reps.iter().map(|r| r.n1 as f64).collect();
    let n2: Vec<f64> = reps.iter().map(|r| r.n2 as f64).collect();
    Ok(cfg
        .kinds
        .iter()
        .enumerate()
        .map(|(j, &kind)| {
            let (mean, sd) = mean_sd(&reps.iter().map(|r| r.r[j]).collect::<Vec<_>>());
            let (classical_mean, classical_sd) = mean_sd(&reps.iter().map(|r| r.classical[j]).collect::<Vec<_>>());
            SimulationRow {
                model: cfg.model,
                n: cfg.n,
                kind,
                true_value: true_value(&cfg.model, kind),
                mean,
                sd,
                classical_mean,
                classical_sd,
                mean_n1: mean_sd(&n1).0,
                mean_n2: mean_sd(&n2).0,
            }
        })
        .collect())
}

/// One-parameter model family swept by the power study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    /// Gaussian copula, parameter p.
    Gaussian,
    /// Gumbel copula, parameter θ.
    Gumbel,
    /// Noisy parabola, parameter 1/σ (0 means independence).
    Parabola,
}

impl ModelFamily {
    pub fn at(&self, param: f64) -> Result<CopulaModel> {
        match self {
            ModelFamily::Gaussian => CopulaModel::gaussian(param),
            ModelFamily::Gumbel => CopulaModel::gumbel(param),
            ModelFamily::Parabola if param == 0.0 => Ok(CopulaModel::Independence),
            ModelFamily::Parabola if param > 0.0 && param.is_finite() => CopulaModel::noisy_parabola(1.0 / param),
            ModelFamily::Parabola => {
                Err(Error::InvalidParameter(format!("parabola sweep parameter 1/sigma must be >= 0, got {param}")))
            }
        }
    }

    pub fn parameter_name(&self) -> &'static str {
        match self {
            ModelFamily::Gaussian => "p",
            ModelFamily::Gumbel => "theta",
            ModelFamily::Parabola => "inv_sigma",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::Gaussian => "gauss",
            ModelFamily::Gumbel => "gumbel",
            ModelFamily::Parabola => "parabola",
        })
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        // Accept a bare family name or a full model spec such as `gauss:p=0.5`.
        let name = s.split(':').next().unwrap_or("").trim().to_ascii_lowercase();
        match name.as_str() {
            "gauss" => Ok(ModelFamily::Gaussian),
            "gumbel" => Ok(ModelFamily::Gumbel),
            "parabola" => Ok(ModelFamily::Parabola),
            _ => Err(Error::InvalidParameter(format!("`{s}` is not a sweepable family (gauss, gumbel, parabola)"))),
        }
    }
}

/// Permutation tests on rearranged measures always included in power runs.
pub const POWER_KINDS: [MeasureKind; 3] = [MeasureKind::Rho, MeasureKind::Tau, MeasureKind::Zeta1];

/// Label of the asymptotic Chatterjee test in power output.
pub const CHATTERJEE_LABEL: &str = "xi";

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub family: ModelFamily,
    pub params: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
    pub bandwidth: BandwidthMode,
    pub fast: bool,
}

/// Rejection rate of one test at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub param: f64,
    pub test: String,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub rows: Vec<PowerRow>,
    /// Per test, whether the rejection rate is nondecreasing along the sweep
    /// (in the order the parameters were given).
    pub monotone: Vec<(String, bool)>,
}

impl PowerReport {
    pub fn rate(&self, param: f64, test: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.param == param && r.test == test).map(|r| r.rejection_rate)
    }

    pub fn tests(&self) -> Vec<String> {
        self.monotone.iter().map(|(t, _)| t.clone()).collect()
    }
}

/// Rejection rates of the rearranged permutation tests (R_ρ, R_τ, ζ₁) and
/// Chatterjee's asymptotic test along a parameter sweep. Replication `r` at
/// sweep point `i` is seeded by `child_seed(child_seed(seed, i), r)`.
pub fn power(cfg: &PowerConfig) -> Result<PowerReport> {
    if cfg.params.is_empty() || cfg.reps == 0 {
        return Err(Error::InvalidParameter("power study needs at least one parameter and one replication".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("significance level must lie in (0, 1), got {}", cfg.alpha)));
    }
    let models = cfg.params.iter().map(|&p| cfg.family.at(p)).collect::<Result<Vec<_>>>()?;
    let names: Vec<String> =
        POWER_KINDS.iter().map(|k| format!("R_{k}")).chain(std::iter::once(CHATTERJEE_LABEL.to_string())).collect();
    let mut rows = Vec::new();
    for (i, (model, &param)) in models.iter().zip(&cfg.params).enumerate() {
        let point_seed = child_seed(cfg.seed, i as u64);
        let rejections: Vec<Vec<bool>> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| {
                let rep_seed = child_seed(point_seed, r as u64);
                let s = sample_ranks(model, cfg.n, TiePolicy::Random, child_seed(rep_seed, 0))?;
                let opts = PermutationOptions {
                    replicates: cfg.permutations,
                    seed: child_seed(rep_seed, 1),
                    bandwidth: cfg.bandwidth,
                    fast: cfg.fast,
                };
                let mut out: Vec<bool> =
                    permutation_tests(&s, &POWER_KINDS, &opts)?.iter().map(|t| t.p_value <= cfg.alpha).collect();
                out.push(chatterjee_test(&s)?.p_value <= cfg.alpha);
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (j, name) in names.iter().enumerate() {
            let hits = rejections.iter().filter(|r| r[j]).count();
            rows.push(PowerRow { param, test: name.clone(), rejection_rate: hits as f64 / cfg.reps as f64 });
        }
    }
    let monotone = names
        .iter()
        .map(|name| {
            let rates: Vec<f64> = rows.iter().filter(|r| &r.test == name).map(|r| r.rejection_rate).collect();
            (name.clone(), rates.windows(2).all(|w| w[1] >= w[0]))
        })
        .collect();
    Ok(PowerReport { rows, monotone })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub model: CopulaModel,
    pub ns: Vec<usize>,
    pub kind: MeasureKind,
    pub bandwidth: BandwidthMode,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    /// Median wall-clock seconds over the runs.
    pub seconds: f64,
    /// `seconds / (n ln n)`.
    pub per_nlogn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log time against log n (absent for one n).
    pub exponent: Option<f64>,
    /// `(t_last / t_first) / (n_last ln n_last / (n_first ln n_first))`:
    /// 1 for exact n log n scaling (absent for one n).
    pub nlogn_ratio: Option<f64>,
}

/// Times ranking plus `estimate_r` on fresh samples; each size uses the
/// median of `runs` timings.
pub fn bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.runs == 0 || cfg.ns.is_empty() {
        return Err(Error::InvalidParameter("bench needs at least one size and one run".into()));
    }
    let mut rows = Vec::with_capacity(cfg.ns.len());
    for (i, &n) in cfg.ns.iter().enumerate() {
        let seed = child_seed(cfg.seed, i as u64);
        let (xs, ys): (Vec<f64>, Vec<f64>) = cfg.model.sample(n, child_seed(seed, 0))?.into_iter().unzip();
        let mut times = Vec::with_capacity(cfg.runs);
        for _ in 0..cfg.runs {
            let start = Instant::now();
            let s = pseudo_observations(&xs, &ys, TiePolicy::Random, child_seed(seed, 1))?;
            std::hint::black_box(estimate_r(&s, cfg.kind, cfg.bandwidth)?);
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        let seconds = times[times.len() / 2];
        let nf = n as f64;
        rows.push(BenchRow { n, seconds, per_nlogn: seconds / (nf * nf.ln().max(1.0)) });
    }
    let (exponent, nlogn_ratio) = if rows.len() > 1 {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.seconds.max(1e-12).ln()).collect();
        let (mx, my) = (mean_sd(&xs).0, mean_sd(&ys).0);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        (Some(sxy / sxx), Some(last.per_nlogn / first.per_nlogn))
    } else {
        (None, None)
    };
    Ok(BenchReport { rows, exponent, nlogn_ratio })
}

/// Role of a row in the planted screening scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantedRole {
    Parabola,
    Monotone,
    Noise,
}

/// Synthetic screening data: rows observed at `t` equally spaced time points
/// that serve as the response.
#[derive(Debug, Clone)]
pub struct PlantedScreen {
    pub rows: Vec<ScreenRow>,
    pub response: Vec<Option<f64>>,
    pub roles: Vec<PlantedRole>,
}

impl PlantedScreen {
    pub fn ids(&self, role: PlantedRole) -> Vec<String> {
        self.rows.iter().zip(&self.roles).filter(|(_, r)| **r == role).map(|(row, _)| row.id.clone()).collect()
    }
}

/// Rows `(2u - 1)^2 + noise·Z` (parabola), `u + noise·Z` (monotone) and `Z`
/// (noise) with `u = i / (t + 1)` and standard normal `Z`.
pub fn planted_screen(counts: [usize; 3], t: usize, noise: f64, seed: u64) -> PlantedScreen {
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::new();
    let mut roles = Vec::new();
    let plan =
        [(PlantedRole::Parabola, "parabola"), (PlantedRole::Monotone, "monotone"), (PlantedRole::Noise, "noise")];
    for ((role, name), &count) in plan.iter().zip(&counts) {
        for j in 0..count {
            let values = (1..=t)
                .map(|i| {
                    let u = i as f64 / (t + 1) as f64;
                    let z: f64 = StandardNormal.sample(&mut rng);
                    Some(match role {
                        PlantedRole::Parabola => (2.0 * u - 1.0).powi(2) + noise * z,
                        PlantedRole::Monotone => u + noise * z,
                        PlantedRole::Noise => z,
                    })
                })
                .collect();
            rows.push(ScreenRow { id: format!("{name}{}", j + 1), values });
            roles.push(*role);
        }
    }
    PlantedScreen { rows, response: (1..=t).map(|i| Some(i as f64)).collect(), roles }
}
