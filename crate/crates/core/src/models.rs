//! Parametric copula models used by the simulations: CDFs, samplers and the
//! known population values of the rearranged measures.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::measures::MeasureKind;
use crate::rng::rng_from_seed;
use crate::special::{adaptive_simpson, bvn_lower, normal_quantile};

/// A bivariate dependence model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CopulaModel {
    /// Π(u, v) = uv.
    Independence,
    /// M(u, v) = min(u, v).
    Comonotone,
    /// W(u, v) = max(u + v - 1, 0).
    Countermonotone,
    /// Gaussian copula with correlation `p` in (-1, 1).
    Gaussian { p: f64 },
    /// Gumbel copula, `theta >= 1`.
    Gumbel { theta: f64 },
    /// Ordinal sum: 2Π on [0, 1/2]², M elsewhere. Stochastically increasing,
    /// different from M, yet Blomqvist's β equals 1.
    OrdinalSumHalfPi,
    /// `Y = (X - 1/2)² + σZ` with X uniform and Z standard normal. Sampling only.
    NoisyParabola { sigma: f64 },
}

impl CopulaModel {
    pub fn gaussian(p: f64) -> Result<Self> {
        let m = CopulaModel::Gaussian { p };
        m.validate()?;
        Ok(m)
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        let m = CopulaModel::Gumbel { theta };
        m.validate()?;
        Ok(m)
    }

    pub fn noisy_parabola(sigma: f64) -> Result<Self> {
        let m = CopulaModel::NoisyParabola { sigma };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CopulaModel::Gaussian { p } if !(p > -1.0 && p < 1.0) => {
                Err(Error::InvalidParameter(format!("gaussian correlation must lie in (-1, 1), got {p}")))
            }
            CopulaModel::Gumbel { theta } if !(theta >= 1.0 && theta.is_finite()) => {
                Err(Error::InvalidParameter(format!("gumbel theta must be >= 1, got {theta}")))
            }
            CopulaModel::NoisyParabola { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidParameter(format!("parabola sigma must be >= 0, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn has_cdf(&self) -> bool {
        !matches!(self, CopulaModel::NoisyParabola { .. })
    }

    /// Copula distribution function C(u, v).
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        self.validate()?;
        if !self.has_cdf() {
            return Err(Error::UnsupportedModel(self.to_string()));
        }
        if !((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)) {
            return Err(Error::Domain(u, v));
        }
        if u == 0.0 || v == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(v);
        }
        if v == 1.0 {
            return Ok(u);
        }
        let c = match *self {
            CopulaModel::Independence => u * v,
            CopulaModel::Comonotone => u.min(v),
            CopulaModel::Countermonotone => (u + v - 1.0).max(0.0),
            CopulaModel::Gaussian { p } => bvn_lower(normal_quantile(u), normal_quantile(v), p),
            CopulaModel::Gumbel { theta } => {
                let s = (-u.ln()).powf(theta) + (-v.ln()).powf(theta);
                (-s.powf(1.0 / theta)).exp()
            }
            CopulaModel::OrdinalSumHalfPi => {
                if u <= 0.5 && v <= 0.5 {
                    2.0 * u * v
                } else {
                    u.min(v)
                }
            }
            CopulaModel::NoisyParabola { .. } => unreachable!(),
        };
        // Rounding in the special functions can leave the Fréchet bounds by an ulp.
        Ok(c.clamp((u + v - 1.0).max(0.0), u.min(v)))
    }

    /// Mass the copula assigns to `[u1, u2] × [v1, v2]`.
    pub fn volume(&self, u1: f64, u2: f64, v1: f64, v2: f64) -> Result<f64> {
        Ok(self.cdf(u2, v2)? - self.cdf(u1, v2)? - self.cdf(u2, v1)? + self.cdf(u1, v1)?)
    }

    /// Draws `n` i.i.d. pairs. Copula models return uniform-margin pairs except
    /// the Gaussian (correlated standard normals) and the parabola (raw X, Y).
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let pair = match *self {
                CopulaModel::Independence => (rng.random::<f64>(), rng.random::<f64>()),
                CopulaModel::Comonotone => {
                    let u = rng.random::<f64>();
                    (u, u)
                }
                CopulaModel::Countermonotone => {
                    let u = rng.random::<f64>();
                    (u, 1.0 - u)
                }
                CopulaModel::Gaussian { p } => {
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    (z1, p * z1 + (1.0 - p * p).sqrt() * z2)
                }
                CopulaModel::Gumbel { theta } => sample_gumbel(theta, &mut rng),
                CopulaModel::OrdinalSumHalfPi => {
                    if rng.random::<f64>() < 0.5 {
                        (0.5 * rng.random::<f64>(), 0.5 * rng.random::<f64>())
                    } else {
                        let t = 0.5 + 0.5 * rng.random::<f64>();
                        (t, t)
                    }
                }
                CopulaModel::NoisyParabola { sigma } => {
                    let x = rng.random::<f64>();
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let y = if sigma == 0.0 { (x - 0.5) * (x - 0.5) } else { (x - 0.5) * (x - 0.5) + sigma * z };
                    (x, y)
                }
            };
            out.push(pair);
        }
        Ok(out)
    }

    /// Population value of the rearranged measure R_μ for this model, where a
    /// closed form is known.
    ///
    /// For stochastically increasing models this is μ itself; the Gaussian with
    /// negative correlation rearranges to the Gaussian with `|p|`.
    pub fn analytic_value(&self, kind: MeasureKind) -> Result<f64> {
        self.validate()?;
        let unsupported = || Error::UnsupportedPair { model: self.to_string(), measure: kind.to_string() };
        match *self {
            CopulaModel::Independence => Ok(0.0),
            // Both endpoint copulas are completely dependent.
            CopulaModel::Comonotone | CopulaModel::Countermonotone => Ok(1.0),
            CopulaModel::Gaussian { p } => {
                let a = p.abs();
                if a == 0.0 {
                    return Ok(0.0);
                }
                match kind {
                    MeasureKind::Rho => Ok(6.0 / PI * (a / 2.0).asin()),
                    MeasureKind::Tau => Ok(2.0 / PI * a.asin()),
                    MeasureKind::Blomqvist => Ok(2.0 / PI * a.asin()),
                    MeasureKind::R => Ok(3.0 / PI * ((1.0 + a * a) / 2.0).asin() - 0.5),
                    _ => Err(unsupported()),
                }
            }
            CopulaModel::Gumbel { theta } => match kind {
                MeasureKind::Tau => Ok((theta - 1.0) / theta),
                MeasureKind::Rho => Ok(gumbel_rho(theta)),
                MeasureKind::Blomqvist => Ok(4.0 * 0.5f64.powf(2f64.powf(1.0 / theta)) - 1.0),
                _ => Err(unsupported()),
            },
            CopulaModel::OrdinalSumHalfPi => match kind {
                MeasureKind::Blomqvist => Ok(1.0),
                _ => Err(unsupported()),
            },
            CopulaModel::NoisyParabola { sigma } if sigma == 0.0 && kind.is_axiom_valid() => Ok(1.0),
            CopulaModel::NoisyParabola { .. } => Err(unsupported()),
        }
    }
}

/// Spearman's ρ of the Gumbel copula from its Pickands dependence function.
fn gumbel_rho(theta: f64) -> f64 {
    if theta == 1.0 {
        return 0.0;
    }
    let f = |t: f64| {
        let a = (t.powf(theta) + (1.0 - t).powf(theta)).powf(1.0 / theta);
        1.0 / ((1.0 + a) * (1.0 + a))
    };
    12.0 * adaptive_simpson(&f, 0.0, 1.0, 1e-13) - 3.0
}

/// Marshall–Olkin sampling with a positive stable frailty of index 1/θ
/// (Kanter's representation of the Chambers–Mallows–Stuck generator).
fn sample_gumbel<R: rand::Rng>(theta: f64, rng: &mut R) -> (f64, f64) {
    if theta == 1.0 {
        return (rng.random::<f64>(), rng.random::<f64>());
    }
    let alpha = 1.0 / theta;
    // Uniform on (0, π), strictly inside.
    let phi = PI * (1.0 - rng.random::<f64>());
    let w: f64 = Exp1.sample(rng);
    let v = ((alpha * phi).sin() / phi.sin().powf(1.0 / alpha))
        * (((1.0 - alpha) * phi).sin() / w).powf((1.0 - alpha) / alpha);
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    ((-(e1 / v).powf(alpha)).exp(), (-(e2 / v).powf(alpha)).exp())
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CopulaModel::Independence => write!(f, "pi"),
            CopulaModel::Comonotone => write!(f, "m"),
            CopulaModel::Countermonotone => write!(f, "w"),
            CopulaModel::Gaussian { p } => write!(f, "gauss:p={p}"),
            CopulaModel::Gumbel { theta } => write!(f, "gumbel:theta={theta}"),
            CopulaModel::OrdinalSumHalfPi => write!(f, "ordsum"),
            CopulaModel::NoisyParabola { sigma } => write!(f, "parabola:sigma={sigma}"),
        }
    }
}

impl FromStr for CopulaModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg)),
            None => (s, None),
        };
        let param = |key: &str| -> Result<f64> {
            let arg = arg.ok_or_else(|| Error::InvalidParameter(format!("model `{s}` needs `{key}=<value>`")))?;
            let (k, v) = arg
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("expected `{key}=<value>` in `{s}`")))?;
            if k.trim() != key {
                return Err(Error::InvalidParameter(format!("unknown parameter `{k}` in `{s}`")));
            }
            v.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("cannot parse `{v}` in `{s}`")))
        };
        let no_arg = |m: CopulaModel| -> Result<CopulaModel> {
            match arg {
                None => Ok(m),
                Some(_) => Err(Error::InvalidParameter(format!("model `{name}` takes no parameters"))),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "pi" => no_arg(CopulaModel::Independence),
            "m" => no_arg(CopulaModel::Comonotone),
            "w" => no_arg(CopulaModel::Countermonotone),
            "ordsum" => no_arg(CopulaModel::OrdinalSumHalfPi),
            "gauss" => CopulaModel::gaussian(param("p")?),
            "gumbel" => CopulaModel::gumbel(param("theta")?),
            "parabola" => CopulaModel::noisy_parabola(param("sigma")?),
            _ => Err(Error::InvalidParameter(format!("unknown model `{s}`"))),
        }
    }
}
