//! Perturbation families for follow-the-perturbed-leader and for
//! objective-perturbation noise.
//!
//! Scalar families expose sampling, closed-form CDFs, densities and
//! quantiles. The quadrature gradient in [`crate::gbpa`] integrates in
//! quantile space, so every family needs an exact quantile function.
//!
//! Specs serialize as whitespace-separated `key=value` text:
//!
//! ```
//! use diffstab::perturbation::PerturbationSpec;
//! let spec: PerturbationSpec = "family=gumbel mu=0 beta=1".parse().unwrap();
//! assert_eq!(spec.to_string(), "family=gumbel mu=0 beta=1");
//! ```

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Gamma,
    Gumbel,
    Frechet,
    Weibull,
    Pareto,
    Gaussian,
    Exponential,
}

impl Family {
    /// The five families with Table-1 style presets.
    pub const PRESETS: [Family; 5] = [
        Family::Gamma,
        Family::Gumbel,
        Family::Frechet,
        Family::Weibull,
        Family::Pareto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gamma => "gamma",
            Family::Gumbel => "gumbel",
            Family::Frechet => "frechet",
            Family::Weibull => "weibull",
            Family::Pareto => "pareto",
            Family::Gaussian => "gaussian",
            Family::Exponential => "exponential",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "gamma" => Family::Gamma,
            "gumbel" => Family::Gumbel,
            "frechet" | "fréchet" => Family::Frechet,
            "weibull" => Family::Weibull,
            "pareto" => Family::Pareto,
            "gaussian" | "normal" => Family::Gaussian,
            "exponential" | "exp" => Family::Exponential,
            other => return Err(Error::Parse(format!("unknown family `{other}`"))),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scalar noise distribution.
///
/// `shift` on Weibull and Pareto translates the support. It defaults to 0 and
/// is the knob for the slight modification those families need to be
/// differentially consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationSpec {
    Gamma { shape: f64, scale: f64 },
    Gumbel { mu: f64, beta: f64 },
    Frechet { alpha: f64, scale: f64 },
    Weibull { lambda: f64, k: f64, shift: f64 },
    Pareto { x_m: f64, alpha: f64, shift: f64 },
    Gaussian { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

impl PerturbationSpec {
    pub fn family(&self) -> Family {
        match self {
            Self::Gamma { .. } => Family::Gamma,
            Self::Gumbel { .. } => Family::Gumbel,
            Self::Frechet { .. } => Family::Frechet,
            Self::Weibull { .. } => Family::Weibull,
            Self::Pareto { .. } => Family::Pareto,
            Self::Gaussian { .. } => Family::Gaussian,
            Self::Exponential { .. } => Family::Exponential,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
            Self::Gumbel { mu, beta } => {
                finite("mu", mu)?;
                positive("beta", beta)
            }
            Self::Frechet { alpha, scale } => {
                positive("alpha", alpha)?;
                positive("scale", scale)
            }
            Self::Weibull { lambda, k, shift } => {
                positive("lambda", lambda)?;
                positive("k", k)?;
                finite("shift", shift)
            }
            Self::Pareto { x_m, alpha, shift } => {
                positive("x_m", x_m)?;
                positive("alpha", alpha)?;
                finite("shift", shift)
            }
            Self::Gaussian { mu, sigma } => {
                finite("mu", mu)?;
                positive("sigma", sigma)
            }
            Self::Exponential { rate } => positive("rate", rate),
        }
    }

    /// Left end of the support, if bounded.
    pub fn support_lower(&self) -> Option<f64> {
        match *self {
            Self::Gamma { .. } | Self::Frechet { .. } | Self::Exponential { .. } => Some(0.0),
            Self::Weibull { shift, .. } => Some(shift),
            Self::Pareto { x_m, shift, .. } => Some(x_m + shift),
            Self::Gumbel { .. } | Self::Gaussian { .. } => None,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else if shape == 1.0 {
                    -(-x / scale).exp_m1()
                } else {
                    gamma_lr(shape, x / scale)
                }
            }
            Self::Gumbel { mu, beta } => (-(-(x - mu) / beta).exp()).exp(),
            Self::Frechet { alpha, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-(x / scale).powf(-alpha)).exp()
                }
            }
            Self::Weibull { lambda, k, shift } => {
                if x <= shift {
                    0.0
                } else {
                    -(-((x - shift) / lambda).powf(k)).exp_m1()
                }
            }
            Self::Pareto { x_m, alpha, shift } => {
                let y = x - shift;
                if y <= x_m {
                    0.0
                } else {
                    1.0 - (x_m / y).powf(alpha)
                }
            }
            Self::Gaussian { mu, sigma } => Normal::new(mu, sigma).map(|n| n.cdf(x)).unwrap_or(f64::NAN),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = x / scale;
                ((shape - 1.0) * z.ln() - z - ln_gamma(shape)).exp() / scale
            }
            Self::Gumbel { mu, beta } => {
                let z = (x - mu) / beta;
                (-z - (-z).exp()).exp() / beta
            }
            Self::Frechet { alpha, scale } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let z = x / scale;
                alpha / scale * z.powf(-1.0 - alpha) * (-z.powf(-alpha)).exp()
            }
            Self::Weibull { lambda, k, shift } => {
                if x <= shift {
                    return 0.0;
                }
                let z = (x - shift) / lambda;
                k / lambda * z.powf(k - 1.0) * (-z.powf(k)).exp()
            }
            Self::Pareto { x_m, alpha, shift } => {
                let y = x - shift;
                if y < x_m {
                    return 0.0;
                }
                alpha * x_m.powf(alpha) / y.powf(alpha + 1.0)
            }
            Self::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            Self::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
        }
    }

    /// Inverse CDF for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => {
                if shape == 1.0 {
                    -scale * (-u).ln_1p()
                } else {
                    GammaDist::new(shape, 1.0 / scale)
                        .map(|g| g.inverse_cdf(u))
                        .unwrap_or(f64::NAN)
                }
            }
            Self::Gumbel { mu, beta } => mu - beta * (-u.ln()).ln(),
            Self::Frechet { alpha, scale } => scale * (-u.ln()).powf(-1.0 / alpha),
            Self::Weibull { lambda, k, shift } => shift + lambda * (-(-u).ln_1p()).powf(1.0 / k),
            Self::Pareto { x_m, alpha, shift } => shift + x_m * (1.0 - u).powf(-1.0 / alpha),
            Self::Gaussian { mu, sigma } => Normal::new(mu, sigma).map(|n| n.inverse_cdf(u)).unwrap_or(f64::NAN),
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
        }
    }

    /// `1 - cdf(x)`, accurate in the upper tail.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else if shape == 1.0 {
                    (-x / scale).exp()
                } else {
                    gamma_ur(shape, x / scale)
                }
            }
            Self::Gumbel { mu, beta } => -(-(-(x - mu) / beta).exp()).exp_m1(),
            Self::Frechet { alpha, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    -(-(x / scale).powf(-alpha)).exp_m1()
                }
            }
            Self::Weibull { lambda, k, shift } => {
                if x <= shift {
                    1.0
                } else {
                    (-((x - shift) / lambda).powf(k)).exp()
                }
            }
            Self::Pareto { x_m, alpha, shift } => {
                let y = x - shift;
                if y <= x_m {
                    1.0
                } else {
                    (x_m / y).powf(alpha)
                }
            }
            Self::Gaussian { mu, sigma } => Normal::new(mu, sigma).map(|n| n.sf(x)).unwrap_or(f64::NAN),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
        }
    }

    /// `quantile(1 - v)`, accurate for tiny `v`.
    pub fn upper_quantile(&self, v: f64) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => {
                if shape == 1.0 {
                    -scale * v.ln()
                } else if v > 1e-8 {
                    self.quantile(1.0 - v)
                } else {
                    // Newton on the log survival function
                    let target = v.ln();
                    let mut x = self.quantile(1.0 - 1e-8);
                    for _ in 0..200 {
                        let s = self.survival(x);
                        let step = (s.ln() - target) * s / self.pdf(x);
                        x += step;
                        if step.abs() <= 1e-14 * x.abs() {
                            break;
                        }
                    }
                    x
                }
            }
            Self::Gumbel { mu, beta } => mu - beta * (-(-v).ln_1p()).ln(),
            Self::Frechet { alpha, scale } => scale * (-(-v).ln_1p()).powf(-1.0 / alpha),
            Self::Weibull { lambda, k, shift } => shift + lambda * (-v.ln()).powf(1.0 / k),
            Self::Pareto { x_m, alpha, shift } => shift + x_m * v.powf(-1.0 / alpha),
            Self::Gaussian { mu, sigma } => {
                mu - Normal::new(0.0, sigma).map(|n| n.inverse_cdf(v)).unwrap_or(f64::NAN)
            }
            Self::Exponential { rate } => -v.ln() / rate,
        }
    }

    /// One draw. Inversion for the closed-form families, the standard Gamma
    /// and normal samplers otherwise. The spec is assumed valid; see
    /// [`sample_scalar`] for the checked entry point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gamma { shape, scale } => {
                if shape == 1.0 {
                    let u: f64 = rng.sample(Open01);
                    -scale * u.ln()
                } else {
                    rand_distr::Gamma::new(shape, scale)
                        .expect("validated gamma parameters")
                        .sample(rng)
                }
            }
            Self::Gaussian { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            _ => {
                let u: f64 = rng.sample(Open01);
                self.quantile(u)
            }
        }
    }

    /// Multiplies every scale-like parameter by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Self::Gamma { shape, scale } => Self::Gamma { shape, scale: scale * factor },
            Self::Gumbel { mu, beta } => Self::Gumbel { mu: mu * factor, beta: beta * factor },
            Self::Frechet { alpha, scale } => Self::Frechet { alpha, scale: scale * factor },
            Self::Weibull { lambda, k, shift } => Self::Weibull {
                lambda: lambda * factor,
                k,
                shift: shift * factor,
            },
            Self::Pareto { x_m, alpha, shift } => Self::Pareto {
                x_m: x_m * factor,
                alpha,
                shift: shift * factor,
            },
            Self::Gaussian { mu, sigma } => Self::Gaussian { mu: mu * factor, sigma: sigma * factor },
            Self::Exponential { rate } => Self::Exponential { rate: rate / factor },
        }
    }

    fn fields(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Self::Gamma { shape, scale } => vec![("shape", shape), ("scale", scale)],
            Self::Gumbel { mu, beta } => vec![("mu", mu), ("beta", beta)],
            Self::Frechet { alpha, scale } => vec![("alpha", alpha), ("scale", scale)],
            Self::Weibull { lambda, k, shift } => vec![("lambda", lambda), ("k", k), ("shift", shift)],
            Self::Pareto { x_m, alpha, shift } => vec![("xm", x_m), ("alpha", alpha), ("shift", shift)],
            Self::Gaussian { mu, sigma } => vec![("mu", mu), ("sigma", sigma)],
            Self::Exponential { rate } => vec![("rate", rate)],
        }
    }
}

/// Checked single draw.
pub fn sample_scalar<R: Rng + ?Sized>(spec: &PerturbationSpec, rng: &mut R) -> Result<f64> {
    spec.validate()?;
    Ok(spec.sample(rng))
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "family={}", self.family())?;
        for (k, v) in self.fields() {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Parses `key=value` tokens into a lookup; shared by the spec parsers.
pub(crate) fn parse_kv(s: &str) -> Result<Vec<(String, String)>> {
    s.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{tok}`")))
        })
        .collect()
}

pub(crate) fn kv_get(kv: &[(String, String)], key: &str) -> Option<String> {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone())
}

pub(crate) fn kv_f64(kv: &[(String, String)], key: &str, default: Option<f64>) -> Result<f64> {
    match kv_get(kv, key) {
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("`{key}` is not a number: `{v}`"))),
        None => default.ok_or_else(|| Error::Parse(format!("missing `{key}`"))),
    }
}

impl FromStr for PerturbationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kv = parse_kv(s)?;
        let family: Family = kv_get(&kv, "family")
            .ok_or_else(|| Error::Parse("missing `family`".into()))?
            .parse()?;
        let spec = match family {
            Family::Gamma => Self::Gamma {
                shape: kv_f64(&kv, "shape", Some(1.0))?,
                scale: kv_f64(&kv, "scale", Some(1.0))?,
            },
            Family::Gumbel => Self::Gumbel {
                mu: kv_f64(&kv, "mu", Some(0.0))?,
                beta: kv_f64(&kv, "beta", Some(1.0))?,
            },
            Family::Frechet => Self::Frechet {
                alpha: kv_f64(&kv, "alpha", None)?,
                scale: kv_f64(&kv, "scale", Some(1.0))?,
            },
            Family::Weibull => Self::Weibull {
                lambda: kv_f64(&kv, "lambda", Some(1.0))?,
                k: kv_f64(&kv, "k", Some(1.0))?,
                shift: kv_f64(&kv, "shift", Some(0.0))?,
            },
            Family::Pareto => Self::Pareto {
                x_m: kv_f64(&kv, "xm", Some(1.0))?,
                alpha: kv_f64(&kv, "alpha", None)?,
                shift: kv_f64(&kv, "shift", Some(0.0))?,
            },
            Family::Gaussian => Self::Gaussian {
                mu: kv_f64(&kv, "mu", Some(0.0))?,
                sigma: kv_f64(&kv, "sigma", Some(1.0))?,
            },
            Family::Exponential => Self::Exponential {
                rate: kv_f64(&kv, "rate", Some(1.0))?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Preset parameters for the five FTPL families, with the noise scale
/// multiplied by `1 / epsilon_scale`.
///
/// | family  | parameters            |
/// |---------|-----------------------|
/// | Gamma   | shape 1, scale 1      |
/// | Gumbel  | μ = 0, β = 1          |
/// | Fréchet | α = ln N              |
/// | Weibull | λ = 1, k = 1          |
/// | Pareto  | x_m = 1, α = ln N     |
pub fn table1_preset(family: Family, n: usize, epsilon_scale: f64) -> Result<PerturbationSpec> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("presets need N >= 2, got {n}")));
    }
    positive("epsilon_scale", epsilon_scale)?;
    let log_n = (n as f64).ln();
    let base = match family {
        Family::Gamma => PerturbationSpec::Gamma { shape: 1.0, scale: 1.0 },
        Family::Gumbel => PerturbationSpec::Gumbel { mu: 0.0, beta: 1.0 },
        Family::Frechet => {
            if log_n <= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "Fréchet preset needs alpha = ln N > 1 (N = {n})"
                )));
            }
            PerturbationSpec::Frechet { alpha: log_n, scale: 1.0 }
        }
        Family::Weibull => PerturbationSpec::Weibull { lambda: 1.0, k: 1.0, shift: 0.0 },
        Family::Pareto => PerturbationSpec::Pareto { x_m: 1.0, alpha: log_n, shift: 0.0 },
        Family::Gaussian | Family::Exponential => {
            return Err(Error::InvalidParameter(format!("no preset for the {family} family")))
        }
    };
    Ok(base.scaled(1.0 / epsilon_scale))
}

/// Noise kinds for objective perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjPertKind {
    /// Density proportional to `exp(-ε ‖b‖₂ / (2β))`.
    Gamma,
    /// `N(0, σ² I)` with `σ² = (β² ln(2/δ) + 4ε) / ε²`.
    Gaussian { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjPertNoiseSpec {
    pub kind: ObjPertKind,
    pub dim: usize,
    pub epsilon: f64,
    /// Bound on the loss gradient norm.
    pub beta: f64,
}

impl ObjPertNoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        positive("epsilon", self.epsilon)?;
        positive("beta", self.beta)?;
        if let ObjPertKind::Gaussian { delta } = self.kind {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "Gaussian noise needs delta in (0, 1), got {delta}"
                )));
            }
        }
        Ok(())
    }

    /// Per-coordinate variance of the Gaussian kind.
    pub fn gaussian_variance(&self) -> Option<f64> {
        match self.kind {
            ObjPertKind::Gaussian { delta } => {
                Some((self.beta * self.beta * (2.0 / delta).ln() + 4.0 * self.epsilon) / (self.epsilon * self.epsilon))
            }
            ObjPertKind::Gamma => None,
        }
    }

    /// `E‖b‖₂` for the Gamma kind (`2dβ/ε`); an upper bound `sqrt(d σ²)` for
    /// the Gaussian kind.
    pub fn expected_norm_bound(&self) -> f64 {
        match self.kind {
            ObjPertKind::Gamma => 2.0 * self.dim as f64 * self.beta / self.epsilon,
            ObjPertKind::Gaussian { .. } => {
                (self.dim as f64 * self.gaussian_variance().unwrap_or(0.0)).sqrt()
            }
        }
    }
}

/// Draws the Obj-Pert noise vector `b`.
pub fn sample_objpert_noise<R: Rng + ?Sized>(spec: &ObjPertNoiseSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let d = spec.dim;
    match spec.kind {
        ObjPertKind::Gamma => {
            // uniform direction times a Gamma(d, 2β/ε) radius
            let mut dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let radius = rand_distr::Gamma::new(d as f64, 2.0 * spec.beta / spec.epsilon)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(rng);
            for x in &mut dir {
                *x *= radius / norm;
            }
            Ok(dir)
        }
        ObjPertKind::Gaussian { .. } => {
            let sd = spec.gaussian_variance().unwrap_or(0.0).sqrt();
            Ok((0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    sd * z
                })
                .collect())
        }
    }
}
