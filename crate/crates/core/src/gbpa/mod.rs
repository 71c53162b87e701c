//! The gradient-based prediction algorithm for full-information experts.
//!
//! A [`Potential`] maps a cumulative loss vector `L` to a distribution over
//! arms: for FTPL the probability that each arm is the perturbed leader, for
//! FTRL the regularized minimizer over the simplex.
//!
//! ```
//! use diffstab::gbpa::{Potential, Regularizer};
//!
//! let pot = Potential::Ftrl(Regularizer::Shannon { eta: 1.0 });
//! let p = pot.gradient(&[0.0, 2f64.ln()]).unwrap();
//! assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
//! ```

mod experts;
mod ftpl;
mod ftrl;

use std::fmt;
use std::str::FromStr;

pub use experts::{probe_between, probe_stability, run_experts, ExpertsOptions, Round, RunRecord, StabilityProbe};
pub use ftpl::{ftpl_gradient_mc, ftpl_gradient_quadrature, ftpl_gradient_with, ftpl_sample_action, softmax, QuadratureCfg};
pub(crate) use experts::dot;
pub use ftrl::{ftrl_gradient, ftrl_solve, stationarity_residual, FtrlSolution, MAX_BISECTIONS};

use crate::perturbation::{kv_f64, kv_get, parse_kv, PerturbationSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// Negative entropy `η Σ p ln p`. The α → 1 limit of the Tsallis family,
    /// kept as a baseline.
    Shannon { eta: f64 },
    /// `-η Σ (p^α - p) / (1 - α)` with `0 < α < 1`.
    Tsallis { eta: f64, alpha: f64 },
    /// `-η Σ ln p`.
    LogBarrier { eta: f64 },
}

impl Regularizer {
    pub fn eta(&self) -> f64 {
        match *self {
            Self::Shannon { eta } | Self::Tsallis { eta, .. } | Self::LogBarrier { eta } => eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.eta();
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
        }
        if let Self::Tsallis { alpha, .. } = *self {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidParameter(format!("Tsallis alpha must lie in (0, 1), got {alpha}")));
            }
        }
        Ok(())
    }

    /// `F(p)`.
    pub fn value(&self, p: &[f64]) -> f64 {
        match *self {
            Self::Shannon { eta } => eta * p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>(),
            Self::Tsallis { eta, alpha } => -eta * p.iter().map(|&x| (x.powf(alpha) - x) / (1.0 - alpha)).sum::<f64>(),
            Self::LogBarrier { eta } => -eta * p.iter().map(|&x| x.ln()).sum::<f64>(),
        }
    }

    /// `f'(p)` for one coordinate.
    pub fn derivative(&self, p: f64) -> f64 {
        match *self {
            Self::Shannon { eta } => eta * (p.ln() + 1.0),
            Self::Tsallis { eta, alpha } => -eta * (alpha * p.powf(alpha - 1.0) - 1.0) / (1.0 - alpha),
            Self::LogBarrier { eta } => -eta / p,
        }
    }

    /// `max F - min F` over the simplex on `n` arms.
    ///
    /// The log-barrier is unbounded, so its range is taken over the simplex
    /// restricted to `p_i >= 1 / (n T)`, plus 1 for the cost of moving the
    /// comparator into that set.
    pub fn range(&self, n: usize, horizon: usize) -> f64 {
        let nf = n as f64;
        match *self {
            Self::Shannon { eta } => eta * nf.ln(),
            Self::Tsallis { eta, alpha } => eta * (nf.powf(1.0 - alpha) - 1.0) / (1.0 - alpha),
            Self::LogBarrier { eta } => {
                if n == 1 {
                    return 0.0;
                }
                let tau = 1.0 / (nf * horizon.max(1) as f64);
                let max_f = -eta * ((nf - 1.0) * tau.ln() + (1.0 - (nf - 1.0) * tau).ln());
                max_f - eta * nf * nf.ln() + 1.0
            }
        }
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Shannon { eta } => write!(f, "regularizer=shannon eta={eta}"),
            Self::Tsallis { eta, alpha } => write!(f, "regularizer=tsallis eta={eta} alpha={alpha}"),
            Self::LogBarrier { eta } => write!(f, "regularizer=logbarrier eta={eta}"),
        }
    }
}

/// A per-step stability level `(γ, ε)`: `D∞,γ(A(L), A(L + ℓ)) <= ε ‖ℓ‖∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityLevel {
    pub gamma: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Ftpl(PerturbationSpec),
    Ftrl(Regularizer),
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Ftpl(spec) => spec.validate(),
            Self::Ftrl(reg) => reg.validate(),
        }
    }

    /// `∇Φ̃(L)`. Exact for FTRL and for Gumbel noise (exponential weights),
    /// adaptive quadrature for other FTPL families.
    pub fn gradient(&self, l: &[f64]) -> Result<Vec<f64>> {
        self.gradient_with(l, &QuadratureCfg::default())
    }

    pub fn gradient_with(&self, l: &[f64], cfg: &QuadratureCfg) -> Result<Vec<f64>> {
        match self {
            Self::Ftrl(reg) => ftrl_gradient(reg, l),
            Self::Ftpl(spec) => ftpl_gradient_with(spec, l, cfg),
        }
    }

    /// The level this potential is proved to satisfy, when one is known.
    ///
    /// FTRL: Shannon `(1, 2/η)`, Tsallis `(2 - α, 2/(ηα))`, log-barrier
    /// `(2, 2/η)`. FTPL: `(1, 2/s)` where `s` is the noise scale of the Gamma
    /// (shape 1), Gumbel, Fréchet, Weibull (k = 1) and Pareto presets, and
    /// `(1, 2 rate)` for exponential noise.
    pub fn stability_level(&self) -> Option<StabilityLevel> {
        let level = |gamma: f64, epsilon: f64| Some(StabilityLevel { gamma, epsilon });
        match *self {
            Self::Ftrl(Regularizer::Shannon { eta }) => level(1.0, 2.0 / eta),
            Self::Ftrl(Regularizer::Tsallis { eta, alpha }) => level(2.0 - alpha, 2.0 / (eta * alpha)),
            Self::Ftrl(Regularizer::LogBarrier { eta }) => level(2.0, 2.0 / eta),
            Self::Ftpl(spec) => match spec {
                PerturbationSpec::Gamma { shape, scale } if shape == 1.0 => level(1.0, 2.0 / scale),
                PerturbationSpec::Gumbel { beta, .. } => level(1.0, 2.0 / beta),
                PerturbationSpec::Frechet { alpha, scale } if alpha > 1.0 => level(1.0, 2.0 / scale),
                PerturbationSpec::Weibull { lambda, k, .. } if k == 1.0 => level(1.0, 2.0 / lambda),
                PerturbationSpec::Pareto { x_m, .. } => level(1.0, 2.0 / x_m),
                PerturbationSpec::Exponential { rate } => level(1.0, 2.0 * rate),
                _ => None,
            },
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ftpl(spec) => spec.fmt(f),
            Self::Ftrl(reg) => reg.fmt(f),
        }
    }
}

/// `family=...` parses as FTPL noise, `regularizer=shannon|tsallis|logbarrier`
/// as FTRL.
impl FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kv = parse_kv(s)?;
        if kv_get(&kv, "family").is_some() {
            return Ok(Self::Ftpl(s.parse()?));
        }
        let reg = match kv_get(&kv, "regularizer").as_deref() {
            Some("shannon") | Some("entropy") => Regularizer::Shannon { eta: kv_f64(&kv, "eta", None)? },
            Some("tsallis") => Regularizer::Tsallis {
                eta: kv_f64(&kv, "eta", None)?,
                alpha: kv_f64(&kv, "alpha", Some(0.5))?,
            },
            Some("logbarrier") | Some("log-barrier") => Regularizer::LogBarrier { eta: kv_f64(&kv, "eta", None)? },
            Some(other) => return Err(Error::Parse(format!("unknown regularizer `{other}`"))),
            None => return Err(Error::Parse("potential needs `family=` or `regularizer=`".into())),
        };
        reg.validate()?;
        Ok(Self::Ftrl(reg))
    }
}
