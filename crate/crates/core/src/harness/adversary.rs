//! Oblivious loss generators.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::losses::LossSequence;
use crate::oco::ConvexLossSpec;
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum AdversarySpec {
    /// Arm `i` draws Bernoulli(`means[i]`) each round.
    IidBernoulli { means: Vec<f64> },
    /// Arm `best` draws Bernoulli(`best_rate`), the rest Bernoulli(`best_rate + gap`).
    PlantedBest { gap: f64, best_rate: f64, best: usize },
    /// The zero-loss arm advances every `period` rounds; all others lose 1.
    Switching { period: usize },
    CsvFile { path: PathBuf },
}

impl AdversarySpec {
    pub fn validate(&self, arms: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Self::IidBernoulli { means } => {
                if means.len() != arms {
                    return Err(Error::DimensionMismatch { expected: arms, got: means.len() });
                }
                if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
                    return bad(format!("Bernoulli means must lie in [0, 1]: {means:?}"));
                }
            }
            Self::PlantedBest { gap, best_rate, best } => {
                if !(0.0..=1.0).contains(best_rate) || !(0.0..=1.0).contains(&(best_rate + gap)) || *gap < 0.0 {
                    return bad(format!("planted rates {best_rate} and {} must lie in [0, 1]", best_rate + gap));
                }
                if *best >= arms {
                    return bad(format!("best arm {best} out of range for {arms} arms"));
                }
            }
            Self::Switching { period } => {
                if *period == 0 {
                    return bad("switching period must be positive".into());
                }
            }
            Self::CsvFile { .. } => {}
        }
        if arms == 0 {
            return bad("need at least one arm".into());
        }
        Ok(())
    }

    /// `rounds × arms` losses; round `t` draws from `stream.round(t)`.
    pub fn generate(&self, arms: usize, rounds: usize, stream: &RngStream) -> Result<LossSequence> {
        self.validate(arms)?;
        let bernoulli = |rates: &dyn Fn(usize) -> f64| -> Vec<Vec<f64>> {
            (0..rounds)
                .map(|t| {
                    let mut rng = stream.round(t as u64);
                    (0..arms).map(|i| if rng.random::<f64>() < rates(i) { 1.0 } else { 0.0 }).collect()
                })
                .collect()
        };
        let rows = match self {
            Self::IidBernoulli { means } => bernoulli(&|i| means[i]),
            Self::PlantedBest { gap, best_rate, best } => {
                bernoulli(&|i| if i == *best { *best_rate } else { best_rate + gap })
            }
            Self::Switching { period } => (0..rounds)
                .map(|t| (0..arms).map(|i| if i == (t / period) % arms { 0.0 } else { 1.0 }).collect())
                .collect(),
            Self::CsvFile { path } => {
                let seq = LossSequence::read(path)?;
                if seq.arms() != arms {
                    return Err(Error::DimensionMismatch { expected: arms, got: seq.arms() });
                }
                if seq.rounds() < rounds {
                    return Err(Error::DimensionMismatch { expected: rounds, got: seq.rounds() });
                }
                return Ok(seq.prefix(rounds));
            }
        };
        LossSequence::new(rows)
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IidBernoulli { means } => {
                let m: Vec<String> = means.iter().map(f64::to_string).collect();
                write!(f, "iid-bernoulli:{}", m.join(","))
            }
            Self::PlantedBest { gap, best_rate, best } => write!(f, "planted-best:{gap},{best_rate},{best}"),
            Self::Switching { period } => write!(f, "switching:{period}"),
            Self::CsvFile { path } => write!(f, "csv:{}", path.display()),
        }
    }
}

/// `kind:args`, e.g. `planted-best:0.05,0.45,0` or `iid-bernoulli:0.2,0.5`.
impl FromStr for AdversarySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let nums = || super::config::parse_list::<f64>(args, kind);
        match kind {
            "iid-bernoulli" => Ok(Self::IidBernoulli { means: nums()? }),
            "planted-best" => match nums()?.as_slice() {
                [gap, rate] => Ok(Self::PlantedBest { gap: *gap, best_rate: *rate, best: 0 }),
                [gap, rate, best] if best.fract() == 0.0 && *best >= 0.0 => {
                    Ok(Self::PlantedBest { gap: *gap, best_rate: *rate, best: *best as usize })
                }
                _ => Err(Error::Parse(format!("planted-best wants gap,rate[,best]: {args:?}"))),
            },
            "switching" => args
                .trim()
                .parse()
                .map(|period| Self::Switching { period })
                .map_err(|_| Error::Parse(format!("switching wants a period: {args:?}"))),
            "csv" => Ok(Self::CsvFile { path: PathBuf::from(args.trim()) }),
            _ => Err(Error::Parse(format!("unknown adversary {kind:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Linear,
    Squared,
    Logistic,
}

impl FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(Self::Linear),
            "squared" => Ok(Self::Squared),
            "logistic" => Ok(Self::Logistic),
            other => Err(Error::Parse(format!("unknown link {other:?}"))),
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Squared => "squared",
            Self::Logistic => "logistic",
        })
    }
}

/// Uniform draw from the nonnegative orthant of the unit ball.
pub fn orthant_ball_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).map(|v: f64| v.abs()).collect();
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = rng.random::<f64>().powf(1.0 / dim as f64);
    if n == 0.0 {
        return vec![0.0; dim];
    }
    g.iter().map(|v| r * v / n).collect()
}

/// Losses with feature vectors uniform on the orthant cap of the unit ball.
/// Linear losses are shifted by `D‖z‖` so every loss is nonnegative on the
/// ball; squared targets are uniform on `[-1, 1]` and logistic labels fair
/// coin flips.
pub fn orthant_ball_losses(dim: usize, radius: f64, link: LinkKind, rounds: usize, stream: &RngStream) -> Result<Vec<ConvexLossSpec>> {
    (0..rounds)
        .map(|t| {
            let mut rng = stream.round(t as u64);
            let z = orthant_ball_point(dim, &mut rng);
            match link {
                LinkKind::Linear => Ok(ConvexLossSpec::shifted_linear(z, radius)),
                LinkKind::Squared => Ok(ConvexLossSpec::squared(z, rng.random::<f64>() * 2.0 - 1.0)),
                LinkKind::Logistic => ConvexLossSpec::logistic(z, if rng.random::<bool>() { 1.0 } else { -1.0 }),
            }
        })
        .collect()
}
