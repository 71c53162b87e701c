//! # diffstab
//!
//! Online learning through the lens of one-step differential stability.
//!
//! The crate has three layers:
//!
//! - **Divergences** ([`divergence`]): δ-approximate max-divergence and the
//!   Tsallis γ-max-divergence on finite distributions, computed exactly by
//!   subset enumeration.
//! - **Algorithms**: the gradient-based prediction algorithm (GBPA) with
//!   perturbation ([`perturbation`], FTPL) or regularization (FTRL) potentials
//!   for experts ([`gbpa`]), multi-armed bandits ([`bandit`]) and bandits with
//!   expert advice ([`bwe`]); objective-perturbation online convex
//!   optimization ([`oco`]).
//! - **Audits** ([`harness`]): stability probes, per-step bandit inequalities,
//!   the one-step-lookahead regret comparison, and regret-scaling fits.
//!
//! Every random draw comes from a [`rng::RngStream`], keyed by
//! `(seed, replicate, round)`, so runs are bit-reproducible.
//!
//! ```
//! use diffstab::divergence::{max_divergence, DiscreteDist, DivergenceQuery};
//!
//! let p = DiscreteDist::new(vec![1.0, 0.0]).unwrap();
//! let q = DiscreteDist::new(vec![0.5, 0.5]).unwrap();
//! let d = max_divergence(&p, &q, &DivergenceQuery::pure(1.0)).unwrap();
//! assert!((d - std::f64::consts::LN_2).abs() < 1e-12);
//! ```

pub mod bandit;
pub mod bwe;
pub mod divergence;
mod error;
pub mod gbpa;
pub mod harness;
pub mod losses;
pub mod oco;
pub mod perturbation;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
