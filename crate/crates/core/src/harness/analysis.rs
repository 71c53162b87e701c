//! Scaling-law fits and the key-lemma audit.

use crate::gbpa::RunRecord;
use crate::oco::OcoRecord;
use crate::stats::mean_se;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares on `(ln x, ln y)`.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 checkpoints, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Domain(format!("log-log fit needs positive values, got {p:?}")));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("log-log fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScalingFit { slope, intercept, r2 })
}

/// One replicate's regret of `A`, of its one-step lookahead `A⁺`, and `L*_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedRegret {
    pub regret: f64,
    pub lookahead_regret: f64,
    pub best_loss: f64,
    pub horizon: usize,
}

impl PairedRegret {
    /// Prefers expected regrets when the trace holds distributions.
    pub fn from_run(run: &RunRecord) -> Result<Self> {
        let (regret, lookahead_regret) = match (run.expected_regret(), run.expected_lookahead_regret()) {
            (Some(a), Some(b)) => (a, b),
            _ => (
                run.realized_regret(),
                run.lookahead_regret().ok_or(Error::IncompleteTrace("lookahead column missing"))?,
            ),
        };
        Ok(Self { regret, lookahead_regret, best_loss: run.best_loss, horizon: run.horizon() })
    }

    pub fn from_oco(run: &OcoRecord) -> Self {
        Self {
            regret: run.regret(),
            lookahead_regret: run.lookahead_regret(),
            best_loss: run.best_loss,
            horizon: run.losses.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyLemmaReport {
    /// Mean regret of `A`.
    pub lhs: f64,
    /// `2ε L̄*_T + 3 mean Regret(A⁺) + δBT`.
    pub rhs: f64,
    /// Standard error of the per-replicate gap `lhs - rhs`.
    pub stderr: f64,
    pub replicates: usize,
    pub pass: bool,
}

/// Checks `mean Regret(A) <= 2ε L̄*_T + 3 mean Regret(A⁺) + δBT` up to three
/// standard errors of the paired difference.
pub fn audit_key_lemma(samples: &[PairedRegret], epsilon: f64, delta: f64, bound: f64) -> Result<KeyLemmaReport> {
    let first = samples.first().ok_or(Error::IncompleteTrace("no replicates"))?;
    if let Some(s) = samples.iter().find(|s| s.horizon != first.horizon) {
        return Err(Error::DimensionMismatch { expected: first.horizon, got: s.horizon });
    }
    if !(epsilon >= 0.0 && (0.0..=1.0).contains(&delta) && bound >= 0.0) {
        return Err(Error::InvalidParameter(format!("bad audit parameters eps={epsilon} delta={delta} B={bound}")));
    }
    let slack = delta * bound * first.horizon as f64;
    let lhs = mean_se(&samples.iter().map(|s| s.regret).collect::<Vec<_>>()).mean;
    let plus = mean_se(&samples.iter().map(|s| s.lookahead_regret).collect::<Vec<_>>()).mean;
    let best = mean_se(&samples.iter().map(|s| s.best_loss).collect::<Vec<_>>()).mean;
    let rhs = 2.0 * epsilon * best + 3.0 * plus + slack;
    let gaps: Vec<f64> = samples
        .iter()
        .map(|s| s.regret - 2.0 * epsilon * s.best_loss - 3.0 * s.lookahead_regret)
        .collect();
    let gap = mean_se(&gaps);
    let pass = gap.mean <= slack + 3.0 * gap.se + 1e-9 * (1.0 + rhs.abs());
    Ok(KeyLemmaReport { lhs, rhs, stderr: gap.se, replicates: samples.len(), pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [64.0, 256.0, 1024.0, 4096.0].iter().map(|&t: &f64| (t, 3.0 * t.sqrt())).collect();
        let f = scaling_fit(&pts).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-9 && (f.r2 - 1.0).abs() < 1e-9);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = (1..=5).map(|k| (2f64.powi(k), 7.0)).collect();
        assert!(scaling_fit(&flat).unwrap().slope.abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(scaling_fit(&[(1.0, 1.0), (2.0, 2.0), (4.0, 3.0)]).is_err());
        assert!(scaling_fit(&[(1.0, 1.0), (2.0, 0.0), (4.0, 3.0), (8.0, 1.0)]).is_err());
    }

    #[test]
    fn zero_losses_pass() {
        let s = vec![PairedRegret { regret: 0.0, lookahead_regret: 0.0, best_loss: 0.0, horizon: 10 }; 5];
        let r = audit_key_lemma(&s, 0.5, 0.0, 1.0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.pass);
    }

    #[test]
    fn audit_detects_violation_and_mismatch() {
        let s = vec![PairedRegret { regret: 10.0, lookahead_regret: 1.0, best_loss: 1.0, horizon: 10 }; 4];
        assert!(!audit_key_lemma(&s, 0.1, 0.0, 1.0).unwrap().pass);
        assert!(audit_key_lemma(&s, 0.1, 1.0, 1.0).unwrap().pass);
        let mut m = s.clone();
        m[1].horizon = 9;
        assert!(audit_key_lemma(&m, 0.1, 0.0, 1.0).is_err());
    }
}
