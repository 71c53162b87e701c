use super::{ftpl_sample_action, Potential, QuadratureCfg};
use crate::divergence::{max_divergence, sample_index, DiscreteDist, DivergenceQuery};
use crate::losses::{argmin, LossSequence};
use crate::rng::RngStream;
use crate::{Error, Result};

/// One round of a trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Round {
    /// `p_t`, empty when the run did not compute it.
    pub probs: Vec<f64>,
    pub arm: usize,
    pub loss: f64,
    pub cum_loss: f64,
    /// Smallest cumulative loss of any arm (or expert) after this round.
    pub best_cum: f64,
    /// `<p_t, ℓ_t>` when `p_t` is known.
    pub expected_loss: Option<f64>,
    /// `ℓ_t(i_{t+1})`: the loss the one-step-lookahead learner pays.
    pub lookahead_loss: Option<f64>,
    /// `<p_{t+1}, ℓ_t>` when both are known.
    pub expected_lookahead: Option<f64>,
    /// Nonzero coordinate of the bandit loss estimate (at `arm`).
    pub estimate: Option<f64>,
    /// Probability (or its reciprocal estimate's inverse) used in `estimate`.
    pub sampling_prob: Option<f64>,
    /// `ℓ̂²_{t,i_t} p^γ_{t,i_t}`.
    pub summand: Option<f64>,
    /// Probability clamp or resampling cap hit this round.
    pub flagged: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunRecord {
    pub rounds: Vec<Round>,
    /// `p_{T+1}`, when distributions were computed.
    pub final_probs: Vec<f64>,
    /// Final cumulative loss per arm (or expert).
    pub cumulative: Vec<f64>,
    /// Final estimated cumulative loss, bandit runs only.
    pub estimated: Vec<f64>,
    pub best_arm: usize,
    /// `L*_T`.
    pub best_loss: f64,
    /// The reused draw of a fixed-noise FTPL run.
    pub noise: Option<Vec<f64>>,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn total_loss(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_loss)
    }

    /// `Σ incurred - L*_T`.
    pub fn realized_regret(&self) -> f64 {
        self.total_loss() - self.best_loss
    }

    /// Realized regret after round `t` (1-based) against the best arm so far.
    pub fn regret_at(&self, t: usize) -> f64 {
        let r = &self.rounds[t - 1];
        r.cum_loss - r.best_cum
    }

    pub fn expected_regret(&self) -> Option<f64> {
        let total: Option<f64> = self.rounds.iter().map(|r| r.expected_loss).sum();
        total.map(|s| s - self.best_loss)
    }

    /// Realized regret of the one-step-lookahead learner.
    pub fn lookahead_regret(&self) -> Option<f64> {
        let total: Option<f64> = self.rounds.iter().map(|r| r.lookahead_loss).sum();
        total.map(|s| s - self.best_loss)
    }

    pub fn expected_lookahead_regret(&self) -> Option<f64> {
        let total: Option<f64> = self.rounds.iter().map(|r| r.expected_lookahead).sum();
        total.map(|s| s - self.best_loss)
    }

    pub fn flagged_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| r.flagged).count()
    }

    /// Fills the lookahead columns from each next round's action.
    pub(crate) fn link_lookahead(&mut self, rows: &[Vec<f64>], next_arm: usize) {
        let t_max = self.rounds.len();
        for t in 0..t_max {
            let (arm, probs) = if t + 1 < t_max {
                (self.rounds[t + 1].arm, self.rounds[t + 1].probs.clone())
            } else {
                (next_arm, self.final_probs.clone())
            };
            let row = &rows[t];
            self.rounds[t].lookahead_loss = Some(row[arm]);
            if !probs.is_empty() {
                self.rounds[t].expected_lookahead = Some(dot(&probs, row));
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpertsOptions {
    /// Draw the FTPL noise once and reuse it every round.
    pub fixed_noise: bool,
    /// Compute `p_t` for FTPL runs as well (quadrature; slower).
    pub record_probs: bool,
    pub quadrature: QuadratureCfg,
}

/// Full-information GBPA: play `∇Φ̃(L_{t-1})`, observe `ℓ_t`, update.
///
/// Round `t` draws from `stream.round(t)`; a fixed-noise draw comes from
/// `stream.round(0)`.
pub fn run_experts(potential: &Potential, losses: &LossSequence, opts: &ExpertsOptions, stream: &RngStream) -> Result<RunRecord> {
    potential.validate()?;
    if losses.is_empty() {
        return Err(Error::IncompleteTrace("loss sequence has no rounds"));
    }
    let n = losses.arms();
    let noise = match (potential, opts.fixed_noise) {
        (Potential::Ftpl(spec), true) => {
            let mut rng = stream.round(0);
            Some((0..n).map(|_| spec.sample(&mut rng)).collect::<Vec<f64>>())
        }
        _ => None,
    };
    let exact = matches!(potential, Potential::Ftrl(_)) || opts.record_probs;
    let choose = |l: &[f64], t: usize| -> Result<(usize, Vec<f64>)> {
        let mut rng = stream.round(t as u64);
        let probs = if exact { potential.gradient_with(l, &opts.quadrature)? } else { Vec::new() };
        let arm = match (potential, &noise) {
            (Potential::Ftrl(_), _) => sample_index(&probs, &mut rng),
            (Potential::Ftpl(_), Some(z)) => {
                let perturbed: Vec<f64> = l.iter().zip(z).map(|(a, b)| a - b).collect();
                argmin(&perturbed).0
            }
            (Potential::Ftpl(spec), None) => ftpl_sample_action(spec, l, &mut rng),
        };
        Ok((arm, probs))
    };

    let mut cum = vec![0.0; n];
    let mut rounds = Vec::with_capacity(losses.rounds());
    let mut total = 0.0;
    for (t, row) in losses.rows().iter().enumerate() {
        let (arm, probs) = choose(&cum, t + 1)?;
        let loss = row[arm];
        total += loss;
        let expected_loss = (!probs.is_empty()).then(|| dot(&probs, row));
        for (c, v) in cum.iter_mut().zip(row) {
            *c += v;
        }
        rounds.push(Round {
            probs,
            arm,
            loss,
            cum_loss: total,
            best_cum: argmin(&cum).1,
            expected_loss,
            ..Round::default()
        });
    }
    let (next_arm, final_probs) = choose(&cum, losses.rounds() + 1)?;
    let (best_arm, best_loss) = argmin(&cum);
    let mut record = RunRecord {
        rounds,
        final_probs,
        cumulative: cum,
        estimated: Vec::new(),
        best_arm,
        best_loss,
        noise,
    };
    record.link_lookahead(losses.rows(), next_arm);
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityProbe {
    pub divergence: f64,
    pub loss_norm: f64,
    /// `divergence / ‖ℓ‖∞`, 0 when the loss is zero.
    pub ratio: f64,
}

/// `D∞,γ(A(L), A(L + ℓ))` with both distributions computed exactly (FTRL,
/// Gumbel) or by quadrature, and the divergence by subset enumeration.
pub fn probe_stability(
    potential: &Potential,
    l_prefix: &[f64],
    new_loss: &[f64],
    gamma: f64,
    cfg: &QuadratureCfg,
) -> Result<StabilityProbe> {
    if l_prefix.len() != new_loss.len() {
        return Err(Error::DimensionMismatch { expected: l_prefix.len(), got: new_loss.len() });
    }
    let before = potential.gradient_with(l_prefix, cfg)?;
    let after_l: Vec<f64> = l_prefix.iter().zip(new_loss).map(|(a, b)| a + b).collect();
    let after = potential.gradient_with(&after_l, cfg)?;
    probe_between(&before, &after, new_loss, gamma)
}

/// Probe between two already-computed distributions.
pub fn probe_between(before: &[f64], after: &[f64], new_loss: &[f64], gamma: f64) -> Result<StabilityProbe> {
    let p = DiscreteDist::from_weights(before.to_vec())?;
    let q = DiscreteDist::from_weights(after.to_vec())?;
    let divergence = max_divergence(&p, &q, &DivergenceQuery::pure(gamma))?;
    let loss_norm = new_loss.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ratio = if loss_norm > 0.0 { divergence / loss_norm } else { 0.0 };
    Ok(StabilityProbe { divergence, loss_norm, ratio })
}
