//! Bandits with expert advice: the expert/action transforms, clipping, and
//! the GBPA loop over experts driven by action-level feedback.

use rand::Rng;

use crate::bandit::{geometric_resampling_detail_by, GeometricResamplingCfg, PROB_FLOOR};
use crate::divergence::sample_index;
use crate::gbpa::{dot, ftpl_sample_action, Potential, QuadratureCfg, Round, RunRecord};
use crate::losses::{argmin, parse_numeric_csv, LossSequence};
use crate::rng::RngStream;
use crate::{Error, Result};

/// `E_{i,t}`: the action (0-based) each expert recommends each round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdviceMatrix {
    actions: usize,
    rows: Vec<Vec<usize>>,
}

impl AdviceMatrix {
    pub fn new(rows: Vec<Vec<usize>>, actions: usize) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 || actions == 0 {
            return Err(Error::InvalidParameter("advice needs at least one expert and one action".into()));
        }
        for row in &rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            if let Some(&bad) = row.iter().find(|&&a| a >= actions) {
                return Err(Error::InvalidParameter(format!("advice {} outside [1, {actions}]", bad + 1)));
            }
        }
        Ok(Self { actions, rows })
    }

    /// Every expert recommends the action with its own index.
    pub fn identity(rounds: usize, n: usize) -> Self {
        Self { actions: n, rows: vec![(0..n).collect(); rounds] }
    }

    pub fn experts(&self) -> usize {
        self.rows[0].len()
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn rounds(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, t: usize) -> &[usize] {
        &self.rows[t]
    }

    /// CSV with 1-based action indices, one round per line.
    pub fn to_csv(&self) -> String {
        self.rows
            .iter()
            .map(|r| r.iter().map(|a| (a + 1).to_string()).collect::<Vec<_>>().join(",") + "\n")
            .collect()
    }

    /// Parses 1-based CSV; `actions` defaults to the largest index seen.
    pub fn from_csv(text: &str, actions: Option<usize>) -> Result<Self> {
        let raw = parse_numeric_csv(text)?;
        let mut rows = Vec::with_capacity(raw.len());
        for row in raw {
            let mut out = Vec::with_capacity(row.len());
            for v in row {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::Parse(format!("advice entries are 1-based integers, got {v}")));
                }
                out.push(v as usize - 1);
            }
            rows.push(out);
        }
        let k = actions.unwrap_or_else(|| rows.iter().flatten().max().map_or(0, |m| m + 1));
        Self::new(rows, k)
    }
}

/// `ψ_t(p)`: `q_j = Σ_{i: E_i = j} p_i`.
pub fn experts_to_actions(p: &[f64], advice: &[usize], actions: usize) -> Vec<f64> {
    let mut q = vec![0.0; actions];
    for (&pi, &a) in p.iter().zip(advice) {
        q[a] += pi;
    }
    q
}

/// `φ_t(ℓ̂)`: expert `i` gets `ℓ̂_{E_i}`.
pub fn actions_to_experts(lhat: &[f64], advice: &[usize]) -> Vec<f64> {
    advice.iter().map(|&a| lhat[a]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipConfig {
    rho: f64,
}

impl ClipConfig {
    /// Requires `0 <= ρ` and `ρ K < 1`.
    pub fn new(rho: f64, actions: usize) -> Result<Self> {
        if !(rho >= 0.0 && rho * (actions as f64) < 1.0) {
            return Err(Error::InvalidParameter(format!("clip threshold needs 0 <= rho < 1/K, got {rho} with K = {actions}")));
        }
        Ok(Self { rho })
    }

    pub fn none() -> Self {
        Self { rho: 0.0 }
    }

    /// `ρ = √(2ε/K)`, valid when `2εK < 1`.
    pub fn from_epsilon(epsilon: f64, actions: usize) -> Result<Self> {
        let k = actions as f64;
        if !(epsilon > 0.0 && 2.0 * epsilon * k < 1.0) {
            return Err(Error::InvalidParameter(format!("default clip needs 2 eps K < 1, got eps = {epsilon}, K = {actions}")));
        }
        Self::new((2.0 * epsilon / k).sqrt(), actions)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// `C_ρ(q)`: zero entries below `ρ`, rescale the rest by `1 / (1 - clipped mass)`.
pub fn clip(q: &[f64], cfg: &ClipConfig) -> Vec<f64> {
    if cfg.rho == 0.0 {
        return q.to_vec();
    }
    let clipped: f64 = q.iter().filter(|&&x| x < cfg.rho).sum();
    assert!(clipped < 1.0, "clipping removed all mass; rho must be below 1/K");
    let scale = 1.0 - clipped;
    q.iter().map(|&x| if x < cfg.rho { 0.0 } else { x / scale }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BweMode {
    Exact,
    /// FTPL only, unclipped: estimate `1/q_j` by redrawing experts until one
    /// recommends `j`.
    GeometricResampling(GeometricResamplingCfg),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BweOptions {
    pub mode: BweMode,
    pub clip: ClipConfig,
    pub gamma: f64,
    pub quadrature: QuadratureCfg,
}

impl Default for BweOptions {
    fn default() -> Self {
        Self { mode: BweMode::Exact, clip: ClipConfig::none(), gamma: 1.0, quadrature: QuadratureCfg::default() }
    }
}

/// A bandits-with-experts trace. `run.rounds[t].probs` is the expert
/// distribution `p_t`, `run.rounds[t].arm` the played action.
#[derive(Debug, Clone, PartialEq)]
pub struct BweRecord {
    pub run: RunRecord,
    /// `q_t = ψ_t(p_t)` before clipping (exact mode).
    pub action_probs: Vec<Vec<f64>>,
    /// The distribution actually sampled from.
    pub sampled_probs: Vec<Vec<f64>>,
    /// Largest `|<ψ(p), ℓ̂> - <p, φ(ℓ̂)>|` seen.
    pub max_duality_gap: f64,
}

pub fn run_bwe(
    potential: &Potential,
    losses: &LossSequence,
    advice: &AdviceMatrix,
    opts: &BweOptions,
    stream: &RngStream,
) -> Result<BweRecord> {
    potential.validate()?;
    let k = losses.arms();
    if advice.actions() != k {
        return Err(Error::DimensionMismatch { expected: k, got: advice.actions() });
    }
    if advice.rounds() < losses.rounds() {
        return Err(Error::DimensionMismatch { expected: losses.rounds(), got: advice.rounds() });
    }
    if losses.is_empty() {
        return Err(Error::IncompleteTrace("loss sequence has no rounds"));
    }
    let spec = match (opts.mode, potential) {
        (BweMode::GeometricResampling(_), Potential::Ftpl(spec)) => {
            if opts.clip.rho() > 0.0 {
                return Err(Error::InvalidParameter("geometric resampling runs unclipped".into()));
            }
            Some(*spec)
        }
        (BweMode::GeometricResampling(_), Potential::Ftrl(_)) => {
            return Err(Error::InvalidParameter("geometric resampling needs an FTPL potential".into()))
        }
        (BweMode::Exact, _) => None,
    };
    let n = advice.experts();
    let mut phi_bar = vec![0.0; n];
    let mut cum = vec![0.0; n];
    let mut total = 0.0;
    let mut rounds = Vec::with_capacity(losses.rounds());
    let mut action_probs = Vec::new();
    let mut sampled_probs = Vec::new();
    let mut max_gap = 0.0f64;

    let play = |t: usize, phi_bar: &[f64], rng: &mut rand_chacha::ChaCha8Rng| -> Result<(usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let col = advice.row(t.min(advice.rounds() - 1));
        match (opts.mode, spec) {
            (BweMode::GeometricResampling(_), Some(spec)) => {
                let expert = ftpl_sample_action(&spec, phi_bar, rng);
                Ok((col[expert], Vec::new(), Vec::new(), Vec::new()))
            }
            _ => {
                let p = potential.gradient_with(phi_bar, &opts.quadrature)?;
                let q = experts_to_actions(&p, col, k);
                let sampled = clip(&q, &opts.clip);
                let j = sample_index(&sampled, rng);
                Ok((j, p, q, sampled))
            }
        }
    };

    for (t, row) in losses.rows().iter().enumerate() {
        let col = advice.row(t);
        let mut rng = stream.round(t as u64 + 1);
        let (j, p, q, sampled) = play(t, &phi_bar, &mut rng)?;
        let (prob, capped) = match (opts.mode, spec) {
            (BweMode::GeometricResampling(cfg), Some(spec)) => {
                let (draws, capped) =
                    geometric_resampling_detail_by(&spec, &phi_bar, cfg, &mut rng, |e| col[e] == j);
                (1.0 / draws as f64, capped)
            }
            _ => (sampled[j].max(PROB_FLOOR), sampled[j] < PROB_FLOOR),
        };
        let value = row[j] / prob;
        let mut lhat = vec![0.0; k];
        lhat[j] = value;
        let phi = actions_to_experts(&lhat, col);
        if !p.is_empty() {
            let lhs = dot(&q, &lhat);
            let rhs = dot(&p, &phi);
            let gap = (lhs - rhs).abs();
            if gap > 1e-12 * lhs.abs().max(1.0) {
                return Err(Error::Domain(format!("expert/action duality broken in round {}: {lhs} vs {rhs}", t + 1)));
            }
            max_gap = max_gap.max(gap);
        }
        for (acc, v) in phi_bar.iter_mut().zip(&phi) {
            *acc += v;
        }
        for (c, &a) in cum.iter_mut().zip(col) {
            *c += row[a];
        }
        total += row[j];
        let exact = !sampled.is_empty();
        rounds.push(Round {
            expected_loss: exact.then(|| dot(&sampled, row)),
            summand: exact.then(|| value * value * prob.powf(opts.gamma)),
            estimate: Some(value),
            sampling_prob: Some(prob),
            flagged: capped,
            arm: j,
            loss: row[j],
            cum_loss: total,
            best_cum: argmin(&cum).1,
            probs: p,
            ..Round::default()
        });
        if exact {
            action_probs.push(q);
            sampled_probs.push(sampled);
        }
    }
    let t_end = losses.rounds();
    let mut rng = stream.round(t_end as u64 + 1);
    let (next_j, final_p, _, final_sampled) = play(t_end, &phi_bar, &mut rng)?;
    for t in 0..t_end {
        let row = losses.row(t);
        let (j, s) = if t + 1 < t_end {
            (rounds[t + 1].arm, sampled_probs.get(t + 1))
        } else {
            (next_j, Some(&final_sampled))
        };
        rounds[t].lookahead_loss = Some(row[j]);
        if let Some(s) = s.filter(|s| !s.is_empty()) {
            rounds[t].expected_lookahead = Some(dot(s, row));
        }
    }
    let (best_arm, best_loss) = argmin(&cum);
    Ok(BweRecord {
        run: RunRecord {
            rounds,
            final_probs: final_p,
            cumulative: cum,
            estimated: phi_bar,
            best_arm,
            best_loss,
            noise: None,
        },
        action_probs,
        sampled_probs,
        max_duality_gap: max_gap,
    })
}

/// Uniformly random advice.
pub fn uniform_advice(rounds: usize, experts: usize, actions: usize, stream: &RngStream) -> AdviceMatrix {
    let rows = (0..rounds)
        .map(|t| {
            let mut rng = stream.round(t as u64);
            (0..experts).map(|_| rng.random_range(0..actions)).collect()
        })
        .collect();
    AdviceMatrix { actions, rows }
}

/// Random advice except expert `good`, which always recommends `best[t]`.
pub fn planted_advice(best: &[usize], experts: usize, actions: usize, good: usize, stream: &RngStream) -> AdviceMatrix {
    let mut m = uniform_advice(best.len(), experts, actions, stream);
    for (row, &b) in m.rows.iter_mut().zip(best) {
        row[good] = b;
    }
    m
}
