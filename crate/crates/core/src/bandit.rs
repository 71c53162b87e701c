//! GBPA with bandit feedback: importance-weighted loss estimates, Geometric
//! Resampling for FTPL, and the per-step stability audits.

use rand::Rng;

use crate::divergence::sample_index;
use crate::gbpa::{dot, ftpl_sample_action, Potential, QuadratureCfg, Round, RunRecord, StabilityLevel};
use crate::losses::{argmin, LossSequence};
use crate::perturbation::PerturbationSpec;
use crate::rng::RngStream;
use crate::stats::mean_se;
use crate::{Error, Result};

/// Smallest probability used as an importance weight.
pub const PROB_FLOOR: f64 = 1e-300;

/// A loss estimate with at most one nonzero coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEstimate {
    pub n: usize,
    pub arm: usize,
    /// `observed / prob`.
    pub value: f64,
    pub prob: f64,
}

impl LossEstimate {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        v[self.arm] = self.value;
        v
    }
}

/// `(observed / prob) e_arm`.
pub fn importance_weighted_estimate(observed: f64, prob: f64, arm: usize, n: usize) -> Result<LossEstimate> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::Domain(format!("importance weight needs prob in (0, 1], got {prob}")));
    }
    if arm >= n {
        return Err(Error::InvalidParameter(format!("arm {arm} out of range for {n} arms")));
    }
    Ok(LossEstimate { n, arm, value: observed / prob, prob })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometricResamplingCfg {
    cap: usize,
}

impl GeometricResamplingCfg {
    pub fn new(cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::InvalidParameter("resampling cap must be at least 1".into()));
        }
        Ok(Self { cap })
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// `⌈√T⌉`, for zero-order bounds.
    pub fn zero_order(horizon: usize) -> Self {
        Self { cap: ((horizon as f64).sqrt().ceil() as usize).max(1) }
    }

    /// `T`, for first-order bounds.
    pub fn first_order(horizon: usize) -> Self {
        Self { cap: horizon.max(1) }
    }
}

/// Number of fresh FTPL draws until `arm` comes up again, capped at `M`.
/// The second value is true when the cap was reached without a match.
pub fn geometric_resampling_detail<R: Rng + ?Sized>(
    spec: &PerturbationSpec,
    l: &[f64],
    arm: usize,
    cfg: GeometricResamplingCfg,
    rng: &mut R,
) -> (usize, bool) {
    geometric_resampling_detail_by(spec, l, cfg, rng, |i| i == arm)
}

/// Resampling until the drawn index satisfies `hit`.
pub fn geometric_resampling_detail_by<R: Rng + ?Sized>(
    spec: &PerturbationSpec,
    l: &[f64],
    cfg: GeometricResamplingCfg,
    rng: &mut R,
    hit: impl Fn(usize) -> bool,
) -> (usize, bool) {
    for k in 1..=cfg.cap {
        if hit(ftpl_sample_action(spec, l, rng)) {
            return (k, false);
        }
    }
    (cfg.cap, true)
}

/// `K ∧ M`; its mean is `(1 - (1-p)^M) / p` for `p` the probability of `arm`.
pub fn geometric_resampling<R: Rng + ?Sized>(
    spec: &PerturbationSpec,
    l: &[f64],
    arm: usize,
    cfg: GeometricResamplingCfg,
    rng: &mut R,
) -> usize {
    geometric_resampling_detail(spec, l, arm, cfg, rng).0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BanditMode {
    /// Compute `p_t` exactly and weight by `1 / p_{t,i_t}`.
    Exact,
    /// Sample the FTPL action directly and estimate `1 / p` by resampling.
    GeometricResampling(GeometricResamplingCfg),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BanditOptions {
    pub mode: BanditMode,
    /// Exponent in the stability summand `ℓ̂² p^γ`.
    pub gamma: f64,
    pub quadrature: QuadratureCfg,
}

impl Default for BanditOptions {
    fn default() -> Self {
        Self { mode: BanditMode::Exact, gamma: 1.0, quadrature: QuadratureCfg::default() }
    }
}

/// Bandit GBPA: `p_t = ∇Φ̃(L̂_{t-1})`, play `i_t ~ p_t`, see only `ℓ_{t,i_t}`,
/// add the estimate to `L̂`.
///
/// In exact mode the action is drawn with [`sample_index`] from one uniform
/// of `stream.round(t)`.
pub fn run_bandit(potential: &Potential, losses: &LossSequence, opts: &BanditOptions, stream: &RngStream) -> Result<RunRecord> {
    potential.validate()?;
    if losses.is_empty() {
        return Err(Error::IncompleteTrace("loss sequence has no rounds"));
    }
    let spec = match (opts.mode, potential) {
        (BanditMode::GeometricResampling(_), Potential::Ftpl(spec)) => Some(*spec),
        (BanditMode::GeometricResampling(_), Potential::Ftrl(_)) => {
            return Err(Error::InvalidParameter("geometric resampling needs an FTPL potential".into()))
        }
        (BanditMode::Exact, _) => None,
    };
    let n = losses.arms();
    let mut est = vec![0.0; n];
    let mut cum = vec![0.0; n];
    let mut total = 0.0;
    let mut rounds = Vec::with_capacity(losses.rounds());
    for (t, row) in losses.rows().iter().enumerate() {
        let mut rng = stream.round(t as u64 + 1);
        let mut round = match (opts.mode, spec) {
            (BanditMode::GeometricResampling(cfg), Some(spec)) => {
                let arm = ftpl_sample_action(&spec, &est, &mut rng);
                let (k, capped) = geometric_resampling_detail(&spec, &est, arm, cfg, &mut rng);
                let value = row[arm] * k as f64;
                Round {
                    arm,
                    estimate: Some(value),
                    sampling_prob: Some(1.0 / k as f64),
                    flagged: capped,
                    ..Round::default()
                }
            }
            _ => {
                let probs = potential.gradient_with(&est, &opts.quadrature)?;
                let arm = sample_index(&probs, &mut rng);
                let clamped = probs[arm] < PROB_FLOOR;
                let prob = probs[arm].max(PROB_FLOOR);
                let value = importance_weighted_estimate(row[arm], prob, arm, n)?.value;
                Round {
                    expected_loss: Some(dot(&probs, row)),
                    summand: Some(value * value * prob.powf(opts.gamma)),
                    estimate: Some(value),
                    sampling_prob: Some(prob),
                    flagged: clamped,
                    arm,
                    probs,
                    ..Round::default()
                }
            }
        };
        let arm = round.arm;
        est[arm] += round.estimate.unwrap_or(0.0);
        total += row[arm];
        for (c, v) in cum.iter_mut().zip(row) {
            *c += v;
        }
        round.loss = row[arm];
        round.cum_loss = total;
        round.best_cum = argmin(&cum).1;
        rounds.push(round);
    }
    let mut rng = stream.round(losses.rounds() as u64 + 1);
    let (next_arm, final_probs) = match spec {
        Some(spec) => (ftpl_sample_action(&spec, &est, &mut rng), Vec::new()),
        None => {
            let p = potential.gradient_with(&est, &opts.quadrature)?;
            (sample_index(&p, &mut rng), p)
        }
    };
    let (best_arm, best_loss) = argmin(&cum);
    let mut record = RunRecord {
        rounds,
        final_probs,
        cumulative: cum,
        estimated: est,
        best_arm,
        best_loss,
        noise: None,
    };
    record.link_lookahead(losses.rows(), next_arm);
    Ok(record)
}

/// Rounds (1-based) where `(p_t - p_{t+1})·ℓ̂_t > ε ℓ̂²_{t,i_t} p^γ_{t,i_t} + 1e-8`.
pub fn lemma7_violations(trace: &RunRecord, epsilon: f64, gamma: f64) -> Result<Vec<usize>> {
    let mut bad = Vec::new();
    for (t, r) in trace.rounds.iter().enumerate() {
        let next = if t + 1 < trace.rounds.len() { &trace.rounds[t + 1].probs } else { &trace.final_probs };
        if r.probs.is_empty() || next.is_empty() {
            return Err(Error::IncompleteTrace("lemma 7 audit needs exact distributions"));
        }
        let value = r.estimate.ok_or(Error::IncompleteTrace("lemma 7 audit needs loss estimates"))?;
        let i = r.arm;
        let lhs = (r.probs[i] - next[i]) * value;
        let rhs = epsilon * value * value * r.probs[i].max(PROB_FLOOR).powf(gamma);
        if lhs > rhs + 1e-8 {
            bad.push(t + 1);
        }
    }
    Ok(bad)
}

/// True iff the per-step inequality holds on every round.
pub fn lemma7_audit(trace: &RunRecord, epsilon: f64, gamma: f64) -> Result<bool> {
    Ok(lemma7_violations(trace, epsilon, gamma)?.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Report {
    /// Mean realized regret.
    pub lhs: f64,
    /// `ε · mean Σ_t ℓ̂² p^γ + (max F - min F)`.
    pub rhs: f64,
    /// Standard error of the per-replicate difference.
    pub stderr: f64,
    pub replicates: usize,
    pub pass: bool,
}

/// Regret against the stability decomposition, averaged over replicates;
/// passes when `lhs <= rhs + 3 SE`.
pub fn lemma2_audit(traces: &[RunRecord], level: StabilityLevel, range: f64) -> Result<Lemma2Report> {
    let pairs = traces
        .iter()
        .map(|tr| {
            let s: Option<f64> = tr.rounds.iter().map(|r| r.summand).sum();
            s.map(|s| (tr.realized_regret(), s))
                .ok_or(Error::IncompleteTrace("lemma 2 audit needs stability summands"))
        })
        .collect::<Result<Vec<_>>>()?;
    lemma2_audit_sums(&pairs, level, range)
}

/// [`lemma2_audit`] from per-replicate `(regret, Σ_t ℓ̂² p^γ)` pairs.
pub fn lemma2_audit_sums(pairs: &[(f64, f64)], level: StabilityLevel, range: f64) -> Result<Lemma2Report> {
    if pairs.is_empty() {
        return Err(Error::IncompleteTrace("no traces"));
    }
    let regrets: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let sums: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diffs: Vec<f64> = pairs.iter().map(|(r, s)| r - level.epsilon * s).collect();
    let d = mean_se(&diffs);
    let lhs = mean_se(&regrets).mean;
    let rhs = level.epsilon * mean_se(&sums).mean + range;
    Ok(Lemma2Report { lhs, rhs, stderr: d.se, replicates: pairs.len(), pass: d.mean <= range + 3.0 * d.se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbpa::Regularizer;
    use crate::perturbation::{table1_preset, Family};
    use crate::rng::Domain;

    fn stream(seed: u64) -> RngStream {
        RngStream::new(seed, Domain::Learner)
    }

    fn bernoulli_losses(means: &[f64], t: usize, seed: u64) -> LossSequence {
        let s = RngStream::new(seed, Domain::Adversary);
        let rows = (0..t)
            .map(|k| {
                let mut r = s.round(k as u64);
                means.iter().map(|&m| if r.random::<f64>() < m { 1.0 } else { 0.0 }).collect()
            })
            .collect();
        LossSequence::new(rows).unwrap()
    }

    #[test]
    fn estimate_examples() {
        let e = importance_weighted_estimate(0.6, 0.5, 0, 2).unwrap();
        assert_eq!(e.to_vec(), vec![1.2, 0.0]);
        assert_eq!(importance_weighted_estimate(0.0, 0.3, 1, 3).unwrap().to_vec(), vec![0.0; 3]);
        assert!(importance_weighted_estimate(0.5, 0.0, 0, 2).is_err());
    }

    #[test]
    fn estimate_is_unbiased() {
        let p = [0.3, 0.7];
        let l = [0.5, 0.2];
        let mut rng = RngStream::new(1, Domain::Probe).round(0);
        let m = 1_000_000;
        let mut sums = [0.0f64; 2];
        let mut sq = [0.0f64; 2];
        for _ in 0..m {
            let i = sample_index(&p, &mut rng);
            let v = importance_weighted_estimate(l[i], p[i], i, 2).unwrap().to_vec();
            for k in 0..2 {
                sums[k] += v[k];
                sq[k] += v[k] * v[k];
            }
        }
        for k in 0..2 {
            let mean = sums[k] / m as f64;
            let se = ((sq[k] / m as f64 - mean * mean) / m as f64).sqrt();
            assert!((mean - l[k]).abs() < 3.0 * se, "{k}: {mean}");
        }
    }

    #[test]
    fn resampling_mean() {
        let spec = table1_preset(Family::Gumbel, 4, 1.0).unwrap();
        let l = [0.0; 4];
        let mut rng = RngStream::new(2, Domain::Probe).round(0);
        let cfg = GeometricResamplingCfg::new(100).unwrap();
        let ks: Vec<f64> = (0..100_000).map(|_| geometric_resampling(&spec, &l, 2, cfg, &mut rng) as f64).collect();
        let m = mean_se(&ks);
        let exact = (1.0 - 0.75f64.powi(100)) / 0.25;
        assert!((m.mean - exact).abs() < 3.0 * m.se, "{} vs {exact}", m.mean);
        let one = GeometricResamplingCfg::new(1).unwrap();
        assert!((0..100).all(|_| geometric_resampling(&spec, &l, 0, one, &mut rng) == 1));
        assert!((0..100).all(|_| geometric_resampling(&spec, &[3.0], 0, cfg, &mut rng) == 1));
        assert!(GeometricResamplingCfg::new(0).is_err());
        assert_eq!(GeometricResamplingCfg::zero_order(1000).cap(), 32);
    }

    #[test]
    fn trivial_runs() {
        let pot = Potential::Ftrl(Regularizer::Tsallis { eta: 2.0, alpha: 0.5 });
        let zeros = LossSequence::new(vec![vec![0.0; 3]; 20]).unwrap();
        let r = run_bandit(&pot, &zeros, &BanditOptions::default(), &stream(1)).unwrap();
        assert_eq!(r.realized_regret(), 0.0);
        assert!(r.estimated.iter().all(|&x| x == 0.0));
        assert!(r.rounds.iter().all(|x| x.probs == r.rounds[0].probs));
        let one = LossSequence::new(vec![vec![0.7]; 20]).unwrap();
        assert_eq!(run_bandit(&pot, &one, &BanditOptions::default(), &stream(1)).unwrap().realized_regret(), 0.0);
        let gr = BanditOptions { mode: BanditMode::GeometricResampling(GeometricResamplingCfg::new(5).unwrap()), ..Default::default() };
        assert!(run_bandit(&pot, &zeros, &gr, &stream(1)).is_err());
    }

    #[test]
    fn estimates_have_one_nonzero_and_match_weights() {
        let pot = Potential::Ftrl(Regularizer::LogBarrier { eta: 5.0 });
        let losses = bernoulli_losses(&[0.5, 0.4, 0.6], 300, 3);
        let r = run_bandit(&pot, &losses, &BanditOptions { gamma: 2.0, ..Default::default() }, &stream(3)).unwrap();
        let mut rebuilt = vec![0.0; 3];
        for (t, x) in r.rounds.iter().enumerate() {
            assert_eq!(x.estimate.unwrap(), losses.row(t)[x.arm] / x.probs[x.arm]);
            rebuilt[x.arm] += x.estimate.unwrap();
        }
        assert_eq!(rebuilt, r.estimated);
    }

    #[test]
    fn lemma7_and_negative_control() {
        let losses = bernoulli_losses(&[0.5, 0.3, 0.6, 0.5], 500, 7);
        let pot = Potential::Ftrl(Regularizer::LogBarrier { eta: 20.0 });
        let r = run_bandit(&pot, &losses, &BanditOptions { gamma: 2.0, ..Default::default() }, &stream(7)).unwrap();
        assert!(lemma7_audit(&r, 2.0 / 20.0, 2.0).unwrap());
        assert!(!lemma7_audit(&r, 2.0 / 20.0 / 100.0, 2.0).unwrap());
        let zeros = LossSequence::new(vec![vec![0.0; 4]; 30]).unwrap();
        let z = run_bandit(&pot, &zeros, &BanditOptions::default(), &stream(7)).unwrap();
        assert!(lemma7_audit(&z, 0.0, 2.0).unwrap());
        let gr = BanditOptions {
            mode: BanditMode::GeometricResampling(GeometricResamplingCfg::new(10).unwrap()),
            ..Default::default()
        };
        let ftpl = Potential::Ftpl(table1_preset(Family::Gamma, 4, 1.0).unwrap());
        let g = run_bandit(&ftpl, &losses, &gr, &stream(7)).unwrap();
        assert!(matches!(lemma7_audit(&g, 1.0, 1.0), Err(Error::IncompleteTrace(_))));
    }

    #[test]
    fn summand_expectations() {
        // E[ℓ̂² p^{2-α}] = Σ ℓ_i² p_i^{1-α} <= N^α; E[ℓ̂² p²] = Σ ℓ_i² p_i <= E[ℓ_{i_t}]
        let p = [0.05, 0.15, 0.3, 0.5];
        let l = [1.0, 0.8, 0.4, 0.9];
        let alpha = 0.5;
        let mut rng = RngStream::new(8, Domain::Probe).round(0);
        let (mut ts, mut lb, mut el) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..200_000 {
            let i = sample_index(&p, &mut rng);
            let v = l[i] / p[i];
            ts.push(v * v * p[i].powf(2.0 - alpha));
            lb.push(v * v * p[i] * p[i]);
            el.push(l[i]);
        }
        let ts = mean_se(&ts);
        assert!(ts.mean <= 4f64.powf(alpha) + 3.0 * ts.se);
        let diff: Vec<f64> = lb.iter().zip(&el).map(|(a, b)| a - b).collect();
        let d = mean_se(&diff);
        assert!(d.mean <= 3.0 * d.se);
    }

    #[test]
    fn lemma2_decomposition() {
        let pot = Potential::Ftrl(Regularizer::Tsallis { eta: 10.0, alpha: 0.5 });
        let level = pot.stability_level().unwrap();
        let opts = BanditOptions { gamma: level.gamma, ..Default::default() };
        let traces: Vec<RunRecord> = (0..200)
            .map(|rep| {
                let losses = bernoulli_losses(&[0.5, 0.5, 0.3], 200, 100 + rep);
                run_bandit(&pot, &losses, &opts, &stream(5).replicate(rep)).unwrap()
            })
            .collect();
        let Potential::Ftrl(reg) = pot else { unreachable!() };
        let report = lemma2_audit(&traces, level, reg.range(3, 200)).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn gr_mode_records_caps() {
        let ftpl = Potential::Ftpl(table1_preset(Family::Gumbel, 3, 1.0).unwrap());
        let losses = bernoulli_losses(&[0.9, 0.1, 0.5], 200, 9);
        let opts = BanditOptions {
            mode: BanditMode::GeometricResampling(GeometricResamplingCfg::new(1).unwrap()),
            ..Default::default()
        };
        let r = run_bandit(&ftpl, &losses, &opts, &stream(9)).unwrap();
        assert!(r.rounds.iter().all(|x| x.estimate.unwrap() == x.loss));
        assert!(r.flagged_rounds() > 0);
    }
}
