//! Per-round CSV renderings of single runs. Arms are 1-based in every CSV.

use super::output::num;
use crate::gbpa::RunRecord;
use crate::oco::{offline_opt, BallDomain, ConvexLossSpec, OcoRecord};
use crate::Result;

/// `t,arm,loss,cum_loss,regret[,p_1..p_N]`.
pub fn experts_csv(run: &RunRecord, with_probs: bool) -> String {
    let n = run.cumulative.len();
    let mut s = String::from("t,arm,loss,cum_loss,regret");
    if with_probs {
        (1..=n).for_each(|i| s.push_str(&format!(",p_{i}")));
    }
    s.push('\n');
    for (k, r) in run.rounds.iter().enumerate() {
        let t = k + 1;
        s.push_str(&format!("{t},{},{},{},{}", r.arm + 1, num(r.loss), num(r.cum_loss), num(run.regret_at(t))));
        if with_probs {
            if r.probs.is_empty() {
                s.push_str(&",".repeat(n));
            } else {
                r.probs.iter().for_each(|p| s.push_str(&format!(",{}", num(*p))));
            }
        }
        s.push('\n');
    }
    s
}

/// `replicate,t,arm,loss,cum_loss,regret,estimate,sampling_prob,summand,flagged`.
pub fn bandit_csv(runs: &[RunRecord]) -> String {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut s = String::from("replicate,t,arm,loss,cum_loss,regret,estimate,sampling_prob,summand,flagged\n");
    for (rep, run) in runs.iter().enumerate() {
        for (k, r) in run.rounds.iter().enumerate() {
            s.push_str(&format!(
                "{rep},{},{},{},{},{},{},{},{},{}\n",
                k + 1,
                r.arm + 1,
                num(r.loss),
                num(r.cum_loss),
                num(run.regret_at(k + 1)),
                opt(r.estimate),
                opt(r.sampling_prob),
                opt(r.summand),
                u8::from(r.flagged)
            ));
        }
    }
    s
}

/// `replicate,t,loss,lookahead_loss,cum_loss,regret,x_1..x_d`; regret is
/// against the best point for the rounds so far and filled at powers of two
/// and the last round.
pub fn oco_csv(runs: &[(OcoRecord, Vec<ConvexLossSpec>)], domain: &BallDomain) -> Result<String> {
    let mut s = String::from("replicate,t,loss,lookahead_loss,cum_loss,regret");
    (1..=domain.dim).for_each(|i| s.push_str(&format!(",x_{i}")));
    s.push('\n');
    for (rep, (run, losses)) in runs.iter().enumerate() {
        let horizon = run.losses.len();
        let mut cum = 0.0;
        for t in 1..=horizon {
            cum += run.losses[t - 1];
            let regret = if t.is_power_of_two() || t == horizon {
                num(cum - offline_opt(domain, &losses[..t])?.1)
            } else {
                String::new()
            };
            s.push_str(&format!("{rep},{t},{},{},{},{regret}", num(run.losses[t - 1]), num(run.lookahead[t - 1]), num(cum)));
            run.points[t - 1].iter().for_each(|x| s.push_str(&format!(",{}", num(*x))));
            s.push('\n');
        }
    }
    Ok(s)
}

/// `%.{digits}g`-style formatting.
pub fn significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |m: &str| if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.').to_string() } else { m.to_string() };
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    }
}
