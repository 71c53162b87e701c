use super::Regularizer;
use crate::{Error, Result};

/// Iteration cap for the multiplier search.
pub const MAX_BISECTIONS: usize = 10_000;

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FtrlSolution {
    pub probs: Vec<f64>,
    /// Lagrange multiplier of the simplex constraint.
    pub lambda: f64,
    pub iterations: usize,
}

/// `argmin_p <L, p> + F(p)` over the simplex.
pub fn ftrl_gradient(reg: &Regularizer, l: &[f64]) -> Result<Vec<f64>> {
    ftrl_solve(reg, l).map(|s| s.probs)
}

/// Solves the stationarity condition `L_i + f'(p_i) + λ = 0`.
///
/// Shannon has a closed form. For Tsallis and log-barrier the solution is
/// `p_i = (c / (L_i - min L + ν))^r` with `r = 1/(1-α)` (log-barrier: `r = 1`,
/// `c = η`), and `ν` is found in `[c, c N^{1/r}]` by Newton steps started at
/// the left end, safeguarded by bisection.
pub fn ftrl_solve(reg: &Regularizer, l: &[f64]) -> Result<FtrlSolution> {
    reg.validate()?;
    if l.is_empty() {
        return Err(Error::InvalidParameter("loss vector is empty".into()));
    }
    if let Some(bad) = l.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("cumulative loss must be finite, got {bad}")));
    }
    let l_min = l.iter().copied().fold(f64::INFINITY, f64::min);
    let n = l.len() as f64;
    let (c, r, offset) = match *reg {
        Regularizer::Shannon { eta } => {
            let w: Vec<f64> = l.iter().map(|&x| (-(x - l_min) / eta).exp()).collect();
            let z: f64 = w.iter().sum();
            return Ok(FtrlSolution {
                probs: w.iter().map(|x| x / z).collect(),
                lambda: -l_min + eta * z.ln() - eta,
                iterations: 0,
            });
        }
        Regularizer::Tsallis { eta, alpha } => (eta * alpha / (1.0 - alpha), 1.0 / (1.0 - alpha), eta / (1.0 - alpha)),
        Regularizer::LogBarrier { eta } => (eta, 1.0, 0.0),
    };
    let probs_at = |nu: f64| -> Vec<f64> {
        l.iter()
            .map(|&x| {
                let ratio = c / (x - l_min + nu);
                if r == 1.0 {
                    ratio
                } else {
                    ratio.powf(r)
                }
            })
            .collect()
    };
    let (mut lo, mut hi) = (c, c * n.powf(1.0 / r));
    let mut nu = lo;
    for it in 1..=MAX_BISECTIONS {
        let p = probs_at(nu);
        let excess = p.iter().sum::<f64>() - 1.0;
        if excess.abs() <= SUM_TOL * 0.5 || (hi - lo) <= f64::EPSILON * hi {
            if excess.abs() > SUM_TOL {
                return Err(Error::SolverDivergence { iterations: it, lo, hi });
            }
            return Ok(FtrlSolution { probs: p, lambda: nu - l_min - offset, iterations: it });
        }
        if excess > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        let slope: f64 = -r * l.iter().zip(&p).map(|(&x, &pi)| pi / (x - l_min + nu)).sum::<f64>();
        let newton = nu - excess / slope;
        nu = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::SolverDivergence { iterations: MAX_BISECTIONS, lo, hi })
}

/// `max_i |L_i + f'(p_i) + λ|`.
pub fn stationarity_residual(reg: &Regularizer, l: &[f64], sol: &FtrlSolution) -> f64 {
    l.iter()
        .zip(&sol.probs)
        .map(|(&x, &p)| (x + reg.derivative(p) + sol.lambda).abs())
        .fold(0.0, f64::max)
}
