use rand::Rng;

use crate::perturbation::PerturbationSpec;
use crate::quadrature::{integrate, QuadOptions};
use crate::{Error, Result};

/// Settings for the quadrature gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureCfg {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Lower-tail truncation quantile of the noise.
    pub tail: f64,
    /// Largest tolerated `|Σ p - 1|` before renormalizing.
    pub max_drift: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureCfg {
    fn default() -> Self {
        Self { abs_tol: 1e-8, rel_tol: 1e-10, tail: 1e-12, max_drift: 1e-6, max_subdivisions: 2000 }
    }
}

impl QuadratureCfg {
    /// Tolerances for stability probes.
    pub fn tight() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-11, ..Self::default() }
    }
}

/// Largest `w = -ln v` integrated; `e^-700` is about `1e-304`.
const W_MAX: f64 = 700.0;

/// `exp(x - max x)` normalized.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = x.iter().map(|&v| (v - m).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// The FTPL gradient, using exponential weights for Gumbel noise and
/// quadrature otherwise.
pub fn ftpl_gradient_with(spec: &PerturbationSpec, l: &[f64], cfg: &QuadratureCfg) -> Result<Vec<f64>> {
    spec.validate()?;
    if let PerturbationSpec::Gumbel { beta, .. } = *spec {
        check_losses(l)?;
        let scaled: Vec<f64> = l.iter().map(|x| -x / beta).collect();
        return Ok(softmax(&scaled));
    }
    ftpl_gradient_quadrature(spec, l, cfg)
}

fn check_losses(l: &[f64]) -> Result<()> {
    if l.is_empty() {
        return Err(Error::InvalidParameter("loss vector is empty".into()));
    }
    if let Some(bad) = l.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("cumulative loss must be finite, got {bad}")));
    }
    Ok(())
}

/// `p_i = P(i = argmin_j L_j - Z_j) = ∫ f(z) Π_{j≠i} F(z + L_j - L_i) dz`
/// by adaptive Gauss–Kronrod.
///
/// The integral is taken in survival coordinates `v = 1 - F(z) = e^{-w}`,
/// which keeps the upper tail resolved down to `1e-304`. It starts where the
/// integrand becomes nonzero for noise with a bounded-below support, and
/// the `w` range is pre-split at doubling offsets so narrow features are seen.
pub fn ftpl_gradient_quadrature(spec: &PerturbationSpec, l: &[f64], cfg: &QuadratureCfg) -> Result<Vec<f64>> {
    spec.validate()?;
    check_losses(l)?;
    let n = l.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let w_trunc = -(-cfg.tail).ln_1p();
    let mut p = Vec::with_capacity(n);
    let mut shifts = Vec::with_capacity(n - 1);
    for i in 0..n {
        shifts.clear();
        shifts.extend((0..n).filter(|&j| j != i).map(|j| l[i] - l[j]));
        let worst = shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v_hi = spec.support_lower().map_or(1.0, |a| spec.survival(a + worst));
        if v_hi <= 0.0 {
            p.push(0.0);
            continue;
        }
        let w_lo = (-v_hi.ln()).max(w_trunc);
        if w_lo >= W_MAX {
            p.push(0.0);
            continue;
        }
        let integrand = |w: f64| {
            let v = (-w).exp();
            let z = spec.upper_quantile(v);
            shifts.iter().fold(v, |acc, d| acc * spec.cdf(z - d))
        };
        let mut edges = vec![w_lo];
        let mut step = 0.5;
        while w_lo + step < W_MAX {
            edges.push(w_lo + step);
            step *= 2.0;
        }
        edges.push(W_MAX);
        let pieces = (edges.len() - 1) as f64;
        let opts = QuadOptions {
            abs_tol: cfg.abs_tol * v_hi.min(1.0) / pieces,
            rel_tol: cfg.rel_tol,
            max_subdivisions: cfg.max_subdivisions,
        };
        let mut total = 0.0;
        for win in edges.windows(2) {
            total += integrate(integrand, win[0], win[1], &opts)?.value;
        }
        p.push(total);
    }
    let sum: f64 = p.iter().sum();
    if !((sum - 1.0).abs() < cfg.max_drift) {
        return Err(Error::Quadrature { estimate: sum, error: (sum - 1.0).abs(), subdivisions: 0 });
    }
    Ok(p.into_iter().map(|x| x / sum).collect())
}

/// Draws `Z_1..Z_N` and returns `argmin_i L_i - Z_i`, lowest index on ties.
pub fn ftpl_sample_action<R: Rng + ?Sized>(spec: &PerturbationSpec, l: &[f64], rng: &mut R) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, &li) in l.iter().enumerate() {
        let v = li - spec.sample(rng);
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Empirical action frequencies over `samples` draws, with their standard
/// errors.
pub fn ftpl_gradient_mc<R: Rng + ?Sized>(
    spec: &PerturbationSpec,
    l: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    check_losses(l)?;
    let mut counts = vec![0usize; l.len()];
    for _ in 0..samples {
        counts[ftpl_sample_action(spec, l, rng)] += 1;
    }
    let m = samples as f64;
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
    let se = freq.iter().map(|&f| (f * (1.0 - f) / m).sqrt()).collect();
    Ok((freq, se))
}
