//! Online convex optimization by objective perturbation over an ℓ₂ ball.
//!
//! Each round plays
//! `x_t = argmin_{‖x‖ <= D} Σ_{s<t} ℓ_s(x) + (γ/ε)‖x‖² + <b, x>`
//! for losses `ℓ(x) = φ(<x, z>)` whose Hessian has rank at most one.

use crate::perturbation::{sample_objpert_noise, ObjPertNoiseSpec};
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    /// `φ(s) = s`.
    Linear,
    /// `φ(s) = (s - y)² / 2`.
    Squared { target: f64 },
    /// `φ(s) = ln(1 + e^{-y s})` with `y ∈ {-1, +1}`.
    Logistic { label: f64 },
}

/// `ℓ(x) = φ(<x, z>) + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexLossSpec {
    pub link: Link,
    pub z: Vec<f64>,
    /// Constant added to the loss, used to make linear losses nonnegative
    /// on the ball.
    pub offset: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl ConvexLossSpec {
    pub fn linear(z: Vec<f64>) -> Self {
        Self { link: Link::Linear, z, offset: 0.0 }
    }

    /// `<x, z> + D‖z‖`, nonnegative on the ball of radius `D`.
    pub fn shifted_linear(z: Vec<f64>, radius: f64) -> Self {
        let offset = radius * norm(&z);
        Self { link: Link::Linear, z, offset }
    }

    pub fn squared(z: Vec<f64>, target: f64) -> Self {
        Self { link: Link::Squared { target }, z, offset: 0.0 }
    }

    pub fn logistic(z: Vec<f64>, label: f64) -> Result<Self> {
        if label != 1.0 && label != -1.0 {
            return Err(Error::InvalidParameter(format!("logistic label must be ±1, got {label}")));
        }
        Ok(Self { link: Link::Logistic { label }, z, offset: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    fn phi(&self, s: f64) -> (f64, f64, f64) {
        match self.link {
            Link::Linear => (s, 1.0, 0.0),
            Link::Squared { target } => ((s - target) * (s - target) / 2.0, s - target, 1.0),
            Link::Logistic { label } => {
                let m = label * s;
                let sig = sigmoid(-m);
                (softplus(-m), -label * sig, sig * (1.0 - sig))
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.phi(dot(x, &self.z)).0 + self.offset
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.phi(dot(x, &self.z)).1;
        self.z.iter().map(|z| d * z).collect()
    }

    /// `φ''(<x, z>)`; the Hessian is this times `z zᵀ`.
    pub fn curvature(&self, x: &[f64]) -> f64 {
        self.phi(dot(x, &self.z)).2
    }

    /// Bounds `(B, β, γ)` on loss value, gradient norm and Hessian top
    /// eigenvalue over the ball of radius `radius`.
    pub fn bounds(&self, radius: f64) -> (f64, f64, f64) {
        let zn = norm(&self.z);
        let s = radius * zn;
        match self.link {
            Link::Linear => (s + self.offset, zn, 0.0),
            Link::Squared { target } => {
                let m = s + target.abs();
                (m * m / 2.0, m * zn, zn * zn)
            }
            Link::Logistic { .. } => (softplus(s), zn, zn * zn / 4.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallDomain {
    pub dim: usize,
    pub radius: f64,
}

impl BallDomain {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball needs d >= 1 and D > 0, got d = {dim}, D = {radius}")));
        }
        Ok(Self { dim, radius })
    }

    pub fn project(&self, x: &mut [f64]) {
        let n = norm(x);
        if n > self.radius {
            let s = self.radius / n;
            x.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// `Σ ℓ_s(x) + ridge ‖x‖² + <b, x>` with linear terms summed into one vector.
#[derive(Debug, Clone, Default)]
struct Objective {
    linear: Vec<f64>,
    constant: f64,
    curved: Vec<ConvexLossSpec>,
    ridge: f64,
}

impl Objective {
    fn new(dim: usize, history: &[ConvexLossSpec], b: &[f64], ridge: f64) -> Self {
        let mut obj = Self { linear: b.to_vec(), constant: 0.0, curved: Vec::new(), ridge };
        obj.linear.resize(dim, 0.0);
        for l in history {
            obj.push(l);
        }
        obj
    }

    fn push(&mut self, l: &ConvexLossSpec) {
        self.constant += l.offset;
        match l.link {
            Link::Linear => self.linear.iter_mut().zip(&l.z).for_each(|(a, z)| *a += z),
            _ => self.curved.push(ConvexLossSpec { offset: 0.0, ..l.clone() }),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.constant
            + dot(&self.linear, x)
            + self.ridge * dot(x, x)
            + self.curved.iter().map(|l| l.value(x)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = self.linear.iter().zip(x).map(|(l, v)| l + 2.0 * self.ridge * v).collect();
        for l in &self.curved {
            let d = l.phi(dot(x, &l.z)).1;
            g.iter_mut().zip(&l.z).for_each(|(a, z)| *a += d * z);
        }
        g
    }

    fn scale(&self) -> f64 {
        norm(&self.linear) + self.curved.iter().map(|l| norm(&l.z) * (1.0 + norm(&l.z))).sum::<f64>()
    }
}

/// Result of one inner minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `L ‖x - P(x - ∇/L)‖` at the returned point.
    pub gradient_mapping_norm: f64,
    pub iterations: usize,
}

pub const MAX_PGD_ITERATIONS: usize = 100_000;

fn minimize(obj: &Objective, domain: &BallDomain, tol: f64, start: Option<&[f64]>) -> Result<StepSolution> {
    let d = domain.dim;
    if obj.curved.is_empty() {
        // closed form: minimize <g, x> + c‖x‖² over the ball
        let g = &obj.linear;
        let gn = norm(g);
        let x = if gn == 0.0 {
            vec![0.0; d]
        } else if obj.ridge > 0.0 && gn / (2.0 * obj.ridge) <= domain.radius {
            g.iter().map(|v| -v / (2.0 * obj.ridge)).collect()
        } else {
            g.iter().map(|v| -domain.radius * v / gn).collect()
        };
        return Ok(StepSolution { objective: obj.value(&x), x, gradient_mapping_norm: 0.0, iterations: 0 });
    }
    let mut x = start.map_or_else(|| vec![0.0; d], <[f64]>::to_vec);
    domain.project(&mut x);
    let gm_tol = 1e-7 * (1.0 + obj.scale());
    let mut lip = 1.0;
    let mut j = obj.value(&x);
    for it in 1..=MAX_PGD_ITERATIONS {
        let g = obj.gradient(&x);
        let (y, jy) = loop {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
            domain.project(&mut y);
            let jy = obj.value(&y);
            let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            if jy <= j + dot(&g, &diff) + 0.5 * lip * dot(&diff, &diff) + 1e-15 * j.abs() || lip > 1e300 {
                break (y, jy);
            }
            lip *= 2.0;
        };
        let step = norm(&y.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        let gm = lip * step;
        let improvement = j - jy;
        x = y;
        j = jy;
        if gm <= gm_tol && improvement <= tol * (1.0 + j.abs()) {
            return Ok(StepSolution { x, objective: j, gradient_mapping_norm: gm, iterations: it });
        }
        lip = (lip / 2.0).max(1e-12);
    }
    let g = obj.gradient(&x);
    let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
    domain.project(&mut y);
    let gm = lip * norm(&y.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
    Err(Error::IterationCap { gradient_mapping_norm: gm })
}

/// `argmin_{‖x‖<=D} Σ ℓ_s(x) + (γ/ε)‖x‖² + <b, x>`; the origin when the
/// objective is constant.
pub fn objpert_step(
    history: &[ConvexLossSpec],
    b: &[f64],
    epsilon: f64,
    gamma_curv: f64,
    domain: &BallDomain,
    tol: f64,
) -> Result<Vec<f64>> {
    solve_step(history, b, epsilon, gamma_curv, domain, tol).map(|s| s.x)
}

pub fn solve_step(
    history: &[ConvexLossSpec],
    b: &[f64],
    epsilon: f64,
    gamma_curv: f64,
    domain: &BallDomain,
    tol: f64,
) -> Result<StepSolution> {
    if b.len() != domain.dim {
        return Err(Error::DimensionMismatch { expected: domain.dim, got: b.len() });
    }
    if !(epsilon > 0.0) || gamma_curv < 0.0 {
        return Err(Error::InvalidParameter(format!("need epsilon > 0 and gamma >= 0, got {epsilon}, {gamma_curv}")));
    }
    check_dims(history, domain)?;
    minimize(&Objective::new(domain.dim, history, b, gamma_curv / epsilon), domain, tol, None)
}

fn check_dims(losses: &[ConvexLossSpec], domain: &BallDomain) -> Result<()> {
    match losses.iter().find(|l| l.dim() != domain.dim) {
        Some(l) => Err(Error::DimensionMismatch { expected: domain.dim, got: l.dim() }),
        None => Ok(()),
    }
}

/// Best fixed point in hindsight and its cumulative loss.
pub fn offline_opt(domain: &BallDomain, losses: &[ConvexLossSpec]) -> Result<(Vec<f64>, f64)> {
    if losses.is_empty() {
        return Err(Error::IncompleteTrace("offline optimum needs at least one loss"));
    }
    check_dims(losses, domain)?;
    let sol = minimize(&Objective::new(domain.dim, losses, &[], 0.0), domain, 1e-9, None)?;
    let value = losses.iter().map(|l| l.value(&sol.x)).sum();
    Ok((sol.x, value))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcoOptions {
    /// Draw `b` once and reuse it.
    pub fixed_noise: bool,
    /// Curvature bound γ; the ridge weight is `γ/ε`.
    pub gamma_curv: f64,
    pub tol: f64,
}

impl Default for OcoOptions {
    fn default() -> Self {
        Self { fixed_noise: false, gamma_curv: 0.0, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcoRecord {
    /// `x_1..x_{T+1}`.
    pub points: Vec<Vec<f64>>,
    /// `ℓ_t(x_t)`.
    pub losses: Vec<f64>,
    /// `ℓ_t(x_{t+1})`.
    pub lookahead: Vec<f64>,
    pub best_point: Vec<f64>,
    /// `L*_T`.
    pub best_loss: f64,
    /// The reused noise draw, fixed-noise runs only.
    pub noise: Option<Vec<f64>>,
    pub ridge: f64,
    pub radius: f64,
    pub max_gradient_mapping_norm: f64,
}

impl OcoRecord {
    pub fn total_loss(&self) -> f64 {
        self.losses.iter().sum()
    }

    pub fn regret(&self) -> f64 {
        self.total_loss() - self.best_loss
    }

    pub fn lookahead_regret(&self) -> f64 {
        self.lookahead.iter().sum::<f64>() - self.best_loss
    }

    /// Regret after `t` rounds against the best point for the whole run.
    pub fn cumulative_loss_at(&self, t: usize) -> f64 {
        self.losses[..t].iter().sum()
    }

    /// `(Σ ℓ_t(x_{t+1}), L*_T + (γ/ε)D² + <b, x* - x_1>)` for fixed-noise runs.
    pub fn btl_terms(&self) -> Option<(f64, f64)> {
        let b = self.noise.as_ref()?;
        let lhs: f64 = self.lookahead.iter().sum();
        let shift = dot(b, &self.best_point) - dot(b, &self.points[0]);
        Some((lhs, self.best_loss + self.ridge * self.radius * self.radius + shift))
    }
}

/// Plays `T` rounds of objective perturbation. Round `t` draws its noise
/// from `stream.round(t)`; a fixed draw uses `stream.round(0)`.
pub fn run_oco(
    domain: &BallDomain,
    losses: &[ConvexLossSpec],
    noise: &ObjPertNoiseSpec,
    opts: &OcoOptions,
    stream: &RngStream,
) -> Result<OcoRecord> {
    if noise.dim != domain.dim {
        return Err(Error::DimensionMismatch { expected: domain.dim, got: noise.dim });
    }
    if !(noise.epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be at most 1, got {}", noise.epsilon)));
    }
    if losses.is_empty() {
        return Err(Error::IncompleteTrace("no losses"));
    }
    check_dims(losses, domain)?;
    let fixed = if opts.fixed_noise { Some(sample_objpert_noise(noise, &mut stream.round(0))?) } else { None };
    let ridge = opts.gamma_curv / noise.epsilon;
    let mut obj = Objective::new(domain.dim, &[], &vec![0.0; domain.dim], ridge);
    let mut points = Vec::with_capacity(losses.len() + 1);
    let mut max_gm = 0.0f64;
    let mut prev: Option<Vec<f64>> = None;
    for t in 0..=losses.len() {
        let b = match &fixed {
            Some(b) => b.clone(),
            None => sample_objpert_noise(noise, &mut stream.round(t as u64 + 1))?,
        };
        let mut o = obj.clone();
        o.linear.iter_mut().zip(&b).for_each(|(a, v)| *a += v);
        let sol = minimize(&o, domain, opts.tol, prev.as_deref())?;
        max_gm = max_gm.max(sol.gradient_mapping_norm);
        prev = Some(sol.x.clone());
        points.push(sol.x);
        if t < losses.len() {
            obj.push(&losses[t]);
        }
    }
    let played: Vec<f64> = losses.iter().zip(&points).map(|(l, x)| l.value(x)).collect();
    let lookahead: Vec<f64> = losses.iter().zip(&points[1..]).map(|(l, x)| l.value(x)).collect();
    let (best_point, best_loss) = offline_opt(domain, losses)?;
    Ok(OcoRecord {
        points,
        losses: played,
        lookahead,
        best_point,
        best_loss,
        noise: fixed,
        ridge,
        radius: domain.radius,
        max_gradient_mapping_norm: max_gm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::ObjPertKind;
    use crate::rng::Domain;
    use proptest::prelude::*;
    use rand::Rng;

    fn ball(d: usize, r: f64) -> BallDomain {
        BallDomain::new(d, r).unwrap()
    }

    #[test]
    fn step_examples() {
        let dom = ball(2, 1.0);
        assert_eq!(objpert_step(&[], &[0.0, 0.0], 1.0, 0.0, &dom, 1e-9).unwrap(), vec![0.0, 0.0]);
        let hist = vec![ConvexLossSpec::linear(vec![3.0, 4.0]), ConvexLossSpec::linear(vec![0.0, 0.0])];
        let x = objpert_step(&hist, &[0.0, 0.0], 1.0, 0.0, &dom, 1e-9).unwrap();
        assert!((x[0] + 0.6).abs() < 1e-6 && (x[1] + 0.8).abs() < 1e-6);
        // (x1 - 1)²/2 + x1² + x2² + 0.5 x1: 3 x1 = 0.5
        let sq = vec![ConvexLossSpec::squared(vec![1.0, 0.0], 1.0)];
        let x = objpert_step(&sq, &[0.5, 0.0], 1.0, 1.0, &ball(2, 100.0), 1e-12).unwrap();
        assert!((x[0] - 1.0 / 6.0).abs() < 1e-6 && x[1].abs() < 1e-6, "{x:?}");
        let grid = (0..=20_000).map(|k| -1.0 + k as f64 * 1e-4).fold((0.0, f64::INFINITY), |best, v| {
            let f = (v - 1.0) * (v - 1.0) / 2.0 + v * v + 0.5 * v;
            if f < best.1 { (v, f) } else { best }
        });
        assert!((x[0] - grid.0).abs() < 1e-4);
    }

    #[test]
    fn offline_examples() {
        let dom = ball(3, 2.0);
        let zero = vec![ConvexLossSpec::linear(vec![0.0; 3]); 4];
        assert_eq!(offline_opt(&dom, &zero).unwrap().1, 0.0);
        let opp = vec![ConvexLossSpec::linear(vec![1.0, -2.0, 0.5]), ConvexLossSpec::linear(vec![-1.0, 2.0, -0.5])];
        let (x, v) = offline_opt(&dom, &opp).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(v, 0.0);
        let g = vec![1.0, 2.0, 2.0];
        let (x, v) = offline_opt(&dom, &[ConvexLossSpec::linear(g.clone())]).unwrap();
        assert!((v + 6.0).abs() < 1e-12);
        assert!((x[0] + 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn offline_matches_random_search() {
        let dom = ball(2, 1.0);
        let mut rng = RngStream::new(1, Domain::Probe).round(0);
        let losses: Vec<ConvexLossSpec> = (0..20)
            .map(|k| {
                let z = vec![rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
                if k % 2 == 0 {
                    ConvexLossSpec::squared(z, 0.3)
                } else {
                    ConvexLossSpec::logistic(z, if k % 3 == 0 { 1.0 } else { -1.0 }).unwrap()
                }
            })
            .collect();
        let (_, v) = offline_opt(&dom, &losses).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..100_000 {
            let r = rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            let x = [r * a.cos(), r * a.sin()];
            best = best.min(losses.iter().map(|l| l.value(&x)).sum::<f64>());
        }
        assert!(v <= best + 1e-9 && best - v < 1e-4, "{v} vs {best}");
    }

    #[test]
    fn constant_losses_give_zero_regret() {
        let dom = ball(3, 1.0);
        let losses = vec![ConvexLossSpec::linear(vec![0.0; 3]); 16];
        let noise = ObjPertNoiseSpec { kind: ObjPertKind::Gamma, dim: 3, epsilon: 0.5, beta: 1.0 };
        let r = run_oco(&dom, &losses, &noise, &OcoOptions::default(), &RngStream::new(2, Domain::Noise)).unwrap();
        assert!(r.regret().abs() < 1e-12);
    }

    #[test]
    fn fixed_noise_btl_and_feasibility() {
        let dom = ball(3, 1.5);
        let mut rng = RngStream::new(3, Domain::Adversary).round(0);
        let losses: Vec<ConvexLossSpec> = (0..60)
            .map(|k| {
                let z: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.3).collect();
                match k % 3 {
                    0 => ConvexLossSpec::shifted_linear(z, 1.5),
                    1 => ConvexLossSpec::squared(z, 0.5),
                    _ => ConvexLossSpec::logistic(z, 1.0).unwrap(),
                }
            })
            .collect();
        let gamma = losses.iter().map(|l| l.bounds(1.5).2).fold(0.0, f64::max);
        for kind in [ObjPertKind::Gamma, ObjPertKind::Gaussian { delta: 0.01 }] {
            let noise = ObjPertNoiseSpec { kind, dim: 3, epsilon: 0.8, beta: 2.0 };
            let opts = OcoOptions { fixed_noise: true, gamma_curv: gamma, tol: 1e-10 };
            for rep in 0..5 {
                let r = run_oco(&dom, &losses, &noise, &opts, &RngStream::new(3, Domain::Noise).replicate(rep)).unwrap();
                assert!(r.points.iter().all(|x| norm(x) <= 1.5 + 1e-12));
                let (lhs, rhs) = r.btl_terms().unwrap();
                assert!(lhs <= rhs + 1e-6, "{lhs} > {rhs}");
                assert!(r.max_gradient_mapping_norm <= 1e-6 * (1.0 + 60.0 * 3.0));
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let dom = ball(2, 1.0);
        let losses = vec![ConvexLossSpec::linear(vec![1.0, 0.0])];
        let noise = ObjPertNoiseSpec { kind: ObjPertKind::Gamma, dim: 2, epsilon: 2.0, beta: 1.0 };
        assert!(run_oco(&dom, &losses, &noise, &OcoOptions::default(), &RngStream::new(0, Domain::Noise)).is_err());
        assert!(objpert_step(&losses, &[0.0], 1.0, 0.0, &dom, 1e-9).is_err());
        assert!(ConvexLossSpec::logistic(vec![1.0], 0.5).is_err());
        assert!(BallDomain::new(2, 0.0).is_err());
    }

    #[test]
    fn bounds_hold_on_the_ball() {
        let mut rng = RngStream::new(4, Domain::Probe).round(0);
        for k in 0..300 {
            let z: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let l = match k % 3 {
                0 => ConvexLossSpec::shifted_linear(z, 2.0),
                1 => ConvexLossSpec::squared(z, -0.7),
                _ => ConvexLossSpec::logistic(z, -1.0).unwrap(),
            };
            let (bmax, beta, gamma) = l.bounds(2.0);
            let mut x: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            ball(3, 2.0).project(&mut x);
            let v = l.value(&x);
            assert!(v >= -1e-12 && v <= bmax + 1e-12);
            assert!(norm(&l.gradient(&x)) <= beta + 1e-12);
            assert!(l.curvature(&x) * dot(&l.z, &l.z) <= gamma + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(z in proptest::collection::vec(-2.0f64..2.0, 3), x in proptest::collection::vec(-0.5f64..0.5, 3), which in 0usize..3) {
            let l = match which {
                0 => ConvexLossSpec::linear(z),
                1 => ConvexLossSpec::squared(z, 0.4),
                _ => ConvexLossSpec::logistic(z, 1.0).unwrap(),
            };
            let g = l.gradient(&x);
            let h = 1e-6;
            let fd: Vec<f64> = (0..3).map(|i| {
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += h;
                b[i] -= h;
                (l.value(&a) - l.value(&b)) / (2.0 * h)
            }).collect();
            let err = norm(&g.iter().zip(&fd).map(|(a, b)| a - b).collect::<Vec<_>>());
            prop_assert!(err <= 1e-5 * norm(&g).max(1e-3), "{g:?} vs {fd:?}");
        }

        #[test]
        fn linear_step_is_closed_form(g in proptest::collection::vec(-3.0f64..3.0, 4), r in 0.1f64..5.0) {
            let dom = ball(4, r);
            let x = objpert_step(&[ConvexLossSpec::linear(g.clone())], &[0.0; 4], 1.0, 0.0, &dom, 1e-9).unwrap();
            let gn = norm(&g);
            prop_assume!(gn > 1e-9);
            for (xi, gi) in x.iter().zip(&g) {
                prop_assert!((xi + r * gi / gn).abs() < 1e-6);
            }
        }
    }
}
