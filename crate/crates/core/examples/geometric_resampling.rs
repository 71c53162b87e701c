//! Geometric resampling: estimating 1/p for an FTPL action without ever
//! computing p.
//!
//!     cargo run --release --example geometric_resampling

use diffstab::bandit::{geometric_resampling, GeometricResamplingCfg};
use diffstab::gbpa::{ftpl_gradient_quadrature, QuadratureCfg};
use diffstab::perturbation::PerturbationSpec;
use diffstab::rng::{Domain, RngStream};

fn main() -> diffstab::Result<()> {
    let spec = PerturbationSpec::Gumbel { mu: 0.0, beta: 2.0 };
    let est = [2.0, 0.5, 3.0, 1.0];
    let p = ftpl_gradient_quadrature(&spec, &est, &QuadratureCfg::default())?;
    let mut rng = RngStream::new(3, Domain::Learner).round(0);
    for cap in [4, 16, 1000] {
        let cfg = GeometricResamplingCfg::new(cap)?;
        let draws = 100_000;
        for (arm, &pa) in p.iter().enumerate().take(2) {
            let mean = (0..draws).map(|_| geometric_resampling(&spec, &est, arm, cfg, &mut rng) as f64).sum::<f64>() / draws as f64;
            let target = (1.0 - (1.0 - pa).powi(cap as i32)) / pa;
            println!("M = {cap:<5} arm {arm}: mean {mean:8.4}  truncated 1/p {target:8.4}  1/p {:8.4}", 1.0 / pa);
        }
    }
    Ok(())
}
