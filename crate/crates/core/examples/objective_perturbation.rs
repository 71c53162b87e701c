//! Online convex optimization by objective perturbation over the unit ball,
//! for linear, squared and logistic losses.
//!
//!     cargo run --release --example objective_perturbation

use diffstab::harness::{orthant_ball_losses, LinkKind};
use diffstab::oco::{run_oco, BallDomain, OcoOptions};
use diffstab::perturbation::{ObjPertKind, ObjPertNoiseSpec};
use diffstab::rng::{Domain, RngStream};

fn main() -> diffstab::Result<()> {
    let (d, t) = (5, 512);
    let domain = BallDomain::new(d, 1.0)?;
    for (link, beta, curv) in [(LinkKind::Linear, 1.0, 0.0), (LinkKind::Squared, 2.0, 1.0), (LinkKind::Logistic, 1.0, 0.25)] {
        let losses = orthant_ball_losses(d, 1.0, link, t, &RngStream::new(5, Domain::Adversary))?;
        let noise = ObjPertNoiseSpec { kind: ObjPertKind::Gamma, dim: d, epsilon: 0.5, beta };
        let opts = OcoOptions { fixed_noise: true, gamma_curv: curv, tol: 1e-10 };
        let run = run_oco(&domain, &losses, &noise, &opts, &RngStream::new(5, Domain::Noise))?;
        let (lhs, rhs) = run.btl_terms().expect("fixed noise");
        println!("{:<9} regret {:7.3}  lookahead regret {:7.3}  be-the-leader {lhs:.3} <= {rhs:.3}", link.to_string(), run.regret(), run.lookahead_regret());
    }
    Ok(())
}
