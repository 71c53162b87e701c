//! Full-information experts: FTPL and Hedge on a planted-best sequence, with
//! the be-the-leader check on a fixed-noise run.
//!
//!     cargo run --release --example experts

use diffstab::gbpa::{run_experts, ExpertsOptions, Potential, Regularizer};
use diffstab::harness::AdversarySpec;
use diffstab::perturbation::{table1_preset, Family};
use diffstab::rng::{Domain, RngStream};

fn main() -> diffstab::Result<()> {
    let (n, t) = (10, 2048);
    let adversary = AdversarySpec::PlantedBest { gap: 0.05, best_rate: 0.45, best: 3 };
    let losses = adversary.generate(n, t, &RngStream::new(1, Domain::Adversary))?;
    let eps = ((n as f64).ln() / (0.45 * t as f64)).sqrt();

    let ftpl = Potential::Ftpl(table1_preset(Family::Gamma, n, eps)?);
    let hedge = Potential::Ftrl(Regularizer::Shannon { eta: 2.0 / eps });
    let learner = RngStream::new(1, Domain::Learner);
    for (name, pot) in [("ftpl-gamma", &ftpl), ("hedge", &hedge)] {
        let run = run_experts(pot, &losses, &ExpertsOptions::default(), &learner)?;
        println!("{name:<11} regret {:7.2}   best arm {} (L* = {})", run.realized_regret(), run.best_arm, run.best_loss);
    }

    let fixed = ExpertsOptions { fixed_noise: true, ..ExpertsOptions::default() };
    let run = run_experts(&ftpl, &losses, &fixed, &learner)?;
    let lookahead: f64 = run.rounds.iter().filter_map(|r| r.lookahead_loss).sum();
    let z = run.noise.as_ref().expect("fixed-noise runs keep their draw");
    let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("be-the-leader: {lookahead} <= {:.2}", run.best_loss + 2.0 * zmax);
    Ok(())
}
