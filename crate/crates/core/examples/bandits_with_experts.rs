//! Bandits with expert advice: FTPL-Gumbel over 16 experts advising on 4
//! actions, unclipped and clipped.
//!
//!     cargo run --release --example bandits_with_experts

use diffstab::bwe::{planted_advice, run_bwe, BweOptions, ClipConfig};
use diffstab::gbpa::Potential;
use diffstab::harness::AdversarySpec;
use diffstab::perturbation::PerturbationSpec;
use diffstab::rng::{Domain, RngStream};

fn main() -> diffstab::Result<()> {
    let (n, k, t) = (16, 4, 1024);
    let losses = AdversarySpec::PlantedBest { gap: 0.4, best_rate: 0.1, best: 2 }.generate(k, t, &RngStream::new(4, Domain::Adversary))?;
    let advice = planted_advice(&vec![2; t], n, k, 5, &RngStream::new(4, Domain::Advice));
    let eps = ((n as f64).ln() / (k as f64 * t as f64)).sqrt();
    let pot = Potential::Ftpl(PerturbationSpec::Gumbel { mu: 0.0, beta: 2.0 / eps });
    for clip in [ClipConfig::none(), ClipConfig::from_epsilon(eps, k)?] {
        let opts = BweOptions { clip, ..BweOptions::default() };
        let rec = run_bwe(&pot, &losses, &advice, &opts, &RngStream::new(4, Domain::Learner))?;
        println!(
            "rho = {:.4}: regret {:6.2}, best expert {}, duality gap {:.1e}",
            clip.rho(),
            rec.run.realized_regret(),
            rec.run.best_arm,
            rec.max_duality_gap
        );
    }
    Ok(())
}
