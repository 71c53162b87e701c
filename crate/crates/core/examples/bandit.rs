//! Bandit FTRL with Tsallis entropy and the log-barrier, audited round by
//! round and against the stability decomposition of regret.
//!
//!     cargo run --release --example bandit

use diffstab::bandit::{lemma2_audit, lemma7_audit, run_bandit, BanditOptions};
use diffstab::gbpa::{Potential, Regularizer};
use diffstab::harness::AdversarySpec;
use diffstab::rng::{Domain, RngStream};

fn main() -> diffstab::Result<()> {
    let (n, t, reps) = (6, 500, 50);
    let adversary = AdversarySpec::IidBernoulli { means: vec![0.3, 0.5, 0.5, 0.5, 0.6, 0.6] };
    let pots = [
        Potential::Ftrl(Regularizer::Tsallis { eta: (t as f64).sqrt(), alpha: 0.5 }),
        Potential::Ftrl(Regularizer::LogBarrier { eta: 8.0 }),
    ];
    for pot in pots {
        let Potential::Ftrl(reg) = pot else { unreachable!() };
        let level = pot.stability_level().expect("FTRL has a level");
        let opts = BanditOptions { gamma: level.gamma, ..BanditOptions::default() };
        let mut runs = Vec::new();
        let mut clean = 0;
        for r in 0..reps {
            let losses = adversary.generate(n, t, &RngStream::new(2, Domain::Adversary).replicate(r))?;
            let run = run_bandit(&pot, &losses, &opts, &RngStream::new(2, Domain::Learner).replicate(r))?;
            clean += usize::from(lemma7_audit(&run, level.epsilon, level.gamma)?);
            runs.push(run);
        }
        let report = lemma2_audit(&runs, level, reg.range(n, t))?;
        println!("{reg}");
        println!("  per-step inequality held on {clean}/{reps} traces");
        println!("  regret {:.2} <= {:.2} (se {:.2}): {}", report.lhs, report.rhs, report.stderr, report.pass);
    }
    Ok(())
}
