//! A harness sweep over the Hedge learning rate, written to CSV and SVG,
//! followed by a log-log fit of the regret curve.
//!
//!     cargo run --release --example sweep

use diffstab::harness::{run_experiment, scaling_fit, ExperimentConfig};

const CONFIG: &str = "
problem = experts
potential = regularizer=shannon eta=10
arms = 10
rounds = 4096
replicates = 20
seed = 42
workers = 2
audits = key_lemma

[adversary]
kind = planted-best:0.05,0.45,0

[sweep]
eta = 5, 20, 80

[output]
aggregate = target/sweep/aggregate.csv
per_run = target/sweep/runs.csv
audits = target/sweep/audits.csv
svg = target/sweep/regret.svg
";

fn main() -> diffstab::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let out = run_experiment(&cfg)?;
    out.write(&cfg.outputs)?;
    println!("config {} -> target/sweep/", cfg.hash);
    for cell in &out.cells {
        let pts: Vec<(f64, f64)> = cell.checkpoints.iter().filter(|(t, _)| *t >= 64).map(|(t, m)| (*t as f64, m.mean)).collect();
        let fit = scaling_fit(&pts)?;
        let key = cell.audits.first().is_some_and(|a| a.pass);
        println!("eta = {:<3} slope {:.3} (r2 {:.3}), key lemma {}", cell.sweep_value, fit.slope, fit.r2, key);
    }
    Ok(())
}
