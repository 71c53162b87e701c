//! The five FTPL perturbation presets: action probabilities by quadrature,
//! the Gumbel/softmax identity, and measured one-step stability.
//!
//!     cargo run --release --example ftpl_presets

use diffstab::gbpa::{ftpl_gradient_quadrature, probe_stability, softmax, Potential, QuadratureCfg};
use diffstab::perturbation::{table1_preset, Family, PerturbationSpec};

fn main() -> diffstab::Result<()> {
    let n = 10;
    let cum = [3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0, 5.5, 3.5];
    let loss = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0];
    let cfg = QuadratureCfg::default();

    for family in Family::PRESETS {
        let spec = table1_preset(family, n, 0.5)?;
        let pot = Potential::Ftpl(spec);
        let p = ftpl_gradient_quadrature(&spec, &cum, &cfg)?;
        let level = pot.stability_level().expect("presets have a proved level");
        let probe = probe_stability(&pot, &cum, &loss, 1.0, &cfg)?;
        println!(
            "{:<8} p(best) = {:.4}  D = {:.4} <= {:.4}",
            family.to_string(),
            p[1],
            probe.divergence,
            level.epsilon * probe.loss_norm
        );
    }

    let gumbel = PerturbationSpec::Gumbel { mu: 0.0, beta: 1.0 };
    let quad = ftpl_gradient_quadrature(&gumbel, &cum, &QuadratureCfg::tight())?;
    let neg: Vec<f64> = cum.iter().map(|l| -l).collect();
    let gap = quad.iter().zip(softmax(&neg)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("Gumbel quadrature vs softmax: max gap {gap:.2e}");
    Ok(())
}
