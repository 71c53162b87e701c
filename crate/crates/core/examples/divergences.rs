//! Tsallis max-divergences: exact, level-set and sampled, plus the two
//! structural laws (monotone in γ, no gain from post-processing).
//!
//!     cargo run --example divergences

use diffstab::divergence::{divergence_of_pushforward, max_divergence, DiscreteDist, DivergenceQuery, Method};

fn main() -> diffstab::Result<()> {
    let p = DiscreteDist::new(vec![0.1, 0.2, 0.7])?;
    let q = DiscreteDist::new(vec![0.6, 0.1, 0.3])?;

    println!("gamma  exact      level-sets");
    for gamma in [1.0, 1.25, 1.5, 1.75, 2.0] {
        let exact = max_divergence(&p, &q, &DivergenceQuery::pure(gamma))?;
        let fast = max_divergence(&p, &q, &DivergenceQuery::pure(gamma).with_method(Method::Threshold))?;
        println!("{gamma:<6} {exact:<10.6} {fast:.6}");
    }

    let approx = max_divergence(&p, &q, &DivergenceQuery::approximate(0.05))?;
    println!("delta = 0.05, gamma = 1: {approx:.6}");

    let mc = DivergenceQuery::pure(1.0).with_method(Method::MonteCarlo { samples: 200_000, seed: 7 });
    println!("sampled (2e5 draws):     {:.6}", max_divergence(&p, &q, &mc)?);

    // merging outcomes 1 and 2 can only lose information
    let merged = divergence_of_pushforward(&p, &q, &[0, 1, 1], 2, 2.0)?;
    println!("after merging, gamma = 2: {merged:.6}");
    Ok(())
}
