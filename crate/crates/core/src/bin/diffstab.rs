use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use diffstab::bandit::{lemma2_audit, lemma7_audit, run_bandit, BanditMode, BanditOptions, GeometricResamplingCfg};
use diffstab::bwe::{run_bwe, AdviceMatrix, BweMode, BweOptions, ClipConfig};
use diffstab::divergence::{max_divergence, DiscreteDist, DivergenceQuery, Method};
use diffstab::gbpa::{run_experts, ExpertsOptions, Potential};
use diffstab::harness::{
    bandit_csv, experts_csv, oco_csv, orthant_ball_losses, parse_list, run_experiment, significant, ExperimentConfig,
    LinkKind,
};
use diffstab::losses::LossSequence;
use diffstab::oco::{run_oco, BallDomain, OcoOptions};
use diffstab::perturbation::{ObjPertKind, ObjPertNoiseSpec};
use diffstab::rng::{Domain, RngStream};
use diffstab::stats::mean_se;
use diffstab::{Error, Result};

#[derive(Parser)]
#[command(name = "diffstab", version, about = "Differential-stability audits for online learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DivMethod {
    Exact,
    Threshold,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Gr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Gamma,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Link {
    Linear,
    Squared,
    Logistic,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tsallis or approximate max-divergence between two distributions.
    Divergence {
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, value_enum, default_value = "exact")]
        method: DivMethod,
        /// Draws per side for `--method mc`.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Full-information GBPA on a loss CSV.
    RunExperts {
        #[arg(long)]
        potential: Potential,
        #[arg(long)]
        losses: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        fixed_noise: bool,
        /// Add p_1..p_N columns (quadrature for FTPL potentials).
        #[arg(long)]
        probs: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bandit GBPA with importance weighting or geometric resampling.
    RunBandit {
        #[arg(long)]
        potential: Potential,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long)]
        gr_cap: Option<usize>,
        #[arg(long)]
        losses: PathBuf,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long)]
        seed: u64,
        /// Exponent of the stability summand; defaults to the potential's level.
        #[arg(long)]
        gamma: Option<f64>,
        /// Comma list of lemma7, lemma2 (exact mode).
        #[arg(long, default_value = "")]
        audit: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bandits with expert advice.
    RunBwe {
        #[arg(long)]
        potential: Potential,
        #[arg(long)]
        losses: PathBuf,
        /// T rows of N 1-based action indices.
        #[arg(long)]
        advice: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Objective-perturbation OCO on generated orthant-ball losses.
    RunOco {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_enum, default_value = "linear")]
        link: Link,
        #[arg(long, value_enum, default_value = "gamma")]
        noise: Noise,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        rounds: usize,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        fixed_noise: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

fn dist(text: &str) -> Result<DiscreteDist> {
    DiscreteDist::new(parse_list(text, "distribution")?)
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::fs::write(path, text)?)
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Divergence { p, q, gamma, delta, method, samples, seed } => {
            let method = match method {
                DivMethod::Exact => Method::Exhaustive,
                DivMethod::Threshold => Method::Threshold,
                DivMethod::Mc => Method::MonteCarlo { samples, seed },
            };
            let query = DivergenceQuery { gamma, delta, method };
            println!("{}", significant(max_divergence(&dist(&p)?, &dist(&q)?, &query)?, 12));
        }
        Cmd::RunExperts { potential, losses, seed, fixed_noise, probs, out } => {
            let losses = LossSequence::read(losses)?;
            let opts = ExpertsOptions { fixed_noise, record_probs: probs, ..ExpertsOptions::default() };
            let run = run_experts(&potential, &losses, &opts, &RngStream::new(seed, Domain::Learner))?;
            write(&out, &experts_csv(&run, probs))?;
            println!("regret {}", significant(run.realized_regret(), 12));
        }
        Cmd::RunBandit { potential, mode, gr_cap, losses, replicates, seed, gamma, audit, out } => {
            let losses = LossSequence::read(losses)?;
            let level = potential.stability_level();
            let mode = match mode {
                Mode::Exact => BanditMode::Exact,
                Mode::Gr => BanditMode::GeometricResampling(match gr_cap {
                    Some(m) => GeometricResamplingCfg::new(m)?,
                    None => GeometricResamplingCfg::zero_order(losses.rounds()),
                }),
            };
            let gamma = gamma.or(level.map(|l| l.gamma)).unwrap_or(1.0);
            let opts = BanditOptions { mode, gamma, ..BanditOptions::default() };
            let stream = RngStream::new(seed, Domain::Learner);
            let runs = (0..replicates as u64)
                .map(|r| run_bandit(&potential, &losses, &opts, &stream.replicate(r)))
                .collect::<Result<Vec<_>>>()?;
            write(&out, &bandit_csv(&runs))?;
            let regrets: Vec<f64> = runs.iter().map(|r| r.realized_regret()).collect();
            let m = mean_se(&regrets);
            println!("mean regret {} (se {})", significant(m.mean, 12), significant(m.se, 12));
            for a in parse_list::<String>(&audit, "audit")? {
                let level = level.ok_or_else(|| Error::InvalidParameter("audits need a potential with a stability level".into()))?;
                match a.as_str() {
                    "lemma7" => {
                        let passed = runs
                            .iter()
                            .map(|r| lemma7_audit(r, level.epsilon, gamma))
                            .collect::<Result<Vec<_>>>()?
                            .into_iter()
                            .filter(|ok| *ok)
                            .count();
                        println!("lemma7 {passed}/{replicates} traces pass");
                    }
                    "lemma2" => {
                        let Potential::Ftrl(reg) = potential else {
                            return Err(Error::InvalidParameter("lemma2 audit needs an FTRL potential".into()));
                        };
                        let r = lemma2_audit(&runs, level, reg.range(losses.arms(), losses.rounds()))?;
                        println!(
                            "lemma2 lhs {} rhs {} se {} {}",
                            significant(r.lhs, 12),
                            significant(r.rhs, 12),
                            significant(r.stderr, 12),
                            if r.pass { "pass" } else { "FAIL" }
                        );
                    }
                    other => return Err(Error::Parse(format!("unknown audit {other:?}"))),
                }
            }
        }
        Cmd::RunBwe { potential, losses, advice, rho, mode, replicates, seed, out } => {
            let losses = LossSequence::read(losses)?;
            let k = losses.arms();
            let advice = AdviceMatrix::from_csv(&std::fs::read_to_string(advice)?, Some(k))?;
            let clip = if rho == 0.0 { ClipConfig::none() } else { ClipConfig::new(rho, k)? };
            let mode = match mode {
                Mode::Exact => BweMode::Exact,
                Mode::Gr => BweMode::GeometricResampling(GeometricResamplingCfg::zero_order(losses.rounds())),
            };
            let opts = BweOptions { mode, clip, ..BweOptions::default() };
            let stream = RngStream::new(seed, Domain::Learner);
            let runs = (0..replicates as u64)
                .map(|r| run_bwe(&potential, &losses, &advice, &opts, &stream.replicate(r)).map(|b| b.run))
                .collect::<Result<Vec<_>>>()?;
            write(&out, &bandit_csv(&runs))?;
            let m = mean_se(&runs.iter().map(|r| r.realized_regret()).collect::<Vec<_>>());
            println!("mean regret {} (se {})", significant(m.mean, 12), significant(m.se, 12));
        }
        Cmd::RunOco { dim, radius, link, noise, epsilon, delta, rounds, replicates, seed, fixed_noise, out } => {
            let domain = BallDomain::new(dim, radius)?;
            let (link, beta, curv) = match link {
                Link::Linear => (LinkKind::Linear, 1.0, 0.0),
                Link::Squared => (LinkKind::Squared, radius + 1.0, 1.0),
                Link::Logistic => (LinkKind::Logistic, 1.0, 0.25),
            };
            let kind = match (noise, delta) {
                (Noise::Gamma, _) => ObjPertKind::Gamma,
                (Noise::Gaussian, Some(delta)) => ObjPertKind::Gaussian { delta },
                (Noise::Gaussian, None) => return Err(Error::InvalidParameter("gaussian noise needs --delta".into())),
            };
            let spec = ObjPertNoiseSpec { kind, dim, epsilon, beta };
            let opts = OcoOptions { fixed_noise, gamma_curv: curv, ..OcoOptions::default() };
            let adv = RngStream::new(seed, Domain::Adversary);
            let noise = RngStream::new(seed, Domain::Noise);
            let runs = (0..replicates as u64)
                .map(|r| {
                    let losses = orthant_ball_losses(dim, radius, link, rounds, &adv.replicate(r))?;
                    let run = run_oco(&domain, &losses, &spec, &opts, &noise.replicate(r))?;
                    Ok((run, losses))
                })
                .collect::<Result<Vec<_>>>()?;
            write(&out, &oco_csv(&runs, &domain)?)?;
            let m = mean_se(&runs.iter().map(|r| r.0.regret()).collect::<Vec<_>>());
            println!("mean regret {} (se {})", significant(m.mean, 12), significant(m.se, 12));
            if fixed_noise {
                let ok = runs
                    .iter()
                    .filter(|(r, _)| r.btl_terms().is_some_and(|(lhs, rhs)| lhs <= rhs + 2.0 * opts.tol))
                    .count();
                println!("be-the-leader {ok}/{replicates} replicates pass");
            }
        }
        Cmd::Sweep { config } => {
            let cfg = ExperimentConfig::read(&config)?;
            let out = run_experiment(&cfg)?;
            out.write(&cfg.outputs)?;
            for c in &out.cells {
                let label = if c.sweep_value.is_empty() { "-" } else { &c.sweep_value };
                match (&c.error, c.checkpoints.last()) {
                    (Some(e), _) => println!("{label}: error: {e}"),
                    (None, Some((t, m))) => println!("{label}: T={t} mean regret {} (se {})", significant(m.mean, 6), significant(m.se, 3)),
                    (None, None) => {}
                }
                for a in &c.audits {
                    println!("{label}: {} {}", a.audit, if a.pass { "pass" } else { "FAIL" });
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
