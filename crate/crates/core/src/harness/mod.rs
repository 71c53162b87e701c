//! Experiment orchestration: loss generators, sweeps, replicates, audits and
//! CSV/SVG output.
//!
//! A sweep cell is one value of the sweep parameter. Cells × replicates form
//! a work queue drained by `workers` threads; results are stored by index, so
//! output bytes do not depend on scheduling.

mod adversary;
mod analysis;
mod config;
mod output;
mod traces;

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub use adversary::{orthant_ball_losses, orthant_ball_point, AdversarySpec, LinkKind};
pub use analysis::{audit_key_lemma, scaling_fit, KeyLemmaReport, PairedRegret, ScalingFit};
pub use config::{parse_list, ConfigFile, ROOT};
pub use output::{config_hash, svg_chart, Series};
pub use traces::{bandit_csv, experts_csv, oco_csv, significant};

use crate::bandit::{lemma2_audit_sums, lemma7_violations, run_bandit, BanditMode, BanditOptions, GeometricResamplingCfg};
use crate::bwe::{planted_advice, run_bwe, uniform_advice, AdviceMatrix, BweMode, BweOptions, ClipConfig};
use crate::gbpa::{run_experts, ExpertsOptions, Potential, Regularizer, RunRecord};
use crate::losses::LossSequence;
use crate::oco::{offline_opt, run_oco, BallDomain, ConvexLossSpec, OcoOptions, OcoRecord};
use crate::perturbation::{ObjPertKind, ObjPertNoiseSpec};
use crate::rng::{Domain, RngStream};
use crate::stats::{mean_se, MeanSe};
use crate::{Error, Result};
use output::{cell, num};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Experts,
    Bandit,
    Bwe,
    Oco,
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "experts" => Ok(Self::Experts),
            "bandit" => Ok(Self::Bandit),
            "bwe" => Ok(Self::Bwe),
            "oco" => Ok(Self::Oco),
            other => Err(Error::Parse(format!("unknown problem {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audit {
    Lemma7,
    Lemma2,
    KeyLemma,
}

impl Audit {
    fn name(self) -> &'static str {
        match self {
            Self::Lemma7 => "lemma7",
            Self::Lemma2 => "lemma2",
            Self::KeyLemma => "key_lemma",
        }
    }
}

impl FromStr for Audit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lemma7" => Ok(Self::Lemma7),
            "lemma2" => Ok(Self::Lemma2),
            "key_lemma" | "key-lemma" | "lemma1" => Ok(Self::KeyLemma),
            other => Err(Error::Parse(format!("unknown audit {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputPaths {
    pub per_run: Option<PathBuf>,
    pub aggregate: Option<PathBuf>,
    pub audits: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

/// A parsed experiment file.
///
/// Sections: the root (`problem`, `potential`, `rounds`, `arms`,
/// `replicates`, `seed`, `workers`, `mode`, `gr_cap`, `gamma`,
/// `fixed_noise`, `record_probs`, `epsilon_level`, `audits`, `trace`),
/// `[adversary]` (`kind`), `[bwe]` (`experts`, `rho`, `advice`), `[oco]`
/// (`dim`, `radius`, `link`, `noise`, `epsilon`, `delta`, `beta`,
/// `gamma_curv`, `tol`), `[sweep]` (one key with a comma list) and
/// `[output]` (`per_run`, `aggregate`, `audits`, `svg`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub file: ConfigFile,
    pub replicates: usize,
    pub seed: u64,
    pub workers: usize,
    pub sweep: Option<Sweep>,
    pub audits: Vec<Audit>,
    pub outputs: OutputPaths,
    /// Emit every round in the per-run CSV instead of only checkpoints.
    pub trace_all: bool,
    pub hash: String,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_file(ConfigFile::parse(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        // relative output paths are taken from the config's directory
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.outputs.per_run, &mut cfg.outputs.aggregate, &mut cfg.outputs.audits, &mut cfg.outputs.svg]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let replicates = file.required::<usize>(ROOT, "replicates")?;
        if replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be positive".into()));
        }
        let seed = file.required(ROOT, "seed")?;
        let workers = file.parsed_or(ROOT, "workers", 1usize)?.max(1);
        let sweep_keys: Vec<(&str, &str)> = file.section("sweep").collect();
        let sweep = match sweep_keys[..] {
            [] => None,
            [(key, values)] => Some(Sweep { key: key.to_string(), values: parse_list(values, key)? }),
            _ => return Err(Error::Parse("sweep section takes exactly one parameter".into())),
        };
        if sweep.as_ref().is_some_and(|s| s.values.is_empty()) {
            return Err(Error::Parse("empty sweep list".into()));
        }
        let audits = file.list(ROOT, "audits")?.unwrap_or_default();
        let path = |k: &str| file.get("output", k).map(PathBuf::from);
        let outputs = OutputPaths { per_run: path("per_run"), aggregate: path("aggregate"), audits: path("audits"), svg: path("svg") };
        let trace_all = match file.get(ROOT, "trace").unwrap_or("checkpoints") {
            "checkpoints" => false,
            "all" => true,
            other => return Err(Error::Parse(format!("trace must be checkpoints or all, got {other:?}"))),
        };
        let hash = config_hash(&file.canonical(&["output"]));
        let cfg = Self { file, replicates, seed, workers, sweep, audits, outputs, trace_all, hash };
        // fail early on errors every cell would hit
        if cfg.sweep.is_none() {
            Cell::parse(&cfg.file)?;
        }
        Ok(cfg)
    }

    fn cell_file(&self, value: Option<&str>) -> ConfigFile {
        let mut f = self.file.clone();
        if let (Some(s), Some(v)) = (&self.sweep, value) {
            override_key(&mut f, &s.key, v);
        }
        f
    }
}

/// Sets `key` in the potential spec if it names one of its parameters,
/// else in the section that already holds it (`section.key` is explicit),
/// else at the root.
fn override_key(f: &mut ConfigFile, key: &str, value: &str) {
    if let Some((sec, k)) = key.split_once('.') {
        f.set(sec, k, value);
        return;
    }
    if let Some(pot) = f.get(ROOT, "potential") {
        let prefix = format!("{key}=");
        if pot.split_whitespace().any(|t| t.starts_with(&prefix)) {
            let new: Vec<String> = pot
                .split_whitespace()
                .map(|t| if t.starts_with(&prefix) { format!("{key}={value}") } else { t.to_string() })
                .collect();
            f.set(ROOT, "potential", new.join(" "));
            return;
        }
    }
    for sec in [ROOT, "adversary", "bwe", "oco"] {
        if f.get(sec, key).is_some() {
            f.set(sec, key, value);
            return;
        }
    }
    f.set(ROOT, key, value);
}

#[derive(Debug, Clone)]
enum AdviceSource {
    Uniform,
    /// Expert 0 always recommends the planted best arm.
    Planted,
    Csv(PathBuf),
}

#[derive(Debug, Clone)]
struct OcoCell {
    domain: BallDomain,
    link: LinkKind,
    noise: ObjPertNoiseSpec,
    opts: OcoOptions,
}

/// Everything one sweep cell needs to run a replicate.
#[derive(Debug, Clone)]
struct Cell {
    problem: Problem,
    rounds: usize,
    arms: usize,
    potential: Option<Potential>,
    adversary: Option<AdversarySpec>,
    experts: ExpertsOptions,
    bandit: BanditOptions,
    bwe: Option<(usize, AdviceSource, BweOptions)>,
    oco: Option<OcoCell>,
    epsilon_level: Option<f64>,
}

impl Cell {
    fn parse(f: &ConfigFile) -> Result<Self> {
        let problem: Problem = f.required(ROOT, "problem")?;
        let rounds: usize = f.required(ROOT, "rounds")?;
        if rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be positive".into()));
        }
        let epsilon_level = f.parsed(ROOT, "epsilon_level")?;
        if problem == Problem::Oco {
            let dim = f.required("oco", "dim")?;
            let radius = f.parsed_or("oco", "radius", 1.0)?;
            let domain = BallDomain::new(dim, radius)?;
            let link: LinkKind = f.parsed_or("oco", "link", LinkKind::Linear)?;
            let epsilon = f.required("oco", "epsilon")?;
            let kind = match f.get("oco", "noise").unwrap_or("gamma") {
                "gamma" => ObjPertKind::Gamma,
                "gaussian" => ObjPertKind::Gaussian { delta: f.required("oco", "delta")? },
                other => return Err(Error::Parse(format!("oco.noise must be gamma or gaussian, got {other:?}"))),
            };
            // worst case over features in the unit ball
            let (beta, curv) = match link {
                LinkKind::Linear => (1.0, 0.0),
                LinkKind::Squared => (radius + 1.0, 1.0),
                LinkKind::Logistic => (1.0, 0.25),
            };
            let noise = ObjPertNoiseSpec { kind, dim, epsilon, beta: f.parsed_or("oco", "beta", beta)? };
            noise.validate()?;
            let opts = OcoOptions {
                fixed_noise: f.parsed_or(ROOT, "fixed_noise", false)?,
                gamma_curv: f.parsed_or("oco", "gamma_curv", curv)?,
                tol: f.parsed_or("oco", "tol", 1e-9)?,
            };
            let oco = Some(OcoCell { domain, link, noise, opts });
            return Ok(Self {
                problem,
                rounds,
                arms: dim,
                potential: None,
                adversary: None,
                experts: ExpertsOptions::default(),
                bandit: BanditOptions::default(),
                bwe: None,
                oco,
                epsilon_level,
            });
        }
        let arms: usize = f.required(ROOT, "arms")?;
        let potential: Potential = f.required(ROOT, "potential")?;
        potential.validate()?;
        let adversary: AdversarySpec = f.required("adversary", "kind")?;
        adversary.validate(arms)?;
        let experts = ExpertsOptions {
            fixed_noise: f.parsed_or(ROOT, "fixed_noise", false)?,
            record_probs: f.parsed_or(ROOT, "record_probs", false)?,
            ..ExpertsOptions::default()
        };
        let gamma = match f.parsed(ROOT, "gamma")? {
            Some(g) => g,
            None => potential.stability_level().map_or(1.0, |l| l.gamma),
        };
        let gr = match f.parsed(ROOT, "gr_cap")? {
            Some(cap) => GeometricResamplingCfg::new(cap)?,
            None => GeometricResamplingCfg::zero_order(rounds),
        };
        let mode = f.get(ROOT, "mode").unwrap_or("exact");
        let bandit_mode = match mode {
            "exact" => BanditMode::Exact,
            "gr" => BanditMode::GeometricResampling(gr),
            other => return Err(Error::Parse(format!("mode must be exact or gr, got {other:?}"))),
        };
        let bandit = BanditOptions { mode: bandit_mode, gamma, ..BanditOptions::default() };
        let bwe = if problem == Problem::Bwe {
            let n = f.required("bwe", "experts")?;
            let advice = match f.get("bwe", "advice").unwrap_or("uniform") {
                "uniform" => AdviceSource::Uniform,
                "planted" => AdviceSource::Planted,
                other => match other.strip_prefix("csv:") {
                    Some(p) => AdviceSource::Csv(PathBuf::from(p.trim())),
                    None => return Err(Error::Parse(format!("bwe.advice must be uniform, planted or csv:<path>, got {other:?}"))),
                },
            };
            let clip = match f.get("bwe", "rho").unwrap_or("0") {
                "auto" => {
                    let eps = epsilon_level
                        .or_else(|| potential.stability_level().map(|l| l.epsilon))
                        .ok_or_else(|| Error::InvalidParameter("rho = auto needs a stability level".into()))?;
                    ClipConfig::from_epsilon(eps, arms)?
                }
                v => {
                    let rho: f64 = v.parse().map_err(|_| Error::Parse(format!("bwe.rho: cannot parse {v:?}")))?;
                    if rho == 0.0 { ClipConfig::none() } else { ClipConfig::new(rho, arms)? }
                }
            };
            let mode = match bandit_mode {
                BanditMode::Exact => BweMode::Exact,
                BanditMode::GeometricResampling(c) => BweMode::GeometricResampling(c),
            };
            Some((n, advice, BweOptions { mode, clip, gamma, ..BweOptions::default() }))
        } else {
            None
        };
        Ok(Self {
            problem,
            rounds,
            arms,
            potential: Some(potential),
            adversary: Some(adversary),
            experts,
            bandit,
            bwe,
            oco: None,
            epsilon_level,
        })
    }

    fn level_epsilon(&self) -> Option<f64> {
        self.epsilon_level.or_else(|| match (&self.oco, &self.potential) {
            (Some(o), _) => Some(o.noise.epsilon),
            (None, Some(p)) => p.stability_level().map(|l| l.epsilon),
            _ => None,
        })
    }
}

/// Powers of two up to `rounds`, plus `rounds` itself.
pub fn checkpoints(rounds: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..usize::BITS).map(|k| 1usize << k).take_while(|&t| t <= rounds).collect();
    if v.last() != Some(&rounds) {
        v.push(rounds);
    }
    v
}

/// One row of a replicate's trace: `(t, regret, loss, arm)`.
type TraceRow = (usize, f64, f64, Option<usize>);

#[derive(Debug, Clone, Default)]
struct ReplicateOut {
    rows: Vec<TraceRow>,
    paired: Option<PairedRegret>,
    lemma7_violations: Option<usize>,
    lemma2: Option<(f64, f64)>,
    loss_bound: f64,
}

fn trace_rows(run: &RunRecord, ts: &[usize]) -> Vec<TraceRow> {
    ts.iter().map(|&t| {
        let r = &run.rounds[t - 1];
        (t, run.regret_at(t), r.loss, Some(r.arm))
    }).collect()
}

fn oco_rows(run: &OcoRecord, losses: &[ConvexLossSpec], domain: &BallDomain, ts: &[usize]) -> Result<Vec<TraceRow>> {
    ts.iter()
        .map(|&t| {
            let best = offline_opt(domain, &losses[..t])?.1;
            Ok((t, run.cumulative_loss_at(t) - best, run.losses[t - 1], None))
        })
        .collect()
}

fn run_replicate(cell: &Cell, cfg: &ExperimentConfig, rep: usize) -> Result<ReplicateOut> {
    let adv = RngStream::new(cfg.seed, Domain::Adversary).replicate(rep as u64);
    let learner = RngStream::new(cfg.seed, Domain::Learner).replicate(rep as u64);
    let ts = if cfg.trace_all { (1..=cell.rounds).collect() } else { checkpoints(cell.rounds) };
    let wants = |a| cfg.audits.contains(&a);
    let mut out = ReplicateOut { loss_bound: 1.0, ..ReplicateOut::default() };
    if let Some(o) = &cell.oco {
        let losses = orthant_ball_losses(o.domain.dim, o.domain.radius, o.link, cell.rounds, &adv)?;
        let noise = RngStream::new(cfg.seed, Domain::Noise).replicate(rep as u64);
        let run = run_oco(&o.domain, &losses, &o.noise, &o.opts, &noise)?;
        out.rows = oco_rows(&run, &losses, &o.domain, &ts)?;
        out.paired = Some(PairedRegret::from_oco(&run));
        out.loss_bound = losses.iter().map(|l| l.bounds(o.domain.radius).0).fold(0.0, f64::max);
        return Ok(out);
    }
    let pot = cell.potential.as_ref().expect("non-oco cells carry a potential");
    let losses = cell.adversary.as_ref().expect("non-oco cells carry an adversary").generate(cell.arms, cell.rounds, &adv)?;
    let run = match (cell.problem, &cell.bwe) {
        (Problem::Experts, _) => run_experts(pot, &losses, &cell.experts, &learner)?,
        (Problem::Bandit, _) => run_bandit(pot, &losses, &cell.bandit, &learner)?,
        (Problem::Bwe, Some((n, source, opts))) => {
            let stream = RngStream::new(cfg.seed, Domain::Advice).replicate(rep as u64);
            let advice = make_advice(source, cell, &losses, *n, &stream)?;
            run_bwe(pot, &losses, &advice, opts, &learner)?.run
        }
        _ => unreachable!("bwe cells carry bwe settings"),
    };
    out.rows = trace_rows(&run, &ts);
    if wants(Audit::KeyLemma) {
        out.paired = Some(PairedRegret::from_run(&run)?);
    }
    let exact_bandit = matches!(cell.problem, Problem::Bandit | Problem::Bwe) && run.rounds[0].summand.is_some();
    if wants(Audit::Lemma7) && exact_bandit {
        let eps = cell.level_epsilon().ok_or_else(|| Error::InvalidParameter("lemma7 audit needs a stability level".into()))?;
        out.lemma7_violations = Some(lemma7_violations(&run, eps, cell.bandit.gamma)?.len());
    }
    if wants(Audit::Lemma2) && exact_bandit {
        let s: Option<f64> = run.rounds.iter().map(|r| r.summand).sum();
        out.lemma2 = s.map(|s| (run.realized_regret(), s));
    }
    Ok(out)
}

fn make_advice(source: &AdviceSource, cell: &Cell, losses: &LossSequence, n: usize, stream: &RngStream) -> Result<AdviceMatrix> {
    let k = cell.arms;
    match source {
        AdviceSource::Uniform => Ok(uniform_advice(cell.rounds, n, k, stream)),
        AdviceSource::Planted => {
            let best = match cell.adversary {
                Some(AdversarySpec::PlantedBest { best, .. }) => vec![best; cell.rounds],
                _ => losses.rows().iter().map(|r| crate::losses::argmin(r).0).collect(),
            };
            Ok(planted_advice(&best, n, k, 0, stream))
        }
        AdviceSource::Csv(p) => {
            let m = AdviceMatrix::from_csv(&std::fs::read_to_string(p)?, Some(k))?;
            if m.experts() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.experts() });
            }
            Ok(m)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub audit: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub n: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    /// Empty when there is no sweep.
    pub sweep_value: String,
    pub checkpoints: Vec<(usize, MeanSe)>,
    pub audits: Vec<AuditRow>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub per_run: String,
    pub aggregate: String,
    pub audits: String,
    pub svg: String,
    pub cells: Vec<CellSummary>,
}

impl ExperimentOutput {
    /// Writes every output named in `paths`.
    pub fn write(&self, paths: &OutputPaths) -> Result<()> {
        for (p, text) in [
            (&paths.per_run, &self.per_run),
            (&paths.aggregate, &self.aggregate),
            (&paths.audits, &self.audits),
            (&paths.svg, &self.svg),
        ] {
            if let Some(p) = p {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(p, text)?;
            }
        }
        Ok(())
    }
}

/// Runs every sweep cell × replicate. A failing cell is reported in the
/// `error` column and the other cells still run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let values: Vec<Option<String>> = match &cfg.sweep {
        Some(s) => s.values.iter().cloned().map(Some).collect(),
        None => vec![None],
    };
    // errors are not Clone (they may hold I/O errors); cells keep the text
    let cells: Vec<std::result::Result<Cell, String>> =
        values.iter().map(|v| Cell::parse(&cfg.cell_file(v.as_deref())).map_err(|e| e.to_string())).collect();
    let jobs: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_ok())
        .flat_map(|(c, _)| (0..cfg.replicates).map(move |r| (c, r)))
        .collect();
    let results: Mutex<Vec<Option<Result<ReplicateOut>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, r)) = jobs.get(i) else { break };
                let cell = cells[c].as_ref().expect("only valid cells are queued");
                let res = run_replicate(cell, cfg, r);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(res);
            });
        }
    });
    let mut results = results.into_inner().expect("workers finished").into_iter();
    let mut summaries = Vec::with_capacity(cells.len());
    let mut per_run = String::from("config_hash,sweep_value,replicate,t,regret,loss,arm\n");
    for (parsed, value) in cells.iter().zip(&values) {
        let sweep_value = value.clone().unwrap_or_default();
        let reps: Vec<Result<ReplicateOut>> = match parsed {
            Ok(_) => results.by_ref().take(cfg.replicates).map(|r| r.expect("every job ran")).collect(),
            Err(_) => Vec::new(),
        };
        let outcome = match parsed {
            Err(e) => Err(e.clone()),
            Ok(c) => reps
                .into_iter()
                .collect::<Result<Vec<_>>>()
                .and_then(|reps| summarize(cfg, c, &reps).map(|s| (reps, s)))
                .map_err(|e| e.to_string()),
        };
        let summary = match outcome {
            Ok((reps, (checkpoints, audits))) => {
                for (r, rep) in reps.iter().enumerate() {
                    for &(t, regret, loss, arm) in &rep.rows {
                        let arm = arm.map(|a| (a + 1).to_string()).unwrap_or_default();
                        per_run.push_str(&format!("{},{},{r},{t},{},{},{arm}\n", cfg.hash, cell(&sweep_value), num(regret), num(loss)));
                    }
                }
                CellSummary { sweep_value, checkpoints, audits, error: None }
            }
            Err(e) => CellSummary { sweep_value, checkpoints: Vec::new(), audits: Vec::new(), error: Some(e) },
        };
        summaries.push(summary);
    }
    Ok(render(cfg, summaries, per_run))
}

type Summary = (Vec<(usize, MeanSe)>, Vec<AuditRow>);

fn summarize(cfg: &ExperimentConfig, cell: &Cell, reps: &[ReplicateOut]) -> Result<Summary> {
    let ts: Vec<usize> = reps[0].rows.iter().map(|r| r.0).collect();
    let ts = if cfg.trace_all { checkpoints(cell.rounds) } else { ts };
    let checkpoints = ts
        .iter()
        .map(|&t| {
            let xs: Vec<f64> = reps.iter().map(|r| r.rows.iter().find(|row| row.0 == t).map_or(f64::NAN, |row| row.1)).collect();
            (t, mean_se(&xs))
        })
        .collect();
    let mut audits = Vec::new();
    for audit in &cfg.audits {
        match audit {
            Audit::KeyLemma => {
                let samples: Vec<PairedRegret> = reps.iter().filter_map(|r| r.paired).collect();
                let eps = cell.level_epsilon().ok_or_else(|| Error::InvalidParameter("key lemma audit needs a stability level".into()))?;
                let delta = match cell.oco.as_ref().map(|o| o.noise.kind) {
                    Some(ObjPertKind::Gaussian { delta }) => delta,
                    _ => 0.0,
                };
                let bound = reps.iter().map(|r| r.loss_bound).fold(0.0, f64::max);
                let r = audit_key_lemma(&samples, eps, delta, bound)?;
                audits.push(AuditRow { audit: audit.name(), lhs: r.lhs, rhs: r.rhs, stderr: r.stderr, n: r.replicates, pass: r.pass });
            }
            Audit::Lemma7 => {
                let counts: Vec<usize> = reps.iter().filter_map(|r| r.lemma7_violations).collect();
                if counts.is_empty() {
                    return Err(Error::InvalidParameter("lemma7 audit runs on exact bandit traces only".into()));
                }
                let bad: usize = counts.iter().sum();
                audits.push(AuditRow { audit: audit.name(), lhs: bad as f64, rhs: 0.0, stderr: 0.0, n: counts.len(), pass: bad == 0 });
            }
            Audit::Lemma2 => {
                let pairs: Vec<(f64, f64)> = reps.iter().filter_map(|r| r.lemma2).collect();
                let reg = match cell.potential {
                    Some(Potential::Ftrl(reg)) => reg,
                    _ => return Err(Error::InvalidParameter("lemma2 audit needs an FTRL potential".into())),
                };
                if pairs.is_empty() {
                    return Err(Error::InvalidParameter("lemma2 audit runs on exact bandit traces only".into()));
                }
                let mut level = Potential::Ftrl(reg).stability_level().expect("FTRL potentials have a level");
                if let Some(e) = cell.epsilon_level {
                    level.epsilon = e;
                }
                let range = regularizer_range(&reg, cell);
                let r = lemma2_audit_sums(&pairs, level, range)?;
                audits.push(AuditRow { audit: audit.name(), lhs: r.lhs, rhs: r.rhs, stderr: r.stderr, n: r.replicates, pass: r.pass });
            }
        }
    }
    Ok((checkpoints, audits))
}

fn regularizer_range(reg: &Regularizer, cell: &Cell) -> f64 {
    let n = cell.bwe.as_ref().map_or(cell.arms, |b| b.0);
    reg.range(n, cell.rounds)
}

fn render(cfg: &ExperimentConfig, cells: Vec<CellSummary>, per_run: String) -> ExperimentOutput {
    let mut aggregate = String::from("config_hash,sweep_value,T_checkpoint,mean_regret,stderr,n,error\n");
    let mut audits = String::from("config_hash,sweep_value,audit,lhs,rhs,stderr,n,pass\n");
    let mut series = Vec::new();
    for c in &cells {
        let v = cell(&c.sweep_value);
        match &c.error {
            Some(e) => aggregate.push_str(&format!("{},{v},,,,0,{}\n", cfg.hash, cell(e))),
            None => {
                for (t, m) in &c.checkpoints {
                    aggregate.push_str(&format!("{},{v},{t},{},{},{},\n", cfg.hash, num(m.mean), num(m.se), m.n));
                }
                series.push(Series {
                    label: if v.is_empty() { "mean regret".into() } else { format!("{} = {v}", cfg.sweep.as_ref().map_or("", |s| &s.key)) },
                    points: c.checkpoints.iter().map(|(t, m)| (*t as f64, m.mean)).collect(),
                });
            }
        }
        for a in &c.audits {
            audits.push_str(&format!("{},{v},{},{},{},{},{},{}\n", cfg.hash, a.audit, num(a.lhs), num(a.rhs), num(a.stderr), a.n, a.pass));
        }
    }
    let svg = svg_chart(&format!("regret ({})", cfg.hash), "T", "mean regret", &series);
    ExperimentOutput { per_run, aggregate, audits, svg, cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHANNON: &str = "problem = experts
potential = regularizer=shannon eta=1
arms = 4
rounds = 64
replicates = 3
seed = 11
[adversary]
kind = planted-best:0.3,0.2,0
[sweep]
eta = 0.1, 1, 10
[output]
aggregate = agg.csv
";

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(1), vec![1]);
        assert_eq!(checkpoints(8), vec![1, 2, 4, 8]);
        assert_eq!(checkpoints(10), vec![1, 2, 4, 8, 10]);
    }

    #[test]
    fn sweep_shape_and_hash() {
        let cfg = ExperimentConfig::parse(SHANNON).unwrap();
        let out = run_experiment(&cfg).unwrap();
        let rows: Vec<&str> = out.aggregate.lines().skip(1).collect();
        assert_eq!(rows.len(), 3 * 7);
        assert!(rows.iter().all(|r| r.starts_with(&cfg.hash)));
        let etas: Vec<&str> = rows.iter().map(|r| r.split(',').nth(1).unwrap()).collect();
        assert_eq!(etas.iter().filter(|e| **e == "10").count(), 7);
        assert_eq!(out.per_run.lines().count(), 1 + 3 * 3 * 7);
        assert_eq!(out.cells[0].checkpoints.last().unwrap().1.n, 3);
        assert!(out.svg.matches("<polyline").count() == 3);
        // changing only the output section keeps the hash
        let moved = ExperimentConfig::parse(&SHANNON.replace("agg.csv", "elsewhere.csv")).unwrap();
        assert_eq!(moved.hash, cfg.hash);
        let other = ExperimentConfig::parse(&SHANNON.replace("seed = 11", "seed = 12")).unwrap();
        assert_ne!(other.hash, cfg.hash);
    }

    #[test]
    fn deterministic_across_runs_and_workers() {
        let cfg = ExperimentConfig::parse(SHANNON).unwrap();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let mut par = cfg.clone();
        par.workers = 4;
        let c = run_experiment(&par).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_run, c.per_run);
        assert_eq!(a.aggregate, c.aggregate);
    }

    #[test]
    fn aggregates_recompute_from_runs() {
        let cfg = ExperimentConfig::parse(SHANNON).unwrap();
        let out = run_experiment(&cfg).unwrap();
        for c in &out.cells {
            for (t, m) in &c.checkpoints {
                let xs: Vec<f64> = out
                    .per_run
                    .lines()
                    .skip(1)
                    .map(|l| l.split(',').collect::<Vec<_>>())
                    .filter(|f| f[1] == c.sweep_value && f[3] == t.to_string())
                    .map(|f| f[4].parse().unwrap())
                    .collect();
                let r = mean_se(&xs);
                assert!((r.mean - m.mean).abs() < 1e-12 && (r.se - m.se).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn failing_cell_is_reported() {
        let text = SHANNON.replace("eta = 0.1, 1, 10", "eta = 1, -1");
        let out = run_experiment(&ExperimentConfig::parse(&text).unwrap()).unwrap();
        assert!(out.cells[0].error.is_none());
        assert!(out.cells[1].error.is_some());
        let last = out.aggregate.lines().last().unwrap();
        assert!(last.contains(",-1,,,,0,") && !last.ends_with(','));
    }

    #[test]
    fn bandit_audits_run() {
        let text = "problem = bandit
potential = regularizer=tsallis eta=8 alpha=0.5
arms = 3
rounds = 50
replicates = 20
seed = 3
audits = lemma7, lemma2, key_lemma
[adversary]
kind = iid-bernoulli:0.2,0.5,0.6
";
        let out = run_experiment(&ExperimentConfig::parse(text).unwrap()).unwrap();
        let names: Vec<&str> = out.cells[0].audits.iter().map(|a| a.audit).collect();
        assert_eq!(names, vec!["lemma7", "lemma2", "key_lemma"]);
        assert!(out.cells[0].audits[0].pass && out.cells[0].audits[1].pass);
        assert_eq!(out.audits.lines().count(), 4);
    }

    #[test]
    fn bwe_and_oco_cells() {
        let bwe = "problem = bwe
potential = family=gumbel mu=0 beta=2
arms = 3
rounds = 40
replicates = 2
seed = 5
[adversary]
kind = planted-best:0.4,0.1,2
[bwe]
experts = 5
advice = planted
";
        let out = run_experiment(&ExperimentConfig::parse(bwe).unwrap()).unwrap();
        assert!(out.cells[0].error.is_none(), "{:?}", out.cells[0].error);
        let oco = "problem = oco
rounds = 32
replicates = 4
seed = 9
fixed_noise = true
audits = key_lemma
[oco]
dim = 3
link = squared
epsilon = 0.5
";
        let out = run_experiment(&ExperimentConfig::parse(oco).unwrap()).unwrap();
        assert!(out.cells[0].error.is_none(), "{:?}", out.cells[0].error);
        assert_eq!(out.cells[0].checkpoints.len(), 6);
        assert!(out.per_run.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn override_targets() {
        let mut f = ConfigFile::parse("potential = family=gamma shape=1 scale=2\n[oco]\nepsilon = 0.5\n").unwrap();
        override_key(&mut f, "scale", "3");
        override_key(&mut f, "epsilon", "0.1");
        override_key(&mut f, "rounds", "8");
        override_key(&mut f, "bwe.rho", "0.01");
        assert_eq!(f.get(ROOT, "potential"), Some("family=gamma shape=1 scale=3"));
        assert_eq!(f.get("oco", "epsilon"), Some("0.1"));
        assert_eq!(f.get(ROOT, "rounds"), Some("8"));
        assert_eq!(f.get("bwe", "rho"), Some("0.01"));
    }
}
