//! Config-driven experiment runs: trials in parallel, outputs written in trial order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::level_bound;
use crate::domain::{Environment, LossMode, ZeroCountClass};
use crate::envgen::{generate, GeneratorKind, GeneratorSpec};
use crate::error::{Error, InvariantViolation, Result};
use crate::harness::{
    check_compatible, replay, AlgorithmKind, AlgorithmParams, EnvShape, RoundRecord,
};
use crate::oracle::{comparator, OracleMethod};
use crate::regret::RegretReport;
use crate::rng::{RngContract, StreamTag};
use crate::trace::read_trace;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmList {
    One(AlgorithmKind),
    Many(Vec<AlgorithmKind>),
}

impl AlgorithmList {
    pub fn to_vec(&self) -> Vec<AlgorithmKind> {
        match self {
            AlgorithmList::One(k) => vec![*k],
            AlgorithmList::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: Option<GeneratorKind>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub epsilon: Option<f64>,
    pub zero_count_class: Option<ZeroCountClass>,
    pub trace_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub algorithm: AlgorithmList,
    pub env: EnvConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    #[serde(default)]
    pub check_invariants: bool,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_trials() -> usize {
    1
}

fn default_alphas() -> Vec<f64> {
    vec![1.0]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Loads a config file; a relative `env.trace_path` is resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(trace) = &config.env.trace_path {
            if trace.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                config.env.trace_path = Some(base.join(trace));
            }
        }
        Ok(config)
    }

    pub fn params(&self) -> AlgorithmParams {
        AlgorithmParams {
            eta: self.eta,
            mu: self.mu,
        }
    }

    /// The generator spec for a generated environment, or `None` for a trace.
    pub fn generator_spec(&self) -> Result<Option<GeneratorSpec>> {
        let e = &self.env;
        if e.trace_path.is_some() {
            if e.kind.is_some()
                || e.n.is_some()
                || e.k.is_some()
                || e.t.is_some()
                || e.epsilon.is_some()
            {
                return Err(Error::config(
                    "env.trace_path cannot be combined with generator keys",
                ));
            }
            return Ok(None);
        }
        let kind = e
            .kind
            .ok_or_else(|| Error::config("env.kind or env.trace_path is required"))?;
        let n = e.n.ok_or_else(|| Error::config("env.N is required"))?;
        let t = e.t.ok_or_else(|| Error::config("env.T is required"))?;
        let default_class = match kind {
            GeneratorKind::RealValued => ZeroCountClass::Unconstrained,
            _ => ZeroCountClass::ExactlyOne,
        };
        let spec = GeneratorSpec {
            kind,
            n,
            k: e.k.unwrap_or(n),
            t,
            epsilon: e.epsilon.unwrap_or(0.0),
            zero_count_class: e.zero_count_class.unwrap_or(default_class),
            seed: self.seed,
        };
        spec.validate()?;
        Ok(Some(spec))
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.algorithm.to_vec().is_empty() {
            return Err(Error::config("algorithm list is empty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !a.is_finite()) {
            return Err(Error::config(format!("alpha {a} is not finite")));
        }
        Ok(())
    }
}

/// Where each trial's environment comes from.
#[derive(Debug, Clone)]
pub enum EnvSource {
    /// The same recorded environment for every trial.
    Trace(Environment),
    /// A fresh environment per trial, drawn from that trial's environment stream.
    Generated(GeneratorSpec),
}

impl EnvSource {
    pub fn from_config(config: &Config) -> Result<Self> {
        match config.generator_spec()? {
            Some(spec) => Ok(EnvSource::Generated(spec)),
            None => {
                let path = config
                    .env
                    .trace_path
                    .as_ref()
                    .expect("checked by generator_spec");
                Ok(EnvSource::Trace(read_trace(path)?))
            }
        }
    }

    pub fn shape(&self) -> EnvShape {
        match self {
            EnvSource::Trace(env) => EnvShape::of(env),
            EnvSource::Generated(s) => EnvShape {
                n: s.n,
                k: s.k,
                t: s.t,
                zero_count_class: s.zero_count_class,
                loss_mode: if s.kind == GeneratorKind::RealValued {
                    LossMode::Real
                } else {
                    LossMode::Binary
                },
            },
        }
    }

    pub fn environment(&self, streams: &RngContract, trial: u64) -> Result<Environment> {
        match self {
            EnvSource::Trace(env) => Ok(env.clone()),
            EnvSource::Generated(spec) => {
                generate(spec, &mut streams.stream(trial, StreamTag::Environment))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads for trials; `None` uses rayon's default.
    pub threads: Option<usize>,
}

/// Everything one trial produces.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: u64,
    pub algorithm: AlgorithmKind,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub records: Vec<RoundRecord>,
    pub report: RegretReport,
    pub oracle_method: OracleMethod,
    pub violations: Vec<InvariantViolation>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Results per algorithm, in config order, each in trial order.
    pub results: Vec<(AlgorithmKind, PathBuf, Vec<TrialResult>)>,
}

impl RunOutcome {
    pub fn violations(&self) -> impl Iterator<Item = (AlgorithmKind, u64, &InvariantViolation)> {
        self.results.iter().flat_map(|(k, _, trials)| {
            trials
                .iter()
                .flat_map(move |r| r.violations.iter().map(move |v| (*k, r.trial, v)))
        })
    }
}

/// Runs one trial of one algorithm.
pub fn run_trial(
    source: &EnvSource,
    kind: AlgorithmKind,
    config: &Config,
    trial: u64,
) -> Result<TrialResult> {
    let streams = RngContract::new(config.seed);
    let env = source.environment(&streams, trial)?;
    let replay = replay(
        &env,
        kind,
        &config.params(),
        &streams,
        trial,
        config.check_invariants,
    )?;
    let mut oracle_rng = streams.stream(trial, StreamTag::Oracle);
    let best = comparator(&env, &mut oracle_rng)?;
    let mut violations = replay.violations.clone();
    if config.check_invariants && kind == AlgorithmKind::Level {
        // The guarantee is deterministic for the binary losses the learner saw.
        let played = replay.rounded.as_ref().unwrap_or(&env);
        let rounded_best = if replay.rounded.is_some() {
            comparator(played, &mut oracle_rng)?
        } else {
            best.clone()
        };
        if rounded_best.exact {
            let total: f64 = played
                .rounds
                .iter()
                .zip(&replay.records)
                .map(|(r, rec)| r.loss_of(rec.chosen).expect("played action is available"))
                .sum();
            let bound = level_bound(env.n, rounded_best.lstar);
            if total > bound {
                violations.push(InvariantViolation {
                    invariant: "level-bound",
                    round: env.horizon(),
                    witness: format!("total loss {total} > N·L* + N(N−1)/2 = {bound}"),
                });
            }
        }
    }
    let report = RegretReport::build(
        &env,
        &replay.losses(),
        best.ranking,
        best.exact,
        &config.alphas,
    )?;
    Ok(TrialResult {
        trial,
        algorithm: kind,
        n: env.n,
        k: env.k,
        t: env.horizon(),
        records: replay.records,
        report,
        oracle_method: best.method,
        violations,
    })
}

/// Runs every configured algorithm and writes `summary.csv`, `rounds.csv` and
/// `report.jsonl`. With several algorithms each gets its own subdirectory of `out_dir`.
pub fn run_experiment(config: &Config, options: RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let source = EnvSource::from_config(config)?;
    let shape = source.shape();
    let kinds = config.algorithm.to_vec();
    for &kind in &kinds {
        check_compatible(kind, &shape)?;
        if kind == AlgorithmKind::BanditHatt {
            config.params().bandit_config(&shape)?;
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let mut results = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let trials: Vec<TrialResult> = pool.install(|| {
            (0..config.trials as u64)
                .into_par_iter()
                .map(|trial| run_trial(&source, kind, config, trial))
                .collect::<Result<Vec<_>>>()
        })?;
        let dir = if kinds.len() > 1 {
            config.out_dir.join(kind.as_str())
        } else {
            config.out_dir.clone()
        };
        write_outputs(&dir, config.seed, &trials)?;
        results.push((kind, dir, trials));
    }
    Ok(RunOutcome { results })
}

pub const SUMMARY_HEADER: &str = "trial,algorithm,N,K,T,total_loss,lstar,alpha,approx_regret,seed";
pub const ROUNDS_HEADER: &str = "trial,t,chosen,loss,cum_loss,cum_comparator";

#[derive(Serialize)]
struct ReportLine<'a> {
    trial: u64,
    algorithm: AlgorithmKind,
    seed: u64,
    oracle: OracleMethod,
    #[serde(flatten)]
    report: &'a RegretReport,
}

/// Writes the three result files for one algorithm, in trial order.
pub fn write_outputs(dir: &Path, seed: u64, trials: &[TrialResult]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut summary = BufWriter::new(fs::File::create(dir.join("summary.csv"))?);
    let mut rounds = BufWriter::new(fs::File::create(dir.join("rounds.csv"))?);
    let mut report = BufWriter::new(fs::File::create(dir.join("report.jsonl"))?);
    writeln!(summary, "{SUMMARY_HEADER}")?;
    writeln!(rounds, "{ROUNDS_HEADER}")?;
    for r in trials {
        let rep = &r.report;
        for a in &rep.approx_regret {
            writeln!(
                summary,
                "{},{},{},{},{},{},{},{},{},{}",
                r.trial,
                r.algorithm,
                r.n,
                r.k,
                r.t,
                rep.learner_loss,
                rep.comparator_loss,
                a.alpha,
                a.value,
                seed
            )?;
        }
        for (rec, &(cum_loss, cum_cmp)) in r.records.iter().zip(&rep.per_round_cumulative) {
            writeln!(
                rounds,
                "{},{},{},{},{},{}",
                r.trial, rec.t, rec.chosen, rec.loss, cum_loss, cum_cmp
            )?;
        }
        let line = ReportLine {
            trial: r.trial,
            algorithm: r.algorithm,
            seed,
            oracle: r.oracle_method,
            report: rep,
        };
        serde_json::to_writer(&mut report, &line).map_err(|e| Error::Internal(e.to_string()))?;
        writeln!(report)?;
    }
    summary.flush()?;
    rounds.flush()?;
    report.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
        algorithm = "level"
        trials = 3
        seed = 11
        alphas = [1.0, 2.0]
        out_dir = "unused"

        [env]
        kind = "uniform-random"
        N = 5
        K = 4
        T = 50
        zero_count_class = "exactly-one"
    "#;

    #[test]
    fn parses_config() {
        let c = Config::from_toml_str(BASIC).unwrap();
        assert_eq!(c.algorithm.to_vec(), vec![AlgorithmKind::Level]);
        assert_eq!(c.trials, 3);
        let spec = c.generator_spec().unwrap().unwrap();
        assert_eq!((spec.n, spec.k, spec.t), (5, 4, 50));
        assert_eq!(spec.zero_count_class, ZeroCountClass::ExactlyOne);
    }

    #[test]
    fn algorithm_list_and_unknown_keys() {
        let c = Config::from_toml_str(
            &BASIC.replace(r#"algorithm = "level""#, r#"algorithm = ["level", "hatt"]"#),
        )
        .unwrap();
        assert_eq!(
            c.algorithm.to_vec(),
            vec![AlgorithmKind::Level, AlgorithmKind::Hatt]
        );
        assert!(Config::from_toml_str(&format!("{BASIC}\nbogus = 1")).is_err());
        assert!(Config::from_toml_str(&BASIC.replace("level", "exp3")).is_err());
    }

    #[test]
    fn summary_totals_match_rounds() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Config::from_toml_str(BASIC).unwrap();
        c.out_dir = dir.path().to_path_buf();
        let out = run_experiment(&c, RunOptions::default()).unwrap();
        let (_, _, trials) = &out.results[0];
        for r in trials {
            let sum: f64 = r.records.iter().map(|x| x.loss).sum();
            assert_eq!(sum, r.report.learner_loss);
        }
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().next().unwrap(), SUMMARY_HEADER);
        assert_eq!(summary.lines().count(), 1 + 3 * 2);
    }
}
