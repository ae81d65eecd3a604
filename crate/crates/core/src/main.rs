use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sleeping_experts::envgen::generate_seeded;
use sleeping_experts::experiment::{run_experiment, Config, RunOptions};
use sleeping_experts::oracle::comparator;
use sleeping_experts::trace::{parse_trace, save_trace, to_trace_string};
use sleeping_experts::{Error, RngContract, StreamTag};

#[derive(Parser)]
#[command(
    name = "sleeping",
    version,
    about = "Sleeping experts and bandits: approximate-regret experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured algorithms and write summary.csv, rounds.csv and report.jsonl.
    Run {
        config: PathBuf,
        /// Assert per-round invariants; exit with status 2 if any fails.
        #[arg(long)]
        check_invariants: bool,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for trials (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write the trial-0 environment of a generator config as a trace.
    Generate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Trace file to write; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a trace file and list every problem found.
    Verify { trace: PathBuf },
    /// Print the best ranking and its loss for a trace.
    Oracle {
        trace: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            ExitCode::from(1)
        }
    }
}

fn report_error(e: &Error) {
    match e {
        Error::InvalidEnvironment(diags) => {
            eprintln!("error: invalid environment ({} problems)", diags.len());
            for d in diags {
                eprintln!("  {d}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn execute(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run {
            config,
            check_invariants,
            seed,
            out,
            threads,
        } => {
            let mut cfg = Config::load(&config)?;
            cfg.check_invariants |= check_invariants;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let outcome = run_experiment(&cfg, RunOptions { threads })?;
            for (kind, dir, trials) in &outcome.results {
                eprintln!(
                    "{kind}: {} trials written to {}",
                    trials.len(),
                    dir.display()
                );
            }
            let violations: Vec<_> = outcome.violations().collect();
            if violations.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for (kind, trial, v) in &violations {
                    eprintln!("{kind} trial {trial}: {v}");
                }
                Ok(ExitCode::from(2))
            }
        }
        Command::Generate { config, seed, out } => {
            let mut cfg = Config::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let spec = cfg.generator_spec()?.ok_or_else(|| {
                Error::Config("generate needs a generator config, not env.trace_path".into())
            })?;
            let env = generate_seeded(&spec)?;
            match out {
                Some(path) => save_trace(&env, &path)?,
                None => print!("{}", to_trace_string(&env)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { trace } => {
            let env = parse_trace(&std::fs::read_to_string(&trace)?)?;
            println!(
                "ok: N={} K={} T={} zero_count_class={}",
                env.n,
                env.k,
                env.horizon(),
                env.zero_count_class
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { trace, seed } => {
            let env = parse_trace(&std::fs::read_to_string(&trace)?)?;
            let mut rng = RngContract::new(seed).stream(0, StreamTag::Oracle);
            let best = comparator(&env, &mut rng)?;
            println!("lstar={}", best.lstar);
            println!("ranking={}", best.ranking);
            println!("exact={}", best.exact);
            Ok(ExitCode::SUCCESS)
        }
    }
}
