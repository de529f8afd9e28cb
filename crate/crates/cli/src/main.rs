//! Command-line driver for offline, online and validation studies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sbm_rom::study::{load_artifacts, run_offline, run_online, run_validate, Study, StudyConfig};
use sbm_rom::Error;

#[derive(Parser)]
#[command(
    name = "sbm-rom",
    version,
    about = "Shifted Boundary Method Stokes solver with POD-Galerkin reduced order models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect training snapshots and build POD bases.
    Offline(Common),
    /// Evaluate reduced models on the test set and write error and timing tables.
    Online(Common),
    /// Run the invariant checks and print a pass/fail report.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Study configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Random seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the per-sample solves (default: all cores).
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

enum Failure {
    Usage(String),
    Stage(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Stage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn stage(e: Error) -> Failure {
    Failure::Stage(e.to_string())
}

fn load(common: &Common) -> Result<(Study, Option<PathBuf>), Failure> {
    if !common.config.is_file() {
        return Err(Failure::Usage(format!(
            "config file {} does not exist",
            common.config.display()
        )));
    }
    let mut cfg = StudyConfig::load(&common.config).map_err(stage)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let output = common.output.clone().or_else(|| cfg.output.clone());
    Ok((Study::new(cfg).map_err(stage)?, output))
}

fn required(output: Option<PathBuf>) -> Result<PathBuf, Failure> {
    output
        .ok_or_else(|| Failure::Usage("no output directory: pass --output or set `output`".into()))
}

fn with_pool<T: Send>(jobs: Option<u64>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n as usize);
    }
    let pool = b
        .build()
        .map_err(|e| Failure::Stage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Offline(c) => {
            let (study, out) = load(&c)?;
            let out = required(out)?;
            let art = with_pool(c.jobs, || run_offline(&study, &out))?.map_err(stage)?;
            let m = &art.manifest;
            println!(
                "offline: {} snapshots, modes u/p/sup = {}/{}/{}, {:.2} s, artifacts in {}",
                m.training_samples.len(),
                m.modes[0],
                m.modes[1],
                m.modes[2],
                m.timings.total,
                out.display()
            );
            Ok(())
        }
        Command::Online(c) => {
            let (study, out) = load(&c)?;
            let out = required(out)?;
            let (manifest, bases) = load_artifacts(&study, &out).map_err(stage)?;
            let report =
                run_online(&study, &manifest.training_samples, &bases, &out).map_err(stage)?;
            print_online(&report, &out);
            Ok(())
        }
        Command::Validate(c) => {
            let (study, _) = load(&c)?;
            let report = with_pool(c.jobs, || run_validate(&study))?.map_err(stage)?;
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Stage("validation failed".into()))
            }
        }
    }
}

fn print_online(report: &sbm_rom::study::OnlineReport, out: &Path) {
    println!(
        "{:>4} {:>10} {:>5} {:>5} {:>5} {:>12} {:>12} {:>10} {:>10}",
        "j", "variant", "n_u", "n_p", "n_sup", "e_u", "e_p", "x solve", "x online"
    );
    for (e, t) in report.errors.iter().zip(&report.timings) {
        println!(
            "{:>4} {:>10} {:>5} {:>5} {:>5} {:>12.4e} {:>12.4e} {:>10.1} {:>10.2}",
            e.j,
            e.variant.as_str(),
            e.n_u,
            e.n_p,
            e.n_sup,
            e.e_u,
            e.e_p,
            t.solve_speedup(),
            t.online_speedup()
        );
    }
    println!("tables written to {}", out.display());
}
