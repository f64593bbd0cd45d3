use clap::Parser;
use mq_cli::commands::Command;
use mq_cli::config::{parse_config, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Green functions, harmonic functions and Martin-kernel limits of random
/// walks killed outside the positive quadrant.
#[derive(Debug, Parser)]
#[command(name = "mq", version)]
struct Cli {
    /// Configuration file (`key = value` lines and a `[measure]` block).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Root random seed (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 means one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MQ_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: configuring {} threads: {e}", cli.threads);
        return ExitCode::FAILURE;
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let manifest = mq_cli::run(&cfg, &cli.command, &cli.out);
    for v in &manifest.verdicts {
        println!("{} [{}] {}", v.experiment, if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    if let Some(e) = &manifest.error {
        eprintln!("error: {e}");
    }
    if manifest.success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
