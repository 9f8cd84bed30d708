use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdee::harness::{self, ExperimentConfig, OutputFormat, Preset, ResultRow};
use fdee::{Error, Result};

/// EE-SE tradeoff simulator for full-duplex small cells.
#[derive(Parser)]
#[command(name = "fdee", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset and write one row per drop, sweep point, SE and mode.
    Run(RunArgs),
    /// Shorthand for `run --preset curve`.
    Curve(RunArgs),
    /// EE-maximizing SE for every drop, sweep point and mode.
    Maxee(RunArgs),
    /// Cross-check the solvers against the brute-force oracles.
    Verify {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Preset whose defaults the config file overrides.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; drop d uses seed + d.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<usize>,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Also write grouped statistics to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self, default_preset: Preset) -> Result<ExperimentConfig> {
        let mut config = match (&self.config, self.preset) {
            (Some(path), None) => ExperimentConfig::from_file(path)?,
            (Some(path), Some(preset)) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
                let mut value: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| Error::Format { path: path.clone(), message: e.to_string() })?;
                if let Some(map) = value.as_object_mut() {
                    map.insert("preset".into(), serde_json::to_value(preset).expect("preset serializes"));
                }
                ExperimentConfig::from_json(&value.to_string())?
            }
            (None, preset) => ExperimentConfig::preset(preset.unwrap_or(default_preset)),
        };
        if let Some(seed) = self.seed {
            config.base_seed = seed;
        }
        if let Some(drops) = self.drops {
            config.n_drops = drops;
        }
        if let Some(out) = &self.out {
            config.output_path = Some(out.clone());
        }
        if let Some(format) = self.format {
            config.format = format;
        }
        config.validate()?;
        Ok(config)
    }
}

fn write_rows(rows: &[ResultRow], config: &ExperimentConfig) -> Result<()> {
    match &config.output_path {
        Some(path) => harness::emit(rows, config.format, path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            harness::write_records(rows, config.format, &mut lock, std::path::Path::new("<stdout>"))?;
            lock.flush().map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

fn run(args: &RunArgs, default_preset: Preset, max_ee: bool) -> Result<()> {
    let config = args.resolve(default_preset)?;
    let rows = if max_ee { harness::run_max_ee(&config)? } else { harness::run_preset(&config)? };
    let failed = rows.iter().filter(|r| r.is_error()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows failed; see the error column", rows.len());
    }
    write_rows(&rows, &config)?;
    if let Some(path) = &args.summary {
        harness::emit(&harness::aggregate(&rows), config.format, path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args, Preset::Curve, false),
        Command::Curve(args) => run(args, Preset::Curve, false),
        Command::Maxee(args) => run(args, Preset::Curve, true),
        Command::Verify { instances, seed } => harness::verify_suite(*instances, *seed).map(|checks| {
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                std::process::exit(1);
            }
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
