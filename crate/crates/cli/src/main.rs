//! `colts <command> --config <path> [--seeds a,b,c] [--out dir] [--threads n]`

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use colts_core::config::{Experiment, ExperimentConfig};
use colts_core::experiments::{execute, preflight, Table};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "colts",
    version,
    about = "Run safe linear bandit experiments and write CSV results"
)]
struct Cli {
    /// run, sweep-gamma, sweep-m, resampling-table, rates, hard-compare or decoupled-study
    command: String,
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated seeds, replacing `[run] seeds`
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory, replacing `[run] out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, replacing `[run] threads`
    #[arg(long)]
    threads: Option<usize>,
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("colts: config error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn runtime_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("colts: error: {msg}");
    ExitCode::from(EXIT_RUNTIME)
}

fn write_table(dir: &Path, table: &Table) -> Result<PathBuf, Box<dyn std::error::Error>> {
    let path = dir.join(&table.name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(path)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let experiment = match Experiment::parse(&cli.command) {
        Ok(e) => e,
        Err(e) => return config_error(e),
    };
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(declared) = cfg.experiment {
        if declared != experiment {
            return config_error(format!(
                "config declares experiment '{}' but the command is '{}'",
                declared.name(),
                experiment.name()
            ));
        }
    }
    if let Some(seeds) = cli.seeds {
        cfg.run.seeds = seeds;
    }
    if let Some(out) = cli.out {
        cfg.run.out = out;
    }
    if let Some(threads) = cli.threads {
        cfg.run.threads = threads;
    }
    if let Err(e) = preflight(experiment, &cfg) {
        return config_error(e);
    }
    if cfg.run.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
        {
            return runtime_error(e);
        }
    }

    let report = match execute(experiment, &cfg) {
        Ok(r) => r,
        Err(e) => return runtime_error(e),
    };
    if let Err(e) = fs::create_dir_all(&cfg.run.out) {
        return runtime_error(format!("{}: {e}", cfg.run.out.display()));
    }
    for table in &report.tables {
        match write_table(&cfg.run.out, table) {
            Ok(path) => println!("wrote {} ({} rows)", path.display(), table.rows.len()),
            Err(e) => return runtime_error(format!("{}: {e}", table.name)),
        }
    }
    for line in &report.lines {
        println!("{line}");
    }
    ExitCode::SUCCESS
}
