use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use stab_runner::{run, verdict_exit_code, Experiment, ExperimentConfig, StabilityReport, Verdict};

/// Stability audits for Jordan *-homomorphisms between finite-dimensional C*-algebras.
#[derive(Debug, Parser)]
#[command(name = "stab", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[sampling] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Summary path; records go next to it with a `.records.jsonl` suffix.
    /// Without it the summary is printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[expect] verdict`.
    #[arg(long, value_enum)]
    expect: Option<Verdict>,
    /// Writes every margin row as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn records_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".records.jsonl");
    out.with_file_name(name)
}

fn write_outputs(cli: &Cli, report: &StabilityReport) -> io::Result<()> {
    match &cli.out {
        Some(out) => {
            let mut w = BufWriter::new(File::create(out)?);
            report.write_summary(&mut w)?;
            w.flush()?;
            let mut w = BufWriter::new(File::create(records_path(out))?);
            report.write_records(&mut w)?;
            w.flush()?;
        }
        None => report.write_summary(io::stdout().lock())?,
    }
    if let Some(path) = &cli.csv {
        report.write_csv(File::create(path)?).map_err(io::Error::other)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = ExperimentConfig::load(&cli.config).and_then(|mut cfg| {
        if let Some(seed) = cli.seed {
            cfg.sampling.seed = seed;
        }
        let report = run(cli.experiment, &cfg)?;
        Ok((cfg, report))
    });
    let (cfg, report) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("stab: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(e) = write_outputs(&cli, &report) {
        // an unwritable output path is a usage error, like a bad config path
        eprintln!("stab: writing the report failed: {e}");
        return ExitCode::from(2);
    }
    for c in &report.checks {
        eprintln!("{} {:<15} {} (margin {})", c.id, c.verdict.to_string(), c.name, stab_runner::report::fmt17(c.margin.0));
    }
    let expected = cli.expect.unwrap_or(cfg.expect.verdict);
    eprintln!("verdict {} (expected {expected})", report.verdict);
    ExitCode::from(verdict_exit_code(&report, expected) as u8)
}
