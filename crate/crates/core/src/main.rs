use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use irs_paratuck::crb::{expected_crb, SymbolAveraging};
use irs_paratuck::harness::{
    gnuplot_script, preset, run_experiment, write_crb_csv, write_records_csv, write_summary_csv,
    SnrSummary, SystemConfig,
};
use irs_paratuck::receivers::identifiability_check;
use irs_paratuck::{Error, Result};

#[derive(Parser)]
#[command(
    name = "irs-sim",
    version,
    about = "Monte Carlo simulator for semi-blind IRS-assisted MIMO receivers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in figure setup (fig4, fig5, fig7, fig8, fig11, fig12, fig13).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write per-run CSV.
    Run {
        #[command(flatten)]
        source: Source,
        /// Override the number of runs per SNR point.
        #[arg(long)]
        runs: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-run CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-SNR summary CSV path.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Gnuplot script path; plots the summary CSV.
        #[arg(long, requires = "summary")]
        plot_script: Option<PathBuf>,
        /// Record wall-clock time per run.
        #[arg(long)]
        timing: bool,
    },
    /// Expected CRB curves for the configured system.
    Crb {
        #[command(flatten)]
        source: Source,
        /// Channel and symbol draws averaged per SNR point.
        #[arg(long, default_value_t = 100)]
        draws: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Symbols::Random)]
        symbols: Symbols,
        /// CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the identifiability conditions of a configuration.
    Check {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Symbols {
    Random,
    Fixed,
}

fn load(source: &Source, validate: bool) -> Result<SystemConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) if validate => SystemConfig::load(path),
        (Some(path), _) => SystemConfig::parse_toml(&std::fs::read_to_string(path)?),
        (None, Some(name)) => preset(name),
        (None, None) => Err(Error::Config(vec!["pass --config or --preset".into()])),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_summary(rows: &[SnrSummary]) {
    eprintln!(
        "{:>8} {:>12} {:>12} {:>12} {:>10} {:>8} {:>6}",
        "snr_db", "nmse_h", "nmse_g", "nmse_hd", "ser", "iters", "conv"
    );
    for s in rows {
        let hd = s
            .nmse_hd
            .map(|v| format!("{v:.3e}"))
            .unwrap_or_else(|| "-".into());
        eprintln!(
            "{:>8} {:>12.3e} {:>12.3e} {:>12} {:>10.3e} {:>8.1} {:>6.2}",
            s.snr_db, s.nmse_h, s.nmse_g, hd, s.ser, s.mean_iters, s.converged_fraction
        );
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            source,
            runs,
            seed,
            out,
            summary,
            plot_script,
            timing,
        } => {
            let mut cfg = load(&source, true)?;
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            cfg.record_timing |= timing;
            let result = run_experiment(&cfg)?;
            write_records_csv(sink(out.as_deref())?, &result.records)?;
            if let Some(path) = &summary {
                write_summary_csv(File::create(path)?, &result.summaries)?;
                if let Some(script) = &plot_script {
                    let title = source.preset.as_deref().unwrap_or("experiment");
                    std::fs::write(script, gnuplot_script(&path.to_string_lossy(), title))?;
                }
            }
            let mut warnings: Vec<&String> =
                result.records.iter().flat_map(|r| &r.warnings).collect();
            warnings.sort();
            warnings.dedup();
            for w in warnings {
                eprintln!("warning: {w}");
            }
            print_summary(&result.summaries);
            Ok(true)
        }
        Command::Crb {
            source,
            draws,
            seed,
            symbols,
            out,
        } => {
            let cfg = load(&source, true)?;
            let mode = match symbols {
                Symbols::Random => SymbolAveraging::Random,
                Symbols::Fixed => SymbolAveraging::Fixed,
            };
            let points = expected_crb(
                &cfg,
                &cfg.snr_grid,
                draws,
                seed.unwrap_or(cfg.base_seed),
                mode,
            )?;
            write_crb_csv(sink(out.as_deref())?, &points)?;
            Ok(true)
        }
        Command::Check { source } => {
            let cfg = load(&source, false)?;
            let two_stage = cfg.receiver.is_two_stage();
            let blocks = cfg.irs_blocks();
            let k1 = if two_stage { cfg.k1 } else { None };
            let report = identifiability_check(cfg.m, cfg.l, cfg.n, cfg.t, blocks, k1);
            println!(
                "M = {}, L = {}, N = {}, T = {}, K = {blocks}{}",
                cfg.m,
                cfg.l,
                cfg.n,
                cfg.t,
                k1.map(|k| format!(", K1 = {k}")).unwrap_or_default()
            );
            println!("TK  = {:>8} >= N  = {}", cfg.t * blocks, cfg.n);
            println!(
                "TKM = {:>8} >= LN = {}",
                cfg.t * blocks * cfg.m,
                cfg.l * cfg.n
            );
            println!("MK  = {:>8} >= L  = {}", cfg.m * blocks, cfg.l);
            if let Some(k1) = k1 {
                println!("K1  = {k1:>8} >= L  = {}", cfg.l);
            }
            for v in &report.violations {
                println!("violated: {v}");
            }
            println!(
                "{}",
                if report.passes() {
                    "identifiable"
                } else {
                    "not identifiable"
                }
            );
            Ok(report.passes())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
