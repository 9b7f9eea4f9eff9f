use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cinestat_core::bench::{
    emit_report, ingest_summary, run_forecast, run_pipeline, BenchError, ReportFormat, RunConfig,
};
use cinestat_core::data::{load_movies, Binner, ColumnMap, YearWindow};

/// Movie success benchmark: regression, classification, time-series and
/// neural models fitted on one movie table.
#[derive(Debug, Parser)]
#[command(name = "cinestat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
    },
    /// Parse a movie table and print the surviving rows as JSON lines.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// JSON column map; the default headers apply when omitted.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Print row counts, class balance and the genre vocabulary instead.
        #[arg(long)]
        summary: bool,
    },
    /// Fit the SARIMAX order grid and print the forecast as CSV.
    Forecast {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &Path) -> Result<RunConfig, BenchError> {
    let mut cfg = RunConfig::from_file(path)?;
    cfg.apply_seed_env()?;
    Ok(cfg)
}

fn stdout_error(e: std::io::Error) -> BenchError {
    BenchError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run {
            config,
            out,
            format,
        } => {
            let cfg = load_config(&config)?;
            let out_dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| BenchError::Config("no output directory: pass --out or set output_dir".into()))?;
            let report = run_pipeline(&cfg)?;
            for path in emit_report(&report, format, &out_dir)? {
                println!("{}", path.display());
            }
        }
        Command::Ingest {
            input,
            schema,
            summary,
        } => {
            let map = match schema {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", p.display())))?;
                    serde_json::from_str::<ColumnMap>(&text)
                        .map_err(|e| BenchError::Config(format!("invalid schema {}: {e}", p.display())))?
                }
                None => ColumnMap::default(),
            };
            let mut stdout = std::io::stdout().lock();
            if summary {
                let s = ingest_summary(&input, &map, &YearWindow::default(), &Binner::default())?;
                let text = serde_json::to_string_pretty(&s).expect("summary serializes");
                writeln!(stdout, "{text}").map_err(stdout_error)?;
            } else {
                let loaded = load_movies(&input, &map).map_err(|e| BenchError::Stage {
                    stage: "ingest",
                    source: Box::new(e),
                })?;
                for r in &loaded.records {
                    let line = serde_json::to_string(r).expect("record serializes");
                    writeln!(stdout, "{line}").map_err(stdout_error)?;
                }
                if loaded.dropped > 0 {
                    log::warn!("dropped {} malformed rows", loaded.dropped);
                }
            }
        }
        Command::Forecast { config } => {
            let cfg = load_config(&config)?;
            let ts = run_forecast(&cfg)?;
            let (p, d, q, sp, sd, sq) = (
                ts.orders[0], ts.orders[1], ts.orders[2], ts.orders[3], ts.orders[4], ts.orders[5],
            );
            log::info!("selected ({p},{d},{q})x({sp},{sd},{sq},12), AIC {:.3}", ts.aic);
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "month,point,low,high").map_err(stdout_error)?;
            for f in &ts.forecast {
                writeln!(stdout, "{},{},{},{}", f.month, f.point, f.low, f.high).map_err(stdout_error)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
