use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use policyboost::data_ingest::{load_price_csv_with, PriceField};
use policyboost::eval_harness::{emit_report, prepare, run_prepared, ExperimentConfig, ReportFormat};
use policyboost::linear_model::{ols_fit, render_significance_text, significance_report, write_significance_csv};
use policyboost::ts_stats::{pacf_reports, rank_and_select, write_ranking_csv, PacScore};
use policyboost::{Error, Result};

#[derive(Parser)]
#[command(name = "policyboost", version, about = "Stock forecasting ablations with anticipated interest-rate features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Source {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in synthetic market instead of CSV data.
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        if self.synthetic {
            cfg.synthetic = true;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Baseline,
    Proposed,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Rank tickers by maximum partial autocorrelation of the close.
    RankTickers {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long, default_value_t = 59)]
        max_lag: usize,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Rank by |PACF| instead of signed PACF.
        #[arg(long)]
        pac_abs: bool,
        #[arg(long)]
        adj_close: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one feature-frame variant as CSV.
    Features {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        source: Source,
    },
    /// OLS significance of the macro and lead-rate features.
    Validate {
        #[arg(long, default_value_t = 0.10)]
        alpha: f64,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        source: Source,
    },
    /// Train every preset with and without the proposed features.
    Ablate {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Omit the generation timestamp so reruns are byte-identical.
        #[arg(long)]
        no_timestamp: bool,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RankTickers {
            prices,
            max_lag,
            top,
            pac_abs,
            adj_close,
            out,
        } => {
            let field = if adj_close {
                PriceField::AdjClose
            } else {
                PriceField::Close
            };
            let bars = load_price_csv_with(&prices, field)?;
            let series: BTreeMap<String, Vec<f64>> = bars
                .into_iter()
                .map(|(t, b)| (t, b.iter().map(|x| x.close).collect()))
                .collect();
            let mode = if pac_abs {
                PacScore::Absolute
            } else {
                PacScore::Signed
            };
            let reports = pacf_reports(&series, max_lag)?;
            let chosen = rank_and_select(&reports, top, mode)?;
            let kept: Vec<_> = reports
                .into_iter()
                .filter(|r| chosen.contains(&r.ticker))
                .collect();
            match out {
                Some(p) => write_ranking_csv(create(&p)?, &kept, mode),
                None => write_ranking_csv(io::stdout().lock(), &kept, mode),
            }
        }
        Command::Features {
            variant,
            out,
            source,
        } => {
            let cfg = source.resolve()?;
            let prepared = prepare(&cfg)?;
            let frame = match variant {
                VariantArg::Baseline => &prepared.baseline,
                VariantArg::Proposed => &prepared.proposed,
            };
            frame.write_csv(create(&out)?)
        }
        Command::Validate { alpha, csv, source } => {
            let cfg = source.resolve()?;
            let prepared = prepare(&cfg)?;
            let fit = ols_fit(&prepared.proposed)?;
            let focus = cfg.features.proposed_names();
            let focus: Vec<&str> = focus.iter().map(String::as_str).collect();
            let rows = significance_report(&fit, alpha, &focus)?;
            print!("{}", render_significance_text(&rows, alpha));
            println!("n_obs: {}  params: {}", fit.n_obs, fit.n_params);
            if let Some(p) = csv {
                write_significance_csv(create(&p)?, &rows)?;
            }
            Ok(())
        }
        Command::Ablate {
            source,
            format,
            out,
            no_timestamp,
        } => {
            let cfg = source.resolve()?;
            let prepared = prepare(&cfg)?;
            let mut report = run_prepared(&cfg, &prepared)?;
            if !no_timestamp {
                report.metadata.generated_at = Some(chrono::Utc::now().to_rfc3339());
            }
            let format = match format {
                FormatArg::Text => ReportFormat::Text,
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Json => ReportFormat::Json,
            };
            let text = emit_report(&report, format, out.as_deref())?;
            if out.is_none() {
                io::stdout()
                    .lock()
                    .write_all(text.as_bytes())
                    .map_err(|e| Error::io("<stdout>", e))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
