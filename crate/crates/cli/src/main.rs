use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uptake_core::backtest::{
    predict_next, run_full_experiment_with_logs, summarize, BacktestReport, PredictionLog,
};
use uptake_core::experiment_file::ExperimentConfig;
use uptake_core::ingest::IngestError;
use uptake_core::report::{emit_forecast, emit_report, read_log_csv, write_log_csv, ReportFormat};

#[derive(Parser)]
#[command(
    name = "uptake",
    version,
    about = "Forecast monthly vaccination uptake from registry data and search-query frequencies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check every input named in the experiment file.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        vaccine: Option<String>,
    },
    /// Run the rolling backtest and print RMSE tables.
    Backtest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        vaccine: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
        /// Write one prediction-log CSV per vaccine into this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Predict the month after the last observation for one vaccine.
    Predict {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        vaccine: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild RMSE tables from saved prediction logs.
    Report {
        /// Directory of prediction-log CSV files.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Experiment file whose `[output]` table supplies defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        vaccine: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report the single-source columns over the longer level-0 window.
    #[arg(long)]
    level0_window: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Markdown => ReportFormat::Markdown,
        }
    }
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Model(inner) => Failure::Runtime(inner.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn log_file_name(index: usize, vaccine: &str) -> String {
    let safe: String = vaccine
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{index:02}_{safe}.csv")
}

fn validate(config: &Path, vaccine: Option<&str>) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(config)?;
    let data = cfg.load_datasets(vaccine)?;
    for d in &data {
        let e = d.uptake.series();
        let needed = cfg.backtest.level0_warmup_months + cfg.backtest.level1_warmup_months + 1;
        if e.len() < needed {
            return Err(Failure::Invalid(format!(
                "{}: {} months of uptake, the warm-ups need at least {needed}",
                d.id,
                e.len()
            )));
        }
        println!(
            "{}: {} months of uptake ({} to {}), {} queries",
            d.id,
            e.len(),
            e.start(),
            e.end(),
            d.panel.n_queries()
        );
    }
    Ok(())
}

fn backtest(
    config: &Path,
    vaccine: Option<&str>,
    seed: Option<u64>,
    output: &OutputArgs,
    log_dir: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.backtest.seed = seed;
    }
    let data = cfg.load_datasets(vaccine)?;
    let runs = run_full_experiment_with_logs(&data, &cfg.backtest).map_err(runtime)?;

    if let Some(dir) = log_dir.or(cfg.output.log_dir.clone()) {
        fs::create_dir_all(&dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        for (k, run) in runs.iter().enumerate() {
            let path = dir.join(log_file_name(k, &run.report.vaccine));
            let file =
                fs::File::create(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            write_log_csv(&run.log, std::io::BufWriter::new(file)).map_err(runtime)?;
        }
    }

    let level0 = output.level0_window || cfg.output.level0_window;
    let reports: Vec<BacktestReport> = runs
        .into_iter()
        .map(|r| match (level0, r.level0_report) {
            (true, Some(rep)) => rep,
            _ => r.report,
        })
        .collect();
    let format = output.format.map(Into::into).unwrap_or(cfg.output.format);
    emit(
        &emit_report(&reports, format),
        output.out.as_deref().or(cfg.output.out.as_deref()),
    )?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| r.window.is_none())
        .map(|r| r.vaccine.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!(
            "backtest failed for {}",
            failed.join(", ")
        )))
    }
}

fn predict(
    config: &Path,
    vaccine: &str,
    seed: Option<u64>,
    format: Option<Format>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.backtest.seed = seed;
    }
    let data = cfg.load_datasets(Some(vaccine))?;
    let forecast = predict_next(&data[0], &cfg.backtest).map_err(runtime)?;
    let format = format.map(Into::into).unwrap_or(cfg.output.format);
    emit(
        &emit_forecast(&forecast, format),
        out.or(cfg.output.out.as_deref()),
    )
}

fn report(
    log_dir: Option<PathBuf>,
    config: Option<&Path>,
    vaccine: Option<&str>,
    output: &OutputArgs,
) -> Result<(), Failure> {
    let cfg = config.map(ExperimentConfig::load).transpose()?;
    let defaults = cfg.map(|c| c.output).unwrap_or_default();
    let dir = log_dir.or(defaults.log_dir.clone()).ok_or_else(|| {
        Failure::Invalid("no log directory: pass --log-dir or set output.log_dir".into())
    })?;

    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();

    let level0 = output.level0_window || defaults.level0_window;
    let mut reports = Vec::new();
    for path in files {
        let file = fs::File::open(&path)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        let log =
            read_log_csv(file).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        let mut ids: Vec<String> = Vec::new();
        for e in log.entries() {
            if !ids.contains(&e.vaccine) {
                ids.push(e.vaccine.clone());
            }
        }
        for id in ids.into_iter().filter(|id| vaccine.is_none_or(|v| v == id)) {
            let own: PredictionLog =
                log.filter(|e| e.vaccine == id && (!level0 || e.method.is_level0()));
            let actual = log.actuals(&id).map_err(runtime)?;
            reports.push(summarize(&own, &actual).map_err(runtime)?);
        }
    }
    if reports.is_empty() {
        return Err(Failure::Invalid(format!(
            "no prediction logs found in {}",
            dir.display()
        )));
    }
    let format = output.format.map(Into::into).unwrap_or(defaults.format);
    emit(
        &emit_report(&reports, format),
        output.out.as_deref().or(defaults.out.as_deref()),
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Validate { config, vaccine } => validate(&config, vaccine.as_deref()),
        Command::Backtest {
            config,
            vaccine,
            seed,
            output,
            log_dir,
        } => backtest(&config, vaccine.as_deref(), seed, &output, log_dir),
        Command::Predict {
            config,
            vaccine,
            seed,
            format,
            out,
        } => predict(&config, &vaccine, seed, format, out.as_deref()),
        Command::Report {
            log_dir,
            config,
            vaccine,
            output,
        } => report(log_dir, config.as_deref(), vaccine.as_deref(), &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
