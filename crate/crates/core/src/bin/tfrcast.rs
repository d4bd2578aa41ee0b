use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tfrcast::ingest::write_raw;
use tfrcast::pipeline::{self, SynthConfig, TrainMode};
use tfrcast::project::ENDPOINT_YEAR;
use tfrcast::train::TrainConfig;
use tfrcast::{Error, Result};

#[derive(Parser)]
#[command(name = "tfrcast", version = version_string(), about = "Global quantile forecasts of total fertility rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const fn version_string() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), " (schema 1)")
}

#[derive(Args)]
struct Common {
    /// key=value run configuration; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (1 = sequential reference)
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Harmonize raw reports into an annual panel
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the ensemble
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        members: Option<usize>,
        /// Train on every year (for forward projections) instead of holding out
        #[arg(long)]
        full_sample: bool,
    },
    /// Score held-out forecasts against the panel
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        panel: PathBuf,
        /// Directory written by `train`
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, num_args = 1..)]
        comparators: Vec<PathBuf>,
    },
    /// Project every country forward
    Forecast {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        panel: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = ENDPOINT_YEAR)]
        end_year: i32,
    },
    /// Aggregate projections and comparators
    Report {
        #[command(flatten)]
        common: Common,
        /// Forecast files (ours and comparators)
        #[arg(long, num_args = 1.., required = true)]
        comparators: Vec<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = ENDPOINT_YEAR)]
        end_year: i32,
    },
    /// Finite-difference check of the analytic gradients
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 250)]
        coordinates: usize,
    },
    /// Write a synthetic raw-reports file
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 60)]
        countries: usize,
        #[arg(long, default_value_t = 80)]
        years: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(common: &Common) -> Result<TrainConfig> {
    let mut cfg = match &common.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn file_arg(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("missing input file {}", p.display())))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { common, raw, out } => {
            let cfg = load_config(&common)?;
            file_arg(&raw)?;
            let r = pipeline::run_ingest(&raw, &out, &cfg)?;
            println!("ingested {} countries into {}", r.panel.len(), out.display());
        }
        Command::Train {
            common,
            panel,
            out,
            members,
            full_sample,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(m) = members {
                cfg.members = m;
            }
            cfg.validate()?;
            file_arg(&panel)?;
            let mode = if full_sample { TrainMode::Full } else { TrainMode::Holdout };
            let trained = pipeline::run_train(&panel, &out, &cfg, mode)?;
            for m in &trained {
                println!(
                    "member {}: best epoch {} loss {:.5}",
                    m.spec.index, m.outcome.best_epoch, m.outcome.best_loss
                );
            }
        }
        Command::Evaluate {
            common: _,
            panel,
            model,
            out,
            comparators,
        } => {
            file_arg(&panel)?;
            let report = pipeline::run_evaluate(&panel, &model, &out, &comparators)?;
            for s in report.summaries.iter().filter(|s| s.metric == "rmse") {
                println!("rmse {:<10} median {:.4} (IQR {:.4}-{:.4}, n={})", s.model, s.median, s.q1, s.q3, s.n);
            }
        }
        Command::Forecast {
            common: _,
            panel,
            model,
            out,
            end_year,
        } => {
            file_arg(&panel)?;
            let recs = pipeline::run_forecast(&panel, &model, &out, end_year)?;
            println!("{} forecast rows written to {}", recs.len(), out.display());
        }
        Command::Report {
            common,
            comparators,
            weights,
            regions,
            out,
            end_year,
        } => {
            let cfg = load_config(&common)?;
            let r = pipeline::run_report(&comparators, weights.as_deref(), regions.as_deref(), &out, end_year, cfg.seed)?;
            println!("report for {} models written to {}", r.category_shares.len(), out.display());
        }
        Command::Gradcheck { common, coordinates } => {
            let cfg = load_config(&common)?;
            let report = pipeline::run_gradcheck(cfg.seed, coordinates, 1e-4)?;
            println!(
                "checked {} coordinates, max relative error {:.3e} (tolerance {:e})",
                report.checked, report.max_rel_error, report.tolerance
            );
            if !report.passed() {
                return Err(Error::Degenerate(format!(
                    "{} coordinates exceed the tolerance",
                    report.failures.len()
                )));
            }
        }
        Command::Synth {
            common,
            countries,
            years,
            out,
        } => {
            let cfg = load_config(&common)?;
            if countries == 0 || years == 0 {
                return Err(Error::Config("--countries and --years must be positive".into()));
            }
            let reports = pipeline::synth_panel(&SynthConfig {
                n_countries: countries,
                n_years: years,
                seed: cfg.seed,
                ..SynthConfig::default()
            });
            write_raw(&out, &reports)?;
            println!("{} reports written to {}", reports.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let jobs = match &cli.command {
        Command::Ingest { common, .. }
        | Command::Train { common, .. }
        | Command::Evaluate { common, .. }
        | Command::Forecast { common, .. }
        | Command::Report { common, .. }
        | Command::Gradcheck { common, .. }
        | Command::Synth { common, .. } => common.jobs,
    };
    if let Some(j) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error[config]: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
