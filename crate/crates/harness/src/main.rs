//! `bslp` CLI: runs one experiment sweep (or a theory report) and writes CSV
//! and JSON artifacts into the output directory.
//!
//! Exit codes: 0 success, 1 configuration error, 2 completed with some
//! diverged trials.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bslp::config::{parse_config_file, ConfigError, ExperimentConfig, ExperimentKind};
use bslp::experiment::{format_summary, run_experiment, theory_report_cmd, verdict_text};

#[derive(Parser, Debug)]
#[command(
    name = "bslp",
    about = "Block-sparse recovery experiments: mixed l2/lp ADMM, greedy baseline, and certification reports",
    after_help = "EXPERIMENTS:\n  \
      lambda-sweep       relative error vs regularization weight\n  \
      block-vs-nonblock  block solver vs unit-block solver on the same data\n  \
      snr-vs-p           recovery SNR vs the exponent p\n  \
      snr-vs-k           recovery SNR vs the number of nonzero entries\n  \
      error-vs-n         relative error vs the measurement count\n  \
      algo-compare       ADMM vs Block-OMP on identical instances\n  \
      theory-report      RIP certification, constants, and sample bounds\n\n\
      A key=value config file (--config) overrides defaults; explicit flags win."
)]
struct Cli {
    /// Which experiment to run.
    experiment: String,

    /// Optional key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Signal dimension.
    #[arg(long = "N", value_name = "N")]
    big_n: Option<usize>,

    /// Measurement count.
    #[arg(long)]
    n: Option<usize>,

    /// Block size of the generated signal.
    #[arg(long)]
    d: Option<usize>,

    /// Nonzero entries (k/d blocks are active).
    #[arg(long)]
    k: Option<usize>,

    /// Mixed-norm exponent in (0, 1].
    #[arg(long)]
    p: Option<f64>,

    /// Regularization weight.
    #[arg(long)]
    lambda: Option<f64>,

    /// ADMM penalty parameter.
    #[arg(long)]
    gamma: Option<f64>,

    /// Per-entry noise standard deviation.
    #[arg(long)]
    noise: Option<f64>,

    /// Trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,

    /// Threshold parameter t in (1, 2] (theory-report).
    #[arg(long)]
    t: Option<f64>,

    /// Proximal mode: block-exact | elementwise-surrogate.
    #[arg(long = "prox-mode")]
    prox_mode: Option<String>,

    /// Run at the reference dimensions (N=1024, n=128, 100 trials).
    #[arg(long = "paper-scale")]
    paper_scale: bool,

    /// Comma-separated sweep values overriding the default grid.
    #[arg(long)]
    sweep: Option<String>,

    /// Record wall-clock runtimes (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,

    /// Monte-Carlo support samples when exact RIP enumeration is infeasible.
    #[arg(long = "mc-trials")]
    mc_trials: Option<usize>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let kind = ExperimentKind::parse(&cli.experiment)?;

    let file_map = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => Default::default(),
    };

    // paper-scale changes the defaults, so resolve it first (flag wins)
    let paper_scale = cli.paper_scale
        || file_map
            .get("paper-scale")
            .map(|v| v == "true")
            .unwrap_or(false);
    let mut cfg = ExperimentConfig::defaults(kind, paper_scale);

    for (key, value) in &file_map {
        cfg.apply(key, value)?;
    }

    macro_rules! flag {
        ($field:expr, $key:literal) => {
            if let Some(v) = &$field {
                cfg.apply($key, &v.to_string())?;
            }
        };
    }
    flag!(cli.big_n, "N");
    flag!(cli.n, "n");
    flag!(cli.d, "d");
    flag!(cli.k, "k");
    flag!(cli.p, "p");
    flag!(cli.lambda, "lambda");
    flag!(cli.gamma, "gamma");
    flag!(cli.noise, "noise");
    flag!(cli.trials, "trials");
    flag!(cli.seed, "seed");
    flag!(cli.t, "t");
    flag!(cli.prox_mode, "prox-mode");
    flag!(cli.sweep, "sweep");
    flag!(cli.mc_trials, "mc-trials");
    if cli.timing {
        cfg.timing = true;
    }
    cfg.paper_scale = paper_scale;
    cfg.out_dir = cli.out.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    if cfg.experiment == ExperimentKind::TheoryReport {
        match theory_report_cmd(&cfg) {
            Ok((report, path)) => {
                println!("{}", report.to_json());
                println!("{}", verdict_text(&report));
                println!("wrote {}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(1)
            }
        }
    } else {
        match run_experiment(&cfg) {
            Ok(out) => {
                println!("# {}", cfg.provenance());
                print!("{}", format_summary(&out.summary));
                println!(
                    "wrote {} ({} rows, {} failures)",
                    out.csv_path.display(),
                    out.records.len(),
                    out.failures
                );
                if out.failures > 0 {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(1)
            }
        }
    }
}
