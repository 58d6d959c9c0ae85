//! Experiment engine: seeded multi-trial sweeps over the recovery solvers,
//! CSV output with a provenance header, and summary statistics.
//!
//! Trials run in parallel; every random stream is derived from
//! `(master_seed, trial index)` by the documented splitting rule, so parallel
//! and serial runs emit identical rows. Rows are gathered, sorted by sweep
//! point and trial index, and written atomically (temp file + rename).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use bslp_core::baselines::{block_omp, BompConfig};
use bslp_core::block_model::BlockPartition;
use bslp_core::sensing::{
    format_g17, generate_block_sparse_signal, generate_matrix, measure, EnsembleKind,
    MatrixEnsemble, NoiseModel,
};
use bslp_core::solver::{admm_solve, AdmmConfig};
use bslp_core::theory::{
    block_rip_exact, block_rip_monte_carlo, rip_level, DeltaMethod, TheoryReport,
    ThresholdParams, ENUMERATION_CAP,
};

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::seed::trial_streams;

/// One completed (or failed) trial. Failed solves keep their row with NaN
/// error fields rather than being dropped.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub experiment: String,
    /// Sweep point this row belongs to (numeric value or variant label).
    pub sweep_value: String,
    pub trial: usize,
    pub seed: u64,
    pub big_n: usize,
    pub n: usize,
    /// Block size the solver ran with.
    pub d: usize,
    /// Block sparsity the solver ran with.
    pub s: usize,
    pub p: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub noise_level: f64,
    pub relative_error: f64,
    pub snr_db: f64,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_s: f64,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.relative_error.is_nan()
    }
}

/// Per-sweep-point aggregate statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_relative_error: f64,
    pub median_relative_error: f64,
    pub mean_snr_db: f64,
    pub median_snr_db: f64,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub csv_path: PathBuf,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Algo {
    /// ADMM on a uniform partition with this block size.
    Admm { solver_d: usize },
    /// Greedy block pursuit at the true block budget.
    Bomp,
}

#[derive(Debug, Clone)]
struct Point {
    label: String,
    algo: Algo,
    n: usize,
    k: usize,
    p: f64,
    lambda: f64,
}

fn default_lambda_grid() -> Vec<f64> {
    (-8..=-2).map(|e| 10f64.powi(e)).collect()
}

fn build_points(cfg: &ExperimentConfig) -> Result<Vec<Point>, ConfigError> {
    let base = |label: String| Point {
        label,
        algo: Algo::Admm { solver_d: cfg.d },
        n: cfg.n,
        k: cfg.k,
        p: cfg.p,
        lambda: cfg.lambda,
    };
    let points = match cfg.experiment {
        ExperimentKind::LambdaSweep => {
            let grid = cfg.sweep.clone().unwrap_or_else(default_lambda_grid);
            grid.into_iter()
                .map(|lambda| {
                    if lambda <= 0.0 {
                        return Err(ConfigError(format!("sweep lambda {lambda} must be > 0")));
                    }
                    let mut pt = base(format_g17(lambda));
                    pt.lambda = lambda;
                    Ok(pt)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        ExperimentKind::BlockVsNonblock => {
            let mut block = base("block".into());
            block.algo = Algo::Admm { solver_d: cfg.d };
            let mut nonblock = base("nonblock".into());
            nonblock.algo = Algo::Admm { solver_d: 1 };
            vec![block, nonblock]
        }
        ExperimentKind::SnrVsP => {
            let grid = cfg
                .sweep
                .clone()
                .unwrap_or_else(|| (1..=10).map(|i| i as f64 / 10.0).collect());
            grid.into_iter()
                .map(|p| {
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(ConfigError(format!("sweep p {p} must lie in (0, 1]")));
                    }
                    let mut pt = base(format_g17(p));
                    pt.p = p;
                    Ok(pt)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        ExperimentKind::SnrVsK => {
            let grid = cfg
                .sweep
                .clone()
                .unwrap_or_else(|| [8.0, 16.0, 24.0, 32.0, 40.0, 48.0].to_vec());
            grid.into_iter()
                .map(|kf| {
                    let k = kf as usize;
                    if kf.fract() != 0.0 || k == 0 || !k.is_multiple_of(cfg.d) || k / cfg.d > cfg.big_n / cfg.d
                    {
                        return Err(ConfigError(format!(
                            "sweep k {kf} must be a positive multiple of d = {} within range",
                            cfg.d
                        )));
                    }
                    let mut pt = base(format!("{k}"));
                    pt.k = k;
                    Ok(pt)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        ExperimentKind::ErrorVsN => {
            let grid = cfg.sweep.clone().unwrap_or_else(|| {
                if cfg.paper_scale {
                    [64.0, 96.0, 128.0, 160.0, 192.0].to_vec()
                } else {
                    [32.0, 48.0, 64.0, 80.0, 96.0].to_vec()
                }
            });
            grid.into_iter()
                .map(|nf| {
                    let n = nf as usize;
                    if nf.fract() != 0.0 || n == 0 || n > cfg.big_n {
                        return Err(ConfigError(format!(
                            "sweep n {nf} must be an integer in [1, N]"
                        )));
                    }
                    let mut pt = base(format!("{n}"));
                    pt.n = n;
                    Ok(pt)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        ExperimentKind::AlgoCompare => {
            let mut admm = base("admm".into());
            admm.algo = Algo::Admm { solver_d: cfg.d };
            let mut bomp = base("bomp".into());
            bomp.algo = Algo::Bomp;
            vec![admm, bomp]
        }
        ExperimentKind::TheoryReport => {
            return Err(ConfigError(
                "theory-report is not a trial sweep; use theory_report_cmd".into(),
            ))
        }
    };
    Ok(points)
}

fn run_trial(cfg: &ExperimentConfig, point: &Point, trial: usize) -> TrialRecord {
    let streams = trial_streams(cfg.master_seed, trial as u64);
    let start = cfg.timing.then(Instant::now);

    // the generated signal always carries the configured block structure;
    // sweep points only change how it is solved
    let gen_part = BlockPartition::uniform(cfg.d, cfg.big_n / cfg.d).expect("validated");
    let s_gen = point.k / cfg.d;
    let ens = MatrixEnsemble::new(EnsembleKind::Gaussian, point.n, cfg.big_n, streams.matrix)
        .expect("validated");
    let phi = generate_matrix(&ens);
    let (x, _) = generate_block_sparse_signal(&gen_part, s_gen, streams.signal).expect("validated");
    let noise = NoiseModel::gaussian(cfg.noise).expect("validated");
    let (y, _) = measure(&phi, &x, &noise, streams.noise).expect("dims");

    let (solver_d, solve_result) = match point.algo {
        Algo::Admm { solver_d } => {
            let part = BlockPartition::uniform(solver_d, cfg.big_n / solver_d).expect("validated");
            let cfg_admm = AdmmConfig {
                lambda: point.lambda,
                gamma: cfg.gamma,
                p: point.p,
                max_iters: 5000,
                tol_primal: 1e-8,
                tol_dual: 1e-8,
                prox_mode: cfg.prox_mode,
                continuation: None,
                record_history: false,
            };
            (solver_d, admm_solve(&phi, &y, &part, &cfg_admm))
        }
        Algo::Bomp => {
            let part = gen_part.clone();
            // residual tolerance scaled to the expected noise floor
            let tol = 1e-9 + cfg.noise * (point.n as f64).sqrt();
            let cfg_bomp = BompConfig::new(s_gen, tol).expect("validated");
            (cfg.d, block_omp(&phi, &y, &part, &cfg_bomp))
        }
    };

    let runtime_s = start.map_or(0.0, |t| t.elapsed().as_secs_f64());
    let (relative_error, snr_db, iterations, converged) = match solve_result {
        Ok(res) => {
            let rel = (&res.x_hat - &x).norm() / x.norm();
            let snr = if rel > 0.0 {
                -20.0 * rel.log10()
            } else {
                f64::INFINITY
            };
            (rel, snr, res.iterations, res.converged)
        }
        Err(_) => (f64::NAN, f64::NAN, 0, false),
    };

    TrialRecord {
        experiment: cfg.experiment.name().to_string(),
        sweep_value: point.label.clone(),
        trial,
        seed: trial_streams(cfg.master_seed, trial as u64).matrix, // representative stream seed
        big_n: cfg.big_n,
        n: point.n,
        d: solver_d,
        s: point.k / solver_d,
        p: point.p,
        lambda: point.lambda,
        gamma: cfg.gamma,
        noise_level: cfg.noise,
        relative_error,
        snr_db,
        iterations,
        converged,
        runtime_s,
    }
}

/// Runs every sweep point for `cfg.trials` trials, writes the CSV, and
/// returns records plus per-point summaries.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ConfigError> {
    cfg.validate()?;
    let points = build_points(cfg)?;

    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|pi| (0..cfg.trials).map(move |t| (pi, t)))
        .collect();
    let mut indexed: Vec<((usize, usize), TrialRecord)> = jobs
        .par_iter()
        .map(|&(pi, t)| ((pi, t), run_trial(cfg, &points[pi], t)))
        .collect();
    indexed.sort_by_key(|&((pi, t), _)| (pi, t));
    let records: Vec<TrialRecord> = indexed.into_iter().map(|(_, r)| r).collect();

    let summary = summarize(&records);
    let failures = records.iter().filter(|r| r.failed()).count();

    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| ConfigError(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    let csv_path = cfg.out_dir.join(format!("{}.csv", cfg.experiment.name()));
    write_records_csv(&csv_path, cfg, &records)
        .map_err(|e| ConfigError(format!("cannot write {}: {e}", csv_path.display())))?;

    Ok(ExperimentOutput {
        records,
        summary,
        csv_path,
        failures,
    })
}

pub const CSV_HEADER: &str = "experiment,sweep_value,trial,seed,N,n,d,s,p,lambda,gamma,noise_level,relative_error,snr_db,iterations,converged,runtime_s";

fn record_line(r: &TrialRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.experiment,
        r.sweep_value,
        r.trial,
        r.seed,
        r.big_n,
        r.n,
        r.d,
        r.s,
        format_g17(r.p),
        format_g17(r.lambda),
        format_g17(r.gamma),
        format_g17(r.noise_level),
        format_g17(r.relative_error),
        format_g17(r.snr_db),
        r.iterations,
        r.converged,
        format_g17(r.runtime_s),
    )
}

/// Atomic CSV write: provenance comments, fixed header, one row per trial.
pub fn write_records_csv(
    path: &Path,
    cfg: &ExperimentConfig,
    records: &[TrialRecord],
) -> std::io::Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
        writeln!(out, "# bslp-csv-v1")?;
        writeln!(out, "# {}", cfg.provenance())?;
        writeln!(out, "{CSV_HEADER}")?;
        for r in records {
            writeln!(out, "{}", record_line(r))?;
        }
        out.flush()?;
    }
    fs::rename(&tmp, path)
}

fn parse_float(field: &str) -> Result<f64, ConfigError> {
    match field {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => field
            .parse()
            .map_err(|e| ConfigError(format!("bad float {field:?}: {e}"))),
    }
}

/// Reads back a CSV produced by [`write_records_csv`].
pub fn read_records_csv(text: &str) -> Result<Vec<TrialRecord>, ConfigError> {
    let mut records = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() || line == CSV_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 17 {
            return Err(ConfigError(format!(
                "expected 17 fields, got {} in {line:?}",
                f.len()
            )));
        }
        let int = |s: &str| -> Result<usize, ConfigError> {
            s.parse()
                .map_err(|e| ConfigError(format!("bad integer {s:?}: {e}")))
        };
        records.push(TrialRecord {
            experiment: f[0].to_string(),
            sweep_value: f[1].to_string(),
            trial: int(f[2])?,
            seed: f[3]
                .parse()
                .map_err(|e| ConfigError(format!("bad seed: {e}")))?,
            big_n: int(f[4])?,
            n: int(f[5])?,
            d: int(f[6])?,
            s: int(f[7])?,
            p: parse_float(f[8])?,
            lambda: parse_float(f[9])?,
            gamma: parse_float(f[10])?,
            noise_level: parse_float(f[11])?,
            relative_error: parse_float(f[12])?,
            snr_db: parse_float(f[13])?,
            iterations: int(f[14])?,
            converged: f[15] == "true",
            runtime_s: parse_float(f[16])?,
        });
    }
    Ok(records)
}

fn median(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// Per-point means and medians over the non-failed trials; sweep points keep
/// their first-appearance order.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<String> = Vec::new();
    for r in records {
        if !order.contains(&r.sweep_value) {
            order.push(r.sweep_value.clone());
        }
    }
    order
        .into_iter()
        .map(|label| {
            let rows: Vec<&TrialRecord> =
                records.iter().filter(|r| r.sweep_value == label).collect();
            let failures = rows.iter().filter(|r| r.failed()).count();
            let mut rels: Vec<f64> = rows
                .iter()
                .filter(|r| !r.failed())
                .map(|r| r.relative_error)
                .collect();
            let mut snrs: Vec<f64> = rows
                .iter()
                .filter(|r| !r.failed())
                .map(|r| r.snr_db)
                .collect();
            rels.sort_by(f64::total_cmp);
            snrs.sort_by(f64::total_cmp);
            let mean = |v: &[f64]| {
                if v.is_empty() {
                    f64::NAN
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            };
            SummaryRow {
                sweep_value: label,
                trials: rows.len(),
                failures,
                mean_relative_error: mean(&rels),
                median_relative_error: median(&rels),
                mean_snr_db: mean(&snrs),
                median_snr_db: median(&snrs),
            }
        })
        .collect()
}

/// Renders the summary as an aligned text table.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<24} {:>7} {:>9} {:>14} {:>14} {:>12} {:>12}\n",
        "sweep_value", "trials", "failures", "mean_rel_err", "median_rel_err", "mean_snr_db",
        "median_snr_db"
    ));
    for row in summary {
        out.push_str(&format!(
            "{:<24} {:>7} {:>9} {:>14.6e} {:>14.6e} {:>12.3} {:>12.3}\n",
            row.sweep_value,
            row.trials,
            row.failures,
            row.mean_relative_error,
            row.median_relative_error,
            row.mean_snr_db,
            row.median_snr_db
        ));
    }
    out
}

/// Builds the certification report for the configured matrix: exact RIP
/// constant when the support count allows enumeration, otherwise the
/// Monte-Carlo lower bound (when `mc-trials` is set). Writes JSON next to
/// the experiment CSVs and returns the report.
pub fn theory_report_cmd(cfg: &ExperimentConfig) -> Result<(TheoryReport, PathBuf), ConfigError> {
    cfg.validate()?;
    let part = BlockPartition::uniform(cfg.d, cfg.big_n / cfg.d).expect("validated");
    let s = cfg.block_sparsity();
    let params = ThresholdParams::new(cfg.t, cfg.p)
        .map_err(|e| ConfigError(format!("threshold params: {e}")))?;
    let level = rip_level(cfg.t, s).min(part.num_blocks());

    let streams = trial_streams(cfg.master_seed, 0);
    let ens = MatrixEnsemble::new(EnsembleKind::Gaussian, cfg.n, cfg.big_n, streams.matrix)
        .expect("validated");
    let phi = generate_matrix(&ens);

    let (delta, method) = match block_rip_exact(&phi, &part, level) {
        Ok(delta) => (delta, DeltaMethod::Exact),
        Err(bslp_core::Error::EnumerationCapExceeded { count, .. }) => match cfg.mc_trials {
            Some(trials) => {
                let delta =
                    block_rip_monte_carlo(&phi, &part, level, trials, trial_streams(cfg.master_seed, 1).matrix)
                        .map_err(|e| ConfigError(e.to_string()))?;
                (delta, DeltaMethod::MonteCarloLowerBound)
            }
            None => {
                return Err(ConfigError(format!(
                    "C(M, {level}) = {count} exceeds the enumeration cap {ENUMERATION_CAP}; \
                     pass --mc-trials to sample a Monte-Carlo lower bound instead"
                )))
            }
        },
        Err(e) => return Err(ConfigError(e.to_string())),
    };

    let report = TheoryReport::build(&phi, &part, s, &params, delta, method)
        .map_err(|e| ConfigError(e.to_string()))?;

    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| ConfigError(format!("cannot create {}: {e}", cfg.out_dir.display())))?;
    let path = cfg.out_dir.join("theory-report.json");
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, report.to_json()).map_err(|e| ConfigError(e.to_string()))?;
    fs::rename(&tmp, &path).map_err(|e| ConfigError(e.to_string()))?;
    Ok((report, path))
}

/// Human-readable certification verdict with the exact/Monte-Carlo nuance.
pub fn verdict_text(report: &TheoryReport) -> String {
    match (report.delta_method, report.certified) {
        (DeltaMethod::Exact, true) => format!(
            "CERTIFIED: exact delta_{} = {:.6} < phi(t, p) = {:.6}",
            report.rip_level, report.delta_estimate, report.phi
        ),
        (DeltaMethod::Exact, false) => format!(
            "NOT CERTIFIED: exact delta_{} = {:.6} >= phi(t, p) = {:.6}",
            report.rip_level, report.delta_estimate, report.phi
        ),
        (DeltaMethod::MonteCarloLowerBound, false) => format!(
            "REFUTED: Monte-Carlo lower bound delta_{} >= {:.6} >= phi(t, p) = {:.6}",
            report.rip_level, report.delta_estimate, report.phi
        ),
        (DeltaMethod::MonteCarloLowerBound, true) => format!(
            "INCONCLUSIVE: Monte-Carlo lower bound delta_{} >= {:.6} stays below phi(t, p) = {:.6}; \
             a lower bound cannot certify",
            report.rip_level, report.delta_estimate, report.phi
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(kind, false);
        cfg.big_n = 64;
        cfg.n = 32;
        cfg.k = 8;
        cfg.trials = 3;
        cfg.sweep = match kind {
            ExperimentKind::LambdaSweep => Some(vec![1e-4, 1e-3]),
            ExperimentKind::ErrorVsN => Some(vec![24.0, 32.0]),
            _ => None,
        };
        cfg.out_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn rows_cover_every_point_and_trial() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(ExperimentKind::LambdaSweep, dir.path());
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 2 * 3);
        for pi in 0..2 {
            for t in 0..3 {
                assert!(out
                    .records
                    .iter()
                    .any(|r| r.trial == t && r.sweep_value == out.summary[pi].sweep_value));
            }
        }
        assert_eq!(out.failures, 0);
        assert!(out.csv_path.exists());
        assert!(!out.csv_path.with_extension("csv.tmp").exists());
    }

    #[test]
    fn csv_round_trip_preserves_records() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(ExperimentKind::BlockVsNonblock, dir.path());
        let out = run_experiment(&cfg).unwrap();
        let text = fs::read_to_string(&out.csv_path).unwrap();
        let parsed = read_records_csv(&text).unwrap();
        assert_eq!(parsed.len(), out.records.len());
        for (a, b) in parsed.iter().zip(&out.records) {
            assert_eq!(a.sweep_value, b.sweep_value);
            assert_eq!(a.trial, b.trial);
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.relative_error.to_bits(), b.relative_error.to_bits());
            assert_eq!(a.iterations, b.iterations);
        }
    }

    #[test]
    fn summary_recomputable_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(ExperimentKind::LambdaSweep, dir.path());
        let out = run_experiment(&cfg).unwrap();
        let text = fs::read_to_string(&out.csv_path).unwrap();
        let reparsed = read_records_csv(&text).unwrap();
        let recomputed = summarize(&reparsed);
        assert_eq!(recomputed, out.summary);
    }

    #[test]
    fn nonblock_point_solves_with_unit_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(ExperimentKind::BlockVsNonblock, dir.path());
        let out = run_experiment(&cfg).unwrap();
        let nb: Vec<_> = out
            .records
            .iter()
            .filter(|r| r.sweep_value == "nonblock")
            .collect();
        assert_eq!(nb.len(), 3);
        assert!(nb.iter().all(|r| r.d == 1 && r.s == 8));
        let b: Vec<_> = out
            .records
            .iter()
            .filter(|r| r.sweep_value == "block")
            .collect();
        assert!(b.iter().all(|r| r.d == 2 && r.s == 4));
    }

    #[test]
    fn algo_compare_runs_both_solvers() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(ExperimentKind::AlgoCompare, dir.path());
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.summary.len(), 2);
        assert_eq!(out.summary[0].sweep_value, "admm");
        assert_eq!(out.summary[1].sweep_value, "bomp");
        // noiseless easy regime: both algorithms recover well
        assert!(out.summary[0].median_relative_error < 1e-2);
        assert!(out.summary[1].median_relative_error < 1e-6);
    }

    #[test]
    fn theory_report_tiny_instance_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::TheoryReport, false);
        cfg.out_dir = dir.path().to_path_buf();
        let (report, path) = theory_report_cmd(&cfg).unwrap();
        assert_eq!(report.delta_method, DeltaMethod::Exact);
        assert_eq!(report.rip_level, 4); // ceil(2 * 2)
        assert!(path.exists());
        let text = fs::read_to_string(path).unwrap();
        assert!(text.contains("\"delta_method\": \"exact\""));
        let verdict = verdict_text(&report);
        assert!(verdict.contains("CERTIFIED") || verdict.contains("NOT CERTIFIED"));
    }

    #[test]
    fn theory_report_cap_requires_mc_flag() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::TheoryReport, false);
        cfg.big_n = 256;
        cfg.n = 64;
        cfg.k = 24; // s = 12, level 24 of M = 128: way past the cap
        cfg.out_dir = dir.path().to_path_buf();
        let err = theory_report_cmd(&cfg).unwrap_err().to_string();
        assert!(err.contains("mc-trials"), "{err}");
        cfg.mc_trials = Some(20);
        let (report, _) = theory_report_cmd(&cfg).unwrap();
        assert_eq!(report.delta_method, DeltaMethod::MonteCarloLowerBound);
        let verdict = verdict_text(&report);
        assert!(
            verdict.contains("REFUTED") || verdict.contains("INCONCLUSIVE"),
            "{verdict}"
        );
    }

    #[test]
    fn serial_pool_emits_identical_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(ExperimentKind::LambdaSweep, dir.path());
        let parallel = run_experiment(&cfg).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg))
            .unwrap();
        assert_eq!(parallel.records.len(), serial.records.len());
        for (a, b) in parallel.records.iter().zip(&serial.records) {
            assert_eq!(a.sweep_value, b.sweep_value);
            assert_eq!(a.trial, b.trial);
            assert_eq!(a.relative_error.to_bits(), b.relative_error.to_bits());
        }
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
