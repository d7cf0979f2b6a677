//! Command-line interface: distribution tables, single-matrix fitting,
//! synthetic simulation, and the replication benchmark.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, malformed
//! inputs, invalid configs), 2 on numerical failures.

use crate::factor_core::io::{read_count_csv_path, write_count_csv_path, write_real_csv_path};
use crate::factor_core::{init_nndsvd, init_random, ConvergenceSpec};
use crate::gpdist::{
    gp_log_pmf, gp_sample, kurtosis_gap, kurtosis_gp, kurtosis_nb, nb_alpha_matching, nb_log_pmf,
    to_natural, GPParamsMeanDisp, NBParams,
};
use crate::harness::{
    gen_counts, gen_truth, render_summary, run_sweep, stream_rng, write_report_json,
    write_table1_csv, DispersionRegime, ExperimentConfig,
};
use crate::models::{fit_gpmf, fit_nbmf, fit_pmf, DispersionParams, FitReport, NbmfConfig};
use crate::{Error, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "countfact",
    version,
    about = "Count-matrix factorization under Poisson, negative binomial, \
             and generalized Poisson likelihoods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate a generalized Poisson pmf, its variance-matched negative
    /// binomial, and both excess kurtoses
    Dist(DistArgs),
    /// Fit a factorization model to a count-matrix CSV
    Fit(FitArgs),
    /// Generate a synthetic dataset (truth factors plus sampled counts)
    Simulate(SimulateArgs),
    /// Run the replication benchmark over dispersion regimes
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug)]
struct DistArgs {
    /// Distribution mean λ (> 0)
    #[arg(long)]
    lambda: f64,
    /// Dispersion θ (≥ 0)
    #[arg(long)]
    theta: f64,
    /// Largest count tabulated
    #[arg(long, default_value_t = 30)]
    xmax: u64,
    /// Also draw this many samples and add an empirical-frequency column
    #[arg(long)]
    nsamples: Option<u64>,
    /// Seed for --nsamples (falls back to COUNTFACT_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Require the negative binomial columns (on by default when θ > 0;
    /// an error at θ = 0, where no variance-matched NB exists)
    #[arg(long)]
    nb: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum ModelArg {
    Pmf,
    Nbmf,
    Gpmf,
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum ThetaModeArg {
    RowWise,
    Shared,
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum InitArg {
    Nndsvd,
    Random,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Headerless CSV of non-negative integer counts
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Factorization rank
    #[arg(long = "K")]
    k: usize,
    /// Negative binomial dispersion (nbmf only)
    #[arg(long, default_value_t = 5.0)]
    alpha: f64,
    /// Dispersion structure (gpmf only)
    #[arg(long, value_enum, default_value_t = ThetaModeArg::RowWise)]
    theta_mode: ThetaModeArg,
    #[arg(long, value_enum, default_value_t = InitArg::Nndsvd)]
    init: InitArg,
    /// Seed for --init random (falls back to COUNTFACT_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Relative-change convergence tolerance
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Write the JSON fit report here (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the factors as CSV files under this path prefix
    #[arg(long)]
    factors_out: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long = "I", default_value_t = 50)]
    i: usize,
    #[arg(long = "J", default_value_t = 100)]
    j: usize,
    #[arg(long = "K", default_value_t = 5)]
    k: usize,
    /// "constant:<value>" or "heterogeneous"
    #[arg(long, default_value = "constant:0")]
    regime: String,
    /// Master seed (falls back to COUNTFACT_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix; writes {out}Y.csv, {out}W0.csv, {out}H0.csv,
    /// {out}theta0.csv
    #[arg(long)]
    out: String,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Experiment config JSON; omitted means the reference protocol
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving report.json and table1.csv
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (defaults to available cores)
    #[arg(long)]
    parallelism: Option<usize>,
    /// Comma-separated regime sweep overriding the default six
    #[arg(long)]
    regimes: Option<String>,
}

/// Entry point used by the binary; maps errors to the exit-code contract.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Numerical failures exit with 2, everything else (usage, I/O, config)
/// with 1.
fn exit_code_for(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Dist(args) => {
            let stdout = std::io::stdout();
            cmd_dist(&args, &mut stdout.lock())
        }
        Command::Fit(args) => cmd_fit(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Benchmark(args) => cmd_benchmark(&args),
    }
}

/// Flag value, else COUNTFACT_SEED, else 0; a malformed variable is a usage
/// error rather than a silent default.
fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        None => Ok(0),
        Some(text) => text.trim().parse().map_err(|_| {
            Error::InvalidInput(format!(
                "COUNTFACT_SEED must be a non-negative 64-bit integer, got {text:?}"
            ))
        }),
    }
}

fn seed_or_env(flag: Option<u64>) -> Result<u64> {
    let env = std::env::var("COUNTFACT_SEED").ok();
    resolve_seed(flag, env.as_deref())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn cmd_dist(args: &DistArgs, out: &mut dyn Write) -> Result<()> {
    if !(args.lambda.is_finite() && args.lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "--lambda must be finite and > 0, got {}",
            args.lambda
        )));
    }
    let p = GPParamsMeanDisp::new(args.lambda, args.theta)?;
    let with_nb = args.theta > 0.0;
    if args.nb && !with_nb {
        return Err(Error::InvalidInput(
            "no variance-matched negative binomial exists at theta = 0".into(),
        ));
    }

    writeln!(out, "# lambda,{}", args.lambda)?;
    writeln!(out, "# theta,{}", args.theta)?;
    writeln!(out, "# gp_excess_kurtosis,{}", kurtosis_gp(&p)?)?;
    let nb = if with_nb {
        let alpha = nb_alpha_matching(&p)?;
        writeln!(out, "# nb_alpha,{alpha}")?;
        writeln!(out, "# nb_excess_kurtosis,{}", kurtosis_nb(args.lambda, alpha)?)?;
        writeln!(out, "# kurtosis_gap,{}", kurtosis_gap(&p)?)?;
        Some(NBParams::new(alpha, args.lambda / (args.lambda + alpha))?)
    } else {
        None
    };

    let frequencies = match args.nsamples {
        None => None,
        Some(0) => {
            return Err(Error::InvalidInput("--nsamples must be >= 1".into()));
        }
        Some(n) => {
            let seed = seed_or_env(args.seed)?;
            let mut rng = stream_rng(seed, 0, "dist");
            let mut counts: Vec<u64> = vec![0; (args.xmax + 1) as usize];
            for _ in 0..n {
                let x = gp_sample(&p, &mut rng)? as usize;
                if x >= counts.len() {
                    counts.resize(x + 1, 0);
                }
                counts[x] += 1;
            }
            writeln!(out, "# nsamples,{n}")?;
            Some((counts, n))
        }
    };

    let natural = to_natural(&p);
    let rows = match &frequencies {
        Some((counts, _)) => (counts.len() as u64 - 1).max(args.xmax),
        None => args.xmax,
    };
    write!(out, "x,gp_pmf")?;
    if with_nb {
        write!(out, ",nb_pmf")?;
    }
    if frequencies.is_some() {
        write!(out, ",empirical")?;
    }
    writeln!(out)?;
    for x in 0..=rows {
        write!(out, "{x},{}", gp_log_pmf(x, &natural).exp())?;
        if let Some(nbp) = &nb {
            write!(out, ",{}", nb_log_pmf(x, nbp).exp())?;
        }
        if let Some((counts, n)) = &frequencies {
            let c = counts.get(x as usize).copied().unwrap_or(0);
            write!(out, ",{}", c as f64 / *n as f64)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Machine-readable fit report; optional fields appear only for the models
/// they belong to.
#[derive(Serialize)]
struct FitJson {
    model: String,
    k: usize,
    converged: bool,
    iterations: usize,
    final_nll: f64,
    nll_trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    w: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|k| m[(i, k)]).collect())
        .collect()
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let y = read_count_csv_path(&args.input)?;
    let init = match args.init {
        InitArg::Nndsvd => init_nndsvd::<f64>(&y, args.k)?,
        InitArg::Random => {
            let seed = seed_or_env(args.seed)?;
            init_random::<f64, _>(&y, args.k, &mut stream_rng(seed, 0, "init-random-0"))?
        }
    };
    let spec = ConvergenceSpec::new(args.tol, args.max_iters)?;

    let (report, theta_mode, alpha): (FitReport<f64>, Option<&str>, Option<f64>) =
        match args.model {
            ModelArg::Pmf => (fit_pmf(&y, init, &spec)?, None, None),
            ModelArg::Nbmf => (
                fit_nbmf(&y, init, &NbmfConfig::new(args.alpha)?, &spec)?,
                None,
                Some(args.alpha),
            ),
            ModelArg::Gpmf => {
                let (d0, mode) = match args.theta_mode {
                    ThetaModeArg::RowWise => (
                        DispersionParams::row_wise(vec![1.0; y.nrows()])?,
                        "row_wise",
                    ),
                    ThetaModeArg::Shared => (DispersionParams::shared(1.0)?, "shared"),
                };
                (fit_gpmf(&y, init, d0, &spec)?, Some(mode), None)
            }
        };

    let doc = FitJson {
        model: match args.model {
            ModelArg::Pmf => "pmf",
            ModelArg::Nbmf => "nbmf",
            ModelArg::Gpmf => "gpmf",
        }
        .to_string(),
        k: args.k,
        converged: report.converged,
        iterations: report.iterations,
        final_nll: report.final_nll(),
        nll_trace: report.nll_trace.clone(),
        theta_mode: theta_mode.map(str::to_string),
        theta: report.dispersion.as_ref().map(|d| d.values()),
        alpha,
        w: matrix_rows(&report.factors.w),
        h: matrix_rows(&report.factors.h),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    match &args.output {
        Some(path) => {
            ensure_parent(path)?;
            fs::write(path, text)?;
        }
        None => {
            let stdout = std::io::stdout();
            stdout.lock().write_all(text.as_bytes())?;
        }
    }

    if let Some(prefix) = &args.factors_out {
        let w_path = PathBuf::from(format!("{prefix}W.csv"));
        ensure_parent(&w_path)?;
        write_real_csv_path(&report.factors.w, &w_path)?;
        write_real_csv_path(&report.factors.h, &PathBuf::from(format!("{prefix}H.csv")))?;
        if let Some(d) = &report.dispersion {
            let values = d.values();
            let column = DMatrix::from_column_slice(values.len(), 1, &values);
            write_real_csv_path(&column, &PathBuf::from(format!("{prefix}theta.csv")))?;
        }
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let regime: DispersionRegime = args.regime.parse()?;
    let cfg = ExperimentConfig {
        i: args.i,
        j: args.j,
        k: args.k,
        dispersion_regime: regime,
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    let master = seed_or_env(args.seed)?;
    let (truth, d) = gen_truth(&cfg, &mut stream_rng(master, 0, "truth"))?;
    let y = gen_counts(&truth, &d, &mut stream_rng(master, 0, "counts"))?;

    let y_path = PathBuf::from(format!("{}Y.csv", args.out));
    ensure_parent(&y_path)?;
    write_count_csv_path(&y, &y_path)?;
    write_real_csv_path(&truth.w, &PathBuf::from(format!("{}W0.csv", args.out)))?;
    write_real_csv_path(&truth.h, &PathBuf::from(format!("{}H0.csv", args.out)))?;
    let thetas = d.values();
    let column = DMatrix::from_column_slice(thetas.len(), 1, &thetas);
    write_real_csv_path(&column, &PathBuf::from(format!("{}theta0.csv", args.out)))?;
    Ok(())
}

/// The reference sweep: five constant dispersion levels plus the
/// heterogeneous regime.
fn default_sweep() -> Vec<DispersionRegime> {
    vec![
        DispersionRegime::Constant(0.0),
        DispersionRegime::Constant(0.5),
        DispersionRegime::Constant(1.0),
        DispersionRegime::Constant(1.5),
        DispersionRegime::Constant(2.0),
        DispersionRegime::Heterogeneous,
    ]
}

fn parse_regime_list(text: &str) -> Result<Vec<DispersionRegime>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(part.parse()?);
    }
    if out.is_empty() {
        return Err(Error::Config("--regimes lists no regimes".into()));
    }
    Ok(out)
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let cfg: ExperimentConfig = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    let regimes = match &args.regimes {
        Some(text) => parse_regime_list(text)?,
        None => default_sweep(),
    };
    let threads = match args.parallelism {
        Some(0) => return Err(Error::InvalidInput("--parallelism must be >= 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(usize::from).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("failed to build thread pool: {e}")))?;
    let report = pool.install(|| run_sweep(&cfg, &regimes))?;

    fs::create_dir_all(&args.out_dir)?;
    write_report_json(&report, &args.out_dir.join("report.json"))?;
    write_table1_csv(&report, &args.out_dir.join("table1.csv"))?;
    let stdout = std::io::stdout();
    stdout.lock().write_all(render_summary(&report).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_code_for(&Error::NonFiniteLikelihood { at_iteration: 3 }), 2);
        assert_eq!(exit_code_for(&Error::ReportIncomplete { failed: 9, total: 10 }), 2);
        assert_eq!(exit_code_for(&Error::NumericalUnderflow), 2);
        assert_eq!(exit_code_for(&Error::InvalidInput("bad".into())), 1);
        assert_eq!(exit_code_for(&Error::Config("bad".into())), 1);
        assert_eq!(
            exit_code_for(&Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, "x"))),
            1
        );
    }

    #[test]
    fn seed_resolution_order() {
        assert_eq!(resolve_seed(Some(7), Some("99")).unwrap(), 7);
        assert_eq!(resolve_seed(None, Some("99")).unwrap(), 99);
        assert_eq!(resolve_seed(None, Some(" 12 ")).unwrap(), 12);
        assert_eq!(resolve_seed(None, None).unwrap(), 0);
        assert!(resolve_seed(None, Some("abc")).is_err());
        assert!(resolve_seed(None, Some("-3")).is_err());
    }

    #[test]
    fn regime_list_parsing() {
        let regimes = parse_regime_list("constant:0, constant:1.5,heterogeneous").unwrap();
        assert_eq!(
            regimes,
            [
                DispersionRegime::Constant(0.0),
                DispersionRegime::Constant(1.5),
                DispersionRegime::Heterogeneous
            ]
        );
        assert!(parse_regime_list("").is_err());
        assert!(parse_regime_list("constant:x").is_err());
        assert_eq!(default_sweep().len(), 6);
    }

    #[test]
    fn dist_table_matches_poisson_at_zero_dispersion() {
        let args = DistArgs {
            lambda: 8.0,
            theta: 0.0,
            xmax: 20,
            nsamples: None,
            seed: None,
            nb: false,
        };
        let mut buf = Vec::new();
        cmd_dist(&args, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines.iter().any(|l| *l == "x,gp_pmf"), "header missing:\n{text}");
        assert!(!text.contains("nb_pmf"));
        // Row x=0 is the Poisson mass e^{-8}.
        let row0 = lines.iter().find(|l| l.starts_with("0,")).unwrap();
        let p0: f64 = row0.split(',').nth(1).unwrap().parse().unwrap();
        assert!((p0 - (-8.0_f64).exp()).abs() < 1e-15);
        // 21 data rows under the header.
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 22);
    }

    #[test]
    fn dist_includes_matched_nb_when_overdispersed() {
        let args = DistArgs {
            lambda: 8.0,
            theta: 2.5,
            xmax: 30,
            nsamples: None,
            seed: None,
            nb: true,
        };
        let mut buf = Vec::new();
        cmd_dist(&args, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("x,gp_pmf,nb_pmf"));
        let alpha_line = text
            .lines()
            .find(|l| l.starts_with("# nb_alpha,"))
            .expect("alpha header");
        let alpha: f64 = alpha_line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((alpha - 8.0 / 11.25).abs() < 1e-12, "alpha {alpha}");
    }

    #[test]
    fn dist_truncated_mass_nearly_one() {
        let args = DistArgs {
            lambda: 8.0,
            theta: 2.0,
            xmax: 200,
            nsamples: None,
            seed: None,
            nb: false,
        };
        let mut buf = Vec::new();
        cmd_dist(&args, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut gp_mass = 0.0;
        let mut nb_mass = 0.0;
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with('x')) {
            let mut parts = line.split(',');
            let _x = parts.next().unwrap();
            gp_mass += parts.next().unwrap().parse::<f64>().unwrap();
            nb_mass += parts.next().unwrap().parse::<f64>().unwrap();
        }
        assert!(gp_mass >= 0.999, "gp mass {gp_mass}");
        assert!(nb_mass >= 0.999, "nb mass {nb_mass}");
        assert!(gp_mass <= 1.0 + 1e-9);
    }

    #[test]
    fn dist_rejects_nb_at_zero_dispersion() {
        let args = DistArgs {
            lambda: 8.0,
            theta: 0.0,
            xmax: 10,
            nsamples: None,
            seed: None,
            nb: true,
        };
        let err = cmd_dist(&args, &mut Vec::new()).unwrap_err();
        assert!(!err.is_numerical());
    }

    #[test]
    fn dist_sampling_mode_emits_frequencies() {
        let args = DistArgs {
            lambda: 4.0,
            theta: 1.0,
            xmax: 10,
            nsamples: Some(2000),
            seed: Some(3),
            nb: false,
        };
        let mut buf = Vec::new();
        cmd_dist(&args, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("x,gp_pmf,nb_pmf,empirical"));
        let mut total = 0.0;
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with('x')) {
            total += line.rsplit(',').next().unwrap().parse::<f64>().unwrap();
        }
        assert!((total - 1.0).abs() < 1e-12, "frequencies sum to {total}");
    }

    #[test]
    fn cli_parses_reference_invocations() {
        Cli::try_parse_from(["countfact", "dist", "--lambda", "8", "--theta", "2.5", "--xmax", "30"]).unwrap();
        Cli::try_parse_from([
            "countfact", "fit", "--input", "y.csv", "--model", "gpmf", "--K", "5",
            "--theta-mode", "shared", "--init", "random", "--seed", "1",
        ])
        .unwrap();
        Cli::try_parse_from([
            "countfact", "simulate", "--I", "50", "--J", "100", "--K", "5",
            "--regime", "heterogeneous", "--out", "sim/run1_",
        ])
        .unwrap();
        Cli::try_parse_from([
            "countfact", "benchmark", "--out-dir", "out", "--parallelism", "2",
            "--regimes", "constant:0,heterogeneous",
        ])
        .unwrap();
        assert!(Cli::try_parse_from(["countfact", "fit", "--model", "pmf"]).is_err());
        assert!(Cli::try_parse_from(["countfact", "nope"]).is_err());
    }

    #[test]
    fn fit_json_omits_absent_fields() {
        let doc = FitJson {
            model: "pmf".into(),
            k: 2,
            converged: true,
            iterations: 3,
            final_nll: 1.5,
            nll_trace: vec![2.0, 1.5],
            theta_mode: None,
            theta: None,
            alpha: None,
            w: vec![vec![1.0]],
            h: vec![vec![1.0]],
        };
        let text = serde_json::to_string(&doc).unwrap();
        assert!(!text.contains("theta"));
        assert!(!text.contains("alpha"));
        assert!(text.contains("\"final_nll\":1.5"));
    }
}
