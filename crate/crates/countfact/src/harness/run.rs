//! Replication execution and aggregation.

use super::report::{AggregateCell, AggregateReport, MetricSummary, RegimeBlock};
use super::seed::{stream_rng, stream_seed};
use super::{gen_counts, gen_truth, DispersionRegime, ExperimentConfig, InitSpec, ModelSpec};
use crate::factor_core::{
    align_factors, init_nndsvd, init_random, mse, normalize_columns, ConvergenceSpec,
    CountMatrix, FactorPair,
};
use crate::models::{
    fit_gpmf, fit_nbmf, fit_pmf, DispersionParams, FitReport, NbmfConfig,
};
use crate::{Error, Result};
use rayon::prelude::*;
use std::time::Instant;

/// Alignment-corrected error metrics of one successful (model, initializer)
/// fit within a replication.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMetrics {
    pub mse_w: f64,
    pub mse_h: f64,
    pub mse_s: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Wall-clock seconds spent fitting (all starts); excluded from
    /// serialized reports to keep them deterministic.
    pub wall_time: f64,
}

/// Outcome of one (model, initializer) combination: metrics on success, the
/// error text on failure.
#[derive(Clone, Debug, PartialEq)]
pub struct CellOutcome {
    pub model: String,
    pub initializer: String,
    /// Derived seed of the cell's first initializer stream.
    pub seed: u64,
    pub result: std::result::Result<CellMetrics, String>,
}

/// All cell outcomes of one replication, in config order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationResult {
    pub rep_index: usize,
    pub cells: Vec<CellOutcome>,
}

struct PreparedInit {
    label: &'static str,
    seed: u64,
    starts: Vec<FactorPair<f64>>,
}

fn prepare_inits(
    cfg: &ExperimentConfig,
    y: &CountMatrix,
    rep: u64,
) -> Vec<std::result::Result<PreparedInit, (InitSpec, String)>> {
    cfg.initializers
        .iter()
        .map(|&spec| match spec {
            InitSpec::Nndsvd => {
                let seed = stream_seed(cfg.master_seed, rep, "init-nndsvd");
                match init_nndsvd::<f64>(y, cfg.k) {
                    Ok(f) => Ok(PreparedInit { label: spec.label(), seed, starts: vec![f] }),
                    Err(e) => Err((spec, e.to_string())),
                }
            }
            InitSpec::Random { n_starts } => {
                let seed = stream_seed(cfg.master_seed, rep, "init-random-0");
                let mut starts = Vec::with_capacity(n_starts);
                for t in 0..n_starts {
                    let tag = format!("init-random-{t}");
                    let mut rng = stream_rng(cfg.master_seed, rep, &tag);
                    match init_random::<f64, _>(y, cfg.k, &mut rng) {
                        Ok(f) => starts.push(f),
                        Err(e) => return Err((spec, e.to_string())),
                    }
                }
                Ok(PreparedInit { label: spec.label(), seed, starts })
            }
        })
        .collect()
}

fn fit_once(
    model: ModelSpec,
    y: &CountMatrix,
    init: FactorPair<f64>,
    i: usize,
    spec: &ConvergenceSpec<f64>,
) -> Result<FitReport<f64>> {
    match model {
        ModelSpec::Pmf => fit_pmf(y, init, spec),
        ModelSpec::Nbmf { alpha } => fit_nbmf(y, init, &NbmfConfig::new(alpha)?, spec),
        ModelSpec::Gpmf => {
            let d0 = DispersionParams::row_wise(vec![1.0; i])?;
            fit_gpmf(y, init, d0, spec)
        }
    }
}

fn evaluate_cell(
    model: ModelSpec,
    y: &CountMatrix,
    starts: &[FactorPair<f64>],
    i: usize,
    spec: &ConvergenceSpec<f64>,
    truth_norm: &FactorPair<f64>,
    s_truth: &nalgebra::DMatrix<f64>,
) -> std::result::Result<CellMetrics, String> {
    let clock = Instant::now();
    let mut best: Option<FitReport<f64>> = None;
    let mut last_err: Option<String> = None;
    for start in starts {
        match fit_once(model, y, start.clone(), i, spec) {
            Ok(report) => {
                let better = best
                    .as_ref()
                    .map(|b| report.final_nll() < b.final_nll())
                    .unwrap_or(true);
                if better {
                    best = Some(report);
                }
            }
            Err(e) => last_err = Some(e.to_string()),
        }
    }
    let wall_time = clock.elapsed().as_secs_f64();
    let best = best.ok_or_else(|| last_err.unwrap_or_else(|| "no starts".into()))?;

    let aligned = align_factors(&best.factors, truth_norm).map_err(|e| e.to_string())?;
    let est = &aligned.normalized_pair;
    let mse_w = mse(&est.w, &truth_norm.w).map_err(|e| e.to_string())?;
    let mse_h = mse(&est.h, &truth_norm.h).map_err(|e| e.to_string())?;
    let mse_s = mse(&best.factors.reconstruct(), s_truth).map_err(|e| e.to_string())?;
    for (name, v) in [("mse_w", mse_w), ("mse_h", mse_h), ("mse_s", mse_s)] {
        if !v.is_finite() {
            return Err(format!("{name} is not finite"));
        }
    }
    Ok(CellMetrics {
        mse_w,
        mse_h,
        mse_s,
        iterations: best.iterations,
        converged: best.converged,
        wall_time,
    })
}

/// Runs one replication: generates truth and counts from the replication's
/// derived streams, fits every (model, initializer) combination on the same
/// data, and reports alignment-corrected errors. Per-cell failures are
/// recorded without aborting the replication.
pub fn run_replication(cfg: &ExperimentConfig, rep_index: usize) -> Result<ReplicationResult> {
    cfg.validate()?;
    let rep = rep_index as u64;
    let (truth, d_truth) = gen_truth(cfg, &mut stream_rng(cfg.master_seed, rep, "truth"))?;
    let y = gen_counts(&truth, &d_truth, &mut stream_rng(cfg.master_seed, rep, "counts"))?;

    let truth_norm = normalize_columns(&truth)?;
    let s_truth = truth.reconstruct();
    let spec = cfg.convergence.to_spec()?;

    let inits = prepare_inits(cfg, &y, rep);
    let mut cells = Vec::with_capacity(cfg.models.len() * cfg.initializers.len());
    for &model in &cfg.models {
        for prepared in &inits {
            match prepared {
                Ok(init) => cells.push(CellOutcome {
                    model: model.label().to_string(),
                    initializer: init.label.to_string(),
                    seed: init.seed,
                    result: evaluate_cell(
                        model,
                        &y,
                        &init.starts,
                        cfg.i,
                        &spec,
                        &truth_norm,
                        &s_truth,
                    ),
                }),
                Err((spec_failed, message)) => {
                    let tag = match spec_failed {
                        InitSpec::Nndsvd => "init-nndsvd",
                        InitSpec::Random { .. } => "init-random-0",
                    };
                    cells.push(CellOutcome {
                        model: model.label().to_string(),
                        initializer: spec_failed.label().to_string(),
                        seed: stream_seed(cfg.master_seed, rep, tag),
                        result: Err(message.clone()),
                    });
                }
            }
        }
    }
    Ok(ReplicationResult { rep_index, cells })
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len();
    if n == 0 {
        return MetricSummary { mean: f64::NAN, se: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MetricSummary { mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    MetricSummary { mean, se: (var / n as f64).sqrt() }
}

fn aggregate_block(cfg: &ExperimentConfig, reps: &[ReplicationResult]) -> (RegimeBlock, usize) {
    let n_cells = cfg.models.len() * cfg.initializers.len();
    let mut cells = Vec::with_capacity(n_cells);
    let mut failures_total = 0usize;
    for ci in 0..n_cells {
        let mut w_vals = Vec::with_capacity(reps.len());
        let mut h_vals = Vec::with_capacity(reps.len());
        let mut s_vals = Vec::with_capacity(reps.len());
        let mut iter_vals = Vec::with_capacity(reps.len());
        let mut failures = 0usize;
        for rep in reps {
            match &rep.cells[ci].result {
                Ok(m) => {
                    w_vals.push(m.mse_w);
                    h_vals.push(m.mse_h);
                    s_vals.push(m.mse_s);
                    iter_vals.push(m.iterations as f64);
                }
                Err(_) => failures += 1,
            }
        }
        failures_total += failures;
        let template = &reps[0].cells[ci];
        let iters = summarize(&iter_vals);
        cells.push(AggregateCell {
            model: template.model.clone(),
            initializer: template.initializer.clone(),
            mse_w: summarize(&w_vals),
            mse_h: summarize(&h_vals),
            mse_s: summarize(&s_vals),
            mean_iterations: iters.mean,
            failures,
        });
    }
    (
        RegimeBlock {
            regime: cfg.dispersion_regime.to_string(),
            replications: reps.len(),
            cells,
        },
        failures_total,
    )
}

/// Runs every replication of `cfg` (in parallel when a rayon pool with more
/// than one thread is installed) and aggregates means and standard errors.
/// The aggregate is a deterministic fold in replication order, independent
/// of scheduling. Fails with `ReportIncomplete` when more than 5% of cells
/// errored.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    let results: Vec<Result<ReplicationResult>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, r))
        .collect();
    let mut reps = Vec::with_capacity(cfg.replications);
    for r in results {
        reps.push(r?);
    }
    let (block, failed) = aggregate_block(cfg, &reps);
    let total = cfg.replications * cfg.models.len() * cfg.initializers.len();
    if failed * 20 > total {
        return Err(Error::ReportIncomplete { failed, total });
    }
    Ok(AggregateReport {
        i: cfg.i,
        j: cfg.j,
        k: cfg.k,
        master_seed: cfg.master_seed,
        replications: cfg.replications,
        regimes: vec![block],
    })
}

/// Runs [`run_experiment`] once per regime (same master seed, so truths are
/// paired across regimes) and concatenates the regime blocks.
pub fn run_sweep(
    base: &ExperimentConfig,
    regimes: &[DispersionRegime],
) -> Result<AggregateReport> {
    if regimes.is_empty() {
        return Err(Error::Config("at least one regime is required".into()));
    }
    let mut merged: Option<AggregateReport> = None;
    for &regime in regimes {
        let cfg = ExperimentConfig { dispersion_regime: regime, ..base.clone() };
        let report = run_experiment(&cfg)?;
        match &mut merged {
            None => merged = Some(report),
            Some(m) => m.regimes.extend(report.regimes),
        }
    }
    Ok(merged.expect("regimes is non-empty"))
}
