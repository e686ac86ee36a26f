//! Rayon-parallel versions of the core runners.
//!
//! Cells and replicates are keyed, so the parallel results are identical to
//! the serial runners in `sctomo-core`.

use rayon::prelude::*;
use sctomo_core::analysis::{
    resample_once, summarize_resamples, Comparison, ComparisonPlan, ErrorBars, NoiseSweep, Quantity, RetardanceSweep,
    SweepReport,
};
use sctomo_core::estimator::{mle_sct, mle_st, LikelihoodModel, OptimizerConfig, ReconstructionResult};
use sctomo_core::state::DensityMatrix;
use sctomo_core::{Error, Result};

pub fn reconstruct(model: &LikelihoodModel, opt: &OptimizerConfig) -> Result<ReconstructionResult> {
    if model.set().n_unknowns == 0 {
        mle_st(model, opt)
    } else {
        mle_sct(model, opt)
    }
}

pub fn retardance_sweep(sweep: &RetardanceSweep) -> Result<SweepReport> {
    sweep.validate()?;
    let results = sweep.cells().into_par_iter().map(|k| sweep.run_cell(k)).collect();
    Ok(sweep.assemble(results))
}

pub fn noise_sweep(sweep: &NoiseSweep) -> Result<SweepReport> {
    sweep.validate()?;
    let results = sweep.cells().into_par_iter().map(|k| sweep.run_cell(k)).collect();
    Ok(sweep.assemble(results))
}

/// Poisson-resampled error bars; fidelity is taken against `reference`, or
/// against the point estimate when `None`.
pub fn monte_carlo_errors(
    model: &LikelihoodModel,
    opt: &OptimizerConfig,
    n_resamples: usize,
    quantities: &[Quantity],
    seed: u64,
    reference: Option<&DensityMatrix>,
) -> Result<Vec<ErrorBars>> {
    if n_resamples < 2 {
        return Err(Error::InvalidConfig(format!("n_resamples must be at least 2, got {n_resamples}")));
    }
    let point;
    let reference = match reference {
        Some(r) => r,
        None => {
            point = reconstruct(model, opt)?.rho_hat;
            &point
        }
    };
    let results: Vec<Result<ReconstructionResult>> = (0..n_resamples as u32)
        .into_par_iter()
        .map(|r| resample_once(model, opt, seed, r))
        .collect();
    summarize_resamples(model.set(), quantities, &results, reference)
}

pub fn compare_sct_st(plan: &ComparisonPlan) -> Result<Comparison> {
    plan.validate()?;
    let mut all: Vec<_> = (0..=plan.n_mc as u32).into_par_iter().map(|r| plan.run_replicate(r)).collect();
    let mc = all.split_off(1);
    let estimate = all.pop().expect("replicate 0")?;
    plan.summarize(estimate, &mc)
}
