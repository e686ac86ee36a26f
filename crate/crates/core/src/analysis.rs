//! Simulation studies: retardance and noise sweeps, histograms, SCT/ST
//! comparison and Monte Carlo error bars.
//!
//! Runners are split into independent cells (`cells`, `run_cell`,
//! `assemble`) so callers can execute them in any order or in parallel and
//! still get identical reports.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::estimator::{mle_sct, mle_st, LikelihoodModel, OptimizerConfig, ReconstructionResult};
use crate::measurement::{sct_settings_1q, sct_settings_2q, SettingSet};
use crate::metrics::{concurrence, fidelity, fidelity_up_to_z};
use crate::pauli::pauli_decompose;
use crate::sampling::{Domain, KeyedRng};
use crate::simulator::{expected_counts, resolve_state, sample_counts_replicate, CountRecord, ExperimentConfig, SourceSpec};
use crate::state::DensityMatrix;

/// Photon budget of a simulated run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhotonLevel {
    /// Expected counts fitted directly.
    Noiseless(f64),
    Poisson(f64),
}

impl PhotonLevel {
    pub fn photons(&self) -> f64 {
        match *self {
            PhotonLevel::Noiseless(n) | PhotonLevel::Poisson(n) => n,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        matches!(self, PhotonLevel::Noiseless(_))
    }

    fn validate(&self) -> Result<()> {
        let n = self.photons();
        if n > 0.0 && n.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("photon level must be positive, got {n}")))
        }
    }
}

/// Default self-calibrating protocol for a source.
pub fn sct_set_for(source: &SourceSpec) -> SettingSet {
    if source.n_qubits() == 1 {
        sct_settings_1q()
    } else {
        sct_settings_2q()
    }
}

/// Simulated data for one run, as a likelihood model.
pub fn simulate_model(cfg: &ExperimentConfig, level: PhotonLevel, replicate: u32) -> Result<LikelihoodModel> {
    if level.is_noiseless() {
        LikelihoodModel::noiseless(cfg.set.clone(), &expected_counts(cfg)?)
    } else {
        LikelihoodModel::new(cfg.set.clone(), &sample_counts_replicate(cfg, replicate)?)
    }
}

fn reconstruct(model: &LikelihoodModel, opt: &OptimizerConfig) -> Result<ReconstructionResult> {
    if model.set().n_unknowns == 0 {
        mle_st(model, opt)
    } else {
        mle_sct(model, opt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    Photons,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Photons => "photons",
        }
    }
}

/// Address of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub point: usize,
    pub state: usize,
    pub run: usize,
}

/// Outcome of one simulate-and-reconstruct cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub key: CellKey,
    pub seed: u64,
    /// `σz`-aligned fidelity against the true state.
    pub fidelity: Option<f64>,
    pub alpha_hat: Vec<f64>,
    pub final_l: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub noiseless: bool,
    /// Ordered by `(state, run)`.
    pub cells: Vec<CellResult>,
}

impl SweepPoint {
    pub fn fidelities(&self, state: usize) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.key.state == state)
            .filter_map(|c| c.fidelity)
            .collect()
    }

    pub fn mean_fidelity(&self, state: usize) -> Option<f64> {
        mean(&self.fidelities(state))
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.fidelity.is_none()).count()
    }

    pub fn fidelity_histogram(&self) -> Histogram {
        let mut h = Histogram::fidelity();
        for c in &self.cells {
            h.add(c.fidelity);
        }
        h
    }

    /// Histogram of `α̂` for one unknown.
    pub fn alpha_histogram(&self, arm: usize) -> Histogram {
        let mut h = Histogram::alpha();
        for c in &self.cells {
            h.add(c.alpha_hat.get(arm).copied());
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub n_states: usize,
    pub seeds_used: Vec<u64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

fn run_cycle(cfg: &ExperimentConfig, level: PhotonLevel, replicate: u32, opt: &OptimizerConfig, key: CellKey) -> CellResult {
    let outcome = (|| -> Result<(ReconstructionResult, f64)> {
        let model = simulate_model(cfg, level, replicate)?;
        let r = reconstruct(&model, opt)?;
        let truth = resolve_state(&cfg.source)?;
        let f = fidelity_up_to_z(&r.rho_hat, &truth, truth.n_qubits())?.fidelity;
        Ok((r, f))
    })();
    match outcome {
        Ok((r, f)) => CellResult {
            key,
            seed: cfg.seed,
            fidelity: Some(f),
            alpha_hat: r.alpha_hat,
            final_l: Some(r.final_l),
            converged: r.converged,
            error: None,
        },
        Err(e) => CellResult {
            key,
            seed: cfg.seed,
            fidelity: None,
            alpha_hat: Vec::new(),
            final_l: None,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

fn assemble_points(axis_values: &[f64], noiseless: &[bool], mut results: Vec<CellResult>) -> Vec<SweepPoint> {
    results.sort_by_key(|c| c.key);
    let mut points: Vec<SweepPoint> = axis_values
        .iter()
        .zip(noiseless)
        .map(|(&v, &n)| SweepPoint {
            axis_value: v,
            noiseless: n,
            cells: Vec::new(),
        })
        .collect();
    for c in results {
        points[c.key.point].cells.push(c);
    }
    points
}

/// Fidelity and `α̂` against retardance for a set of states.
#[derive(Debug, Clone, PartialEq)]
pub struct RetardanceSweep {
    pub states: Vec<SourceSpec>,
    pub alphas: Vec<f64>,
    pub photons: PhotonLevel,
    pub seeds: Vec<u64>,
    pub opt: OptimizerConfig,
}

impl RetardanceSweep {
    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() || self.alphas.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidConfig("retardance sweep needs states, alphas and seeds".into()));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| !(a > 0.0 && a <= PI)) {
            return Err(Error::InvalidConfig(format!("alpha {a} outside (0, π]")));
        }
        self.photons.validate()?;
        self.opt.validate()
    }

    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for point in 0..self.alphas.len() {
            for state in 0..self.states.len() {
                for run in 0..self.seeds.len() {
                    out.push(CellKey { point, state, run });
                }
            }
        }
        out
    }

    pub fn run_cell(&self, key: CellKey) -> CellResult {
        let source = self.states[key.state].clone();
        let set = sct_set_for(&source);
        let alphas = vec![self.alphas[key.point]; set.n_unknowns];
        let seed = self.seeds[key.run];
        let opt = OptimizerConfig {
            seed,
            ..self.opt.clone()
        };
        // Distinct noise streams per (point, state) under a shared seed.
        let replicate = ((key.point as u32) << 16) | key.state as u32;
        match ExperimentConfig::new(source, set, alphas, self.photons.photons(), seed) {
            Ok(cfg) => run_cycle(&cfg, self.photons, replicate, &opt, key),
            Err(e) => failed_cell(key, seed, e),
        }
    }

    pub fn assemble(&self, results: Vec<CellResult>) -> SweepReport {
        SweepReport {
            axis: SweepAxis::Alpha,
            points: assemble_points(&self.alphas, &vec![self.photons.is_noiseless(); self.alphas.len()], results),
            n_states: self.states.len(),
            seeds_used: self.seeds.clone(),
        }
    }

    pub fn run(&self) -> Result<SweepReport> {
        self.validate()?;
        Ok(self.assemble(self.cells().into_iter().map(|k| self.run_cell(k)).collect()))
    }
}

fn failed_cell(key: CellKey, seed: u64, e: Error) -> CellResult {
    CellResult {
        key,
        seed,
        fidelity: None,
        alpha_hat: Vec::new(),
        final_l: None,
        converged: false,
        error: Some(e.to_string()),
    }
}

/// Repeated runs of one state at several photon budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweep {
    pub state: SourceSpec,
    pub alpha: f64,
    pub levels: Vec<PhotonLevel>,
    pub runs_per_level: usize,
    /// Run `r` uses seed `base_seed + r` at every level.
    pub base_seed: u64,
    pub opt: OptimizerConfig,
}

impl NoiseSweep {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidConfig("noise sweep needs at least one photon level".into()));
        }
        if self.runs_per_level == 0 {
            return Err(Error::InvalidConfig("runs_per_level must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= PI) {
            return Err(Error::InvalidConfig(format!("alpha {} outside (0, π]", self.alpha)));
        }
        for l in &self.levels {
            l.validate()?;
        }
        self.opt.validate()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs_per_level).map(|r| self.base_seed.wrapping_add(r as u64)).collect()
    }

    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for point in 0..self.levels.len() {
            for run in 0..self.runs_per_level {
                out.push(CellKey { point, state: 0, run });
            }
        }
        out
    }

    pub fn run_cell(&self, key: CellKey) -> CellResult {
        let level = self.levels[key.point];
        let set = sct_set_for(&self.state);
        let alphas = vec![self.alpha; set.n_unknowns];
        let seed = self.base_seed.wrapping_add(key.run as u64);
        let opt = OptimizerConfig {
            seed,
            ..self.opt.clone()
        };
        match ExperimentConfig::new(self.state.clone(), set, alphas, level.photons(), seed) {
            Ok(cfg) => run_cycle(&cfg, level, 0, &opt, key),
            Err(e) => failed_cell(key, seed, e),
        }
    }

    pub fn assemble(&self, results: Vec<CellResult>) -> SweepReport {
        let values: Vec<f64> = self.levels.iter().map(|l| l.photons()).collect();
        let noiseless: Vec<bool> = self.levels.iter().map(|l| l.is_noiseless()).collect();
        SweepReport {
            axis: SweepAxis::Photons,
            points: assemble_points(&values, &noiseless, results),
            n_states: 1,
            seeds_used: self.seeds(),
        }
    }

    pub fn run(&self) -> Result<SweepReport> {
        self.validate()?;
        Ok(self.assemble(self.cells().into_iter().map(|k| self.run_cell(k)).collect()))
    }
}

pub const FIDELITY_BIN_WIDTH: f64 = 0.01;
pub const ALPHA_BIN_WIDTH: f64 = PI / 128.0;

/// Fixed-edge histogram. Bin `k` covers `(lo + k w, lo + (k+1) w]` for the
/// `α` histogram and `[lo + k w, lo + (k+1) w)` for fidelity, with the top
/// edge folded into the last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lower: f64,
    pub width: f64,
    pub counts: Vec<u64>,
    /// Values outside the range.
    pub out_of_range: u64,
    /// Cells without a value (failed runs).
    pub missing: u64,
    left_open: bool,
}

impl Histogram {
    pub fn fidelity() -> Self {
        Self::new(0.0, FIDELITY_BIN_WIDTH, 100, false)
    }

    pub fn alpha() -> Self {
        Self::new(0.0, ALPHA_BIN_WIDTH, 128, true)
    }

    fn new(lower: f64, width: f64, bins: usize, left_open: bool) -> Self {
        Self {
            lower,
            width,
            counts: vec![0; bins],
            out_of_range: 0,
            missing: 0,
            left_open,
        }
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts.len()).map(|k| self.lower + k as f64 * self.width).collect()
    }

    pub fn upper(&self) -> f64 {
        self.lower + self.counts.len() as f64 * self.width
    }

    pub fn add(&mut self, value: Option<f64>) {
        let Some(x) = value else {
            self.missing += 1;
            return;
        };
        let n = self.counts.len();
        let rel = (x - self.lower) / self.width;
        let bin = if self.left_open {
            if x <= self.lower || x > self.upper() + 1e-12 {
                None
            } else {
                Some((libm::ceil(rel) as usize).clamp(1, n) - 1)
            }
        } else if x < self.lower || x > self.upper() + 1e-12 {
            None
        } else {
            Some((libm::floor(rel) as usize).min(n - 1))
        };
        match bin {
            Some(k) => self.counts[k] += 1,
            None => self.out_of_range += 1,
        }
    }

    /// Every value added, binned or not.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.out_of_range + self.missing
    }
}

/// Bloch vector `(λ₁, λ₂, λ₃)` of a qubit.
pub fn bloch_coordinates(rho: &DensityMatrix) -> Result<[f64; 3]> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: rho.dim(),
        });
    }
    let l = pauli_decompose(rho.op())?.lambda;
    Ok([l[1], l[2], l[3]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Quantity {
    Fidelity,
    Concurrence,
    Alpha,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Fidelity => "fidelity",
            Quantity::Concurrence => "concurrence",
            Quantity::Alpha => "alpha",
        }
    }
}

/// Fewer successful resamples than this are flagged low-confidence.
pub const LOW_CONFIDENCE_BELOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBars {
    pub quantity: Quantity,
    /// Arm for `α`; 0 otherwise.
    pub index: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub std: f64,
    /// Successful resamples the bars are computed over.
    pub n_resamples: usize,
    pub failures: usize,
    pub low_confidence: bool,
}

fn error_bars(quantity: Quantity, index: usize, xs: &[f64], failures: usize) -> Result<ErrorBars> {
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{} error bars need at least 2 successful resamples, got {}",
            quantity.name(),
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    Ok(ErrorBars {
        quantity,
        index,
        mean: m,
        std: var.sqrt(),
        n_resamples: xs.len(),
        failures,
        low_confidence: xs.len() < LOW_CONFIDENCE_BELOW,
    })
}

/// Model with every observation replaced by a Poisson draw around it.
pub fn resample_model(model: &LikelihoodModel, seed: u64, replicate: u32) -> Result<LikelihoodModel> {
    let records: Vec<CountRecord> = model
        .records()
        .iter()
        .zip(model.observed())
        .enumerate()
        .map(|(j, (r, &n))| CountRecord {
            setting_id: r.setting_id.clone(),
            count: KeyedRng::new(seed, Domain::Resample, j as u32, replicate).poisson(n),
            expected: r.expected,
        })
        .collect();
    LikelihoodModel::new(model.set().clone(), &records)?.with_sigma_floor(model.sigma_floor())
}

/// One Monte Carlo resample, reconstructed with the estimator matching
/// the set.
pub fn resample_once(model: &LikelihoodModel, opt: &OptimizerConfig, seed: u64, replicate: u32) -> Result<ReconstructionResult> {
    reconstruct(&resample_model(model, seed, replicate)?, opt)
}

fn check_quantities(set: &SettingSet, quantities: &[Quantity]) -> Result<()> {
    for q in quantities {
        match q {
            Quantity::Concurrence if set.n_qubits != 2 => {
                return Err(Error::InvalidConfig("concurrence needs a two-qubit set".into()))
            }
            Quantity::Alpha if set.n_unknowns == 0 => {
                return Err(Error::InvalidConfig("no unknown angle to put error bars on".into()))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Error bars from finished resamples. Fidelity is taken against
/// `reference` (`σz`-aligned when the set has unknown angles).
pub fn summarize_resamples(
    set: &SettingSet,
    quantities: &[Quantity],
    results: &[Result<ReconstructionResult>],
    reference: &DensityMatrix,
) -> Result<Vec<ErrorBars>> {
    check_quantities(set, quantities)?;
    let ok: Vec<&ReconstructionResult> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = results.len() - ok.len();
    let mut out = Vec::new();
    for &q in quantities {
        match q {
            Quantity::Fidelity => {
                let xs = ok
                    .iter()
                    .map(|r| {
                        if set.n_unknowns > 0 {
                            fidelity_up_to_z(reference, &r.rho_hat, set.n_qubits).map(|z| z.fidelity)
                        } else {
                            fidelity(reference, &r.rho_hat)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.push(error_bars(q, 0, &xs, failures)?);
            }
            Quantity::Concurrence => {
                let xs = ok.iter().map(|r| concurrence(&r.rho_hat)).collect::<Result<Vec<_>>>()?;
                out.push(error_bars(q, 0, &xs, failures)?);
            }
            Quantity::Alpha => {
                for arm in 0..set.n_unknowns {
                    let xs: Vec<f64> = ok.iter().map(|r| r.alpha_hat[arm]).collect();
                    out.push(error_bars(q, arm, &xs, failures)?);
                }
            }
        }
    }
    Ok(out)
}

/// Poisson-resampled error bars. Fidelity is measured against `reference`
/// when given, else against the estimate from the unresampled data.
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
    check_quantities(model.set(), quantities)?;
    let point;
    let reference = match reference {
        Some(r) => r,
        None => {
            point = reconstruct(model, opt)?.rho_hat;
            &point
        }
    };
    let results: Vec<Result<ReconstructionResult>> =
        (0..n_resamples).map(|r| resample_once(model, opt, seed, r as u32)).collect();
    summarize_resamples(model.set(), quantities, &results, reference)
}

/// Same source measured with both protocols.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonPlan {
    pub source: SourceSpec,
    pub set_sct: SettingSet,
    pub set_st: SettingSet,
    pub true_alphas: Vec<f64>,
    pub photons: PhotonLevel,
    pub seed: u64,
    pub opt: OptimizerConfig,
    /// Monte Carlo replicates for error bars (0 for none).
    pub n_mc: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSample {
    pub c_sct: f64,
    pub c_st: f64,
    /// Fidelity between the ST and SCT estimates, maximized over local
    /// `σz` rotations of the SCT one.
    pub f_between: f64,
    pub alpha_hat: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub estimate: ComparisonSample,
    /// Bars on `C_sct`, `C_st`, `F_between` and each `α̂`, in that order.
    pub error_bars: Vec<NamedErrorBars>,
    pub mc_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedErrorBars {
    pub name: String,
    pub bars: ErrorBars,
}

impl ComparisonPlan {
    pub fn validate(&self) -> Result<()> {
        if self.source.n_qubits() != 2 || self.set_sct.n_qubits != 2 || self.set_st.n_qubits != 2 {
            return Err(Error::InvalidConfig("protocol comparison needs a two-qubit source and sets".into()));
        }
        if self.set_st.n_unknowns != 0 || self.set_sct.n_unknowns == 0 {
            return Err(Error::InvalidConfig("set_st must have no unknowns and set_sct at least one".into()));
        }
        self.photons.validate()?;
        self.opt.validate()
    }

    /// Replicate 0 is the point estimate; higher replicates are the Monte
    /// Carlo repetitions. SCT and ST draw from disjoint noise streams.
    pub fn run_replicate(&self, replicate: u32) -> Result<ComparisonSample> {
        let sct_cfg = ExperimentConfig::new(
            self.source.clone(),
            self.set_sct.clone(),
            self.true_alphas.clone(),
            self.photons.photons(),
            self.seed,
        )?;
        let st_cfg = ExperimentConfig::new(self.source.clone(), self.set_st.clone(), Vec::new(), self.photons.photons(), self.seed)?;
        let opt = OptimizerConfig {
            seed: self.seed.wrapping_add(replicate as u64),
            ..self.opt.clone()
        };
        let sct = mle_sct(&simulate_model(&sct_cfg, self.photons, 2 * replicate)?, &opt)?;
        let st = mle_st(&simulate_model(&st_cfg, self.photons, 2 * replicate + 1)?, &opt)?;
        Ok(ComparisonSample {
            c_sct: concurrence(&sct.rho_hat)?,
            c_st: concurrence(&st.rho_hat)?,
            f_between: fidelity_up_to_z(&st.rho_hat, &sct.rho_hat, 2)?.fidelity,
            alpha_hat: sct.alpha_hat,
            converged: sct.converged && st.converged,
        })
    }

    pub fn summarize(&self, estimate: ComparisonSample, mc: &[Result<ComparisonSample>]) -> Result<Comparison> {
        let ok: Vec<&ComparisonSample> = mc.iter().filter_map(|r| r.as_ref().ok()).collect();
        let failures = mc.len() - ok.len();
        let mut bars = Vec::new();
        if !mc.is_empty() {
            let mut push = |name: String, q: Quantity, index: usize, xs: Vec<f64>| -> Result<()> {
                bars.push(NamedErrorBars {
                    name,
                    bars: error_bars(q, index, &xs, failures)?,
                });
                Ok(())
            };
            push("c_sct".into(), Quantity::Concurrence, 0, ok.iter().map(|s| s.c_sct).collect())?;
            push("c_st".into(), Quantity::Concurrence, 0, ok.iter().map(|s| s.c_st).collect())?;
            push("f_between".into(), Quantity::Fidelity, 0, ok.iter().map(|s| s.f_between).collect())?;
            for arm in 0..estimate.alpha_hat.len() {
                push(format!("alpha_{arm}"), Quantity::Alpha, arm, ok.iter().map(|s| s.alpha_hat[arm]).collect())?;
            }
        }
        Ok(Comparison {
            estimate,
            error_bars: bars,
            mc_failures: failures,
        })
    }
}

/// Simulates both protocols, reconstructs each and compares them, with
/// optional Monte Carlo error bars.
pub fn compare_sct_st(plan: &ComparisonPlan) -> Result<Comparison> {
    plan.validate()?;
    let estimate = plan.run_replicate(0)?;
    let mc: Vec<Result<ComparisonSample>> = (1..=plan.n_mc).map(|r| plan.run_replicate(r as u32)).collect();
    plan.summarize(estimate, &mc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{st_settings_1q, st_settings_2q};
    use crate::state::PureState;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};
    use num_complex::Complex64;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

    #[test]
    fn bloch_examples() {
        let r = resolve_state(&SourceSpec::bloch(0.0, 0.0)).unwrap();
        let v = bloch_coordinates(&r).unwrap();
        assert!((v[2] - 1.0).abs() < 1e-15 && v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        let mixed = bloch_coordinates(&DensityMatrix::maximally_mixed(1).unwrap()).unwrap();
        assert!(mixed.iter().all(|x| x.abs() < 1e-15));
        let h = DensityMatrix::from_pure(&PureState::new(crate::state::basis::h().to_vec()).unwrap());
        let v = bloch_coordinates(&h).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
        assert!(bloch_coordinates(&DensityMatrix::maximally_mixed(2).unwrap()).is_err());
    }

    #[test]
    fn histogram_binning() {
        let mut h = Histogram::fidelity();
        for x in [0.0, 0.005, 0.999, 1.0, 0.5] {
            h.add(Some(x));
        }
        h.add(None);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[99], 2);
        assert_eq!(h.counts[50], 1);
        assert_eq!(h.total(), 6);
        assert_eq!(h.edges().len(), 101);

        let mut a = Histogram::alpha();
        a.add(Some(PI));
        a.add(Some(ALPHA_BIN_WIDTH));
        a.add(Some(ALPHA_BIN_WIDTH * 1.5));
        a.add(Some(0.0));
        assert_eq!(a.counts[127], 1);
        assert_eq!(a.counts[0], 1);
        assert_eq!(a.counts[1], 1);
        assert_eq!(a.out_of_range, 1);
    }

    #[test]
    fn noiseless_retardance_sweep() {
        let sweep = RetardanceSweep {
            states: vec![SourceSpec::bloch(FRAC_PI_2, 0.0), SourceSpec::bloch(0.0, 0.0)],
            alphas: vec![FRAC_PI_6, 1.0],
            photons: PhotonLevel::Noiseless(1000.0),
            seeds: vec![3],
            opt: OptimizerConfig::default(),
        };
        let report = sweep.run().unwrap();
        assert_eq!(report.points.len(), 2);
        for p in &report.points {
            assert_eq!(p.cells.len(), 2);
            for c in &p.cells {
                assert!(c.fidelity.unwrap() >= 0.999, "{c:?}");
            }
        }
    }

    #[test]
    fn sweep_rejects_bad_config() {
        let sweep = NoiseSweep {
            state: SourceSpec::bloch(FRAC_PI_2, 0.0),
            alpha: 0.3,
            levels: vec![],
            runs_per_level: 3,
            base_seed: 0,
            opt: OptimizerConfig::default(),
        };
        assert!(sweep.run().is_err());
    }

    #[test]
    fn noise_sweep_histograms_conserve_runs() {
        let sweep = NoiseSweep {
            state: SourceSpec::bloch(FRAC_PI_2, 0.0),
            alpha: FRAC_PI_6,
            levels: vec![PhotonLevel::Poisson(500.0), PhotonLevel::Noiseless(500.0)],
            runs_per_level: 4,
            base_seed: 11,
            opt: OptimizerConfig {
                n_starts: 12,
                ..Default::default()
            },
        };
        let report = sweep.run().unwrap();
        for p in &report.points {
            assert_eq!(p.fidelity_histogram().total(), 4);
            assert_eq!(p.alpha_histogram(0).total(), 4);
        }
        assert!(report.points[1].cells.iter().all(|c| c.fidelity.unwrap() >= 0.999));
        // Reproducible.
        assert_eq!(sweep.run().unwrap(), report);
    }

    #[test]
    fn monte_carlo_spread_on_exact_counts() {
        let set = crate::measurement::sct_settings_1q();
        let cfg = ExperimentConfig::new(SourceSpec::bloch(FRAC_PI_2, 0.0), set.clone(), vec![FRAC_PI_6], 1000.0, 5).unwrap();
        let model = LikelihoodModel::noiseless(set, &expected_counts(&cfg).unwrap()).unwrap();
        let opt = OptimizerConfig {
            n_starts: 12,
            ..Default::default()
        };
        let bars = monte_carlo_errors(&model, &opt, 2, &[Quantity::Alpha, Quantity::Fidelity], 9, None).unwrap();
        assert_eq!(bars.len(), 2);
        assert!(bars[0].std > 0.0);
        assert!(bars.iter().all(|b| b.low_confidence && b.n_resamples == 2));
        assert!(monte_carlo_errors(&model, &opt, 1, &[Quantity::Alpha], 9, None).is_err());
        assert!(monte_carlo_errors(&model, &opt, 2, &[Quantity::Concurrence], 9, None).is_err());
    }

    #[test]
    fn st_error_bars_reject_alpha() {
        let set = st_settings_1q();
        let cfg = ExperimentConfig::new(SourceSpec::bloch(1.0, 0.0), set.clone(), vec![], 1000.0, 5).unwrap();
        let model = LikelihoodModel::noiseless(set, &expected_counts(&cfg).unwrap()).unwrap();
        assert!(monte_carlo_errors(&model, &OptimizerConfig::default(), 3, &[Quantity::Alpha], 1, None).is_err());
    }

    #[test]
    fn noiseless_comparison_matches_concurrence() {
        let (a, b) = (0.9f64.sqrt(), 0.1f64.sqrt());
        let plan = ComparisonPlan {
            source: SourceSpec::hh_vv(Complex64::new(a, 0.0), Complex64::new(b, 0.0)),
            set_sct: sct_settings_2q(),
            set_st: st_settings_2q(),
            true_alphas: vec![FRAC_PI_4, FRAC_PI_4],
            photons: PhotonLevel::Noiseless(5000.0),
            seed: 2,
            opt: OptimizerConfig::default(),
            n_mc: 0,
        };
        let c = compare_sct_st(&plan).unwrap();
        let expect = 2.0 * a * b;
        assert!((c.estimate.c_sct - expect).abs() < 1e-3, "{:?}", c.estimate);
        assert!((c.estimate.c_st - expect).abs() < 1e-3);
        assert!(c.estimate.f_between > 0.999);
        assert!(c.error_bars.is_empty());
    }
}
