//! Command-line definitions and command implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sctomo_core::analysis::{ComparisonPlan, NoiseSweep, PhotonLevel, Quantity, RetardanceSweep};
use sctomo_core::estimator::LikelihoodModel;
use sctomo_core::measurement::{sct_settings_2q, st_settings_2q};
use sctomo_core::simulator::{expected_counts, fourteen_state_labels, fourteen_state_suite, sample_counts, SourceSpec};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::formats::{
    counts_to_csv, read_counts, read_versioned, to_json, write_atomic, Command, CompareFile, ComparisonFile,
    ConfigFile, NoiseSweepFile, OptimizerDto, Protocol, ResultFile, RetardanceSweepFile, RunManifest, SeedSource,
    SettingsFile, SourceDto, StatesDto, FORMAT_VERSION,
};
use crate::report::write_sweep;
use crate::runners;

#[derive(Debug, Parser)]
#[command(name = "sctomo", version, about = "Self-calibrating state tomography with unknown wave-plate retardance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Simulate photon counts from an experiment config.
    Simulate(SimulateArgs),
    /// Reconstruct a state (and retardance) from a counts file.
    Reconstruct(ReconstructArgs),
    /// Run a retardance or noise sweep.
    #[command(subcommand)]
    Sweep(SweepCmd),
    /// Compare self-calibrating and standard tomography on a two-qubit source.
    Compare(CompareArgs),
    /// Emit a built-in settings manifest.
    Settings(SettingsArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed; without either, one is drawn from entropy.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `photons_per_setting`.
    #[arg(long)]
    pub photons: Option<f64>,
    /// Write expected counts instead of Poisson draws.
    #[arg(long)]
    pub noiseless: bool,
    /// Simulate every state of the fourteen-state suite.
    #[arg(long)]
    pub suite: bool,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub settings: PathBuf,
    #[arg(long, value_enum, default_value_t = Protocol::Sct)]
    pub mode: Protocol,
    /// Result JSON path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte Carlo resamples for error bars.
    #[arg(long)]
    pub mc: Option<usize>,
    #[arg(long)]
    pub starts: Option<usize>,
    /// Comma-separated starting retardances.
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    /// Optimizer and resampling seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub purity_prior: Option<f64>,
    /// Likelihood evaluations allowed per start.
    #[arg(long)]
    pub max_evals: Option<usize>,
    /// Fit the `expected` column instead of `count`.
    #[arg(long)]
    pub use_expected: bool,
}

#[derive(Debug, Subcommand)]
pub enum SweepCmd {
    Retardance(RetardanceArgs),
    Noise(NoiseArgs),
}

#[derive(Debug, Args)]
pub struct RetardanceArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seeded runs per (retardance, state).
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub photons: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Runs per photon level.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Comma-separated photon levels.
    #[arg(long, value_delimiter = ',')]
    pub photons: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Result JSON path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub mc: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SettingsArgs {
    #[arg(long, value_enum, default_value_t = Protocol::Sct)]
    pub protocol: Protocol,
    #[arg(long, default_value_t = 1)]
    pub qubits: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Simulate(a) => simulate(&a),
        Cmd::Reconstruct(a) => reconstruct(&a),
        Cmd::Sweep(SweepCmd::Retardance(a)) => sweep_retardance(&a),
        Cmd::Sweep(SweepCmd::Noise(a)) => sweep_noise(&a),
        Cmd::Compare(a) => compare(&a),
        Cmd::Settings(a) => settings(&a),
    }
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliError::write(Path::new("<stdout>"), e))
        }
    }
}

fn entropy_seed() -> Result<u64> {
    getrandom::u64().map_err(|e| CliError::input(format!("no entropy source for a seed: {e}")))
}

fn write_manifest(dir: &Path, manifest: &mut RunManifest, outputs: Vec<String>) -> Result<()> {
    manifest.outputs = outputs;
    write_atomic(&dir.join("manifest.json"), &to_json(manifest))
}

#[derive(Serialize)]
struct SuiteEntry {
    label: String,
    file: String,
    source: SourceDto,
}

#[derive(Serialize)]
struct SuiteIndex {
    format_version: &'static str,
    seed: u64,
    states: Vec<SuiteEntry>,
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut file: ConfigFile = read_versioned(&a.config)?;
    let (seed, seed_source) = match (a.seed, file.seed) {
        (Some(s), _) => (s, SeedSource::Flag),
        (None, Some(s)) => (s, SeedSource::Config),
        (None, None) => (entropy_seed()?, SeedSource::Entropy),
    };
    file.seed = Some(seed);
    if let Some(n) = a.photons {
        file.photons_per_setting = n;
    }
    let dir = base_dir(&a.config);
    let draw = |source: SourceSpec| -> Result<(Vec<u8>, sctomo_core::measurement::SettingSet)> {
        let cfg = file.to_experiment(source, &dir, seed)?;
        let records = if a.noiseless {
            expected_counts(&cfg)?
        } else {
            sample_counts(&cfg)?
        };
        Ok((counts_to_csv(&records), cfg.set))
    };

    let mut outputs = Vec::new();
    let set = if a.suite {
        let mut entries = Vec::new();
        let mut set = None;
        for (label, source) in fourteen_state_labels().into_iter().zip(fourteen_state_suite()) {
            let (csv, s) = draw(source.clone())?;
            let name = format!("counts_{label}.csv");
            write_atomic(&a.out.join(&name), &csv)?;
            outputs.push(name.clone());
            entries.push(SuiteEntry {
                label,
                file: name,
                source: SourceDto::from_spec(&source),
            });
            set = Some(s);
        }
        let index = SuiteIndex {
            format_version: FORMAT_VERSION,
            seed,
            states: entries,
        };
        write_atomic(&a.out.join("index.json"), &to_json(&index))?;
        outputs.push("index.json".into());
        set.expect("suite is not empty")
    } else {
        let source = file
            .source
            .as_ref()
            .ok_or_else(|| CliError::input(format!("{}: `source` is required without --suite", a.config.display())))?
            .to_spec()?;
        let (csv, set) = draw(source)?;
        write_atomic(&a.out.join("counts.csv"), &csv)?;
        outputs.push("counts.csv".into());
        set
    };
    write_atomic(&a.out.join("settings.json"), &to_json(&SettingsFile::from_set(&set)))?;
    outputs.push("settings.json".into());

    let mut manifest = RunManifest::new(Command::Simulate, Some(&a.config), &a.out);
    manifest.seed = Some(seed);
    manifest.seed_source = Some(seed_source);
    manifest.resolved_config = Some(file);
    write_manifest(&a.out, &mut manifest, outputs)
}

fn check_mode(mode: Protocol, n_unknowns: usize) -> Result<()> {
    match (mode, n_unknowns) {
        (Protocol::Sct, 0) => Err(CliError::input(
            "mode sct needs settings with an unknown retardance; these have none (use --mode st)",
        )),
        (Protocol::St, n) if n > 0 => Err(CliError::input(format!(
            "mode st needs fully known settings; these have {n} unknown retardance(s) (use --mode sct)"
        ))),
        _ => Ok(()),
    }
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let set = read_versioned::<SettingsFile>(&a.settings)?.to_set()?;
    check_mode(a.mode, set.n_unknowns)?;
    let records = read_counts(&a.counts)?;
    if a.use_expected && records.iter().any(|r| r.expected.is_none()) {
        return Err(CliError::input(format!(
            "{}: --use-expected needs an expected value on every row",
            a.counts.display()
        )));
    }
    let model = if a.use_expected {
        LikelihoodModel::noiseless(set.clone(), &records)?
    } else {
        LikelihoodModel::new(set.clone(), &records)?
    };
    let opt = OptimizerDto {
        n_starts: a.starts,
        alpha_grid: a.alpha_grid.clone(),
        purity_prior: a.purity_prior,
        max_evals: a.max_evals,
        seed: Some(a.seed),
        ..Default::default()
    }
    .resolve()?;
    let result = runners::reconstruct(&model, &opt)?;

    let bars = match a.mc {
        Some(n) => {
            let mut q = vec![Quantity::Fidelity];
            if set.n_qubits == 2 {
                q.push(Quantity::Concurrence);
            }
            if set.n_unknowns > 0 {
                q.push(Quantity::Alpha);
            }
            Some(runners::monte_carlo_errors(&model, &opt, n, &q, a.seed, Some(&result.rho_hat))?)
        }
        None => None,
    };
    emit(a.out.as_deref(), &to_json(&ResultFile::new(a.mode, &result, bars.as_deref())))?;
    if result.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged)
    }
}

fn suite_states(states: &StatesDto) -> Result<(Vec<SourceSpec>, Vec<String>)> {
    match states {
        StatesDto::Named(n) if n == "suite" => Ok((fourteen_state_suite(), fourteen_state_labels())),
        StatesDto::Named(n) => Err(CliError::input(format!("unknown state set {n:?} (expected \"suite\")"))),
        StatesDto::List(list) => {
            let specs = list.iter().map(SourceDto::to_spec).collect::<Result<Vec<_>>>()?;
            let labels = (0..specs.len()).map(|i| format!("s{i}")).collect();
            Ok((specs, labels))
        }
    }
}

fn level(photons: f64, noiseless: bool) -> PhotonLevel {
    if noiseless {
        PhotonLevel::Noiseless(photons)
    } else {
        PhotonLevel::Poisson(photons)
    }
}

pub fn sweep_retardance(a: &RetardanceArgs) -> Result<()> {
    let file: RetardanceSweepFile = read_versioned(&a.config)?;
    let (states, labels) = suite_states(&file.states)?;
    let runs = a.runs.unwrap_or(file.runs);
    let sweep = RetardanceSweep {
        states,
        alphas: file.alphas.clone(),
        photons: level(a.photons.unwrap_or(file.photons), file.noiseless),
        seeds: (0..runs as u64).map(|r| file.base_seed.wrapping_add(r)).collect(),
        opt: file.optimizer.resolve()?,
    };
    let report = runners::retardance_sweep(&sweep)?;
    let outputs = write_sweep(&a.out, &report, &labels)?;
    let mut manifest = RunManifest::new(Command::SweepRetardance, Some(&a.config), &a.out);
    manifest.seed = Some(file.base_seed);
    write_manifest(&a.out, &mut manifest, outputs)
}

pub fn sweep_noise(a: &NoiseArgs) -> Result<()> {
    let file: NoiseSweepFile = read_versioned(&a.config)?;
    let photons = a.photons.clone().unwrap_or_else(|| file.photons.clone());
    if photons.is_empty() {
        return Err(CliError::input("noise sweep needs at least one photon level"));
    }
    let mut levels: Vec<PhotonLevel> = photons.iter().map(|&n| PhotonLevel::Poisson(n)).collect();
    if file.include_noiseless {
        let top = photons.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        levels.push(PhotonLevel::Noiseless(top));
    }
    let sweep = NoiseSweep {
        state: file.state.to_spec()?,
        alpha: file.alpha,
        levels,
        runs_per_level: a.runs.unwrap_or(file.runs),
        base_seed: file.base_seed,
        opt: file.optimizer.resolve()?,
    };
    let report = runners::noise_sweep(&sweep)?;
    let outputs = write_sweep(&a.out, &report, &["state".to_string()])?;
    let mut manifest = RunManifest::new(Command::SweepNoise, Some(&a.config), &a.out);
    manifest.seed = Some(file.base_seed);
    write_manifest(&a.out, &mut manifest, outputs)
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let file: CompareFile = read_versioned(&a.config)?;
    let plan = ComparisonPlan {
        source: file.source.to_spec()?,
        set_sct: sct_settings_2q(),
        set_st: st_settings_2q(),
        true_alphas: file.true_alphas.clone(),
        photons: level(file.photons, file.noiseless),
        seed: a.seed.unwrap_or(file.seed),
        opt: file.optimizer.resolve()?,
        n_mc: a.mc.unwrap_or(file.n_mc),
    };
    let c = runners::compare_sct_st(&plan)?;
    emit(a.out.as_deref(), &to_json(&ComparisonFile::from(&c)))
}

pub fn settings(a: &SettingsArgs) -> Result<()> {
    let set = a.protocol.settings(a.qubits)?;
    emit(a.out.as_deref(), &to_json(&SettingsFile::from_set(&set)))
}
