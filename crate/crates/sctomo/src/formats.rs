//! JSON and CSV wire formats.
//!
//! Every file written by the tool carries `format_version`. Readers accept
//! any version with a major number no newer than [`FORMAT_VERSION`]; files
//! without a version (hand-written configs, lab count files) are read as the
//! current version.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sctomo_core::analysis::{Comparison, ErrorBars, NamedErrorBars};
use sctomo_core::estimator::{OptimizerConfig, ReconstructionResult};
use sctomo_core::measurement::{
    sct_settings_1q, sct_settings_2q, st_settings_1q, st_settings_2q, MeasurementSetting, Port, RotationSpec,
    SettingSet,
};
use sctomo_core::simulator::{CountRecord, ExperimentConfig, SourceKind, SourceSpec};
use sctomo_core::state::DensityMatrix;
use sctomo_core::{Complex64, Operator};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: &str = "1.0";
const SUPPORTED_MAJOR: u64 = 1;

fn default_version() -> String {
    FORMAT_VERSION.to_string()
}

/// Rejects versions whose major number is newer than this tool's.
pub fn check_format_version(found: &str, what: &str) -> Result<()> {
    let major = found
        .trim()
        .split('.')
        .next()
        .and_then(|m| m.parse::<u64>().ok())
        .ok_or_else(|| CliError::input(format!("{what}: unreadable format_version {found:?}")))?;
    if major > SUPPORTED_MAJOR {
        return Err(CliError::input(format!(
            "{what}: format_version {found} is newer than the supported {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e| CliError::write(path, e);
    fs::create_dir_all(dir).map_err(fail)?;
    let mut builder = tempfile::Builder::new();
    builder.prefix(".sctomo-");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| CliError::write(path, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("wire types serialize");
    out.push(b'\n');
    out
}

/// Parses JSON, naming the offending field and position on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::input(format!("{what}: field `{field}`: {}", e.into_inner()))
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

/// Files that carry a `format_version` field.
pub trait Versioned: DeserializeOwned {
    fn format_version(&self) -> &str;
}

pub fn read_versioned<T: Versioned>(path: &Path) -> Result<T> {
    let what = path.display().to_string();
    let value: T = parse_json(&read_text(path)?, &what)?;
    check_format_version(value.format_version(), &what)?;
    Ok(value)
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn format_version(&self) -> &str {
                &self.format_version
            }
        })*
    };
}

versioned!(SettingsFile, ConfigFile, ResultFile, RunManifest, RetardanceSweepFile, NoiseSweepFile, CompareFile, ComparisonFile);

// Matrices are nested rows of `[re, im]` pairs.

pub type Matrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_operator(op: &Operator) -> Matrix {
    let d = op.dim();
    op.entries().chunks(d).map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn operator_from_matrix(m: &Matrix) -> Result<Operator> {
    let d = m.len();
    if m.iter().any(|row| row.len() != d) {
        return Err(CliError::input(format!("matrix must be square, got {d} rows of unequal length")));
    }
    let entries: Vec<Complex64> = m.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
    Ok(Operator::from_rows(d, &entries)?)
}

// Setting manifests.

fn one() -> f64 {
    1.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationDto {
    #[serde(default, skip_serializing_if = "is_false")]
    pub identity: bool,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "one")]
    pub nu: f64,
    /// Known rotation angle; absent when the angle is the unknown retardance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl From<&RotationSpec> for RotationDto {
    fn from(r: &RotationSpec) -> Self {
        Self {
            identity: r.identity,
            phi: r.phi,
            nu: r.nu,
            alpha: r.known_alpha,
        }
    }
}

impl RotationDto {
    fn to_spec(&self) -> RotationSpec {
        if self.identity {
            RotationSpec::IDENTITY
        } else {
            match self.alpha {
                Some(a) => RotationSpec::known(self.phi, self.nu, a),
                None => RotationSpec::new(self.phi, self.nu),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingDto {
    pub id: String,
    pub per_qubit: Vec<RotationDto>,
    /// One port letter per qubit: `R` (primary) or `L` (complement).
    pub ports: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsFile {
    #[serde(default = "default_version")]
    pub format_version: String,
    pub n_qubits: usize,
    pub n_unknowns: usize,
    pub settings: Vec<SettingDto>,
}

fn port_from_letter(c: char, id: &str) -> Result<Port> {
    match c {
        'R' => Ok(Port::Primary),
        'L' => Ok(Port::Complement),
        _ => Err(CliError::input(format!("setting {id}: port must be R or L, got {c:?}"))),
    }
}

impl SettingsFile {
    pub fn from_set(set: &SettingSet) -> Self {
        Self {
            format_version: default_version(),
            n_qubits: set.n_qubits,
            n_unknowns: set.n_unknowns,
            settings: set
                .settings
                .iter()
                .map(|s| SettingDto {
                    id: s.id.clone(),
                    per_qubit: s.per_qubit.iter().map(RotationDto::from).collect(),
                    ports: s.ports.iter().map(|p| p.letter()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_set(&self) -> Result<SettingSet> {
        let settings = self
            .settings
            .iter()
            .map(|s| {
                Ok(MeasurementSetting {
                    id: s.id.clone(),
                    per_qubit: s.per_qubit.iter().map(RotationDto::to_spec).collect(),
                    ports: s.ports.chars().map(|c| port_from_letter(c, &s.id)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SettingSet::new(self.n_qubits, settings, self.n_unknowns)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[default]
    Sct,
    St,
}

impl Protocol {
    pub fn settings(self, n_qubits: usize) -> Result<SettingSet> {
        match (self, n_qubits) {
            (Protocol::Sct, 1) => Ok(sct_settings_1q()),
            (Protocol::Sct, 2) => Ok(sct_settings_2q()),
            (Protocol::St, 1) => Ok(st_settings_1q()),
            (Protocol::St, 2) => Ok(st_settings_2q()),
            _ => Err(CliError::input(format!("no built-in protocol for {n_qubits} qubits"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Sct => "sct",
            Protocol::St => "st",
        }
    }
}

// Counts.

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    setting_id: String,
    count: u64,
    expected: Option<f64>,
}

/// `# format_version` line, then `setting_id,count,expected`; `expected` is
/// blank for measured data.
pub fn counts_to_csv(records: &[CountRecord]) -> Vec<u8> {
    let mut out = format!("# format_version: {FORMAT_VERSION}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    for r in records {
        w.serialize(CountRow {
            setting_id: r.setting_id.clone(),
            count: r.count,
            expected: r.expected,
        })
        .expect("in-memory csv write");
    }
    w.flush().expect("in-memory csv write");
    drop(w);
    out
}

fn header_version(text: &str) -> Option<&str> {
    text.lines()
        .take_while(|l| l.trim_start().starts_with('#') || l.trim().is_empty())
        .find_map(|l| l.trim_start().trim_start_matches('#').trim().strip_prefix("format_version:"))
        .map(str::trim)
}

pub fn parse_counts_csv(text: &str, what: &str) -> Result<Vec<CountRecord>> {
    check_format_version(header_version(text).unwrap_or(FORMAT_VERSION), what)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let records = reader
        .deserialize::<CountRow>()
        .map(|row| {
            let row = row.map_err(|e| CliError::input(format!("{what}: {e}")))?;
            Ok(CountRecord {
                setting_id: row.setting_id,
                count: row.count,
                expected: row.expected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if records.is_empty() {
        return Err(CliError::input(format!("{what}: no count rows")));
    }
    Ok(records)
}

pub fn read_counts(path: &Path) -> Result<Vec<CountRecord>> {
    parse_counts_csv(&read_text(path)?, &path.display().to_string())
}

// Sources and experiment configs.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceDto {
    BlochPure {
        theta: f64,
        phi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depolarization: Option<f64>,
    },
    /// `a|HH⟩ + b|VV⟩` with `[re, im]` amplitudes.
    TwoQubitAb {
        a: [f64; 2],
        b: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depolarization: Option<f64>,
    },
    Explicit {
        rho: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depolarization: Option<f64>,
    },
}

impl SourceDto {
    pub fn to_spec(&self) -> Result<SourceSpec> {
        let (spec, p) = match self {
            SourceDto::BlochPure {
                theta,
                phi,
                depolarization,
            } => (SourceSpec::bloch(*theta, *phi), depolarization),
            SourceDto::TwoQubitAb { a, b, depolarization } => (
                SourceSpec::hh_vv(Complex64::new(a[0], a[1]), Complex64::new(b[0], b[1])),
                depolarization,
            ),
            SourceDto::Explicit { rho, depolarization } => {
                (SourceSpec::explicit(DensityMatrix::new(operator_from_matrix(rho)?)?), depolarization)
            }
        };
        Ok(match p {
            Some(p) => spec.with_depolarization(*p),
            None => spec,
        })
    }

    pub fn from_spec(spec: &SourceSpec) -> Self {
        let depolarization = spec.depolarization;
        match &spec.kind {
            SourceKind::BlochPure { theta, phi } => SourceDto::BlochPure {
                theta: *theta,
                phi: *phi,
                depolarization,
            },
            SourceKind::TwoQubitAb { a, b } => SourceDto::TwoQubitAb {
                a: [a.re, a.im],
                b: [b.re, b.im],
                depolarization,
            },
            SourceKind::Explicit(rho) => SourceDto::Explicit {
                rho: matrix_from_operator(rho.op()),
                depolarization,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_version")]
    pub format_version: String,
    /// Optional only for suite runs, which substitute each suite state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceDto>,
    #[serde(default)]
    pub protocol: Protocol,
    /// Settings manifest used instead of the built-in protocol, relative to
    /// the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<PathBuf>,
    #[serde(default)]
    pub true_alphas: Vec<f64>,
    pub photons_per_setting: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub multipliers: BTreeMap<String, f64>,
}

impl ConfigFile {
    pub fn setting_set(&self, n_qubits: usize, base_dir: &Path) -> Result<SettingSet> {
        match &self.settings {
            Some(p) => read_versioned::<SettingsFile>(&base_dir.join(p))?.to_set(),
            None => self.protocol.settings(n_qubits),
        }
    }

    /// Core config for `source` (the file's own source unless overridden).
    pub fn to_experiment(&self, source: SourceSpec, base_dir: &Path, seed: u64) -> Result<ExperimentConfig> {
        let set = self.setting_set(source.n_qubits(), base_dir)?;
        let mut cfg = ExperimentConfig::new(source, set, self.true_alphas.clone(), self.photons_per_setting, seed)?;
        cfg.multipliers = self.multipliers.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

// Optimizer overrides.

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerDto {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purity_prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl OptimizerDto {
    pub fn resolve(&self) -> Result<OptimizerConfig> {
        let d = OptimizerConfig::default();
        let opt = OptimizerConfig {
            n_starts: self.n_starts.unwrap_or(d.n_starts),
            alpha_grid: self.alpha_grid.clone().unwrap_or(d.alpha_grid),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_evals: self.max_evals.unwrap_or(d.max_evals),
            purity_prior: self.purity_prior.or(d.purity_prior),
            seed: self.seed.unwrap_or(d.seed),
        };
        opt.validate()?;
        Ok(opt)
    }
}

// Reconstruction results.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartDto {
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: Vec<f64>,
    pub converged: bool,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityDto {
    pub flipped_arms: Vec<bool>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBarsDto {
    pub name: String,
    pub quantity: String,
    pub index: usize,
    pub mean: f64,
    pub std: f64,
    pub n_resamples: usize,
    pub failures: usize,
    pub low_confidence: bool,
}

impl ErrorBarsDto {
    pub fn new(name: String, b: &ErrorBars) -> Self {
        Self {
            name,
            quantity: b.quantity.name().to_string(),
            index: b.index,
            mean: b.mean,
            std: b.std,
            n_resamples: b.n_resamples,
            failures: b.failures,
            low_confidence: b.low_confidence,
        }
    }

    /// Named `quantity` or `alpha_<arm>`.
    pub fn from_bars(b: &ErrorBars) -> Self {
        let name = match b.quantity {
            sctomo_core::analysis::Quantity::Alpha => format!("alpha_{}", b.index),
            q => q.name().to_string(),
        };
        Self::new(name, b)
    }
}

impl From<&NamedErrorBars> for ErrorBarsDto {
    fn from(n: &NamedErrorBars) -> Self {
        Self::new(n.name.clone(), &n.bars)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format_version: String,
    pub mode: Protocol,
    pub n_qubits: usize,
    pub rho_hat: Matrix,
    pub alpha_hat: Vec<f64>,
    #[serde(rename = "final_L")]
    pub final_l: f64,
    pub converged: bool,
    pub evals: usize,
    pub start_results: Vec<StartDto>,
    pub ambiguity_note: Option<AmbiguityDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_bars: Option<Vec<ErrorBarsDto>>,
}

impl ResultFile {
    pub fn new(mode: Protocol, r: &ReconstructionResult, error_bars: Option<&[ErrorBars]>) -> Self {
        Self {
            format_version: default_version(),
            mode,
            n_qubits: r.rho_hat.n_qubits(),
            rho_hat: matrix_from_operator(r.rho_hat.op()),
            alpha_hat: r.alpha_hat.clone(),
            final_l: r.final_l,
            converged: r.converged,
            evals: r.evals,
            start_results: r
                .start_results
                .iter()
                .map(|s| StartDto {
                    l: s.l,
                    alpha: s.alpha.clone(),
                    converged: s.converged,
                    evals: s.evals,
                })
                .collect(),
            ambiguity_note: r.ambiguity_note.as_ref().map(|n| AmbiguityDto {
                flipped_arms: n.flipped_arms.clone(),
                note: n.to_string(),
            }),
            error_bars: error_bars.map(|bars| bars.iter().map(ErrorBarsDto::from_bars).collect()),
        }
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        Ok(DensityMatrix::new(operator_from_matrix(&self.rho_hat)?)?)
    }
}

// Run manifests.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Reconstruct,
    SweepRetardance,
    SweepNoise,
    Compare,
    Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    Config,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: String,
    pub tool_version: String,
    pub command: Command,
    pub config_path: Option<String>,
    pub output_dir: String,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_source: Option<SeedSource>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_config: Option<ConfigFile>,
}

impl RunManifest {
    pub fn new(command: Command, config_path: Option<&Path>, output_dir: &Path) -> Self {
        Self {
            format_version: default_version(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config_path: config_path.map(|p| p.display().to_string()),
            output_dir: output_dir.display().to_string(),
            seed: None,
            seed_source: None,
            outputs: Vec::new(),
            resolved_config: None,
        }
    }
}

// Sweep and comparison configs.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StatesDto {
    /// `"suite"`: the fourteen single-qubit test states.
    Named(String),
    List(Vec<SourceDto>),
}

impl Default for StatesDto {
    fn default() -> Self {
        StatesDto::Named("suite".into())
    }
}

fn default_runs() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetardanceSweepFile {
    #[serde(default = "default_version")]
    pub format_version: String,
    #[serde(default)]
    pub states: StatesDto,
    pub alphas: Vec<f64>,
    pub photons: f64,
    /// Fit expected counts instead of Poisson draws.
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSweepFile {
    #[serde(default = "default_version")]
    pub format_version: String,
    pub state: SourceDto,
    pub alpha: f64,
    pub photons: Vec<f64>,
    /// Appends a noiseless pseudo-level at the largest photon count.
    #[serde(default)]
    pub include_noiseless: bool,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareFile {
    #[serde(default = "default_version")]
    pub format_version: String,
    pub source: SourceDto,
    pub true_alphas: Vec<f64>,
    pub photons: f64,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub n_mc: usize,
    #[serde(default)]
    pub optimizer: OptimizerDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub format_version: String,
    pub c_sct: f64,
    pub c_st: f64,
    pub f_between: f64,
    pub alpha_hat: Vec<f64>,
    pub converged: bool,
    pub error_bars: Vec<ErrorBarsDto>,
    pub mc_failures: usize,
}

impl From<&Comparison> for ComparisonFile {
    fn from(c: &Comparison) -> Self {
        Self {
            format_version: default_version(),
            c_sct: c.estimate.c_sct,
            c_st: c.estimate.c_st,
            f_between: c.estimate.f_between,
            alpha_hat: c.estimate.alpha_hat.clone(),
            converged: c.estimate.converged,
            error_bars: c.error_bars.iter().map(ErrorBarsDto::from).collect(),
            mc_failures: c.mc_failures,
        }
    }
}
