//! Forward model of the photon-counting experiment.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measurement::SettingSet;
use crate::sampling::{Domain, KeyedRng};
use crate::state::{DensityMatrix, PureState, NORM_TOL};

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum SourceKind {
    /// `cos(θ/2)|R⟩ + e^{iφ} sin(θ/2)|L⟩` with `θ ∈ [0, π]`, `φ ∈ [−π, π)`.
    BlochPure { theta: f64, phi: f64 },
    /// `a|HH⟩ + b|VV⟩`.
    TwoQubitAb { a: Complex64, b: Complex64 },
    Explicit(DensityMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Mixing weight with the maximally mixed state.
    pub depolarization: Option<f64>,
}

impl SourceSpec {
    pub fn bloch(theta: f64, phi: f64) -> Self {
        Self {
            kind: SourceKind::BlochPure { theta, phi },
            depolarization: None,
        }
    }

    pub fn hh_vv(a: Complex64, b: Complex64) -> Self {
        Self {
            kind: SourceKind::TwoQubitAb { a, b },
            depolarization: None,
        }
    }

    pub fn explicit(rho: DensityMatrix) -> Self {
        Self {
            kind: SourceKind::Explicit(rho),
            depolarization: None,
        }
    }

    pub fn with_depolarization(mut self, p: f64) -> Self {
        self.depolarization = Some(p);
        self
    }

    pub fn n_qubits(&self) -> usize {
        match &self.kind {
            SourceKind::BlochPure { .. } => 1,
            SourceKind::TwoQubitAb { .. } => 2,
            SourceKind::Explicit(rho) => rho.n_qubits(),
        }
    }
}

pub fn resolve_state(source: &SourceSpec) -> Result<DensityMatrix> {
    let rho = match &source.kind {
        SourceKind::BlochPure { theta, phi } => {
            if !(0.0..=PI).contains(theta) {
                return Err(Error::InvalidConfig(format!("theta {theta} outside [0, π]")));
            }
            if !(-PI..PI).contains(phi) {
                return Err(Error::InvalidConfig(format!("phi {phi} outside [-π, π)")));
            }
            DensityMatrix::from_pure(&PureState::bloch(*theta, *phi))
        }
        SourceKind::TwoQubitAb { a, b } => {
            let norm2 = a.norm_sqr() + b.norm_sqr();
            if (norm2 - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized(norm2));
            }
            DensityMatrix::from_pure(&PureState::hh_vv(*a, *b)?)
        }
        SourceKind::Explicit(rho) => *rho,
    };
    match source.depolarization {
        Some(p) => rho.depolarize(p),
        None => Ok(rho),
    }
}

/// Description of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    pub set: SettingSet,
    pub true_alphas: Vec<f64>,
    /// Expected photons per unitary, `N_j`.
    pub photons_per_setting: f64,
    pub seed: u64,
    /// Optional per-setting collection-efficiency factors (default 1).
    pub multipliers: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn new(source: SourceSpec, set: SettingSet, true_alphas: Vec<f64>, photons_per_setting: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            source,
            set,
            true_alphas,
            photons_per_setting,
            seed,
            multipliers: BTreeMap::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.true_alphas.len() != self.set.n_unknowns {
            return Err(Error::InvalidConfig(format!(
                "true_alphas has {} entries, set expects {}",
                self.true_alphas.len(),
                self.set.n_unknowns
            )));
        }
        if !(self.photons_per_setting > 0.0) || !self.photons_per_setting.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "photons_per_setting must be positive, got {}",
                self.photons_per_setting
            )));
        }
        if self.source.n_qubits() != self.set.n_qubits {
            return Err(Error::InvalidConfig(format!(
                "source has {} qubits, setting set has {}",
                self.source.n_qubits(),
                self.set.n_qubits
            )));
        }
        for (id, m) in &self.multipliers {
            if self.set.index_of(id).is_none() {
                return Err(Error::InvalidConfig(format!("multiplier for unknown setting {id}")));
            }
            if !(*m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidConfig(format!("multiplier for {id} must be non-negative")));
            }
        }
        Ok(())
    }

    fn scale(&self, id: &str) -> f64 {
        self.photons_per_setting * self.multipliers.get(id).copied().unwrap_or(1.0)
    }
}

/// Observed counts for one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub setting_id: String,
    pub count: u64,
    /// Noise-free expectation when known (simulation).
    pub expected: Option<f64>,
}

/// `n̄_j = N_j Tr[ρ μ_j(α)]` for every setting. `count` holds the rounded
/// expectation.
pub fn expected_counts(cfg: &ExperimentConfig) -> Result<Vec<CountRecord>> {
    cfg.validate()?;
    let rho = resolve_state(&cfg.source)?;
    let vectors = cfg.set.measurement_vectors(&cfg.true_alphas)?;
    Ok(cfg
        .set
        .settings
        .iter()
        .zip(&vectors)
        .map(|(s, v)| {
            let p = rho.op().expectation(v).re.clamp(0.0, 1.0);
            let mean = cfg.scale(&s.id) * p;
            CountRecord {
                setting_id: s.id.clone(),
                count: libm::round(mean) as u64,
                expected: Some(mean),
            }
        })
        .collect())
}

/// Poisson counts for replicate 0.
pub fn sample_counts(cfg: &ExperimentConfig) -> Result<Vec<CountRecord>> {
    sample_counts_replicate(cfg, 0)
}

/// Poisson counts, keyed by `(cfg.seed, setting index, replicate)`.
pub fn sample_counts_replicate(cfg: &ExperimentConfig, replicate: u32) -> Result<Vec<CountRecord>> {
    let mut records = expected_counts(cfg)?;
    for (j, r) in records.iter_mut().enumerate() {
        let mean = r.expected.unwrap_or(0.0);
        r.count = KeyedRng::new(cfg.seed, Domain::Counts, j as u32, replicate).poisson(mean);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub value: f64,
    /// No photons in either port.
    pub degenerate: bool,
}

/// `N_j` estimated from a setting and its complementary port: the two
/// operators sum to the identity, so their counts sum to `N_j`.
pub fn normalization_from_complement(set: &SettingSet, primary: &CountRecord, complement: &CountRecord) -> Result<Normalization> {
    let lookup = |r: &CountRecord| {
        set.index_of(&r.setting_id)
            .ok_or_else(|| Error::RecordMismatch(format!("unknown setting {}", r.setting_id)))
    };
    let (a, b) = (&set.settings[lookup(primary)?], &set.settings[lookup(complement)?]);
    if set.n_qubits != 1 || !a.same_unitary(b) || a.ports == b.ports {
        return Err(Error::RecordMismatch(format!(
            "{} and {} are not complementary ports of one unitary",
            a.id, b.id
        )));
    }
    let value = (primary.count + complement.count) as f64;
    Ok(Normalization {
        value,
        degenerate: value == 0.0,
    })
}

/// The 14 single-qubit test states: the six axis ends and eight states at
/// polar angles `π/4`, `3π/4` with `φ ∈ {±π/4, ±3π/4}`.
pub fn fourteen_state_suite() -> Vec<SourceSpec> {
    let mut out = Vec::with_capacity(14);
    out.push(SourceSpec::bloch(0.0, 0.0));
    out.push(SourceSpec::bloch(PI, 0.0));
    for phi in [0.0, FRAC_PI_2, -PI, -FRAC_PI_2] {
        out.push(SourceSpec::bloch(FRAC_PI_2, phi));
    }
    for theta in [FRAC_PI_4, 3.0 * FRAC_PI_4] {
        for phi in [FRAC_PI_4, 3.0 * FRAC_PI_4, -FRAC_PI_4, -3.0 * FRAC_PI_4] {
            out.push(SourceSpec::bloch(theta, phi));
        }
    }
    out
}

/// Labels for [`fourteen_state_suite`], in the same order.
pub fn fourteen_state_labels() -> Vec<String> {
    let mut out: Vec<String> = ["R", "L", "H", "D", "V", "A"].iter().map(|s| s.to_string()).collect();
    for t in ["n", "s"] {
        for p in ["p1", "p3", "m1", "m3"] {
            out.push(format!("{t}{p}"));
        }
    }
    out
}
