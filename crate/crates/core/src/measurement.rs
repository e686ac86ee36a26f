//! Rotation unitaries, measurement settings and tomography protocols.
//!
//! Every basis change is a rotation `R_φ(να)` about an equatorial axis at
//! angle `φ` from x. The trusted projector is `|R⟩⟨R|` on the primary port of
//! the beamsplitter and `|L⟩⟨L|` on the complement port, so a setting's
//! operator is `μ = U†(α) P U(α)`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::metrics::rem_tau;
use crate::operator::{tensor_product, Operator};
use crate::pauli::pauli_basis_element;

/// Condition number above which a design matrix is flagged.
pub const CONDITION_WARN: f64 = 1e6;
/// Relative singular-value threshold for the numerical rank.
pub const RANK_RTOL: f64 = 1e-9;

/// One equatorial-axis rotation `R_φ(να)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSpec {
    /// Axis angle from x in the equatorial plane, radians.
    pub phi: f64,
    /// Multiplier on the retardance.
    pub nu: f64,
    /// When set the unitary is `σ0` whatever the angle.
    pub identity: bool,
    /// A calibrated angle that replaces the unknown retardance for this
    /// rotation (standard tomography). `None` means the arm's `α` is used.
    pub known_alpha: Option<f64>,
}

impl RotationSpec {
    pub const IDENTITY: RotationSpec = RotationSpec {
        phi: 0.0,
        nu: 0.0,
        identity: true,
        known_alpha: None,
    };

    pub fn new(phi: f64, nu: f64) -> Self {
        Self {
            phi,
            nu,
            identity: false,
            known_alpha: None,
        }
    }

    pub fn known(phi: f64, nu: f64, alpha: f64) -> Self {
        Self {
            known_alpha: Some(alpha),
            ..Self::new(phi, nu)
        }
    }

    /// True when the rotation depends on an unknown retardance.
    pub fn needs_alpha(&self) -> bool {
        !self.identity && self.known_alpha.is_none() && self.nu != 0.0
    }
}

/// `cos(να/2) σ0 − i sin(να/2)(cos φ σx + sin φ σy)`; `σ0` for identity
/// specs. A `known_alpha` on the spec takes precedence over `alpha`.
pub fn rotation_unitary(spec: &RotationSpec, alpha: f64) -> Operator {
    if spec.identity {
        return Operator::identity(2).expect("2x2");
    }
    let angle = spec.nu * spec.known_alpha.unwrap_or(alpha);
    let (s, c) = (angle / 2.0).sin_cos();
    let (sp, cp) = spec.phi.sin_cos();
    // -i s (cp σx + sp σy) = [[0, -i s cp - s sp], [-i s cp + s sp, 0]]
    let off_upper = Complex64::new(-s * sp, -s * cp);
    let off_lower = Complex64::new(s * sp, -s * cp);
    let diag = Complex64::new(c, 0.0);
    Operator::from_rows(2, &[diag, off_upper, off_lower, diag]).expect("2x2")
}

/// Output port of the polarizing beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    /// `|R⟩⟨R|`
    Primary,
    /// `|L⟩⟨L|`
    Complement,
}

impl Port {
    pub fn ket(self) -> [Complex64; 2] {
        match self {
            Port::Primary => crate::state::basis::r(),
            Port::Complement => crate::state::basis::l(),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Port::Primary => 'R',
            Port::Complement => 'L',
        }
    }
}

/// One detector configuration: a rotation and port per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetting {
    pub id: String,
    pub per_qubit: Vec<RotationSpec>,
    pub ports: Vec<Port>,
}

impl MeasurementSetting {
    pub fn n_qubits(&self) -> usize {
        self.per_qubit.len()
    }

    /// Whether two settings apply the same unitary (they may differ in ports).
    pub fn same_unitary(&self, other: &MeasurementSetting) -> bool {
        self.per_qubit == other.per_qubit
    }
}

fn arm_alpha(spec: &RotationSpec, qubit: usize, alphas: &[f64]) -> Result<f64> {
    if !spec.needs_alpha() {
        return Ok(spec.known_alpha.unwrap_or(0.0));
    }
    match alphas.len() {
        0 => Err(Error::LengthMismatch {
            expected: 1,
            got: 0,
        }),
        n => Ok(alphas[qubit.min(n - 1)]),
    }
}

/// The vector `U†(α)|p⟩` (tensor product over qubits) with `μ = |u⟩⟨u|`.
pub fn measurement_vector(setting: &MeasurementSetting, alphas: &[f64]) -> Result<[Complex64; 4]> {
    let zero = Complex64::new(0.0, 0.0);
    let mut factors = [[zero; 2]; 2];
    for (q, (spec, port)) in setting.per_qubit.iter().zip(&setting.ports).enumerate() {
        let u = rotation_unitary(spec, arm_alpha(spec, q, alphas)?).adjoint();
        let v = u.apply(&port.ket());
        factors[q] = [v[0], v[1]];
    }
    Ok(match setting.n_qubits() {
        1 => [factors[0][0], factors[0][1], zero, zero],
        _ => [
            factors[0][0] * factors[1][0],
            factors[0][0] * factors[1][1],
            factors[0][1] * factors[1][0],
            factors[0][1] * factors[1][1],
        ],
    })
}

/// `μ = ⊗_k U_k†(α_k) P_k U_k(α_k)` for one setting. `alphas` holds one value
/// shared by every arm or one per qubit; it may be empty when no rotation
/// needs an unknown angle.
pub fn measurement_operator(setting: &MeasurementSetting, alphas: &[f64]) -> Result<Operator> {
    let n = setting.n_qubits();
    if !(alphas.len() <= 1 || alphas.len() == n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: alphas.len(),
        });
    }
    let mut factors = Vec::with_capacity(n);
    for (q, (spec, port)) in setting.per_qubit.iter().zip(&setting.ports).enumerate() {
        let u = rotation_unitary(spec, arm_alpha(spec, q, alphas)?);
        let p = Operator::projector(&port.ket())?;
        factors.push(&(&u.adjoint() * &p) * &u);
    }
    match n {
        1 => Ok(factors[0]),
        2 => tensor_product(&factors[0], &factors[1]),
        _ => Err(Error::UnsupportedDim(1 << n)),
    }
}

/// An ordered protocol of measurement settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingSet {
    pub n_qubits: usize,
    pub settings: Vec<MeasurementSetting>,
    /// Number of distinct unknown retardances (one per wave plate).
    pub n_unknowns: usize,
}

impl SettingSet {
    pub fn new(n_qubits: usize, settings: Vec<MeasurementSetting>, n_unknowns: usize) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::InvalidSettings(format!("n_qubits {n_qubits} not in {{1, 2}}")));
        }
        if !(n_unknowns == 0 || n_unknowns == 1 || n_unknowns == n_qubits) {
            return Err(Error::InvalidSettings(format!(
                "n_unknowns {n_unknowns} must be 0, 1 or n_qubits"
            )));
        }
        if settings.is_empty() {
            return Err(Error::InvalidSettings("no settings".to_string()));
        }
        let mut ids = BTreeSet::new();
        for s in &settings {
            if s.per_qubit.len() != n_qubits || s.ports.len() != n_qubits {
                return Err(Error::InvalidSettings(format!(
                    "setting {} has {} rotations and {} ports for {n_qubits} qubits",
                    s.id,
                    s.per_qubit.len(),
                    s.ports.len()
                )));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::InvalidSettings(format!("duplicate setting id {}", s.id)));
            }
            for spec in &s.per_qubit {
                if !spec.phi.is_finite() || !spec.nu.is_finite() || spec.nu < 0.0 {
                    return Err(Error::InvalidSettings(format!("setting {} has a bad rotation", s.id)));
                }
                if n_unknowns == 0 && spec.needs_alpha() {
                    return Err(Error::InvalidSettings(format!(
                        "setting {} needs an unknown angle but the set declares none",
                        s.id
                    )));
                }
            }
        }
        Ok(Self {
            n_qubits,
            settings,
            n_unknowns,
        })
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.settings.iter().position(|s| s.id == id)
    }

    fn check_alphas(&self, alphas: &[f64]) -> Result<()> {
        if alphas.len() != self.n_unknowns {
            return Err(Error::LengthMismatch {
                expected: self.n_unknowns,
                got: alphas.len(),
            });
        }
        Ok(())
    }

    pub fn measurement_operator(&self, index: usize, alphas: &[f64]) -> Result<Operator> {
        self.check_alphas(alphas)?;
        measurement_operator(&self.settings[index], alphas)
    }

    pub fn measurement_vectors(&self, alphas: &[f64]) -> Result<Vec<[Complex64; 4]>> {
        self.check_alphas(alphas)?;
        self.settings.iter().map(|s| measurement_vector(s, alphas)).collect()
    }

    /// Settings grouped by shared unitary, in order of first appearance.
    pub fn unitary_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, s) in self.settings.iter().enumerate() {
            match groups.iter_mut().find(|g| self.settings[g[0]].same_unitary(s)) {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        groups
    }

    /// Keeps only settings matching `keep` (for pruned experimental sets).
    pub fn retain(&self, keep: impl Fn(&MeasurementSetting) -> bool) -> Result<Self> {
        let settings = self.settings.iter().filter(|s| keep(s)).cloned().collect();
        Self::new(self.n_qubits, settings, self.n_unknowns)
    }
}

fn sct_unitaries() -> [RotationSpec; 5] {
    [
        RotationSpec::IDENTITY,
        RotationSpec::new(0.0, 1.0),
        RotationSpec::new(FRAC_PI_2, 1.0),
        RotationSpec::new(PI, 2.0),
        RotationSpec::new(3.0 * FRAC_PI_2, 2.0),
    ]
}

fn st_unitaries() -> [RotationSpec; 3] {
    [
        RotationSpec::IDENTITY,
        RotationSpec::known(0.0, 1.0, FRAC_PI_2),
        RotationSpec::known(FRAC_PI_2, 1.0, FRAC_PI_2),
    ]
}

const PORTS: [Port; 2] = [Port::Primary, Port::Complement];

fn single_qubit_set(unitaries: &[RotationSpec], n_unknowns: usize) -> SettingSet {
    let mut settings = Vec::new();
    for (u, spec) in unitaries.iter().enumerate() {
        for port in PORTS {
            settings.push(MeasurementSetting {
                id: format!("U{u}:{}", port.letter()),
                per_qubit: vec![*spec],
                ports: vec![port],
            });
        }
    }
    SettingSet::new(1, settings, n_unknowns).expect("static protocol")
}

fn product_set(unitaries: &[RotationSpec], n_unknowns: usize) -> SettingSet {
    let mut settings = Vec::new();
    for (u1, s1) in unitaries.iter().enumerate() {
        for (u2, s2) in unitaries.iter().enumerate() {
            for p1 in PORTS {
                for p2 in PORTS {
                    settings.push(MeasurementSetting {
                        id: format!("U{u1}U{u2}:{}{}", p1.letter(), p2.letter()),
                        per_qubit: vec![*s1, *s2],
                        ports: vec![p1, p2],
                    });
                }
            }
        }
    }
    SettingSet::new(2, settings, n_unknowns).expect("static protocol")
}

/// Self-calibrating single-qubit protocol: `{σ0, R_0(α), R_{π/2}(α),
/// R_π(2α), R_{3π/2}(2α)}` on both ports.
pub fn sct_settings_1q() -> SettingSet {
    single_qubit_set(&sct_unitaries(), 1)
}

/// Standard single-qubit protocol: `{σ0, R_0(π/2), R_{π/2}(π/2)}` on both ports.
pub fn st_settings_1q() -> SettingSet {
    single_qubit_set(&st_unitaries(), 0)
}

/// Self-calibrating two-qubit protocol: all 25 pairs of the single-qubit
/// unitaries (arm k uses `α_k`) on all four coincidence port pairs.
pub fn sct_settings_2q() -> SettingSet {
    product_set(&sct_unitaries(), 2)
}

/// Standard two-qubit protocol: 3×3 unitary pairs on four port pairs.
pub fn st_settings_2q() -> SettingSet {
    product_set(&st_unitaries(), 0)
}

/// Design matrix `B[j][i] = Tr[μ_j(α) Σ_i]` with its conditioning.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// 2-norm condition number (`∞` when rank deficient).
    pub condition_number: f64,
}

impl DesignMatrix {
    pub fn full_rank(&self) -> bool {
        self.rank == self.cols
    }

    pub fn ill_conditioned(&self) -> bool {
        self.condition_number > CONDITION_WARN
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.entries[j * self.cols..(j + 1) * self.cols]
    }
}

pub fn design_matrix(set: &SettingSet, alphas: &[f64]) -> Result<DesignMatrix> {
    set.check_alphas(alphas)?;
    let cols = 1 << (2 * set.n_qubits);
    let basis = (0..cols)
        .map(|i| pauli_basis_element(set.n_qubits, i))
        .collect::<Result<Vec<_>>>()?;
    let vectors = set.measurement_vectors(alphas)?;
    let mut entries = Vec::with_capacity(set.len() * cols);
    for v in &vectors {
        for s in &basis {
            entries.push(s.expectation(v).re);
        }
    }
    let sv = singular_values(&entries, set.len(), cols);
    let smax = sv[0];
    let rank = sv.iter().filter(|&&s| s > RANK_RTOL * smax).count();
    let smin = sv[cols.min(set.len()) - 1];
    let condition_number = if rank < cols || smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    };
    Ok(DesignMatrix {
        rows: set.len(),
        cols,
        entries,
        singular_values: sv,
        rank,
        condition_number,
    })
}

/// Aggregate description of a resonant control pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// `∫dt ε(t) exp(i(ω_c − ω_e)t)`.
    pub spectral_amplitude: Complex64,
    /// Projection of the transition dipole on the polarization, `d_eg·e`.
    pub dipole_projection: f64,
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRotation {
    pub spec: RotationSpec,
    pub alpha: f64,
    /// Zero spectral amplitude: the rotation is the identity.
    pub degenerate: bool,
}

/// `ν = 2|A|/ħ`, `φ = arg A` (in `[0, 2π)`), `α = d_eg·e`.
pub fn pulse_to_rotation(pulse: &PulseSpec) -> Result<PulseRotation> {
    if !(pulse.hbar > 0.0) || !pulse.hbar.is_finite() {
        return Err(Error::InvalidConfig(format!("hbar must be positive, got {}", pulse.hbar)));
    }
    let a = pulse.spectral_amplitude;
    if !a.re.is_finite() || !a.im.is_finite() || !pulse.dipole_projection.is_finite() {
        return Err(Error::InvalidConfig("non-finite pulse parameters".to_string()));
    }
    let magnitude = a.norm();
    let degenerate = magnitude == 0.0;
    let phi = if degenerate { 0.0 } else { rem_tau(a.arg()) };
    Ok(PulseRotation {
        spec: RotationSpec::new(phi, 2.0 * magnitude / pulse.hbar),
        alpha: pulse.dipole_projection,
        degenerate,
    })
}
