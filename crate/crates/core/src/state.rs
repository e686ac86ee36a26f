//! Density matrices, pure states and the `ρ = T†T / Tr[T†T]` parameterization.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_map};
use crate::operator::{tensor_product, Operator};
use crate::pauli::{n_qubits_for_dim, pauli, Pauli};

/// Tolerance on the Hermitian, trace and positivity checks.
pub const DENSITY_TOL: f64 = 1e-10;
/// Tolerance on pure-state normalization.
pub const NORM_TOL: f64 = 1e-12;

/// Polarization dictionary in the circular `|R⟩/|L⟩` computational basis.
pub mod basis {
    use core::f64::consts::FRAC_1_SQRT_2;

    use num_complex::Complex64;

    pub fn r() -> [Complex64; 2] {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    }

    pub fn l() -> [Complex64; 2] {
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
    }

    /// `|H⟩ = (|R⟩ + |L⟩)/√2`.
    pub fn h() -> [Complex64; 2] {
        [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)]
    }

    /// `|V⟩ = i(|R⟩ − |L⟩)/√2`.
    pub fn v() -> [Complex64; 2] {
        [Complex64::new(0.0, FRAC_1_SQRT_2), Complex64::new(0.0, -FRAC_1_SQRT_2)]
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_defect();
        if herm > DENSITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min_ev = hermitian_eigenvalues(&op)[0];
        if min_ev < -DENSITY_TOL {
            return Err(Error::NotPositive(min_ev));
        }
        Ok(Self(op))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let dim = 1 << n_qubits;
        Ok(Self(Operator::identity(dim)?.scale_re(1.0 / dim as f64)))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self(Operator::projector(&psi.amplitudes).expect("dim 2 or 4"))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn n_qubits(&self) -> usize {
        n_qubits_for_dim(self.dim()).expect("validated dim")
    }

    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }

    /// `(1 − p) ρ + p I/d`.
    pub fn depolarize(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(alloc::format!(
                "depolarization {p} outside [0, 1]"
            )));
        }
        let mixed = Self::maximally_mixed(self.n_qubits())?;
        Ok(Self(&self.0.scale_re(1.0 - p) + &mixed.0.scale_re(p)))
    }

    /// `Z ρ Z†` with `Z` a π rotation about z on each qubit flagged in `arms`
    /// (this negates the `σx` and `σy` components of those qubits).
    pub fn z_flip(&self, arms: &[bool]) -> Self {
        let z = pauli(Pauli::Z);
        let i2 = pauli(Pauli::I);
        let pick = |flag: bool| if flag { z } else { i2 };
        let u = match self.dim() {
            2 => pick(arms.first().copied().unwrap_or(false)),
            _ => tensor_product(
                &pick(arms.first().copied().unwrap_or(false)),
                &pick(arms.get(1).copied().unwrap_or(false)),
            )
            .expect("2x2 factors"),
        };
        Self(self.0.conjugate_by(&u))
    }

    /// `U ρ U†` for a unitary `U`.
    pub fn rotate(&self, u: &Operator) -> Self {
        Self(self.0.conjugate_by(u))
    }

    /// Nearest-physical projection used for optimizer seeds: Hermitian part,
    /// negative eigenvalues clamped to zero, trace renormalized.
    pub fn project_physical(op: &Operator) -> Result<Self> {
        let clamped = hermitian_map(op, |x| x.max(0.0));
        let tr = clamped.trace().re;
        if tr <= 0.0 {
            return Self::maximally_mixed(n_qubits_for_dim(op.dim())?);
        }
        Self::new(clamped.scale_re(1.0 / tr))
    }
}

/// A normalized state vector on one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = n_qubits_for_dim(amplitudes.len())?;
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm2));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// `cos(θ/2)|R⟩ + e^{iφ} sin(θ/2)|L⟩`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        Self {
            n_qubits: 1,
            amplitudes: vec![
                Complex64::new((theta / 2.0).cos(), 0.0),
                Complex64::from_polar((theta / 2.0).sin(), phi),
            ],
        }
    }

    /// `a|HH⟩ + b|VV⟩` written in the `|R⟩/|L⟩` product basis.
    pub fn hh_vv(a: Complex64, b: Complex64) -> Result<Self> {
        let h = basis::h();
        let v = basis::v();
        let amps = (0..4)
            .map(|k| a * h[k / 2] * h[k % 2] + b * v[k / 2] * v[k % 2])
            .collect();
        Self::new(amps)
    }
}

/// Real parameters of the lower-triangular `T` with `ρ = T†T / Tr[T†T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TParams {
    pub n_qubits: usize,
    pub t: Vec<f64>,
}

impl TParams {
    pub fn new(n_qubits: usize, t: Vec<f64>) -> Result<Self> {
        let expected = match n_qubits {
            1 => 4,
            2 => 16,
            n => return Err(Error::UnsupportedDim(1 << n)),
        };
        if t.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: t.len(),
            });
        }
        Ok(Self { n_qubits, t })
    }

    pub fn len_for(n_qubits: usize) -> usize {
        1 << (2 * n_qubits)
    }

    /// Rescaled to unit Euclidean norm (`ρ` is unchanged).
    pub fn normalized(&self) -> Self {
        let norm = self.t.iter().map(|x| x * x).sum::<f64>().sqrt();
        let t = if norm > 0.0 {
            self.t.iter().map(|x| x / norm).collect()
        } else {
            self.t.clone()
        };
        Self {
            n_qubits: self.n_qubits,
            t,
        }
    }
}

/// Fills the lower-triangular `T`: real diagonal from the first `d` entries,
/// then sub-diagonal `(re, im)` pairs row by row.
pub(crate) fn t_matrix(n_qubits: usize, t: &[f64]) -> Operator {
    let d = 1 << n_qubits;
    let mut m = if d == 2 {
        Operator::zeros2()
    } else {
        Operator::zeros4()
    };
    for i in 0..d {
        m[(i, i)] = Complex64::new(t[i], 0.0);
    }
    let mut k = d;
    for i in 1..d {
        for j in 0..i {
            m[(i, j)] = Complex64::new(t[k], t[k + 1]);
            k += 2;
        }
    }
    m
}

/// Unnormalized `T†T` and its trace; the hot path of the likelihood.
pub(crate) fn t_dagger_t(n_qubits: usize, t: &[f64]) -> (Operator, f64) {
    let tm = t_matrix(n_qubits, t);
    let d = tm.dim();
    let mut out = tm;
    let mut tr = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            // T is lower triangular: only rows k ≥ max(i, j) contribute.
            for k in i.max(j)..d {
                acc += tm[(k, i)].conj() * tm[(k, j)];
            }
            out[(i, j)] = acc;
        }
        tr += out[(i, i)].re;
    }
    (out, tr)
}

pub fn density_from_tparams(t: &TParams) -> Result<DensityMatrix> {
    let (m, tr) = t_dagger_t(t.n_qubits, &t.t);
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::Degenerate("T parameters are all zero (zero trace)".into()));
    }
    let mut rho = m.scale_re(1.0 / tr);
    // Exact Hermitian symmetry; the product is Hermitian up to round-off.
    rho = (&rho + &rho.adjoint()).scale_re(0.5);
    DensityMatrix::new(rho)
}

/// Inverse of [`density_from_tparams`]: factors `ρ = T†T` with `T` lower
/// triangular and a non-negative real diagonal. Rank-deficient pivots are set
/// to zero together with the rest of their row.
pub fn tparams_from_density(rho: &DensityMatrix) -> TParams {
    let op = rho.op();
    let d = op.dim();
    let n = rho.n_qubits();
    let zero = Complex64::new(0.0, 0.0);
    let mut tm = [[zero; 4]; 4];
    for j in (0..d).rev() {
        let mut diag = op[(j, j)].re;
        for row in tm.iter().take(d).skip(j + 1) {
            diag -= row[j].norm_sqr();
        }
        if diag <= 1e-14 {
            continue;
        }
        let tjj = diag.sqrt();
        tm[j][j] = Complex64::new(tjj, 0.0);
        for i in 0..j {
            let mut acc = op[(i, j)];
            for row in tm.iter().take(d).skip(j + 1) {
                acc -= row[i].conj() * row[j];
            }
            tm[j][i] = (acc / tjj).conj();
        }
    }
    let mut t = vec![0.0; TParams::len_for(n)];
    for i in 0..d {
        t[i] = tm[i][i].re;
    }
    let mut k = d;
    for i in 1..d {
        for j in 0..i {
            t[k] = tm[i][j].re;
            t[k + 1] = tm[i][j].im;
            k += 2;
        }
    }
    TParams { n_qubits: n, t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::pauli_decompose;

    #[test]
    fn tparams_examples() {
        let rho = density_from_tparams(&TParams::new(1, vec![1., 1., 0., 0.]).unwrap()).unwrap();
        assert!(rho.op().max_abs_diff(&Operator::identity(2).unwrap().scale_re(0.5)) < 1e-15);

        let rho = density_from_tparams(&TParams::new(1, vec![1., 0., 0., 0.]).unwrap()).unwrap();
        let r = Operator::diag(&[Complex64::new(1., 0.), Complex64::new(0., 0.)]).unwrap();
        assert!(rho.op().max_abs_diff(&r) < 1e-15);
    }

    #[test]
    fn tparams_hand_evaluated() {
        // T = [[1, 0], [1, 1]]; T†T = [[2, 1], [1, 1]], trace 3.
        let rho = density_from_tparams(&TParams::new(1, vec![1., 1., 1., 0.]).unwrap()).unwrap();
        let c = |x: f64| Complex64::new(x, 0.0);
        let expected = Operator::from_rows(2, &[c(2. / 3.), c(1. / 3.), c(1. / 3.), c(1. / 3.)]).unwrap();
        assert!(rho.op().max_abs_diff(&expected) < 1e-15);
        assert!((rho.op().trace().re - 1.0).abs() < 1e-15);
        assert!(hermitian_eigenvalues(rho.op())[0] > 0.0);
    }

    #[test]
    fn zero_tparams_is_degenerate() {
        let err = density_from_tparams(&TParams::new(2, vec![0.0; 16]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        assert!(TParams::new(1, vec![0.0; 16]).is_err());
    }

    #[test]
    fn factorization_round_trip() {
        let t = TParams::new(2, (0..16).map(|i| 0.3 + 0.1 * (i as f64).sin()).collect()).unwrap();
        let rho = density_from_tparams(&t).unwrap();
        let back = density_from_tparams(&tparams_from_density(&rho)).unwrap();
        assert!(rho.op().max_abs_diff(back.op()) < 1e-13);
    }

    #[test]
    fn factorization_of_pure_states() {
        let rho = DensityMatrix::from_pure(&PureState::hh_vv(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
        )
        .unwrap());
        let back = density_from_tparams(&tparams_from_density(&rho)).unwrap();
        assert!(rho.op().max_abs_diff(back.op()) < 1e-12);
    }

    #[test]
    fn polarization_dictionary() {
        let h = DensityMatrix::from_pure(&PureState::new(basis::h().to_vec()).unwrap());
        let l = pauli_decompose(h.op()).unwrap().lambda;
        assert!((l[1] - 1.0).abs() < 1e-15);
        let v = DensityMatrix::from_pure(&PureState::new(basis::v().to_vec()).unwrap());
        let l = pauli_decompose(v.op()).unwrap().lambda;
        assert!((l[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let not_unit = Operator::diag(&[c(1.0), c(1.0)]).unwrap();
        assert!(matches!(DensityMatrix::new(not_unit), Err(Error::InvalidTrace(_))));
        let negative = Operator::diag(&[c(1.5), c(-0.5)]).unwrap();
        assert!(matches!(DensityMatrix::new(negative), Err(Error::NotPositive(_))));
        let skew = Operator::from_rows(2, &[c(0.5), c(0.2), c(0.0), c(0.5)]).unwrap();
        assert!(matches!(DensityMatrix::new(skew), Err(Error::NotHermitian(_))));
        assert!(PureState::new(vec![c(1.0), c(1.0)]).is_err());
    }

    #[test]
    fn projection_clamps_negative_eigenvalues() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let p = DensityMatrix::project_physical(&Operator::diag(&[c(1.2), c(-0.2)]).unwrap()).unwrap();
        assert!(p.op().max_abs_diff(&Operator::diag(&[c(1.0), c(0.0)]).unwrap()) < 1e-14);
    }
}
