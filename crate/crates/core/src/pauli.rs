//! Pauli operators and the Pauli-basis expansion of 1- and 2-qubit operators.
//!
//! The computational basis is `|R⟩ = (1, 0)`, `|L⟩ = (0, 1)`; `σz` is diagonal
//! in it. Two-qubit basis elements `Σ_i = σ_a ⊗ σ_b` use `i = 4a + b`, so the
//! first qubit is the most significant digit.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{tensor_product, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

pub fn pauli(p: Pauli) -> Operator {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let e = match p {
        Pauli::I => [one, o, o, one],
        Pauli::X => [o, one, one, o],
        Pauli::Y => [o, -i, i, o],
        Pauli::Z => [one, o, o, -one],
    };
    Operator::from_rows(2, &e).expect("2x2")
}

/// The `index`-th element of the `n`-qubit product Pauli basis.
pub fn pauli_basis_element(n_qubits: usize, index: usize) -> Result<Operator> {
    match n_qubits {
        1 if index < 4 => Ok(pauli(Pauli::ALL[index])),
        2 if index < 16 => tensor_product(&pauli(Pauli::ALL[index / 4]), &pauli(Pauli::ALL[index % 4])),
        1 | 2 => Err(Error::LengthMismatch {
            expected: 1 << (2 * n_qubits),
            got: index + 1,
        }),
        n => Err(Error::UnsupportedDim(1 << n)),
    }
}

pub fn n_qubits_for_dim(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        4 => Ok(2),
        d => Err(Error::UnsupportedDim(d)),
    }
}

/// Expansion coefficients `λ_i` of `ρ = 2⁻ⁿ Σ_i λ_i Σ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliCoefficients {
    pub n_qubits: usize,
    pub lambda: Vec<f64>,
}

impl PauliCoefficients {
    pub fn new(n_qubits: usize, lambda: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(Error::UnsupportedDim(1 << n_qubits));
        }
        let expected = 1 << (2 * n_qubits);
        if lambda.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: lambda.len(),
            });
        }
        Ok(Self { n_qubits, lambda })
    }
}

pub fn pauli_compose(coeffs: &PauliCoefficients) -> Result<Operator> {
    let n = coeffs.n_qubits;
    let dim = 1 << n;
    let mut rho = Operator::zeros(dim)?;
    let norm = 1.0 / dim as f64;
    for (i, &l) in coeffs.lambda.iter().enumerate() {
        if l != 0.0 {
            rho = &rho + &pauli_basis_element(n, i)?.scale_re(l * norm);
        }
    }
    Ok(rho)
}

/// `λ_i = Tr[ρ Σ_i]`.
pub fn pauli_decompose(rho: &Operator) -> Result<PauliCoefficients> {
    let n = n_qubits_for_dim(rho.dim())?;
    let lambda = (0..(1 << (2 * n)))
        .map(|i| pauli_basis_element(n, i).map(|s| rho.trace_product(&s).re))
        .collect::<Result<Vec<_>>>()?;
    PauliCoefficients::new(n, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn compose_maximally_mixed() {
        let rho = pauli_compose(&PauliCoefficients::new(1, vec![1., 0., 0., 0.]).unwrap()).unwrap();
        assert!(rho.max_abs_diff(&Operator::identity(2).unwrap().scale_re(0.5)) < 1e-15);
    }

    #[test]
    fn compose_z_eigenprojector() {
        let rho = pauli_compose(&PauliCoefficients::new(1, vec![1., 0., 0., 1.]).unwrap()).unwrap();
        assert!(rho.max_abs_diff(&Operator::diag(&[c(1.), c(0.)]).unwrap()) < 1e-15);
    }

    #[test]
    fn compose_plus_x_projector() {
        // (σ0 + σx)/2 = [[1/2, 1/2], [1/2, 1/2]]
        let rho = pauli_compose(&PauliCoefficients::new(1, vec![1., 1., 0., 0.]).unwrap()).unwrap();
        let expected = Operator::from_rows(2, &[c(0.5), c(0.5), c(0.5), c(0.5)]).unwrap();
        assert!(rho.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn decompose_known_states() {
        let r = Operator::diag(&[c(1.), c(0.)]).unwrap();
        assert_eq!(pauli_decompose(&r).unwrap().lambda, vec![1., 0., 0., 1.]);
        let mixed = Operator::identity(2).unwrap().scale_re(0.5);
        assert_eq!(pauli_decompose(&mixed).unwrap().lambda, vec![1., 0., 0., 0.]);
        // |H⟩ = (|R⟩ + |L⟩)/√2: every entry of |H⟩⟨H| is 1/2.
        let h = Operator::from_rows(2, &[c(0.5); 4]).unwrap();
        let l = pauli_decompose(&h).unwrap().lambda;
        for (a, b) in l.iter().zip([1., 1., 0., 0.]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_qubit_basis_ordering() {
        let zz = pauli_basis_element(2, 15).unwrap();
        assert!((zz[(0, 0)].re - 1.0).abs() < 1e-15 && (zz[(1, 1)].re + 1.0).abs() < 1e-15);
        // index 4 = σx ⊗ σ0 acts on the first (most significant) qubit.
        let xi = pauli_basis_element(2, 4).unwrap();
        assert_eq!(xi[(0, 2)].re, 1.0);
        assert_eq!(xi[(0, 1)].re, 0.0);
    }

    #[test]
    fn length_errors() {
        assert!(PauliCoefficients::new(1, vec![1.0; 5]).is_err());
        assert!(PauliCoefficients::new(3, vec![1.0; 64]).is_err());
        assert!(pauli_decompose(&Operator::zeros(2).unwrap()).is_ok());
    }
}
