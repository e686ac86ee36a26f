//! Dense complex square matrices of dimension 2 or 4.
//!
//! Unitaries, projectors and density matrices all share this representation.
//! Storage is a fixed row-major array so hot loops in the likelihood never
//! allocate.

use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    data: [Complex64; 16],
}

fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 => Ok(()),
        d => Err(Error::UnsupportedDim(d)),
    }
}

impl Operator {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: [ZERO; 16],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut op = Self::zeros(dim)?;
        for i in 0..dim {
            op[(i, i)] = ONE;
        }
        Ok(op)
    }

    /// Builds an operator from `dim²` row-major entries.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        let mut op = Self::zeros(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        op.data[..dim * dim].copy_from_slice(entries);
        Ok(op)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut op = Self::zeros(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                op[(i, j)] = f(i, j);
            }
        }
        Ok(op)
    }

    pub fn diag(entries: &[Complex64]) -> Result<Self> {
        let mut op = Self::zeros(entries.len())?;
        for (i, &z) in entries.iter().enumerate() {
            op[(i, i)] = z;
        }
        Ok(op)
    }

    /// Outer product `|v⟩⟨v|`.
    pub fn projector(v: &[Complex64]) -> Result<Self> {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub(crate) fn zeros2() -> Self {
        Self {
            dim: 2,
            data: [ZERO; 16],
        }
    }

    pub(crate) fn zeros4() -> Self {
        Self {
            dim: 4,
            data: [ZERO; 16],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries, `dim²` long.
    pub fn entries(&self) -> &[Complex64] {
        &self.data[..self.dim * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut out = *self;
        for z in out.data.iter_mut() {
            *z = z.conj();
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        for z in out.data.iter_mut() {
            *z *= s;
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `A B A†`.
    pub fn conjugate_by(&self, a: &Operator) -> Self {
        &(a * self) * &a.adjoint()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self − self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `Tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> Complex64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> Complex64 {
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                row += self[(i, j)] * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self[(i, j)] * v[j];
            }
        }
        out
    }
}

/// Kronecker product of two single-qubit operators.
pub fn tensor_product(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.dim != 2 {
        return Err(Error::UnsupportedDim(a.dim));
    }
    if b.dim != 2 {
        return Err(Error::UnsupportedDim(b.dim));
    }
    let mut out = Operator::zeros4();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

impl Index<(usize, usize)> for Operator {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let n = self.dim;
        let mut out = *self;
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self[(i, k)] * rhs[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let mut out = *self;
        for (z, w) in out.data.iter_mut().zip(rhs.data.iter()) {
            *z += w;
        }
        out
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let mut out = *self;
        for (z, w) in out.data.iter_mut().zip(rhs.data.iter()) {
            *z -= w;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{pauli, Pauli};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_kron_identity() {
        let i2 = Operator::identity(2).unwrap();
        let k = tensor_product(&i2, &i2).unwrap();
        assert_eq!(k, Operator::identity(4).unwrap());
    }

    #[test]
    fn z_kron_z_is_parity_diagonal() {
        let z = pauli(Pauli::Z);
        let k = tensor_product(&z, &z).unwrap();
        let expected = Operator::diag(&[c(1., 0.), c(-1., 0.), c(-1., 0.), c(1., 0.)]).unwrap();
        assert!(k.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn x_kron_y_by_hand() {
        // σx⊗σy = [[0, σy], [σy, 0]] with σy = [[0, -i], [i, 0]].
        let k = tensor_product(&pauli(Pauli::X), &pauli(Pauli::Y)).unwrap();
        let o = c(0., 0.);
        let expected = Operator::from_rows(
            4,
            &[
                o, o, o, c(0., -1.),
                o, o, c(0., 1.), o,
                o, c(0., -1.), o, o,
                c(0., 1.), o, o, o,
            ],
        )
        .unwrap();
        assert!(k.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn kron_mixed_product_rule() {
        let a = pauli(Pauli::X);
        let b = pauli(Pauli::Y);
        let cc = pauli(Pauli::Z);
        let d = Operator::from_rows(2, &[c(0.3, 0.1), c(-1.0, 2.0), c(0.5, 0.0), c(0.0, -0.7)]).unwrap();
        let lhs = &tensor_product(&a, &b).unwrap() * &tensor_product(&cc, &d).unwrap();
        let rhs = tensor_product(&(&a * &cc), &(&b * &d)).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-14);
    }

    #[test]
    fn rejects_unsupported_dims() {
        assert_eq!(Operator::zeros(3), Err(Error::UnsupportedDim(3)));
        let i4 = Operator::identity(4).unwrap();
        let i2 = Operator::identity(2).unwrap();
        assert!(tensor_product(&i4, &i2).is_err());
        assert!(Operator::from_rows(2, &[c(1., 0.)]).is_err());
    }
}
