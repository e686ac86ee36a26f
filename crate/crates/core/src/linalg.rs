//! Small dense eigen and least-squares kernels.
//!
//! Hermitian problems are solved through the real symmetric embedding
//! `A + iB ↦ [[A, −B], [B, A]]`, whose spectrum is that of the Hermitian
//! matrix with every eigenvalue doubled. Matrix functions commute with the
//! embedding, so `f(H)` is read back from the blocks of `f(embedding)`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::operator::Operator;

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigen-decomposition of a real symmetric `n×n` matrix
/// (row-major). Returns eigenvalues and the column-eigenvector matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                // Below this the rotation cannot change any entry that matters.
                if apq.abs() <= 1e-18 * scale {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let vals = (0..n).map(|i| m[i * n + i]).collect();
    (vals, v)
}

fn embed(h: &Operator) -> (Vec<f64>, usize) {
    let n = h.dim();
    let m = 2 * n;
    let mut e = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            // Symmetrize so tiny anti-Hermitian noise cannot leak in.
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            e[i * m + j] = z.re;
            e[(i + n) * m + (j + n)] = z.re;
            e[(i + n) * m + j] = z.im;
            e[i * m + (j + n)] = -z.im;
        }
    }
    (e, m)
}

/// Eigenvalues of a Hermitian operator in ascending order.
pub fn hermitian_eigenvalues(h: &Operator) -> Vec<f64> {
    let (e, m) = embed(h);
    let (mut vals, _) = symmetric_eigen(&e, m);
    vals.sort_by(|a, b| a.total_cmp(b));
    // Each eigenvalue appears twice in the embedding.
    vals.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Applies a real function to the spectrum of a Hermitian operator.
pub fn hermitian_map(h: &Operator, f: impl Fn(f64) -> f64) -> Operator {
    let n = h.dim();
    let (e, m) = embed(h);
    let (vals, vecs) = symmetric_eigen(&e, m);
    let fv: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
    let mut out = *h;
    for i in 0..n {
        for j in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..m {
                let w = fv[k] * vecs[j * m + k];
                re += vecs[i * m + k] * w;
                im += vecs[(i + n) * m + k] * w;
            }
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    out
}

/// Principal square root of a positive semidefinite Hermitian operator;
/// negative eigenvalues from round-off are treated as zero.
pub fn psd_sqrt(h: &Operator) -> Operator {
    hermitian_map(h, |x| if x > 0.0 { x.sqrt() } else { 0.0 })
}

/// Singular values of a real `rows×cols` matrix (row-major), descending,
/// via one-sided Jacobi.
pub fn singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols);
    // Work on columns.
    let mut u: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i * cols + j]).collect())
        .collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = u[p].iter().map(|x| x * x).sum();
                let beta: f64 = u[q].iter().map(|x| x * x).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = u.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let xp = *x;
                    let yq = *y;
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = u
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Least-squares solution of `A x ≈ b` for a full-column-rank real
/// `rows×cols` matrix (row-major), by Householder QR.
pub fn least_squares(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Vec<f64> {
    assert!(rows >= cols);
    assert_eq!(a.len(), rows * cols);
    assert_eq!(b.len(), rows);
    let mut r = a.to_vec();
    let mut y = b.to_vec();
    for k in 0..cols {
        let norm: f64 = (k..rows).map(|i| r[i * cols + k].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[k * cols + k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..rows).map(|i| r[i * cols + k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..cols {
            let dot: f64 = (k..rows).map(|i| v[i - k] * r[i * cols + j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                r[i * cols + j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..rows).map(|i| v[i - k] * y[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..rows {
            y[i] -= f * v[i - k];
        }
    }
    let mut x = vec![0.0; cols];
    for k in (0..cols).rev() {
        let s: f64 = ((k + 1)..cols).map(|j| r[k * cols + j] * x[j]).sum();
        x[k] = (y[k] - s) / r[k * cols + k];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn symmetric_eigen_reconstructs() {
        let a = [4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 1.0];
        let (vals, vecs) = symmetric_eigen(&a, 3);
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| vecs[i * 3 + k] * vals[k] * vecs[j * 3 + k]).sum();
                assert!((r - a[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_spectrum_of_sigma_y() {
        let y = Operator::from_rows(2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap();
        let ev = hermitian_eigenvalues(&y);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let h = Operator::from_rows(
            2,
            &[c(0.7, 0.), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.)],
        )
        .unwrap();
        let s = psd_sqrt(&h);
        assert!((&s * &s).max_abs_diff(&h) < 1e-13);
        assert!(s.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // diag(3, 2) padded with a zero row.
        let a = [3.0, 0.0, 0.0, 2.0, 0.0, 0.0];
        let sv = singular_values(&a, 3, 2);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
        let rank1 = [1.0, 2.0, 2.0, 4.0];
        let sv = singular_values(&rank1, 2, 2);
        assert!(sv[1].abs() < 1e-14);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let a = [1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0];
        let x_true = [0.5, -1.5];
        let b: Vec<f64> = (0..4).map(|i| a[2 * i] * x_true[0] + a[2 * i + 1] * x_true[1]).collect();
        let x = least_squares(&a, 4, 2, &b);
        assert!((x[0] - 0.5).abs() < 1e-13 && (x[1] + 1.5).abs() < 1e-13);
    }
}
