//! State-comparison and entanglement measures.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, psd_sqrt};
use crate::operator::{tensor_product, Operator};
use crate::optimize::{nelder_mead, NelderMeadConfig};
use crate::pauli::{pauli, Pauli};
use crate::state::DensityMatrix;

/// Eigenvalues below this are eigensolver noise; their square roots would
/// otherwise contribute ~1e-8 to fidelity and concurrence sums.
const SPECTRAL_FLOOR: f64 = 1e-14;

fn sqrt_floor(x: f64) -> f64 {
    if x > SPECTRAL_FLOOR {
        x.sqrt()
    } else {
        0.0
    }
}

fn det2(op: &Operator) -> f64 {
    (op[(0, 0)] * op[(1, 1)] - op[(0, 1)] * op[(1, 0)]).re.max(0.0)
}

/// Uhlmann fidelity `F = (Tr √(√a b √a))²`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let f = match a.dim() {
        // For qubits F = Tr[ab] + 2√(det a · det b).
        2 => a.op().trace_product(b.op()).re + 2.0 * (det2(a.op()) * det2(b.op())).sqrt(),
        // Near the boundary F is only √ε-continuous, so round-off makes the
        // two orderings differ by ~1e-9; averaging restores symmetry.
        _ => 0.5 * (fidelity_with_sqrt(&psd_sqrt(a.op()), b.op()) + fidelity_with_sqrt(&psd_sqrt(b.op()), a.op())),
    };
    Ok(f.clamp(0.0, 1.0))
}

fn fidelity_with_sqrt(sqrt_a: &Operator, b: &Operator) -> f64 {
    let m = &(sqrt_a * b) * sqrt_a;
    let s: f64 = hermitian_eigenvalues(&m).into_iter().map(sqrt_floor).sum();
    (s * s).clamp(0.0, 1.0)
}

/// Result of maximizing fidelity over local `σz` rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct ZAlignedFidelity {
    pub fidelity: f64,
    /// Maximizing angle per qubit, in `[0, 2π)`.
    pub z_angles: Vec<f64>,
}

/// `R b R†` with `R = ⊗_k exp(−i θ_k σz / 2)`.
pub fn rotate_z(b: &Operator, angles: &[f64]) -> Operator {
    let d = b.dim();
    // σz eigenvalue sum weighted by angle for basis index j.
    let phase = |j: usize| -> f64 {
        match d {
            2 => angles[0] * if j == 0 { 1.0 } else { -1.0 },
            _ => {
                angles[0] * if j < 2 { 1.0 } else { -1.0 }
                    + angles[1] * if j.is_multiple_of(2) { 1.0 } else { -1.0 }
            }
        }
    };
    let mut out = *b;
    for j in 0..d {
        for k in 0..d {
            out[(j, k)] = b[(j, k)] * Complex64::from_polar(1.0, -(phase(j) - phase(k)) / 2.0);
        }
    }
    out
}

const Z_GRID: usize = 360;
const COARSE_2Q_GRID: usize = 36;
/// Coarse cells refined by the simplex search.
const COARSE_STARTS: usize = 3;

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..60 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Best value of a periodic scalar function: 360-point scan then
/// golden-section refinement around the best grid point.
fn periodic_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let step = TAU / Z_GRID as f64;
    let (mut best_x, mut best_f) = (0.0, f(0.0));
    for k in 1..Z_GRID {
        let x = k as f64 * step;
        let v = f(x);
        if v > best_f {
            best_x = x;
            best_f = v;
        }
    }
    let (x, v) = golden_max(&f, best_x - step, best_x + step);
    if v > best_f {
        (rem_tau(x), v)
    } else {
        (best_x, best_f)
    }
}

/// Maximum of `fidelity(a, R b R†)` over local `σz` rotations `R`.
pub fn fidelity_up_to_z(a: &DensityMatrix, b: &DensityMatrix, n_qubits: usize) -> Result<ZAlignedFidelity> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if a.n_qubits() != n_qubits {
        return Err(Error::DimensionMismatch {
            left: 1 << n_qubits,
            right: a.dim(),
        });
    }
    let base = fidelity(a, b)?;
    let (angles, f) = if n_qubits == 1 {
        let da_db = (det2(a.op()) * det2(b.op())).sqrt();
        let obj = |th: f64| a.op().trace_product(&rotate_z(b.op(), &[th])).re + 2.0 * da_db;
        let (th, f) = periodic_max(obj);
        (alloc::vec![th], f)
    } else {
        let sa = psd_sqrt(a.op());
        let obj = |t1: f64, t2: f64| fidelity_with_sqrt(&sa, &rotate_z(b.op(), &[t1, t2]));
        // Coarse 2D scan to pick basins, then a simplex search from the
        // best few cells.
        let coarse = TAU / COARSE_2Q_GRID as f64;
        let mut cells: Vec<(f64, f64, f64)> = Vec::with_capacity(COARSE_2Q_GRID * COARSE_2Q_GRID);
        for i in 0..COARSE_2Q_GRID {
            for j in 0..COARSE_2Q_GRID {
                let (x, y) = (i as f64 * coarse, j as f64 * coarse);
                cells.push((obj(x, y), x, y));
            }
        }
        cells.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (mut best, mut t1, mut t2) = cells[0];
        for &(_, x, y) in cells.iter().take(COARSE_STARTS) {
            let m = nelder_mead(
                |v| -obj(v[0], v[1]),
                &[x, y],
                &[coarse / 2.0, coarse / 2.0],
                &NelderMeadConfig {
                    max_evals: 1500,
                    tolerance: 1e-15,
                    restarts: 2,
                },
            );
            if -m.value > best {
                best = -m.value;
                t1 = rem_tau(m.x[0]);
                t2 = rem_tau(m.x[1]);
            }
        }
        (alloc::vec![t1, t2], best)
    };
    if f >= base {
        Ok(ZAlignedFidelity {
            fidelity: f.clamp(0.0, 1.0),
            z_angles: angles,
        })
    } else {
        Ok(ZAlignedFidelity {
            fidelity: base,
            z_angles: alloc::vec![0.0; n_qubits],
        })
    }
}

/// Wootters concurrence of a two-qubit state.
///
/// `C = max(0, λ₁ − λ₂ − λ₃ − λ₄)` with `λ_i` the decreasing square roots of
/// the eigenvalues of `ρ ρ̃`, `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`. The `λ_i²` are
/// obtained as eigenvalues of the Hermitian `√ρ ρ̃ √ρ`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: rho.dim(),
        });
    }
    let y = pauli(Pauli::Y);
    let yy = tensor_product(&y, &y)?;
    let tilde = &(&yy * &rho.op().conj()) * &yy;
    let s = psd_sqrt(rho.op());
    let m = &(&s * &tilde) * &s;
    let mut lambdas: Vec<f64> = hermitian_eigenvalues(&m).into_iter().map(sqrt_floor).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}

/// `x mod 2π` in `[0, 2π)`.
pub(crate) fn rem_tau(x: f64) -> f64 {
    let r = x % TAU;
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = rem_tau(x + PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}
