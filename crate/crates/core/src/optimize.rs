//! Derivative-free Nelder-Mead minimization with restarts.
//!
//! Uses the dimension-adaptive coefficients of Gao and Han (2012), which keep
//! the simplex from collapsing in the 16-18 dimensional two-qubit problems.

use alloc::vec;
use alloc::vec::Vec;


#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub tolerance: f64,
    /// Maximum restarts from the best vertex after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_evals: 50_000,
            tolerance: 1e-9,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with initial simplex edges `steps`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], steps: &[f64], cfg: &NelderMeadConfig) -> Minimum {
    assert_eq!(x0.len(), steps.len());
    let mut evals = 0usize;
    let mut best = x0.to_vec();
    let mut best_val = {
        evals += 1;
        f(x0)
    };
    let mut scale = 1.0;
    let mut converged = false;
    for round in 0..=cfg.restarts {
        let budget = cfg.max_evals.saturating_sub(evals);
        if budget == 0 {
            break;
        }
        let step: Vec<f64> = steps.iter().map(|s| s * scale).collect();
        let (x, v, used, ok) = run(&mut f, &best, best_val, &step, cfg.tolerance, budget);
        evals += used;
        let improvement = best_val - v;
        if v <= best_val {
            best = x;
            best_val = v;
        }
        converged = ok;
        if !ok || (round > 0 && improvement <= cfg.tolerance) {
            break;
        }
        scale *= 0.1;
    }
    Minimum {
        x: best,
        value: best_val,
        evals,
        converged,
    }
}

fn run(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    f0: f64,
    steps: &[f64],
    tol: f64,
    budget: usize,
) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    values.push(f0);
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if steps[i] != 0.0 { steps[i] } else { 1e-3 };
        values.push(eval(&x, &mut evals));
        simplex.push(x);
    }
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (ib, iw, isw) = (order[0], order[n], order[n - 1]);
        if (values[iw] - values[ib]).abs() <= tol {
            return (simplex[ib].clone(), values[ib], evals, true);
        }
        if evals >= budget {
            return (simplex[ib].clone(), values[ib], evals, false);
        }
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[k]) {
                *c += x / nf;
            }
        }
        let worst = simplex[iw].clone();
        for i in 0..n {
            trial[i] = centroid[i] + alpha * (centroid[i] - worst[i]);
        }
        let fr = eval(&trial, &mut evals);
        if fr < values[ib] {
            for i in 0..n {
                trial2[i] = centroid[i] + beta * (trial[i] - centroid[i]);
            }
            let fe = eval(&trial2, &mut evals);
            if fe < fr {
                simplex[iw].copy_from_slice(&trial2);
                values[iw] = fe;
            } else {
                simplex[iw].copy_from_slice(&trial);
                values[iw] = fr;
            }
            continue;
        }
        if fr < values[isw] {
            simplex[iw].copy_from_slice(&trial);
            values[iw] = fr;
            continue;
        }
        // Contraction, outside or inside.
        let outside = fr < values[iw];
        for i in 0..n {
            trial2[i] = if outside {
                centroid[i] + gamma * (trial[i] - centroid[i])
            } else {
                centroid[i] - gamma * (centroid[i] - worst[i])
            };
        }
        let fc = eval(&trial2, &mut evals);
        if (outside && fc <= fr) || (!outside && fc < values[iw]) {
            simplex[iw].copy_from_slice(&trial2);
            values[iw] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        let xb = simplex[ib].clone();
        for &k in &order[1..] {
            for (x, b) in simplex[k].iter_mut().zip(&xb) {
                *x = b + delta * (*x - b);
            }
            values[k] = eval(&simplex[k], &mut evals);
        }
    }
}

/// Central finite-difference gradient.
pub fn numerical_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            let hi = h * orig.abs().max(1.0);
            xp[i] = orig + hi;
            let fp = f(&xp);
            xp[i] = orig - hi;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(rosen, &[-1.2, 1.0], &[0.5, 0.5], &NelderMeadConfig {
            tolerance: 1e-14,
            ..Default::default()
        });
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn minimizes_high_dimensional_quadratic() {
        let n = 18;
        let quad = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2)).sum::<f64>();
        let m = nelder_mead(quad, &vec![0.0; n], &vec![0.3; n], &NelderMeadConfig {
            tolerance: 1e-16,
            max_evals: 200_000,
            restarts: 6,
        });
        assert!(m.value < 1e-8, "{}", m.value);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let quad = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let m = nelder_mead(quad, &[3.0; 6], &[1.0; 6], &NelderMeadConfig {
            max_evals: 20,
            tolerance: 1e-30,
            restarts: 0,
        });
        assert!(!m.converged);
        assert!(m.evals <= 30);
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = numerical_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0], 1e-6);
        assert!((g[0] - 4.0).abs() < 1e-6 && (g[1] - 3.0).abs() < 1e-6);
    }
}
