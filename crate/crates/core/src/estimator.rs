//! Likelihood, linear inversion and maximum-likelihood reconstruction.
//!
//! The fitted model is `n̄_j = N_g Tr[ρ(t) μ_j(α)]` with `ρ(t) = T†T/Tr[T†T]`
//! and `N_g` the total count over all ports of the unitary `j` belongs to.
//! Residuals are weighted by `1/(2 max(n_j, σ_floor))`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::{PI, TAU};
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::measurement::{design_matrix, rotation_unitary, Port, RotationSpec, SettingSet};
use crate::metrics::{rem_tau, wrap_angle};
use crate::optimize::{nelder_mead, numerical_gradient, NelderMeadConfig};
use crate::pauli::{pauli_compose, PauliCoefficients};
use crate::sampling::{Domain, KeyedRng};
use crate::simulator::CountRecord;
use crate::state::{density_from_tparams, t_matrix, tparams_from_density, DensityMatrix, TParams};

pub const DEFAULT_SIGMA_FLOOR: f64 = 1.0;
/// Weight `λ_p` of the purity penalty `λ_p max(0, p_min − Tr ρ²)²`.
pub const PURITY_WEIGHT: f64 = 1e6;
/// Number of best starts re-run at a tighter tolerance.
const POLISH_CANDIDATES: usize = 3;
const T_STEP: f64 = 0.1;
const ALPHA_STEP: f64 = 0.1;
const PERTURBATION: f64 = 0.3;

/// Per-arm rotation cache: each setting is a product of one of a few
/// distinct rotations per qubit, so vectors are rebuilt from those.
#[derive(Debug, Clone, PartialEq)]
struct Kernel {
    n_qubits: usize,
    specs: Vec<Vec<RotationSpec>>,
    /// `(spec index, port index)` per qubit for every setting.
    index: Vec<[(usize, usize); 2]>,
}

impl Kernel {
    fn new(set: &SettingSet) -> Self {
        let n = set.n_qubits;
        let mut specs: Vec<Vec<RotationSpec>> = vec![Vec::new(); n];
        let mut index = Vec::with_capacity(set.len());
        for s in &set.settings {
            let mut idx = [(0, 0); 2];
            for q in 0..n {
                let spec = s.per_qubit[q];
                let k = match specs[q].iter().position(|x| *x == spec) {
                    Some(k) => k,
                    None => {
                        specs[q].push(spec);
                        specs[q].len() - 1
                    }
                };
                idx[q] = (k, if s.ports[q] == Port::Primary { 0 } else { 1 });
            }
            index.push(idx);
        }
        Self { n_qubits: n, specs, index }
    }

    /// `U†|R⟩` and `U†|L⟩` for every distinct rotation of every arm.
    fn factors(&self, alphas: &[f64]) -> Vec<Vec<[[Complex64; 2]; 2]>> {
        self.specs
            .iter()
            .enumerate()
            .map(|(q, specs)| {
                let alpha = if alphas.is_empty() { 0.0 } else { alphas[q.min(alphas.len() - 1)] };
                specs
                    .iter()
                    .map(|spec| {
                        let u = rotation_unitary(spec, alpha);
                        // Columns of U† are the conjugated rows of U.
                        [
                            [u[(0, 0)].conj(), u[(0, 1)].conj()],
                            [u[(1, 0)].conj(), u[(1, 1)].conj()],
                        ]
                    })
                    .collect()
            })
            .collect()
    }

    fn vector(&self, factors: &[Vec<[[Complex64; 2]; 2]>], j: usize) -> [Complex64; 4] {
        let zero = Complex64::new(0.0, 0.0);
        let [(s0, p0), (s1, p1)] = self.index[j];
        let a = factors[0][s0][p0];
        if self.n_qubits == 1 {
            return [a[0], a[1], zero, zero];
        }
        let b = factors[1][s1][p1];
        [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    }
}

/// Observed counts bound to a setting set, with per-unitary normalizations.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodModel {
    set: SettingSet,
    records: Vec<CountRecord>,
    observed: Vec<f64>,
    /// `N_g` for every setting, repeated across its unitary group.
    scale: Vec<f64>,
    group_norms: Vec<f64>,
    weights: Vec<f64>,
    sigma_floor: f64,
    kernel: Kernel,
}

impl LikelihoodModel {
    /// Model on the recorded counts.
    pub fn new(set: SettingSet, records: &[CountRecord]) -> Result<Self> {
        Self::build(set, records, false, DEFAULT_SIGMA_FLOOR)
    }

    /// Model on the noise-free `expected` field of simulated records.
    pub fn noiseless(set: SettingSet, records: &[CountRecord]) -> Result<Self> {
        Self::build(set, records, true, DEFAULT_SIGMA_FLOOR)
    }

    pub fn with_sigma_floor(mut self, sigma_floor: f64) -> Result<Self> {
        check_floor(sigma_floor)?;
        self.sigma_floor = sigma_floor;
        self.refresh();
        Ok(self)
    }

    fn build(set: SettingSet, records: &[CountRecord], use_expected: bool, sigma_floor: f64) -> Result<Self> {
        check_floor(sigma_floor)?;
        let mut slots: Vec<Option<CountRecord>> = vec![None; set.len()];
        for r in records {
            let j = set
                .index_of(&r.setting_id)
                .ok_or_else(|| Error::RecordMismatch(format!("unknown setting {}", r.setting_id)))?;
            if slots[j].is_some() {
                return Err(Error::RecordMismatch(format!("duplicate record for {}", r.setting_id)));
            }
            slots[j] = Some(r.clone());
        }
        let mut ordered = Vec::with_capacity(set.len());
        for (j, slot) in slots.into_iter().enumerate() {
            ordered.push(slot.ok_or_else(|| {
                Error::RecordMismatch(format!("no record for setting {}", set.settings[j].id))
            })?);
        }
        let observed = ordered
            .iter()
            .map(|r| {
                if use_expected {
                    r.expected.ok_or_else(|| {
                        Error::RecordMismatch(format!("record {} has no expected value", r.setting_id))
                    })
                } else {
                    Ok(r.count as f64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self {
            kernel: Kernel::new(&set),
            set,
            records: ordered,
            observed,
            scale: Vec::new(),
            group_norms: Vec::new(),
            weights: Vec::new(),
            sigma_floor,
        };
        model.check_groups()?;
        model.refresh();
        Ok(model)
    }

    fn check_groups(&self) -> Result<()> {
        let ports_needed = 1 << self.set.n_qubits;
        for g in self.set.unitary_groups() {
            let mut ports: Vec<&Vec<Port>> = g.iter().map(|&j| &self.set.settings[j].ports).collect();
            ports.sort();
            ports.dedup();
            if ports.len() != ports_needed {
                return Err(Error::RecordMismatch(format!(
                    "unitary of {} lacks complementary ports; its normalization is unknown",
                    self.set.settings[g[0]].id
                )));
            }
        }
        Ok(())
    }

    fn refresh(&mut self) {
        self.scale = vec![0.0; self.set.len()];
        self.group_norms.clear();
        for g in self.set.unitary_groups() {
            let n: f64 = g.iter().map(|&j| self.observed[j]).sum();
            for &j in &g {
                self.scale[j] = n;
            }
            self.group_norms.push(n);
        }
        let floor = self.sigma_floor;
        self.weights = self.observed.iter().map(|&n| 1.0 / (2.0 * n.max(floor))).collect();
    }

    pub fn set(&self) -> &SettingSet {
        &self.set
    }

    /// Records in setting order.
    pub fn records(&self) -> &[CountRecord] {
        &self.records
    }

    /// Fitted observations `n_j` in setting order.
    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// `N_g` per unitary group, in [`SettingSet::unitary_groups`] order.
    pub fn normalizations(&self) -> &[f64] {
        &self.group_norms
    }

    pub fn sigma_floor(&self) -> f64 {
        self.sigma_floor
    }

    pub fn n_qubits(&self) -> usize {
        self.set.n_qubits
    }

    fn n_params(&self) -> usize {
        TParams::len_for(self.set.n_qubits)
    }

    /// `L` at a raw parameter slice; `∞` when `t` is all zero.
    fn eval(&self, t: &[f64], alphas: &[f64]) -> f64 {
        let tr: f64 = t.iter().map(|x| x * x).sum();
        if !(tr > 0.0) {
            return f64::INFINITY;
        }
        let tm = t_matrix(self.set.n_qubits, t);
        let d = tm.dim();
        let factors = self.kernel.factors(alphas);
        let mut total = 0.0;
        for j in 0..self.set.len() {
            let u = self.kernel.vector(&factors, j);
            let mut norm = 0.0;
            for i in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..=i {
                    acc += tm[(i, k)] * u[k];
                }
                norm += acc.norm_sqr();
            }
            let r = self.observed[j] - self.scale[j] * norm / tr;
            total += r * r * self.weights[j];
        }
        total
    }
}

fn check_floor(sigma_floor: f64) -> Result<()> {
    if sigma_floor > 0.0 && sigma_floor.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("sigma_floor must be positive, got {sigma_floor}")))
    }
}

/// `L = Σ_j (n_j − N_j Tr[ρ(t) μ_j(α)])² / (2 max(n_j, σ_floor))`.
pub fn likelihood(t: &TParams, alphas: &[f64], model: &LikelihoodModel) -> Result<f64> {
    check_params(t, alphas, model)?;
    let l = model.eval(&t.t, alphas);
    if l.is_finite() {
        Ok(l)
    } else {
        Err(Error::Degenerate("T parameters are all zero (zero trace)".into()))
    }
}

fn check_params(t: &TParams, alphas: &[f64], model: &LikelihoodModel) -> Result<()> {
    if t.n_qubits != model.n_qubits() {
        return Err(Error::DimensionMismatch {
            left: 1 << model.n_qubits(),
            right: 1 << t.n_qubits,
        });
    }
    if alphas.len() != model.set.n_unknowns {
        return Err(Error::LengthMismatch {
            expected: model.set.n_unknowns,
            got: alphas.len(),
        });
    }
    Ok(())
}

/// Central finite-difference gradient of `L` over `(t, α)`, in that order.
pub fn likelihood_gradient(model: &LikelihoodModel, t: &TParams, alphas: &[f64], h: f64) -> Result<Vec<f64>> {
    check_params(t, alphas, model)?;
    let np = model.n_params();
    let mut x = t.t.clone();
    x.extend_from_slice(alphas);
    Ok(numerical_gradient(|x| model.eval(&x[..np], &x[np..]), &x, h))
}

/// Least-squares Pauli coefficients from `n_j/N_j = 2⁻ⁿ Σ_i B[j][i] λ_i` with
/// `λ_0 = 1`. The result may be unphysical.
pub fn linear_inversion(model: &LikelihoodModel, alphas: &[f64]) -> Result<PauliCoefficients> {
    let set = &model.set;
    let dm = design_matrix(set, alphas)?;
    if !dm.full_rank() {
        return Err(Error::RankDeficient {
            alphas: alphas.to_vec(),
            rank: dm.rank,
            columns: dm.cols,
        });
    }
    let d = (1usize << set.n_qubits) as f64;
    let cols = dm.cols - 1;
    let mut a = Vec::with_capacity(set.len() * cols);
    let mut b = Vec::with_capacity(set.len());
    for j in 0..set.len() {
        let row = dm.row(j);
        a.extend_from_slice(&row[1..]);
        let f = if model.scale[j] > 0.0 { model.observed[j] / model.scale[j] } else { 0.0 };
        b.push(d * f - row[0]);
    }
    let x = crate::linalg::least_squares(&a, set.len(), cols, &b);
    let mut lambda = Vec::with_capacity(dm.cols);
    lambda.push(1.0);
    lambda.extend(x);
    PauliCoefficients::new(set.n_qubits, lambda)
}

/// Linear inversion projected to the nearest physical state, as `t`.
fn physical_seed(model: &LikelihoodModel, alphas: &[f64]) -> Result<TParams> {
    let op = pauli_compose(&linear_inversion(model, alphas)?)?;
    let rho = DensityMatrix::project_physical(&op)?;
    Ok(seed_from_density(&rho))
}

/// `t` of a state, with rank-deficient rows filled in slightly so the
/// simplex can leave the boundary.
fn seed_from_density(rho: &DensityMatrix) -> TParams {
    let mut t = tparams_from_density(rho).normalized();
    let d = rho.dim();
    for x in t.t.iter_mut().take(d) {
        if *x == 0.0 {
            *x = 1e-3;
        }
    }
    t.normalized()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub n_starts: usize,
    /// Initial `α` values, each in `(0, π]`.
    pub alpha_grid: Vec<f64>,
    /// Stop threshold on the spread of `L` across the simplex.
    pub tolerance: f64,
    /// Evaluation budget per start.
    pub max_evals: usize,
    /// Minimum purity enforced through a penalty term.
    pub purity_prior: Option<f64>,
    /// Seed for the random start perturbations.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_starts: 24,
            alpha_grid: default_alpha_grid(12),
            tolerance: 1e-9,
            max_evals: 50_000,
            purity_prior: None,
            seed: 0,
        }
    }
}

/// `k π / n` for `k = 1..=n`.
pub fn default_alpha_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 * PI / n as f64).collect()
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig("n_starts must be at least 1".into()));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidConfig("alpha_grid is empty".into()));
        }
        if let Some(a) = self.alpha_grid.iter().find(|&&a| !(a > 0.0 && a <= PI)) {
            return Err(Error::InvalidConfig(format!("alpha_grid value {a} outside (0, π]")));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidConfig("max_evals must be positive".into()));
        }
        if let Some(p) = self.purity_prior {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("purity_prior {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn nelder_mead(&self, tolerance: f64) -> NelderMeadConfig {
        NelderMeadConfig {
            max_evals: self.max_evals,
            tolerance,
            restarts: 3,
        }
    }
}

/// Outcome of one optimizer start.
#[derive(Debug, Clone, PartialEq)]
pub struct StartResult {
    pub l: f64,
    /// Canonical `|α|` per unknown.
    pub alpha: Vec<f64>,
    pub converged: bool,
    pub evals: usize,
}

/// Which arms were moved from the `−α` branch to the reported `+|α|` one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbiguityNote {
    pub flipped_arms: Vec<bool>,
}

impl AmbiguityNote {
    pub fn any_flipped(&self) -> bool {
        self.flipped_arms.iter().any(|&f| f)
    }
}

impl fmt::Display for AmbiguityNote {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arms: Vec<String> = self
            .flipped_arms
            .iter()
            .enumerate()
            .filter(|(_, &x)| x)
            .map(|(k, _)| k.to_string())
            .collect();
        if arms.is_empty() {
            write!(f, "reported branch +|α|; the −|α| solution is ρ̂ conjugated by σz on every arm")
        } else {
            write!(
                f,
                "optimizer found −α on arm(s) {}; reported +|α| with ρ̂ conjugated by σz there",
                arms.join(",")
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub rho_hat: DensityMatrix,
    /// Unit-norm parameters of `rho_hat`.
    pub t_hat: TParams,
    /// `|α|` per unknown, in `(0, π]`; empty for standard tomography.
    pub alpha_hat: Vec<f64>,
    pub final_l: f64,
    pub start_results: Vec<StartResult>,
    pub converged: bool,
    /// Set for self-calibrating reconstructions.
    pub ambiguity_note: Option<AmbiguityNote>,
    pub evals: usize,
}

#[derive(Debug, Clone)]
struct Candidate {
    x: Vec<f64>,
    l: f64,
    converged: bool,
    evals: usize,
}

fn objective<'a>(model: &'a LikelihoodModel, opt: &'a OptimizerConfig) -> impl Fn(&[f64]) -> f64 + 'a {
    let np = model.n_params();
    move |x: &[f64]| {
        let (t, alphas) = x.split_at(np);
        let l = model.eval(t, alphas);
        match opt.purity_prior {
            Some(p_min) if l.is_finite() => {
                let (m, tr) = crate::state::t_dagger_t(model.n_qubits(), t);
                let purity = m.trace_product(&m).re / (tr * tr);
                let gap = (p_min - purity).max(0.0);
                l + PURITY_WEIGHT * gap * gap
            }
            _ => l,
        }
    }
}

fn run_start(model: &LikelihoodModel, opt: &OptimizerConfig, x0: &[f64], step_scale: f64, tolerance: f64) -> Candidate {
    let np = model.n_params();
    let steps: Vec<f64> = (0..x0.len())
        .map(|i| step_scale * if i < np { T_STEP } else { ALPHA_STEP })
        .collect();
    let f = objective(model, opt);
    let m = nelder_mead(&f, x0, &steps, &opt.nelder_mead(tolerance));
    Candidate {
        x: m.x,
        l: m.value,
        converged: m.converged,
        evals: m.evals,
    }
}

fn perturbed(t: &TParams, opt: &OptimizerConfig, start: usize) -> TParams {
    let mut rng = KeyedRng::new(opt.seed, Domain::Starts, start as u32, 0);
    TParams {
        n_qubits: t.n_qubits,
        t: t.t.iter().map(|x| x + PERTURBATION * rng.normal()).collect(),
    }
    .normalized()
}

/// Total order on candidates: smaller `L`, then smaller `Σ|α|`, then
/// lexicographic parameters.
fn rank(np: usize) -> impl Fn(&Candidate, &Candidate) -> Ordering {
    move |a, b| {
        a.l.total_cmp(&b.l)
            .then_with(|| {
                let sa: f64 = a.x[np..].iter().map(|x| wrap_angle(*x).abs()).sum();
                let sb: f64 = b.x[np..].iter().map(|x| wrap_angle(*x).abs()).sum();
                sa.total_cmp(&sb)
            })
            .then_with(|| {
                a.x.iter()
                    .zip(&b.x)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
    }
}

/// Re-runs the best few starts at a tighter tolerance and returns the
/// winner under [`rank`].
fn polish(model: &LikelihoodModel, opt: &OptimizerConfig, mut cands: Vec<Candidate>) -> Candidate {
    let np = model.n_params();
    cands.sort_by(rank(np));
    let mut pool: Vec<Candidate> = Vec::new();
    for c in cands.iter() {
        if pool.len() == POLISH_CANDIDATES {
            break;
        }
        if pool.iter().any(|p| (p.l - c.l).abs() <= opt.tolerance * p.l.abs().max(1.0)) {
            continue;
        }
        pool.push(c.clone());
    }
    let mut out: Vec<Candidate> = cands[..1].to_vec();
    for c in &pool {
        let mut p = run_start(model, opt, &c.x, 0.2, opt.tolerance * 1e-4);
        p.converged |= c.converged;
        p.evals += c.evals;
        out.push(p);
    }
    out.sort_by(rank(np));
    out.swap_remove(0)
}

/// Normalized `t` of `ZρZ` for per-arm `σz` flips: right-multiplying `T` by
/// the diagonal `Z` negates the columns with a `−1` sign.
fn flip_t(n_qubits: usize, t: &[f64], arms: &[bool]) -> Vec<f64> {
    let d = 1 << n_qubits;
    let sign = |j: usize| -> f64 {
        let mut s = 1.0;
        for (q, &flip) in arms.iter().enumerate().take(n_qubits) {
            let bit = (j >> (n_qubits - 1 - q)) & 1;
            if flip && bit == 1 {
                s = -s;
            }
        }
        s
    };
    let mut out = t.to_vec();
    for (j, x) in out.iter_mut().enumerate().take(d) {
        *x *= sign(j);
    }
    let mut k = d;
    for i in 1..d {
        for j in 0..i {
            out[k] *= sign(j);
            out[k + 1] *= sign(j);
            k += 2;
        }
    }
    out
}

/// Whether every unknown-angle rotation on `arm` has an integer multiplier,
/// which makes the counts `2π`-periodic in that arm's `α`.
fn periodic_arm(set: &SettingSet, arm: usize) -> bool {
    set.settings.iter().all(|s| {
        let qubits: Vec<usize> = if set.n_unknowns == 1 {
            (0..set.n_qubits).collect()
        } else {
            vec![arm]
        };
        qubits.iter().all(|&q| {
            let spec = &s.per_qubit[q];
            !spec.needs_alpha() || spec.nu.fract() == 0.0
        })
    })
}

fn finish(model: &LikelihoodModel, best: Candidate, start_results: Vec<StartResult>, evals: usize) -> Result<ReconstructionResult> {
    let set = &model.set;
    let np = model.n_params();
    let n = set.n_qubits;
    let (t, raw_alphas) = best.x.split_at(np);
    let mut alphas = Vec::with_capacity(raw_alphas.len());
    let mut arm_flips = vec![false; n];
    let mut flipped = vec![false; raw_alphas.len()];
    for (k, &a) in raw_alphas.iter().enumerate() {
        let a = if periodic_arm(set, k) { wrap_angle(a) } else { a };
        if a < 0.0 {
            flipped[k] = true;
            if set.n_unknowns == 1 {
                arm_flips.iter_mut().for_each(|f| *f = true);
            } else {
                arm_flips[k] = true;
            }
        }
        alphas.push(a.abs());
    }
    let t = flip_t(n, t, &arm_flips);
    let t_hat = TParams::new(n, t)?.normalized();
    let rho_hat = density_from_tparams(&t_hat)?;
    let final_l = model.eval(&t_hat.t, &alphas);
    Ok(ReconstructionResult {
        rho_hat,
        t_hat,
        ambiguity_note: if set.n_unknowns > 0 {
            Some(AmbiguityNote { flipped_arms: flipped })
        } else {
            None
        },
        alpha_hat: alphas,
        final_l,
        converged: best.converged || start_results.iter().any(|s| s.converged),
        start_results,
        evals,
    })
}

fn start_result(model: &LikelihoodModel, c: &Candidate) -> StartResult {
    let np = model.n_params();
    StartResult {
        l: c.l,
        alpha: c.x[np..]
            .iter()
            .enumerate()
            .map(|(k, &a)| if periodic_arm(&model.set, k) { wrap_angle(a).abs() } else { a.abs() })
            .collect(),
        converged: c.converged,
        evals: c.evals,
    }
}

/// Standard maximum-likelihood tomography: all rotation angles known.
pub fn mle_st(model: &LikelihoodModel, opt: &OptimizerConfig) -> Result<ReconstructionResult> {
    opt.validate()?;
    if model.set.n_unknowns != 0 {
        return Err(Error::InvalidConfig(format!(
            "standard tomography needs a set without unknown angles (set declares {})",
            model.set.n_unknowns
        )));
    }
    let seed = physical_seed(model, &[])?;
    let mut cands = Vec::with_capacity(opt.n_starts);
    for k in 0..opt.n_starts {
        let t0 = if k == 0 { seed.clone() } else { perturbed(&seed, opt, k) };
        cands.push(run_start(model, opt, &t0.t, 1.0, opt.tolerance));
    }
    let start_results = cands.iter().map(|c| start_result(model, c)).collect();
    let evals = cands.iter().map(|c| c.evals).sum::<usize>();
    let best = polish(model, opt, cands);
    let total = evals + best.evals;
    finish(model, best, start_results, total)
}

/// Self-calibrating reconstruction: joint fit over `t` and the unknown
/// retardances. Start `k` uses grid point `k mod |grid|`; the first pass
/// over the grid is seeded by physical linear inversion at that point,
/// later passes by random perturbations of it.
pub fn mle_sct(model: &LikelihoodModel, opt: &OptimizerConfig) -> Result<ReconstructionResult> {
    opt.validate()?;
    let set = &model.set;
    if set.n_unknowns == 0 {
        return Err(Error::InvalidConfig(
            "self-calibrating tomography needs a set with unknown angles".into(),
        ));
    }
    let n = set.n_qubits;
    let grid = &opt.alpha_grid;
    let mut seeds: Vec<Option<TParams>> = Vec::with_capacity(grid.len());
    let mut last_err = None;
    for &a in grid {
        match physical_seed(model, &vec![a; set.n_unknowns]) {
            Ok(t) => seeds.push(Some(t)),
            Err(e @ Error::RankDeficient { .. }) => {
                last_err = Some(e);
                seeds.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if seeds.iter().all(Option::is_none) {
        return Err(match last_err {
            Some(Error::RankDeficient { rank, columns, .. }) => Error::RankDeficient {
                alphas: grid.clone(),
                rank,
                columns,
            },
            _ => Error::Degenerate("no usable starting point".into()),
        });
    }
    let mixed = seed_from_density(&DensityMatrix::maximally_mixed(n)?);
    let mut cands = Vec::with_capacity(opt.n_starts);
    for k in 0..opt.n_starts {
        let g = k % grid.len();
        let base = seeds[g].clone().unwrap_or_else(|| mixed.clone());
        let t0 = if k < grid.len() { base } else { perturbed(&base, opt, k) };
        let mut x0 = t0.t;
        x0.extend(core::iter::repeat_n(grid[g], set.n_unknowns));
        cands.push(run_start(model, opt, &x0, 1.0, opt.tolerance));
    }
    let start_results = cands.iter().map(|c| start_result(model, c)).collect();
    let evals = cands.iter().map(|c| c.evals).sum::<usize>();
    let best = polish(model, opt, cands);
    let total = evals + best.evals;
    finish(model, best, start_results, total)
}

/// `L` at `(t, α)` and at the `σz`-conjugate state with `−α`; equal for
/// protocols built from equatorial rotations.
pub fn branch_pair(model: &LikelihoodModel, t: &TParams, alphas: &[f64]) -> Result<(f64, f64)> {
    let plus = likelihood(t, alphas, model)?;
    let arms = vec![true; model.n_qubits()];
    let flipped = TParams::new(t.n_qubits, flip_t(t.n_qubits, &t.t, &arms))?;
    let neg: Vec<f64> = alphas.iter().map(|a| -a).collect();
    let minus = likelihood(&flipped, &neg, model)?;
    Ok((plus, minus))
}

/// Largest angle difference modulo `2π`, for comparing retardances.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = rem_tau(a - b);
    d.min(TAU - d)
}
