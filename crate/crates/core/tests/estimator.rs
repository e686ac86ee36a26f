//! Estimator invariants on simulated data.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

use proptest::prelude::*;
use sctomo_core::analysis::{simulate_model, NoiseSweep, PhotonLevel};
use sctomo_core::estimator::{
    branch_pair, likelihood, likelihood_gradient, linear_inversion, mle_sct, mle_st, LikelihoodModel,
    OptimizerConfig,
};
use sctomo_core::measurement::{sct_settings_1q, st_settings_1q, st_settings_2q, SettingSet};
use sctomo_core::metrics::fidelity_up_to_z;
use sctomo_core::pauli::pauli_compose;
use sctomo_core::simulator::{expected_counts, fourteen_state_suite, resolve_state, ExperimentConfig, SourceSpec};
use sctomo_core::state::{density_from_tparams, tparams_from_density, DensityMatrix, TParams};

fn noiseless(source: SourceSpec, set: SettingSet, alphas: Vec<f64>) -> LikelihoodModel {
    let cfg = ExperimentConfig::new(source, set.clone(), alphas, 1000.0, 0).unwrap();
    LikelihoodModel::noiseless(set, &expected_counts(&cfg).unwrap()).unwrap()
}

fn t_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, TParams::len_for(n))
        .prop_filter("nonzero", |t| t.iter().map(|x| x * x).sum::<f64>() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn branch_equivalence(truth in t_vec(1), probe in t_vec(1), alpha in 0.05..3.1f64, a in -3.0..3.0f64) {
        let rho = density_from_tparams(&TParams::new(1, truth).unwrap()).unwrap();
        let model = noiseless(SourceSpec::explicit(rho), sct_settings_1q(), vec![alpha]);
        let (plus, minus) = branch_pair(&model, &TParams::new(1, probe).unwrap(), &[a]).unwrap();
        prop_assert!((plus - minus).abs() <= 1e-12 * plus.max(1.0));
    }

    #[test]
    fn scale_gauge(truth in t_vec(1), probe in t_vec(1), k in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64], a in 0.1..3.0f64) {
        let rho = density_from_tparams(&TParams::new(1, truth).unwrap()).unwrap();
        let model = noiseless(SourceSpec::explicit(rho), sct_settings_1q(), vec![0.7]);
        let t = TParams::new(1, probe).unwrap();
        let scaled = TParams::new(1, t.t.iter().map(|x| k * x).collect()).unwrap();
        let (l1, l2) = (likelihood(&t, &[a], &model).unwrap(), likelihood(&scaled, &[a], &model).unwrap());
        prop_assert!((l1 - l2).abs() <= 1e-12 * l1.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn st_agrees_with_projected_inversion(truth in t_vec(1)) {
        let rho = density_from_tparams(&TParams::new(1, truth).unwrap()).unwrap();
        let model = noiseless(SourceSpec::explicit(rho), st_settings_1q(), vec![]);
        let li = DensityMatrix::project_physical(&pauli_compose(&linear_inversion(&model, &[]).unwrap()).unwrap()).unwrap();
        let st = mle_st(&model, &OptimizerConfig::default()).unwrap();
        prop_assert!(st.rho_hat.op().max_abs_diff(li.op()) < 1e-6, "{}", st.rho_hat.op().max_abs_diff(li.op()));
    }
}

#[test]
fn st_agrees_with_projected_inversion_2q() {
    let t: Vec<f64> = (0..16).map(|i| ((i * 7 % 11) as f64 - 5.0) / 6.0).collect();
    let rho = density_from_tparams(&TParams::new(2, t).unwrap()).unwrap();
    let model = noiseless(SourceSpec::explicit(rho), st_settings_2q(), vec![]);
    let li = DensityMatrix::project_physical(&pauli_compose(&linear_inversion(&model, &[]).unwrap()).unwrap()).unwrap();
    let st = mle_st(&model, &OptimizerConfig::default()).unwrap();
    assert!(st.rho_hat.op().max_abs_diff(li.op()) < 1e-6);
}

#[test]
fn zero_residual_on_suite() {
    for source in fourteen_state_suite() {
        let model = noiseless(source.clone(), sct_settings_1q(), vec![FRAC_PI_6]);
        let r = mle_sct(&model, &OptimizerConfig::default()).unwrap();
        assert!(r.final_l <= 1e-6, "{source:?}: L = {}", r.final_l);
        let norm: f64 = r.t_hat.t.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let truth = resolve_state(&source).unwrap();
        assert!(fidelity_up_to_z(&r.rho_hat, &truth, 1).unwrap().fidelity >= 0.999);
    }
}

#[test]
fn gradient_check_matches_directional_difference() {
    let model = noiseless(SourceSpec::bloch(1.0, 0.4), sct_settings_1q(), vec![0.8]);
    let t = TParams::new(1, vec![0.5, 0.4, -0.3, 0.2]).unwrap();
    let g = likelihood_gradient(&model, &t, &[1.1], 1e-6).unwrap();
    let dir = [0.3, -0.1, 0.5, 0.2, -0.4];
    let h = 1e-5;
    let shifted = |s: f64| {
        let tt = TParams::new(1, t.t.iter().zip(&dir).map(|(x, d)| x + s * d).collect()).unwrap();
        likelihood(&tt, &[1.1 + s * dir[4]], &model).unwrap()
    };
    let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
    let dot: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
    assert!((fd - dot).abs() < 1e-5 * fd.abs().max(1.0), "{fd} vs {dot}");
}

#[test]
fn noiseless_round_trip_through_tparams() {
    let rho = resolve_state(&SourceSpec::bloch(FRAC_PI_2, 1.0)).unwrap();
    let model = noiseless(SourceSpec::explicit(rho), sct_settings_1q(), vec![0.4]);
    assert!(likelihood(&tparams_from_density(&rho), &[0.4], &model).unwrap() < 1e-18);
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[test]
fn consistency_median_fidelity_rises_with_photons() {
    let sweep = NoiseSweep {
        state: SourceSpec::bloch(FRAC_PI_4, FRAC_PI_4),
        alpha: FRAC_PI_6,
        levels: [150.0, 500.0, 1000.0, 3000.0].map(PhotonLevel::Poisson).to_vec(),
        runs_per_level: 100,
        base_seed: 1000,
        opt: OptimizerConfig::default(),
    };
    let report = sweep.run().unwrap();
    let medians: Vec<f64> = report.points.iter().map(|p| median(p.fidelities(0))).collect();
    for w in medians.windows(2) {
        assert!(w[1] >= w[0], "{medians:?}");
    }
}

#[test]
fn st_on_poisson_data_from_h() {
    let source = SourceSpec::bloch(FRAC_PI_2, 0.0);
    let truth = resolve_state(&source).unwrap();
    let good = (0..100u64)
        .filter(|&seed| {
            let cfg = ExperimentConfig::new(source.clone(), st_settings_1q(), vec![], 3000.0, seed).unwrap();
            let model = simulate_model(&cfg, PhotonLevel::Poisson(3000.0), 0).unwrap();
            let r = mle_st(&model, &OptimizerConfig { seed, ..Default::default() }).unwrap();
            sctomo_core::metrics::fidelity(&r.rho_hat, &truth).unwrap() >= 0.99
        })
        .count();
    assert!(good >= 95, "{good}/100");
}
