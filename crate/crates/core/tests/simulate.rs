use iohlqg::commands::lifted_baseline;
use iohlqg::engine::cost_of_dyn_controller;
use iohlqg::ioh::IohGain;
use iohlqg::linalg::Mat;
use iohlqg::simulate::*;
use iohlqg::{benchmark, lqg_baseline, CostWeights, DynController, Error, NoiseSpec, Problem, RelaxedProblem};

#[test]
fn monte_carlo_matches_analytic_lqg_cost() {
    let p = benchmark::problem();
    let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights).unwrap();
    let exact = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &ctl).unwrap();
    let est = estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &SimConfig::new(20_000, 20, 1)).unwrap();
    assert!(est.agrees_with(exact, 3.0), "{est:?} vs {exact}");
    assert_eq!(est.n_samples, 20);
}

#[test]
fn history_loop_estimates_both_costs() {
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, 3, 1e-2).unwrap();
    let gain = lifted_baseline(&p, 3).unwrap();
    let r = prob.cost(&gain).unwrap();
    let cfg = SimConfig::new(20_000, 20, 2);
    let plain = estimate_cost_ioh(&prob, &gain, &cfg, false).unwrap();
    let relaxed = estimate_cost_ioh(&prob, &gain, &cfg, true).unwrap();
    assert!(plain.agrees_with(r.j, 3.0), "{plain:?} vs {}", r.j);
    assert!(relaxed.agrees_with(r.j_eps, 3.0), "{relaxed:?} vs {}", r.j_eps);
}

#[test]
fn stage_cost_matches_window_cost() {
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, 3, 0.0).unwrap();
    let gain = lifted_baseline(&p, 3).unwrap();
    let check = block_cost_identity_check(&prob, &gain, &SimConfig::new(20_000, 20, 3)).unwrap();
    assert!(check.passes(5.0), "{check:?}");
    assert!(check.diff_std_err <= check.combined_std_err());
}

#[test]
fn std_err_shrinks_with_more_rollouts() {
    let p = benchmark::problem();
    let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights).unwrap();
    let few = estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &SimConfig::new(2_000, 16, 4)).unwrap();
    let many = estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &SimConfig::new(2_000, 64, 4)).unwrap();
    let ratio = many.std_err / few.std_err;
    assert!((0.3..0.8).contains(&ratio), "ratio {ratio}");
}

#[test]
fn same_seed_same_estimate() {
    let p = benchmark::problem();
    let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights).unwrap();
    let cfg = SimConfig::new(1_000, 8, 42);
    let a = estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &cfg).unwrap();
    let b = estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noiseless_loop_costs_nothing() {
    let p = benchmark::problem();
    let quiet = Problem::new(
        p.plant.clone(),
        NoiseSpec::new(Mat::zeros(3, 3), Mat::zeros(2, 2)).unwrap(),
        CostWeights::new(p.weights.q.clone(), p.weights.r.clone()).unwrap(),
    )
    .unwrap();
    let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights).unwrap();
    let est = estimate_cost_dyn(&quiet.plant, &quiet.noise, &quiet.weights, &ctl, &SimConfig::new(500, 4, 0)).unwrap();
    assert_eq!((est.mean, est.std_err), (0.0, 0.0));
}

#[test]
fn unstable_loop_reports_divergence() {
    let p = benchmark::problem();
    let ctl = DynController::new(Mat::identity(3, 3) * 1.5, Mat::zeros(3, 2), Mat::zeros(1, 3)).unwrap();
    let mut ctl = ctl;
    ctl.xi0.fill(1.0);
    let err = estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &SimConfig::new(10_000, 2, 0)).unwrap_err();
    assert!(matches!(err, Error::RolloutDiverged { .. }));

    let prob = RelaxedProblem::new(&p, 3, 0.0).unwrap();
    let gain = IohGain::for_system(&prob.sys, Mat::from_element(1, 9, 50.0)).unwrap();
    let err = estimate_cost_ioh(&prob, &gain, &SimConfig::new(10_000, 2, 0), false).unwrap_err();
    assert!(matches!(err, Error::RolloutDiverged { .. }));
}

#[test]
fn config_validation() {
    assert!(SimConfig::new(100, 0, 0).validate().is_err());
    assert!(SimConfig { horizon: 10, n_rollouts: 1, burn_in: 10, seed: 0 }.validate().is_err());
    assert_eq!(SimConfig::new(1000, 1, 0).burn_in, 100);
}

#[test]
fn trajectory_csv_columns() {
    let p = benchmark::problem();
    let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights).unwrap();
    let tr = dyn_trajectory(&p.plant, &p.noise, &ctl, 25, 0).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,y_1,y_2,u_1\n"));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn estimate_statistics() {
    let e = CostEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(e.mean, 2.5);
    assert!((e.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    assert_eq!(CostEstimate::from_samples(&[7.0]).std_err, 0.0);
}
