mod common;

use iohlqg::commands::{gradient_check, lifted_baseline, relative_gradient_error};
use iohlqg::engine::cost_of_dyn_controller;
use iohlqg::ioh::IohGain;
use iohlqg::linalg::{spectral_radius, Mat};
use iohlqg::pgm::random_stabilizing_gain;
use iohlqg::{benchmark, lqg_baseline, CostWeights, DynController, Error, NoiseSpec, Problem, RelaxedProblem};
use rand::Rng;

fn random_relaxed(seed: u64) -> (Problem, RelaxedProblem) {
    let mut rng = common::rng(seed);
    let nx = rng.random_range(1..=3);
    let nu = rng.random_range(1..=2);
    let ny = rng.random_range(1..=2);
    // open-loop stable, so that small random gains stabilize
    let p = loop {
        let p = common::random_problem(nx, nu, ny, &mut rng);
        if spectral_radius(&p.plant.a) < 0.95 {
            break p;
        }
    };
    let eps = 10f64.powf(rng.random_range(-6.0..-1.0));
    let prob = RelaxedProblem::new(&p, nx, eps).unwrap();
    (p, prob)
}

#[test]
fn relaxed_cost_splits_into_cost_plus_energy() {
    for seed in 0..50 {
        let (_, prob) = random_relaxed(seed);
        let gain = random_stabilizing_gain(&prob, 0.3, seed).unwrap();
        let r = prob.cost(&gain).unwrap();
        assert!((r.j_eps - r.j - prob.epsilon * r.gamma_k).abs() <= 1e-9 * (1.0 + r.j));
        assert!(r.j >= r.const_term && r.const_term >= 0.0);
        assert!(r.stable);
    }
}

#[test]
fn gradient_matches_central_differences() {
    for plant_seed in 0..5 {
        let (_, prob) = random_relaxed(1000 + plant_seed);
        for g in 0..5 {
            let gain = random_stabilizing_gain(&prob, 0.5, 10 * plant_seed + g).unwrap();
            let (an, fd) = gradient_check(&prob, &gain, 1e-6).unwrap();
            let inf = an.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let worst = an.iter().zip(&fd).map(|(a, f)| relative_gradient_error(*a, *f, inf)).fold(0.0, f64::max);
            assert!(worst <= 1e-5, "plant {plant_seed} gain {g}: {worst:e}");
        }
    }
}

#[test]
fn lifted_controller_cost_equals_dynamic_cost() {
    for seed in 0..20 {
        let mut rng = common::rng(2000 + seed);
        let nx = rng.random_range(1..=3);
        let p = common::random_problem(nx, 1, rng.random_range(1..=2), &mut rng);
        let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights).unwrap();
        // a detuned controller that is still stabilizing, to avoid testing only the optimum
        let detuned = DynController::new(ctl.g.clone(), ctl.h.clone() * 0.9, ctl.f.clone()).unwrap();
        for c in [&ctl, &detuned] {
            let Ok(dyn_cost) = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, c) else { continue };
            let Ok(gain) = iohlqg::lift_controller(c, nx + 1) else { continue };
            let prob = RelaxedProblem::new(&p, nx + 1, 0.0).unwrap();
            let j = prob.cost(&gain).unwrap().j;
            assert!((j - dyn_cost).abs() <= 1e-8 * (1.0 + dyn_cost), "seed {seed}: {j} vs {dyn_cost}");
        }
    }
}

#[test]
fn lifted_lqg_beats_random_gains() {
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, 3, 0.0).unwrap();
    let best = prob.cost(&lifted_baseline(&p, 3).unwrap()).unwrap().j;
    for seed in 0..50 {
        let gain = random_stabilizing_gain(&prob, 1.0, seed).unwrap();
        assert!(prob.cost(&gain).unwrap().j >= best);
    }
}

#[test]
fn lqg_beats_perturbed_dynamic_controllers() {
    let p = benchmark::problem();
    let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights).unwrap();
    let best = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &ctl).unwrap();
    let mut rng = common::rng(9);
    let mut tried = 0;
    while tried < 50 {
        let c = DynController::new(
            &ctl.g + common::uniform(3, 3, &mut rng) * 0.05,
            &ctl.h + common::uniform(3, 2, &mut rng) * 0.05,
            &ctl.f + common::uniform(1, 3, &mut rng) * 0.05,
        )
        .unwrap();
        if let Ok(j) = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &c) {
            assert!(j >= best - 1e-9 * best);
            tried += 1;
        }
    }
}

#[test]
fn relaxed_cost_dominates_coercivity_bound() {
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, 3, 1e-2).unwrap();
    for seed in 0..20 {
        let gain = random_stabilizing_gain(&prob, 0.5 + seed as f64 * 0.1, seed).unwrap();
        assert!(prob.cost(&gain).unwrap().j_eps >= prob.coercivity_lower_bound(&gain));
    }
}

#[test]
fn zero_gain_leaves_theta_unchanged() {
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, 3, 0.0).unwrap();
    let (t, rho) = prob.theta_closed(&IohGain::zeros(3, 1, 2)).unwrap();
    assert_eq!(t, prob.sys.theta);
    let eig = t.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!((rho - eig).abs() < 1e-10);
    assert!((rho - spectral_radius(&p.plant.a)).abs() < 1e-8);
}

#[test]
fn destabilizing_gain_has_unbounded_cost() {
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, 3, 0.0).unwrap();
    let gain = IohGain::for_system(&prob.sys, Mat::from_element(1, 9, 50.0)).unwrap();
    assert!(!prob.is_stabilizing(&gain));
    assert!(matches!(prob.cost(&gain), Err(Error::UnboundedCost { rho }) if rho >= 1.0));
}

#[test]
fn noiseless_problem_has_zero_cost() {
    let p = benchmark::problem();
    let quiet = Problem::new(
        p.plant.clone(),
        NoiseSpec::new(Mat::zeros(3, 3), Mat::zeros(2, 2)).unwrap(),
        CostWeights::new(p.weights.q.clone(), p.weights.r.clone()).unwrap(),
    )
    .unwrap();
    let prob = RelaxedProblem::new(&quiet, 3, 1e-3).unwrap();
    let gain = random_stabilizing_gain(&prob, 1.0, 4).unwrap();
    let r = prob.cost(&gain).unwrap();
    assert_eq!(r.j, 0.0);
    assert!((r.j_eps - 1e-3 * r.gamma_k).abs() <= 1e-12 * r.j_eps);
}

#[test]
fn stationarity_certificate_at_the_optimum() {
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, 3, 0.0).unwrap();
    let gain = lifted_baseline(&p, 3).unwrap();
    let cert = prob.epsilon_stationarity_cert(&gain).unwrap();
    assert_eq!(cert.bound, 0.0);
    assert!(cert.grad_norm_j < 1e-6, "{}", cert.grad_norm_j);
}
