use iohlqg::commands::lifted_baseline;
use iohlqg::engine::cost_of_dyn_controller;
use iohlqg::linalg::balanced_truncation;
use iohlqg::pgm::{self, multi_seed_study, random_stabilizing_gain, run, PgmConfig};
use iohlqg::{benchmark, lqg_baseline, DynController, Error, RelaxedProblem};

fn short(alpha: f64, iters: usize) -> PgmConfig {
    PgmConfig { alpha, max_iters: iters, record_every: 50, ..Default::default() }
}

#[test]
fn same_seed_same_trace() {
    let prob = RelaxedProblem::new(&benchmark::problem(), 3, 1e-8).unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 11).unwrap();
    let (k1, t1) = run(&prob, &k0, &short(1e-4, 300)).unwrap();
    let (k2, t2) = run(&prob, &k0, &short(1e-4, 300)).unwrap();
    assert_eq!(k1, k2);
    let strip = |t: &pgm::PgmTrace| t.records.iter().map(|r| (r.iter, r.j, r.j_eps, r.grad_norm)).collect::<Vec<_>>();
    assert_eq!(strip(&t1), strip(&t2));
}

#[test]
fn single_seed_study_matches_direct_run() {
    let prob = RelaxedProblem::new(&benchmark::problem(), 3, 1e-8).unwrap();
    let cfg = PgmConfig { seed: 5, ..short(1e-4, 200) };
    let study = multi_seed_study(&prob, 1, &cfg).unwrap();
    assert_eq!(study[0].seed, 5);
    let (k_study, _) = study[0].outcome.as_ref().unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 5).unwrap();
    let (k_direct, _) = run(&prob, &k0, &cfg).unwrap();
    assert_eq!(*k_study, k_direct);
}

#[test]
fn one_iteration_records_start_and_end() {
    let prob = RelaxedProblem::new(&benchmark::problem(), 3, 1e-8).unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 0).unwrap();
    let (_, trace) = run(&prob, &k0, &short(1e-4, 1)).unwrap();
    assert_eq!(trace.iterations, 1);
    let iters: Vec<usize> = trace.records.iter().map(|r| r.iter).collect();
    assert_eq!(iters, vec![0, 1]);
    assert!(trace.records[1].j_eps <= trace.records[0].j_eps);
}

#[test]
fn small_steps_decrease_sufficiently() {
    let prob = RelaxedProblem::new(&benchmark::problem(), 3, 1e-8).unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 2).unwrap();
    let (_, trace) = run(&prob, &k0, &short(1e-4, 2000)).unwrap();
    assert!(trace.monotone());
    assert_eq!(trace.coercivity_violations, 0);
    assert!(trace.all_stable && trace.backoffs.is_empty());
    assert!(trace.last().unwrap().j < trace.records[0].j);
}

#[test]
fn single_step_reports_descent() {
    let prob = RelaxedProblem::new(&benchmark::problem(), 3, 1e-8).unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 0).unwrap();
    let (k1, check) = pgm::step(&prob, &k0, 1e-4).unwrap();
    assert!(check.monotone() && check.sufficient());
    assert!((check.j_eps_after - prob.cost(&k1).unwrap().j_eps).abs() < 1e-9);
    assert!(matches!(pgm::step(&prob, &k0, 10.0), Err(Error::StepDestabilized { .. })));
}

#[test]
fn huge_step_backs_off_and_logs() {
    let prob = RelaxedProblem::new(&benchmark::problem(), 3, 1e-8).unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 0).unwrap();
    let (_, trace) = run(&prob, &k0, &short(10.0, 3)).unwrap();
    assert!(!trace.backoffs.is_empty());
    assert!(trace.backoffs[0].alpha_used < 10.0);
    let no_room = PgmConfig { max_halvings: 0, ..short(10.0, 3) };
    assert!(matches!(run(&prob, &k0, &no_room), Err(Error::StepDestabilized { halvings: 0, .. })));
}

#[test]
fn two_step_history_beats_truncated_lqg() {
    let p = benchmark::problem();
    let lqg = lqg_baseline(&p.plant, &p.noise, &p.weights).unwrap();
    let red = balanced_truncation(&lqg.g, &lqg.h, &lqg.f, 2).unwrap();
    let red = DynController::new(red.a, red.b, red.c).unwrap();
    let truncated = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &red).unwrap();
    let full = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &lqg).unwrap();

    let prob = RelaxedProblem::new(&p, 2, 1e-8).unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 0).unwrap();
    let (_, trace) = run(&prob, &k0, &PgmConfig { record_every: 1000, ..Default::default() }).unwrap();
    let j = trace.last().unwrap().j;
    assert!(trace.converged && trace.monotone());
    assert!(full < j && j < truncated, "{full} < {j} < {truncated}");
}

#[test]
fn starting_at_the_optimum_stays_there() {
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, 3, 1e-8).unwrap();
    let k0 = lifted_baseline(&p, 3).unwrap();
    let j0 = prob.cost(&k0).unwrap().j;
    let (_, trace) = run(&prob, &k0, &short(1e-4, 100)).unwrap();
    assert!((trace.last().unwrap().j - j0).abs() < 1e-9 * j0);
}

#[test]
fn trace_csv_layout() {
    let prob = RelaxedProblem::new(&benchmark::problem(), 3, 1e-8).unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 0).unwrap();
    let (_, trace) = run(&prob, &k0, &short(1e-4, 100)).unwrap();
    let mut buf = Vec::new();
    trace.write_csv(&mut buf, 3).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iter,J,J_eps,grad_norm,rho,hsv_1,hsv_2,hsv_3,wall_ms");
    assert_eq!(lines.count(), trace.records.len());
}

#[test]
fn bad_configs_are_rejected() {
    let prob = RelaxedProblem::new(&benchmark::problem(), 3, 1e-8).unwrap();
    let k0 = random_stabilizing_gain(&prob, 1.0, 0).unwrap();
    for cfg in [
        PgmConfig { alpha: 0.0, ..Default::default() },
        PgmConfig { epsilon: 0.0, ..Default::default() },
        PgmConfig { max_iters: 0, ..Default::default() },
        PgmConfig { record_every: 0, ..Default::default() },
    ] {
        assert!(matches!(run(&prob, &k0, &cfg), Err(Error::InvalidInput(_))));
    }
    assert!(matches!(multi_seed_study(&prob, 0, &PgmConfig::default()), Err(Error::InvalidInput(_))));
    assert!(matches!(random_stabilizing_gain(&prob, -1.0, 0), Err(Error::InvalidInput(_))));
}
