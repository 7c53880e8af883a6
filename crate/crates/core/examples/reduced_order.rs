//! Two-step history gains give a second-order controller. Compare the
//! learned one with balanced truncation of the LQG controller.
//!
//! cargo run --release --example reduced_order -- [alpha] [iters]

use iohlqg::engine::cost_of_dyn_controller;
use iohlqg::linalg::balanced_truncation;
use iohlqg::pgm::{random_stabilizing_gain, run, PgmConfig};
use iohlqg::{benchmark, lqg_baseline, realize_controller, DynController, RelaxedProblem};

fn main() -> iohlqg::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().map_or(1e-3, |s| s.parse().expect("alpha"));
    let iters: usize = args.next().map_or(100_000, |s| s.parse().expect("iters"));
    let p = benchmark::problem();

    let lqg = lqg_baseline(&p.plant, &p.noise, &p.weights)?;
    let full = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &lqg)?;
    let red = balanced_truncation(&lqg.g, &lqg.h, &lqg.f, 2)?;
    let truncated = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &DynController::new(red.a, red.b, red.c)?)?;

    let prob = RelaxedProblem::new(&p, 2, 1e-8)?;
    let k0 = random_stabilizing_gain(&prob, 1.0, 0)?;
    let (gain, trace) = run(&prob, &k0, &PgmConfig { alpha, max_iters: iters, record_every: 1000, ..Default::default() })?;
    let learned = trace.last().unwrap().j;
    let ctl = realize_controller(&gain, &iohlqg::linalg::Vector::zeros(gain.k.ncols()))?;

    println!("full-order LQG          {full:.6}");
    println!("balanced truncation (2) {truncated:.6}  (+{:.3}%)", 100.0 * (truncated / full - 1.0));
    println!("learned, order {}        {learned:.6}  (+{:.3}%)", ctl.order(), 100.0 * (learned / full - 1.0));
    println!("{} iterations, converged: {}", trace.iterations, trace.converged);
    Ok(())
}
