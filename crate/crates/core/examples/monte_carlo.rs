//! Simulated costs next to analytic ones: the LQG loop, the same loop run on
//! the history state with and without the extra isotropic noise, and the
//! stage-cost versus window-cost identity.
//!
//! cargo run --release --example monte_carlo -- [horizon] [rollouts]

use iohlqg::commands::lifted_baseline;
use iohlqg::engine::cost_of_dyn_controller;
use iohlqg::simulate::{block_cost_identity_check, estimate_cost_dyn, estimate_cost_ioh, SimConfig};
use iohlqg::{benchmark, lqg_baseline, RelaxedProblem};

fn main() -> iohlqg::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon: usize = args.next().map_or(100_000, |s| s.parse().expect("horizon"));
    let rollouts: usize = args.next().map_or(20, |s| s.parse().expect("rollouts"));
    let cfg = SimConfig::new(horizon, rollouts, 7);
    let p = benchmark::problem();

    let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights)?;
    let exact = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &ctl)?;
    let est = estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &cfg)?;
    println!("dynamic loop   MC {:.4} +- {:.4}   analytic {exact:.4}", est.mean, est.std_err);

    let prob = RelaxedProblem::new(&p, 3, 1e-2)?;
    let gain = lifted_baseline(&p, 3)?;
    let r = prob.cost(&gain)?;
    let plain = estimate_cost_ioh(&prob, &gain, &cfg, false)?;
    let relaxed = estimate_cost_ioh(&prob, &gain, &cfg, true)?;
    println!("history loop   MC {:.4} +- {:.4}   analytic J     {:.4}", plain.mean, plain.std_err, r.j);
    println!("with eps noise MC {:.4} +- {:.4}   analytic J_eps {:.4}", relaxed.mean, relaxed.std_err, r.j_eps);

    let block = block_cost_identity_check(&prob.with_epsilon(0.0)?, &gain, &cfg)?;
    println!(
        "stage cost {:.4}, window cost {:.4}, combined standard error {:.4}",
        block.lhs.mean,
        block.rhs.mean,
        block.combined_std_err()
    );
    Ok(())
}
