//! Riccati-optimal controller for the bundled 3-state plant, its cost, its
//! Hankel singular values and a Monte-Carlo sanity check.
//!
//! cargo run --release --example lqg_baseline

use iohlqg::engine::cost_of_dyn_controller;
use iohlqg::linalg::{hankel_singular_values, mat_to_rows, spectral_radius};
use iohlqg::plant::closed_loop_radius;
use iohlqg::simulate::{estimate_cost_dyn, SimConfig};
use iohlqg::{benchmark, lqg_baseline};

fn main() -> iohlqg::Result<()> {
    let p = benchmark::problem();
    p.plant.check_assumptions(&Default::default())?;
    println!("open-loop spectral radius {:.4}", spectral_radius(&p.plant.a));

    let ctl = lqg_baseline(&p.plant, &p.noise, &p.weights)?;
    println!("state-feedback gain  F = {:.4?}", mat_to_rows(&ctl.f));
    println!("observer gain        H = {:.4?}", mat_to_rows(&ctl.h));
    println!("closed-loop radius {:.4}", closed_loop_radius(&p.plant, &ctl)?);

    let cost = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &ctl)?;
    println!("analytic cost {cost:.6}");
    let hsv = hankel_singular_values(&ctl.g, &ctl.h, &ctl.f)?;
    println!("Hankel singular values {hsv:.5?}");

    let est = estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &SimConfig::new(50_000, 8, 0))?;
    println!(
        "Monte-Carlo cost {:.4} +- {:.4} ({:.2} standard errors from analytic)",
        est.mean,
        est.std_err,
        (est.mean - cost).abs() / est.std_err
    );
    Ok(())
}
