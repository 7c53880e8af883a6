//! Bode magnitude of the LQG controller, its order-2 balanced truncation and
//! a controller learned with two-step histories, as one CSV on stdout.
//!
//! cargo run --release --example bode -- [iters] > bode.csv

use iohlqg::commands::bode_table;
use iohlqg::linalg::{balanced_truncation, log_frequency_grid, Vector};
use iohlqg::pgm::{random_stabilizing_gain, run, PgmConfig};
use iohlqg::{benchmark, lqg_baseline, realize_controller, DynController, RelaxedProblem};

fn main() -> iohlqg::Result<()> {
    let iters: usize = std::env::args().nth(1).map_or(50_000, |s| s.parse().expect("iters"));
    let p = benchmark::problem();
    let lqg = lqg_baseline(&p.plant, &p.noise, &p.weights)?;
    let red = balanced_truncation(&lqg.g, &lqg.h, &lqg.f, 2)?;
    let red = DynController::new(red.a, red.b, red.c)?;

    let prob = RelaxedProblem::new(&p, 2, 1e-8)?;
    let k0 = random_stabilizing_gain(&prob, 1.0, 0)?;
    let (gain, _) = run(&prob, &k0, &PgmConfig { max_iters: iters, ..Default::default() })?;
    let learned = realize_controller(&gain, &Vector::zeros(gain.k.ncols()))?;

    let omegas = log_frequency_grid(1e-3, std::f64::consts::PI, 100);
    let tables = [bode_table(&lqg, &omegas)?, bode_table(&red, &omegas)?, bode_table(&learned, &omegas)?];
    let mags: Vec<_> = tables.iter().map(|t| t.magnitudes()).collect();
    println!("omega,lqg_db_1_1,lqg_db_1_2,truncated_db_1_1,truncated_db_1_2,learned_db_1_1,learned_db_1_2");
    for (i, w) in omegas.iter().enumerate() {
        let cells: Vec<String> = mags.iter().flat_map(|m| m[i].iter().map(|v| format!("{v:.4}"))).collect();
        println!("{w:.6e},{}", cells.join(","));
    }
    Ok(())
}
