//! Four-step history gains realize a fourth-order controller for a
//! third-order plant. The extra Hankel singular value decays as the gain
//! approaches the optimum.
//!
//! cargo run --release --example overparameterized -- [alpha] [iters] [seed]

use iohlqg::linalg::hankel_singular_values;
use iohlqg::pgm::{random_stabilizing_gain, run, PgmConfig};
use iohlqg::{benchmark, lqg_baseline, RelaxedProblem};

fn main() -> iohlqg::Result<()> {
    let mut args = std::env::args().skip(1);
    let alpha: f64 = args.next().map_or(1.9e-4, |s| s.parse().expect("alpha"));
    let iters: usize = args.next().map_or(100_000, |s| s.parse().expect("iters"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let p = benchmark::problem();
    let lqg = lqg_baseline(&p.plant, &p.noise, &p.weights)?;
    println!("LQG Hankel singular values {:.5?}", hankel_singular_values(&lqg.g, &lqg.h, &lqg.f)?);

    let prob = RelaxedProblem::new(&p, 4, 1e-8)?;
    let k0 = random_stabilizing_gain(&prob, 1.0, seed)?;
    let every = (iters / 10).max(1);
    let (_, trace) = run(&prob, &k0, &PgmConfig { alpha, max_iters: iters, record_every: every, ..Default::default() })?;
    println!("{:>7}  {:>10}  Hankel singular values", "iter", "J");
    for r in &trace.records {
        let hsv: Vec<String> = r.hsv.iter().map(|v| format!("{v:.3e}")).collect();
        println!("{:>7}  {:>10.5}  {}", r.iter, r.j, hsv.join("  "));
    }
    Ok(())
}
