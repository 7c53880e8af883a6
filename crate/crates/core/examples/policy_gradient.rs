//! Gradient descent on history gains from random stabilizing starts.
//!
//! cargo run --release --example policy_gradient -- [L] [alpha] [iters] [seeds] [trace.csv]
//!
//! With a trace path, the first seed's trace is written there as CSV.

use std::fs::File;

use iohlqg::commands::lifted_baseline;
use iohlqg::pgm::{multi_seed_study, PgmConfig};
use iohlqg::{benchmark, RelaxedProblem};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).map_or(default, |s| s.parse().ok().expect("bad argument"))
}

fn main() -> iohlqg::Result<()> {
    let l: usize = arg(1, 3);
    let alpha: f64 = arg(2, 1.9e-4);
    let iters: usize = arg(3, 20_000);
    let seeds: usize = arg(4, 4);
    let p = benchmark::problem();
    let prob = RelaxedProblem::new(&p, l, 1e-8)?;
    let config = PgmConfig { alpha, max_iters: iters, record_every: 500, ..Default::default() };

    let reference = match lifted_baseline(&p, l) {
        Ok(k) => Some(prob.cost(&k)?.j),
        Err(_) => None,
    };
    if let Some(r) = reference {
        println!("lifted LQG cost {r:.6}");
    }
    let runs = multi_seed_study(&prob, seeds, &config)?;
    println!("seed  iters  converged  J_start      J_final      grad_norm  increases  halvings");
    for run in &runs {
        match &run.outcome {
            Ok((_, t)) => {
                let (first, last) = (&t.records[0], t.last().unwrap());
                println!(
                    "{:>4}  {:>5}  {:>9}  {:>11.4}  {:>11.6}  {:>9.2e}  {:>9}  {:>8}",
                    run.seed,
                    t.iterations,
                    t.converged,
                    first.j,
                    last.j,
                    last.grad_norm,
                    t.descent_violations,
                    t.backoffs.len()
                );
            }
            Err(e) => println!("{:>4}  failed: {e}", run.seed),
        }
    }
    if let (Some(path), Some(Ok((_, t)))) = (std::env::args().nth(5), runs.first().map(|r| &r.outcome)) {
        t.write_csv(File::create(&path)?, l)?;
        println!("trace written to {path}");
    }
    Ok(())
}
