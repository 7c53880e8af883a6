//! Analytic gradient of the relaxed cost against central differences.
//!
//! cargo run --release --example gradient_check -- [L] [epsilon] [seed]

use iohlqg::commands::{gradient_check, relative_gradient_error, GRADCHECK_STEP};
use iohlqg::pgm::random_stabilizing_gain;
use iohlqg::{benchmark, RelaxedProblem};

fn main() -> iohlqg::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().map_or(3, |s| s.parse().expect("L"));
    let eps: f64 = args.next().map_or(1e-8, |s| s.parse().expect("epsilon"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));

    let prob = RelaxedProblem::new(&benchmark::problem(), l, eps)?;
    let gain = random_stabilizing_gain(&prob, 1.0, seed)?;
    let (an, fd) = gradient_check(&prob, &gain, GRADCHECK_STEP)?;
    let inf = an.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("{:>5}  {:>14}  {:>14}  {:>9}", "entry", "analytic", "central diff", "rel err");
    for (i, (a, f)) in an.iter().zip(&fd).enumerate() {
        println!("{i:>5}  {a:>14.6e}  {f:>14.6e}  {:>9.2e}", relative_gradient_error(*a, *f, inf));
    }
    let cert = prob.epsilon_stationarity_cert(&gain)?;
    println!("||grad J|| = {:.4e}, eps ||grad gamma|| = {:.4e}", cert.grad_norm_j, cert.bound);
    Ok(())
}
