//! History lift of the plant and of the LQG controller, and back.
//!
//! cargo run --release --example ioh_lift -- [L]

use iohlqg::engine::cost_of_dyn_controller;
use iohlqg::linalg::{frequency_response, log_frequency_grid, mat_to_rows, Vector};
use iohlqg::{benchmark, build_history_system, lift_controller, lqg_baseline, realize_controller, RelaxedProblem};

fn main() -> iohlqg::Result<()> {
    let l: usize = std::env::args().nth(1).map_or(3, |s| s.parse().expect("L must be an integer"));
    let p = benchmark::problem();
    let sys = build_history_system(&p.plant, l)?;
    let d = sys.dims;
    println!("L = {l}: z has {} entries, e has {}, h has {}", d.nz(), d.ne(), d.nh());

    let lqg = lqg_baseline(&p.plant, &p.noise, &p.weights)?;
    let gain = match lift_controller(&lqg, l) {
        Ok(g) => g,
        Err(e) => {
            println!("cannot lift the LQG controller at this length: {e}");
            return Ok(());
        }
    };
    for lag in 1..=l {
        println!(
            "lag {lag}: input tap {:.4?}  output tap {:.4?}",
            mat_to_rows(&gain.input_tap(lag)),
            mat_to_rows(&gain.output_tap(lag))
        );
    }

    let prob = RelaxedProblem::from_parts(sys, p.noise.clone(), p.weights.clone(), 0.0, Default::default())?;
    let lifted = prob.cost(&gain)?.j;
    let direct = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &lqg)?;
    println!("cost of the history gain {lifted:.9}, of the dynamic controller {direct:.9}");

    // realized controller has order L n_u; compare transfer functions
    let back = realize_controller(&gain, &Vector::zeros(gain.k.ncols()))?;
    let worst = log_frequency_grid(1e-3, std::f64::consts::PI, 50)
        .into_iter()
        .map(|w| {
            let a = frequency_response(&lqg.g, &lqg.h, &lqg.f, None, w).unwrap();
            let b = frequency_response(&back.g, &back.h, &back.f, None, w).unwrap();
            (a - b).norm()
        })
        .fold(0.0, f64::max);
    println!("realized order {}, worst frequency-response gap {worst:.2e}", back.order());
    Ok(())
}
