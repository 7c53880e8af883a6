use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iohlqg::commands::{self, BaselineArgs, BodeArgs, GradcheckArgs, SimulateArgs, SynthArgs};
use iohlqg::pgm::PgmConfig;
use iohlqg::simulate::SimConfig;

#[derive(Parser)]
#[command(name = "iohlqg", version, about = "LQG synthesis by policy gradient over input-output-history gains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the policy-gradient loop from random stabilizing gains.
    Synth {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long = "L", default_value_t = 3)]
        l: usize,
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-8)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        iters: usize,
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        grad_tol: f64,
        #[arg(long, default_value_t = 100)]
        record_every: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Riccati-optimal controller and, with --order, its balanced truncation.
    Baseline {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the analytic gradient with central differences.
    Gradcheck {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long = "L", default_value_t = 3)]
        l: usize,
        #[arg(long, default_value_t = 1e-8)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        gain: Option<PathBuf>,
    },
    /// Frequency response of a controller on a log grid over [lo, hi] rad/sample.
    Bode {
        /// Dynamic controller JSON.
        #[arg(long, required_unless_present = "gain", conflicts_with = "gain")]
        controller: Option<PathBuf>,
        /// IOH gain JSON, realized with zero initial history.
        #[arg(long)]
        gain: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        lo: f64,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        hi: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo cost estimate, optionally checked against the analytic cost.
    Simulate {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        #[arg(long, conflicts_with = "controller")]
        gain: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
        #[arg(long, default_value_t = 20)]
        rollouts: usize,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> iohlqg::Result<bool> {
    match cli.cmd {
        Cmd::Synth { plant, l, alpha, epsilon, iters, seeds, seed, grad_tol, record_every, out } => {
            let config = PgmConfig { alpha, epsilon, max_iters: iters, grad_tol, record_every, seed, ..Default::default() };
            let s = commands::cmd_synth(&SynthArgs { plant, l, config, seeds, out })?;
            for r in s.runs.iter().filter(|r| r.backoffs > 0) {
                eprintln!("seed {}: step size halved on {} iterations", r.seed, r.backoffs);
            }
            println!("{}", commands::to_json(&s)?);
            Ok(true)
        }
        Cmd::Baseline { plant, order, out } => {
            let s = commands::cmd_baseline(&BaselineArgs { plant, order, out })?;
            println!("{}", commands::to_json(&s)?);
            Ok(true)
        }
        Cmd::Gradcheck { plant, l, epsilon, seed, gain } => {
            let r = commands::cmd_gradcheck(&GradcheckArgs { plant, l, epsilon, seed, gain })?;
            println!("{}", commands::to_json(&r)?);
            println!("max relative error {:e} (tolerance {:e})", r.max_rel_error, commands::GRADCHECK_TOL);
            Ok(r.passed)
        }
        Cmd::Bode { controller, gain, points, lo, hi, out } => {
            let (path, is_gain) = match (controller, gain) {
                (Some(c), _) => (c, false),
                (None, Some(g)) => (g, true),
                (None, None) => unreachable!("clap enforces one of the two"),
            };
            let t = commands::cmd_bode(&BodeArgs { controller: path, is_gain, points, lo, hi, out })?;
            eprintln!("wrote {} frequencies", t.rows.len());
            Ok(true)
        }
        Cmd::Simulate { plant, controller, gain, horizon, rollouts, burn_in, seed, check, out, trajectory } => {
            let mut sim = SimConfig::new(horizon, rollouts, seed);
            if let Some(b) = burn_in {
                sim.burn_in = b;
            }
            let r = commands::cmd_simulate(&SimulateArgs { plant, controller, gain, sim, check, out, trajectory })?;
            println!("{}", commands::to_json(&r)?);
            Ok(r.check_passed.unwrap_or(true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
