//! Fixed-step policy gradient on the relaxed cost `J_eps`.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{Evaluation, RelaxedProblem};
use crate::error::{Error, Result};
use crate::ioh::{realize_controller, IohGain};
use crate::linalg::{hankel_singular_values, spectral_radius, Mat, Vector};

/// Draws tried by [`random_stabilizing_gain`] before giving up.
pub const DRAW_BUDGET: usize = 10_000;

/// Slack allowed in the per-iteration monotonicity check.
pub const DESCENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once `||grad J_eps||_F < grad_tol`.
    pub grad_tol: f64,
    pub record_every: usize,
    pub seed: u64,
    /// Step-size halvings tried on a destabilizing step before aborting.
    pub max_halvings: u32,
}

impl Default for PgmConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            epsilon: 1e-8,
            max_iters: 100_000,
            grad_tol: 1e-9,
            record_every: 100,
            seed: 0,
            max_halvings: 30,
        }
    }
}

impl PgmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("pgm config: {what}")));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgmRecord {
    pub iter: usize,
    pub j: f64,
    pub j_eps: f64,
    pub grad_norm: f64,
    pub rho: f64,
    /// Hankel singular values of the realized controller, descending; empty
    /// when the realization is not stable.
    pub hsv: Vec<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackoffEvent {
    pub iter: usize,
    pub halvings: u32,
    pub alpha_used: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PgmTrace {
    pub records: Vec<PgmRecord>,
    /// Steps taken.
    pub iterations: usize,
    /// Stopped on the gradient tolerance rather than the iteration cap.
    pub converged: bool,
    /// Steps with `J_eps(K_{i+1}) > J_eps(K_i) + DESCENT_SLACK`.
    pub descent_violations: usize,
    pub first_descent_violation: Option<usize>,
    pub max_increase: f64,
    /// Steps where `J_eps(K_{i+1})` fell below the coercivity bound.
    pub coercivity_violations: usize,
    /// Steps whose realized decrease was below `alpha ||g||^2 / 2`.
    pub weak_decrease_steps: usize,
    pub backoffs: Vec<BackoffEvent>,
    /// Every accepted iterate had `rho(Theta_K) < 1`.
    pub all_stable: bool,
}

impl PgmTrace {
    pub fn last(&self) -> Option<&PgmRecord> {
        self.records.last()
    }

    pub fn monotone(&self) -> bool {
        self.descent_violations == 0
    }

    /// CSV with columns `iter,J,J_eps,grad_norm,rho,hsv_1..hsv_n,wall_ms`.
    pub fn write_csv<W: Write>(&self, mut out: W, hsv_columns: usize) -> Result<()> {
        let mut header = String::from("iter,J,J_eps,grad_norm,rho");
        for i in 1..=hsv_columns {
            header.push_str(&format!(",hsv_{i}"));
        }
        header.push_str(",wall_ms");
        writeln!(out, "{header}")?;
        for r in &self.records {
            let mut line = format!("{},{:e},{:e},{:e},{:e}", r.iter, r.j, r.j_eps, r.grad_norm, r.rho);
            for i in 0..hsv_columns {
                match r.hsv.get(i) {
                    Some(v) => line.push_str(&format!(",{v:e}")),
                    None => line.push(','),
                }
            }
            line.push_str(&format!(",{:.3}", r.wall_ms));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Realized decrease of one step next to `alpha ||g||_F^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentCheck {
    pub j_eps_before: f64,
    pub j_eps_after: f64,
    pub alpha_grad_sq: f64,
}

impl DescentCheck {
    pub fn decrease(&self) -> f64 {
        self.j_eps_before - self.j_eps_after
    }

    pub fn monotone(&self) -> bool {
        self.j_eps_after <= self.j_eps_before + DESCENT_SLACK
    }

    /// Decrease of at least `alpha ||g||^2 / 2`.
    pub fn sufficient(&self) -> bool {
        self.decrease() >= 0.5 * self.alpha_grad_sq
    }
}

/// Uniform entries in `[-1, 1]` rescaled to Frobenius norm `norm`, redrawn
/// until the gain stabilizes the history dynamics.
pub fn random_stabilizing_gain(prob: &RelaxedProblem, norm: f64, seed: u64) -> Result<IohGain> {
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidInput(format!("gain norm must be positive, got {norm}")));
    }
    let d = &prob.sys.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..DRAW_BUDGET {
        let k = Mat::from_fn(d.nu, d.nz(), |_, _| rng.random_range(-1.0..=1.0));
        let scale = k.norm();
        if scale == 0.0 {
            continue;
        }
        let gain = IohGain::for_system(&prob.sys, k * (norm / scale))?;
        if prob.is_stabilizing(&gain) {
            return Ok(gain);
        }
    }
    Err(Error::NoStabilizer(DRAW_BUDGET))
}

/// One gradient step `K - alpha grad J_eps(K)` without backoff.
pub fn step(prob: &RelaxedProblem, gain: &IohGain, alpha: f64) -> Result<(IohGain, DescentCheck)> {
    let ev = prob.evaluate(gain)?;
    let next = IohGain::for_system(&prob.sys, &gain.k - &ev.grad * alpha)?;
    let after = match prob.evaluate(&next) {
        Ok(e) => e,
        Err(Error::UnboundedCost { rho }) => return Err(Error::StepDestabilized { rho, halvings: 0 }),
        Err(e) => return Err(e),
    };
    let check = DescentCheck {
        j_eps_before: ev.report.j_eps,
        j_eps_after: after.report.j_eps,
        alpha_grad_sq: alpha * ev.grad.norm_squared(),
    };
    Ok((next, check))
}

/// Hankel singular values of the controller realized from `gain` with zero initial history.
pub fn controller_hsv(gain: &IohGain) -> Vec<f64> {
    let Ok(ctl) = realize_controller(gain, &Vector::zeros(gain.k.ncols())) else {
        return Vec::new();
    };
    if spectral_radius(&ctl.g) >= 1.0 {
        return Vec::new();
    }
    hankel_singular_values(&ctl.g, &ctl.h, &ctl.f).unwrap_or_default()
}

fn record(iter: usize, gain: &IohGain, ev: &Evaluation, start: &Instant) -> PgmRecord {
    PgmRecord {
        iter,
        j: ev.report.j,
        j_eps: ev.report.j_eps,
        grad_norm: ev.grad.norm(),
        rho: ev.rho,
        hsv: controller_hsv(gain),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Runs the gradient loop from `k0` until the gradient tolerance or the
/// iteration cap. A destabilizing step is retried with half the step size,
/// up to `max_halvings` times; each retry is logged in the trace.
pub fn run(prob: &RelaxedProblem, k0: &IohGain, config: &PgmConfig) -> Result<(IohGain, PgmTrace)> {
    config.validate()?;
    let relaxed;
    let prob = if prob.epsilon == config.epsilon {
        prob
    } else {
        relaxed = prob.with_epsilon(config.epsilon)?;
        &relaxed
    };
    let start = Instant::now();
    let mut gain = k0.clone();
    let mut ev = prob.evaluate(&gain)?;
    let mut trace = PgmTrace { all_stable: true, ..Default::default() };
    trace.records.push(record(0, &gain, &ev, &start));

    for i in 0..config.max_iters {
        if ev.grad.norm() < config.grad_tol {
            trace.converged = true;
            break;
        }
        let mut alpha = config.alpha;
        let mut halvings = 0;
        let (next, next_ev) = loop {
            let cand = IohGain::for_system(&prob.sys, &gain.k - &ev.grad * alpha)?;
            match prob.evaluate(&cand) {
                Ok(e) => break (cand, e),
                Err(Error::UnboundedCost { rho }) => {
                    if halvings == config.max_halvings {
                        return Err(Error::StepDestabilized { rho, halvings });
                    }
                    halvings += 1;
                    alpha *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        if halvings > 0 {
            trace.backoffs.push(BackoffEvent { iter: i, halvings, alpha_used: alpha });
        }
        let check = DescentCheck {
            j_eps_before: ev.report.j_eps,
            j_eps_after: next_ev.report.j_eps,
            alpha_grad_sq: alpha * ev.grad.norm_squared(),
        };
        if !check.monotone() {
            trace.descent_violations += 1;
            trace.first_descent_violation.get_or_insert(i);
        }
        trace.max_increase = trace.max_increase.max(-check.decrease());
        if !check.sufficient() {
            trace.weak_decrease_steps += 1;
        }
        if next_ev.report.j_eps < prob.coercivity_lower_bound(&next) {
            trace.coercivity_violations += 1;
        }
        trace.all_stable &= next_ev.rho < 1.0;
        gain = next;
        ev = next_ev;
        trace.iterations = i + 1;
        if (i + 1) % config.record_every == 0 {
            trace.records.push(record(i + 1, &gain, &ev, &start));
        }
    }
    if trace.records.last().map(|r| r.iter) != Some(trace.iterations) {
        trace.records.push(record(trace.iterations, &gain, &ev, &start));
    }
    if !trace.converged && ev.grad.norm() < config.grad_tol {
        trace.converged = true;
    }
    Ok((gain, trace))
}

#[derive(Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub outcome: Result<(IohGain, PgmTrace)>,
}

/// Independent runs from unit-norm random stabilizing gains with seeds
/// `config.seed, config.seed + 1, ...`. Results are in seed order; a failing
/// run does not stop the others.
///
/// Runs execute in parallel; set `IOHLQG_THREADS` to cap the thread count.
pub fn multi_seed_study(prob: &RelaxedProblem, n_seeds: usize, config: &PgmConfig) -> Result<Vec<SeedRun>> {
    if n_seeds == 0 {
        return Err(Error::InvalidInput("n_seeds must be at least 1".into()));
    }
    config.validate()?;
    let one = |i: usize| {
        let seed = config.seed + i as u64;
        let cfg = PgmConfig { seed, ..*config };
        let outcome = random_stabilizing_gain(prob, 1.0, seed).and_then(|k0| run(prob, &k0, &cfg));
        SeedRun { seed, outcome }
    };
    let pool = thread_pool()?;
    Ok(pool.install(|| (0..n_seeds).into_par_iter().map(one).collect()))
}

/// Rayon pool honouring `IOHLQG_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("IOHLQG_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("IOHLQG_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))
}
