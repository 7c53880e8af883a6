//! The CLI subcommands as plain functions returning serializable reports.
//!
//! Every command reads and validates all of its inputs before it creates
//! any output file, so a failed command leaves no partial results.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::engine::{cost_of_dyn_controller, RelaxedProblem};
use crate::error::{Error, Result};
use crate::ioh::{lift_controller, realize_controller, IohGain};
use crate::linalg::{balanced_truncation, frequency_response, log_frequency_grid, Vector};
use crate::pgm::{multi_seed_study, random_stabilizing_gain, PgmConfig};
use crate::plant::{lqg_baseline, DynController, Problem};
use crate::simulate::{self, CostEstimate, SimConfig};

/// Tolerance on the relative gradient error reported by [`cmd_gradcheck`].
pub const GRADCHECK_TOL: f64 = 1e-5;
/// Central-difference step used by [`cmd_gradcheck`].
pub const GRADCHECK_STEP: f64 = 1e-6;

pub fn load_problem(path: &Path) -> Result<Problem> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read problem file {}: {e}", path.display())))?;
    Problem::from_json(&text)
}

pub fn load_controller(path: &Path) -> Result<DynController> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read controller file {}: {e}", path.display())))?;
    DynController::from_json(&text)
}

pub fn load_gain(path: &Path) -> Result<IohGain> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read gain file {}: {e}", path.display())))?;
    IohGain::from_json(&text)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

// ---- synth ---------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub plant: PathBuf,
    pub l: usize,
    pub config: PgmConfig,
    pub seeds: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_j_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_grad_norm: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub descent_violations: usize,
    pub coercivity_violations: usize,
    pub backoffs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthSummary {
    #[serde(rename = "L")]
    pub l: usize,
    pub alpha: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub baseline_j: f64,
    /// Best final cost over the seeds that finished.
    pub final_j: Option<f64>,
    /// `(final_j - baseline_j) / baseline_j`.
    pub gap: Option<f64>,
    pub runs: Vec<SeedSummary>,
}

/// Runs the gradient loop from `seeds` random stabilizing gains and writes,
/// per seed, `trace_seed<S>.csv`, `gain_seed<S>.json` and
/// `controller_seed<S>.json`, plus `summary.json`.
pub fn cmd_synth(args: &SynthArgs) -> Result<SynthSummary> {
    let problem = load_problem(&args.plant)?;
    args.config.validate()?;
    if args.seeds == 0 {
        return Err(Error::InvalidInput("--seeds must be at least 1".into()));
    }
    let prob = RelaxedProblem::new(&problem, args.l, args.config.epsilon)?;
    let lqg = lqg_baseline(&problem.plant, &problem.noise, &problem.weights)?;
    let baseline_j = cost_of_dyn_controller(&problem.plant, &problem.noise, &problem.weights, &lqg)?;
    let runs = multi_seed_study(&prob, args.seeds, &args.config)?;

    let hsv_columns = args.l * problem.plant.nu();
    let mut summaries = Vec::with_capacity(runs.len());
    let mut outputs: Vec<(PathBuf, String)> = Vec::new();
    for run in &runs {
        let s = run.seed;
        match &run.outcome {
            Ok((gain, trace)) => {
                let last = trace.last().expect("trace has the initial record");
                let ctl = realize_controller(gain, &Vector::zeros(gain.k.ncols()))?;
                let mut csv = Vec::new();
                trace.write_csv(&mut csv, hsv_columns)?;
                outputs.push((args.out.join(format!("trace_seed{s}.csv")), String::from_utf8(csv).expect("ascii")));
                outputs.push((args.out.join(format!("gain_seed{s}.json")), gain.to_json()?));
                outputs.push((args.out.join(format!("controller_seed{s}.json")), ctl.to_json()?));
                summaries.push(SeedSummary {
                    seed: s,
                    final_j: Some(last.j),
                    final_j_eps: Some(last.j_eps),
                    gap: Some((last.j - baseline_j) / baseline_j),
                    final_grad_norm: Some(last.grad_norm),
                    iterations: trace.iterations,
                    converged: trace.converged,
                    descent_violations: trace.descent_violations,
                    coercivity_violations: trace.coercivity_violations,
                    backoffs: trace.backoffs.len(),
                    error: None,
                });
            }
            Err(e) => summaries.push(SeedSummary {
                seed: s,
                final_j: None,
                final_j_eps: None,
                gap: None,
                final_grad_norm: None,
                iterations: 0,
                converged: false,
                descent_violations: 0,
                coercivity_violations: 0,
                backoffs: 0,
                error: Some(e.to_string()),
            }),
        }
    }
    let final_j = summaries.iter().filter_map(|s| s.final_j).reduce(f64::min);
    let summary = SynthSummary {
        l: args.l,
        alpha: args.config.alpha,
        epsilon: args.config.epsilon,
        max_iters: args.config.max_iters,
        baseline_j,
        final_j,
        gap: final_j.map(|j| (j - baseline_j) / baseline_j),
        runs: summaries,
    };
    if summary.final_j.is_none() {
        return Err(Error::SolverFailure(format!(
            "every run failed; first error: {}",
            summary.runs[0].error.as_deref().unwrap_or("unknown")
        )));
    }
    for (path, text) in &outputs {
        write_text(path, text)?;
    }
    write_text(&args.out.join("summary.json"), &to_json(&summary)?)?;
    Ok(summary)
}

// ---- baseline ------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BaselineArgs {
    pub plant: PathBuf,
    pub order: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineSummary {
    pub lqg_cost: f64,
    pub lqg_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_cost: Option<f64>,
    pub hankel_singular_values: Vec<f64>,
}

/// Riccati-optimal controller, its cost, and optionally its balanced
/// truncation. Writes `lqg_controller.json`, `reduced_controller.json` and
/// `baseline.json` when an output directory is given.
pub fn cmd_baseline(args: &BaselineArgs) -> Result<BaselineSummary> {
    let p = load_problem(&args.plant)?;
    let lqg = lqg_baseline(&p.plant, &p.noise, &p.weights)?;
    let lqg_cost = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &lqg)?;
    let hsv = crate::linalg::hankel_singular_values(&lqg.g, &lqg.h, &lqg.f)?;
    let reduced = match args.order {
        Some(r) => {
            let red = balanced_truncation(&lqg.g, &lqg.h, &lqg.f, r)?;
            let ctl = DynController::new(red.a, red.b, red.c)?;
            let cost = cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &ctl)?;
            Some((ctl, cost))
        }
        None => None,
    };
    let summary = BaselineSummary {
        lqg_cost,
        lqg_order: lqg.order(),
        reduced_order: args.order,
        reduced_cost: reduced.as_ref().map(|(_, c)| *c),
        hankel_singular_values: hsv,
    };
    if let Some(dir) = &args.out {
        write_text(&dir.join("lqg_controller.json"), &lqg.to_json()?)?;
        if let Some((ctl, _)) = &reduced {
            write_text(&dir.join("reduced_controller.json"), &ctl.to_json()?)?;
        }
        write_text(&dir.join("baseline.json"), &to_json(&summary)?)?;
    }
    Ok(summary)
}

// ---- gradcheck -----------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GradcheckArgs {
    pub plant: PathBuf,
    pub l: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Check at this gain instead of a random one.
    pub gain: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub gain_norm: f64,
    pub grad_norm: f64,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub passed: bool,
    pub analytic: Vec<f64>,
    pub finite_difference: Vec<f64>,
}

/// Relative error of one gradient entry: `|fd - g| / max(|g|, |fd|, 1e-3 ||g||_inf)`,
/// and 0 when both are exactly zero.
pub fn relative_gradient_error(analytic: f64, fd: f64, grad_inf_norm: f64) -> f64 {
    let diff = (fd - analytic).abs();
    let scale = analytic.abs().max(fd.abs()).max(1e-3 * grad_inf_norm);
    if diff == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        diff / scale
    }
}

/// Analytic gradient of `J_eps` against central differences on every entry.
pub fn gradient_check(prob: &RelaxedProblem, gain: &IohGain, step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let grad = prob.gradient(gain)?;
    let mut fd = Vec::with_capacity(grad.len());
    for j in 0..gain.k.ncols() {
        for i in 0..gain.k.nrows() {
            let mut plus = gain.clone();
            plus.k[(i, j)] += step;
            let mut minus = gain.clone();
            minus.k[(i, j)] -= step;
            let jp = prob.cost(&plus)?.j_eps;
            let jm = prob.cost(&minus)?.j_eps;
            fd.push((jp - jm) / (2.0 * step));
        }
    }
    Ok((grad.iter().copied().collect(), fd))
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<GradcheckReport> {
    let p = load_problem(&args.plant)?;
    let prob = RelaxedProblem::new(&p, args.l, args.epsilon)?;
    let gain = match &args.gain {
        Some(path) => {
            let g = load_gain(path)?;
            if !prob.is_stabilizing(&g) {
                let (_, rho) = prob.theta_closed(&g)?;
                return Err(Error::UnboundedCost { rho });
            }
            g
        }
        None => random_stabilizing_gain(&prob, 1.0, args.seed)?,
    };
    let (analytic, fd) = gradient_check(&prob, &gain, GRADCHECK_STEP)?;
    let inf = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for (g, f) in analytic.iter().zip(&fd) {
        max_abs = max_abs.max((g - f).abs());
        max_rel = max_rel.max(relative_gradient_error(*g, *f, inf));
    }
    Ok(GradcheckReport {
        seed: args.seed,
        gain_norm: gain.norm(),
        grad_norm: analytic.iter().map(|v| v * v).sum::<f64>().sqrt(),
        max_abs_error: max_abs,
        max_rel_error: max_rel,
        passed: max_rel <= GRADCHECK_TOL,
        analytic,
        finite_difference: fd,
    })
}

// ---- bode ----------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BodeArgs {
    /// Dynamic controller JSON, or an IOH gain JSON when `is_gain` is set.
    pub controller: PathBuf,
    pub is_gain: bool,
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
    pub out: PathBuf,
}

/// Frequency response on a log grid: one row per frequency, with columns
/// `omega` and, for every output `i` and input `j`, `mag_db_i_j` and
/// `phase_deg_i_j` (phase unwrapped along the grid).
pub struct BodeTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl BodeTable {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Magnitude columns (dB) for every row.
    pub fn magnitudes(&self) -> Vec<Vec<f64>> {
        let idx: Vec<usize> =
            self.header.iter().enumerate().filter(|(_, h)| h.starts_with("mag_db")).map(|(i, _)| i).collect();
        self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect()
    }
}

pub fn bode_table(ctl: &DynController, omegas: &[f64]) -> Result<BodeTable> {
    let (p, m) = (ctl.f.nrows(), ctl.h.ncols());
    let mut header = vec!["omega".to_string()];
    for i in 1..=p {
        for j in 1..=m {
            header.push(format!("mag_db_{i}_{j}"));
            header.push(format!("phase_deg_{i}_{j}"));
        }
    }
    let mut rows = Vec::with_capacity(omegas.len());
    let mut prev_phase: Option<Vec<f64>> = None;
    for &w in omegas {
        let g = frequency_response(&ctl.g, &ctl.h, &ctl.f, None, w)?;
        let mut row = vec![w];
        let mut phases = Vec::with_capacity(p * m);
        for i in 0..p {
            for j in 0..m {
                let z = g[(i, j)];
                let mut ph = z.arg().to_degrees();
                if let Some(prev) = &prev_phase {
                    let last = prev[phases.len()];
                    ph += 360.0 * ((last - ph) / 360.0).round();
                }
                row.push(20.0 * z.norm().log10());
                row.push(ph);
                phases.push(ph);
            }
        }
        prev_phase = Some(phases);
        rows.push(row);
    }
    Ok(BodeTable { header, rows })
}

pub fn cmd_bode(args: &BodeArgs) -> Result<BodeTable> {
    let ctl = if args.is_gain {
        let gain = load_gain(&args.controller)?;
        realize_controller(&gain, &Vector::zeros(gain.k.ncols()))?
    } else {
        load_controller(&args.controller)?
    };
    if args.points == 0 {
        return Err(Error::InvalidInput("--points must be at least 1".into()));
    }
    if !(args.lo > 0.0 && args.hi >= args.lo) {
        return Err(Error::InvalidInput("frequency grid needs 0 < lo <= hi".into()));
    }
    let table = bode_table(&ctl, &log_frequency_grid(args.lo, args.hi, args.points))?;
    write_text(&args.out, &table.to_csv())?;
    Ok(table)
}

// ---- simulate ------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub plant: PathBuf,
    /// Dynamic controller to simulate; the LQG baseline when neither this nor `gain` is set.
    pub controller: Option<PathBuf>,
    /// IOH gain simulated on the history loop at its own `L`.
    pub gain: Option<PathBuf>,
    pub sim: SimConfig,
    pub check: bool,
    pub out: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub estimate: CostEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_passed: Option<bool>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateReport> {
    let p = load_problem(&args.plant)?;
    args.sim.validate()?;
    if args.controller.is_some() && args.gain.is_some() {
        return Err(Error::InvalidInput("give either a controller or a gain, not both".into()));
    }
    let (estimate, analytic, traj_ctl) = if let Some(path) = &args.gain {
        let gain = load_gain(path)?;
        let prob = RelaxedProblem::new(&p, gain.l, 0.0)?;
        let analytic = if args.check { Some(prob.cost(&gain)?.j) } else { None };
        let est = simulate::estimate_cost_ioh(&prob, &gain, &args.sim, false)?;
        (est, analytic, realize_controller(&gain, &Vector::zeros(gain.k.ncols()))?)
    } else {
        let ctl = match &args.controller {
            Some(path) => load_controller(path)?,
            None => lqg_baseline(&p.plant, &p.noise, &p.weights)?,
        };
        let analytic = if args.check {
            Some(cost_of_dyn_controller(&p.plant, &p.noise, &p.weights, &ctl)?)
        } else {
            None
        };
        let est = simulate::estimate_cost_dyn(&p.plant, &p.noise, &p.weights, &ctl, &args.sim)?;
        (est, analytic, ctl)
    };
    let z_score = analytic.map(|a| {
        let d = (estimate.mean - a).abs();
        if d == 0.0 {
            0.0
        } else {
            d / estimate.std_err
        }
    });
    let report = SimulateReport { estimate, analytic, z_score, check_passed: z_score.map(|z| z <= 3.0) };
    if let Some(path) = &args.trajectory {
        let tr = simulate::dyn_trajectory(&p.plant, &p.noise, &traj_ctl, args.sim.horizon, args.sim.seed)?;
        let mut buf = Vec::new();
        tr.write_csv(&mut buf)?;
        write_text(path, std::str::from_utf8(&buf).expect("ascii"))?;
    }
    if let Some(path) = &args.out {
        write_text(path, &to_json(&report)?)?;
    }
    Ok(report)
}

/// Lifts the LQG baseline to history length `l` (when it is liftable there).
pub fn lifted_baseline(problem: &Problem, l: usize) -> Result<IohGain> {
    let lqg = lqg_baseline(&problem.plant, &problem.noise, &problem.weights)?;
    lift_controller(&lqg, l)
}
