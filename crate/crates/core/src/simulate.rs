//! Monte-Carlo estimates of the steady-state cost, used as an independent
//! check on the analytic formulas.
//!
//! Noise is drawn with [`ChaCha8Rng`]: rollout `r` of a run with seed `s` uses
//! the generator seeded with `s` on stream `r`, and standard normals come from
//! `rand_distr::StandardNormal` (ziggurat transform of the uniform stream).
//! Gaussian vectors are `V^{1/2} n` with the symmetric square root.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::engine::RelaxedProblem;
use crate::error::{Error, Result};
use crate::ioh::{structured_gain, IohGain};
use crate::linalg::{psd_sqrt, Mat, Vector};
use crate::plant::{CostWeights, DynController, NoiseSpec, Plant};

/// State norm beyond which a rollout counts as diverged.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: usize,
    pub n_rollouts: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Burn-in defaults to a tenth of the horizon.
    pub fn new(horizon: usize, n_rollouts: usize, seed: u64) -> Self {
        Self { horizon, n_rollouts, burn_in: horizon / 10, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rollouts == 0 {
            return Err(Error::InvalidInput("n_rollouts must be at least 1".into()));
        }
        if self.horizon <= self.burn_in {
            return Err(Error::InvalidInput(format!(
                "horizon {} must exceed burn-in {}",
                self.horizon, self.burn_in
            )));
        }
        Ok(())
    }

    fn rng(&self, rollout: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rollout as u64);
        rng
    }
}

/// Mean over rollouts of the per-rollout time average, with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

impl CostEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_err, n_samples: n }
    }

    /// `|mean - value| <= k * std_err`.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_err
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sqrt_cov: &Mat) -> Vector {
    let n = Vector::from_fn(sqrt_cov.ncols(), |_, _| StandardNormal.sample(rng));
    sqrt_cov * n
}

fn quad(x: &Vector, w: &Mat) -> f64 {
    (x.transpose() * w * x)[(0, 0)]
}

fn run_rollouts<F>(cfg: &SimConfig, one: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let pool = crate::pgm::thread_pool()?;
    pool.install(|| {
        (0..cfg.n_rollouts)
            .into_par_iter()
            .map(|r| one(r, &mut cfg.rng(r)))
            .collect()
    })
}

/// Time-averaged `y^T Q y + u^T R u` of the plant under a dynamic controller.
pub fn estimate_cost_dyn(
    plant: &Plant,
    noise: &NoiseSpec,
    weights: &CostWeights,
    ctl: &DynController,
    cfg: &SimConfig,
) -> Result<CostEstimate> {
    noise.check_against(plant)?;
    weights.check_against(plant)?;
    ctl.check_against(plant)?;
    let sw = psd_sqrt(&noise.vw)?;
    let sv = psd_sqrt(&noise.vv)?;
    let samples = run_rollouts(cfg, |r, rng| {
        let mut x = Vector::zeros(plant.nx());
        let mut xi = ctl.xi0.clone();
        let mut acc = 0.0;
        for t in 0..cfg.horizon {
            let w = gaussian(rng, &sw);
            let v = gaussian(rng, &sv);
            let (x_next, y) = plant.step(&x, &(&ctl.f * &xi), &w, &v);
            let (xi_next, u) = ctl.step(&xi, &y);
            if t >= cfg.burn_in {
                acc += quad(&y, &weights.q) + quad(&u, &weights.r);
            }
            x = x_next;
            xi = xi_next;
            let norm = x.norm().max(xi.norm());
            if !(norm <= DIVERGENCE_GUARD) {
                return Err(Error::RolloutDiverged { rollout: r, step: t, norm });
            }
        }
        Ok(acc / (cfg.horizon - cfg.burn_in) as f64)
    })?;
    Ok(CostEstimate::from_samples(&samples))
}

// Simulates the closed history loop from h = 0 and folds `stage(y, u, h)`
// over [burn_in, horizon) of each rollout.
fn history_rollouts<S>(prob: &RelaxedProblem, gain: &IohGain, cfg: &SimConfig, with_delta: bool, stage: S) -> Result<Vec<Vec<f64>>>
where
    S: Fn(&Vector, &Vector, &Vector) -> Vec<f64> + Sync,
{
    let sys = &prob.sys;
    let theta_k = sys.closed_theta(gain)?;
    let kg = structured_gain(sys, gain)?;
    let sd = psd_sqrt(&prob.noise.vd())?;
    let delta_scale = prob.epsilon.sqrt();
    let nh = sys.dims.nh();
    cfg.validate()?;
    let pool = crate::pgm::thread_pool()?;
    pool.install(|| {
        (0..cfg.n_rollouts)
            .into_par_iter()
            .map(|r| {
                let mut rng = cfg.rng(r);
                let mut h = Vector::zeros(nh);
                let mut acc: Vec<f64> = Vec::new();
                for t in 0..cfg.horizon {
                    let d = gaussian(&mut rng, &sd);
                    let y = &sys.psi * &h + &sys.upsilon * &d;
                    let u = &kg * &h;
                    if t >= cfg.burn_in {
                        let s = stage(&y, &u, &h);
                        if acc.is_empty() {
                            acc = vec![0.0; s.len()];
                        }
                        for (a, v) in acc.iter_mut().zip(s) {
                            *a += v;
                        }
                    }
                    let mut next = &theta_k * &h + &sys.pi_d * &d;
                    if with_delta {
                        next += Vector::from_fn(nh, |_, _| StandardNormal.sample(&mut rng)) * delta_scale;
                    }
                    h = next;
                    let norm = h.norm();
                    if !(norm <= DIVERGENCE_GUARD) {
                        return Err(Error::RolloutDiverged { rollout: r, step: t, norm });
                    }
                }
                let len = (cfg.horizon - cfg.burn_in) as f64;
                Ok(acc.into_iter().map(|a| a / len).collect())
            })
            .collect()
    })
}

/// Time-averaged stage cost of the history loop, optionally driven by the
/// extra isotropic noise of covariance `eps I`.
pub fn estimate_cost_ioh(prob: &RelaxedProblem, gain: &IohGain, cfg: &SimConfig, with_delta: bool) -> Result<CostEstimate> {
    let (q, r) = (&prob.weights.q, &prob.weights.r);
    let per = history_rollouts(prob, gain, cfg, with_delta, |y, u, _| vec![quad(y, q) + quad(u, r)])?;
    let samples: Vec<f64> = per.iter().map(|v| v[0]).collect();
    Ok(CostEstimate::from_samples(&samples))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCostCheck {
    /// Average of `y^T Q y + u^T R u`.
    pub lhs: CostEstimate,
    /// Average of `z^T S z / L` with `S = diag(I_L (x) R, I_L (x) Q)`.
    pub rhs: CostEstimate,
    /// Standard error of the per-rollout difference.
    pub diff_std_err: f64,
}

impl BlockCostCheck {
    pub fn combined_std_err(&self) -> f64 {
        self.lhs.std_err.hypot(self.rhs.std_err)
    }

    pub fn passes(&self, k: f64) -> bool {
        (self.lhs.mean - self.rhs.mean).abs() <= k * self.combined_std_err()
    }
}

/// Compares the stage cost with the history-window cost along the same trajectories.
pub fn block_cost_identity_check(prob: &RelaxedProblem, gain: &IohGain, cfg: &SimConfig) -> Result<BlockCostCheck> {
    let d = prob.sys.dims;
    let (q, r) = (&prob.weights.q, &prob.weights.r);
    let mut s = Mat::zeros(d.nz(), d.nz());
    for i in 0..d.l {
        s.view_mut((i * d.nu, i * d.nu), (d.nu, d.nu)).copy_from(r);
        let o = d.l * d.nu + i * d.ny;
        s.view_mut((o, o), (d.ny, d.ny)).copy_from(q);
    }
    let nz = d.nz();
    let per = history_rollouts(prob, gain, cfg, false, |y, u, h| {
        let z = h.rows(0, nz).into_owned();
        vec![quad(y, q) + quad(u, r), quad(&z, &s) / d.l as f64]
    })?;
    let lhs: Vec<f64> = per.iter().map(|v| v[0]).collect();
    let rhs: Vec<f64> = per.iter().map(|v| v[1]).collect();
    let diff: Vec<f64> = per.iter().map(|v| v[0] - v[1]).collect();
    Ok(BlockCostCheck {
        lhs: CostEstimate::from_samples(&lhs),
        rhs: CostEstimate::from_samples(&rhs),
        diff_std_err: CostEstimate::from_samples(&diff).std_err,
    })
}

/// One noisy closed-loop trajectory of plant and dynamic controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub y: Vec<Vector>,
    pub u: Vec<Vector>,
}

pub fn dyn_trajectory(plant: &Plant, noise: &NoiseSpec, ctl: &DynController, horizon: usize, seed: u64) -> Result<Trajectory> {
    noise.check_against(plant)?;
    ctl.check_against(plant)?;
    let sw = psd_sqrt(&noise.vw)?;
    let sv = psd_sqrt(&noise.vv)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vector::zeros(plant.nx());
    let mut xi = ctl.xi0.clone();
    let mut out = Trajectory { y: Vec::with_capacity(horizon), u: Vec::with_capacity(horizon) };
    for _ in 0..horizon {
        let w = gaussian(&mut rng, &sw);
        let v = gaussian(&mut rng, &sv);
        let (x_next, y) = plant.step(&x, &(&ctl.f * &xi), &w, &v);
        let (xi_next, u) = ctl.step(&xi, &y);
        out.y.push(y);
        out.u.push(u);
        x = x_next;
        xi = xi_next;
    }
    Ok(out)
}

impl Trajectory {
    /// CSV with columns `t,y_1..y_p,u_1..u_m`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let p = self.y.first().map_or(0, |v| v.len());
        let m = self.u.first().map_or(0, |v| v.len());
        let mut header = String::from("t");
        for i in 1..=p {
            header.push_str(&format!(",y_{i}"));
        }
        for i in 1..=m {
            header.push_str(&format!(",u_{i}"));
        }
        writeln!(out, "{header}")?;
        for (t, (y, u)) in self.y.iter().zip(&self.u).enumerate() {
            let mut line = t.to_string();
            for v in y.iter().chain(u.iter()) {
                line.push_str(&format!(",{v:e}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}
