//! Analytic cost and gradient of IOH gains on the relaxed problem.
//!
//! With `Theta_K = Theta + Pi_u K Gamma` and `V_h = Pi_d V_d Pi_d^T + eps I`,
//!
//! ```text
//! Theta_K^T Phi Theta_K - Phi + Psi^T Q Psi + Gamma^T K^T R K Gamma = 0
//! Theta_K Y Theta_K^T - Y + V_h = 0
//! J_eps(K) = tr(Phi V_h) + tr(Q V_v)
//! grad J_eps(K) = 2 ((Pi_u^T Phi Pi_u + R) K Gamma + Pi_u^T Phi Theta) Y Gamma^T
//! ```
//!
//! `J` is the same expression at `eps = 0`, and `gamma_K = tr(Phi)`, so
//! `J_eps = J + eps * gamma_K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ioh::{build_history_system_with, HistorySystem, IohGain};
use crate::linalg::{
    min_sym_eigenvalue, solve_dlyap_pair, solve_dlyap_transpose_with, solve_dlyap_with, spectral_radius,
    Mat, SolverTolerances,
};
use crate::plant::{closed_loop, CostWeights, DynController, NoiseSpec, Plant, Problem};

#[derive(Debug, Clone)]
pub struct RelaxedProblem {
    pub sys: HistorySystem,
    pub noise: NoiseSpec,
    pub weights: CostWeights,
    pub epsilon: f64,
    pub tol: SolverTolerances,
    noise_cov: Mat,
    output_weight: Mat,
    const_term: f64,
}

impl RelaxedProblem {
    pub fn new(problem: &Problem, l: usize, epsilon: f64) -> Result<Self> {
        let tol = SolverTolerances::default();
        let sys = build_history_system_with(&problem.plant, l, &tol)?;
        Self::from_parts(sys, problem.noise.clone(), problem.weights.clone(), epsilon, tol)
    }

    pub fn from_parts(
        sys: HistorySystem,
        noise: NoiseSpec,
        weights: CostWeights,
        epsilon: f64,
        tol: SolverTolerances,
    ) -> Result<Self> {
        tol.validate()?;
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        let d = &sys.dims;
        if noise.vw.nrows() != d.nw || noise.vv.nrows() != d.nv {
            return Err(Error::Dimension("noise covariances do not match the history system".into()));
        }
        if weights.q.nrows() != d.ny || weights.r.nrows() != d.nu {
            return Err(Error::Dimension("cost weights do not match the history system".into()));
        }
        let noise_cov = crate::linalg::symmetrize(&(&sys.pi_d * noise.vd() * sys.pi_d.transpose()));
        let output_weight = crate::linalg::symmetrize(&(sys.psi.transpose() * &weights.q * &sys.psi));
        let const_term = (&weights.q * &noise.vv).trace();
        Ok(Self { sys, noise, weights, epsilon, tol, noise_cov, output_weight, const_term })
    }

    /// Same problem with a different relaxation level.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::from_parts(self.sys.clone(), self.noise.clone(), self.weights.clone(), epsilon, self.tol)
    }

    /// `tr(Q V_v)`, the cost the measurement noise contributes directly.
    pub fn const_term(&self) -> f64 {
        self.const_term
    }

    /// `Pi_d V_d Pi_d^T` (without the `eps I` term).
    pub fn history_noise_cov(&self) -> &Mat {
        &self.noise_cov
    }

    pub fn relaxed_noise_cov(&self) -> Mat {
        let n = self.sys.dims.nh();
        &self.noise_cov + Mat::identity(n, n) * self.epsilon
    }

    pub fn theta_closed(&self, gain: &IohGain) -> Result<(Mat, f64)> {
        let t = self.sys.closed_theta(gain)?;
        let rho = spectral_radius(&t);
        Ok((t, rho))
    }

    pub fn is_stabilizing(&self, gain: &IohGain) -> bool {
        match self.theta_closed(gain) {
            Ok((_, rho)) => rho < self.tol.stability_limit(),
            Err(_) => false,
        }
    }

    fn stage_weight(&self, gain: &IohGain) -> Mat {
        let mut w = self.output_weight.clone();
        let nz = self.sys.dims.nz();
        let kk = gain.k.transpose() * &self.weights.r * &gain.k;
        let mut zz = w.view_mut((0, 0), (nz, nz));
        zz += kk;
        w
    }

    fn stable_theta(&self, gain: &IohGain) -> Result<(Mat, f64)> {
        let (t, rho) = self.theta_closed(gain)?;
        if rho < self.tol.stability_limit() {
            Ok((t, rho))
        } else {
            Err(Error::UnboundedCost { rho })
        }
    }

    fn report_from_phi(&self, phi: &Mat) -> CostReport {
        let base = (phi * &self.noise_cov).trace() + self.const_term;
        let gamma = phi.trace();
        CostReport {
            j: base,
            j_eps: base + self.epsilon * gamma,
            gamma_k: gamma,
            const_term: self.const_term,
            stable: true,
        }
    }

    pub fn cost(&self, gain: &IohGain) -> Result<CostReport> {
        let (t, _) = self.stable_theta(gain)?;
        let phi = solve_dlyap_transpose_with(&t, &self.stage_weight(gain), &self.tol)?;
        Ok(self.report_from_phi(&phi))
    }

    /// Cost, gradient and spectral radius from one pair of Lyapunov solves.
    pub fn evaluate(&self, gain: &IohGain) -> Result<Evaluation> {
        let (t, rho) = self.stable_theta(gain)?;
        let (phi, y) = solve_dlyap_pair(&t, &self.stage_weight(gain), &self.relaxed_noise_cov(), &self.tol)?;
        let grad = self.gradient_from(gain, &phi, &y);
        Ok(Evaluation { report: self.report_from_phi(&phi), grad, rho })
    }

    pub fn gradient(&self, gain: &IohGain) -> Result<Mat> {
        Ok(self.evaluate(gain)?.grad)
    }

    // 2 W Y Gamma^T with W = (Pi_u^T Phi Pi_u + R) K Gamma + Pi_u^T Phi Theta
    fn gradient_from(&self, gain: &IohGain, phi: &Mat, y: &Mat) -> Mat {
        let sys = &self.sys;
        let nz = sys.dims.nz();
        let pu_phi = sys.pi_u.transpose() * phi;
        let mut w = &pu_phi * &sys.theta;
        let lead = (&pu_phi * &sys.pi_u + &self.weights.r) * &gain.k;
        let mut wz = w.columns_mut(0, nz);
        wz += lead;
        (w * y.columns(0, nz)) * 2.0
    }

    /// `sigma_min(R) * eps * ||K||_F^2`, a lower bound on `J_eps(K)`.
    pub fn coercivity_lower_bound(&self, gain: &IohGain) -> f64 {
        min_sym_eigenvalue(&self.weights.r) * self.epsilon * gain.k.norm_squared()
    }

    /// Gradient of `gamma_K = tr(Phi)`: the gradient formula with `V_h = I`.
    pub fn gamma_gradient(&self, gain: &IohGain) -> Result<Mat> {
        let (t, _) = self.stable_theta(gain)?;
        let n = self.sys.dims.nh();
        let (phi, y) = solve_dlyap_pair(&t, &self.stage_weight(gain), &Mat::identity(n, n), &self.tol)?;
        Ok(self.gradient_from(gain, &phi, &y))
    }

    /// `(||grad J(K)||_F, eps * ||grad gamma_K||_F)`.
    ///
    /// At a stationary point of `J_eps` the two are equal, since there
    /// `grad J = -eps grad gamma_K`.
    pub fn epsilon_stationarity_cert(&self, gain: &IohGain) -> Result<StationarityCert> {
        let exact = self.with_epsilon(0.0)?;
        let grad_norm_j = exact.gradient(gain)?.norm();
        let bound = if self.epsilon == 0.0 { 0.0 } else { self.epsilon * self.gamma_gradient(gain)?.norm() };
        Ok(StationarityCert { grad_norm_j, bound })
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: CostReport,
    pub grad: Mat,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityCert {
    pub grad_norm_j: f64,
    pub bound: f64,
}

impl StationarityCert {
    pub fn holds(&self, slack: f64) -> bool {
        self.grad_norm_j <= self.bound + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "J_eps")]
    pub j_eps: f64,
    #[serde(rename = "gamma_K")]
    pub gamma_k: f64,
    pub const_term: f64,
    pub stable: bool,
}

/// Steady-state cost `lim E[y^T Q y + u^T R u]` of a dynamic controller.
pub fn cost_of_dyn_controller(
    plant: &Plant,
    noise: &NoiseSpec,
    weights: &CostWeights,
    ctl: &DynController,
) -> Result<f64> {
    cost_of_dyn_controller_with(plant, noise, weights, ctl, &SolverTolerances::default())
}

pub fn cost_of_dyn_controller_with(
    plant: &Plant,
    noise: &NoiseSpec,
    weights: &CostWeights,
    ctl: &DynController,
    tol: &SolverTolerances,
) -> Result<f64> {
    noise.check_against(plant)?;
    weights.check_against(plant)?;
    let cl = closed_loop(plant, ctl)?;
    let bv = &cl.b_noise * noise.vd() * cl.b_noise.transpose();
    let sigma = solve_dlyap_with(&cl.a, &bv, tol)?;
    let w = crate::linalg::block_diag(&[&weights.q, &weights.r]);
    // v(t) is independent of [x(t); xi(t)], so the feed-through term separates
    Ok((&w * &cl.c_out * sigma * cl.c_out.transpose()).trace() + (&weights.q * &noise.vv).trace())
}
