//! Discrete algebraic Riccati equation via the structured doubling algorithm.

use super::{ensure_schur_stable, ensure_square, symmetrize, Mat, SolverTolerances};
use crate::error::{Error, Result};

const MAX_ITERS: usize = 10_000;
const STEP_TOL: f64 = 1e-12;

/// Stabilizing solution `P` of
/// `A^T P A - P - A^T P B (R + B^T P B)^{-1} B^T P A + Q = 0`.
pub fn solve_dare(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Mat> {
    solve_dare_with(a, b, q, r, &SolverTolerances::default())
}

pub fn solve_dare_with(a: &Mat, b: &Mat, q: &Mat, r: &Mat, tol: &SolverTolerances) -> Result<Mat> {
    ensure_square(a, "A")?;
    ensure_square(q, "Q")?;
    ensure_square(r, "R")?;
    let n = a.nrows();
    if b.nrows() != n || q.nrows() != n || r.nrows() != b.ncols() {
        return Err(Error::Dimension("solve_dare: A, B, Q, R are incompatible".into()));
    }
    let r_inv = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("R must be positive definite".into()))?
        .inverse();

    // SDA: A_k, G_k, H_k with H_k -> P.
    let mut ak = a.clone();
    let mut gk = symmetrize(&(b * &r_inv * b.transpose()));
    let mut hk = symmetrize(q);
    let eye = Mat::identity(n, n);
    let mut converged = false;
    for _ in 0..MAX_ITERS {
        let w = &eye + &gk * &hk;
        let lu = w.lu();
        let w_inv_a = lu
            .solve(&ak)
            .ok_or_else(|| Error::SolverFailure("doubling step hit a singular matrix".into()))?;
        let w_inv_g = lu
            .solve(&gk)
            .ok_or_else(|| Error::SolverFailure("doubling step hit a singular matrix".into()))?;
        let a_next = &ak * &w_inv_a;
        let g_next = symmetrize(&(&gk + &ak * w_inv_g * ak.transpose()));
        let h_next = symmetrize(&(&hk + ak.transpose() * &hk * &w_inv_a));
        if !h_next.iter().all(|v| v.is_finite()) {
            return Err(Error::SolverFailure("Riccati doubling diverged".into()));
        }
        let step = (&h_next - &hk).norm();
        let scale = h_next.norm();
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if step <= STEP_TOL * scale.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SolverFailure(format!(
            "Riccati doubling did not converge in {MAX_ITERS} iterations"
        )));
    }
    let p = hk;

    let btp = b.transpose() * &p;
    let s = r + &btp * b;
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SolverFailure("R + B^T P B is singular".into()))?;
    let gain = &s_inv * &btp * a;
    let res = a.transpose() * &p * a - &p - a.transpose() * p.transpose() * b * &gain + q;
    let limit = tol.lyap_residual * (1.0 + q.norm() + p.norm());
    if !(res.norm() <= limit) {
        return Err(Error::SolverFailure(format!(
            "Riccati residual {:.3e} exceeds {limit:.3e}",
            res.norm()
        )));
    }
    let closed = a - b * gain;
    ensure_schur_stable(&closed, tol).map_err(|e| {
        Error::SolverFailure(format!("Riccati solution is not stabilizing ({e}); is (A, B) stabilizable?"))
    })?;
    Ok(p)
}
