//! Discrete Lyapunov (Stein) equations.
//!
//! The workhorse is squared Smith iteration: with `M_0 = A`, `X_0 = Q`,
//!
//! ```text
//! X_{k+1} = X_k + M_k^T X_k M_k,   M_{k+1} = M_k^2
//! ```
//!
//! so that `X_k` sums the first `2^k` terms of `sum_t (A^T)^t Q A^t`. Each
//! doubling costs three dense products, which keeps the policy-gradient loop
//! (two solves per iterate on 24x24 to 32x32 matrices) fast. The
//! Kronecker-vectorized solve is kept as an exact fallback for small orders
//! and as an independent cross-check.

use super::{ensure_schur_stable, ensure_square, symmetrize, Mat, SolverTolerances};
use crate::error::{Error, Result};

const MAX_DOUBLINGS: usize = 64;
const KRON_MAX_ORDER: usize = 40;

/// Solves `A^T X A - X + Q = 0` (observability type).
pub fn solve_dlyap_transpose(a: &Mat, q: &Mat) -> Result<Mat> {
    solve_dlyap_transpose_with(a, q, &SolverTolerances::default())
}

pub fn solve_dlyap_transpose_with(a: &Mat, q: &Mat, tol: &SolverTolerances) -> Result<Mat> {
    check_inputs(a, q)?;
    ensure_schur_stable(a, tol)?;
    let (x, _) = smith_pair(a, Some(q), None);
    let x = x.expect("requested");
    accept_or_fallback(a, q, x, tol, true)
}

/// Solves `A X A^T - X + Q = 0` (controllability type).
pub fn solve_dlyap(a: &Mat, q: &Mat) -> Result<Mat> {
    solve_dlyap_with(a, q, &SolverTolerances::default())
}

pub fn solve_dlyap_with(a: &Mat, q: &Mat, tol: &SolverTolerances) -> Result<Mat> {
    check_inputs(a, q)?;
    ensure_schur_stable(a, tol)?;
    let (_, x) = smith_pair(a, None, Some(q));
    let x = x.expect("requested");
    accept_or_fallback(a, q, x, tol, false)
}

/// Solves both `A^T X A - X + Q_obs = 0` and `A Y A^T - Y + Q_ctrl = 0`,
/// sharing the matrix powers. The caller is responsible for the stability gate.
pub fn solve_dlyap_pair(
    a: &Mat,
    q_obs: &Mat,
    q_ctrl: &Mat,
    tol: &SolverTolerances,
) -> Result<(Mat, Mat)> {
    check_inputs(a, q_obs)?;
    check_inputs(a, q_ctrl)?;
    let (x, y) = smith_pair(a, Some(q_obs), Some(q_ctrl));
    let x = accept_or_fallback(a, q_obs, x.expect("requested"), tol, true)?;
    let y = accept_or_fallback(a, q_ctrl, y.expect("requested"), tol, false)?;
    Ok((x, y))
}

/// Exact solve of `A^T X A - X + Q = 0` through `(I - A^T (x) A^T) vec(X) = vec(Q)`.
///
/// Cubic in `n^2`, so only sensible for small orders.
pub fn solve_dlyap_kron(a: &Mat, q: &Mat) -> Result<Mat> {
    check_inputs(a, q)?;
    let n = a.nrows();
    let at = a.transpose();
    let lhs = Mat::identity(n * n, n * n) - at.kronecker(&at);
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolverFailure("Kronecker Lyapunov system is singular".into()))?;
    Ok(symmetrize(&Mat::from_column_slice(n, n, sol.as_slice())))
}

fn check_inputs(a: &Mat, q: &Mat) -> Result<()> {
    ensure_square(a, "A")?;
    if q.shape() != a.shape() {
        return Err(Error::Dimension(format!(
            "Lyapunov right-hand side is {}x{}, A is {}x{}",
            q.nrows(),
            q.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Squared Smith iteration for the observability-type (`x`) and/or
/// controllability-type (`y`) equations.
fn smith_pair(a: &Mat, q_obs: Option<&Mat>, q_ctrl: Option<&Mat>) -> (Option<Mat>, Option<Mat>) {
    let mut x = q_obs.map(symmetrize);
    let mut y = q_ctrl.map(symmetrize);
    let mut m = a.clone();
    let mut x_done = x.is_none();
    let mut y_done = y.is_none();
    for _ in 0..MAX_DOUBLINGS {
        let mt = m.transpose();
        if let (Some(xk), false) = (x.as_mut(), x_done) {
            let inc = &mt * (&*xk * &m);
            let (inc_n, x_n) = (inc.norm(), xk.norm());
            *xk += inc;
            x_done = inc_n <= 1e-17 * x_n || x_n == 0.0;
        }
        if let (Some(yk), false) = (y.as_mut(), y_done) {
            let inc = &m * (&*yk * &mt);
            let (inc_n, y_n) = (inc.norm(), yk.norm());
            *yk += inc;
            y_done = inc_n <= 1e-17 * y_n || y_n == 0.0;
        }
        if x_done && y_done {
            break;
        }
        m = &m * &m;
        if m.norm() == 0.0 {
            break;
        }
    }
    (x.map(|v| symmetrize(&v)), y.map(|v| symmetrize(&v)))
}

fn residual(a: &Mat, q: &Mat, x: &Mat, transpose: bool) -> f64 {
    let r = if transpose {
        a.transpose() * x * a - x + q
    } else {
        a * x * a.transpose() - x + q
    };
    r.norm()
}

fn accept_or_fallback(a: &Mat, q: &Mat, x: Mat, tol: &SolverTolerances, transpose: bool) -> Result<Mat> {
    let limit = tol.lyap_residual * (1.0 + q.norm());
    let res = residual(a, q, &x, transpose);
    if res.is_finite() && res <= limit {
        return Ok(x);
    }
    if a.nrows() <= KRON_MAX_ORDER {
        let at;
        let a_eff = if transpose {
            a
        } else {
            at = a.transpose();
            &at
        };
        let xk = solve_dlyap_kron(a_eff, q)?;
        let res_k = residual(a, q, &xk, transpose);
        if res_k <= limit {
            return Ok(xk);
        }
        return Err(Error::SolverFailure(format!(
            "Lyapunov residual {res_k:.3e} exceeds {limit:.3e}"
        )));
    }
    Err(Error::SolverFailure(format!(
        "Lyapunov residual {res:.3e} exceeds {limit:.3e}"
    )))
}
