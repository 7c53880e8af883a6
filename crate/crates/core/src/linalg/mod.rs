//! Dense linear-algebra kernels shared by every other module.
//!
//! Block operators (reachability, observability, block Hankel), discrete
//! Lyapunov and Riccati solvers, Gramian-based realization tools and a few
//! spectral helpers. Everything here is a pure function of its inputs.

mod balanced;
mod lyapunov;
mod riccati;

pub use balanced::{
    balanced_truncation, frequency_response, hankel_singular_values, log_frequency_grid,
    minimal_realization, Realization,
};
pub use lyapunov::{
    solve_dlyap, solve_dlyap_kron, solve_dlyap_pair, solve_dlyap_transpose,
    solve_dlyap_transpose_with, solve_dlyap_with,
};
pub use riccati::{solve_dare, solve_dare_with};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical thresholds used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    /// A matrix counts as Schur stable when its spectral radius is below `1 - stability_margin`.
    pub stability_margin: f64,
    /// Singular values below `pinv_cutoff * sigma_max` are treated as zero.
    pub pinv_cutoff: f64,
    /// Relative residual accepted from the Lyapunov and Riccati solvers.
    pub lyap_residual: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            stability_margin: 1e-9,
            pinv_cutoff: 1e-10,
            lyap_residual: 1e-8,
        }
    }
}

impl SolverTolerances {
    pub fn validate(&self) -> Result<()> {
        let ok = self.stability_margin > 0.0
            && self.stability_margin < 1.0
            && self.pinv_cutoff > 0.0
            && self.lyap_residual > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad solver tolerances {self:?}")))
        }
    }

    pub(crate) fn stability_limit(&self) -> f64 {
        1.0 - self.stability_margin
    }
}

/// Builds a matrix from row-major nested vectors, rejecting ragged or non-finite input.
pub fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    let m = Mat::from_fn(nrows, ncols, |i, j| rows[i][j]);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

pub fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn ensure_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} contains NaN or infinite entries")))
    }
}

pub(crate) fn ensure_square(m: &Mat, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Block-diagonal concatenation.
pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `[A^{L-1} B, ..., A B, B]`, highest power leftmost.
pub fn reachability(a: &Mat, b: &Mat, l: usize) -> Result<Mat> {
    ensure_square(a, "A")?;
    if l == 0 {
        return Err(Error::InvalidInput("history length must be at least 1".into()));
    }
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "B has {} rows, A is {}x{}",
            b.nrows(),
            a.nrows(),
            a.ncols()
        )));
    }
    let m = b.ncols();
    let mut out = Mat::zeros(a.nrows(), l * m);
    let mut blk = b.clone();
    for j in (0..l).rev() {
        out.view_mut((0, j * m), (a.nrows(), m)).copy_from(&blk);
        blk = a * blk;
    }
    Ok(out)
}

/// `[C; C A; ...; C A^{L-1}]`, increasing power downwards.
pub fn observability(a: &Mat, c: &Mat, l: usize) -> Result<Mat> {
    ensure_square(a, "A")?;
    if l == 0 {
        return Err(Error::InvalidInput("history length must be at least 1".into()));
    }
    if c.ncols() != a.nrows() {
        return Err(Error::Dimension(format!(
            "C has {} columns, A is {}x{}",
            c.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    let p = c.nrows();
    let mut out = Mat::zeros(l * p, a.ncols());
    let mut blk = c.clone();
    for i in 0..l {
        out.view_mut((i * p, 0), (p, a.ncols())).copy_from(&blk);
        blk *= a;
    }
    Ok(out)
}

/// Strictly block-lower-triangular Toeplitz matrix with `(i, j)` block `C A^{i-j-1} B` for `i > j`.
pub fn block_hankel(a: &Mat, b: &Mat, c: &Mat, l: usize) -> Result<Mat> {
    ensure_square(a, "A")?;
    if l == 0 {
        return Err(Error::InvalidInput("history length must be at least 1".into()));
    }
    if b.nrows() != a.nrows() || c.ncols() != a.ncols() {
        return Err(Error::Dimension("block_hankel: A, B, C are incompatible".into()));
    }
    let (p, m) = (c.nrows(), b.ncols());
    // Markov parameters C A^k B for k = 0..L-2.
    let mut markov = Vec::with_capacity(l.saturating_sub(1));
    let mut ab = b.clone();
    for _ in 0..l.saturating_sub(1) {
        markov.push(c * &ab);
        ab = a * ab;
    }
    let mut out = Mat::zeros(l * p, l * m);
    for i in 0..l {
        for j in 0..i {
            out.view_mut((i * p, j * m), (p, m))
                .copy_from(&markov[i - j - 1]);
        }
    }
    Ok(out)
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with the relative cutoff `cutoff * sigma_max`.
pub fn rank(m: &Mat, cutoff: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > f64::MIN_POSITIVE => s.iter().filter(|&&v| v > cutoff * smax).count(),
        _ => 0,
    }
}

/// Moore-Penrose pseudoinverse with the default relative cutoff.
pub fn pinv(m: &Mat) -> Mat {
    pinv_with(m, SolverTolerances::default().pinv_cutoff)
}

pub fn pinv_with(m: &Mat, cutoff: f64) -> Mat {
    if m.is_empty() {
        return Mat::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let mut out = Mat::zeros(m.ncols(), m.nrows());
    if smax <= f64::MIN_POSITIVE {
        return out;
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff * smax {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

pub fn spectral_radius(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Fails with [`Error::Unstable`] unless `rho(m) < 1 - stability_margin`; returns the radius.
pub fn ensure_schur_stable(m: &Mat, tol: &SolverTolerances) -> Result<f64> {
    let rho = spectral_radius(m);
    let limit = tol.stability_limit();
    if rho < limit {
        Ok(rho)
    } else {
        Err(Error::Unstable { rho, limit })
    }
}

/// Symmetric PSD square root `V^{1/2}`; eigenvalues in `(-1e-12, 0)` are clamped to zero.
pub fn psd_sqrt(v: &Mat) -> Result<Mat> {
    ensure_square(v, "covariance")?;
    let eig = SymmetricEigen::new(symmetrize(v));
    if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
        if min < -1e-12 {
            return Err(Error::InvalidInput(format!(
                "matrix is not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
    }
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let vecs = &eig.eigenvectors;
    Ok(symmetrize(&(vecs * Mat::from_diagonal(&d) * vecs.transpose())))
}

pub fn min_sym_eigenvalue(v: &Mat) -> f64 {
    if v.is_empty() {
        return f64::INFINITY;
    }
    SymmetricEigen::new(symmetrize(v))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Row-space basis of `m` (columns orthonormal), using the relative rank cutoff.
pub(crate) fn row_space_basis(m: &Mat, cutoff: f64) -> Mat {
    let r = rank(m, cutoff);
    if r == 0 {
        return Mat::zeros(m.ncols(), 0);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let order = sorted_indices(svd.singular_values.as_slice());
    Mat::from_fn(m.ncols(), r, |i, k| vt[(order[k], i)])
}

/// Column-space basis of `m` (columns orthonormal).
pub(crate) fn column_space_basis(m: &Mat, cutoff: f64) -> Mat {
    let r = rank(m, cutoff);
    if r == 0 {
        return Mat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let order = sorted_indices(svd.singular_values.as_slice());
    Mat::from_fn(m.nrows(), r, |i, k| u[(i, order[k])])
}

fn sorted_indices(s: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    idx
}
