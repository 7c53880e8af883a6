//! Gramians, Hankel singular values, balanced truncation and minimal realizations.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{
    column_space_basis, ensure_schur_stable, observability, reachability, row_space_basis,
    solve_dlyap_transpose_with, solve_dlyap_with, Mat, SolverTolerances,
};
use crate::error::{Error, Result};

/// A strictly proper state-space triple `x+ = A x + B u, y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

impl Realization {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() || c.ncols() != a.ncols() {
            return Err(Error::Dimension(format!(
                "realization: A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
}

// Factor L with L L^T = W for a PSD Gramian (negative rounding noise clamped).
fn gramian_factor(w: &Mat) -> Mat {
    let eig = SymmetricEigen::new(super::symmetrize(w));
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&d)
}

fn gramian_factors(sys: &Realization, tol: &SolverTolerances) -> Result<(Mat, Mat)> {
    ensure_schur_stable(&sys.a, tol)?;
    let wc = solve_dlyap_with(&sys.a, &(&sys.b * sys.b.transpose()), tol)?;
    let wo = solve_dlyap_transpose_with(&sys.a, &(sys.c.transpose() * &sys.c), tol)?;
    Ok((gramian_factor(&wc), gramian_factor(&wo)))
}

/// Square roots of the eigenvalues of `W_c W_o`, descending.
///
/// Computed as the singular values of `L_o^T L_c` for Gramian factors
/// `W_c = L_c L_c^T`, `W_o = L_o L_o^T`, which are the same numbers.
pub fn hankel_singular_values(a: &Mat, b: &Mat, c: &Mat) -> Result<Vec<f64>> {
    let sys = Realization::new(a.clone(), b.clone(), c.clone())?;
    let (lc, lo) = gramian_factors(&sys, &SolverTolerances::default())?;
    Ok(super::singular_values(&(lo.transpose() * lc)))
}

/// Square-root balanced truncation to `target_order` states.
pub fn balanced_truncation(a: &Mat, b: &Mat, c: &Mat, target_order: usize) -> Result<Realization> {
    let sys = Realization::new(a.clone(), b.clone(), c.clone())?;
    let n = sys.order();
    if target_order == 0 || target_order > n {
        return Err(Error::InvalidInput(format!(
            "target order {target_order} outside 1..={n}"
        )));
    }
    let (lc, lo) = gramian_factors(&sys, &SolverTolerances::default())?;
    let svd = (lo.transpose() * &lc).svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let keep = &order[..target_order];
    if let Some(&last) = keep.last() {
        if svd.singular_values[last] <= f64::MIN_POSITIVE {
            return Err(Error::InvalidInput(
                "cannot keep states with zero Hankel singular value".into(),
            ));
        }
    }
    // T = L_c V_r S_r^{-1/2}, T_inv = S_r^{-1/2} U_r^T L_o^T
    let mut t = Mat::zeros(n, target_order);
    let mut t_inv = Mat::zeros(target_order, n);
    for (k, &idx) in keep.iter().enumerate() {
        let s = svd.singular_values[idx].sqrt();
        t.set_column(k, &(&lc * vt.row(idx).transpose() / s));
        t_inv.set_row(k, &((lo.clone() * u.column(idx)).transpose() / s));
    }
    Realization::new(&t_inv * &sys.a * &t, &t_inv * &sys.b, &sys.c * &t)
}

/// Removes uncontrollable then unobservable states by orthogonal projection
/// onto the reachable subspace and the observable row space.
pub fn minimal_realization(a: &Mat, b: &Mat, c: &Mat, cutoff: f64) -> Result<Realization> {
    let sys = Realization::new(a.clone(), b.clone(), c.clone())?;
    let n = sys.order();
    if n == 0 {
        return Ok(sys);
    }
    let ctrb = reachability(&sys.a, &sys.b, n)?;
    let uc = column_space_basis(&ctrb, cutoff);
    let ac = uc.transpose() * &sys.a * &uc;
    let bc = uc.transpose() * &sys.b;
    let cc = &sys.c * &uc;
    let r = ac.nrows();
    if r == 0 {
        return Realization::new(Mat::zeros(0, 0), Mat::zeros(0, b.ncols()), Mat::zeros(c.nrows(), 0));
    }
    let obsv = observability(&ac, &cc, r)?;
    let vo = row_space_basis(&obsv, cutoff);
    Realization::new(vo.transpose() * &ac * &vo, vo.transpose() * bc, cc * vo)
}

/// `C (e^{iw} I - A)^{-1} B + D` at one frequency (rad/sample).
pub fn frequency_response(a: &Mat, b: &Mat, c: &Mat, d: Option<&Mat>, omega: f64) -> Result<DMatrix<Complex64>> {
    let sys = Realization::new(a.clone(), b.clone(), c.clone())?;
    let n = sys.order();
    let z = Complex64::from_polar(1.0, omega);
    let to_c = |m: &Mat| m.map(|v| Complex64::new(v, 0.0));
    let lhs = DMatrix::<Complex64>::identity(n, n) * z - to_c(&sys.a);
    let x = lhs
        .lu()
        .solve(&to_c(&sys.b))
        .ok_or_else(|| Error::SolverFailure(format!("zI - A singular at omega = {omega}")))?;
    let mut g = to_c(&sys.c) * x;
    if let Some(d) = d {
        if d.shape() != g.shape() {
            return Err(Error::Dimension("feed-through has wrong shape".into()));
        }
        g += to_c(d);
    }
    Ok(g)
}

/// `points` log-spaced frequencies from `lo` to `hi` inclusive.
pub fn log_frequency_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l0, l1) = (lo.ln(), hi.ln());
            (0..points)
                .map(|k| (l0 + (l1 - l0) * k as f64 / (points - 1) as f64).exp())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_radius;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, m: usize, p: usize, rng: &mut ChaCha8Rng) -> Realization {
        let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &a * (0.85 / spectral_radius(&a));
        let b = Mat::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        let c = Mat::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
        Realization::new(a, b, c).unwrap()
    }

    #[test]
    fn scalar_hsv() {
        let one = Mat::from_element(1, 1, 1.0);
        let h = hankel_singular_values(&Mat::from_element(1, 1, 0.5), &one, &one).unwrap();
        assert!((h[0] - 4.0 / 3.0).abs() < 1e-13);
        let zero_c = Mat::zeros(2, 3);
        let h0 = hankel_singular_values(&(Mat::identity(3, 3) * 0.5), &Mat::identity(3, 1), &zero_c).unwrap();
        assert!(h0.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn hsv_rejects_unstable() {
        let one = Mat::from_element(1, 1, 1.0);
        assert!(matches!(
            hankel_singular_values(&Mat::from_element(1, 1, 1.1), &one, &one),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn hsv_similarity_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let s = random_system(4, 2, 2, &mut rng);
            let t = Mat::from_fn(4, 4, |i, j| rng.random_range(-1.0..1.0) + if i == j { 3.0 } else { 0.0 });
            let ti = t.clone().try_inverse().unwrap();
            let h1 = hankel_singular_values(&s.a, &s.b, &s.c).unwrap();
            let h2 = hankel_singular_values(&(&ti * &s.a * &t), &(&ti * &s.b), &(&s.c * &t)).unwrap();
            for (x, y) in h1.iter().zip(&h2) {
                assert!((x - y).abs() <= 1e-8 * h1[0]);
            }
        }
    }

    #[test]
    fn full_order_truncation_preserves_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_system(4, 1, 2, &mut rng);
        let r = balanced_truncation(&s.a, &s.b, &s.c, 4).unwrap();
        for w in log_frequency_grid(1e-3, std::f64::consts::PI, 50) {
            let g1 = frequency_response(&s.a, &s.b, &s.c, None, w).unwrap();
            let g2 = frequency_response(&r.a, &r.b, &r.c, None, w).unwrap();
            assert!((g1 - g2).norm() <= 1e-8 * (1.0 + s.b.norm() * s.c.norm()));
        }
    }

    #[test]
    fn truncation_keeps_dominant_decoupled_mode() {
        let a = Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.2]);
        let b = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.1]);
        let c = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.1]);
        let r = balanced_truncation(&a, &b, &c, 1).unwrap();
        assert!((r.a[(0, 0)] - 0.5).abs() < 1e-12);
        let hsv = hankel_singular_values(&a, &b, &c).unwrap();
        let hr = hankel_singular_values(&r.a, &r.b, &r.c).unwrap();
        assert!((hr[0] - hsv[0]).abs() < 1e-8);
    }

    #[test]
    fn minimal_realization_drops_hidden_states() {
        // second state is uncontrollable, third unobservable
        let a = Mat::from_row_slice(3, 3, &[0.5, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, -0.2]);
        let b = Mat::from_row_slice(3, 1, &[1.0, 0.0, 1.0]);
        let c = Mat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let m = minimal_realization(&a, &b, &c, 1e-10).unwrap();
        assert_eq!(m.order(), 1);
        assert!((m.a[(0, 0)] - 0.5).abs() < 1e-12);
        for w in [0.1, 1.0, 2.5] {
            let g1 = frequency_response(&a, &b, &c, None, w).unwrap();
            let g2 = frequency_response(&m.a, &m.b, &m.c, None, w).unwrap();
            assert!((g1 - g2).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = log_frequency_grid(1e-3, std::f64::consts::PI, 200);
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[199] - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(log_frequency_grid(0.5, 1.0, 1), vec![0.5]);
    }
}
