//! Plant, noise model, cost weights and dynamic output-feedback controllers.
//!
//! The plant is
//!
//! ```text
//! x(t+1) = A x(t) + B u(t) + w(t),   y(t) = C x(t) + v(t)
//! ```
//!
//! with `w ~ N(0, V_w)`, `v ~ N(0, V_v)` i.i.d., and the controller is
//! `xi(t+1) = G xi(t) + H y(t)`, `u(t) = F xi(t)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, ensure_finite, mat_from_rows, mat_to_rows, min_sym_eigenvalue, observability,
    rank, reachability, solve_dare_with, spectral_radius, Mat, SolverTolerances, Vector,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

impl Plant {
    /// Checks dimensions only; see [`Plant::check_assumptions`] for the
    /// stabilizability/observability test.
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b.nrows() != a.nrows() || c.ncols() != a.ncols() {
            return Err(Error::Dimension(format!(
                "plant: A {}x{}, B {}x{}, C {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C")] {
            ensure_finite(m, name)?;
        }
        Ok(Self { a, b, c })
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }
    pub fn nu(&self) -> usize {
        self.b.ncols()
    }
    pub fn ny(&self) -> usize {
        self.c.nrows()
    }
    /// Process noise enters every state.
    pub fn nw(&self) -> usize {
        self.nx()
    }
    pub fn nv(&self) -> usize {
        self.ny()
    }

    /// `(A, B)` stabilizable and `(A, C)` observable.
    ///
    /// Stabilizability is tested with the PBH rank condition on every
    /// eigenvalue of modulus >= 1, observability with the rank of the
    /// `n_x`-step observability matrix.
    pub fn check_assumptions(&self, tol: &SolverTolerances) -> Result<()> {
        let n = self.nx();
        let obs_rank = rank(&observability(&self.a, &self.c, n)?, tol.pinv_cutoff);
        if obs_rank < n {
            return Err(Error::NotObservable { l: n, rank: obs_rank, order: n });
        }
        if !self.is_stabilizable(tol)? {
            return Err(Error::InvalidInput("(A, B) is not stabilizable".into()));
        }
        Ok(())
    }

    fn is_stabilizable(&self, tol: &SolverTolerances) -> Result<bool> {
        let n = self.nx();
        let ctrb = reachability(&self.a, &self.b, n)?;
        if rank(&ctrb, tol.pinv_cutoff) == n {
            return Ok(true);
        }
        // PBH on the unstable eigenvalues: rank [A - lambda I, B] = n.
        use num_complex::Complex64;
        for lambda in self.a.complex_eigenvalues().iter() {
            if lambda.norm() < 1.0 {
                continue;
            }
            let m = nalgebra::DMatrix::<Complex64>::from_fn(n, n + self.nu(), |i, j| {
                if j < n {
                    Complex64::new(self.a[(i, j)], 0.0) - if i == j { *lambda } else { Complex64::new(0.0, 0.0) }
                } else {
                    Complex64::new(self.b[(i, j - n)], 0.0)
                }
            });
            let s = m.svd(false, false).singular_values;
            let smax = s.max();
            if s.iter().filter(|&&v| v > tol.pinv_cutoff * smax).count() < n {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// One step of the plant: returns `(x(t+1), y(t))`.
    pub fn step(&self, x: &Vector, u: &Vector, w: &Vector, v: &Vector) -> (Vector, Vector) {
        let y = &self.c * x + v;
        let next = &self.a * x + &self.b * u + w;
        (next, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub vw: Mat,
    pub vv: Mat,
}

impl NoiseSpec {
    pub fn new(vw: Mat, vv: Mat) -> Result<Self> {
        if !vw.is_square() || !vv.is_square() {
            return Err(Error::Dimension("noise covariances must be square".into()));
        }
        let min_w = min_sym_eigenvalue(&vw);
        if min_w < -1e-12 {
            return Err(Error::InvalidInput(format!(
                "V_w must be positive semidefinite (min eigenvalue {min_w:.3e})"
            )));
        }
        Ok(Self { vw, vv })
    }

    /// Like [`NoiseSpec::new`] but also enforces `V_v > 0`.
    pub fn strict(vw: Mat, vv: Mat) -> Result<Self> {
        let spec = Self::new(vw, vv)?;
        let min_v = min_sym_eigenvalue(&spec.vv);
        if min_v <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "V_v must be positive definite (min eigenvalue {min_v:.3e})"
            )));
        }
        Ok(spec)
    }

    /// `V_d = diag(V_w, V_v)`.
    pub fn vd(&self) -> Mat {
        block_diag(&[&self.vw, &self.vv])
    }

    pub fn check_against(&self, plant: &Plant) -> Result<()> {
        if self.vw.nrows() != plant.nw() || self.vv.nrows() != plant.nv() {
            return Err(Error::Dimension(format!(
                "noise covariances {}x{} / {}x{} do not match plant (n_w = {}, n_v = {})",
                self.vw.nrows(),
                self.vw.ncols(),
                self.vv.nrows(),
                self.vv.ncols(),
                plant.nw(),
                plant.nv()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q: Mat,
    pub r: Mat,
}

impl CostWeights {
    /// Both weights must be symmetric positive definite.
    pub fn new(q: Mat, r: Mat) -> Result<Self> {
        for (m, name) in [(&q, "Q"), (&r, "R")] {
            if !m.is_square() {
                return Err(Error::Dimension(format!("{name} must be square")));
            }
            if (m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm()) {
                return Err(Error::InvalidInput(format!("{name} must be symmetric")));
            }
            if min_sym_eigenvalue(m) <= 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be positive definite")));
            }
        }
        Ok(Self { q, r })
    }

    pub fn check_against(&self, plant: &Plant) -> Result<()> {
        if self.q.nrows() != plant.ny() || self.r.nrows() != plant.nu() {
            return Err(Error::Dimension("cost weights do not match plant".into()));
        }
        Ok(())
    }
}

/// `xi(t+1) = G xi(t) + H y(t)`, `u(t) = F xi(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynController {
    pub g: Mat,
    pub h: Mat,
    pub f: Mat,
    pub xi0: Vector,
}

impl DynController {
    pub fn new(g: Mat, h: Mat, f: Mat) -> Result<Self> {
        let n = g.nrows();
        Self::with_initial_state(g, h, f, Vector::zeros(n))
    }

    pub fn with_initial_state(g: Mat, h: Mat, f: Mat, xi0: Vector) -> Result<Self> {
        if !g.is_square() || h.nrows() != g.nrows() || f.ncols() != g.ncols() || xi0.len() != g.nrows() {
            return Err(Error::Dimension(format!(
                "controller: G {}x{}, H {}x{}, F {}x{}, xi0 {}",
                g.nrows(),
                g.ncols(),
                h.nrows(),
                h.ncols(),
                f.nrows(),
                f.ncols(),
                xi0.len()
            )));
        }
        Ok(Self { g, h, f, xi0 })
    }

    pub fn order(&self) -> usize {
        self.g.nrows()
    }

    pub fn check_against(&self, plant: &Plant) -> Result<()> {
        if self.h.ncols() != plant.ny() || self.f.nrows() != plant.nu() {
            return Err(Error::Dimension(format!(
                "controller with {} inputs / {} outputs does not fit plant with n_y = {}, n_u = {}",
                self.h.ncols(),
                self.f.nrows(),
                plant.ny(),
                plant.nu()
            )));
        }
        Ok(())
    }

    /// One controller step: returns `(xi(t+1), u(t))`.
    pub fn step(&self, xi: &Vector, y: &Vector) -> (Vector, Vector) {
        let u = &self.f * xi;
        let next = &self.g * xi + &self.h * y;
        (next, u)
    }
}

/// Closed loop with state `[x; xi]`, noise input `d = [w; v]` and performance
/// output `[y; u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub a: Mat,
    pub b_noise: Mat,
    pub c_out: Mat,
    /// Direct noise feed-through to `[y; u]` (the `v` term of `y`).
    pub d_out: Mat,
}

pub fn closed_loop(plant: &Plant, ctl: &DynController) -> Result<ClosedLoop> {
    ctl.check_against(plant)?;
    let (nx, nxi, ny, nu) = (plant.nx(), ctl.order(), plant.ny(), plant.nu());
    let (nw, nv) = (plant.nw(), plant.nv());
    let n = nx + nxi;
    let mut a = Mat::zeros(n, n);
    a.view_mut((0, 0), (nx, nx)).copy_from(&plant.a);
    a.view_mut((0, nx), (nx, nxi)).copy_from(&(&plant.b * &ctl.f));
    a.view_mut((nx, 0), (nxi, nx)).copy_from(&(&ctl.h * &plant.c));
    a.view_mut((nx, nx), (nxi, nxi)).copy_from(&ctl.g);

    let mut b_noise = Mat::zeros(n, nw + nv);
    b_noise.view_mut((0, 0), (nx, nw)).fill_with_identity();
    b_noise.view_mut((nx, nw), (nxi, nv)).copy_from(&ctl.h);

    let mut c_out = Mat::zeros(ny + nu, n);
    c_out.view_mut((0, 0), (ny, nx)).copy_from(&plant.c);
    c_out.view_mut((ny, nx), (nu, nxi)).copy_from(&ctl.f);

    let mut d_out = Mat::zeros(ny + nu, nw + nv);
    d_out.view_mut((0, nw), (ny, nv)).fill_with_identity();
    Ok(ClosedLoop { a, b_noise, c_out, d_out })
}

/// `rank O_L(A, C) == n`.
pub fn check_l_step_observable(a: &Mat, c: &Mat, l: usize) -> bool {
    check_l_step_observable_with(a, c, l, &SolverTolerances::default())
}

pub fn check_l_step_observable_with(a: &Mat, c: &Mat, l: usize, tol: &SolverTolerances) -> bool {
    match observability(a, c, l) {
        Ok(o) => rank(&o, tol.pinv_cutoff) == a.nrows(),
        Err(_) => false,
    }
}

/// The Riccati-based optimal LQG controller.
///
/// `F = -(R + B^T P B)^{-1} B^T P A` from the control Riccati equation with
/// state weight `C^T Q C`; `H = A S C^T (C S C^T + V_v)^{-1}` from the filter
/// Riccati equation; `G = A + B F - H C`.
pub fn lqg_baseline(plant: &Plant, noise: &NoiseSpec, weights: &CostWeights) -> Result<DynController> {
    lqg_baseline_with(plant, noise, weights, &SolverTolerances::default())
}

pub fn lqg_baseline_with(
    plant: &Plant,
    noise: &NoiseSpec,
    weights: &CostWeights,
    tol: &SolverTolerances,
) -> Result<DynController> {
    noise.check_against(plant)?;
    weights.check_against(plant)?;
    let noise = &NoiseSpec::strict(noise.vw.clone(), noise.vv.clone())?;
    let (a, b, c) = (&plant.a, &plant.b, &plant.c);
    let q_state = c.transpose() * &weights.q * c;
    let p = solve_dare_with(a, b, &q_state, &weights.r, tol)?;
    let btp = b.transpose() * &p;
    let f = -(&weights.r + &btp * b)
        .try_inverse()
        .ok_or_else(|| Error::SolverFailure("R + B^T P B is singular".into()))?
        * btp
        * a;

    let s = solve_dare_with(&a.transpose(), &c.transpose(), &noise.vw, &noise.vv, tol)?;
    let innov = c * &s * c.transpose() + &noise.vv;
    let h = a * &s * c.transpose()
        * innov
            .try_inverse()
            .ok_or_else(|| Error::SolverFailure("innovation covariance is singular".into()))?;
    let g = a + b * &f - &h * c;
    DynController::new(g, h, f)
}

/// Spectral radius of the closed loop.
pub fn closed_loop_radius(plant: &Plant, ctl: &DynController) -> Result<f64> {
    Ok(spectral_radius(&closed_loop(plant, ctl)?.a))
}

// --- JSON documents -------------------------------------------------------

/// Problem file: `{"A", "B", "C", "Vw", "Vv", "Q", "R"}`, row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "Vw")]
    pub vw: Vec<Vec<f64>>,
    #[serde(rename = "Vv")]
    pub vv: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
}

/// Plant, noise and weights bundled as read from a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub plant: Plant,
    pub noise: NoiseSpec,
    pub weights: CostWeights,
}

impl Problem {
    pub fn new(plant: Plant, noise: NoiseSpec, weights: CostWeights) -> Result<Self> {
        noise.check_against(&plant)?;
        weights.check_against(&plant)?;
        Ok(Self { plant, noise, weights })
    }

    pub fn from_file_doc(doc: &ProblemFile) -> Result<Self> {
        let plant = Plant::new(mat_from_rows(&doc.a)?, mat_from_rows(&doc.b)?, mat_from_rows(&doc.c)?)?;
        // V_v = 0 is accepted here so noiseless problems can be evaluated;
        // lqg_baseline insists on V_v > 0
        let noise = NoiseSpec::new(mat_from_rows(&doc.vw)?, mat_from_rows(&doc.vv)?)?;
        let weights = CostWeights::new(mat_from_rows(&doc.q)?, mat_from_rows(&doc.r)?)?;
        Self::new(plant, noise, weights)
    }

    pub fn to_file_doc(&self) -> ProblemFile {
        ProblemFile {
            a: mat_to_rows(&self.plant.a),
            b: mat_to_rows(&self.plant.b),
            c: mat_to_rows(&self.plant.c),
            vw: mat_to_rows(&self.noise.vw),
            vv: mat_to_rows(&self.noise.vv),
            q: mat_to_rows(&self.weights.q),
            r: mat_to_rows(&self.weights.r),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file_doc(&serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file_doc())?)
    }
}

/// Controller file: `{"G", "H", "F", "xi0"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerFile {
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    #[serde(rename = "F")]
    pub f: Vec<Vec<f64>>,
    #[serde(default)]
    pub xi0: Option<Vec<f64>>,
}

impl DynController {
    pub fn to_file_doc(&self) -> ControllerFile {
        ControllerFile {
            g: mat_to_rows(&self.g),
            h: mat_to_rows(&self.h),
            f: mat_to_rows(&self.f),
            xi0: Some(self.xi0.iter().copied().collect()),
        }
    }

    pub fn from_file_doc(doc: &ControllerFile) -> Result<Self> {
        let g = mat_from_rows(&doc.g)?;
        let h = mat_from_rows(&doc.h)?;
        let f = mat_from_rows(&doc.f)?;
        // a 0-state controller serializes G as [] and loses the column counts
        let (h, f) = if g.nrows() == 0 {
            (Mat::zeros(0, h.ncols()), Mat::zeros(f.nrows(), 0))
        } else {
            (h, f)
        };
        let xi0 = match &doc.xi0 {
            Some(v) => Vector::from_column_slice(v),
            None => Vector::zeros(g.nrows()),
        };
        Self::with_initial_state(g, h, f, xi0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file_doc(&serde_json::from_str(text)?)
    }
}
