//! Input-output-history (IOH) lift of the plant and conversion between
//! dynamic controllers and static history gains.
//!
//! Every history vector in this crate is stacked oldest sample first: a
//! window `s(t-L), ..., s(t-1)` becomes `[s(t-L); ...; s(t-1)]`. The history
//! state is `h = [z; e]` with `z = [u-history; y-history]` and
//! `e = [w-history; v-history]`. Use [`stack_oldest_first`] and
//! [`HistoryState::from_windows`] rather than assembling these by hand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    block_hankel, minimal_realization, observability, pinv_with, rank, reachability, Mat,
    SolverTolerances, Vector,
};
use crate::plant::{DynController, Plant};

/// Stacks `samples` (ordered oldest first) into one vector.
pub fn stack_oldest_first(samples: &[Vector]) -> Vector {
    let len = samples.iter().map(|s| s.len()).sum();
    let mut out = Vector::zeros(len);
    let mut at = 0;
    for s in samples {
        out.rows_mut(at, s.len()).copy_from(s);
        at += s.len();
    }
    out
}

/// Splits a stacked history back into `l` samples of width `width`, oldest first.
pub fn unstack_oldest_first(stacked: &Vector, width: usize, l: usize) -> Result<Vec<Vector>> {
    if stacked.len() != width * l {
        return Err(Error::Dimension(format!(
            "history of length {} cannot hold {l} samples of width {width}",
            stacked.len()
        )));
    }
    Ok((0..l).map(|i| stacked.rows(i * width, width).into_owned()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryDims {
    pub l: usize,
    pub nu: usize,
    pub ny: usize,
    pub nw: usize,
    pub nv: usize,
}

impl HistoryDims {
    pub fn nz(&self) -> usize {
        self.l * (self.nu + self.ny)
    }
    pub fn ne(&self) -> usize {
        self.l * (self.nw + self.nv)
    }
    pub fn nh(&self) -> usize {
        self.nz() + self.ne()
    }
    pub fn nd(&self) -> usize {
        self.nw + self.nv
    }
    /// Offsets of the u, y, w, v windows inside `h`.
    pub fn offsets(&self) -> [usize; 4] {
        let l = self.l;
        [0, l * self.nu, l * (self.nu + self.ny), l * (self.nu + self.ny + self.nw)]
    }
}

/// The lifted system
///
/// ```text
/// h(t+1) = Theta h(t) + Pi_d d(t) + Pi_u u(t)
/// y(t)   = Psi h(t) + Upsilon d(t)
/// z(t)   = Gamma h(t)
/// ```
///
/// with `d = [w; v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySystem {
    pub theta: Mat,
    pub pi_d: Mat,
    pub pi_u: Mat,
    pub psi: Mat,
    pub gamma: Mat,
    pub upsilon: Mat,
    pub dims: HistoryDims,
    /// `x(t) = state_map * h(t)` for `t >= L`.
    pub state_map: Mat,
}

// J_n: block up-shift, so that (J h)_i = h_{i+1} and the newest slot is cleared.
fn shift(n: usize, l: usize) -> Mat {
    let mut j = Mat::zeros(l * n, l * n);
    for i in 0..l.saturating_sub(1) {
        j.view_mut((i * n, (i + 1) * n), (n, n)).fill_with_identity();
    }
    j
}

// E_n: writes a sample into the newest slot.
fn newest_slot(n: usize, l: usize) -> Mat {
    let mut e = Mat::zeros(l * n, n);
    e.view_mut(((l - 1) * n, 0), (n, n)).fill_with_identity();
    e
}

pub fn build_history_system(plant: &Plant, l: usize) -> Result<HistorySystem> {
    build_history_system_with(plant, l, &SolverTolerances::default())
}

pub fn build_history_system_with(plant: &Plant, l: usize, tol: &SolverTolerances) -> Result<HistorySystem> {
    if l == 0 {
        return Err(Error::InvalidInput("history length must be at least 1".into()));
    }
    let (a, b, c) = (&plant.a, &plant.b, &plant.c);
    let nx = plant.nx();
    let dims = HistoryDims { l, nu: plant.nu(), ny: plant.ny(), nw: plant.nw(), nv: plant.nv() };
    let obs = observability(a, c, l)?;
    let r = rank(&obs, tol.pinv_cutoff);
    if r < nx {
        return Err(Error::NotObservable { l, rank: r, order: nx });
    }
    let eye = Mat::identity(nx, nx);
    let a_pow_l = a.pow(l as u32);
    let recon = &a_pow_l * pinv_with(&obs, tol.pinv_cutoff);
    let m_u = reachability(a, b, l)? - &recon * block_hankel(a, b, c, l)?;
    let m_y = recon.clone();
    let m_w = reachability(a, &eye, l)? - &recon * block_hankel(a, &eye, c, l)?;
    let m_v = -&recon;

    let (nz, nh) = (dims.nz(), dims.nh());
    let [ou, oy, ow, ov] = dims.offsets();
    let mut state_map = Mat::zeros(nx, nh);
    state_map.view_mut((0, ou), (nx, l * dims.nu)).copy_from(&m_u);
    state_map.view_mut((0, oy), (nx, l * dims.ny)).copy_from(&m_y);
    state_map.view_mut((0, ow), (nx, l * dims.nw)).copy_from(&m_w);
    state_map.view_mut((0, ov), (nx, l * dims.nv)).copy_from(&m_v);
    let psi = c * &state_map;

    let mut theta = Mat::zeros(nh, nh);
    for (off, n) in [(ou, dims.nu), (oy, dims.ny), (ow, dims.nw), (ov, dims.nv)] {
        theta.view_mut((off, off), (l * n, l * n)).copy_from(&shift(n, l));
    }
    // newest y sample is C x(t) = Psi h(t)
    let y_rows = newest_slot(dims.ny, l) * &psi;
    let mut y_block = theta.view_mut((oy, 0), (l * dims.ny, nh));
    y_block += y_rows;

    let mut pi_d = Mat::zeros(nh, dims.nd());
    pi_d.view_mut((oy, dims.nw), (l * dims.ny, dims.nv)).copy_from(&newest_slot(dims.nv, l));
    pi_d.view_mut((ow, 0), (l * dims.nw, dims.nw)).copy_from(&newest_slot(dims.nw, l));
    pi_d.view_mut((ov, dims.nw), (l * dims.nv, dims.nv)).copy_from(&newest_slot(dims.nv, l));

    let mut pi_u = Mat::zeros(nh, dims.nu);
    pi_u.view_mut((ou, 0), (l * dims.nu, dims.nu)).copy_from(&newest_slot(dims.nu, l));

    let mut gamma = Mat::zeros(nz, nh);
    gamma.view_mut((0, 0), (nz, nz)).fill_with_identity();
    let mut upsilon = Mat::zeros(dims.ny, dims.nd());
    upsilon.view_mut((0, dims.nw), (dims.ny, dims.nv)).fill_with_identity();

    Ok(HistorySystem { theta, pi_d, pi_u, psi, gamma, upsilon, dims, state_map })
}

impl HistorySystem {
    /// `Theta + Pi_u K Gamma`.
    pub fn closed_theta(&self, gain: &IohGain) -> Result<Mat> {
        self.check_gain(gain)?;
        let mut theta = self.theta.clone();
        let (l, nu, nz) = (self.dims.l, self.dims.nu, self.dims.nz());
        // Pi_u K Gamma only touches the newest u rows and the z columns
        let mut rows = theta.view_mut(((l - 1) * nu, 0), (nu, nz));
        rows += &gain.k;
        Ok(theta)
    }

    pub fn check_gain(&self, gain: &IohGain) -> Result<()> {
        if gain.l != self.dims.l || gain.nu != self.dims.nu || gain.ny != self.dims.ny {
            return Err(Error::Dimension(format!(
                "gain (L={}, nu={}, ny={}) does not match history system (L={}, nu={}, ny={})",
                gain.l, gain.nu, gain.ny, self.dims.l, self.dims.nu, self.dims.ny
            )));
        }
        Ok(())
    }
}

/// Static history gain `u(t) = K z(t)` with `K = [K^u, K^y]`.
///
/// `K^u = [K^u_L, ..., K^u_1]` where `K^u_i` multiplies `u(t-i)`; `K^y` likewise.
#[derive(Debug, Clone, PartialEq)]
pub struct IohGain {
    pub l: usize,
    pub nu: usize,
    pub ny: usize,
    pub k: Mat,
}

impl IohGain {
    pub fn new(l: usize, nu: usize, ny: usize, k: Mat) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidInput("history length must be at least 1".into()));
        }
        if k.nrows() != nu || k.ncols() != l * (nu + ny) {
            return Err(Error::Dimension(format!(
                "gain is {}x{}, expected {nu}x{}",
                k.nrows(),
                k.ncols(),
                l * (nu + ny)
            )));
        }
        if !k.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("gain has non-finite entries".into()));
        }
        Ok(Self { l, nu, ny, k })
    }

    pub fn zeros(l: usize, nu: usize, ny: usize) -> Self {
        Self { l, nu, ny, k: Mat::zeros(nu, l * (nu + ny)) }
    }

    pub fn for_system(sys: &HistorySystem, k: Mat) -> Result<Self> {
        Self::new(sys.dims.l, sys.dims.nu, sys.dims.ny, k)
    }

    pub fn input_part(&self) -> Mat {
        self.k.columns(0, self.l * self.nu).into_owned()
    }

    pub fn output_part(&self) -> Mat {
        self.k.columns(self.l * self.nu, self.l * self.ny).into_owned()
    }

    /// `K^u_lag`, the coefficient of `u(t - lag)`, for `lag` in `1..=L`.
    pub fn input_tap(&self, lag: usize) -> Mat {
        assert!((1..=self.l).contains(&lag), "lag out of range");
        self.k.columns((self.l - lag) * self.nu, self.nu).into_owned()
    }

    /// `K^y_lag`, the coefficient of `y(t - lag)`.
    pub fn output_tap(&self, lag: usize) -> Mat {
        assert!((1..=self.l).contains(&lag), "lag out of range");
        self.k.columns(self.l * self.nu + (self.l - lag) * self.ny, self.ny).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.k.norm()
    }

    pub fn to_file_doc(&self) -> GainFile {
        GainFile { l: self.l, nu: self.nu, ny: self.ny, k: crate::linalg::mat_to_rows(&self.k) }
    }

    pub fn from_file_doc(doc: &GainFile) -> Result<Self> {
        Self::new(doc.l, doc.nu, doc.ny, crate::linalg::mat_from_rows(&doc.k)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file_doc(&serde_json::from_str(text)?)
    }
}

/// JSON form `{"L", "nu", "ny", "K"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainFile {
    #[serde(rename = "L")]
    pub l: usize,
    pub nu: usize,
    pub ny: usize,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
}

/// `[K, 0]`, the gain acting on the full history state.
pub fn structured_gain(sys: &HistorySystem, gain: &IohGain) -> Result<Mat> {
    sys.check_gain(gain)?;
    let mut out = Mat::zeros(gain.nu, sys.dims.nh());
    out.columns_mut(0, sys.dims.nz()).copy_from(&gain.k);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    pub z: Vector,
    pub e: Vector,
}

impl HistoryState {
    pub fn zeros(dims: &HistoryDims) -> Self {
        Self { z: Vector::zeros(dims.nz()), e: Vector::zeros(dims.ne()) }
    }

    /// Builds the state from `L`-sample windows of each signal, oldest first.
    pub fn from_windows(u: &[Vector], y: &[Vector], w: &[Vector], v: &[Vector]) -> Result<Self> {
        let l = u.len();
        if y.len() != l || w.len() != l || v.len() != l || l == 0 {
            return Err(Error::Dimension("history windows must all have the same nonzero length".into()));
        }
        let z = stack_oldest_first(&[stack_oldest_first(u), stack_oldest_first(y)]);
        let e = stack_oldest_first(&[stack_oldest_first(w), stack_oldest_first(v)]);
        Ok(Self { z, e })
    }

    pub fn from_h(h: &Vector, dims: &HistoryDims) -> Result<Self> {
        if h.len() != dims.nh() {
            return Err(Error::Dimension(format!("history state has length {}, expected {}", h.len(), dims.nh())));
        }
        Ok(Self { z: h.rows(0, dims.nz()).into_owned(), e: h.rows(dims.nz(), dims.ne()).into_owned() })
    }

    pub fn h(&self) -> Vector {
        stack_oldest_first(&[self.z.clone(), self.e.clone()])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryStep {
    pub y: Vector,
    pub u: Vector,
    pub h: Vector,
}

/// Runs the closed history loop for `horizon` steps starting from `start`.
///
/// Step `k` uses `d = inputs[k]` (and `delta[k]` if given) and reports
/// `y(k)`, `u(k)` and the state `h(k)` they were computed from.
pub fn simulate_history(
    sys: &HistorySystem,
    gain: &IohGain,
    inputs: &[Vector],
    start: &HistoryState,
    horizon: usize,
    delta: Option<&[Vector]>,
) -> Result<Vec<HistoryStep>> {
    sys.check_gain(gain)?;
    let dims = &sys.dims;
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    if inputs.len() < horizon || delta.is_some_and(|d| d.len() < horizon) {
        return Err(Error::InvalidInput("noise sequence shorter than the horizon".into()));
    }
    if inputs.iter().any(|d| d.len() != dims.nd()) || delta.is_some_and(|ds| ds.iter().any(|d| d.len() != dims.nh())) {
        return Err(Error::Dimension("noise sample has the wrong width".into()));
    }
    let theta_k = sys.closed_theta(gain)?;
    let kg = structured_gain(sys, gain)?;
    let mut h = start.h();
    if h.len() != dims.nh() {
        return Err(Error::Dimension("initial history state has the wrong length".into()));
    }
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let d = &inputs[t];
        let y = &sys.psi * &h + &sys.upsilon * d;
        let u = &kg * &h;
        let mut next = &theta_k * &h + &sys.pi_d * d;
        if let Some(ds) = delta {
            next += &ds[t];
        }
        out.push(HistoryStep { y, u, h: std::mem::replace(&mut h, next) });
    }
    Ok(out)
}

/// IOH gain equivalent to a dynamic controller.
///
/// `K^u = F G^L O^+` and `K^y = F R_L(G, H) - F G^L O^+ H_L(G, H, F)` with
/// `O = O_L(G, F)`. A controller whose own realization is not `L`-step
/// observable is first reduced to a minimal realization.
pub fn lift_controller(ctl: &DynController, l: usize) -> Result<IohGain> {
    lift_controller_with(ctl, l, &SolverTolerances::default())
}

pub fn lift_controller_with(ctl: &DynController, l: usize, tol: &SolverTolerances) -> Result<IohGain> {
    if l == 0 {
        return Err(Error::InvalidInput("history length must be at least 1".into()));
    }
    let (nu, ny) = (ctl.f.nrows(), ctl.h.ncols());
    let n = ctl.order();
    if n == 0 {
        return Ok(IohGain::zeros(l, nu, ny));
    }
    let obs = observability(&ctl.g, &ctl.f, l)?;
    let (g, h, f) = if rank(&obs, tol.pinv_cutoff) == n {
        (ctl.g.clone(), ctl.h.clone(), ctl.f.clone())
    } else {
        let m = minimal_realization(&ctl.g, &ctl.h, &ctl.f, tol.pinv_cutoff)?;
        if m.order() == 0 {
            return Ok(IohGain::zeros(l, nu, ny));
        }
        let r = rank(&observability(&m.a, &m.c, l)?, tol.pinv_cutoff);
        if r < m.order() {
            return Err(Error::NotLiftable { l, rank: r, order: m.order() });
        }
        (m.a, m.b, m.c)
    };
    let obs = observability(&g, &f, l)?;
    let recon = &f * g.pow(l as u32) * pinv_with(&obs, tol.pinv_cutoff);
    let ky = &f * reachability(&g, &h, l)? - &recon * block_hankel(&g, &h, &f, l)?;
    let mut k = Mat::zeros(nu, l * (nu + ny));
    k.columns_mut(0, l * nu).copy_from(&recon);
    k.columns_mut(l * nu, l * ny).copy_from(&ky);
    IohGain::new(l, nu, ny, k)
}

/// Dynamic controller of order `L n_u` realizing the IOH law.
///
/// `G` has identity blocks on the first block subdiagonal and
/// `[K^u_L; ...; K^u_1]` as its last block column, `H = [K^y_L; ...; K^y_1]`
/// and `F = [0 ... 0 I]`. The initial state reproduces the inputs recorded
/// in `z_l` from the outputs recorded there. For `L = 1` this is
/// `G = K^u_1`, `H = K^y_1`, `F = I`, `xi(0) = u(0)`.
pub fn realize_controller(gain: &IohGain, z_l: &Vector) -> Result<DynController> {
    let (l, nu, ny) = (gain.l, gain.nu, gain.ny);
    if z_l.len() != l * (nu + ny) {
        return Err(Error::Dimension(format!(
            "initial history has length {}, expected {}",
            z_l.len(),
            l * (nu + ny)
        )));
    }
    if l == 1 {
        return DynController::with_initial_state(
            gain.input_tap(1),
            gain.output_tap(1),
            Mat::identity(nu, nu),
            z_l.rows(0, nu).into_owned(),
        );
    }
    let n = l * nu;
    let mut g = Mat::zeros(n, n);
    for i in 1..l {
        g.view_mut((i * nu, (i - 1) * nu), (nu, nu)).fill_with_identity();
    }
    let mut h = Mat::zeros(n, ny);
    for j in 0..l {
        let lag = l - j;
        g.view_mut((j * nu, (l - 1) * nu), (nu, nu)).copy_from(&gain.input_tap(lag));
        h.view_mut((j * nu, 0), (nu, ny)).copy_from(&gain.output_tap(lag));
    }
    let mut f = Mat::zeros(nu, n);
    f.view_mut((0, (l - 1) * nu), (nu, nu)).fill_with_identity();

    let obs = observability(&g, &f, l)?;
    let hank = block_hankel(&g, &h, &f, l)?;
    let u_hist = z_l.rows(0, l * nu);
    let y_hist = z_l.rows(l * nu, l * ny);
    let rhs = u_hist - &hank * y_hist;
    let xi0 = obs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("observability matrix of the realized controller is singular".into()))?;
    DynController::with_initial_state(g, h, f, xi0)
}
