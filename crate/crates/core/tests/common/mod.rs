#![allow(dead_code)]

use iohlqg::ioh::{stack_oldest_first, HistoryState};
use iohlqg::linalg::{spectral_radius, Mat, SolverTolerances, Vector};
use iohlqg::{CostWeights, DynController, NoiseSpec, Plant, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn with_radius(a: Mat, rho: f64) -> Mat {
    let r = spectral_radius(&a);
    if r == 0.0 {
        a
    } else {
        a * (rho / r)
    }
}

pub fn spd(n: usize, floor: f64, rng: &mut ChaCha8Rng) -> Mat {
    let m = uniform(n, n, rng);
    &m * m.transpose() * 0.5 + Mat::identity(n, n) * floor
}

/// Random problem passing the stabilizability/observability checks.
pub fn random_problem(nx: usize, nu: usize, ny: usize, rng: &mut ChaCha8Rng) -> Problem {
    loop {
        let rho = rng.random_range(0.5..1.1);
        let a = with_radius(uniform(nx, nx, rng), rho);
        let plant = Plant::new(a, uniform(nx, nu, rng), uniform(ny, nx, rng)).unwrap();
        if plant.check_assumptions(&SolverTolerances::default()).is_err() {
            continue;
        }
        let noise = NoiseSpec::strict(spd(nx, 0.05, rng), spd(ny, 0.05, rng)).unwrap();
        let weights = CostWeights::new(spd(ny, 0.5, rng), spd(nu, 0.5, rng)).unwrap();
        return Problem::new(plant, noise, weights).unwrap();
    }
}

pub fn random_vec(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// Random controller with a stable state matrix.
pub fn random_controller(n: usize, nu: usize, ny: usize, rng: &mut ChaCha8Rng) -> DynController {
    let g = with_radius(uniform(n, n, rng), rng.random_range(0.2..0.9));
    DynController::new(g, uniform(n, ny, rng), uniform(nu, n, rng)).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub struct Recorded {
    pub u: Vec<Vector>,
    pub y: Vec<Vector>,
    pub w: Vec<Vector>,
    pub v: Vec<Vector>,
    pub x: Vec<Vector>,
}

impl Recorded {
    pub fn window(&self, t: usize, l: usize) -> HistoryState {
        HistoryState::from_windows(&self.u[t - l..t], &self.y[t - l..t], &self.w[t - l..t], &self.v[t - l..t]).unwrap()
    }
    pub fn d(&self, t: usize) -> Vector {
        stack_oldest_first(&[self.w[t].clone(), self.v[t].clone()])
    }
}

pub fn noise(plant: &Plant, rng: &mut ChaCha8Rng) -> (Vector, Vector) {
    (random_vec(plant.nx(), 1.0, rng), random_vec(plant.ny(), 1.0, rng))
}

// Plant in closed loop with a dynamic controller from random initial states.
pub fn run_closed_loop(plant: &Plant, ctl: &DynController, steps: usize, rng: &mut ChaCha8Rng) -> Recorded {
    let mut rec = Recorded { u: vec![], y: vec![], w: vec![], v: vec![], x: vec![] };
    let mut x = random_vec(plant.nx(), 1.0, rng);
    let mut xi = random_vec(ctl.order(), 1.0, rng);
    for _ in 0..steps {
        let (w, v) = noise(plant, rng);
        let u = &ctl.f * &xi;
        let (next, y) = plant.step(&x, &u, &w, &v);
        let (xi_next, _) = ctl.step(&xi, &y);
        rec.x.push(x);
        rec.u.push(u);
        rec.y.push(y);
        rec.w.push(w);
        rec.v.push(v);
        x = next;
        xi = xi_next;
    }
    rec
}

pub fn max_rel_gap(a: &[Vector], b: &[Vector]) -> f64 {
    let scale = a.iter().map(|v| v.amax()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max) / scale
}

