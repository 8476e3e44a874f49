#![allow(dead_code)]

use ensemble_qcomm::gaussian::{symplectic_form, GaussianState, Mode, ModeIndex, ModeKind, SymplecticMap};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn squeezer(n: usize, k: usize, r: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(2 * k, 2 * k)] = r.exp();
    m[(2 * k + 1, 2 * k + 1)] = (-r).exp();
    m
}

fn beam_splitter(n: usize, a: usize, b: usize, theta: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n, 2 * n);
    let (s, c) = theta.sin_cos();
    for q in 0..2 {
        let (i, j) = (2 * a + q, 2 * b + q);
        m[(i, i)] = c;
        m[(i, j)] = s;
        m[(j, i)] = -s;
        m[(j, j)] = c;
    }
    m
}

/// Product of random squeezers, rotations, beam splitters and QND gates.
pub fn random_symplectic_matrix(n: usize, gates: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    for _ in 0..gates {
        let k = rng.random_range(0..n);
        let g = match rng.random_range(0..4) {
            0 => squeezer(n, k, rng.random_range(-0.8..0.8)),
            1 => SymplecticMap::rotation(n, ModeIndex(k), rng.random_range(-3.2..3.2)).unwrap().matrix().clone(),
            2 if n > 1 => {
                let j = (k + rng.random_range(1..n)) % n;
                beam_splitter(n, k, j, rng.random_range(-3.2..3.2))
            }
            3 if n > 1 => {
                let j = (k + rng.random_range(1..n)) % n;
                SymplecticMap::qnd(n, ModeIndex(k), ModeIndex(j), rng.random_range(-2.0..2.0)).unwrap().matrix().clone()
            }
            _ => squeezer(n, k, rng.random_range(-0.8..0.8)),
        };
        s = g * s;
    }
    s
}

pub fn random_map(n: usize, rng: &mut ChaCha8Rng) -> SymplecticMap {
    let m = random_symplectic_matrix(n, 6, rng);
    let d = DVector::from_fn(2 * n, |_, _| rng.random_range(-2.0..2.0));
    SymplecticMap::new(m, d).unwrap()
}

/// Random mixed Gaussian state: a symplectic image of a thermal state.
pub fn random_state(n: usize, rng: &mut ChaCha8Rng) -> GaussianState {
    let s = random_symplectic_matrix(n, 5, rng);
    let mut thermal = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let nu = 0.5 + rng.random_range(0.0..1.5);
        thermal[(2 * k, 2 * k)] = nu;
        thermal[(2 * k + 1, 2 * k + 1)] = nu;
    }
    let cov = &s * thermal * s.transpose();
    let mean = DVector::from_fn(2 * n, |_, _| rng.random_range(-3.0..3.0));
    let modes = (0..n).map(|k| Mode::new(ModeKind::Light, format!("m{k}"))).collect();
    GaussianState::from_moments(modes, mean, cov).unwrap()
}

pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let omega = symplectic_form(m.nrows() / 2);
    (m.transpose() * &omega * m - omega).amax()
}
