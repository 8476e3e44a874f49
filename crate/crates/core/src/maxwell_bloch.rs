//! Grid integration of the linearized light–ensemble propagation equations.
//!
//! The pulse is cut into `n_tau` time bins (each a light mode with its own
//! `(x, p)` fluctuation quadratures) and the ensemble into `n_z` slices (each a
//! collective-spin mode of the slice). Working in the retarded time
//! `τ = t - z/c`, bin `m` meets slice `j` exactly once, and every such cell
//! applies
//!
//! 1. the QND kick with strength `κ / √(n_z n_tau)`,
//! 2. light damping `ε_p / n_z` with a fresh vacuum noise pair,
//! 3. atomic damping `ε_a / n_tau` with a fresh vacuum noise pair.
//!
//! Populations and photon fluxes are held at their mean values, so the cell
//! updates are linear in the fluctuations; the deterministic phase shifts
//! from the mean populations are dropped. Noise terms that are products of a
//! mean amplitude and a Langevin operator become c-number weights times
//! independent vacuum quadratures. Cells are composed in causal order: bins
//! in τ order, each bin traversing slices `0..n_z`.
//!
//! The composed map is stored as a [`TransferMap`]; [`extract_collective`]
//! projects it onto the uniform collective modes and reads off the effective
//! single-pass channel.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{heisenberg_min_eigenvalue, symplectic_form, VACUUM_VARIANCE};
use crate::interaction::{derive_channel, validate_regime, ChannelParams, PhysicalParams, RegimeThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n_z: usize,
    pub n_tau: usize,
}

impl Grid {
    pub fn new(n_z: usize, n_tau: usize) -> Result<Self> {
        if n_z == 0 || n_tau == 0 {
            return invalid(format!("grid {n_z}x{n_tau} is too small"));
        }
        Ok(Grid { n_z, n_tau })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn cells(&self) -> usize {
        self.n_z * self.n_tau
    }

    /// Number of canonical coordinates (light bins plus atomic slices).
    pub fn dim(&self) -> usize {
        2 * (self.n_tau + self.n_z)
    }

    #[inline]
    pub fn light_x(&self, bin: usize) -> usize {
        2 * bin
    }

    #[inline]
    pub fn atom_x(&self, slice: usize) -> usize {
        2 * (self.n_tau + slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseChannel {
    /// Injected into a light bin while crossing a slice.
    Light,
    /// Injected into an atomic slice while a bin passes.
    Atom,
}

/// Linear input–output relation of one pulse through the ensemble.
///
/// Coordinates are ordered light bins `(x_0, p_0, …, x_{n_tau-1}, p_{n_tau-1})`
/// followed by atomic slices `(X_0, P_0, …)`. `signal` maps input coordinates
/// to outputs; `noise` maps the injected vacuum quadratures (one `(x, p)` pair
/// per column pair, each with variance 1/2) to outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMap {
    pub grid: Grid,
    pub signal: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub noise_channels: Vec<NoiseChannel>,
}

impl TransferMap {
    /// Output covariance for vacuum inputs: `½(S Sᵀ + N Nᵀ)`.
    pub fn output_covariance(&self) -> DMatrix<f64> {
        (&self.signal * self.signal.transpose() + &self.noise * self.noise.transpose()) * VACUUM_VARIANCE
    }

    /// `max |S Ω Sᵀ + N Ω_n Nᵀ - Ω|` over the retained outputs.
    pub fn commutator_defect(&self) -> f64 {
        let omega = symplectic_form(self.grid.n_tau + self.grid.n_z);
        let mut total = &self.signal * &omega * self.signal.transpose();
        if self.noise.ncols() > 0 {
            // block-diagonal Ω on the noise pairs: N_x N_pᵀ - N_p N_xᵀ
            let (rows, pairs) = (self.noise.nrows(), self.noise.ncols() / 2);
            let nx = DMatrix::from_fn(rows, pairs, |r, k| self.noise[(r, 2 * k)]);
            let np = DMatrix::from_fn(rows, pairs, |r, k| self.noise[(r, 2 * k + 1)]);
            total += &nx * np.transpose() - &np * nx.transpose();
        }
        (total - omega).amax()
    }

    /// `max |S Ω Sᵀ - Ω|`; zero iff the signal block alone is symplectic.
    pub fn signal_symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.grid.n_tau + self.grid.n_z);
        (self.signal.transpose() * &omega * &self.signal - omega).amax()
    }

    pub fn heisenberg_min_eigenvalue(&self) -> f64 {
        heisenberg_min_eigenvalue(&self.output_covariance())
    }

    /// Relabel atomic slices: slice `j` becomes slice `perm[j]`.
    pub fn permute_slices(&self, perm: &[usize]) -> Result<TransferMap> {
        let g = self.grid;
        let mut seen = vec![false; g.n_z];
        if perm.len() != g.n_z {
            return invalid("permutation length must equal n_z");
        }
        for &p in perm {
            if p >= g.n_z || std::mem::replace(&mut seen[p], true) {
                return invalid("not a permutation of the slices");
            }
        }
        let dim = g.dim();
        let map = |k: usize| -> usize {
            let base = 2 * g.n_tau;
            if k < base {
                k
            } else {
                let slice = (k - base) / 2;
                base + 2 * perm[slice] + (k - base) % 2
            }
        };
        let mut signal = DMatrix::zeros(dim, dim);
        let mut noise = DMatrix::zeros(dim, self.noise.ncols());
        for r in 0..dim {
            for c in 0..dim {
                signal[(map(r), map(c))] = self.signal[(r, c)];
            }
            for c in 0..self.noise.ncols() {
                noise[(map(r), c)] = self.noise[(r, c)];
            }
        }
        Ok(TransferMap { grid: g, signal, noise, noise_channels: self.noise_channels.clone() })
    }
}

/// Per-coordinate coefficient rows over `[signal inputs | noise inputs]`,
/// grown as noise pairs are injected.
struct Propagator {
    rows: Vec<Vec<f64>>,
    signal_dim: usize,
    used: usize,
    channels: Vec<NoiseChannel>,
}

impl Propagator {
    fn new(signal_dim: usize, noise_capacity: usize) -> Self {
        let width = signal_dim + noise_capacity;
        let rows = (0..signal_dim)
            .map(|k| {
                let mut r = vec![0.0; width];
                r[k] = 1.0;
                r
            })
            .collect();
        Propagator { rows, signal_dim, used: signal_dim, channels: Vec::new() }
    }

    /// `row[dst] += alpha * row[src]`
    fn axpy(&mut self, dst: usize, src: usize, alpha: f64) {
        let len = self.used;
        let (d, s) = if dst < src {
            let (lo, hi) = self.rows.split_at_mut(src);
            (&mut lo[dst], &hi[0])
        } else {
            let (lo, hi) = self.rows.split_at_mut(dst);
            (&mut hi[0], &lo[src])
        };
        for (a, b) in d[..len].iter_mut().zip(&s[..len]) {
            *a += alpha * b;
        }
    }

    /// Beam-splitter damping of the mode whose X coordinate is `x`.
    fn damp(&mut self, x: usize, eps: f64, channel: NoiseChannel) {
        if eps == 0.0 {
            return;
        }
        let t = (1.0 - eps).sqrt();
        let s = eps.sqrt();
        let col = self.used;
        for (k, q) in [x, x + 1].into_iter().enumerate() {
            let row = &mut self.rows[q];
            for v in &mut row[..col] {
                *v *= t;
            }
            row[col + k] = s;
        }
        self.used += 2;
        self.channels.push(channel);
    }

    fn finish(self, grid: Grid) -> TransferMap {
        let dim = self.signal_dim;
        let n_noise = self.used - dim;
        let signal = DMatrix::from_fn(dim, dim, |r, c| self.rows[r][c]);
        let noise = DMatrix::from_fn(dim, n_noise, |r, c| self.rows[r][dim + c]);
        TransferMap { grid, signal, noise, noise_channels: self.channels }
    }
}

/// Composes the cell updates for a given single-pass channel.
pub fn build_transfer_from_channel(c: &ChannelParams, grid: Grid) -> Result<TransferMap> {
    c.validate()?;
    let cells = grid.cells();
    let kappa_cell = c.kappa / (cells as f64).sqrt();
    let eps_light = c.eps_p / grid.n_z as f64;
    let eps_atom = c.eps_a / grid.n_tau as f64;
    let pairs = cells * (usize::from(eps_light > 0.0) + usize::from(eps_atom > 0.0));
    let mut prop = Propagator::new(grid.dim(), 2 * pairs);
    for bin in 0..grid.n_tau {
        let lx = grid.light_x(bin);
        for slice in 0..grid.n_z {
            let ax = grid.atom_x(slice);
            // X_l -= κ P_a and X_a -= κ P_l; momenta are untouched so order is free
            prop.axpy(lx, ax + 1, -kappa_cell);
            prop.axpy(ax, lx + 1, -kappa_cell);
            prop.damp(lx, eps_light, NoiseChannel::Light);
            prop.damp(ax, eps_atom, NoiseChannel::Atom);
        }
    }
    Ok(prop.finish(grid))
}

/// Builds the transfer map from microscopic parameters.
pub fn build_transfer(p: &PhysicalParams, grid: Grid) -> Result<TransferMap> {
    let c = derive_channel(p)?;
    let regime = validate_regime(p, &c, &RegimeThresholds::default());
    if !regime.all_pass() {
        log::warn!("regime checks failing: {:?}", regime.failures());
    }
    build_transfer_from_channel(&c, grid)
}

/// Effective channel read off the collective modes, plus what does not fit it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectiveFit {
    pub channel: ChannelParams,
    /// κ estimated from the `X_a ← P_p` coefficient instead of `X_p ← P_a`.
    pub kappa_from_atoms: f64,
    /// Squared weight of collective outputs on non-collective inputs, summed
    /// over the four collective quadratures.
    pub leakage: f64,
    /// Noise variance on the collective `X_p` from light-damping injections.
    pub noise_var_xp_light: f64,
    /// Noise variance on the collective `X_p` from atomic-damping injections
    /// carried over by later kicks.
    pub noise_var_xp_atom: f64,
}

fn collective_vectors(grid: Grid) -> [DVector<f64>; 4] {
    let dim = grid.dim();
    let (wl, wa) = (1.0 / (grid.n_tau as f64).sqrt(), 1.0 / (grid.n_z as f64).sqrt());
    let mut xp = DVector::zeros(dim);
    let mut pp = DVector::zeros(dim);
    let mut xa = DVector::zeros(dim);
    let mut pa = DVector::zeros(dim);
    for m in 0..grid.n_tau {
        xp[grid.light_x(m)] = wl;
        pp[grid.light_x(m) + 1] = wl;
    }
    for j in 0..grid.n_z {
        xa[grid.atom_x(j)] = wa;
        pa[grid.atom_x(j) + 1] = wa;
    }
    [xp, pp, xa, pa]
}

pub fn extract_collective(tm: &TransferMap) -> Result<CollectiveFit> {
    let grid = tm.grid;
    if tm.signal.nrows() != grid.dim() || tm.signal.ncols() != grid.dim() {
        return Err(Error::Internal("transfer map does not match its grid".into()));
    }
    let [xp, pp, xa, pa] = collective_vectors(grid);
    let coef = |out: &DVector<f64>, inp: &DVector<f64>| (out.transpose() * &tm.signal * inp)[(0, 0)];

    let t_p = coef(&pp, &pp);
    let t_a = coef(&pa, &pa);
    if !(t_p > 0.0 && t_a > 0.0) {
        return Err(Error::Internal(format!("collective transmissions {t_p}, {t_a} not normalizable")));
    }
    let eps_p = 1.0 - t_p * t_p;
    let eps_a = 1.0 - t_a * t_a;
    let kappa = -coef(&xp, &pa) / t_p;
    let kappa_from_atoms = -coef(&xa, &pp) / t_a;

    let basis = [&xp, &pp, &xa, &pa];
    let mut leakage = 0.0;
    for out in basis {
        let row = tm.signal.transpose() * out;
        let collective: f64 = basis.iter().map(|b| row.dot(b).powi(2)).sum();
        leakage += (row.norm_squared() - collective).max(0.0);
    }

    let noise_row = tm.noise.transpose() * &xp;
    let (mut light, mut atom) = (0.0, 0.0);
    for (pair, ch) in tm.noise_channels.iter().enumerate() {
        let v = noise_row[2 * pair].powi(2) + noise_row[2 * pair + 1].powi(2);
        match ch {
            NoiseChannel::Light => light += v,
            NoiseChannel::Atom => atom += v,
        }
    }

    Ok(CollectiveFit {
        channel: ChannelParams { kappa, eps_p: eps_p.max(0.0), eps_a: eps_a.max(0.0) },
        kappa_from_atoms,
        leakage,
        noise_var_xp_light: VACUUM_VARIANCE * light,
        noise_var_xp_atom: VACUUM_VARIANCE * atom,
    })
}

/// One row of a grid-refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_z: usize,
    pub n_tau: usize,
    pub fit: CollectiveFit,
    pub kappa_rel_dev: f64,
    pub eps_p_rel_dev: f64,
    pub eps_a_rel_dev: f64,
}

fn rel_dev(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        ((value - reference) / reference).abs()
    }
}

/// Builds and fits the transfer map on each grid.
pub fn convergence_study(c: &ChannelParams, grids: &[Grid]) -> Result<Vec<ConvergenceRow>> {
    grids
        .iter()
        .map(|&g| {
            let fit = extract_collective(&build_transfer_from_channel(c, g)?)?;
            Ok(ConvergenceRow {
                n_z: g.n_z,
                n_tau: g.n_tau,
                fit,
                kappa_rel_dev: rel_dev(fit.channel.kappa, c.kappa),
                eps_p_rel_dev: rel_dev(fit.channel.eps_p, c.eps_p),
                eps_a_rel_dev: rel_dev(fit.channel.eps_a, c.eps_a),
            })
        })
        .collect()
}
