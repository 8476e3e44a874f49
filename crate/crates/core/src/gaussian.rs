//! Gaussian-state calculus over a register of bosonic modes.
//!
//! Quadratures are ordered `(X0, P0, X1, P1, ...)` with `[X, P] = i`, so the
//! vacuum has variance 1/2 in every quadrature. States are immutable values:
//! every operation returns a new state and leaves its input untouched.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Variance of each vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Tolerance used when checking `cov + (i/2)Ω >= 0`.
pub const HEISENBERG_TOL: f64 = 1e-9;

/// Tolerance for `Mᵀ Ω M = Ω`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    Light,
    Atom,
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeKind::Light => f.write_str("light"),
            ModeKind::Atom => f.write_str("atom"),
        }
    }
}

/// A named slot in the register.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mode {
    pub kind: ModeKind,
    pub name: String,
}

impl Mode {
    pub fn new(kind: ModeKind, name: impl Into<String>) -> Self {
        Mode { kind, name: name.into() }
    }
}

/// Position of a mode in a register. Only meaningful for the state it was
/// obtained from: homodyne removes modes and shifts later indices down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex(pub usize);

impl ModeIndex {
    #[inline]
    pub fn x(self) -> usize {
        2 * self.0
    }

    #[inline]
    pub fn p(self) -> usize {
        2 * self.0 + 1
    }

    #[inline]
    pub fn quadrature(self, q: Quadrature) -> usize {
        match q {
            Quadrature::X => self.x(),
            Quadrature::P => self.p(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quadrature::X => f.write_str("X"),
            Quadrature::P => f.write_str("P"),
        }
    }
}

/// Result of one homodyne detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub mode: ModeIndex,
    pub mode_name: String,
    pub quadrature: Quadrature,
    pub outcome: f64,
    pub round_tag: String,
}

/// Where a homodyne outcome comes from.
pub enum OutcomeSource<'a> {
    /// Draw from the Gaussian marginal of the measured quadrature.
    Sample(&'a mut dyn RngCore),
    /// Condition on a given value.
    Forced(f64),
}

/// The standard symplectic form for `n` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Smallest eigenvalue of the real representation of `cov + (i/2)Ω`.
///
/// The Hermitian matrix `A + iB` is positive semidefinite iff the real
/// symmetric matrix `[[A, -B], [B, A]]` is.
pub fn heisenberg_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let dim = cov.nrows();
    if dim == 0 {
        return 0.0;
    }
    let half_omega = symplectic_form(dim / 2) * 0.5;
    let mut real = DMatrix::zeros(2 * dim, 2 * dim);
    real.view_mut((0, 0), (dim, dim)).copy_from(cov);
    real.view_mut((dim, dim), (dim, dim)).copy_from(cov);
    real.view_mut((0, dim), (dim, dim)).copy_from(&(-&half_omega));
    real.view_mut((dim, 0), (dim, dim)).copy_from(&half_omega);
    SymmetricEigen::new(real).eigenvalues.min()
}

/// Linear symplectic map plus displacement acting on the full register.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl SymplecticMap {
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || matrix.ncols() != dim {
            return invalid(format!(
                "symplectic matrix must be square with even dimension, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        if displacement.len() != dim {
            return invalid(format!("displacement length {} does not match dimension {dim}", displacement.len()));
        }
        let omega = symplectic_form(dim / 2);
        let defect = (matrix.transpose() * &omega * &matrix - &omega).amax();
        if defect > SYMPLECTIC_TOL {
            return invalid(format!("matrix is not symplectic (max defect {defect:e})"));
        }
        Ok(SymplecticMap { matrix, displacement })
    }

    pub fn identity(n_modes: usize) -> Self {
        SymplecticMap { matrix: DMatrix::identity(2 * n_modes, 2 * n_modes), displacement: DVector::zeros(2 * n_modes) }
    }

    /// Phase-space rotation of one mode: `X' = cosθ X + sinθ P`, `P' = -sinθ X + cosθ P`.
    pub fn rotation(n_modes: usize, mode: ModeIndex, theta: f64) -> Result<Self> {
        check_mode_count(n_modes, mode)?;
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let (s, c) = theta.sin_cos();
        let (x, p) = (mode.x(), mode.p());
        m[(x, x)] = c;
        m[(x, p)] = s;
        m[(p, x)] = -s;
        m[(p, p)] = c;
        Ok(SymplecticMap { matrix: m, displacement: DVector::zeros(2 * n_modes) })
    }

    /// Mutual QND kick `X_a ← X_a - κ P_b`, `X_b ← X_b - κ P_a`, momenta untouched.
    pub fn qnd(n_modes: usize, a: ModeIndex, b: ModeIndex, kappa: f64) -> Result<Self> {
        check_mode_count(n_modes, a)?;
        check_mode_count(n_modes, b)?;
        if a == b {
            return invalid("QND kick needs two distinct modes");
        }
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        m[(a.x(), b.p())] = -kappa;
        m[(b.x(), a.p())] = -kappa;
        Ok(SymplecticMap { matrix: m, displacement: DVector::zeros(2 * n_modes) })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &SymplecticMap) -> Result<Self> {
        if self.matrix.nrows() != first.matrix.nrows() {
            return invalid("cannot compose maps of different dimension");
        }
        Ok(SymplecticMap {
            matrix: &self.matrix * &first.matrix,
            displacement: &self.matrix * &first.displacement + &self.displacement,
        })
    }
}

fn check_mode_count(n_modes: usize, mode: ModeIndex) -> Result<()> {
    if mode.0 >= n_modes {
        return invalid(format!("mode {} out of range for {n_modes} modes", mode.0));
    }
    Ok(())
}

/// Mean vector and covariance matrix over an ordered register of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    modes: Vec<Mode>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Vacuum on `n_modes` generic light modes named `mode0`, `mode1`, ...
pub fn vacuum_state(n_modes: usize) -> Result<GaussianState> {
    if n_modes == 0 {
        return invalid("vacuum state needs at least one mode");
    }
    let modes = (0..n_modes).map(|k| Mode::new(ModeKind::Light, format!("mode{k}"))).collect();
    GaussianState::vacuum_with(modes)
}

impl GaussianState {
    pub fn vacuum_with(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return invalid("vacuum state needs at least one mode");
        }
        let dim = 2 * modes.len();
        Ok(GaussianState { modes, mean: DVector::zeros(dim), cov: DMatrix::identity(dim, dim) * VACUUM_VARIANCE })
    }

    /// Builds a state from explicit moments. The covariance is symmetrized but
    /// otherwise taken as given; use [`GaussianState::is_physical`] to check it.
    pub fn from_moments(modes: Vec<Mode>, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = 2 * modes.len();
        if mean.len() != dim || cov.nrows() != dim || cov.ncols() != dim {
            return invalid(format!(
                "moments do not match {} modes (mean {}, cov {}x{})",
                modes.len(),
                mean.len(),
                cov.nrows(),
                cov.ncols()
            ));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return invalid("moments contain non-finite entries");
        }
        let mut cov = cov;
        symmetrize(&mut cov);
        Ok(GaussianState { modes, mean, cov })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn mode(&self, index: ModeIndex) -> Result<&Mode> {
        self.check(index)?;
        Ok(&self.modes[index.0])
    }

    /// Index of the mode with the given name.
    pub fn find(&self, name: &str) -> Result<ModeIndex> {
        self.modes
            .iter()
            .position(|m| m.name == name)
            .map(ModeIndex)
            .ok_or_else(|| Error::InvalidArgument(format!("no mode named '{name}'")))
    }

    fn check(&self, mode: ModeIndex) -> Result<()> {
        check_mode_count(self.n_modes(), mode)
    }

    /// Tensor product with a coherent state (vacuum covariance, given mean).
    pub fn with_coherent_mode(&self, mode: Mode, x: f64, p: f64) -> Result<Self> {
        if self.modes.iter().any(|m| m.name == mode.name) {
            return invalid(format!("mode name '{}' already in use", mode.name));
        }
        if !x.is_finite() || !p.is_finite() {
            return invalid("coherent amplitude must be finite");
        }
        let old = self.mean.len();
        let dim = old + 2;
        let mut mean = DVector::zeros(dim);
        mean.rows_mut(0, old).copy_from(&self.mean);
        mean[old] = x;
        mean[old + 1] = p;
        let mut cov = DMatrix::zeros(dim, dim);
        cov.view_mut((0, 0), (old, old)).copy_from(&self.cov);
        cov[(old, old)] = VACUUM_VARIANCE;
        cov[(old + 1, old + 1)] = VACUUM_VARIANCE;
        let mut modes = self.modes.clone();
        modes.push(mode);
        Ok(GaussianState { modes, mean, cov })
    }

    pub fn with_vacuum_mode(&self, mode: Mode) -> Result<Self> {
        self.with_coherent_mode(mode, 0.0, 0.0)
    }

    /// Partial trace: keep only the listed modes, in the listed order.
    pub fn reduce(&self, keep: &[ModeIndex]) -> Result<Self> {
        let mut rows = Vec::with_capacity(2 * keep.len());
        for (k, &m) in keep.iter().enumerate() {
            self.check(m)?;
            if keep[..k].contains(&m) {
                return invalid(format!("mode {} listed twice", m.0));
            }
            rows.push(m.x());
            rows.push(m.p());
        }
        let mean = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.mean[r]));
        let cov = DMatrix::from_fn(rows.len(), rows.len(), |i, j| self.cov[(rows[i], rows[j])]);
        let modes = keep.iter().map(|m| self.modes[m.0].clone()).collect();
        Ok(GaussianState { modes, mean, cov })
    }

    pub fn displace(&self, mode: ModeIndex, dx: f64, dp: f64) -> Result<Self> {
        self.check(mode)?;
        if !dx.is_finite() || !dp.is_finite() {
            return invalid("displacement must be finite");
        }
        let mut out = self.clone();
        out.mean[mode.x()] += dx;
        out.mean[mode.p()] += dp;
        Ok(out)
    }

    pub fn rotate(&self, mode: ModeIndex, theta: f64) -> Result<Self> {
        self.check(mode)?;
        if !theta.is_finite() {
            return invalid("rotation angle must be finite");
        }
        let map = SymplecticMap::rotation(self.n_modes(), mode, theta)?;
        self.apply_symplectic(&map)
    }

    pub fn apply_symplectic(&self, map: &SymplecticMap) -> Result<Self> {
        if map.matrix.nrows() != self.mean.len() {
            return invalid(format!("map acts on {} modes, state has {}", map.n_modes(), self.n_modes()));
        }
        let mean = &map.matrix * &self.mean + &map.displacement;
        let mut cov = &map.matrix * &self.cov * map.matrix.transpose();
        symmetrize(&mut cov);
        Ok(GaussianState { modes: self.modes.clone(), mean, cov })
    }

    /// Mix the mode with vacuum on a beam splitter of reflectivity `eps`.
    pub fn loss_channel(&self, mode: ModeIndex, eps: f64) -> Result<Self> {
        self.check(mode)?;
        if !(0.0..=1.0).contains(&eps) {
            return invalid(format!("loss {eps} outside [0, 1]"));
        }
        let t = (1.0 - eps).sqrt();
        let mut out = self.clone();
        for q in [mode.x(), mode.p()] {
            out.mean[q] *= t;
            out.cov.row_mut(q).scale_mut(t);
            out.cov.column_mut(q).scale_mut(t);
            out.cov[(q, q)] += eps * VACUUM_VARIANCE;
        }
        if eps == 1.0 {
            // exact reset, no leftover cross terms from rounding
            out.cov[(mode.x(), mode.p())] = 0.0;
            out.cov[(mode.p(), mode.x())] = 0.0;
        }
        symmetrize(&mut out.cov);
        Ok(out)
    }

    /// Homodyne detection of one quadrature; the measured mode leaves the register.
    pub fn homodyne(
        &self,
        mode: ModeIndex,
        quadrature: Quadrature,
        source: OutcomeSource<'_>,
    ) -> Result<(f64, GaussianState)> {
        self.check(mode)?;
        let q = mode.quadrature(quadrature);
        let v = self.cov[(q, q)];
        if !(v > 0.0) {
            return Err(Error::NumericalDegeneracy(format!("measured quadrature variance {v} is not positive")));
        }
        let prior = self.mean[q];
        let outcome = match source {
            OutcomeSource::Forced(value) => {
                if !value.is_finite() {
                    return invalid("forced outcome must be finite");
                }
                value
            }
            OutcomeSource::Sample(rng) => {
                let normal = Normal::new(prior, v.sqrt()).map_err(|e| Error::NumericalDegeneracy(e.to_string()))?;
                normal.sample(rng)
            }
        };
        let c = self.cov.column(q).into_owned();
        let mean = &self.mean + &c * ((outcome - prior) / v);
        let mut cov = &self.cov - (&c * c.transpose()) / v;
        symmetrize(&mut cov);
        let conditioned = GaussianState { modes: self.modes.clone(), mean, cov };
        let keep: Vec<ModeIndex> = (0..self.n_modes()).filter(|&k| k != mode.0).map(ModeIndex).collect();
        let posterior = conditioned.reduce_allow_empty(&keep);
        Ok((outcome, posterior))
    }

    fn reduce_allow_empty(&self, keep: &[ModeIndex]) -> GaussianState {
        if keep.is_empty() {
            return GaussianState { modes: Vec::new(), mean: DVector::zeros(0), cov: DMatrix::zeros(0, 0) };
        }
        self.reduce(keep).expect("indices come from the register")
    }

    pub fn variance_of(&self, coeffs: &[f64]) -> Result<f64> {
        if coeffs.len() != self.mean.len() {
            return invalid(format!("coefficient vector has length {}, expected {}", coeffs.len(), self.mean.len()));
        }
        let c = DVector::from_column_slice(coeffs);
        Ok((c.transpose() * &self.cov * &c)[(0, 0)])
    }

    pub fn mean_of(&self, coeffs: &[f64]) -> Result<f64> {
        if coeffs.len() != self.mean.len() {
            return invalid(format!("coefficient vector has length {}, expected {}", coeffs.len(), self.mean.len()));
        }
        Ok(coeffs.iter().zip(self.mean.iter()).map(|(a, b)| a * b).sum())
    }

    /// Coefficient vector for a linear combination of single quadratures.
    pub fn combination(&self, terms: &[(ModeIndex, Quadrature, f64)]) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.mean.len()];
        for &(m, q, w) in terms {
            self.check(m)?;
            c[m.quadrature(q)] += w;
        }
        Ok(c)
    }

    /// Single-mode marginal `(mean, covariance)`.
    pub fn marginal(&self, mode: ModeIndex) -> Result<(Vector2<f64>, Matrix2<f64>)> {
        self.check(mode)?;
        let (x, p) = (mode.x(), mode.p());
        Ok((
            Vector2::new(self.mean[x], self.mean[p]),
            Matrix2::new(self.cov[(x, x)], self.cov[(x, p)], self.cov[(p, x)], self.cov[(p, p)]),
        ))
    }

    /// Overlap of one mode's marginal with the coherent state of mean `target`.
    pub fn fidelity_coherent(&self, mode: ModeIndex, target: (f64, f64)) -> Result<f64> {
        let (mu, gamma) = self.marginal(mode)?;
        fidelity_with_coherent(&mu, &gamma, target)
    }

    pub fn heisenberg_min_eigenvalue(&self) -> f64 {
        heisenberg_min_eigenvalue(&self.cov)
    }

    /// `cov + (i/2)Ω >= 0` within [`HEISENBERG_TOL`].
    pub fn is_physical(&self) -> bool {
        self.heisenberg_min_eigenvalue() >= -HEISENBERG_TOL
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.cov - self.cov.transpose()).amax()
    }
}

/// `F = exp(-½ δᵀ S⁻¹ δ) / √det S` with `S = Γ + ½I` and `δ = μ - target`.
pub fn fidelity_with_coherent(mu: &Vector2<f64>, gamma: &Matrix2<f64>, target: (f64, f64)) -> Result<f64> {
    let s = gamma + Matrix2::identity() * VACUUM_VARIANCE;
    let det = s.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::NumericalDegeneracy(format!("Γ + I/2 has determinant {det}")));
    }
    let inv = s.try_inverse().ok_or_else(|| Error::NumericalDegeneracy("Γ + I/2 is singular".into()))?;
    let delta = mu - Vector2::new(target.0, target.1);
    let quad = (delta.transpose() * inv * delta)[(0, 0)];
    Ok(((-0.5 * quad).exp() / det.sqrt()).clamp(0.0, 1.0))
}

/// Rotation angle that turns a P quadrature into X (`X' = -P`, `P' = X`).
pub const QUARTER_TURN: f64 = PI / 2.0;
