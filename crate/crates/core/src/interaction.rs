//! Light–ensemble interaction channel.
//!
//! One pass of a strong, linearly polarized pulse through an ensemble acts on
//! the canonical quadratures as a mutual QND kick followed by damping:
//!
//! ```text
//! X_p' = √(1-ε_p) (X_p - κ P_a) + √ε_p X_p,noise
//! X_a' = √(1-ε_a) (X_a - κ P_p) + √ε_a X_a,noise
//! P_b' = √(1-ε_b) P_b + √ε_b P_b,noise          (b = a, p)
//! ```
//!
//! Photon accounting: `n_photons` is `N_p = ⟨S_x⟩` of the light, i.e. half the
//! total photon number of the pulse (`2 N_p` photons in both circular
//! components). Likewise `n_atoms` is `N_a` with `2 N_a = ρ A L`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::{GaussianState, ModeIndex, SymplecticMap};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Sign carried by the microscopic expression for κ. [`ChannelParams::kappa`]
/// stores the magnitude; flipping the sign is a phase-space reflection that
/// leaves every variance and fidelity unchanged.
pub const KAPPA_SIGN: f64 = -1.0;

/// Light–atom coupling, given directly or through the transition dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `|g|` in m^½ s⁻¹.
    Direct(f64),
    /// Dipole moment `d` in C·m.
    Dipole(f64),
}

/// Microscopic inputs, SI units throughout (rates in rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub lambda0: f64,
    pub area: f64,
    pub length: f64,
    pub density: f64,
    pub detuning: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub n_photons: f64,
    pub n_atoms: f64,
    pub pulse_duration: f64,
    pub coupling: Coupling,
}

impl PhysicalParams {
    pub fn omega0(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda0
    }

    /// `|g|`, either as supplied or from the dipole moment.
    pub fn coupling_strength(&self) -> f64 {
        match self.coupling {
            Coupling::Direct(g) => g,
            Coupling::Dipole(d) => coupling_from_dipole(d, self.lambda0, self.area),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda0", self.lambda0),
            ("area", self.area),
            ("length", self.length),
            ("density", self.density),
            ("detuning", self.detuning),
            ("n_photons", self.n_photons),
            ("n_atoms", self.n_atoms),
            ("pulse_duration", self.pulse_duration),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        // decay rates may vanish for the lossless idealization
        for (name, v) in [("gamma", self.gamma), ("gamma_prime", self.gamma_prime)] {
            if !(v >= 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be non-negative and finite, got {v}"));
            }
        }
        let g = match self.coupling {
            Coupling::Direct(g) => g,
            Coupling::Dipole(d) => d,
        };
        if !(g > 0.0) || !g.is_finite() {
            return invalid(format!("coupling must be positive and finite, got {g}"));
        }
        let expected = 0.5 * self.density * self.area * self.length;
        if ((self.n_atoms - expected) / expected).abs() > 1e-6 {
            return invalid(format!("n_atoms = {} inconsistent with density*area*length/2 = {expected}", self.n_atoms));
        }
        Ok(())
    }

    pub fn fresnel_number(&self) -> f64 {
        self.area / (self.lambda0 * self.length)
    }
}

/// `|g| = √(ω₀ / (2π ħ ε₀ A)) · d`.
///
/// With this normalization the channel coefficients reproduce the
/// column-density form `κ = 3ρλ₀²Lγ / (8π²Δ)` when `γ` comes from the same
/// dipole through [`gamma_from_dipole`].
pub fn coupling_from_dipole(dipole: f64, lambda0: f64, area: f64) -> f64 {
    let omega0 = 2.0 * PI * SPEED_OF_LIGHT / lambda0;
    (omega0 / (2.0 * PI * HBAR * EPSILON_0 * area)).sqrt() * dipole
}

/// Spontaneous emission rate `γ = ω₀³ d² / (3π ε₀ ħ c³)`.
pub fn gamma_from_dipole(dipole: f64, lambda0: f64) -> f64 {
    let omega0 = 2.0 * PI * SPEED_OF_LIGHT / lambda0;
    omega0.powi(3) * dipole * dipole / (3.0 * PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3))
}

/// Wavelength at which `3ρλ₀²Lγ/(8π²Δ)` equals `kappa`.
pub fn lambda0_for_kappa(kappa: f64, density: f64, length: f64, detuning_over_gamma: f64) -> Result<f64> {
    if !(kappa > 0.0 && density > 0.0 && length > 0.0 && detuning_over_gamma > 0.0) {
        return invalid("kappa, density, length and detuning ratio must be positive");
    }
    Ok((8.0 * PI * PI * detuning_over_gamma * kappa / (3.0 * density * length)).sqrt())
}

/// The `(κ, ε_p, ε_a)` triple of one pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub kappa: f64,
    pub eps_p: f64,
    pub eps_a: f64,
}

impl ChannelParams {
    pub fn new(kappa: f64, eps_p: f64, eps_a: f64) -> Result<Self> {
        let c = ChannelParams { kappa, eps_p, eps_a };
        c.validate()?;
        Ok(c)
    }

    pub fn ideal(kappa: f64) -> Result<Self> {
        Self::new(kappa, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return invalid(format!("kappa must be a finite magnitude >= 0, got {}", self.kappa));
        }
        for (name, e) in [("eps_p", self.eps_p), ("eps_a", self.eps_a)] {
            if !(0.0..1.0).contains(&e) {
                return invalid(format!("{name} = {e} outside [0, 1)"));
            }
        }
        Ok(())
    }
}

/// κ, ε_p, ε_a from the microscopic parameters.
pub fn derive_channel(p: &PhysicalParams) -> Result<ChannelParams> {
    p.validate()?;
    let g2 = p.coupling_strength().powi(2);
    let c = SPEED_OF_LIGHT;
    let kappa = 2.0 * (p.n_photons * p.n_atoms).sqrt() * g2 / (p.detuning * c);
    let eps_p = p.n_atoms * g2 * p.gamma / (p.detuning * p.detuning * c);
    let eps_a = p.n_photons * g2 * p.gamma_prime / (p.detuning * p.detuning * c);
    ChannelParams::new(kappa, eps_p, eps_a)
        .map_err(|e| crate::Error::InvalidArgument(format!("parameters leave the small-damping regime: {e}")))
}

/// `κ = 3ρλ₀²Lγ / (8π²Δ)`, valid for matched photon and atom numbers.
pub fn kappa_from_density(p: &PhysicalParams) -> Result<f64> {
    p.validate()?;
    if ((p.n_photons - p.n_atoms) / p.n_atoms).abs() > 1e-9 {
        return invalid(format!(
            "column-density formula needs n_photons == n_atoms (got {} vs {})",
            p.n_photons, p.n_atoms
        ));
    }
    Ok(3.0 * p.density * p.lambda0.powi(2) * p.length * p.gamma / (8.0 * PI * PI * p.detuning))
}

/// Thresholds turning the "much less/greater than" conditions into checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub eps_max: f64,
    pub kappa_over_sqrt_n_max: f64,
    pub detuning_over_gamma_min: f64,
    pub fresnel_tolerance: f64,
    pub adiabatic_ratio_min: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            eps_max: 0.05,
            kappa_over_sqrt_n_max: 0.01,
            detuning_over_gamma_min: 50.0,
            fresnel_tolerance: 0.5,
            adiabatic_ratio_min: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub fresnel: f64,
    pub fresnel_ok: bool,
    pub eps_small: bool,
    pub kappa_vs_sqrt_n: bool,
    pub detuning_large: bool,
    /// `Δ / (|g| √(N_p / (cT)))`; adiabatic elimination wants this large.
    pub adiabatic_ratio: f64,
    pub adiabatic_ok: bool,
    /// Expected number of atoms undergoing a spontaneous jump, `N_p N_a |g|² γ / (Δ² c)`.
    pub jump_count_estimate: f64,
}

impl RegimeReport {
    pub fn all_pass(&self) -> bool {
        self.fresnel_ok && self.eps_small && self.kappa_vs_sqrt_n && self.detuning_large && self.adiabatic_ok
    }

    /// Names of failing checks, in a fixed order.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.fresnel_ok {
            out.push("fresnel");
        }
        if !self.eps_small {
            out.push("eps_small");
        }
        if !self.kappa_vs_sqrt_n {
            out.push("kappa_vs_sqrt_n");
        }
        if !self.detuning_large {
            out.push("detuning_large");
        }
        if !self.adiabatic_ok {
            out.push("adiabatic");
        }
        out
    }
}

pub fn validate_regime(p: &PhysicalParams, c: &ChannelParams, t: &RegimeThresholds) -> RegimeReport {
    let fresnel = p.fresnel_number();
    let g = p.coupling_strength();
    let sqrt_n = p.n_photons.min(p.n_atoms).sqrt();
    let detuning_ratio = if p.gamma > 0.0 { p.detuning / p.gamma } else { f64::INFINITY };
    let field_scale = g * (p.n_photons / (SPEED_OF_LIGHT * p.pulse_duration)).sqrt();
    let adiabatic_ratio = p.detuning / field_scale;
    let jump_count_estimate = p.n_photons * p.n_atoms * g * g * p.gamma / (p.detuning * p.detuning * SPEED_OF_LIGHT);
    RegimeReport {
        fresnel,
        fresnel_ok: (fresnel - 1.0).abs() < t.fresnel_tolerance,
        eps_small: c.eps_p < t.eps_max && c.eps_a < t.eps_max,
        kappa_vs_sqrt_n: c.kappa / sqrt_n < t.kappa_over_sqrt_n_max,
        detuning_large: detuning_ratio > t.detuning_over_gamma_min,
        adiabatic_ratio,
        adiabatic_ok: adiabatic_ratio > t.adiabatic_ratio_min,
        jump_count_estimate,
    }
}

/// One light pulse through one ensemble: QND kick, then damping of both modes.
pub fn apply_pass(
    state: &GaussianState,
    light: ModeIndex,
    atom: ModeIndex,
    c: &ChannelParams,
) -> Result<GaussianState> {
    if light == atom {
        return invalid("light and atom must be distinct modes");
    }
    c.validate()?;
    let kick = SymplecticMap::qnd(state.n_modes(), light, atom, c.kappa)?;
    state.apply_symplectic(&kick)?.loss_channel(light, c.eps_p)?.loss_channel(atom, c.eps_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{symplectic_form, vacuum_state};

    fn sample_params() -> PhysicalParams {
        let lambda0 = 7.8e-7;
        let length = 0.02;
        let area = lambda0 * length;
        let density = 5e18;
        let dipole = 3.58e-29;
        let gamma = gamma_from_dipole(dipole, lambda0);
        let n = 0.5 * density * area * length;
        PhysicalParams {
            lambda0,
            area,
            length,
            density,
            detuning: 300.0 * gamma,
            gamma,
            gamma_prime: gamma,
            n_photons: n,
            n_atoms: n,
            pulse_duration: 1e-6,
            coupling: Coupling::Dipole(dipole),
        }
    }

    #[test]
    fn consistency_identity_symmetric() {
        let p = sample_params();
        let c = derive_channel(&p).unwrap();
        let rhs = 2.0 * (c.eps_p * c.eps_a).sqrt() * p.detuning / (p.gamma * p.gamma_prime).sqrt();
        assert!(((c.kappa - rhs) / rhs).abs() < 1e-12);
    }

    #[test]
    fn detuning_power_laws() {
        let p = sample_params();
        let c = derive_channel(&p).unwrap();
        let q = derive_channel(&PhysicalParams { detuning: 2.0 * p.detuning, ..p }).unwrap();
        assert!((q.kappa / c.kappa - 0.5).abs() < 1e-12);
        assert!((q.eps_p / c.eps_p - 0.25).abs() < 1e-12);
        assert!((q.eps_a / c.eps_a - 0.25).abs() < 1e-12);
    }

    #[test]
    fn eps_p_independent_of_photon_number() {
        let p = sample_params();
        let c = derive_channel(&p).unwrap();
        let q = derive_channel(&PhysicalParams { n_photons: 3.0 * p.n_photons, ..p }).unwrap();
        assert_eq!(c.eps_p, q.eps_p);
        assert!(q.kappa > c.kappa);
        assert!(q.eps_a > c.eps_a);
    }

    #[test]
    fn kappa_monotone_in_atoms_and_coupling() {
        let p = sample_params();
        let c = derive_channel(&p).unwrap();
        let more_atoms = PhysicalParams { density: 2.0 * p.density, n_atoms: 2.0 * p.n_atoms, ..p };
        assert!(derive_channel(&more_atoms).unwrap().kappa > c.kappa);
        let stronger = PhysicalParams { coupling: Coupling::Direct(1.1 * p.coupling_strength()), ..p };
        assert!(derive_channel(&stronger).unwrap().kappa > c.kappa);
    }

    #[test]
    fn density_formula_agrees_with_microscopic_chain() {
        let p = sample_params();
        let micro = derive_channel(&p).unwrap().kappa;
        let column = kappa_from_density(&p).unwrap();
        assert!(((micro - column) / column).abs() < 1e-6, "{micro} vs {column}");
    }

    #[test]
    fn density_formula_scalings() {
        let p = sample_params();
        let k = kappa_from_density(&p).unwrap();
        let long = PhysicalParams { length: 2.0 * p.length, n_atoms: 2.0 * p.n_atoms, n_photons: 2.0 * p.n_atoms, ..p };
        assert!((kappa_from_density(&long).unwrap() / k - 2.0).abs() < 1e-12);
        let swapped = PhysicalParams { density: 2.0 * p.density, length: 0.5 * p.length, ..p };
        assert!((kappa_from_density(&swapped).unwrap() / k - 1.0).abs() < 1e-12);
        let unmatched = PhysicalParams { n_photons: 2.0 * p.n_photons, ..p };
        assert!(kappa_from_density(&unmatched).is_err());
    }

    #[test]
    fn lambda_inversion_roundtrip() {
        let lambda = lambda0_for_kappa(5.0, 5e18, 0.02, 300.0).unwrap();
        let mut p = sample_params();
        p.lambda0 = lambda;
        p.area = lambda * p.length;
        p.n_atoms = 0.5 * p.density * p.area * p.length;
        p.n_photons = p.n_atoms;
        p.gamma = gamma_from_dipole(3.58e-29, lambda);
        p.gamma_prime = p.gamma;
        p.detuning = 300.0 * p.gamma;
        assert!((kappa_from_density(&p).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let p = sample_params();
        assert!(derive_channel(&PhysicalParams { detuning: 0.0, ..p }).is_err());
        assert!(derive_channel(&PhysicalParams { length: -1.0, ..p }).is_err());
        assert!(derive_channel(&PhysicalParams { n_atoms: 2.0 * p.n_atoms, ..p }).is_err());
        assert!(derive_channel(&PhysicalParams { coupling: Coupling::Direct(0.0), ..p }).is_err());
    }

    #[test]
    fn regime_checks() {
        let p = sample_params();
        let c = derive_channel(&p).unwrap();
        let r = validate_regime(&p, &c, &RegimeThresholds::default());
        assert!(r.all_pass(), "{r:?}");
        assert!((r.jump_count_estimate - c.eps_p * p.n_photons).abs() <= 1e-12 * r.jump_count_estimate);

        let few = PhysicalParams { n_photons: 10.0, ..p };
        let c5 = ChannelParams::ideal(5.0).unwrap();
        let r = validate_regime(&few, &c5, &RegimeThresholds::default());
        assert!(!r.kappa_vs_sqrt_n);
        assert!(r.failures().contains(&"kappa_vs_sqrt_n"));
    }

    #[test]
    fn pass_on_vacuum_matches_hand_algebra() {
        let kappa = 2.5;
        let s = vacuum_state(2).unwrap();
        let out = apply_pass(&s, ModeIndex(0), ModeIndex(1), &ChannelParams::ideal(kappa).unwrap()).unwrap();
        assert!((out.cov()[(0, 0)] - 0.5 * (1.0 + kappa * kappa)).abs() < 1e-14);
        assert!((out.cov()[(1, 1)] - 0.5).abs() < 1e-14);
        assert!((out.cov()[(0, 3)] + 0.5 * kappa).abs() < 1e-14);
        assert!(apply_pass(&s, ModeIndex(0), ModeIndex(0), &ChannelParams::ideal(1.0).unwrap()).is_err());
    }

    #[test]
    fn zero_kappa_is_pure_loss() {
        let s = vacuum_state(2).unwrap().displace(ModeIndex(0), 1.0, 1.0).unwrap();
        let c = ChannelParams::new(0.0, 0.19, 0.36).unwrap();
        let out = apply_pass(&s, ModeIndex(0), ModeIndex(1), &c).unwrap();
        let expect = s.loss_channel(ModeIndex(0), 0.19).unwrap().loss_channel(ModeIndex(1), 0.36).unwrap();
        assert!((out.cov() - expect.cov()).amax() < 1e-15);
        assert!((out.mean() - expect.mean()).amax() < 1e-15);
    }

    #[test]
    fn ideal_kick_is_symplectic() {
        let m = SymplecticMap::qnd(2, ModeIndex(0), ModeIndex(1), 3.0).unwrap();
        let omega = symplectic_form(2);
        assert_eq!(m.matrix().transpose() * &omega * m.matrix(), omega);
    }
}
