//! Coherent-state overlaps computed in a truncated photon-number basis, as an
//! independent check of the phase-space fidelity formula.

use ensemble_qcomm::gaussian::fidelity_with_coherent;
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

const CUTOFF: usize = 60;
const TOL: f64 = 1e-6;

/// `α = (x + i p)/√2` for vacuum quadrature variance ½.
fn amplitude(x: f64, p: f64) -> Complex64 {
    Complex64::new(x, p) / 2f64.sqrt()
}

/// `⟨n|γ⟩` for n < CUTOFF.
fn coherent_coefficients(gamma: Complex64) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(CUTOFF);
    let mut term = Complex64::new((-0.5 * gamma.norm_sqr()).exp(), 0.0);
    for n in 0..CUTOFF {
        c.push(term);
        term = term * gamma / ((n + 1) as f64).sqrt();
    }
    c
}

/// `⟨n|S(r)|0⟩` for real squeezing of X.
fn squeezed_vacuum_coefficients(r: f64) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); CUTOFF];
    let t = r.tanh();
    let mut amp = 1.0 / r.cosh().sqrt();
    let mut m = 0;
    while 2 * m < CUTOFF {
        c[2 * m] = Complex64::new(amp, 0.0);
        // c_{2m+2} / c_{2m} = -tanh r · √((2m+1)(2m+2)) / (2(m+1))
        amp *= -t * (((2 * m + 1) * (2 * m + 2)) as f64).sqrt() / (2.0 * (m + 1) as f64);
        m += 1;
    }
    c
}

/// `⟨α|D(β) ρ_th D(β)†|α⟩ = Σ p_n |⟨n|α-β⟩|²`.
fn oracle_displaced_thermal(nbar: f64, beta: Complex64, alpha: Complex64) -> f64 {
    let c = coherent_coefficients(alpha - beta);
    let q = nbar / (1.0 + nbar);
    let mut p = 1.0 / (1.0 + nbar);
    let mut f = 0.0;
    for cn in c {
        f += p * cn.norm_sqr();
        p *= q;
    }
    f
}

/// `|⟨α|D(β) S(r)|0⟩|² = |⟨α-β|S(r)|0⟩|²`.
fn oracle_displaced_squeezed(r: f64, beta: Complex64, alpha: Complex64) -> f64 {
    let target = coherent_coefficients(alpha - beta);
    let psi = squeezed_vacuum_coefficients(r);
    target.iter().zip(&psi).map(|(t, s)| t.conj() * s).sum::<Complex64>().norm_sqr()
}

#[test]
fn fock_basis_normalization() {
    let s: f64 = squeezed_vacuum_coefficients(0.8).iter().map(|c| c.norm_sqr()).sum();
    assert!((s - 1.0).abs() < 1e-9);
    let c: f64 = coherent_coefficients(Complex64::new(1.5, -1.0)).iter().map(|c| c.norm_sqr()).sum();
    assert!((c - 1.0).abs() < 1e-12);
}

#[test]
fn displaced_thermal_against_coherent_target() {
    for &(nbar, mx, mp, tx, tp) in
        &[(0.0, 0.0, 0.0, 0.0, 0.0), (0.3, 1.0, -0.5, 0.2, 0.1), (1.0, 2.0, 1.0, 1.5, 1.5), (2.5, -1.0, 0.7, 0.0, 0.0)]
    {
        let var = nbar + 0.5;
        let f = fidelity_with_coherent(&Vector2::new(mx, mp), &Matrix2::new(var, 0.0, 0.0, var), (tx, tp)).unwrap();
        let oracle = oracle_displaced_thermal(nbar, amplitude(mx, mp), amplitude(tx, tp));
        assert!((f - oracle).abs() < TOL, "nbar {nbar}: {f} vs {oracle}");
    }
}

#[test]
fn squeezed_vacuum_against_coherent_target() {
    for &(r, mx, mp, tx, tp) in &[
        (0.0f64, 0.0, 0.0, 0.5, 0.5),
        (0.3, 0.0, 0.0, 0.0, 0.0),
        (0.5, 0.0, 0.0, 1.0, 0.0),
        (0.5, 0.0, 0.0, 0.0, 1.0),
        (0.8, 0.4, -0.3, -0.6, 0.9),
    ] {
        let gamma = Matrix2::new(0.5 * (-2.0 * r).exp(), 0.0, 0.0, 0.5 * (2.0 * r).exp());
        let f = fidelity_with_coherent(&Vector2::new(mx, mp), &gamma, (tx, tp)).unwrap();
        let oracle = oracle_displaced_squeezed(r, amplitude(mx, mp), amplitude(tx, tp));
        assert!((f - oracle).abs() < TOL, "r {r}: {f} vs {oracle}");
    }
}
