//! C interface to the ensemble-qcomm simulator.
//!
//! Conventions:
//! * Every fallible function returns an `EqcStatus`; `EQC_STATUS_OK` is zero.
//! * On failure, `eqc_last_error()` returns a message for the calling thread.
//! * States are opaque handles created by `eqc_state_*` constructors and
//!   released with `eqc_state_free`. Operations replace the state in place.
//! * Quadratures are ordered `(X0, P0, X1, P1, ...)`, vacuum variance 1/2.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ensemble_qcomm::gaussian::{vacuum_state, GaussianState, ModeIndex, OutcomeSource, Quadrature};
use ensemble_qcomm::interaction::{apply_pass, derive_channel, ChannelParams, Coupling, PhysicalParams};
use ensemble_qcomm::protocols::{
    entangle, fidelity_ideal, fidelity_lossy, lossy_bound, optimal_kappa2, squeezing_parameter, teleport, Noise,
    Outcomes, Scheme,
};
use ensemble_qcomm::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqcStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericalDegeneracy = 2,
    Internal = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Opaque Gaussian state handle.
pub struct EqcState {
    inner: GaussianState,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EqcChannel {
    pub kappa: f64,
    pub eps_p: f64,
    pub eps_a: f64,
}

/// Physical parameters in SI units. `coupling_is_dipole != 0` means
/// `coupling` holds a transition dipole moment (C m) rather than g.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EqcPhysicalParams {
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
    pub coupling: f64,
    pub coupling_is_dipole: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EqcNoise {
    pub eps_p: f64,
    pub eps_a: f64,
    pub eta_t: f64,
    pub eta_d: f64,
    pub local_eta_t: f64,
}

/// Results of an entanglement or teleportation run. Fidelities are NaN for
/// entanglement-only runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EqcRunSummary {
    pub r: f64,
    pub epr_x: f64,
    pub epr_p: f64,
    pub fidelity: f64,
    pub conditional_fidelity: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> EqcStatus {
    match e {
        Error::InvalidArgument(_) => EqcStatus::InvalidArgument,
        Error::NumericalDegeneracy(_) => EqcStatus::NumericalDegeneracy,
        Error::Internal(_) => EqcStatus::Internal,
    }
}

struct Fail(EqcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EqcStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> EqcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EqcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EqcStatus::Panic
        }
    }
}

unsafe fn state_mut<'a>(s: *mut EqcState) -> Result<&'a mut EqcState, Fail> {
    s.as_mut().ok_or_else(|| null("state"))
}

unsafe fn state_ref<'a>(s: *const EqcState) -> Result<&'a EqcState, Fail> {
    s.as_ref().ok_or_else(|| null("state"))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn quadrature(q: i32) -> Result<Quadrature, Fail> {
    match q {
        0 => Ok(Quadrature::X),
        1 => Ok(Quadrature::P),
        _ => Err(Fail(EqcStatus::InvalidArgument, format!("quadrature must be 0 (X) or 1 (P), got {q}"))),
    }
}

fn channel(c: &EqcChannel) -> Result<ChannelParams, Fail> {
    Ok(ChannelParams::new(c.kappa, c.eps_p, c.eps_a)?)
}

fn noise(n: &EqcNoise) -> Noise {
    Noise { eps_p: n.eps_p, eps_a: n.eps_a, eta_t: n.eta_t, eta_d: n.eta_d, local_eta_t: n.local_eta_t }
}

fn scheme(kappa1: f64, kappa2: f64, n: &EqcNoise) -> Scheme {
    Scheme::asymmetric(kappa1, kappa2, noise(n))
}

/// Message describing the last failure on this thread; empty after success.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn eqc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a NUL-terminated string.
#[no_mangle]
pub extern "C" fn eqc_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Creates the vacuum on `n_modes` modes.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_vacuum(n_modes: usize, out: *mut *mut EqcState) -> EqcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let state = Box::new(EqcState { inner: vacuum_state(n_modes)? });
        out.write(Box::into_raw(state));
        Ok(())
    })
}

/// Copies a state.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_clone(state: *const EqcState, out: *mut *mut EqcState) -> EqcStatus {
    guard(|| {
        let s = state_ref(state)?;
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(Box::into_raw(Box::new(EqcState { inner: s.inner.clone() })));
        Ok(())
    })
}

/// Releases a state. Null is ignored.
///
/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_free(state: *mut EqcState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of modes; zero for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_n_modes(state: *const EqcState) -> usize {
    state.as_ref().map_or(0, |s| s.inner.n_modes())
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_displace(state: *mut EqcState, mode: usize, dx: f64, dp: f64) -> EqcStatus {
    guard(|| {
        let s = state_mut(state)?;
        s.inner = s.inner.displace(ModeIndex(mode), dx, dp)?;
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_rotate(state: *mut EqcState, mode: usize, theta: f64) -> EqcStatus {
    guard(|| {
        let s = state_mut(state)?;
        s.inner = s.inner.rotate(ModeIndex(mode), theta)?;
        Ok(())
    })
}

/// Loss channel of strength `eps` in [0, 1] on one mode.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_loss(state: *mut EqcState, mode: usize, eps: f64) -> EqcStatus {
    guard(|| {
        let s = state_mut(state)?;
        s.inner = s.inner.loss_channel(ModeIndex(mode), eps)?;
        Ok(())
    })
}

/// One light pass through an ensemble: QND kick, then damping.
///
/// # Safety
/// `state` must be a live handle and `c` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_apply_pass(
    state: *mut EqcState,
    light: usize,
    atom: usize,
    c: *const EqcChannel,
) -> EqcStatus {
    guard(|| {
        let s = state_mut(state)?;
        let c = channel(c.as_ref().ok_or_else(|| null("channel"))?)?;
        s.inner = apply_pass(&s.inner, ModeIndex(light), ModeIndex(atom), &c)?;
        Ok(())
    })
}

/// Homodyne detection with a given outcome. The measured mode is removed.
/// `quad` is 0 for X and 1 for P.
///
/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_homodyne_forced(
    state: *mut EqcState,
    mode: usize,
    quad: i32,
    outcome: f64,
) -> EqcStatus {
    guard(|| {
        let s = state_mut(state)?;
        let (_, post) = s.inner.homodyne(ModeIndex(mode), quadrature(quad)?, OutcomeSource::Forced(outcome))?;
        s.inner = post;
        Ok(())
    })
}

/// Homodyne detection with an outcome drawn from a generator seeded by `seed`.
///
/// # Safety
/// `state` must be a live handle and `outcome` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_homodyne_sampled(
    state: *mut EqcState,
    mode: usize,
    quad: i32,
    seed: u64,
    outcome: *mut f64,
) -> EqcStatus {
    guard(|| {
        let s = state_mut(state)?;
        if outcome.is_null() {
            return Err(null("outcome"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, post) = s.inner.homodyne(ModeIndex(mode), quadrature(quad)?, OutcomeSource::Sample(&mut rng))?;
        s.inner = post;
        outcome.write(m);
        Ok(())
    })
}

/// Variance of `Σ coeffs[i] r_i` over the quadrature vector `r`; `len` must equal `2 n_modes`.
///
/// # Safety
/// `coeffs` must point to `len` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_variance(
    state: *const EqcState,
    coeffs: *const f64,
    len: usize,
    out: *mut f64,
) -> EqcStatus {
    guard(|| {
        let s = state_ref(state)?;
        if coeffs.is_null() {
            return Err(null("coeffs"));
        }
        let c = std::slice::from_raw_parts(coeffs, len);
        write(out, s.inner.variance_of(c)?)
    })
}

/// Overlap of one mode with the coherent state of mean `(x, p)`.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_fidelity_coherent(
    state: *const EqcState,
    mode: usize,
    x: f64,
    p: f64,
    out: *mut f64,
) -> EqcStatus {
    guard(|| {
        let s = state_ref(state)?;
        write(out, s.inner.fidelity_coherent(ModeIndex(mode), (x, p))?)
    })
}

/// Minimum eigenvalue of the uncertainty matrix; non-negative for physical states.
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_heisenberg_min_eigenvalue(state: *const EqcState, out: *mut f64) -> EqcStatus {
    guard(|| {
        let s = state_ref(state)?;
        write(out, s.inner.heisenberg_min_eigenvalue())
    })
}

/// Copies the mean vector (`2 n_modes` values).
///
/// # Safety
/// `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_mean(state: *const EqcState, buf: *mut f64, len: usize) -> EqcStatus {
    guard(|| {
        let s = state_ref(state)?;
        let mean = s.inner.mean();
        copy_out(mean.as_slice(), buf, len)
    })
}

/// Copies the covariance matrix in row-major order (`(2 n_modes)^2` values).
///
/// # Safety
/// `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn eqc_state_cov(state: *const EqcState, buf: *mut f64, len: usize) -> EqcStatus {
    guard(|| {
        let s = state_ref(state)?;
        let cov = s.inner.cov().transpose();
        copy_out(cov.as_slice(), buf, len)
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err(Fail(EqcStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Derives `(κ, ε_p, ε_a)` from physical parameters.
///
/// # Safety
/// `params` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_derive_channel(params: *const EqcPhysicalParams, out: *mut EqcChannel) -> EqcStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let coupling =
            if p.coupling_is_dipole != 0 { Coupling::Dipole(p.coupling) } else { Coupling::Direct(p.coupling) };
        let params = PhysicalParams {
            lambda0: p.lambda0,
            area: p.area,
            length: p.length,
            density: p.density,
            detuning: p.detuning,
            gamma: p.gamma,
            gamma_prime: p.gamma_prime,
            n_photons: p.n_photons,
            n_atoms: p.n_atoms,
            pulse_duration: p.pulse_duration,
            coupling,
        };
        let c = derive_channel(&params)?;
        write(out, EqcChannel { kappa: c.kappa, eps_p: c.eps_p, eps_a: c.eps_a })
    })
}

/// `r = ½ ln(1 + 2κ²)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_squeezing_parameter(kappa: f64, out: *mut f64) -> EqcStatus {
    guard(|| write(out, squeezing_parameter(kappa)?))
}

/// Loss-free teleportation fidelity.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_fidelity_ideal(kappa: f64, out: *mut f64) -> EqcStatus {
    guard(|| write(out, fidelity_ideal(kappa)?))
}

/// Approximate fidelity of the asymmetric scheme under transmission loss.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_fidelity_lossy(kappa2: f64, eta_t: f64, out: *mut f64) -> EqcStatus {
    guard(|| write(out, fidelity_lossy(kappa2, eta_t)?))
}

/// `κ₂* = η_t^(-1/4)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_optimal_kappa2(eta_t: f64, out: *mut f64) -> EqcStatus {
    guard(|| write(out, optimal_kappa2(eta_t)?))
}

/// `1 / (1 + √η_t)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_lossy_bound(eta_t: f64, out: *mut f64) -> EqcStatus {
    guard(|| write(out, lossy_bound(eta_t)?))
}

/// Entangles two ensembles with rounds `(kappa1, kappa2)`. Outcomes are
/// sampled from a generator seeded by `seed`.
///
/// # Safety
/// `noise` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_entangle(
    kappa1: f64,
    kappa2: f64,
    noise: *const EqcNoise,
    seed: u64,
    out: *mut EqcRunSummary,
) -> EqcStatus {
    guard(|| {
        let s = scheme(kappa1, kappa2, noise.as_ref().ok_or_else(|| null("noise"))?);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, rep) = entangle(&s.entangle[0], &s.entangle[1], &mut Outcomes::Sample(&mut rng))?;
        write(
            out,
            EqcRunSummary {
                r: rep.r,
                epr_x: rep.epr_x,
                epr_p: rep.epr_p,
                fidelity: f64::NAN,
                conditional_fidelity: f64::NAN,
            },
        )
    })
}

/// Entangles, then teleports the coherent state `(input_x, input_p)` with
/// the calibrated gain. Uses `(kappa1, kappa2)` for entangling and the reverse
/// order for the local measurement.
///
/// # Safety
/// `noise` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn eqc_teleport(
    kappa1: f64,
    kappa2: f64,
    noise: *const EqcNoise,
    input_x: f64,
    input_p: f64,
    seed: u64,
    out: *mut EqcRunSummary,
) -> EqcStatus {
    guard(|| {
        let s = scheme(kappa1, kappa2, noise.as_ref().ok_or_else(|| null("noise"))?);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut outcomes = Outcomes::Sample(&mut rng);
        let (ent, _) = entangle(&s.entangle[0], &s.entangle[1], &mut outcomes)?;
        let (_, rep) = teleport(&ent, (input_x, input_p), &s.local[0], &s.local[1], None, &mut outcomes)?;
        write(
            out,
            EqcRunSummary {
                r: rep.r,
                epr_x: rep.epr_x,
                epr_p: rep.epr_p,
                fidelity: rep.fidelity.unwrap_or(f64::NAN),
                conditional_fidelity: rep.conditional_fidelity.unwrap_or(f64::NAN),
            },
        )
    })
}
