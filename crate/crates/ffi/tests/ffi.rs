use std::ffi::CStr;
use std::ptr;

use ensemble_qcomm_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(eqc_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn state_lifecycle_and_queries() {
    unsafe {
        let mut s: *mut EqcState = ptr::null_mut();
        assert_eq!(eqc_state_vacuum(2, &mut s), EqcStatus::Ok);
        assert_eq!(eqc_state_n_modes(s), 2);
        assert_eq!(eqc_state_displace(s, 0, 1.0, -2.0), EqcStatus::Ok);
        assert_eq!(eqc_state_rotate(s, 1, 0.3), EqcStatus::Ok);
        let c = EqcChannel { kappa: 2.0, eps_p: 0.01, eps_a: 0.02 };
        assert_eq!(eqc_state_apply_pass(s, 0, 1, &c), EqcStatus::Ok);
        assert_eq!(eqc_state_loss(s, 0, 0.1), EqcStatus::Ok);

        let mut mean = [0.0; 4];
        assert_eq!(eqc_state_mean(s, mean.as_mut_ptr(), 4), EqcStatus::Ok);
        assert!((mean[0] - 0.9f64.sqrt() * 0.99f64.sqrt()).abs() < 1e-12);
        let mut cov = [0.0; 16];
        assert_eq!(eqc_state_cov(s, cov.as_mut_ptr(), 16), EqcStatus::Ok);
        assert_eq!(cov[1], cov[4]);
        let mut small = [0.0; 3];
        assert_eq!(eqc_state_cov(s, small.as_mut_ptr(), 3), EqcStatus::BufferTooSmall);
        assert!(last_error().contains("need 16"));

        let coeffs = [1.0, 0.0, 0.0, 0.0];
        let mut v = 0.0;
        assert_eq!(eqc_state_variance(s, coeffs.as_ptr(), 4, &mut v), EqcStatus::Ok);
        assert_eq!(v, cov[0]);
        let mut eig = 0.0;
        assert_eq!(eqc_state_heisenberg_min_eigenvalue(s, &mut eig), EqcStatus::Ok);
        assert!(eig > -1e-9);

        let mut copy: *mut EqcState = ptr::null_mut();
        assert_eq!(eqc_state_clone(s, &mut copy), EqcStatus::Ok);
        assert_eq!(eqc_state_homodyne_forced(copy, 0, 0, 0.5), EqcStatus::Ok);
        assert_eq!(eqc_state_n_modes(copy), 1);
        assert_eq!(eqc_state_n_modes(s), 2);
        let mut m = 0.0;
        assert_eq!(eqc_state_homodyne_sampled(s, 1, 1, 42, &mut m), EqcStatus::Ok);
        assert!(m.is_finite());
        eqc_state_free(copy);
        eqc_state_free(s);
        eqc_state_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut s: *mut EqcState = ptr::null_mut();
        assert_eq!(eqc_state_vacuum(0, &mut s), EqcStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(eqc_state_vacuum(1, ptr::null_mut()), EqcStatus::NullPointer);
        assert_eq!(eqc_state_vacuum(1, &mut s), EqcStatus::Ok);
        assert!(last_error().is_empty());
        assert_eq!(eqc_state_loss(s, 0, 1.5), EqcStatus::InvalidArgument);
        assert_eq!(eqc_state_loss(s, 3, 0.5), EqcStatus::InvalidArgument);
        assert_eq!(eqc_state_homodyne_forced(s, 0, 7, 0.0), EqcStatus::InvalidArgument);
        assert_eq!(eqc_state_displace(ptr::null_mut(), 0, 1.0, 1.0), EqcStatus::NullPointer);
        let mut f = 0.0;
        assert_eq!(eqc_fidelity_ideal(-1.0, &mut f), EqcStatus::InvalidArgument);
        eqc_state_free(s);
    }
}

#[test]
fn closed_forms_and_protocols() {
    unsafe {
        let mut r = 0.0;
        assert_eq!(eqc_squeezing_parameter(5.0, &mut r), EqcStatus::Ok);
        assert!((r - 0.5 * 51f64.ln()).abs() < 1e-15);
        let mut k = 0.0;
        assert_eq!(eqc_optimal_kappa2(0.2, &mut k), EqcStatus::Ok);
        let (mut b, mut fl, mut fi) = (0.0, 0.0, 0.0);
        assert_eq!(eqc_lossy_bound(0.2, &mut b), EqcStatus::Ok);
        assert_eq!(eqc_fidelity_lossy(k, 0.2, &mut fl), EqcStatus::Ok);
        assert!((fl - b).abs() < 1e-12);
        assert_eq!(eqc_fidelity_ideal(5.0, &mut fi), EqcStatus::Ok);

        let noise = EqcNoise::default();
        let mut out = EqcRunSummary::default();
        assert_eq!(eqc_entangle(5.0, 5.0, &noise, 3, &mut out), EqcStatus::Ok);
        assert!((out.epr_x - 1.0 / 51.0).abs() < 1e-9);
        assert!(out.fidelity.is_nan());
        assert_eq!(eqc_teleport(5.0, 5.0, &noise, 1.0, 2.0, 3, &mut out), EqcStatus::Ok);
        assert!((out.fidelity - fi).abs() < 1e-9);
        assert!(out.conditional_fidelity > 0.0 && out.conditional_fidelity <= 1.0);
    }
}

#[test]
fn channel_from_physical_parameters() {
    let lambda0 = 2.0 * std::f64::consts::PI * 1e-7;
    let (length, density) = (0.02, 5e18);
    let area = lambda0 * length;
    let dipole = 3.58e-29;
    let omega0 = 2.0 * std::f64::consts::PI * 299_792_458.0 / lambda0;
    let gamma = omega0.powi(3) * dipole * dipole
        / (3.0 * std::f64::consts::PI * 8.854_187_812_8e-12 * 1.054_571_817e-34 * 299_792_458f64.powi(3));
    let n = 0.5 * density * area * length;
    let p = EqcPhysicalParams {
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
        coupling: dipole,
        coupling_is_dipole: 1,
    };
    let mut c = EqcChannel::default();
    assert_eq!(unsafe { eqc_derive_channel(&p, &mut c) }, EqcStatus::Ok);
    assert!((c.kappa - 5.0).abs() < 1e-9, "{}", c.kappa);
    assert!((c.eps_p - 5.0 / 600.0).abs() < 1e-9);
}

#[test]
fn header_declares_the_interface() {
    let header = include_str!("../include/ensemble_qcomm.h");
    for name in [
        "eqc_state_vacuum",
        "eqc_state_free",
        "eqc_state_homodyne_forced",
        "eqc_derive_channel",
        "eqc_teleport",
        "eqc_fidelity_ideal",
        "eqc_last_error",
        "EQC_STATUS_BUFFER_TOO_SMALL",
        "typedef struct EqcState EqcState",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c_when_a_compiler_is_available() {
    let Ok(cc) = which_cc() else { return };
    let dir = std::env::temp_dir().join(format!("eqc-header-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("check.c");
    std::fs::write(&src, "#include \"ensemble_qcomm.h\"\nint main(void) { return (int)EQC_STATUS_OK; }\n").unwrap();
    let status = std::process::Command::new(cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-std=c99", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc);
        }
    }
    Err(())
}
