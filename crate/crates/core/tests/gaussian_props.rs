mod common;

use common::{random_map, random_state, rng, symplectic_defect};
use ensemble_qcomm::gaussian::{GaussianState, ModeIndex, OutcomeSource, Quadrature, SymplecticMap};
use ensemble_qcomm::interaction::{apply_pass, ChannelParams};
use proptest::prelude::*;
use rand::Rng;

fn cov_diff(a: &GaussianState, b: &GaussianState) -> f64 {
    (a.cov() - b.cov()).amax()
}

fn mean_diff(a: &GaussianState, b: &GaussianState) -> f64 {
    (a.mean() - b.mean()).amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_symplectic_maps_preserve_physicality(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let map = random_map(n, &mut r);
        prop_assert!(symplectic_defect(map.matrix()) < 1e-10);
        let state = random_state(n, &mut r);
        let out = state.apply_symplectic(&map).unwrap();
        prop_assert!(out.is_physical(), "min eig {}", out.heisenberg_min_eigenvalue());
        let (d0, d1) = (state.cov().determinant(), out.cov().determinant());
        prop_assert!(((d1 - d0) / d0).abs() < 1e-7, "det {d0} -> {d1}");

        // composition agrees with sequential application
        let second = random_map(n, &mut r);
        let seq = out.apply_symplectic(&second).unwrap();
        let composed = state.apply_symplectic(&second.after(&map).unwrap()).unwrap();
        let scale = seq.cov().amax().max(1.0);
        prop_assert!(cov_diff(&seq, &composed) < 1e-9 * scale);
        prop_assert!(mean_diff(&seq, &composed) < 1e-9 * seq.mean().amax().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_channel_keeps_the_state_physical(seed in any::<u64>(), n in 2usize..=4, steps in 1usize..12) {
        let mut r = rng(seed);
        let mut s = random_state(n, &mut r);
        for _ in 0..steps {
            let k = ModeIndex(r.random_range(0..s.n_modes()));
            let j = ModeIndex((k.0 + 1) % s.n_modes());
            s = match r.random_range(0..6) {
                0 => s.loss_channel(k, r.random_range(0.0..=1.0)).unwrap(),
                1 => s.rotate(k, r.random_range(-3.2..3.2)).unwrap(),
                2 => s.displace(k, r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)).unwrap(),
                3 if s.n_modes() > 1 => {
                    let c = ChannelParams::new(r.random_range(0.0..5.0), r.random_range(0.0..0.5), r.random_range(0.0..0.5)).unwrap();
                    apply_pass(&s, k, j, &c).unwrap()
                }
                4 if s.n_modes() > 1 => {
                    let q = if r.random_bool(0.5) { Quadrature::X } else { Quadrature::P };
                    s.homodyne(k, q, OutcomeSource::Sample(&mut r)).unwrap().1
                }
                _ => s.apply_symplectic(&random_map(s.n_modes(), &mut r)).unwrap(),
            };
            prop_assert!(s.is_physical(), "min eig {}", s.heisenberg_min_eigenvalue());
            prop_assert!(s.symmetry_defect() == 0.0);
        }
    }

    #[test]
    fn losses_compose(seed in any::<u64>(), e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
        let mut r = rng(seed);
        let s = random_state(2, &mut r);
        let k = ModeIndex(r.random_range(0..2));
        let twice = s.loss_channel(k, e1).unwrap().loss_channel(k, e2).unwrap();
        let once = s.loss_channel(k, 1.0 - (1.0 - e1) * (1.0 - e2)).unwrap();
        prop_assert!(cov_diff(&twice, &once) < 1e-12 * s.cov().amax().max(1.0));
        prop_assert!(mean_diff(&twice, &once) < 1e-12 * s.mean().amax().max(1.0));
    }

    #[test]
    fn homodyne_covariance_ignores_outcome(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let s = random_state(n, &mut r);
        let k = ModeIndex(r.random_range(0..n));
        let q = if r.random_bool(0.5) { Quadrature::X } else { Quadrature::P };
        let posts: Vec<GaussianState> = [-3.0, 0.0, 3.0]
            .iter()
            .map(|&m| s.homodyne(k, q, OutcomeSource::Forced(m)).unwrap().1)
            .collect();
        prop_assert_eq!(posts[0].cov(), posts[1].cov());
        prop_assert_eq!(posts[1].cov(), posts[2].cov());
        // the conditional mean is affine in the outcome
        let mid = (posts[0].mean() + posts[2].mean()) * 0.5;
        prop_assert!((mid - posts[1].mean()).amax() < 1e-9 * s.mean().amax().max(1.0));
    }

    #[test]
    fn single_mode_uncertainty(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let s = random_state(n, &mut r);
        for k in 0..n {
            let (_, g) = s.marginal(ModeIndex(k)).unwrap();
            prop_assert!(g[(0, 0)] * g[(1, 1)] >= 0.25 - 1e-9);
            prop_assert!(g.determinant() >= 0.25 - 1e-9);
        }
    }

    #[test]
    fn fidelity_is_displacement_invariant(seed in any::<u64>(), dx in -4.0f64..4.0, dp in -4.0f64..4.0) {
        let mut r = rng(seed);
        let s = random_state(2, &mut r);
        let k = ModeIndex(r.random_range(0..2));
        let target = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let f0 = s.fidelity_coherent(k, target).unwrap();
        let f1 = s.displace(k, dx, dp).unwrap().fidelity_coherent(k, (target.0 + dx, target.1 + dp)).unwrap();
        prop_assert!((f0 - f1).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&f0));
    }

    #[test]
    fn pass_keeps_random_states_physical(
        seed in any::<u64>(),
        kappa in 0.0f64..10.0,
        eps_p in 0.0f64..0.99,
        eps_a in 0.0f64..0.99,
    ) {
        let mut r = rng(seed);
        let s = random_state(3, &mut r);
        let c = ChannelParams::new(kappa, eps_p, eps_a).unwrap();
        let out = apply_pass(&s, ModeIndex(0), ModeIndex(2), &c).unwrap();
        prop_assert!(out.is_physical(), "min eig {}", out.heisenberg_min_eigenvalue());
    }

    #[test]
    fn kick_sign_is_a_mirror_of_the_partner(seed in any::<u64>(), kappa in 0.0f64..6.0) {
        let mut r = rng(seed);
        let s = random_state(2, &mut r);
        let (a, b) = (ModeIndex(0), ModeIndex(1));
        let plus = SymplecticMap::qnd(2, a, b, kappa).unwrap();
        let minus = SymplecticMap::qnd(2, a, b, -kappa).unwrap();
        let pi = std::f64::consts::PI;
        let via_mirror = s
            .rotate(b, pi).unwrap()
            .apply_symplectic(&plus).unwrap()
            .rotate(b, pi).unwrap();
        let direct = s.apply_symplectic(&minus).unwrap();
        prop_assert!(cov_diff(&via_mirror, &direct) < 1e-9 * direct.cov().amax().max(1.0));
        prop_assert!(mean_diff(&via_mirror, &direct) < 1e-9 * direct.mean().amax().max(1.0));
    }
}

#[test]
fn sampled_outcomes_have_the_prior_moments() {
    let mut r = rng(2024);
    let s = random_state(2, &mut r);
    let k = ModeIndex(1);
    let v = s.cov()[(k.x(), k.x())];
    let mu = s.mean()[k.x()];
    let n = 100_000;
    let samples: Vec<f64> =
        (0..n).map(|_| s.homodyne(k, Quadrature::X, OutcomeSource::Sample(&mut r)).unwrap().0).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se_mean = (v / n as f64).sqrt();
    let se_var = v * (2.0 / (n - 1) as f64).sqrt();
    assert!((mean - mu).abs() < 5.0 * se_mean, "mean {mean} vs {mu}");
    assert!((var - v).abs() < 5.0 * se_var, "variance {var} vs {v}");
}
