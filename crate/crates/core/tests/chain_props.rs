use mixmkl::chain::{
    self, analyze, chi_divergence_norm, density_sup, is_reversible, mixing_time, pseudo_spectral_gap,
    spectral_gaps, stationary_distribution, time_reversal, tv_decay_profile, Distribution, Tolerances,
    TransitionMatrix, DEFAULT_K_MAX, TV_ROUNDING,
};
use mixmkl::desk::random_chain;
use proptest::prelude::*;

fn two_state(p: f64) -> TransitionMatrix {
    TransitionMatrix::new(&[vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
}

fn random(n: usize, seed: u64, rev: bool) -> (TransitionMatrix, Distribution) {
    let p = random_chain(n, seed, rev).unwrap();
    let pi = stationary_distribution(&p, 1e-12).unwrap();
    (p, pi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stationary_is_a_fixed_point(n in 2usize..9, seed: u64, rev: bool) {
        let (p, pi) = random(n, seed, rev);
        let s: f64 = pi.probs().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(pi.min() > 0.0);
        prop_assert!(pi.stationarity_residual(&p) < 1e-12);
    }

    #[test]
    fn reversal_is_an_involution(n in 2usize..9, seed: u64, rev: bool) {
        let (p, pi) = random(n, seed, rev);
        let r = time_reversal(&p, &pi).unwrap();
        prop_assert!(pi.stationarity_residual(&r) < 1e-10);
        let rr = time_reversal(&r, &pi).unwrap();
        for x in 0..n {
            for y in 0..n {
                prop_assert!((rr.get(x, y) - p.get(x, y)).abs() < 1e-12);
            }
        }
        if rev {
            prop_assert!(is_reversible(&p, &pi, 1e-10));
            for x in 0..n {
                for y in 0..n {
                    prop_assert!((r.get(x, y) - p.get(x, y)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gaps_are_ordered(n in 2usize..9, seed: u64) {
        let (p, pi) = random(n, seed, true);
        let s = spectral_gaps(&p, &pi).unwrap();
        prop_assert!(s.is_reversible);
        let g = s.gamma_reversible.unwrap();
        prop_assert!((0.0..=2.0).contains(&g));
        prop_assert!(s.gamma_star <= g + 1e-12);
        prop_assert!((s.lambda - (1.0 - s.gamma_star)).abs() < 1e-15);
        // for reversible chains (P*)^k P^k = P^{2k}, so k = 1 gives 1 - λ²
        let ps = pseudo_spectral_gap(&p, &pi, DEFAULT_K_MAX).unwrap();
        prop_assert!(ps.gamma_ps >= 1.0 - s.lambda * s.lambda - 1e-10);
        prop_assert!(ps.gamma_ps <= 1.0 + 1e-12);
    }

    #[test]
    fn profile_and_mixing_times_are_monotone(n in 2usize..9, seed: u64, rev: bool) {
        let (p, pi) = random(n, seed, rev);
        let prof = tv_decay_profile(&p, &pi, 60).unwrap();
        prop_assert!(prof.at(0) <= 1.0);
        for t in 1..=prof.t_max() {
            prop_assert!(prof.at(t) <= prof.at(t - 1));
        }
        let a = analyze(&p, DEFAULT_K_MAX, 0.05, 100_000, &Tolerances::default()).unwrap();
        let mut last = usize::MAX;
        for k in 1..=9 {
            let t = mixing_time(&a.profile, 0.05 * k as f64).unwrap();
            prop_assert!(t <= last);
            prop_assert!(a.profile.at(t) <= 0.05 * k as f64 + TV_ROUNDING);
            last = t;
        }
        prop_assert!(a.tau_min.value >= 4.0 * a.tau_min.t_star as f64 - 1e-12);
        let t = a.tau_min.t_star as f64;
        let d = a.tau_min.epsilon;
        prop_assert!((a.tau_min.value - t * ((2.0 - d) / (1.0 - d)).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn two_state_family(p in 0.01f64..0.49) {
        let m = two_state(p);
        let a = analyze(&m, DEFAULT_K_MAX, 0.05, 100_000, &Tolerances::default()).unwrap();
        let r = 1.0 - 2.0 * p;
        prop_assert!((a.spectral.gamma_star - 2.0 * p).abs() < 1e-10);
        prop_assert!((a.spectral.gamma_reversible.unwrap() - 2.0 * p).abs() < 1e-10);
        for t in 0..=a.profile.t_max().min(200) {
            prop_assert!((a.profile.at(t) - 0.5 * r.powi(t as i32)).abs() < 1e-10);
        }
        let want = (1..=DEFAULT_K_MAX)
            .map(|k| (1.0 - r.powi(2 * k as i32)) / k as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((a.gamma_ps - want).abs() < 1e-10);
    }

    #[test]
    fn initial_distribution_norms(n in 2usize..9, seed: u64, w in prop::collection::vec(0.01f64..1.0, 8)) {
        let (_, pi) = random(n, seed, false);
        prop_assert!(chi_divergence_norm(&pi, &pi).unwrap() < 1e-12);
        prop_assert!((density_sup(&pi, &pi).unwrap() - 1.0).abs() < 1e-12);
        let s: f64 = w[..n].iter().sum();
        let nu = Distribution::new(w[..n].iter().map(|v| v / s).collect()).unwrap();
        let chi = chi_divergence_norm(&nu, &pi).unwrap();
        let sup = density_sup(&nu, &pi).unwrap();
        prop_assert!(sup >= 1.0 - 1e-12);
        // ‖h − 1‖²_π = Σ ν²/π − 1 ≤ sup h − 1
        prop_assert!(chi * chi <= sup - 1.0 + 1e-10);
    }
}

#[test]
fn periodic_chain_is_not_primitive() {
    let cyc = TransitionMatrix::new(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert!(!cyc.is_primitive());
    assert!(two_state(0.3).is_primitive());
    assert!(chain::TransitionMatrix::new(&[vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
}
