use mixmkl::bounds::{
    empirical_chaos_complexity_points, empirical_rademacher_points, generalization_bound, lq_sup,
    rademacher_bound, BoundInputs, BoundKind, CompressedGrams, RademacherKind,
};
use mixmkl::data::{generate, AssignmentMode};
use mixmkl::desk::six_state_triple;
use mixmkl::kernel::{gram_matrix, KernelFamily};
use mixmkl::par::Execution;
use mixmkl::rng::{derive_seed, Stream, SIGN_STREAM};
use proptest::prelude::*;

fn inputs(n: usize, m: usize, alpha: f64) -> BoundInputs {
    let mut i = BoundInputs::new(n, m, alpha);
    i.delta = 0.5;
    i.tau_min = Some(6.0);
    i.b_n = Some(0.05);
    i
}

fn points(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 2..max_n)
}

fn signs(seed: u64, trial: usize, n: usize) -> Vec<f64> {
    let mut s = Stream::new(derive_seed(seed, trial as u64), SIGN_STREAM);
    (0..n).map(|_| s.sign()).collect()
}

fn quad(g: &nalgebra::DMatrix<f64>, e: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..e.len() {
        for j in 0..e.len() {
            acc += e[i] * e[j] * g[(i, j)];
        }
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_fall_with_n_and_rise_with_m(n in 1usize..10_000, m in 1usize..64, alpha in 0.001f64..0.5) {
        let kinds = [BoundKind::Thm1, BoundKind::Thm2, BoundKind::Corollary];
        for k in kinds {
            let here = generalization_bound(k, &inputs(n, m, alpha), None);
            if k == BoundKind::Thm2 { continue; }
            let here = here.unwrap().value;
            let more_n = generalization_bound(k, &inputs(n + 1, m, alpha), None).unwrap().value;
            let more_m = generalization_bound(k, &inputs(n, m + 1, alpha), None).unwrap().value;
            prop_assert!(more_n < here);
            prop_assert!(more_m >= here);
        }
        let l = rademacher_bound(RademacherKind::Lemma5, &inputs(n, m, alpha)).unwrap().value;
        let l2 = rademacher_bound(RademacherKind::Lemma5, &inputs(n, m, alpha / 2.0)).unwrap().value;
        prop_assert!(l2 > l);
        let c = rademacher_bound(RademacherKind::CortesL1, &inputs(n, m, alpha)).unwrap();
        prop_assert!(c.log2_variant.unwrap() >= c.value);
    }

    #[test]
    fn lq_sup_is_attained(a in prop::collection::vec(-3.0f64..3.0, 1..6), q in 1.01f64..5.0) {
        prop_assert_eq!(lq_sup(&a, 1.0), a.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let s = lq_sup(&a, q);
        if a.iter().any(|v| *v > 0.0) {
            // η ∝ a₊^{r−1} attains the supremum on the unit L_q sphere
            let r = q / (q - 1.0);
            let raw: Vec<f64> = a.iter().map(|v| v.max(0.0).powf(r - 1.0)).collect();
            let norm = raw.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q);
            let val: f64 = raw.iter().zip(&a).map(|(e, v)| e / norm * v).sum();
            prop_assert!((val - s).abs() <= 1e-9 * (1.0 + s.abs()));
        }
        // any other unit vector does no better
        let other: Vec<f64> = (0..a.len()).map(|i| 1.0 + i as f64).collect();
        let norm = other.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q);
        let val: f64 = other.iter().zip(&a).map(|(e, v)| e / norm * v).sum();
        prop_assert!(val <= s + 1e-9 * (1.0 + s.abs()) || a.iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn draws_match_direct_quadratic_forms(x in points(25), seed: u64, trial in 0usize..100) {
        let mut xs = x.clone();
        xs.extend(x.iter().take(3).cloned());
        let fam = KernelFamily::gaussian(&[0.5, 2.0], 1.0, 1.0).unwrap();
        let cg = CompressedGrams::new(&xs, &fam, Execution::Sequential).unwrap();
        let d = cg.draw(seed, trial);
        let e = signs(seed, trial, xs.len());
        for (k, spec) in fam.kernels.iter().enumerate() {
            let g = gram_matrix(spec, &xs).unwrap();
            let want = quad(&g, &e);
            prop_assert!((d.quad[k] - want).abs() <= 1e-9 * (1.0 + want.abs()));
            prop_assert!((cg.traces[k] - g.trace()).abs() <= 1e-9 * g.trace());
        }
    }

    #[test]
    fn two_point_chaos_by_hand(x in points(3), seed: u64, q in 1.0f64..3.0) {
        let x = &x[..2];
        let fam = KernelFamily::gaussian(&[0.5, 1.0, 3.0], q, 1.0).unwrap();
        let cg = CompressedGrams::new(x, &fam, Execution::Sequential).unwrap();
        let e = signs(seed, 0, 2);
        let a: Vec<f64> = fam.kernels.iter().map(|k| e[0] * e[1] * k.eval(&x[0], &x[1])).collect();
        let want = lq_sup(&a, q) / 2.0;
        let got = cg.draw(seed, 0).chaos(&cg.traces, 2, q);
        prop_assert!((got - want).abs() <= 1e-12);
    }
}

/// E_ε over all 2ⁿ sign vectors.
fn exact_rademacher(x: &[Vec<f64>], fam: &KernelFamily) -> f64 {
    let n = x.len();
    let grams: Vec<_> = fam.kernels.iter().map(|k| gram_matrix(k, x).unwrap()).collect();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let e: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
        let a: Vec<f64> = grams.iter().map(|g| quad(g, &e)).collect();
        total += fam.b * lq_sup(&a, fam.q).max(0.0).sqrt() / n as f64;
    }
    total / (1u64 << n) as f64
}

#[test]
fn monte_carlo_matches_enumeration() {
    let mut s = Stream::new(5, 0);
    for (case, q) in [(0, 1.0), (1, 1.0), (2, 2.0), (3, 3.0)] {
        let n = 6 + case;
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![4.0 * s.uniform() - 2.0, 4.0 * s.uniform() - 2.0]).collect();
        let fam = KernelFamily::gaussian(&[0.3, 1.0, 3.0], q, 1.5).unwrap();
        let exact = exact_rademacher(&x, &fam);
        let mc = empirical_rademacher_points(&x, &fam, 20_000, case as u64, Execution::Parallel).unwrap();
        assert!(
            (mc.estimate - exact).abs() <= 4.0 * mc.stderr,
            "n={n} q={q}: {} vs {exact} (se {})",
            mc.estimate,
            mc.stderr
        );
    }
}

#[test]
fn chaos_has_mean_zero_for_one_kernel() {
    let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i as f64 * 0.37).sin()]).collect();
    let fam = KernelFamily::gaussian(&[1.0], 1.0, 1.0).unwrap();
    let mc = empirical_chaos_complexity_points(&x, &fam, 20_000, 1, Execution::Parallel).unwrap();
    assert!(mc.estimate.abs() <= 4.0 * mc.stderr, "{} ± {}", mc.estimate, mc.stderr);
}

#[test]
fn estimate_stays_below_lemma5() {
    let pool = six_state_triple().unwrap();
    let fam = KernelFamily::gaussian(&[0.5, 1.0, 2.0, 4.0], 1.0, 1.0).unwrap();
    let alpha = 0.05;
    let n = 100;
    let runs = 200;
    let mut inp = BoundInputs::new(n, fam.m(), alpha);
    inp.kappa = fam.kappa().unwrap();
    let bound = rademacher_bound(RademacherKind::Lemma5, &inp).unwrap().value;
    let below = (0..runs)
        .filter(|&r| {
            let ds = generate(&pool, n, r, AssignmentMode::Probabilistic).unwrap();
            let est = empirical_rademacher_points(&ds.features(), &fam, 200, r, Execution::Sequential).unwrap();
            est.estimate <= bound
        })
        .count();
    let freq = below as f64 / runs as f64;
    assert!(freq >= 1.0 - alpha - 3.0 * (alpha * (1.0 - alpha) / runs as f64).sqrt(), "{freq}");
}
