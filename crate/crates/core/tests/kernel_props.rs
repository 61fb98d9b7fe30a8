use mixmkl::kernel::{check_psd, combine, gram_matrix, min_eigenvalue, CombinationWeights, KernelFamily, KernelSpec};
use mixmkl::par::Execution;
use proptest::prelude::*;

fn points(max_n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), 1..max_n)
}

fn spec() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::Linear),
        (0.2f64..5.0).prop_map(|sigma| KernelSpec::Gaussian { sigma }),
        (1u32..4, 0.0f64..2.0).prop_map(|(degree, offset)| KernelSpec::Polynomial { degree, offset }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grams_are_symmetric_psd(x in points(20, 3), k in spec()) {
        let g = gram_matrix(&k, &x).unwrap();
        prop_assert_eq!(&g, &g.transpose());
        let scale = g.diagonal().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(min_eigenvalue(&g) >= -1e-10 * scale * x.len() as f64);
    }

    #[test]
    fn gaussian_diagonal_is_one_and_bounded(x in points(20, 2), sigma in 0.2f64..5.0) {
        let g = gram_matrix(&KernelSpec::Gaussian { sigma }, &x).unwrap();
        for i in 0..x.len() {
            prop_assert_eq!(g[(i, i)], 1.0);
            for j in 0..x.len() {
                prop_assert!(g[(i, j)] > 0.0 && g[(i, j)] <= 1.0);
            }
        }
    }

    #[test]
    fn combination_is_linear_and_psd(x in points(15, 2), raw in prop::collection::vec(0.01f64..1.0, 4)) {
        let fam = KernelFamily::gaussian(&[0.5, 1.0, 2.0, 4.0], 1.0, 1.0).unwrap();
        let grams = fam.grams(&x, Execution::Parallel).unwrap();
        let s: f64 = raw.iter().sum();
        let w = CombinationWeights::new(raw.iter().map(|v| v / s).collect(), 1.0).unwrap();
        let k = combine(&grams, &w, 1.0).unwrap();
        for i in 0..x.len() {
            for j in 0..x.len() {
                let want: f64 = grams.iter().zip(&w.eta).map(|(g, e)| e * g[(i, j)]).sum();
                prop_assert!((k[(i, j)] - want).abs() < 1e-14);
            }
        }
        prop_assert!(check_psd(&k).is_ok());
        prop_assert_eq!(&fam.combined_gram(&w, &x).unwrap(), &k);
    }

    #[test]
    fn combination_is_monotone_in_weights(x in points(12, 2), raw in prop::collection::vec(0.01f64..1.0, 3), i in 0usize..3, t in 0.0f64..1.0) {
        // raising one weight adds a PSD matrix; compare along an L2 arc (q = 2)
        let fam = KernelFamily::gaussian(&[0.5, 1.0, 2.0], 2.0, 1.0).unwrap();
        let grams = fam.grams(&x, Execution::Sequential).unwrap();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lo: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let mut hi = lo.clone();
        hi[i] += t;
        let a = combine(&grams, &CombinationWeights { eta: lo }, 2.0);
        prop_assert!(a.is_ok());
        let a = a.unwrap();
        let b: nalgebra::DMatrix<f64> = grams.iter().zip(&hi).map(|(g, e)| g * *e).sum();
        prop_assert!(min_eigenvalue(&(b - a)) >= -1e-10);
    }

    #[test]
    fn vertex_weights_pick_one_kernel(x in points(10, 2), i in 0usize..4, q in 1.0f64..4.0) {
        let fam = KernelFamily::gaussian(&[0.5, 1.0, 2.0, 4.0], q, 1.0).unwrap();
        let grams = fam.grams(&x, Execution::Sequential).unwrap();
        let k = combine(&grams, &CombinationWeights::vertex(4, i), q).unwrap();
        prop_assert_eq!(&k, &grams[i]);
    }
}

#[test]
fn invalid_weights_are_rejected() {
    assert!(CombinationWeights::new(vec![0.5, 0.6], 1.0).is_err());
    assert!(CombinationWeights::new(vec![-0.1, 1.1], 1.0).is_err());
    assert!(CombinationWeights::new(vec![0.6, 0.8], 2.0).is_ok());
    assert!(KernelFamily::gaussian(&[0.0], 1.0, 1.0).is_err());
}
