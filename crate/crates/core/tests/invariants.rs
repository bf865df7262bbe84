use proptest::prelude::*;
use qlevy_core::algebra::{build_function_bialgebra, build_group_bialgebra, cyclic_table, s3_table, FiniteStarBialgebra};
use qlevy_core::cocycle::{kernel_product, MatrixSumKernel};
use qlevy_core::convolution::{convolve, exp_star, ExpMethod, MatrixValuedMap};
use qlevy_core::io::{self, Document, ParseOptions};
use qlevy_core::linalg::CMat;
use qlevy_core::perturb::{diamond, weyl_generator};
use qlevy_core::sample;
use qlevy_core::schurmann::{gns_reconstruct, is_conditionally_positive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(which: usize) -> FiniteStarBialgebra {
    match which % 4 {
        0 => build_group_bialgebra(&cyclic_table(2)).unwrap(),
        1 => build_group_bialgebra(&cyclic_table(3)).unwrap(),
        2 => build_function_bialgebra(&cyclic_table(3)).unwrap(),
        _ => build_function_bialgebra(&s3_table()).unwrap(),
    }
}

fn random_map(rng: &mut ChaCha8Rng, a: &FiniteStarBialgebra, target: usize) -> MatrixValuedMap {
    MatrixValuedMap::new((0..a.dim()).map(|_| sample::matrix(rng, target, target, 1.0)).collect()).unwrap()
}

fn random_kernel(rng: &mut ChaCha8Rng, noise: usize, n_max: usize) -> MatrixSumKernel {
    let levels = (0..=n_max)
        .map(|n| {
            let size = (noise + 1).pow(n as u32);
            sample::matrix(rng, size, size, 1.0)
        })
        .collect();
    MatrixSumKernel::new(noise, levels, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_is_associative_with_counit_unit(seed in any::<u64>(), which in 0usize..4, target in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = fixture(which);
        let (f, g, h) = (random_map(&mut rng, &a, target), random_map(&mut rng, &a, target), random_map(&mut rng, &a, target));
        let left = convolve(&a, &convolve(&a, &f, &g).unwrap(), &h).unwrap();
        let right = convolve(&a, &f, &convolve(&a, &g, &h).unwrap()).unwrap();
        prop_assert!(left.max_diff(&right) < 1e-11);
        let unit = MatrixValuedMap::counit(&a);
        prop_assert!(convolve(&a, &unit, &f).unwrap().max_diff(&f) < 1e-13);
        prop_assert!(convolve(&a, &f, &unit).unwrap().max_diff(&f) < 1e-13);
    }

    #[test]
    fn convolution_exponential_is_a_semigroup(seed in any::<u64>(), which in 0usize..4, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = fixture(which);
        let gamma = sample::conditionally_positive(&mut rng, &a, 0.8).unwrap();
        let es = exp_star(&a, &gamma, s, ExpMethod::Semigroup, 1e-12).unwrap();
        let et = exp_star(&a, &gamma, t, ExpMethod::Semigroup, 1e-12).unwrap();
        let est = exp_star(&a, &gamma, s + t, ExpMethod::Semigroup, 1e-12).unwrap();
        prop_assert!(convolve(&a, &es, &et).unwrap().max_diff(&est) < 1e-10);
        let series = exp_star(&a, &gamma, s + t, ExpMethod::Series, 1e-12).unwrap();
        prop_assert!(series.max_diff(&est) < 1e-9);
    }

    #[test]
    fn sampled_generators_are_conditionally_positive_and_reconstruct(seed in any::<u64>(), which in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = fixture(which);
        let gamma = sample::conditionally_positive(&mut rng, &a, 1.0).unwrap();
        prop_assert!(is_conditionally_positive(&a, &gamma, 1e-10).unwrap().verdict);
        let triple = gns_reconstruct(&a, &gamma, 1e-10).unwrap();
        prop_assert!(triple.check(&a, 1e-9).passed());
        prop_assert!(triple.gamma.max_diff(&gamma) < 1e-10);
    }

    #[test]
    fn diamond_is_associative_and_weyl_is_a_homomorphism(seed in any::<u64>(), r in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, m, n) = (sample::hat_operator(&mut rng, r), sample::hat_operator(&mut rng, r), sample::hat_operator(&mut rng, r));
        let left = diamond(&diamond(&l, &m).unwrap(), &n).unwrap();
        let right = diamond(&l, &diamond(&m, &n).unwrap()).unwrap();
        prop_assert!(left.max_diff(&right) < 1e-10);
        let (e1, e2) = (sample::euclidean(&mut rng, r), sample::euclidean(&mut rng, r));
        let composed = diamond(&weyl_generator(&e1), &weyl_generator(&e2)).unwrap();
        prop_assert!(composed.max_diff(&weyl_generator(&e1.compose(&e2).unwrap())) < 1e-10);
    }

    #[test]
    fn time_reversal_is_an_involution(seed in any::<u64>(), pieces in 1usize..5, noise in 0usize..3, t in 0.1f64..3.0, probes in proptest::collection::vec(0.0f64..1.0, 8)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = sample::step_function(&mut rng, noise, pieces, 2.0, 1.0);
        let twice = f.time_reverse(t).unwrap().time_reverse(t).unwrap();
        for p in probes {
            let s = p * (t + 1.0);
            let on_piece = f.breakpoints().iter().chain([&t]).all(|b| (b - s).abs() > 1e-9);
            if on_piece {
                prop_assert!((twice.value_at(s) - f.value_at(s)).norm() < 1e-12);
            }
        }
        prop_assert!((twice.support_end() - f.support_end().max(t)).abs() < 1e-12);
    }

    #[test]
    fn documents_round_trip_through_json(seed in any::<u64>(), which in 0usize..4, noise in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = fixture(which);
        let docs = [
            Document::Bialgebra(a.clone()),
            Document::StepFunction(sample::step_function(&mut rng, noise, 3, 1.5, 2.0)),
            Document::Functional { algebra: Some(a.clone()), functional: sample::conditionally_positive(&mut rng, &a, 1.0).unwrap() },
        ];
        for doc in docs {
            let text = io::to_json_string(&io::to_value(&doc));
            let back = io::parse_str(&text, ParseOptions::default()).unwrap();
            prop_assert_eq!(io::to_json_string(&io::to_value(&back)), text);
        }
    }

    #[test]
    fn kernel_product_is_a_unital_associative_product(seed in any::<u64>(), noise in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_max = if noise == 1 { 3 } else { 2 };
        let (f, g, h) = (random_kernel(&mut rng, noise, n_max), random_kernel(&mut rng, noise, n_max), random_kernel(&mut rng, noise, n_max));
        let unit = MatrixSumKernel::unit(noise, n_max).unwrap();
        prop_assert!(kernel_product(&unit, &f, n_max).unwrap().max_diff(&f, n_max) < 1e-13);
        prop_assert!(kernel_product(&f, &unit, n_max).unwrap().max_diff(&f, n_max) < 1e-13);
        let left = kernel_product(&kernel_product(&f, &g, n_max).unwrap(), &h, n_max).unwrap();
        let right = kernel_product(&f, &kernel_product(&g, &h, n_max).unwrap(), n_max).unwrap();
        prop_assert!(left.max_diff(&right, n_max) < 1e-9);
        let adj = kernel_product(&f, &g, n_max).unwrap().adjoint();
        let swapped = kernel_product(&g.adjoint(), &f.adjoint(), n_max).unwrap();
        prop_assert!(adj.max_diff(&swapped, n_max) < 1e-10);
    }
}

#[test]
fn zero_noise_kernels_are_scalars() {
    let f = MatrixSumKernel::new(0, vec![CMat::from_element(1, 1, 2.0.into()); 3], None).unwrap();
    let ff = kernel_product(&f, &f, 2).unwrap();
    for n in 0..=2 {
        assert!((ff.level(n)[(0, 0)].re - 4.0 * 2f64.powi(n as i32)).abs() < 1e-14);
    }
}
