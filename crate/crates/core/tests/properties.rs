//! Property-based invariants over randomized inputs.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jordan_ext::algebra::{
    is_projection, jordan_product, operator_norm, support_projection, trace, AlgebraDescriptor,
};
use jordan_ext::linmap::{devectorize, vectorize};
use jordan_ext::sample;
use jordan_ext::spectral::spectral_decomposition;
use jordan_ext::tol::Tolerances;

fn algebra(shape: &[usize]) -> std::sync::Arc<AlgebraDescriptor> {
    AlgebraDescriptor::new(shape.iter().map(|&d| (d, 1.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vectorize_round_trips(seed in 0u64..1_000_000, d1 in 1usize..4, d2 in 1usize..4) {
        let alg = algebra(&[d1, d2]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample::random_operator(&alg, &mut rng);
        let back = devectorize(&alg, &vectorize(&x)).unwrap();
        prop_assert_eq!(x, back);
    }

    #[test]
    fn support_projection_is_minimal_support(seed in 0u64..1_000_000, d in 1usize..5) {
        let t = Tolerances::default();
        let alg = algebra(&[d]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample::random_operator(&alg, &mut rng);
        let s = support_projection(&x, &t);
        prop_assert!(is_projection(&s, &t));
        // x s = x
        prop_assert!(operator_norm(&x.mul(&s).sub(&x)) <= 1e-9 * (1.0 + operator_norm(&x)));
    }

    #[test]
    fn spectral_reconstruction(seed in 0u64..1_000_000, d1 in 1usize..4, d2 in 1usize..4) {
        let t = Tolerances::default();
        let alg = algebra(&[d1, d2]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample::random_selfadjoint(&alg, &mut rng);
        let sf = spectral_decomposition(&x, &t).unwrap();
        let recon = sf.reconstruct(&alg);
        prop_assert!(operator_norm(&recon.sub(&x)) <= 1e-9 * (1.0 + operator_norm(&x)));
    }

    #[test]
    fn trace_is_linear_and_faithful(seed in 0u64..1_000_000, d in 1usize..4) {
        let alg = algebra(&[d, d]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample::random_operator(&alg, &mut rng);
        let y = sample::random_operator(&alg, &mut rng);
        let lin = trace(&x.add(&y)) - (trace(&x) + trace(&y));
        prop_assert!(lin.norm() <= 1e-10 * (1.0 + trace(&x).norm() + trace(&y).norm()));
        let pos = x.adjoint().mul(&x);
        prop_assert!(trace(&pos).re >= 0.0);
    }

    #[test]
    fn jordan_product_commutes(seed in 0u64..1_000_000, d in 1usize..4) {
        let alg = algebra(&[d]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sample::random_selfadjoint(&alg, &mut rng);
        let y = sample::random_selfadjoint(&alg, &mut rng);
        let ab = jordan_product(&x, &y).unwrap();
        let ba = jordan_product(&y, &x).unwrap();
        prop_assert!(operator_norm(&ab.sub(&ba)) <= 1e-10 * (1.0 + operator_norm(&ab)));
    }

    #[test]
    fn ground_truth_recovery_random_seeds(seed in 0u64..10_000) {
        let t = Tolerances::default();
        let bundle = jordan_ext::generators::random_instance(seed).unwrap();
        let res = jordan_ext::extension::extend_full(&bundle.problem, 8, seed, &t).unwrap();
        let diff = res.phi.sub(&bundle.ground_truth).unwrap().map_norm();
        prop_assert!(diff <= 1e-8, "seed {}: {:.3e}", seed, diff);
    }
}
