//! Property tests over seeded random instances. Each case draws a seed and
//! sizes; the instance itself comes from the crate's own generators.

use infogeo_core::classical::{
    fisher_metric, kl_divergence, parallel_transport, ClassicalTangent, ExponentialFamily, FiniteDistribution,
    Transport,
};
use infogeo_core::estimation::{maxent_fit, sample};
use infogeo_core::kubo::kubo_n_point;
use infogeo_core::linalg::Matrix;
use infogeo_core::monotonicity::{
    audit_fisher_contraction, audit_quantum_contraction, random_stochastic_map, random_unital_cp_map,
};
use infogeo_core::projection::{roll, MarkovGenerator};
use infogeo_core::quantum::{
    mixture_entropy_bound, quantum_maxent_fit, DensityMatrix, QuantumExponentialFamily, QuantumMetric, QuantumTangent,
};
use infogeo_core::rng::{gaussian, random_density_matrix, random_hermitian, random_probabilities, seeded};
use proptest::prelude::*;
use rand::Rng;

fn random_family(seed: u64, omega: usize, n: usize) -> ExponentialFamily {
    let mut rng = seeded(seed);
    let features = (0..n).map(|_| (0..omega).map(|_| gaussian(&mut rng)).collect()).collect();
    ExponentialFamily::new(features, None).unwrap()
}

fn distribution(seed: u64, n: usize) -> FiniteDistribution {
    FiniteDistribution::new(random_probabilities(&mut seeded(seed), n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fisher_metric_contracts_under_stochastic_maps(seed in any::<u64>(), n in 2usize..7, m in 2usize..7) {
        let rho = distribution(seed, n);
        let mut rng = seeded(seed ^ 1);
        let raw: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
        let t = ClassicalTangent::centred_score(&rho, &raw).unwrap();
        let map = random_stochastic_map(n, m, seed ^ 2).unwrap();
        match audit_fisher_contraction(&map, &rho, &t) {
            Ok(ratio) => prop_assert!(ratio <= 1.0 + 1e-10, "ratio {ratio}"),
            Err(infogeo_core::Error::NotFaithful { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn quantum_metrics_contract_under_unital_maps(seed in any::<u64>(), d in 2usize..4, k in 1usize..4) {
        let mut rng = seeded(seed);
        let rho = DensityMatrix::new(random_density_matrix(&mut rng, d)).unwrap();
        let x = QuantumTangent::centred_score(&rho, &random_hermitian(&mut rng, d, 1.0)).unwrap();
        let map = random_unital_cp_map(d, d, k, seed ^ 3).unwrap();
        for metric in [QuantumMetric::Gns, QuantumMetric::Bkm] {
            match audit_quantum_contraction(&map, &rho, &x, metric) {
                Ok(ratio) => prop_assert!(ratio <= 1.0 + 1e-10, "{metric:?} ratio {ratio}"),
                Err(infogeo_core::Error::NotFaithful { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn massieu_gradient_is_minus_the_means(seed in any::<u64>(), omega in 3usize..10, n in 1usize..3) {
        let fam = random_family(seed, omega, n);
        let xi: Vec<f64> = (0..n).map(|j| 0.3 * ((seed >> j) % 7) as f64 / 7.0 - 0.1).collect();
        let eta = fam.point(&xi).unwrap().mixture_coords();
        let h = 1e-5;
        for j in 0..n {
            let mut a = xi.clone();
            let mut b = xi.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (fam.massieu(&a).unwrap() - fam.massieu(&b).unwrap()) / (2.0 * h);
            prop_assert!((fd + eta[j]).abs() < 1e-7 * (1.0 + eta[j].abs()));
        }
    }

    #[test]
    fn maxent_fit_inverts_the_mean_map(seed in any::<u64>(), omega in 3usize..10, n in 1usize..3) {
        let fam = random_family(seed, omega, n);
        let mut rng = seeded(seed ^ 5);
        let xi: Vec<f64> = (0..n).map(|_| 0.5 * gaussian(&mut rng)).collect();
        let pt = fam.point(&xi).unwrap();
        let fit = maxent_fit(&fam, &pt.mixture_coords()).unwrap();
        for (a, b) in fit.xi().iter().zip(&xi) {
            prop_assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn transports_preserve_the_pairing(seed in any::<u64>(), n in 2usize..8) {
        let rho = distribution(seed, n);
        let sigma = distribution(seed ^ 7, n);
        let mut rng = seeded(seed ^ 9);
        let raw_x: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
        let raw_v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
        let x = ClassicalTangent::centred_score(&rho, &raw_x).unwrap();
        let v = ClassicalTangent::centred_score(&rho, &raw_v).unwrap();
        let before = fisher_metric(&rho, &x, &v).unwrap();
        let xp = parallel_transport(&rho, &sigma, &x, Transport::Plus).unwrap();
        let vm = parallel_transport(&rho, &sigma, &v, Transport::Minus).unwrap();
        prop_assert!((fisher_metric(&sigma, &xp, &vm).unwrap() - before).abs() < 1e-12 * (1.0 + before.abs()));
    }

    #[test]
    fn kubo_functions_are_cyclic(seed in any::<u64>(), d in 2usize..5, n in 2usize..5) {
        let mut rng = seeded(seed);
        let rho = DensityMatrix::new(random_density_matrix(&mut rng, d)).unwrap();
        let vs: Vec<_> = (0..n).map(|_| random_hermitian(&mut rng, d, 1.0)).collect();
        let base = kubo_n_point(&rho, &vs).unwrap();
        let mut rotated = vs.clone();
        rotated.rotate_left(1);
        prop_assert!((kubo_n_point(&rho, &rotated).unwrap() - base).abs() < 1e-12 * (1.0 + base.abs()));
    }

    #[test]
    fn mixture_entropy_is_sandwiched(seed in any::<u64>(), d in 2usize..6, lambda in 0.01f64..0.99) {
        let mut rng = seeded(seed);
        let rho = DensityMatrix::new(random_density_matrix(&mut rng, d)).unwrap();
        let sigma = DensityMatrix::new(random_density_matrix(&mut rng, d)).unwrap();
        let b = mixture_entropy_bound(&rho, &sigma, lambda).unwrap();
        prop_assert!(b.slack >= -1e-10);
        // concavity: the mixture entropy is at least the mean entropy
        prop_assert!(b.lhs >= lambda * rho.entropy() + (1.0 - lambda) * sigma.entropy() - 1e-12);
    }

    #[test]
    fn quantum_fit_inverts_the_mean_map(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = seeded(seed);
        let fam = QuantumExponentialFamily::new(
            random_hermitian(&mut rng, d, 0.5),
            vec![random_hermitian(&mut rng, d, 1.0)],
        ).unwrap();
        let xi = [0.5 * gaussian(&mut rng)];
        let means = fam.point(&xi).unwrap().means();
        let fit = quantum_maxent_fit(&fam, &means).unwrap();
        prop_assert!((fit.xi()[0] - xi[0]).abs() < 1e-7);
    }

    #[test]
    fn projection_never_lowers_entropy(seed in any::<u64>(), n in 3usize..6) {
        let mut rng = seeded(seed);
        let jump = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.gen_range(0.05..1.0) });
        let gen = MarkovGenerator::from_jump_rates(&jump).unwrap();
        let fam = random_family(seed ^ 11, n, 1);
        let run = roll(&distribution(seed ^ 13, n), &gen, &fam, 0.1, 10).unwrap();
        for rec in &run.trajectory {
            prop_assert!(rec.entropy >= rec.pre_entropy - 1e-12);
            prop_assert!(rec.projection_defect >= -1e-12);
        }
    }

    #[test]
    fn empirical_counts_sum_to_the_draws(seed in any::<u64>(), n in 2usize..8, m in 1u64..500) {
        let rho = distribution(seed, n);
        let hist = sample(&rho, m, seed).unwrap();
        prop_assert_eq!(hist.iter().sum::<u64>(), m);
        prop_assert_eq!(&hist, &sample(&rho, m, seed).unwrap());
    }

    #[test]
    fn relative_entropy_is_nonnegative(seed in any::<u64>(), n in 2usize..8) {
        let rho = distribution(seed, n);
        let sigma = distribution(seed ^ 17, n);
        prop_assert!(kl_divergence(&rho, &sigma).unwrap() >= -1e-15);
        prop_assert!(kl_divergence(&rho, &rho).unwrap().abs() < 1e-15);
    }
}
