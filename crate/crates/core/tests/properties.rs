use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use diffeoflow::data::{grouped_split, oas_covariance, synth_generate, SyntheticSpec};
use diffeoflow::geometry::random::{random_point, random_sym};
use diffeoflow::geometry::{phi, phi_inv, project_to_spd, sym_eig};
use diffeoflow::metrics::{ab_f1, precision_recall_curves, roc_auc};
use diffeoflow::{EmbeddedVector, Manifold, SymMatrix};

fn manifold() -> impl Strategy<Value = Manifold> {
    prop_oneof![Just(Manifold::Spd), Just(Manifold::Corr)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_inv_then_phi_is_identity(m in manifold(), d in 2usize..7, seed in any::<u64>(), scale in 0.1f64..2.0) {
        let len = m.embed_dim(d);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..len).map(|_| scale * rand::Rng::sample::<f64, _>(&mut r, rand_distr::StandardNormal)).collect();
        let x = phi_inv(&EmbeddedVector::new(m, d, z.clone()).unwrap()).unwrap();
        let back = phi(&x).unwrap();
        for (a, b) in back.values().iter().zip(&z) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn eigendecomposition_reconstructs(d in 1usize..9, seed in any::<u64>()) {
        let a = random_sym(&mut ChaCha8Rng::seed_from_u64(seed), d, 1.0);
        let back = sym_eig(&a).unwrap().map(|x| x);
        prop_assert!(back.dist_frobenius(&a) <= 1e-12 * (1.0 + a.frobenius()));
    }

    #[test]
    fn projection_is_idempotent(d in 2usize..8, seed in any::<u64>(), eps in 1e-6f64..1e-2) {
        let a = random_sym(&mut ChaCha8Rng::seed_from_u64(seed), d, 1.0);
        let p = project_to_spd(&a, eps, false).unwrap();
        prop_assert!(p.as_sym().eig().unwrap().min() >= eps - 1e-12);
        let again = project_to_spd(p.as_sym(), eps, false).unwrap();
        prop_assert!(again.as_sym().dist_frobenius(p.as_sym()) <= 1e-12);
    }

    #[test]
    fn distance_is_symmetric_and_zero_on_diagonal(m in manifold(), d in 2usize..5, seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (random_point(&mut r, m, d), random_point(&mut r, m, d));
        let dxy = diffeoflow::geometry::distance(&x, &y).unwrap();
        prop_assert!((dxy - diffeoflow::geometry::distance(&y, &x).unwrap()).abs() <= 1e-12);
        prop_assert!(diffeoflow::geometry::distance(&x, &x).unwrap() == 0.0);
    }

    #[test]
    fn ab_f1_is_symmetric_and_bounded(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let f = ab_f1(p, r).unwrap();
        prop_assert_eq!(f, ab_f1(r, p).unwrap());
        prop_assert!(f <= p.max(r) + 1e-15 && f >= 0.0);
    }

    #[test]
    fn roc_auc_ignores_monotone_transforms(scores in prop::collection::vec(-5.0f64..5.0, 4..40), seed in any::<u64>()) {
        let labels: Vec<bool> = (0..scores.len()).map(|i| (seed >> (i % 64)) & 1 == 1 || i == 0).collect();
        prop_assume!(labels.iter().any(|&v| !v));
        let warped: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(roc_auc(&scores, &labels).unwrap(), roc_auc(&warped, &labels).unwrap());
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        let sum = roc_auc(&scores, &labels).unwrap() + roc_auc(&flipped, &labels).unwrap();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn oas_is_spd(d in 2usize..6, t in 2usize..30, seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..d).map(|_| rand::Rng::gen_range(&mut r, -1.0..1.0)).collect())
            .collect();
        let s = oas_covariance(&x).unwrap();
        prop_assert!(s.as_sym().eig().unwrap().min() > 0.0);
    }

    #[test]
    fn grouped_split_keeps_subjects_apart(frac in 0.1f64..0.9, seed in any::<u64>()) {
        let ds = synth_generate(&SyntheticSpec::separated(Manifold::Corr, 3, 2, 10, 0.3, 3.0, 1)).unwrap();
        let (train, test) = grouped_split(&ds, frac, seed).unwrap();
        prop_assert_eq!(train.len() + test.len(), ds.len());
        prop_assert!(train.subject_ids.iter().all(|s| !test.subject_ids.contains(s)));
    }
}

#[test]
fn coverage_grows_with_alpha() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let pts = |r: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..300)
            .map(|_| {
                (0..3)
                    .map(|_| rand::Rng::sample::<f64, _>(r, rand_distr::StandardNormal))
                    .collect()
            })
            .collect()
    };
    let (a, b) = (pts(&mut r), pts(&mut r));
    let alphas: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).collect();
    let rep = precision_recall_curves(&a, &b, &alphas).unwrap();
    for curve in [&rep.precision_curve, &rep.recall_curve] {
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn unit_diagonal_survives_projection() {
    let a = SymMatrix::new(3, vec![1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]).unwrap();
    let p = project_to_spd(&a, 1e-6, true).unwrap();
    assert_eq!(p.as_sym().diag(), vec![1.0; 3]);
}
