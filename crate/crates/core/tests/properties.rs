use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rfsep::gaussmix::{
    log_likelihoods, map_detect, mmse, posterior, Backend, CovarianceShape, CovarianceSpec, MixtureModel, ModelFamily,
};
use rfsep::harness::derive_trial_seed;
use rfsep::linalg::complex_normal_vec;
use rfsep::siggen::recording::{decode_iq, encode_iq};
use rfsep::ComplexSignal;

fn family(coefs: Vec<f64>, sir_db: f64) -> ModelFamily {
    let k = coefs.len();
    ModelFamily {
        priors: vec![1.0 / k as f64; k],
        sir_db,
        interference: coefs.into_iter().map(|coef| CovarianceShape::Ar1Circulant { coef }).collect(),
        ..ModelFamily::default()
    }
}

fn signal(seed: u64, n: usize, scale: f64) -> ComplexSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexSignal::new(complex_normal_vec(&mut rng, n).into_iter().map(|z| z * scale).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_is_a_distribution(
        coefs in prop::collection::vec(-0.9f64..0.9, 1..4),
        sir in -20.0f64..10.0,
        n in 1usize..24,
        seed in any::<u64>(),
        scale in 0.01f64..100.0,
    ) {
        let model = family(coefs, sir).build(n).unwrap();
        let w = posterior(&signal(seed, n, scale), &model).unwrap();
        prop_assert!(w.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn map_agrees_with_loglik_argmax(coefs in prop::collection::vec(-0.9f64..0.9, 2..4), seed in any::<u64>()) {
        let model = family(coefs, 0.0).build(12).unwrap();
        let y = signal(seed, 12, 1.0);
        let l = log_likelihoods(&y, &model).unwrap();
        let k = map_detect(&y, &model).unwrap();
        prop_assert!(l.iter().all(|v| *v <= l[k]));
    }

    #[test]
    fn mmse_is_linear_in_scalar_case_with_one_type(v_s in 0.1f64..10.0, v_b in 0.1f64..10.0, re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let m = MixtureModel::new(
            vec![1.0],
            CovarianceSpec::white(v_s, 1).unwrap(),
            vec![CovarianceSpec::white(v_b, 1).unwrap()],
        ).unwrap();
        let y = Complex64::new(re, im);
        let s = mmse(&ComplexSignal::new(vec![y]).unwrap(), &m).unwrap().s_hat.as_slice()[0];
        prop_assert!((s - y * (v_s / (v_s + v_b))).norm() < 1e-12 * (1.0 + y.norm()));
    }

    #[test]
    fn spectral_and_dense_backends_agree(coefs in prop::collection::vec(-0.9f64..0.9, 1..3), n in 2usize..40, seed in any::<u64>()) {
        let f = family(coefs, -3.0);
        let fast = f.build(n).unwrap();
        let dense = ModelFamily { backend: Backend::Dense, ..f }.build(n).unwrap();
        let y = signal(seed, n, 2.0);
        let a = log_likelihoods(&y, &fast).unwrap();
        let b = log_likelihoods(&y, &dense).unwrap();
        for (x, z) in a.iter().zip(&b) {
            prop_assert!((x - z).abs() < 1e-8 * (1.0 + z.abs()));
        }
        let sa = mmse(&y, &fast).unwrap().s_hat;
        let sb = mmse(&y, &dense).unwrap().s_hat;
        for (x, z) in sa.as_slice().iter().zip(sb.as_slice()) {
            prop_assert!((x - z).norm() < 1e-8);
        }
    }

    #[test]
    fn iq_codec_round_trips_f32(vals in prop::collection::vec((-1e6f32..1e6, -1e6f32..1e6), 1..200)) {
        let samples: Vec<Complex64> = vals.iter().map(|(a, b)| Complex64::new(*a as f64, *b as f64)).collect();
        prop_assert_eq!(decode_iq(&encode_iq(&samples)).unwrap(), samples);
    }

    #[test]
    fn trial_seeds_distinct_within_stream(base in any::<u64>(), start in 0u64..1_000_000) {
        let seeds: std::collections::HashSet<u64> = (start..start + 2000).map(|i| derive_trial_seed(base, "prop", i)).collect();
        prop_assert_eq!(seeds.len(), 2000);
    }

    #[test]
    fn mixture_model_json_round_trip(coefs in prop::collection::vec(-0.9f64..0.9, 1..3), n in 1usize..16) {
        let model = family(coefs, 1.5).build(n).unwrap();
        let text = serde_json::to_string(&model).unwrap();
        let back: MixtureModel = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.priors(), model.priors());
        prop_assert_eq!(back.logdets(), model.logdets());
    }
}
