//! End-to-end checks across signal generation, learning and the estimators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rfsep::gaussmix::{dts, mmse, CovarianceSpec, MixtureModel};
use rfsep::harness::{derive_trial_seed, mse, Stats};
use rfsep::learning::{apply_learned, fit_dts, LabeledDataset, LabeledPair};
use rfsep::siggen::{ber, demod_mpsk, gen_mpsk, mix, psk_covariance, FrameSpec, InterferenceSource, MixSpec};

#[test]
fn psk_separation_beats_doing_nothing() {
    let frame = FrameSpec::default();
    let n = frame.frame_len(8);
    let shapes = [CovarianceSpec::ar1(0.5, 1.0, n).unwrap(), CovarianceSpec::ar1(0.95, 1.0, n).unwrap()];
    let sources: Vec<_> = shapes.iter().cloned().map(|c| InterferenceSource::gaussian(c).unwrap()).collect();
    let level = 10f64.powf(0.6);
    let model = MixtureModel::new(
        vec![0.5, 0.5],
        CovarianceSpec::dense(psk_covariance(&frame, 8).unwrap()).unwrap(),
        shapes.iter().map(|c| c.scaled(level)).collect(),
    )
    .unwrap();
    let spec = MixSpec { sir_db: -6.0, ..MixSpec::default() };
    let (mut raw, mut sep) = (Stats::default(), Stats::default());
    let (mut ber_raw, mut ber_sep) = (Stats::default(), Stats::default());
    for t in 0..200 {
        let (s, bits) = gen_mpsk(&frame, 8, derive_trial_seed(1, "soi", t)).unwrap();
        let m = mix(&s, &sources, &[0.5, 0.5], &spec, derive_trial_seed(1, "mix", t)).unwrap();
        let est = mmse(&m.y, &model).unwrap().s_hat;
        raw.push(mse(&m.y, &s).unwrap());
        sep.push(mse(&est, &s).unwrap());
        ber_raw.push(ber(&demod_mpsk(&m.y, &frame, 8).unwrap(), &bits).unwrap());
        ber_sep.push(ber(&demod_mpsk(&est, &frame, 8).unwrap(), &bits).unwrap());
    }
    assert!(sep.mean() < 0.5 * raw.mean(), "{} vs {}", sep.mean(), raw.mean());
    assert!(ber_sep.mean() < ber_raw.mean(), "{} vs {}", ber_sep.mean(), ber_raw.mean());
}

#[test]
fn learned_per_type_filters_approach_dts() {
    let n = 6;
    let model = MixtureModel::new(
        vec![0.5, 0.5],
        CovarianceSpec::white(1.0, n).unwrap(),
        vec![CovarianceSpec::ar1_circulant(0.2, 2.0, n).unwrap(), CovarianceSpec::ar1_circulant(0.9, 2.0, n).unwrap()],
    )
    .unwrap();
    let train = LabeledDataset::sample_per_type(&model, 5000, 4).unwrap();
    let learned = fit_dts(&train, 2, None).unwrap();
    let (mut a, mut b) = (Stats::default(), Stats::default());
    for t in 0..2000 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(4, "test", t));
        let (y, s, _) = model.sample_mixture(&mut rng).unwrap();
        let d = dts(&y, &model).unwrap();
        a.push(mse(&d.s_hat, &s).unwrap());
        b.push(mse(&apply_learned(&y, &learned, d.k_hat).unwrap().s_hat, &s).unwrap());
    }
    assert!((b.mean() - a.mean()).abs() < 0.02 * a.mean(), "{} vs {}", b.mean(), a.mean());
}

#[test]
fn relabeling_permutes_type_labels() {
    let model = MixtureModel::new(
        vec![0.3, 0.7],
        CovarianceSpec::white(1.0, 4).unwrap(),
        vec![CovarianceSpec::white(1.0, 4).unwrap(), CovarianceSpec::white(3.0, 4).unwrap()],
    )
    .unwrap();
    let data = LabeledDataset::sample_mixture(&model, 50, 9).unwrap();
    let swapped = data.relabeled(&[1, 0]).unwrap();
    for (a, b) in data.pairs().iter().zip(swapped.pairs()) {
        let LabeledPair { k, .. } = a;
        assert_eq!(b.k, 1 - k);
        assert_eq!(a.y, b.y);
    }
}
