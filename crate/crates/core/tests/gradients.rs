use breathscreen_core::nn::{gradcheck, Activation, EncoderConfig, EncoderFamily, HeadConfig, ModelConfig, Network};
use breathscreen_core::rng;
use proptest::prelude::*;

fn small(family: EncoderFamily, shared: bool, layers: usize) -> ModelConfig {
    let mut enc = EncoderConfig::new(family, 3, layers);
    enc.shared_across_scenes = shared;
    ModelConfig::new(enc, HeadConfig { hidden_sizes: vec![4], activation: Activation::Tanh })
}

#[test]
fn five_seeded_networks_agree_with_central_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let family = if seed % 2 == 0 { EncoderFamily::BiLstm } else { EncoderFamily::Lstm };
        let cfg = small(family, seed != 3, 1);
        let mut r = rng::stream(seed, &[rng::tag("gc")]);
        let net = Network::init(&cfg, &mut r).unwrap();
        let input = gradcheck::random_input(6, 12, false, &mut r);
        let rep = gradcheck::check(&net, &input, (seed % 2) as f64, 1e-5, None).unwrap();
        assert_eq!(rep.entries.len(), net.num_params());
        worst = worst.max(rep.max_rel_error);
    }
    assert!(worst < gradcheck::DEFAULT_TOLERANCE, "max relative error {worst}");
}

#[test]
fn stacked_bilstm_with_demographics_and_relu() {
    let mut cfg = small(EncoderFamily::BiLstm, true, 2);
    cfg.use_demographics = true;
    cfg.head.activation = Activation::Relu;
    let mut r = rng::stream(42, &[]);
    let net = Network::init(&cfg, &mut r).unwrap();
    let input = gradcheck::random_input(6, 6, true, &mut r);
    let rep = gradcheck::check(&net, &input, 1.0, 1e-5, None).unwrap();
    assert!(rep.passes(gradcheck::DEFAULT_TOLERANCE), "{}", rep.max_rel_error);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sampled_coordinates_agree(seed in any::<u64>(), target in prop_oneof![Just(0.0), Just(1.0)], bi in any::<bool>()) {
        let family = if bi { EncoderFamily::BiLstm } else { EncoderFamily::Lstm };
        let cfg = small(family, true, 1);
        let mut r = rng::stream(seed, &[]);
        let net = Network::init(&cfg, &mut r).unwrap();
        let input = gradcheck::random_input(6, 8, false, &mut r);
        let idx: Vec<usize> = (0..net.num_params()).step_by(7).collect();
        let rep = gradcheck::check(&net, &input, target, 1e-5, Some(&idx)).unwrap();
        prop_assert!(rep.passes(gradcheck::DEFAULT_TOLERANCE), "{}", rep.max_rel_error);
    }
}
