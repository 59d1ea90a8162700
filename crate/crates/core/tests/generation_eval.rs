use dcrbm::data::{synthesize, DyadSequence, SynthConfig};
use dcrbm::eval::{baseline_error, gen_error_curve, generation_error, mean_std, CurveKind, CurveSpec, Metrics};
use dcrbm::generation::{generate, ClampMask, GenerationRequest};
use dcrbm::pipeline::{fit, prepare_split, FitConfig};
use dcrbm::Dcrbm;
use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_model() -> (Dcrbm, Vec<DyadSequence>) {
    let synth = SynthConfig { per_class: 6, frames: 120, ..SynthConfig::default() };
    let train = synthesize(&synth).unwrap();
    let test = synthesize(&SynthConfig { seed: 1, per_class: 2, ..synth }).unwrap();
    let prepared = prepare_split(&train.sequences, &test.sequences, train.joints).unwrap();
    let mut cfg = FitConfig::generation_preset();
    cfg.hidden_dim = 10;
    cfg.train.epochs = 3;
    let (p, _) = fit::<f64>(&prepared.train, 3, &cfg, None).unwrap();
    (p, prepared.test)
}

#[test]
fn partial_generation_pins_observed_dims_and_is_seeded() {
    let (p, test) = tiny_model();
    let n = p.dims.history_order;
    let seq = &test[0];
    let mask = ClampMask::range(12, 0..6).unwrap();
    let req = GenerationRequest {
        label: seq.label,
        seed_frames: seq.frames.slice(s![..n, ..]).to_owned(),
        length: 40,
        mask: mask.clone(),
        observed: Some(seq.frames.slice(s![n..n + 40, ..]).to_owned()),
        gibbs_iters: 5,
        seed: 9,
    };
    let a = generate(&p, &req).unwrap();
    let b = generate(&p, &req).unwrap();
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.frames.dim(), (40, 12));
    for i in mask.clamped() {
        assert_eq!(a.frames.column(i), seq.frames.slice(s![n..n + 40, i]));
    }
    assert!(a.frames.iter().all(|x| x.is_finite()));
    let other = generate(&p, &GenerationRequest { seed: 10, ..req }).unwrap();
    assert_ne!(a.frames, other.frames);
}

#[test]
fn curve_means_recompute_from_per_item_values() {
    let (p, test) = tiny_model();
    let mask = ClampMask::range(12, 0..6).unwrap();
    let lengths = [5, 20, 60];
    let spec = CurveSpec { lengths: &lengths, history_order: p.dims.history_order, mask: &mask, instances: 6 };
    for kind in [CurveKind::Partial, CurveKind::Full] {
        let c = gen_error_curve(&p, &test, &spec, kind, 5, 3).unwrap();
        assert_eq!(c, gen_error_curve(&p, &test, &spec, kind, 5, 3).unwrap());
        assert_eq!(c.per_item.len(), 6);
        for (j, (&m, &sd)) in c.mean.iter().zip(&c.std).enumerate() {
            let col: Vec<f64> = c.per_item.iter().map(|r| r[j]).collect();
            let naive = col.iter().sum::<f64>() / col.len() as f64;
            assert!((m - naive).abs() < 1e-12, "{kind} length {}: {m} vs {naive}", lengths[j]);
            assert!((sd - mean_std(&col).1).abs() < 1e-12);
        }
    }
}

#[test]
fn mean_pose_baseline_is_near_one_on_z_scored_data() {
    let train = synthesize(&SynthConfig::default()).unwrap();
    let test = synthesize(&SynthConfig { seed: 1, per_class: 10, frames: 315, ..SynthConfig::default() }).unwrap();
    let prepared = prepare_split(&train.sequences, &test.sequences, train.joints).unwrap();
    let mask = ClampMask::free(12);
    let lengths = [100, 300];
    let spec = CurveSpec { lengths: &lengths, history_order: 15, mask: &mask, instances: 30 };
    let zero = Array1::zeros(12);
    let c = baseline_error(&prepared.test, &spec, CurveKind::MeanPose, zero.view()).unwrap();
    for m in &c.mean {
        assert!((m - 1.0).abs() <= 0.2, "mean-pose error {m}");
    }
    assert_eq!(c, baseline_error(&prepared.test, &spec, CurveKind::MeanPose, zero.view()).unwrap());
}

#[test]
fn persistence_is_exact_on_constant_sequences() {
    let frames = Array2::from_elem((40, 4), 0.7);
    let seq = DyadSequence { id: "flat".into(), frames, label: Some(0), frame_rate: 30.0 };
    let mask = ClampMask::free(4);
    let lengths = [1, 10, 30];
    let spec = CurveSpec { lengths: &lengths, history_order: 3, mask: &mask, instances: 1 };
    let c = baseline_error(&[seq], &spec, CurveKind::Persistence, Array1::zeros(4).view()).unwrap();
    assert_eq!(c.mean, vec![0.0; 3]);
}

#[test]
fn uniform_random_predictor_scores_near_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let truth: Vec<usize> = (0..6000).map(|i| i % 3).collect();
    let guess: Vec<usize> = (0..6000).map(|_| rng.gen_range(0..3)).collect();
    let m = Metrics::from_predictions(&truth, &guess, 3).unwrap();
    assert!((m.accuracy - 1.0 / 3.0).abs() < 0.02, "accuracy {}", m.accuracy);
    assert_eq!(m.confusion.iter().flatten().sum::<usize>(), m.count);
    assert_eq!(m.count, 6000);
}

#[test]
fn generation_error_is_scale_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gt = Array2::from_shape_fn((20, 6), |_| rng.gen_range(-1.0..1.0));
    let gen = Array2::from_shape_fn((20, 6), |_| rng.gen_range(-1.0..1.0));
    let base = generation_error(gen.view(), gt.view(), None).unwrap();
    for c in [-3.0, 0.01, 250.0] {
        let scaled = generation_error((&gen * c).view(), (&gt * c).view(), None).unwrap();
        assert!((scaled - base).abs() < 1e-12 * base.max(1.0));
    }
}
