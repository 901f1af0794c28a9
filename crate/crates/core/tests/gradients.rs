//! Analytic gradients against central finite differences.

use polarlens_core::embed::{EmbeddingVector, KnowledgeEmbedding};
use polarlens_core::model::{Architecture, Example, KnowledgePooling, Mode, Model};
use polarlens_core::BiasLabel;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-4;

fn problem(n: usize, d: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| Example {
            headline: EmbeddingVector::new((0..d).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).unwrap(),
            knowledge: KnowledgeEmbedding::from_flat(d, (0..9 * d).map(|_| rng.gen_range(-2.0f32..2.0)).collect())
                .unwrap(),
            label: BiasLabel::from_index(i % 3).unwrap(),
        })
        .collect()
}

fn rel_err(a: f64, n: f64) -> Option<f64> {
    let scale = a.abs().max(n.abs());
    // both negligible: nothing to compare
    if scale < 1e-7 {
        return None;
    }
    Some((a - n).abs() / scale)
}

/// Max relative error over every parameter.
fn parameter_check(model: &Model, data: &[Example]) -> f64 {
    let (_, analytic) = model.gradients(data).unwrap();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    for (ti, len) in shapes.into_iter().enumerate() {
        for i in 0..len {
            let orig = probe.tensors()[ti][i];
            probe.tensors_mut()[ti][i] = orig + EPS;
            let up = probe.loss(data).unwrap();
            probe.tensors_mut()[ti][i] = orig - EPS;
            let down = probe.loss(data).unwrap();
            probe.tensors_mut()[ti][i] = orig;
            let numeric = (up - down) / (2.0 * EPS);
            if let Some(e) = rel_err(analytic[ti][i], numeric) {
                worst = worst.max(e);
            }
        }
    }
    worst
}

/// Max relative error over the headline and knowledge inputs of one example.
fn input_check(model: &Model, e: &Example) -> f64 {
    let (dh, dk) = model.input_gradients(e).unwrap();
    let h: Vec<f64> = e.headline.values().iter().map(|&v| f64::from(v)).collect();
    let k: Vec<f64> = e.knowledge.as_flat().iter().map(|&v| f64::from(v)).collect();
    let mut worst: f64 = 0.0;
    for (which, analytic) in [(0, &dh), (1, &dk)] {
        for i in 0..analytic.len() {
            let (mut hp, mut kp) = (h.clone(), k.clone());
            let (mut hm, mut km) = (h.clone(), k.clone());
            if which == 0 {
                hp[i] += EPS;
                hm[i] -= EPS;
            } else {
                kp[i] += EPS;
                km[i] -= EPS;
            }
            let numeric =
                (model.loss_at(&hp, &kp, e.label).unwrap() - model.loss_at(&hm, &km, e.label).unwrap()) / (2.0 * EPS);
            if let Some(err) = rel_err(analytic[i], numeric) {
                worst = worst.max(err);
            }
        }
    }
    worst
}

fn arch(mode: Mode, pooling: KnowledgePooling) -> Architecture {
    Architecture { pooling, mixer_hidden: vec![5], trunk_hidden: vec![6, 4], ..Architecture::new(mode, 4) }
}

/// Freshly initialised biases are exactly zero, which can park a ReLU right
/// on its kink when the layer below is dead. Jitter them to a generic point.
fn generic_model(arch: Architecture, seed: u64) -> Model {
    let mut model = Model::init(arch, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for (i, t) in model.tensors_mut().into_iter().enumerate() {
        if i % 2 == 1 {
            t.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
        }
    }
    model
}

#[test]
fn parameter_gradients_match_finite_differences() {
    let data = problem(20, 4, 11);
    for mode in Mode::ALL {
        let model = generic_model(arch(mode, KnowledgePooling::Plain), 3);
        let err = parameter_check(&model, &data);
        assert!(err <= 1e-3, "{mode}: max relative error {err:e}");
    }
    for pooling in [KnowledgePooling::Attended, KnowledgePooling::Mean] {
        let model = generic_model(arch(Mode::KnowledgeOnly, pooling), 3);
        let err = parameter_check(&model, &data);
        assert!(err <= 1e-3, "{pooling:?}: max relative error {err:e}");
    }
}

#[test]
fn input_gradients_match_finite_differences() {
    let data = problem(5, 4, 12);
    for mode in Mode::ALL {
        for pooling in [KnowledgePooling::Plain, KnowledgePooling::Attended, KnowledgePooling::Mean] {
            let model = generic_model(arch(mode, pooling), 8);
            for e in &data {
                let err = input_check(&model, e);
                assert!(err <= 1e-3, "{mode} {pooling:?}: {err:e}");
            }
        }
    }
}

#[test]
fn headline_only_ignores_knowledge() {
    let model = Model::init(arch(Mode::HeadlineOnly, KnowledgePooling::Plain), 1).unwrap();
    let e = &problem(1, 4, 1)[0];
    let (_, dk) = model.input_gradients(e).unwrap();
    assert!(dk.iter().all(|&g| g == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outputs_stay_on_the_simplex(seed in 0u64..10_000, scale in 0.01f32..100.0, mode_idx in 0usize..4) {
        let mode = Mode::ALL[mode_idx];
        let model = Model::init(arch(mode, KnowledgePooling::Plain), seed).unwrap();
        for e in problem(4, 4, seed ^ 0xabc) {
            let h = EmbeddingVector::new(e.headline.values().iter().map(|v| v * scale).collect()).unwrap();
            let k = KnowledgeEmbedding::from_flat(4, e.knowledge.as_flat().iter().map(|v| v * scale).collect()).unwrap();
            let p = model.predict_proba(&h, &k).unwrap();
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
    }
}
