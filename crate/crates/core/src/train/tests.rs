use super::*;
use crate::data::{generate_synthetic_corpus, corpus_vocab, Example, GenConfig, Prepared};
use crate::diff::{gradcheck, Grads, ParamStore, Tape, Tensor};
use crate::heads::Heads;
use crate::kinds::HeadKind;
use crate::model::{chain_heads, forward_heads, HeadVars, ReasonConfig};
use crate::text::{Encoder, EncoderConfig, Lengths};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<Example> {
    let cfg = GenConfig {
        n_train: 12,
        n_dev: 2,
        n_test: 2,
        comparison_ratio: 0.5,
        seed: 5,
        ..GenConfig::default()
    };
    generate_synthetic_corpus(&cfg).unwrap().train
}

struct Small {
    store: ParamStore<f64>,
    encoder: Encoder,
    heads: Heads,
    items: Vec<Prepared>,
}

fn small(d: usize, lengths: Lengths) -> Small {
    let examples = corpus();
    let vocab = corpus_vocab(&examples, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut store = ParamStore::new();
    let cfg = EncoderConfig {
        d_model: d,
        layers: 2,
        heads: 2,
        ffn: 2 * d,
    };
    let encoder = Encoder::init(&mut store, "enc", cfg, vocab.len(), lengths.total(), &mut rng).unwrap();
    let heads = Heads::init(&mut store, d, &mut rng).unwrap();
    let items = examples.iter().map(|e| Prepared::new(e, &vocab, lengths)).collect();
    Small {
        store,
        encoder,
        heads,
        items,
    }
}

fn batch_grads(s: &Small, items: &[Prepared], w: &LossWeights, ablate: &[HeadKind]) -> (f64, Grads<f64>) {
    let mut grads = Grads::zeros_like(&s.store);
    let mut total = 0.0;
    for it in items {
        let active = active_heads(&it.labels, w, ablate);
        let mut tape = Tape::new(&s.store);
        let outs = forward_heads(&mut tape, &s.encoder, &s.heads, &it.input, &chain_heads(None)).unwrap();
        let loss = reason_loss(&mut tape, &outs, &it.labels, w, &active).unwrap();
        total += tape.scalar(loss);
        tape.backward(loss, &mut grads).unwrap();
    }
    (total, grads)
}

/// Heads reading a head's attention vector.
fn consumers(h: HeadKind) -> &'static [HeadKind] {
    match h {
        HeadKind::Cause => &[HeadKind::Polarity, HeadKind::Comparison],
        HeadKind::Effect => &[HeadKind::Polarity],
        HeadKind::World => &[HeadKind::Value],
        HeadKind::World1 | HeadKind::World2 => &[HeadKind::Comparison],
        _ => &[],
    }
}

#[test]
fn masked_head_gets_exactly_zero_gradient() {
    let s = small(8, Lengths { n_max: 24, m_max: 40 });
    let w = LossWeights::default();
    for head in HeadKind::ALL {
        let masked: Vec<Prepared> = s
            .items
            .iter()
            .cloned()
            .map(|mut it| {
                it.labels.clear(head);
                for c in consumers(head) {
                    it.labels.clear(*c);
                }
                it
            })
            .collect();
        let (_, g) = batch_grads(&s, &masked, &w, &[]);
        for id in s.heads.exclusive_params(head) {
            assert_eq!(g.abs_sum(id), 0.0, "{head}");
        }
        let (_, full) = batch_grads(&s, &s.items, &w, &[]);
        assert!(s.heads.exclusive_params(head).iter().any(|id| full.abs_sum(*id) > 0.0), "{head}");
    }
}

#[test]
fn all_masked_loss_is_exactly_zero() {
    let s = small(8, Lengths { n_max: 24, m_max: 40 });
    let masked: Vec<Prepared> = s
        .items
        .iter()
        .cloned()
        .map(|mut it| {
            it.labels = Default::default();
            it
        })
        .collect();
    let (loss, g) = batch_grads(&s, &masked, &LossWeights::default(), &[]);
    assert_eq!(loss, 0.0);
    assert!(s.store.ids().all(|id| g.abs_sum(id) == 0.0));
    let (loss, _) = batch_grads(&s, &s.items, &LossWeights::default(), &HeadKind::ALL);
    assert_eq!(loss, 0.0);
}

#[test]
fn loss_is_additive_over_heads() {
    let s = small(8, Lengths { n_max: 24, m_max: 40 });
    let it = &s.items[0];
    let w = LossWeights::default();
    let eval = |active: &[HeadKind]| {
        let mut tape = Tape::new(&s.store);
        let outs = forward_heads(&mut tape, &s.encoder, &s.heads, &it.input, &chain_heads(None)).unwrap();
        let l = reason_loss(&mut tape, &outs, &it.labels, &w, active).unwrap();
        tape.scalar(l)
    };
    let both = eval(&[HeadKind::Cause, HeadKind::Polarity]);
    let sum = eval(&[HeadKind::Cause]) + eval(&[HeadKind::Polarity]);
    assert!((both - sum).abs() < 1e-12);
}

#[test]
fn closed_forms() {
    let store = ParamStore::<f64>::new();
    let mut tape = Tape::new(&store);
    let n = 7;
    let p = tape.input(Tensor::row(vec![1.0 / n as f64; n]));
    let outs = HeadVars {
        cause: Some(p),
        ..HeadVars::default()
    };
    let labels = crate::data::Labels {
        cause: Some(vec![3]),
        ..Default::default()
    };
    let l = reason_loss(&mut tape, &outs, &labels, &LossWeights::default(), &[HeadKind::Cause]).unwrap();
    assert!((tape.scalar(l) - 0.1 * (n as f64).ln()).abs() < 1e-12);

    let one = tape.input(Tensor::row(vec![0.0, 1.0, 0.0]));
    let outs = HeadVars {
        cause: Some(one),
        ..HeadVars::default()
    };
    let labels = crate::data::Labels {
        cause: Some(vec![1]),
        ..Default::default()
    };
    let l = reason_loss(&mut tape, &outs, &labels, &LossWeights::default(), &[HeadKind::Cause]).unwrap();
    assert_eq!(tape.scalar(l), 0.0);

    let half = tape.input(Tensor::row(vec![0.5, 0.5]));
    let l = answer_loss(&mut tape, half, &[true, false]).unwrap();
    assert!((tape.scalar(l) - core::f64::consts::LN_2).abs() < 1e-12);
    let near = tape.input(Tensor::row(vec![1.0 - 1e-9]));
    let l = answer_loss(&mut tape, near, &[true]).unwrap();
    assert!(tape.scalar(l) < 1e-8);
}

#[test]
fn clamped_log_is_counted() {
    let store = ParamStore::<f64>::new();
    let mut tape = Tape::new(&store);
    let p = tape.input(Tensor::row(vec![0.0, 1.0]));
    let outs = HeadVars {
        polarity: Some(p),
        ..HeadVars::default()
    };
    let labels = crate::data::Labels {
        polarity: Some(crate::Polarity::Positive),
        ..Default::default()
    };
    let l = reason_loss(&mut tape, &outs, &labels, &LossWeights::default(), &[HeadKind::Polarity]).unwrap();
    assert!((tape.scalar(l) - 0.2 * -(LOG_EPS.ln())).abs() < 1e-9);
    assert_eq!(tape.log_clamps(), 1);
}

#[test]
fn answer_loss_gradient_is_p_minus_y() {
    for (z, y) in [(0.3, true), (-1.2, false), (2.0, false)] {
        let mut store = ParamStore::<f64>::new();
        let id = store.insert("z", Tensor::scalar(z), 2).unwrap();
        let mut tape = Tape::new(&store);
        let zv = tape.param(id);
        let p = tape.sigmoid(zv);
        let l = answer_loss(&mut tape, p, &[y]).unwrap();
        let mut g = Grads::zeros_like(&store);
        tape.backward(l, &mut g).unwrap();
        let prob = 1.0 / (1.0 + (-z).exp());
        let want = prob - if y { 1.0 } else { 0.0 };
        assert!((g.get(id).data()[0] - want).abs() < 1e-12);
    }
}

#[test]
fn reason_loss_passes_gradcheck_through_encoder() {
    let mut s = small(6, Lengths { n_max: 24, m_max: 40 });
    let it = s.items[1].clone();
    let (encoder, heads) = (s.encoder.clone(), s.heads.clone());
    let active = active_heads(&it.labels, &LossWeights::default(), &[]);
    let report = gradcheck(&mut s.store, 1e-5, |tape| {
        let outs = forward_heads(tape, &encoder, &heads, &it.input, &active)?;
        reason_loss(tape, &outs, &it.labels, &LossWeights::default(), &active)
    })
    .unwrap();
    assert!(report.max_rel_err < 1e-3, "{report:?}");
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(TrainConfig { lr: 0.0, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate().is_err());
    let mut w = LossWeights::default();
    w.value = -1.0;
    assert!(TrainConfig { weights: w, ..TrainConfig::default() }.validate().is_err());
    assert!(TrainConfig::default().validate().is_ok());
    let _ = ReasonConfig::default();
}
