use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn store_with(values: &[(&str, usize, usize, Vec<f64>)]) -> ParamStore<f64> {
    let mut s = ParamStore::new();
    for (name, r, c, v) in values {
        let rank = if *r == 1 { 1 } else { 2 };
        s.insert(name, Tensor::from_vec(*r, *c, v.clone()).unwrap(), rank)
            .unwrap();
    }
    s
}

#[test]
fn softmax_uniform_and_single_slot() {
    let p = softmax_masked(&[0.0f64, 0.0, 0.0], &[true; 3]).unwrap();
    for v in p {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
    let p = softmax_masked(&[5.0f64, -2.0, 7.0], &[true, false, false]).unwrap();
    assert_eq!(p, vec![1.0, 0.0, 0.0]);
}

#[test]
fn softmax_matches_extended_precision_reference() {
    // exp-normalize of [1, 2, 3] evaluated at 40 significant digits.
    let reference = [
        0.090_030_573_170_380_457_998_022_1,
        0.244_728_471_054_797_652_472_959_6,
        0.665_240_955_774_821_889_529_018_3,
    ];
    let p = softmax_masked(&[1.0f64, 2.0, 3.0], &[true; 3]).unwrap();
    for (a, b) in p.iter().zip(reference) {
        assert!((a - b).abs() < 1e-15, "{a} vs {b}");
    }
    let p = softmax_masked(&[1.0f32, 2.0, 3.0], &[true; 3]).unwrap();
    for (a, b) in p.iter().zip(reference) {
        assert!((*a as f64 - b).abs() < 1e-7);
    }
}

#[test]
fn softmax_rejects_empty_mask() {
    let err = softmax_masked(&[1.0f64, 2.0], &[false, false]).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
    assert!(softmax_masked(&[1.0f64], &[true, true]).is_err());
}

proptest! {
    #[test]
    fn softmax_shift_invariant(
        logits in prop::collection::vec(-20.0f64..20.0, 1..12),
        shift in -50.0f64..50.0,
        seed in any::<u64>(),
    ) {
        let n = logits.len();
        let mut mask: Vec<bool> = (0..n).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        mask[(seed as usize) % n] = true;
        let a = softmax_masked(&logits, &mask).unwrap();
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let b = softmax_masked(&shifted, &mask).unwrap();
        let total: f64 = a.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for i in 0..n {
            prop_assert!((a[i] - b[i]).abs() < 1e-9);
            if mask[i] {
                prop_assert!(a[i] > 0.0);
            } else {
                prop_assert_eq!(a[i], 0.0);
            }
        }
    }
}

#[test]
fn masked_logits_get_zero_gradient() {
    let store = store_with(&[("z", 1, 4, vec![0.3, -1.0, 2.0, 0.5])]);
    let z = store.id("z").unwrap();
    let mut tape = Tape::new(&store);
    let zv = tape.param(z);
    let p = tape
        .softmax(zv, Some(&[true, false, true, false]))
        .unwrap();
    let w = tape.input(Tensor::row(vec![1.0, 7.0, -2.0, 3.0]));
    let prod = tape.mul(p, w).unwrap();
    let loss = tape.sum(prod);
    let mut grads = Grads::zeros_like(&store);
    tape.backward(loss, &mut grads).unwrap();
    let g = grads.get(z).data();
    assert_eq!(g[1], 0.0);
    assert_eq!(g[3], 0.0);
    assert!(g[0] != 0.0);
}

#[test]
fn backward_square_and_constant() {
    let store = store_with(&[("x", 1, 1, vec![3.0])]);
    let x = store.id("x").unwrap();
    let mut tape = Tape::new(&store);
    let xv = tape.param(x);
    let sq = tape.mul(xv, xv).unwrap();
    let mut grads = Grads::zeros_like(&store);
    tape.backward(sq, &mut grads).unwrap();
    assert_eq!(grads.get(x).data(), &[6.0]);

    // Repeated backward accumulates.
    tape.backward(sq, &mut grads).unwrap();
    assert_eq!(grads.get(x).data(), &[12.0]);

    let mut tape = Tape::new(&store);
    let _ = tape.param(x);
    let c = tape.input(Tensor::scalar(4.0));
    let mut grads = Grads::zeros_like(&store);
    tape.backward(c, &mut grads).unwrap();
    assert_eq!(grads.get(x).data(), &[0.0]);
}

#[test]
fn backward_rejects_non_scalar() {
    let store = store_with(&[("x", 1, 2, vec![1.0, 2.0])]);
    let mut tape = Tape::new(&store);
    let x = tape.param(store.id("x").unwrap());
    let mut grads = Grads::zeros_like(&store);
    assert!(matches!(
        tape.backward(x, &mut grads),
        Err(Error::InvalidInput(_))
    ));
}

fn mlp_store(seed: u64) -> ParamStore<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ParamStore::new();
    s.insert_uniform("x", 3, 5, 1, &mut rng).unwrap();
    s.insert_uniform("w1", 5, 7, 5, &mut rng).unwrap();
    s.insert_uniform("b1", 1, 7, 5, &mut rng).unwrap();
    s.insert_uniform("w2", 7, 2, 7, &mut rng).unwrap();
    s.insert_uniform("b2", 1, 2, 7, &mut rng).unwrap();
    s
}

fn mlp_loss(tape: &mut Tape<'_, f64>) -> crate::Result<Var> {
    let p = tape.params();
    let id = |n: &str| p.id(n).unwrap();
    let x = tape.param(id("x"));
    let w1 = tape.param(id("w1"));
    let b1 = tape.param(id("b1"));
    let w2 = tape.param(id("w2"));
    let b2 = tape.param(id("b2"));
    let h = tape.matmul(x, w1)?;
    let h = tape.add_row(h, b1)?;
    let h = tape.tanh(h);
    let o = tape.matmul(h, w2)?;
    let o = tape.add_row(o, b2)?;
    let sm = tape.softmax(o, None)?;
    let picked = tape.pick(sm, &[0, 3, 4])?;
    let lg = tape.log(picked, 1e-12);
    let s = tape.sum(lg);
    Ok(tape.scale(s, -1.0))
}

/// Independent central-difference oracle, written without the gradcheck
/// helper.
fn finite_differences(store: &ParamStore<f64>, eps: f64) -> Vec<Vec<f64>> {
    let mut s = store.clone();
    let mut out = Vec::new();
    let ids: Vec<_> = s.ids().collect();
    for id in ids {
        let mut g = Vec::new();
        for k in 0..s.get(id).len() {
            let orig = s.get(id).data()[k];
            let f = |v: f64, s: &mut ParamStore<f64>| {
                s.get_mut(id).data_mut()[k] = v;
                let mut tape = Tape::new(s);
                let o = mlp_loss(&mut tape).unwrap();
                tape.scalar(o)
            };
            let plus = f(orig + eps, &mut s);
            let minus = f(orig - eps, &mut s);
            s.get_mut(id).data_mut()[k] = orig;
            g.push((plus - minus) / (2.0 * eps));
        }
        out.push(g);
    }
    out
}

#[test]
fn two_layer_perceptron_matches_finite_differences() {
    for seed in [1u64, 2, 3] {
        let store = mlp_store(seed);
        let mut grads = Grads::zeros_like(&store);
        let mut tape = Tape::new(&store);
        let o = mlp_loss(&mut tape).unwrap();
        tape.backward(o, &mut grads).unwrap();
        let numeric = finite_differences(&store, 1e-5);
        let mut worst: f64 = 0.0;
        for (id, num) in store.ids().zip(&numeric) {
            for (a, n) in grads.get(id).data().iter().zip(num) {
                worst = worst.max(rel_err(*a, *n));
            }
        }
        assert!(worst < 1e-6, "seed {seed}: max relative error {worst}");
    }
}

#[test]
fn gradient_accumulation_is_linear() {
    let store = mlp_store(9);
    let grad_of = |a: f64, b: f64| {
        let mut tape = Tape::new(&store);
        let f = mlp_loss(&mut tape).unwrap();
        let x = tape.param(store.id("x").unwrap());
        let xx = tape.mul(x, x).unwrap();
        let g = tape.sum(xx);
        let fa = tape.scale(f, a);
        let gb = tape.scale(g, b);
        let out = tape.add(fa, gb).unwrap();
        let mut grads = Grads::zeros_like(&store);
        tape.backward(out, &mut grads).unwrap();
        grads
    };
    let (a, b) = (0.7, -2.5);
    let combined = grad_of(a, b);
    let gf = grad_of(1.0, 0.0);
    let gg = grad_of(0.0, 1.0);
    for id in store.ids() {
        for k in 0..combined.get(id).len() {
            let expect = a * gf.get(id).data()[k] + b * gg.get(id).data()[k];
            assert!((combined.get(id).data()[k] - expect).abs() < 1e-9);
        }
    }
}

#[test]
fn forward_is_bit_identical_across_runs() {
    let store = mlp_store(4);
    let run = || {
        let mut tape = Tape::new(&store);
        let o = mlp_loss(&mut tape).unwrap();
        tape.scalar(o).to_bits()
    };
    assert_eq!(run(), run());
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let mut store = store_with(&[("p", 1, 4, vec![0.5, -1.0, 2.0, 0.0])]);
    let id = store.id("p").unwrap();
    let mut grads = Grads::zeros_like(&store);
    grads
        .get_mut(id)
        .data_mut()
        .copy_from_slice(&[0.3, -7.0, 1e-3, -2.0]);
    let cfg = AdamConfig {
        lr: 0.01,
        eps: 0.0,
        ..AdamConfig::default()
    };
    let before = store.get(id).clone();
    let mut adam = Adam::new(cfg, &store).unwrap();
    adam.step(&mut store, &grads).unwrap();
    for k in 0..4 {
        let g = grads.get(id).data()[k];
        let delta = store.get(id).data()[k] - before.data()[k];
        assert!((delta + 0.01 * g.signum()).abs() < 1e-15, "{delta}");
    }
    assert_eq!(adam.steps(), 1);
}

#[test]
fn adam_zero_gradient_is_a_null_update() {
    let mut store = store_with(&[("p", 1, 3, vec![0.5, -1.0, 2.0])]);
    let before = store.clone();
    let grads = Grads::zeros_like(&store);
    let mut adam = Adam::new(AdamConfig::default(), &store).unwrap();
    adam.step(&mut store, &grads).unwrap();
    assert_eq!(store, before);
}

#[test]
fn adam_second_step_follows_moment_recurrence() {
    let mut store = store_with(&[("p", 1, 1, vec![1.0])]);
    let id = store.id("p").unwrap();
    let mut grads = Grads::zeros_like(&store);
    grads.get_mut(id).data_mut()[0] = 0.5;
    let cfg = AdamConfig {
        lr: 0.1,
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
    };
    let mut adam = Adam::new(cfg, &store).unwrap();
    adam.step(&mut store, &grads).unwrap();
    let after_one = store.get(id).data()[0];
    adam.step(&mut store, &grads).unwrap();
    let second = store.get(id).data()[0] - after_one;

    // Hand evaluation: m2 = 0.9*0.05 + 0.1*0.5 = 0.095, v2 = 0.999*0.00025
    // + 0.001*0.25 = 0.00049975; m̂ = 0.095/0.19 = 0.5, v̂ = 0.00049975/0.001999
    // = 0.25, so the step is -0.1 * 0.5 / (0.5 + 1e-8).
    let expect = -0.1 * 0.5 / (0.5 + 1e-8);
    assert!((second - expect).abs() < 1e-12, "{second} vs {expect}");
}

#[test]
fn adam_rejects_mismatch_and_bad_lr() {
    let store = store_with(&[("p", 1, 3, vec![0.5, -1.0, 2.0])]);
    let other = store_with(&[("q", 1, 2, vec![0.0, 0.0])]);
    let mut adam = Adam::new(AdamConfig::default(), &store).unwrap();
    let mut s = store.clone();
    assert!(adam.step(&mut s, &Grads::zeros_like(&other)).is_err());
    let bad = AdamConfig {
        lr: 0.0,
        ..AdamConfig::default()
    };
    assert!(Adam::new(bad, &store).is_err());
}

#[test]
fn gradcheck_linear_map_is_exact() {
    let mut store = mlp_store(5);
    let report = gradcheck(&mut store, 1e-5, |tape| {
        let p = tape.params();
        let x = tape.param(p.id("x").unwrap());
        let w = tape.param(p.id("w1").unwrap());
        let y = tape.matmul(x, w)?;
        Ok(tape.sum(y))
    })
    .unwrap();
    assert!(report.max_rel_err < 1e-8, "{report:?}");
}

#[test]
fn gradcheck_zero_gradient_uses_floor() {
    let mut store = store_with(&[("x", 1, 2, vec![0.4, -0.2]), ("unused", 1, 2, vec![1.0, 2.0])]);
    let report = gradcheck(&mut store, 1e-5, |tape| {
        let x = tape.param(tape.params().id("x").unwrap());
        Ok(tape.sum(x))
    })
    .unwrap();
    assert!(report.max_rel_err < 1e-6, "{report:?}");
    assert_eq!(report.checked, 4);
}

#[test]
fn gradcheck_names_non_finite_operation() {
    let mut store = store_with(&[("x", 1, 1, vec![-1.0])]);
    let err = gradcheck(&mut store, 1e-5, |tape| {
        let x = tape.param(tape.params().id("x").unwrap());
        let s = tape.input(Tensor::scalar(f64::NAN));
        let y = tape.mul(x, s)?;
        Ok(tape.sum(y))
    })
    .unwrap_err();
    assert_eq!(err, Error::NonFinite { op: "input" });
}

#[test]
fn layer_norm_and_matmul_variants_pass_gradcheck() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut store = ParamStore::<f64>::new();
    store.insert_uniform("a", 4, 6, 1, &mut rng).unwrap();
    store.insert_uniform("b", 3, 6, 1, &mut rng).unwrap();
    store.insert_uniform("g", 1, 6, 1, &mut rng).unwrap();
    store.insert_uniform("beta", 1, 6, 1, &mut rng).unwrap();
    let report = gradcheck(&mut store, 1e-5, |tape| {
        let p = tape.params();
        let a = tape.param(p.id("a").unwrap());
        let b = tape.param(p.id("b").unwrap());
        let g = tape.param(p.id("g").unwrap());
        let beta = tape.param(p.id("beta").unwrap());
        let n = tape.layer_norm(a, g, beta)?;
        let s = tape.matmul_t(n, b, false, true)?; // 4x3
        let t = tape.matmul_t(s, n, true, false)?; // 3x6
        let r = tape.remap_rows(t, &[Some(2), None, Some(0), Some(2)])?;
        let c = tape.col_slice(r, 1, 4)?;
        let cat = tape.concat_cols(&[c, r])?;
        let sg = tape.sigmoid(cat);
        let rl = tape.relu(cat);
        let m = tape.mul(sg, rl)?;
        let rs = tape.reshape(m, 1, 40)?;
        let af = tape.affine(rs, 0.5, 0.1);
        Ok(tape.sum(af))
    })
    .unwrap();
    assert!(report.max_rel_err < 1e-6, "{report:?}");
}
