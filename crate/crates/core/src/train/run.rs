use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{active_heads, answer_loss, reason_loss, LossWeights};
use crate::answer::{gold_synthetic, AnswerModel, AnswerPredictor};
use crate::data::{Example, Instance, Prepared};
use crate::deduction::{run_chain, Reasoner};
use crate::diff::{Adam, AdamConfig, Grads, ParamStore, Tape};
use crate::error::{invalid, Error, Result};
use crate::eval::{module_eval, tune_threshold, ModuleReport};
use crate::kinds::HeadKind;
use crate::model::{forward_heads, ReasonModel};
use crate::text::{Assembled, RESERVED, UNK};

/// Optimization settings shared by both training loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Minibatches whose gradients are summed before one optimizer step.
    pub accum_steps: usize,
    pub seed: u64,
    pub weights: LossWeights,
    /// Heads whose loss terms are switched off.
    pub ablate: Vec<HeadKind>,
    /// Word dropout strength: a training token seen `c` times is replaced
    /// by `<unk>` with probability `a / (a + c)`. Zero disables it.
    pub unk_alpha: f64,
    /// Re-pick the span threshold on the dev split after training.
    pub tune_tau: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch_size: 32,
            epochs: 10,
            accum_steps: 1,
            seed: 7,
            weights: LossWeights::default(),
            ablate: Vec::new(),
            unk_alpha: 50.0,
            tune_tau: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.accum_steps == 0 {
            return Err(invalid("batch size, epochs and accumulation steps must be positive"));
        }
        if !(self.unk_alpha >= 0.0 && self.unk_alpha.is_finite()) {
            return Err(invalid("unk_alpha must be non-negative"));
        }
        self.weights.validate()
    }
}

/// One line of the metric log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub split: String,
    /// Mean training loss over the epoch.
    pub loss: f64,
    /// Logarithms clamped at the loss floor during the epoch.
    pub log_clamps: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct Trained<M> {
    pub model: M,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// Token counts over the training inputs, for word dropout.
fn token_counts<'a>(inputs: impl Iterator<Item = &'a Assembled>, vocab_len: usize) -> Vec<u32> {
    let mut counts = alloc::vec![0u32; vocab_len];
    for a in inputs {
        for &id in a.real_ids() {
            counts[id as usize] += 1;
        }
    }
    counts
}

fn word_dropout<R: Rng>(input: &Assembled, counts: &[u32], alpha: f64, rng: &mut R) -> Assembled {
    let mut out = input.clone();
    if alpha <= 0.0 {
        return out;
    }
    let len = out.len;
    for id in out.ids[..len].iter_mut() {
        if (*id as usize) < RESERVED.len() {
            continue;
        }
        let c = f64::from(counts[*id as usize]);
        if rng.random::<f64>() < alpha / (alpha + c) {
            *id = UNK;
        }
    }
    out
}

fn non_finite(tape: &Tape<'_, f32>) -> Error {
    Error::NonFinite {
        op: tape.first_non_finite().unwrap_or("loss"),
    }
}

fn report_metrics(report: &ModuleReport) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for (h, c) in &report.cells {
        if let Some(v) = c.f1 {
            m.insert(format!("{h}.f1"), v);
        }
        if let Some(v) = c.fuzzy_f1 {
            m.insert(format!("{h}.fuzzy_f1"), v);
        }
        if let Some(v) = c.accuracy {
            m.insert(format!("{h}.accuracy"), v);
        }
    }
    m.insert("mean".to_string(), report.mean());
    m
}

/// Runs minibatch Adam over `n` instances. `step_loss` builds one
/// instance's loss on a fresh tape and backpropagates it into the shared
/// gradient buffer, returning the loss value and clamp count. After each
/// epoch `evaluate` scores the current parameters; the best-scoring
/// parameters are kept.
fn optimize<F, E>(
    store: &mut ParamStore<f32>,
    n: usize,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    mut step_loss: F,
    mut evaluate: E,
) -> Result<(Vec<EpochLog>, usize)>
where
    F: FnMut(&ParamStore<f32>, usize, &mut ChaCha8Rng, &mut Grads<f32>) -> Result<(f64, usize)>,
    E: FnMut(&ParamStore<f32>) -> Result<(f64, BTreeMap<String, f64>)>,
{
    if n == 0 {
        return Err(invalid("training set is empty"));
    }
    let mut adam = Adam::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        store,
    )?;
    let mut grads = Grads::zeros_like(store);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ParamStore<f32>)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut clamps = 0;
        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        let mut pending = 0usize;
        for (b, batch) in batches.iter().enumerate() {
            for &i in *batch {
                let (l, c) = step_loss(store, i, rng, &mut grads)?;
                total += l;
                clamps += c;
            }
            pending += batch.len();
            if (b + 1) % cfg.accum_steps == 0 || b + 1 == batches.len() {
                grads.scale(1.0 / pending as f32);
                if !grads.is_finite() {
                    return Err(Error::NonFinite { op: "gradient" });
                }
                adam.step(store, &grads)?;
                grads.reset();
                pending = 0;
            }
        }
        let (score, metrics) = evaluate(store)?;
        log.push(EpochLog {
            epoch,
            split: "dev".into(),
            loss: total / n as f64,
            log_clamps: clamps,
            metrics,
        });
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, epoch, store.clone()));
        }
    }
    let (_, best_epoch, params) = best.unwrap();
    store.load_from(&params)?;
    Ok((log, best_epoch))
}

/// Trains every reasoning head jointly on the masked multi-task loss and
/// keeps the parameters with the best mean dev module score.
pub fn train_reasoning(
    mut model: ReasonModel,
    train: &[Example],
    dev: &[Example],
    cfg: &TrainConfig,
) -> Result<Trained<ReasonModel>> {
    cfg.validate()?;
    let train: Vec<Prepared> = train.iter().map(|e| model.prepare(e)).collect();
    let dev: Vec<Prepared> = dev.iter().map(|e| model.prepare(e)).collect();
    if dev.is_empty() {
        return Err(invalid("dev set is empty"));
    }
    let counts = token_counts(train.iter().map(|p| &p.input), model.vocab.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (encoder, heads, config, vocab) = (
        model.encoder.clone(),
        model.heads.clone(),
        model.config,
        model.vocab.clone(),
    );
    let (log, best_epoch) = optimize(
        &mut model.store,
        train.len(),
        cfg,
        &mut rng,
        |store, i, rng, grads| {
            let item = &train[i];
            let active = active_heads(&item.labels, &cfg.weights, &cfg.ablate);
            if active.is_empty() {
                return Ok((0.0, 0));
            }
            let input = word_dropout(&item.input, &counts, cfg.unk_alpha, rng);
            let mut tape = Tape::new(store);
            let outs = forward_heads(&mut tape, &encoder, &heads, &input, &active)?;
            let loss = reason_loss(&mut tape, &outs, &item.labels, &cfg.weights, &active)?;
            let v = tape.scalar(loss);
            if !v.is_finite() {
                return Err(non_finite(&tape));
            }
            tape.backward(loss, grads)?;
            Ok((f64::from(v), tape.log_clamps()))
        },
        |store| {
            let m = ReasonModel {
                config,
                vocab: vocab.clone(),
                store: store.clone(),
                encoder: encoder.clone(),
                heads: heads.clone(),
            };
            let report = module_eval(&m, &dev, config.tau)?;
            Ok((report.mean(), report_metrics(&report)))
        },
    )?;
    if cfg.tune_tau {
        model.config.tau = tune_threshold(&model, &dev)?.0;
    }
    Ok(Trained {
        model,
        log,
        best_epoch,
    })
}

/// Where the answerer's context text comes from during training.
pub enum ContextSource<'a> {
    /// Deduction sentences built from the gold labels.
    Gold,
    /// Deduction sentences produced by a reasoning model.
    Reasoner(&'a dyn Reasoner, f64),
    /// The raw knowledge sentence.
    Knowledge,
}

/// Context text per item. Items whose context cannot be produced yield
/// `None` and are skipped by the answer trainer.
pub fn answer_contexts(items: &[Prepared], source: &ContextSource<'_>) -> Vec<Option<String>> {
    items
        .iter()
        .map(|it| match source {
            ContextSource::Gold => gold_synthetic(it).ok().map(|s| s.text),
            ContextSource::Reasoner(r, tau) => run_chain(it, *r, *tau, None).ok().map(|t| t.synthetic.text),
            ContextSource::Knowledge => Some(it.example.instance.knowledge.clone()),
        })
        .collect()
}

/// Trains the option scorer with binary cross-entropy over both options and
/// keeps the parameters with the best dev accuracy.
pub fn train_answerer(
    mut model: AnswerModel,
    train: &[(Instance, String)],
    dev: &[(Instance, String)],
    cfg: &TrainConfig,
) -> Result<Trained<AnswerModel>> {
    cfg.validate()?;
    if dev.is_empty() {
        return Err(invalid("dev set is empty"));
    }
    let inputs: Vec<[Assembled; 2]> = train
        .iter()
        .map(|(inst, text)| Ok([model.input(text, inst, 0)?, model.input(text, inst, 1)?]))
        .collect::<Result<_>>()?;
    let counts = token_counts(inputs.iter().flatten(), model.vocab.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (encoder, w, b, config, vocab) = (model.encoder.clone(), model.w, model.b, model.config, model.vocab.clone());
    let (log, best_epoch) = optimize(
        &mut model.store,
        inputs.len(),
        cfg,
        &mut rng,
        |store, i, rng, grads| {
            let mut tape = Tape::new(store);
            let mut scores = Vec::with_capacity(2);
            for input in &inputs[i] {
                let input = word_dropout(input, &counts, cfg.unk_alpha, rng);
                scores.push(AnswerModel::score_on(&mut tape, &encoder, w, b, &input)?);
            }
            let probs = tape.concat_cols(&scores)?;
            let gold = train[i].0.answer;
            let loss = answer_loss(&mut tape, probs, &[gold == 0, gold == 1])?;
            let v = tape.scalar(loss);
            if !v.is_finite() {
                return Err(non_finite(&tape));
            }
            tape.backward(loss, grads)?;
            Ok((f64::from(v), tape.log_clamps()))
        },
        |store| {
            let m = AnswerModel {
                config,
                vocab: vocab.clone(),
                store: store.clone(),
                encoder: encoder.clone(),
                w,
                b,
            };
            let mut correct = 0usize;
            for (inst, text) in dev {
                if m.predict(text, inst)?.choice == inst.answer {
                    correct += 1;
                }
            }
            let acc = correct as f64 / dev.len() as f64;
            let mut metrics = BTreeMap::new();
            metrics.insert("accuracy".to_string(), acc);
            Ok((acc, metrics))
        },
    )?;
    Ok(Trained {
        model,
        log,
        best_epoch,
    })
}
