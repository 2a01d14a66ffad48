//! The reasoning model: one shared encoder plus every head.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Example, Prepared};
use crate::deduction::{HeadReadout, Reasoner, DEFAULT_TAU};
use crate::diff::{ParamStore, Real, Tape, Var};
use crate::error::{invalid, Result};
use crate::heads::{read_attn, read_binary, Heads, Segment};
use crate::kinds::{HeadKind, ReasoningType};
use crate::text::{Assembled, Encoder, EncoderConfig, Lengths, Vocab};

/// Architecture and readout settings stored with a reasoning checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReasonConfig {
    pub encoder: EncoderConfig,
    pub lengths: Lengths,
    /// Span threshold used when reading spans off attention vectors.
    pub tau: f64,
}

impl Default for ReasonConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            lengths: Lengths::default(),
            tau: DEFAULT_TAU,
        }
    }
}

/// Tape handles of the head outputs built for one instance.
#[derive(Clone, Copy, Debug, Default)]
pub struct HeadVars {
    pub kind: Option<Var>,
    pub cause: Option<Var>,
    pub effect: Option<Var>,
    pub polarity: Option<Var>,
    pub world: Option<Var>,
    pub value: Option<Var>,
    pub world1: Option<Var>,
    pub world2: Option<Var>,
    pub comparison: Option<Var>,
}

impl HeadVars {
    pub fn get(&self, head: HeadKind) -> Option<Var> {
        match head {
            HeadKind::Cause => self.cause,
            HeadKind::Effect => self.effect,
            HeadKind::World => self.world,
            HeadKind::World1 => self.world1,
            HeadKind::World2 => self.world2,
            HeadKind::Polarity => self.polarity,
            HeadKind::Value => self.value,
            HeadKind::Comparison => self.comparison,
            HeadKind::Type => self.kind,
        }
    }
}

/// Encodes `input` once and builds the `wanted` heads together with the
/// attention heads they read from. Heads not needed are left off the tape.
pub fn forward_heads<T: Real>(
    tape: &mut Tape<'_, T>,
    encoder: &Encoder,
    heads: &Heads,
    input: &Assembled,
    wanted: &[HeadKind],
) -> Result<HeadVars> {
    use HeadKind::*;
    let want = |h: HeadKind| wanted.contains(&h);
    let enc = encoder.encode_pair(tape, input)?;
    let mut out = HeadVars::default();
    if want(Cause) || want(Effect) || want(Polarity) || want(Comparison) {
        let (c, e) = heads.find_cause_effect(tape, &enc)?;
        out.cause = Some(c);
        out.effect = Some(e);
        if want(Polarity) {
            out.polarity = Some(heads.polarity_check(tape, &enc, c, e)?);
        }
    }
    if want(World) || want(Value) {
        let w = heads.find_world(tape, &enc)?;
        out.world = Some(w);
        if want(Value) {
            out.value = Some(heads.value_prediction(tape, &enc, w)?);
        }
    }
    if want(World1) || want(World2) || want(Comparison) {
        let (w1, w2) = heads.find_worlds(tape, &enc)?;
        out.world1 = Some(w1);
        out.world2 = Some(w2);
        if want(Comparison) {
            let c = out.cause.unwrap();
            out.comparison = Some(heads.worlds_comparison(tape, enc.hb, c, enc.hs, w1, w2)?);
        }
    }
    if want(Type) {
        out.kind = Some(heads.classify_type(tape, &enc)?);
    }
    Ok(out)
}

/// Heads computed by a chain, always including the shared ones.
pub fn chain_heads(chain: Option<ReasoningType>) -> Vec<HeadKind> {
    use HeadKind::*;
    let mut v = alloc::vec![Type, Cause, Effect, Polarity];
    if chain != Some(ReasoningType::Comparison) {
        v.extend([World, Value]);
    }
    if chain != Some(ReasoningType::Prediction) {
        v.extend([World1, World2, Comparison]);
    }
    v
}

/// Trained (or freshly initialized) reasoning model.
#[derive(Clone, Debug)]
pub struct ReasonModel {
    pub config: ReasonConfig,
    pub vocab: Vocab,
    pub store: ParamStore<f32>,
    pub encoder: Encoder,
    pub heads: Heads,
}

impl ReasonModel {
    pub fn init(config: ReasonConfig, vocab: Vocab, seed: u64) -> Result<Self> {
        if !(config.tau > 0.0 && config.tau < 1.0) {
            return Err(invalid("threshold must lie in (0, 1)"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let encoder = Encoder::init(
            &mut store,
            "enc",
            config.encoder,
            vocab.len(),
            config.lengths.total(),
            &mut rng,
        )?;
        let heads = Heads::init(&mut store, config.encoder.d_model, &mut rng)?;
        Ok(Self {
            config,
            vocab,
            store,
            encoder,
            heads,
        })
    }

    /// Rebuilds a model around loaded parameters, checking every shape.
    pub fn from_parts(config: ReasonConfig, vocab: Vocab, store: ParamStore<f32>) -> Result<Self> {
        let encoder = Encoder::bind(&store, "enc", config.encoder, vocab.len(), config.lengths.total())?;
        let heads = Heads::bind(&store, config.encoder.d_model)?;
        Ok(Self {
            config,
            vocab,
            store,
            encoder,
            heads,
        })
    }

    pub fn prepare(&self, example: &Example) -> Prepared {
        Prepared::new(example, &self.vocab, self.config.lengths)
    }
}

impl Reasoner for ReasonModel {
    fn readout(&self, item: &Prepared, chain: Option<ReasoningType>) -> Result<HeadReadout> {
        let mut tape = Tape::new(&self.store);
        let v = forward_heads(&mut tape, &self.encoder, &self.heads, &item.input, &chain_heads(chain))?;
        tape.check_finite()?;
        let k = |x: Option<Var>| read_attn(&tape, x.unwrap(), Segment::Knowledge);
        let s = |x: Option<Var>| x.map(|x| read_attn(&tape, x, Segment::Statement));
        let b = |x: Option<Var>| x.map(|x| read_binary(&tape, x));
        Ok(HeadReadout {
            kind: b(v.kind).unwrap(),
            cause: k(v.cause),
            effect: k(v.effect),
            polarity: b(v.polarity).unwrap(),
            world: s(v.world),
            value: b(v.value),
            world1: s(v.world1),
            world2: s(v.world2),
            comparison: b(v.comparison),
        })
    }
}
