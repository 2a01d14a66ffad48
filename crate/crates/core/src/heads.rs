//! The neural modules of the two reasoning chains. Each is a thin
//! differentiable map over an [`EncodedPair`].

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{ParamId, ParamStore, Real, Tape, Tensor, Var};
use crate::error::{invalid, shape, Result};
use crate::text::EncodedPair;

/// Which segment an attention vector ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Knowledge,
    Statement,
}

/// Attention distribution over one segment's (padded) positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttnVec {
    pub probs: Vec<f64>,
    pub segment: Segment,
}

impl AttnVec {
    pub fn argmax(&self) -> usize {
        argmax_first(&self.probs)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Two-way distribution. Index 0 is the first class of the head:
/// positive polarity, increasing value, world 1 ahead, prediction type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryDist(pub [f64; 2]);

impl BinaryDist {
    /// Argmax with ties toward the first class.
    pub fn first_wins(&self) -> bool {
        self.0[0] >= self.0[1]
    }
}

/// Per-token scorer: one tanh hidden layer of width `d`, scalar output.
#[derive(Clone, Debug)]
pub struct TokenScorer {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

/// Two-way classifier: one tanh hidden layer of width `d`.
#[derive(Clone, Debug)]
pub struct Classifier {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

fn mlp<T: Real>(
    tape: &mut Tape<'_, T>,
    x: Var,
    (w1, b1, w2, b2): (ParamId, ParamId, ParamId, ParamId),
) -> Result<Var> {
    let w1 = tape.param(w1);
    let b1 = tape.param(b1);
    let w2 = tape.param(w2);
    let b2 = tape.param(b2);
    let h = tape.matmul(x, w1)?;
    let h = tape.add_row(h, b1)?;
    let h = tape.tanh(h);
    let o = tape.matmul(h, w2)?;
    tape.add_row(o, b2)
}

fn register_mlp<T: Real, R: Rng>(
    store: &mut ParamStore<T>,
    name: &str,
    input: usize,
    hidden: usize,
    out: usize,
    rng: &mut R,
) -> Result<(ParamId, ParamId, ParamId, ParamId)> {
    Ok((
        store.insert_uniform(&format!("{name}.w1"), input, hidden, input, rng)?,
        store.insert_uniform(&format!("{name}.b1"), 1, hidden, input, rng)?,
        store.insert_uniform(&format!("{name}.w2"), hidden, out, hidden, rng)?,
        store.insert_uniform(&format!("{name}.b2"), 1, out, hidden, rng)?,
    ))
}

fn bind_mlp<T: Real>(
    store: &ParamStore<T>,
    name: &str,
    input: usize,
    hidden: usize,
    out: usize,
) -> Result<(ParamId, ParamId, ParamId, ParamId)> {
    let get = |suffix: &str, dims: (usize, usize)| {
        let full = format!("{name}.{suffix}");
        let id = store
            .id(&full)
            .ok_or_else(|| invalid(format!("missing parameter `{full}`")))?;
        if store.get(id).dims() != dims {
            return Err(shape(format!("parameter `{full}` should be {dims:?}")));
        }
        Ok(id)
    };
    Ok((
        get("w1", (input, hidden))?,
        get("b1", (1, hidden))?,
        get("w2", (hidden, out))?,
        get("b2", (1, out))?,
    ))
}

impl TokenScorer {
    fn ids(&self) -> (ParamId, ParamId, ParamId, ParamId) {
        (self.w1, self.b1, self.w2, self.b2)
    }

    pub fn param_ids(&self) -> [ParamId; 4] {
        [self.w1, self.b1, self.w2, self.b2]
    }

    /// Masked softmax over per-token scores of `h` (`len x d`). Padded
    /// positions are skipped and receive probability exactly zero.
    pub fn attend<T: Real>(&self, tape: &mut Tape<'_, T>, h: Var, mask: &[bool]) -> Result<Var> {
        if tape.value(h).rows() != mask.len() {
            return Err(shape("attention mask does not cover the segment"));
        }
        let active: Vec<Option<usize>> = mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| Some(i))
            .collect();
        if active.is_empty() {
            return Err(invalid("segment has no unmasked positions"));
        }
        let rows = tape.remap_rows(h, &active)?;
        let scores = mlp(tape, rows, self.ids())?;
        let mut back = alloc::vec![None; mask.len()];
        for (k, i) in active.iter().enumerate() {
            back[i.unwrap()] = Some(k);
        }
        let scores = tape.remap_rows(scores, &back)?;
        let scores = tape.reshape(scores, 1, mask.len())?;
        tape.softmax(scores, Some(mask))
    }
}

impl Classifier {
    fn ids(&self) -> (ParamId, ParamId, ParamId, ParamId) {
        (self.w1, self.b1, self.w2, self.b2)
    }

    pub fn param_ids(&self) -> [ParamId; 4] {
        [self.w1, self.b1, self.w2, self.b2]
    }

    pub fn classify<T: Real>(&self, tape: &mut Tape<'_, T>, x: Var) -> Result<Var> {
        let o = mlp(tape, x, self.ids())?;
        tape.softmax(o, None)
    }
}

/// Parameter handles of all reasoning heads.
#[derive(Clone, Debug)]
pub struct Heads {
    pub d: usize,
    pub cause: TokenScorer,
    pub effect: TokenScorer,
    pub world: TokenScorer,
    pub world1: TokenScorer,
    pub world2: TokenScorer,
    pub polarity: Classifier,
    pub value: Classifier,
    pub kind: Classifier,
    pub w_com: ParamId,
}

const SCORERS: [&str; 5] = ["cause", "effect", "world", "world1", "world2"];

impl Heads {
    pub fn init<T: Real, R: Rng>(store: &mut ParamStore<T>, d: usize, rng: &mut R) -> Result<Self> {
        let mut scorers = Vec::with_capacity(5);
        for name in SCORERS {
            let (w1, b1, w2, b2) = register_mlp(store, &format!("head.{name}"), d, d, 1, rng)?;
            scorers.push(TokenScorer { w1, b1, w2, b2 });
        }
        let mut cls = |name: &str, input: usize, rng: &mut R| -> Result<Classifier> {
            let (w1, b1, w2, b2) = register_mlp(store, &format!("head.{name}"), input, d, 2, rng)?;
            Ok(Classifier { w1, b1, w2, b2 })
        };
        let polarity = cls("polarity", 2 * d, rng)?;
        let value = cls("value", d, rng)?;
        let kind = cls("type", d, rng)?;
        let w_com = store.insert_uniform("head.w_com", d, d, d, rng)?;
        let mut it = scorers.into_iter();
        let mut next = || it.next().unwrap();
        Ok(Self {
            d,
            cause: next(),
            effect: next(),
            world: next(),
            world1: next(),
            world2: next(),
            polarity,
            value,
            kind,
            w_com,
        })
    }

    pub fn bind<T: Real>(store: &ParamStore<T>, d: usize) -> Result<Self> {
        let scorer = |name: &str| -> Result<TokenScorer> {
            let (w1, b1, w2, b2) = bind_mlp(store, &format!("head.{name}"), d, d, 1)?;
            Ok(TokenScorer { w1, b1, w2, b2 })
        };
        let cls = |name: &str, input: usize| -> Result<Classifier> {
            let (w1, b1, w2, b2) = bind_mlp(store, &format!("head.{name}"), input, d, 2)?;
            Ok(Classifier { w1, b1, w2, b2 })
        };
        let w_com = store
            .id("head.w_com")
            .ok_or_else(|| invalid("missing parameter `head.w_com`"))?;
        if store.get(w_com).dims() != (d, d) {
            return Err(shape("head.w_com must be d x d"));
        }
        Ok(Self {
            d,
            cause: scorer("cause")?,
            effect: scorer("effect")?,
            world: scorer("world")?,
            world1: scorer("world1")?,
            world2: scorer("world2")?,
            polarity: cls("polarity", 2 * d)?,
            value: cls("value", d)?,
            kind: cls("type", d)?,
            w_com,
        })
    }

    /// Cause and effect attention over the knowledge segment.
    pub fn find_cause_effect<T: Real>(&self, tape: &mut Tape<'_, T>, enc: &EncodedPair) -> Result<(Var, Var)> {
        Ok((
            self.cause.attend(tape, enc.hb, &enc.knowledge_mask)?,
            self.effect.attend(tape, enc.hb, &enc.knowledge_mask)?,
        ))
    }

    /// Polarity from the attention-weighted knowledge representations.
    pub fn polarity_check<T: Real>(
        &self,
        tape: &mut Tape<'_, T>,
        enc: &EncodedPair,
        p_c: Var,
        p_e: Var,
    ) -> Result<Var> {
        let rows = tape.value(enc.hb).rows();
        for p in [p_c, p_e] {
            if tape.value(p).dims() != (1, rows) {
                return Err(invalid("polarity check needs knowledge-segment attention"));
            }
        }
        let c = tape.matmul(p_c, enc.hb)?;
        let e = tape.matmul(p_e, enc.hb)?;
        let ce = tape.concat_cols(&[c, e])?;
        self.polarity.classify(tape, ce)
    }

    pub fn find_world<T: Real>(&self, tape: &mut Tape<'_, T>, enc: &EncodedPair) -> Result<Var> {
        self.world.attend(tape, enc.hs, &enc.statement_mask)
    }

    pub fn value_prediction<T: Real>(&self, tape: &mut Tape<'_, T>, enc: &EncodedPair, p_w: Var) -> Result<Var> {
        if tape.value(p_w).dims() != (1, tape.value(enc.hs).rows()) {
            return Err(invalid("value prediction needs statement-segment attention"));
        }
        let w = tape.matmul(p_w, enc.hs)?;
        self.value.classify(tape, w)
    }

    pub fn find_worlds<T: Real>(&self, tape: &mut Tape<'_, T>, enc: &EncodedPair) -> Result<(Var, Var)> {
        Ok((
            self.world1.attend(tape, enc.hs, &enc.statement_mask)?,
            self.world2.attend(tape, enc.hs, &enc.statement_mask)?,
        ))
    }

    /// Bilinear relevance of each world to the knowledge cause, normalized
    /// over the two worlds.
    pub fn worlds_comparison<T: Real>(
        &self,
        tape: &mut Tape<'_, T>,
        hb: Var,
        p_c: Var,
        hs: Var,
        p_w1: Var,
        p_w2: Var,
    ) -> Result<Var> {
        let w = tape.param(self.w_com);
        let c = tape.matmul(p_c, hb)?;
        let cw = tape.matmul(c, w)?;
        let mut scores = [None, None];
        for (k, p) in [p_w1, p_w2].into_iter().enumerate() {
            let wk = tape.matmul(p, hs)?;
            if tape.value(wk).cols() != tape.value(cw).cols() {
                return Err(invalid("cause and world representations differ in width"));
            }
            scores[k] = Some(tape.matmul_t(cw, wk, false, true)?);
        }
        let s = tape.concat_cols(&[scores[0].unwrap(), scores[1].unwrap()])?;
        tape.softmax(s, None)
    }

    /// Reasoning type from the mean of the unmasked statement rows.
    pub fn classify_type<T: Real>(&self, tape: &mut Tape<'_, T>, enc: &EncodedPair) -> Result<Var> {
        if enc.m == 0 {
            return Err(invalid("empty statement"));
        }
        let inv = T::from_f64(1.0 / enc.m as f64);
        let weights: Vec<T> = enc
            .statement_mask
            .iter()
            .map(|&b| if b { inv } else { T::ZERO })
            .collect();
        let pool = tape.input(Tensor::row(weights));
        let s = tape.matmul(pool, enc.hs)?;
        self.kind.classify(tape, s)
    }

    /// Parameters used only by the named head, for masking checks.
    pub fn exclusive_params(&self, head: crate::HeadKind) -> Vec<ParamId> {
        use crate::HeadKind::*;
        match head {
            Cause => self.cause.param_ids().to_vec(),
            Effect => self.effect.param_ids().to_vec(),
            World => self.world.param_ids().to_vec(),
            World1 => self.world1.param_ids().to_vec(),
            World2 => self.world2.param_ids().to_vec(),
            Polarity => self.polarity.param_ids().to_vec(),
            Value => self.value.param_ids().to_vec(),
            Comparison => alloc::vec![self.w_com],
            Type => self.kind.param_ids().to_vec(),
        }
    }
}

/// Reads a `1 x n` probability row off the tape.
pub fn read_attn<T: Real>(tape: &Tape<'_, T>, v: Var, segment: Segment) -> AttnVec {
    AttnVec {
        probs: tape.value(v).data().iter().map(|x| x.to_f64()).collect(),
        segment,
    }
}

pub fn read_binary<T: Real>(tape: &Tape<'_, T>, v: Var) -> BinaryDist {
    let d = tape.value(v).data();
    BinaryDist([d[0].to_f64(), d[1].to_f64()])
}
