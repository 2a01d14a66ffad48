//! Small pre-norm transformer encoder over the joint input sequence.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::assemble::Assembled;
use crate::diff::{ParamId, ParamStore, Real, Tape, Var};
use crate::error::{invalid, shape, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            layers: 2,
            heads: 4,
            ffn: 256,
        }
    }
}

#[derive(Clone, Debug)]
struct Block {
    ln1: (ParamId, ParamId),
    wq: (ParamId, ParamId),
    wk: (ParamId, ParamId),
    wv: (ParamId, ParamId),
    wo: (ParamId, ParamId),
    ln2: (ParamId, ParamId),
    ff1: (ParamId, ParamId),
    ff2: (ParamId, ParamId),
}

/// Parameter handles of one encoder. Values live in a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub vocab_size: usize,
    pub max_positions: usize,
    tok_emb: ParamId,
    pos_emb: ParamId,
    blocks: Vec<Block>,
    ln_f: (ParamId, ParamId),
}

/// Contextual representations of the knowledge (`hb`, `n_max x d`) and
/// statement (`hs`, `m_max x d`) segments. Padding rows are zero.
#[derive(Clone, Debug)]
pub struct EncodedPair {
    pub hb: Var,
    pub hs: Var,
    pub knowledge_mask: Vec<bool>,
    pub statement_mask: Vec<bool>,
    pub n: usize,
    pub m: usize,
}

fn linear<T: Real, R: Rng>(
    store: &mut ParamStore<T>,
    name: &str,
    fan_in: usize,
    out: usize,
    rng: &mut R,
) -> Result<(ParamId, ParamId)> {
    Ok((
        store.insert_uniform(&format!("{name}.w"), fan_in, out, fan_in, rng)?,
        store.insert_uniform(&format!("{name}.b"), 1, out, fan_in, rng)?,
    ))
}

fn norm<T: Real>(store: &mut ParamStore<T>, name: &str, d: usize) -> Result<(ParamId, ParamId)> {
    Ok((
        store.insert_filled(&format!("{name}.g"), d, T::ONE)?,
        store.insert_filled(&format!("{name}.b"), d, T::ZERO)?,
    ))
}

fn find<T: Real>(
    store: &ParamStore<T>,
    name: &str,
    dims: (usize, usize),
) -> Result<ParamId> {
    let id = store
        .id(name)
        .ok_or_else(|| invalid(format!("missing parameter `{name}`")))?;
    if store.get(id).dims() != dims {
        return Err(shape(format!(
            "parameter `{name}` is {:?}, expected {dims:?}",
            store.get(id).dims()
        )));
    }
    Ok(id)
}

fn find_pair<T: Real>(
    store: &ParamStore<T>,
    name: &str,
    w: (usize, usize),
    b: (usize, usize),
    suffix: (&str, &str),
) -> Result<(ParamId, ParamId)> {
    Ok((
        find(store, &format!("{name}.{}", suffix.0), w)?,
        find(store, &format!("{name}.{}", suffix.1), b)?,
    ))
}

impl Encoder {
    /// Registers freshly initialized encoder parameters under `prefix`.
    pub fn init<T: Real, R: Rng>(
        store: &mut ParamStore<T>,
        prefix: &str,
        config: EncoderConfig,
        vocab_size: usize,
        max_positions: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let d = config.d_model;
        if d == 0 || config.heads == 0 || d % config.heads != 0 {
            return Err(invalid("d_model must be a positive multiple of heads"));
        }
        let tok_emb = store.insert_uniform(&format!("{prefix}.tok_emb"), vocab_size, d, d, rng)?;
        let pos_emb =
            store.insert_uniform(&format!("{prefix}.pos_emb"), max_positions, d, d, rng)?;
        let mut blocks = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let p = format!("{prefix}.l{l}");
            blocks.push(Block {
                ln1: norm(store, &format!("{p}.ln1"), d)?,
                wq: linear(store, &format!("{p}.q"), d, d, rng)?,
                wk: linear(store, &format!("{p}.k"), d, d, rng)?,
                wv: linear(store, &format!("{p}.v"), d, d, rng)?,
                wo: linear(store, &format!("{p}.o"), d, d, rng)?,
                ln2: norm(store, &format!("{p}.ln2"), d)?,
                ff1: linear(store, &format!("{p}.ff1"), d, config.ffn, rng)?,
                ff2: linear(store, &format!("{p}.ff2"), config.ffn, d, rng)?,
            });
        }
        let ln_f = norm(store, &format!("{prefix}.ln_f"), d)?;
        Ok(Self {
            config,
            vocab_size,
            max_positions,
            tok_emb,
            pos_emb,
            blocks,
            ln_f,
        })
    }

    /// Binds to parameters already present in `store`, checking every shape
    /// against `config`.
    pub fn bind<T: Real>(
        store: &ParamStore<T>,
        prefix: &str,
        config: EncoderConfig,
        vocab_size: usize,
        max_positions: usize,
    ) -> Result<Self> {
        let d = config.d_model;
        if d == 0 || config.heads == 0 || d % config.heads != 0 {
            return Err(invalid("d_model must be a positive multiple of heads"));
        }
        let lin = |name: &str, i: usize, o: usize| {
            find_pair(store, name, (i, o), (1, o), ("w", "b"))
        };
        let ln = |name: &str| find_pair(store, name, (1, d), (1, d), ("g", "b"));
        let mut blocks = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let p = format!("{prefix}.l{l}");
            blocks.push(Block {
                ln1: ln(&format!("{p}.ln1"))?,
                wq: lin(&format!("{p}.q"), d, d)?,
                wk: lin(&format!("{p}.k"), d, d)?,
                wv: lin(&format!("{p}.v"), d, d)?,
                wo: lin(&format!("{p}.o"), d, d)?,
                ln2: ln(&format!("{p}.ln2"))?,
                ff1: lin(&format!("{p}.ff1"), d, config.ffn)?,
                ff2: lin(&format!("{p}.ff2"), config.ffn, d)?,
            });
        }
        Ok(Self {
            config,
            vocab_size,
            max_positions,
            tok_emb: find(store, &format!("{prefix}.tok_emb"), (vocab_size, d))?,
            pos_emb: find(store, &format!("{prefix}.pos_emb"), (max_positions, d))?,
            blocks,
            ln_f: ln(&format!("{prefix}.ln_f"))?,
        })
    }

    fn affine<T: Real>(&self, tape: &mut Tape<'_, T>, x: Var, p: (ParamId, ParamId)) -> Result<Var> {
        let w = tape.param(p.0);
        let b = tape.param(p.1);
        let y = tape.matmul(x, w)?;
        tape.add_row(y, b)
    }

    fn layer_norm<T: Real>(&self, tape: &mut Tape<'_, T>, x: Var, p: (ParamId, ParamId)) -> Result<Var> {
        let g = tape.param(p.0);
        let b = tape.param(p.1);
        tape.layer_norm(x, g, b)
    }

    /// Hidden states (`len x d`) of an unpadded id sequence. Padding never
    /// enters the computation, so results do not depend on padded length.
    pub fn forward<T: Real>(&self, tape: &mut Tape<'_, T>, ids: &[u32]) -> Result<Var> {
        let len = ids.len();
        if len == 0 || len > self.max_positions {
            return Err(invalid(format!(
                "sequence of {len} tokens, encoder supports 1..={}",
                self.max_positions
            )));
        }
        let d = self.config.d_model;
        let heads = self.config.heads;
        let dh = d / heads;
        let scale = T::from_f64(1.0 / libm::sqrt(dh as f64));
        let positions: Vec<u32> = (0..len as u32).collect();
        let tok = tape.gather(self.tok_emb, ids)?;
        let pos = tape.gather(self.pos_emb, &positions)?;
        let mut x = tape.add(tok, pos)?;
        for b in &self.blocks {
            let h = self.layer_norm(tape, x, b.ln1)?;
            let q = self.affine(tape, h, b.wq)?;
            let k = self.affine(tape, h, b.wk)?;
            let v = self.affine(tape, h, b.wv)?;
            let mut outs = Vec::with_capacity(heads);
            for hd in 0..heads {
                let qh = tape.col_slice(q, hd * dh, dh)?;
                let kh = tape.col_slice(k, hd * dh, dh)?;
                let vh = tape.col_slice(v, hd * dh, dh)?;
                let s = tape.matmul_t(qh, kh, false, true)?;
                let s = tape.scale(s, scale);
                let a = tape.softmax(s, None)?;
                outs.push(tape.matmul(a, vh)?);
            }
            let o = if heads == 1 { outs[0] } else { tape.concat_cols(&outs)? };
            let o = self.affine(tape, o, b.wo)?;
            x = tape.add(x, o)?;
            let h = self.layer_norm(tape, x, b.ln2)?;
            let f = self.affine(tape, h, b.ff1)?;
            let f = tape.relu(f);
            let f = self.affine(tape, f, b.ff2)?;
            x = tape.add(x, f)?;
        }
        self.layer_norm(tape, x, self.ln_f)
    }

    /// Encodes an assembled pair and slices out the two segments, padded to
    /// their fixed lengths.
    pub fn encode_pair<T: Real>(&self, tape: &mut Tape<'_, T>, input: &Assembled) -> Result<EncodedPair> {
        let h = self.forward(tape, input.real_ids())?;
        let (n_max, m_max) = (input.lengths.n_max, input.lengths.m_max);
        let kb: Vec<Option<usize>> = (0..n_max)
            .map(|j| (j < input.n).then(|| input.knowledge_pos(j)))
            .collect();
        let ks: Vec<Option<usize>> = (0..m_max)
            .map(|i| (i < input.m).then(|| input.statement_pos(i)))
            .collect();
        let hb = tape.remap_rows(h, &kb)?;
        let hs = tape.remap_rows(h, &ks)?;
        Ok(EncodedPair {
            hb,
            hs,
            knowledge_mask: input.knowledge_mask.clone(),
            statement_mask: input.statement_mask.clone(),
            n: input.n,
            m: input.m,
        })
    }
}
