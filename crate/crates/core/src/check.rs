//! Whole-model gradient validation in double precision.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{gradcheck_where, GradCheckReport, ParamStore, Tape, Var};
use crate::error::Result;
use crate::heads::Heads;
use crate::text::{assemble_ids, Encoder, EncoderConfig, Lengths};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    /// Knowledge tokens.
    pub n: usize,
    /// Statement tokens.
    pub m: usize,
    pub d_model: usize,
    pub layers: usize,
    pub eps: f64,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            n: 12,
            m: 12,
            d_model: 16,
            layers: 2,
            eps: 1e-5,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheck {
    /// Every encoder and head parameter.
    pub full: GradCheckReport,
    /// Final scoring layers only: each head's output affine map and the
    /// comparison bilinear form.
    pub linear: GradCheckReport,
}

/// True for the parameters of the heads' last, linear scoring stage.
pub fn is_scoring_param(name: &str) -> bool {
    name == "head.w_com"
        || (name.starts_with("head.") && (name.ends_with(".w2") || name.ends_with(".b2")))
}

/// Builds a random reasoning model and checks the gradient of the sum of
/// every head's gold log-probability against central differences.
pub fn check_reasoner(cfg: &CheckConfig) -> Result<ModelCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab_size = 32;
    let lengths = Lengths {
        n_max: cfg.n + 2,
        m_max: cfg.m + 1,
    };
    let enc_cfg = EncoderConfig {
        d_model: cfg.d_model,
        layers: cfg.layers,
        heads: 2,
        ffn: 2 * cfg.d_model,
    };
    let mut store = ParamStore::<f64>::new();
    let encoder = Encoder::init(&mut store, "enc", enc_cfg, vocab_size, lengths.total(), &mut rng)?;
    let heads = Heads::init(&mut store, cfg.d_model, &mut rng)?;
    let mut ids = |k: usize| -> Vec<u32> { (0..k).map(|_| rng.random_range(4..vocab_size as u32)).collect() };
    let input = assemble_ids(&ids(cfg.n), &ids(cfg.m), lengths);
    let gold: Vec<usize> = (0..9)
        .map(|i| match i {
            0 | 1 => rng.random_range(0..cfg.n),
            2..=4 => rng.random_range(0..cfg.m),
            _ => rng.random_range(0..2),
        })
        .collect();
    let loss = |tape: &mut Tape<'_, f64>| -> Result<Var> {
        let e = encoder.encode_pair(tape, &input)?;
        let (pc, pe) = heads.find_cause_effect(tape, &e)?;
        let pw = heads.find_world(tape, &e)?;
        let (p1, p2) = heads.find_worlds(tape, &e)?;
        let pol = heads.polarity_check(tape, &e, pc, pe)?;
        let val = heads.value_prediction(tape, &e, pw)?;
        let com = heads.worlds_comparison(tape, e.hb, pc, e.hs, p1, p2)?;
        let ty = heads.classify_type(tape, &e)?;
        let mut terms = Vec::new();
        for (v, &g) in [pc, pe, pw, p1, p2, pol, val, com, ty].into_iter().zip(&gold) {
            let p = tape.pick(v, &[g])?;
            terms.push(tape.log(p, 1e-12));
        }
        let all = tape.concat_cols(&terms)?;
        Ok(tape.sum(all))
    };
    let full = gradcheck_where(&mut store, cfg.eps, |_| true, loss)?;
    let linear = gradcheck_where(&mut store, cfg.eps, is_scoring_param, loss)?;
    Ok(ModelCheck { full, linear })
}
