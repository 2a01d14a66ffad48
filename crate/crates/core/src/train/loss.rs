use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Labels;
use crate::diff::{Real, Tape, Tensor, Var};
use crate::error::{invalid, Result};
use crate::kinds::HeadKind;
use crate::model::HeadVars;

/// Floor applied inside every loss logarithm.
pub const LOG_EPS: f64 = 1e-12;

/// Per-head loss weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub cause: f64,
    pub effect: f64,
    pub world: f64,
    pub world1: f64,
    pub world2: f64,
    pub polarity: f64,
    pub value: f64,
    pub comparison: f64,
    #[serde(rename = "type")]
    pub kind: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            cause: 0.1,
            effect: 0.1,
            world: 0.1,
            world1: 0.1,
            world2: 0.1,
            polarity: 0.2,
            value: 0.2,
            comparison: 0.2,
            kind: 0.2,
        }
    }
}

impl LossWeights {
    pub fn get(&self, head: HeadKind) -> f64 {
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

    pub fn validate(&self) -> Result<()> {
        if HeadKind::ALL.iter().all(|h| self.get(*h).is_finite() && self.get(*h) >= 0.0) {
            Ok(())
        } else {
            Err(invalid("loss weights must be finite and non-negative"))
        }
    }
}

/// Heads that contribute to the loss of one instance: label available,
/// positive weight, not ablated.
pub fn active_heads(labels: &Labels, weights: &LossWeights, ablate: &[HeadKind]) -> Vec<HeadKind> {
    HeadKind::ALL
        .into_iter()
        .filter(|h| labels.gamma(*h) && weights.get(*h) > 0.0 && !ablate.contains(h))
        .collect()
}

/// Weighted negative log-likelihood of the gold labels, summed over the
/// `active` heads. Span heads sum over every gold position. Returns an exact
/// zero constant when nothing is active.
pub fn reason_loss<T: Real>(
    tape: &mut Tape<'_, T>,
    outs: &HeadVars,
    labels: &Labels,
    weights: &LossWeights,
    active: &[HeadKind],
) -> Result<Var> {
    let mut total: Option<Var> = None;
    for &head in active {
        let y = outs
            .get(head)
            .ok_or_else(|| invalid(alloc::format!("no output built for head `{head}`")))?;
        let gold: Vec<usize> = if head.is_span() {
            labels.span(head).map(<[usize]>::to_vec)
        } else {
            labels.class(head).map(|c| alloc::vec![c])
        }
        .ok_or_else(|| invalid(alloc::format!("head `{head}` has no label")))?;
        let p = tape.pick(y, &gold)?;
        let lp = tape.log(p, T::from_f64(LOG_EPS));
        let s = tape.sum(lp);
        let term = tape.scale(s, T::from_f64(-weights.get(head)));
        total = Some(match total {
            Some(t) => tape.add(t, term)?,
            None => term,
        });
    }
    Ok(total.unwrap_or_else(|| tape.input(Tensor::scalar(T::ZERO))))
}

/// Binary cross-entropy of per-option probabilities (`1 x k`) against
/// 0/1 labels, averaged over options.
pub fn answer_loss<T: Real>(tape: &mut Tape<'_, T>, probs: Var, labels: &[bool]) -> Result<Var> {
    let k = tape.value(probs).len();
    if k != labels.len() || k == 0 {
        return Err(invalid("one label per option is required"));
    }
    let eps = T::from_f64(LOG_EPS);
    let lp = tape.log(probs, eps);
    let one_minus = tape.affine(probs, T::from_f64(-1.0), T::ONE);
    let lq = tape.log(one_minus, eps);
    let yes: Vec<T> = labels.iter().map(|&y| if y { T::ONE } else { T::ZERO }).collect();
    let no: Vec<T> = labels.iter().map(|&y| if y { T::ZERO } else { T::ONE }).collect();
    let dims = tape.value(probs).dims();
    let yes = tape.input(Tensor::from_vec(dims.0, dims.1, yes)?);
    let no = tape.input(Tensor::from_vec(dims.0, dims.1, no)?);
    let a = tape.mul(lp, yes)?;
    let b = tape.mul(lq, no)?;
    let ab = tape.add(a, b)?;
    let s = tape.sum(ab);
    Ok(tape.scale(s, T::from_f64(-1.0 / k as f64)))
}
