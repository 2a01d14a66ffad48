use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::rules::{deduce_comparison, deduce_prediction, synthesize_text, Slots, SyntheticText};
use super::span::{attention_to_span, Span};
use crate::data::Prepared;
use crate::error::{invalid, Result};
use crate::heads::{AttnVec, BinaryDist, Segment};
use crate::kinds::{Direction, Polarity, ReasoningType, ValueDir, WorldOrder};

/// Default span threshold.
pub const DEFAULT_TAU: f64 = 0.15;

/// Every head output for one instance. Chain-specific heads are `None` when
/// that chain was not requested.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadReadout {
    pub kind: BinaryDist,
    pub cause: AttnVec,
    pub effect: AttnVec,
    pub polarity: BinaryDist,
    pub world: Option<AttnVec>,
    pub value: Option<BinaryDist>,
    pub world1: Option<AttnVec>,
    pub world2: Option<AttnVec>,
    pub comparison: Option<BinaryDist>,
}

/// Anything that produces head outputs: a trained model or a gold oracle.
pub trait Reasoner {
    /// Computes the type, cause/effect and polarity heads plus the heads of
    /// `chain`, or of both chains when `chain` is `None`.
    fn readout(&self, item: &Prepared, chain: Option<ReasoningType>) -> Result<HeadReadout>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chain", rename_all = "lowercase")]
pub enum ChainDetail {
    Prediction {
        world: Span,
        world_attn: AttnVec,
        value: ValueDir,
        value_dist: BinaryDist,
    },
    Comparison {
        world1: Span,
        world2: Span,
        world1_attn: AttnVec,
        world2_attn: AttnVec,
        comparison: WorldOrder,
        comparison_dist: BinaryDist,
    },
}

/// Full record of one pass through a reasoning chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub id: String,
    pub kind: ReasoningType,
    pub forced: bool,
    pub kind_dist: BinaryDist,
    pub cause: Span,
    pub effect: Span,
    pub cause_attn: AttnVec,
    pub effect_attn: AttnVec,
    pub polarity: Polarity,
    pub polarity_dist: BinaryDist,
    pub detail: ChainDetail,
    pub direction: Direction,
    pub synthetic: SyntheticText,
}

fn class_of(d: &BinaryDist) -> usize {
    if d.first_wins() {
        0
    } else {
        1
    }
}

fn span_of(item: &Prepared, attn: &AttnVec, tau: f64) -> Result<Span> {
    let (start, end) = attention_to_span(&attn.probs, tau)?;
    let (src, tokens) = match attn.segment {
        Segment::Knowledge => (item.example.instance.knowledge.as_str(), &item.knowledge_tokens),
        Segment::Statement => (item.statement.as_str(), &item.statement_tokens),
    };
    // Padded positions carry zero mass, so the span stays inside the real
    // tokens; clamp anyway for vectors built by hand.
    let last = tokens.len().checked_sub(1).ok_or_else(|| invalid("empty segment"))?;
    Span::over(src, tokens, start.min(last), end.min(last), attn.segment)
}

/// Runs the chain picked by the type head (or `forced`), converts spans,
/// applies the decision rule and fills the deduction template.
pub fn run_chain<R: Reasoner + ?Sized>(
    item: &Prepared,
    model: &R,
    tau: f64,
    forced: Option<ReasoningType>,
) -> Result<ReasoningTrace> {
    let first = model.readout(item, forced)?;
    let kind = forced.unwrap_or_else(|| ReasoningType::from_class(class_of(&first.kind)));
    let out = if forced.is_none() {
        model.readout(item, Some(kind))?
    } else {
        first
    };
    let cause = span_of(item, &out.cause, tau)?;
    let effect = span_of(item, &out.effect, tau)?;
    let polarity = Polarity::from_class(class_of(&out.polarity));
    let missing = || invalid("reasoner omitted a head of the requested chain");
    let (detail, slots) = match kind {
        ReasoningType::Prediction => {
            let world_attn = out.world.clone().ok_or_else(missing)?;
            let value_dist = out.value.ok_or_else(missing)?;
            let world = span_of(item, &world_attn, tau)?;
            let value = ValueDir::from_class(class_of(&value_dist));
            let direction = deduce_prediction(polarity, value);
            let slots = Slots::Prediction {
                world: world.text.clone(),
                effect: effect.text.clone(),
                direction,
            };
            (
                ChainDetail::Prediction {
                    world,
                    world_attn,
                    value,
                    value_dist,
                },
                slots,
            )
        }
        ReasoningType::Comparison => {
            let world1_attn = out.world1.clone().ok_or_else(missing)?;
            let world2_attn = out.world2.clone().ok_or_else(missing)?;
            let comparison_dist = out.comparison.ok_or_else(missing)?;
            let world1 = span_of(item, &world1_attn, tau)?;
            let world2 = span_of(item, &world2_attn, tau)?;
            let comparison = WorldOrder::from_class(class_of(&comparison_dist));
            let direction = deduce_comparison(polarity, comparison);
            let slots = Slots::Comparison {
                world1: world1.text.clone(),
                world2: world2.text.clone(),
                effect: effect.text.clone(),
                direction,
            };
            (
                ChainDetail::Comparison {
                    world1,
                    world2,
                    world1_attn,
                    world2_attn,
                    comparison,
                    comparison_dist,
                },
                slots,
            )
        }
    };
    let synthetic = synthesize_text(slots)?;
    Ok(ReasoningTrace {
        id: item.id().into(),
        kind,
        forced: forced.is_some(),
        kind_dist: out.kind,
        cause,
        effect,
        cause_attn: out.cause,
        effect_attn: out.effect,
        polarity,
        polarity_dist: out.polarity,
        direction: synthetic.slots.direction(),
        detail,
        synthetic,
    })
}
