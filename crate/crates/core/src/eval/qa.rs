use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::answer::{AnswerContext, AnswerPrediction, AnswerPredictor};
use crate::data::Prepared;
use crate::deduction::{run_chain, ChainDetail, Reasoner, ReasoningTrace};
use crate::error::Result;

/// One instance through the whole pipeline: type, chain, deduction, answer.
/// The trace is absent when the answerer reads the raw knowledge.
pub fn run_pipeline<R: Reasoner + ?Sized, A: AnswerPredictor + ?Sized>(
    item: &Prepared,
    reasoner: &R,
    answerer: &A,
    tau: f64,
) -> Result<(Option<ReasoningTrace>, AnswerPrediction)> {
    let instance = &item.example.instance;
    match answerer.context() {
        AnswerContext::Knowledge => Ok((None, answerer.predict(&instance.knowledge, instance)?)),
        AnswerContext::Synthetic => {
            let trace = run_chain(item, reasoner, tau, None)?;
            let pred = answerer.predict(&trace.synthetic.text, instance)?;
            Ok((Some(trace), pred))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// Instances whose pipeline raised an error; counted as wrong.
    pub failures: usize,
    pub ties: usize,
}

/// End-to-end accuracy. A failing instance counts as wrong and the run
/// continues.
pub fn qa_accuracy<R: Reasoner + ?Sized, A: AnswerPredictor + ?Sized>(
    reasoner: &R,
    answerer: &A,
    items: &[Prepared],
    tau: f64,
) -> QaReport {
    let mut r = QaReport {
        total: items.len(),
        ..QaReport::default()
    };
    for item in items {
        match run_pipeline(item, reasoner, answerer, tau) {
            Ok((_, p)) => {
                r.ties += usize::from(p.tie);
                r.correct += usize::from(p.choice == item.example.instance.answer);
            }
            Err(_) => r.failures += 1,
        }
    }
    r.accuracy = if r.total == 0 {
        0.0
    } else {
        r.correct as f64 / r.total as f64
    };
    r
}

/// Flat, human-readable record of a trace and the final answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub cause: String,
    pub effect: String,
    pub polarity: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub world: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub world1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub world2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub comparison: Option<String>,
    pub synthetic_text: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chosen_answer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub correct: Option<bool>,
}

/// Flattens a trace, plus the chosen option when an answer was predicted.
pub fn emit_trace(item: &Prepared, trace: &ReasoningTrace, prediction: Option<&AnswerPrediction>) -> TraceRecord {
    let mut rec = TraceRecord {
        id: trace.id.clone(),
        kind: trace.kind.name().into(),
        cause: trace.cause.text.clone(),
        effect: trace.effect.text.clone(),
        polarity: trace.polarity.symbol().into(),
        world: None,
        world1: None,
        world2: None,
        value: None,
        comparison: None,
        synthetic_text: trace.synthetic.text.clone(),
        chosen_answer: None,
        correct: None,
    };
    match &trace.detail {
        ChainDetail::Prediction { world, value, .. } => {
            rec.world = Some(world.text.clone());
            rec.value = Some(value.symbol().into());
        }
        ChainDetail::Comparison {
            world1,
            world2,
            comparison,
            ..
        } => {
            rec.world1 = Some(world1.text.clone());
            rec.world2 = Some(world2.text.clone());
            rec.comparison = Some(comparison.symbol().into());
        }
    }
    if let Some(p) = prediction {
        let inst = &item.example.instance;
        rec.chosen_answer = Some(inst.options[p.choice].clone());
        rec.correct = Some(p.choice == inst.answer);
    }
    rec
}
