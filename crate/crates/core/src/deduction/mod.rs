//! Span readout, the two decision rules, deduction sentences and the chain
//! runner.

mod chain;
mod rules;
mod span;

pub use chain::{run_chain, ChainDetail, HeadReadout, ReasoningTrace, Reasoner, DEFAULT_TAU};
pub use rules::{deduce_comparison, deduce_prediction, synthesize_text, Slots, SyntheticText};
pub use span::{attention_to_span, Span};
