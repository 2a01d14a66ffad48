//! Span metrics, per-module reports, end-to-end accuracy and trace records.

mod metrics;
mod oracle;
mod qa;
mod report;

pub use metrics::{fuzzy_f1, position_f1, token_f1};
pub use oracle::GoldOracle;
pub use qa::{emit_trace, qa_accuracy, run_pipeline, QaReport, TraceRecord};
pub use report::{module_eval, readouts, score_readouts, tune_threshold, Cell, ModuleReport, TAU_GRID};
