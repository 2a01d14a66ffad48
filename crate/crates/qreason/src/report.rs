use std::fmt::Write as _;

use qreason_core::eval::{Cell, ModuleReport, QaReport};
use qreason_core::HeadKind;
use serde::{Deserialize, Serialize};

/// Row layout of the module table: group label and head.
const ROWS: [(&str, HeadKind); 9] = [
    ("Find Cause and Effect", HeadKind::Cause),
    ("", HeadKind::Effect),
    ("Polarity Check", HeadKind::Polarity),
    ("Find World", HeadKind::World),
    ("Value Prediction", HeadKind::Value),
    ("Find Worlds", HeadKind::World1),
    ("", HeadKind::World2),
    ("World Comparison", HeadKind::Comparison),
    ("Reasoning Type Classification", HeadKind::Type),
];

/// Published module scores (percent) of the full-size system on QuaRTz
/// test, as (F1, fuzzy F1, accuracy).
pub const REFERENCE: [(HeadKind, Option<f64>, Option<f64>, Option<f64>); 9] = [
    (HeadKind::Cause, Some(72.6), Some(82.3), None),
    (HeadKind::Effect, Some(67.0), Some(78.4), None),
    (HeadKind::Polarity, None, None, Some(88.8)),
    (HeadKind::World, Some(76.4), Some(82.5), None),
    (HeadKind::Value, None, None, Some(91.5)),
    (HeadKind::World1, Some(77.3), Some(83.4), None),
    (HeadKind::World2, Some(74.9), Some(80.6), None),
    (HeadKind::Comparison, None, None, Some(84.6)),
    (HeadKind::Type, None, None, Some(88.0)),
];

pub const REFERENCE_QA: f64 = 89.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tau: f64,
    pub modules: ModuleReport,
    pub qa: Option<QaReport>,
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", 100.0 * x))
}

fn raw(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Aligned plain-text module table with the reference row set in the
    /// footer.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let line = "-".repeat(82);
        let _ = writeln!(
            s,
            "{:<30} {:<11} {:>8} {:>9} {:>9} {:>8}",
            "Module", "Head", "F1", "Fuzzy F1", "Accuracy", "n"
        );
        let _ = writeln!(s, "{line}");
        for (group, head) in ROWS {
            let cell = self.modules.get(head).copied().unwrap_or(Cell::default());
            let _ = writeln!(
                s,
                "{:<30} {:<11} {:>8} {:>9} {:>9} {:>8}",
                group,
                head.name(),
                pct(cell.f1),
                pct(cell.fuzzy_f1),
                pct(cell.accuracy),
                cell.count
            );
        }
        let _ = writeln!(s, "{line}");
        let _ = writeln!(s, "threshold {:.2}; mean module score {:.1}", self.tau, 100.0 * self.modules.mean());
        let _ = writeln!(s, "reference, full-size encoder on QuaRTz test (F1/fuzzy F1/accuracy):");
        let mut row = String::new();
        for (head, f1, fuzzy, acc) in REFERENCE {
            if !row.is_empty() {
                row.push_str("; ");
            }
            match acc {
                Some(a) => {
                    let _ = write!(row, "{} {}", head.name(), raw(Some(a)));
                }
                None => {
                    let _ = write!(row, "{} {}/{}", head.name(), raw(f1), raw(fuzzy));
                }
            }
        }
        let _ = writeln!(s, "  {row}; QA {REFERENCE_QA:.1}");
        s
    }

    pub fn accuracy_line(&self) -> Option<String> {
        self.qa.map(|q| {
            format!(
                "QA accuracy: {:.4} ({}/{}, failures {}, ties {})",
                q.accuracy, q.correct, q.total, q.failures, q.ties
            )
        })
    }
}
