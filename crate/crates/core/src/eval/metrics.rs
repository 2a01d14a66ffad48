use alloc::collections::BTreeSet;

use crate::deduction::Span;
use crate::error::{invalid, Result};

/// Token-position F1 between two position sets.
pub fn position_f1(pred: &[usize], gold: &[usize]) -> f64 {
    let p: BTreeSet<usize> = pred.iter().copied().collect();
    let g: BTreeSet<usize> = gold.iter().copied().collect();
    let overlap = p.intersection(&g).count();
    if overlap == 0 {
        return 0.0;
    }
    // Harmonic mean of precision and recall, reduced to one division.
    (2 * overlap) as f64 / (p.len() + g.len()) as f64
}

/// F1 over the token positions of two spans of the same segment.
pub fn token_f1(pred: &Span, gold: &Span) -> Result<f64> {
    if pred.segment != gold.segment {
        return Err(invalid("spans come from different segments"));
    }
    let p: alloc::vec::Vec<usize> = (pred.start..=pred.end).collect();
    let g: alloc::vec::Vec<usize> = (gold.start..=gold.end).collect();
    Ok(position_f1(&p, &g))
}

/// 1 for any overlap at all, else 0.
pub fn fuzzy_f1(f1: f64) -> f64 {
    if f1 > 0.0 {
        1.0
    } else {
        0.0
    }
}
