use alloc::vec;
use alloc::vec::Vec;

use crate::data::Prepared;
use crate::deduction::{HeadReadout, Reasoner};
use crate::error::Result;
use crate::heads::{AttnVec, BinaryDist, Segment};
use crate::kinds::{HeadKind, ReasoningType};

/// Emits the gold labels as distributions: uniform mass over gold span
/// positions, one-hot classes. Heads without a label get a uniform vector.
#[derive(Clone, Copy, Debug, Default)]
pub struct GoldOracle;

fn spread(mask: &[bool], gold: Option<&[usize]>) -> Vec<f64> {
    let mut p = vec![0.0; mask.len()];
    match gold {
        Some(g) if !g.is_empty() => {
            for &i in g {
                p[i] = 1.0 / g.len() as f64;
            }
        }
        _ => {
            let n = mask.iter().filter(|m| **m).count().max(1);
            for (x, m) in p.iter_mut().zip(mask) {
                if *m {
                    *x = 1.0 / n as f64;
                }
            }
        }
    }
    p
}

fn one_hot(class: Option<usize>) -> BinaryDist {
    match class {
        Some(0) => BinaryDist([1.0, 0.0]),
        Some(_) => BinaryDist([0.0, 1.0]),
        None => BinaryDist([0.5, 0.5]),
    }
}

impl Reasoner for GoldOracle {
    fn readout(&self, item: &Prepared, chain: Option<ReasoningType>) -> Result<HeadReadout> {
        let l = &item.labels;
        let k = |h| AttnVec {
            probs: spread(&item.input.knowledge_mask, l.span(h)),
            segment: Segment::Knowledge,
        };
        let s = |h| AttnVec {
            probs: spread(&item.input.statement_mask, l.span(h)),
            segment: Segment::Statement,
        };
        let pred = chain != Some(ReasoningType::Comparison);
        let comp = chain != Some(ReasoningType::Prediction);
        Ok(HeadReadout {
            kind: one_hot(l.class(HeadKind::Type)),
            cause: k(HeadKind::Cause),
            effect: k(HeadKind::Effect),
            polarity: one_hot(l.class(HeadKind::Polarity)),
            world: pred.then(|| s(HeadKind::World)),
            value: pred.then(|| one_hot(l.class(HeadKind::Value))),
            world1: comp.then(|| s(HeadKind::World1)),
            world2: comp.then(|| s(HeadKind::World2)),
            comparison: comp.then(|| one_hot(l.class(HeadKind::Comparison))),
        })
    }
}
