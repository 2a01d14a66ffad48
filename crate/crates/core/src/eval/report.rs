use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::{fuzzy_f1, position_f1};
use crate::data::Prepared;
use crate::deduction::{attention_to_span, HeadReadout, Reasoner};
use crate::error::Result;
use crate::heads::{AttnVec, BinaryDist};
use crate::kinds::HeadKind;

/// Metrics of one head. Span heads fill `f1`/`fuzzy_f1`, two-way heads fill
/// `accuracy`. `count` is the number of instances with an available label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fuzzy_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy: Option<f64>,
    pub count: usize,
}

impl Cell {
    /// The headline number of the cell: F1 for spans, accuracy otherwise.
    pub fn main(&self) -> Option<f64> {
        self.f1.or(self.accuracy)
    }
}

/// Per-head evaluation. Heads with no available labels have no cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModuleReport {
    pub cells: BTreeMap<HeadKind, Cell>,
}

impl ModuleReport {
    pub fn get(&self, head: HeadKind) -> Option<&Cell> {
        self.cells.get(&head)
    }

    /// Mean of the headline numbers over present cells.
    pub fn mean(&self) -> f64 {
        let v: Vec<f64> = self.cells.values().filter_map(Cell::main).collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }

    /// Mean span F1 over present span cells.
    pub fn mean_span_f1(&self) -> f64 {
        let v: Vec<f64> = self.cells.values().filter_map(|c| c.f1).collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Acc {
    sum: f64,
    fuzzy: f64,
    n: usize,
}

fn attn(r: &HeadReadout, h: HeadKind) -> Option<&AttnVec> {
    match h {
        HeadKind::Cause => Some(&r.cause),
        HeadKind::Effect => Some(&r.effect),
        HeadKind::World => r.world.as_ref(),
        HeadKind::World1 => r.world1.as_ref(),
        HeadKind::World2 => r.world2.as_ref(),
        _ => None,
    }
}

fn binary(r: &HeadReadout, h: HeadKind) -> Option<BinaryDist> {
    match h {
        HeadKind::Polarity => Some(r.polarity),
        HeadKind::Value => r.value,
        HeadKind::Comparison => r.comparison,
        HeadKind::Type => Some(r.kind),
        _ => None,
    }
}

/// Computes every head's output once per instance.
pub fn readouts<R: Reasoner + ?Sized>(model: &R, items: &[Prepared]) -> Result<Vec<HeadReadout>> {
    items.iter().map(|it| model.readout(it, None)).collect()
}

/// Scores precomputed readouts at threshold `tau`.
pub fn score_readouts(items: &[Prepared], outs: &[HeadReadout], tau: f64) -> Result<ModuleReport> {
    let mut acc: BTreeMap<HeadKind, Acc> = BTreeMap::new();
    for (item, r) in items.iter().zip(outs) {
        for h in HeadKind::ALL {
            if !item.labels.gamma(h) {
                continue;
            }
            let a = acc.entry(h).or_default();
            if h.is_span() {
                let gold = item.labels.span(h).unwrap();
                let f = match attn(r, h) {
                    Some(p) => {
                        let (s, e) = attention_to_span(&p.probs, tau)?;
                        let pred: Vec<usize> = (s..=e).collect();
                        position_f1(&pred, gold)
                    }
                    None => 0.0,
                };
                a.sum += f;
                a.fuzzy += fuzzy_f1(f);
            } else {
                let gold = item.labels.class(h).unwrap();
                let hit = binary(r, h).is_some_and(|d| usize::from(!d.first_wins()) == gold);
                a.sum += f64::from(u8::from(hit));
            }
            a.n += 1;
        }
    }
    let cells = acc
        .into_iter()
        .map(|(h, a)| {
            let mean = a.sum / a.n as f64;
            let cell = if h.is_span() {
                Cell {
                    f1: Some(mean),
                    fuzzy_f1: Some(a.fuzzy / a.n as f64),
                    accuracy: None,
                    count: a.n,
                }
            } else {
                Cell {
                    f1: None,
                    fuzzy_f1: None,
                    accuracy: Some(mean),
                    count: a.n,
                }
            };
            (h, cell)
        })
        .collect();
    Ok(ModuleReport { cells })
}

/// Per-head metrics against the gold labels of `items`.
pub fn module_eval<R: Reasoner + ?Sized>(model: &R, items: &[Prepared], tau: f64) -> Result<ModuleReport> {
    let outs = readouts(model, items)?;
    score_readouts(items, &outs, tau)
}

/// Threshold grid searched when tuning.
pub const TAU_GRID: [f64; 10] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50];

/// Picks the grid threshold with the best mean span F1 on `items`; ties go
/// to the smaller threshold.
pub fn tune_threshold<R: Reasoner + ?Sized>(model: &R, items: &[Prepared]) -> Result<(f64, f64)> {
    let outs = readouts(model, items)?;
    let mut best = (TAU_GRID[0], f64::NEG_INFINITY);
    for tau in TAU_GRID {
        let f = score_readouts(items, &outs, tau)?.mean_span_f1();
        if f > best.1 {
            best = (tau, f);
        }
    }
    Ok(best)
}
