use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::heads::{argmax_first, Segment};
use crate::text::{detokenize, Token};

/// Inclusive token range inside one segment, with the covered source text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub segment: Segment,
    pub text: String,
}

impl Span {
    /// Builds a span over `tokens` and copies the source substring it covers.
    pub fn over(source: &str, tokens: &[Token], start: usize, end: usize, segment: Segment) -> Result<Self> {
        if start > end || end >= tokens.len() {
            return Err(invalid("span outside the segment"));
        }
        Ok(Self {
            start,
            end,
            segment,
            text: detokenize(source, tokens, start, end).into(),
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, pos: usize) -> bool {
        (self.start..=self.end).contains(&pos)
    }
}

/// Peak of `p` grown left and right while each next neighbor exceeds `tau`.
/// Returns the inclusive `(start, end)` range.
pub fn attention_to_span(p: &[f64], tau: f64) -> Result<(usize, usize)> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid("threshold must lie in (0, 1)"));
    }
    if p.iter().all(|x| *x == 0.0) {
        return Err(invalid("attention vector is all zero"));
    }
    let peak = argmax_first(p);
    let mut start = peak;
    while start > 0 && p[start - 1] > tau {
        start -= 1;
    }
    let mut end = peak;
    while end + 1 < p.len() && p[end + 1] > tau {
        end += 1;
    }
    Ok((start, end))
}
