use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kinds::{Direction, Polarity, ReasoningType, ValueDir, WorldOrder};

/// Effect direction for the single world of a prediction question.
pub fn deduce_prediction(polarity: Polarity, value: ValueDir) -> Direction {
    match (polarity, value) {
        (Polarity::Positive, ValueDir::Up) | (Polarity::Negative, ValueDir::Down) => Direction::More,
        _ => Direction::Less,
    }
}

/// Effect direction of world 1 relative to world 2.
pub fn deduce_comparison(polarity: Polarity, order: WorldOrder) -> Direction {
    match (polarity, order) {
        (Polarity::Positive, WorldOrder::Greater) | (Polarity::Negative, WorldOrder::Less) => Direction::More,
        _ => Direction::Less,
    }
}

/// Slot values of a deduction sentence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "chain", rename_all = "lowercase")]
pub enum Slots {
    Prediction {
        world: String,
        effect: String,
        direction: Direction,
    },
    Comparison {
        world1: String,
        world2: String,
        effect: String,
        direction: Direction,
    },
}

impl Slots {
    pub fn chain(&self) -> ReasoningType {
        match self {
            Slots::Prediction { .. } => ReasoningType::Prediction,
            Slots::Comparison { .. } => ReasoningType::Comparison,
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Slots::Prediction { direction, .. } | Slots::Comparison { direction, .. } => *direction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticText {
    pub text: String,
    pub slots: Slots,
}

fn filled(name: &str, s: &str) -> Result<()> {
    if s.trim().is_empty() {
        Err(invalid(format!("empty `{name}` slot")))
    } else {
        Ok(())
    }
}

/// Fills the deduction template of the chain named by `slots`.
pub fn synthesize_text(slots: Slots) -> Result<SyntheticText> {
    let text = match &slots {
        Slots::Prediction { world, effect, direction } => {
            filled("world", world)?;
            filled("effect", effect)?;
            format!("{world} will cause {} {effect}.", direction.word())
        }
        Slots::Comparison {
            world1,
            world2,
            effect,
            direction,
        } => {
            filled("world1", world1)?;
            filled("world2", world2)?;
            filled("effect", effect)?;
            format!("{world1} will cause {} {effect} than {world2}.", direction.word())
        }
    };
    Ok(SyntheticText { text, slots })
}
