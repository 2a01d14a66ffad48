use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};

/// Every supervised module output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Cause,
    Effect,
    World,
    World1,
    World2,
    Polarity,
    Value,
    Comparison,
    Type,
}

impl HeadKind {
    pub const ALL: [HeadKind; 9] = [
        HeadKind::Cause,
        HeadKind::Effect,
        HeadKind::World,
        HeadKind::World1,
        HeadKind::World2,
        HeadKind::Polarity,
        HeadKind::Value,
        HeadKind::Comparison,
        HeadKind::Type,
    ];

    pub const SPANS: [HeadKind; 5] = [
        HeadKind::Cause,
        HeadKind::Effect,
        HeadKind::World,
        HeadKind::World1,
        HeadKind::World2,
    ];

    pub const BINARY: [HeadKind; 4] = [
        HeadKind::Polarity,
        HeadKind::Value,
        HeadKind::Comparison,
        HeadKind::Type,
    ];

    pub fn is_span(self) -> bool {
        Self::SPANS.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::Cause => "cause",
            HeadKind::Effect => "effect",
            HeadKind::World => "world",
            HeadKind::World1 => "world1",
            HeadKind::World2 => "world2",
            HeadKind::Polarity => "polarity",
            HeadKind::Value => "value",
            HeadKind::Comparison => "comparison",
            HeadKind::Type => "type",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|h| *h == self).unwrap()
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HeadKind::ALL
            .into_iter()
            .find(|h| h.name() == s.trim())
            .ok_or_else(|| invalid(alloc::format!("unknown head `{s}`")))
    }
}

/// Sign of the correlation between cause and effect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

/// Whether the world increases or decreases the cause property.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueDir {
    #[serde(rename = "up")]
    Up,
    #[serde(rename = "down")]
    Down,
}

/// Ordering of world 1 against world 2 on the cause property.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorldOrder {
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "<")]
    Less,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReasoningType {
    Prediction,
    Comparison,
}

/// Deduced change of the effect property.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    More,
    Less,
}

macro_rules! binary_label {
    ($t:ty, $first:path, $second:path) => {
        impl $t {
            /// Class index inside a two-way distribution.
            pub fn class(self) -> usize {
                match self {
                    $first => 0,
                    $second => 1,
                }
            }

            pub fn from_class(c: usize) -> Self {
                if c == 0 {
                    $first
                } else {
                    $second
                }
            }

            pub fn flip(self) -> Self {
                Self::from_class(1 - self.class())
            }
        }
    };
}

binary_label!(Polarity, Polarity::Positive, Polarity::Negative);
binary_label!(ValueDir, ValueDir::Up, ValueDir::Down);
binary_label!(WorldOrder, WorldOrder::Greater, WorldOrder::Less);
binary_label!(ReasoningType, ReasoningType::Prediction, ReasoningType::Comparison);
binary_label!(Direction, Direction::More, Direction::Less);

impl Polarity {
    pub fn symbol(self) -> &'static str {
        match self {
            Polarity::Positive => "+",
            Polarity::Negative => "-",
        }
    }
}

impl ValueDir {
    pub fn symbol(self) -> &'static str {
        match self {
            ValueDir::Up => "↑",
            ValueDir::Down => "↓",
        }
    }
}

impl WorldOrder {
    pub fn symbol(self) -> &'static str {
        match self {
            WorldOrder::Greater => ">",
            WorldOrder::Less => "<",
        }
    }
}

impl Direction {
    pub fn word(self) -> &'static str {
        match self {
            Direction::More => "more",
            Direction::Less => "less",
        }
    }
}

impl ReasoningType {
    pub fn name(self) -> &'static str {
        match self {
            ReasoningType::Prediction => "Prediction",
            ReasoningType::Comparison => "Comparison",
        }
    }
}
