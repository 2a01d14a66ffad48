use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::kinds::{HeadKind, Polarity, ReasoningType, ValueDir, WorldOrder};
use crate::text::{assemble_pair, tokenize, Assembled, Lengths, Token, Vocab};

/// Raw annotation record attached to a dataset item: the knowledge-side and
/// question-side key/value maps, kept as strings.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub para: Option<BTreeMap<String, String>>,
    pub question: Option<BTreeMap<String, String>>,
}

/// One two-option question over a knowledge sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub knowledge: String,
    pub question: String,
    pub options: [String; 2],
    pub answer: usize,
    pub annotation: Option<Annotation>,
}

impl Instance {
    /// Question followed by both options; the statement the reasoning model
    /// reads.
    pub fn statement(&self) -> String {
        format!(
            "{} (A) {} (B) {}",
            self.question, self.options[0], self.options[1]
        )
    }
}

/// Supervision for one instance. `None` means the label is unavailable and
/// the corresponding loss term is masked out.
///
/// Span labels are token positions inside the knowledge or statement segment.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world1: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world2: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<ValueDir>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<WorldOrder>,
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<ReasoningType>,
}

impl Labels {
    pub fn span(&self, head: HeadKind) -> Option<&[usize]> {
        match head {
            HeadKind::Cause => self.cause.as_deref(),
            HeadKind::Effect => self.effect.as_deref(),
            HeadKind::World => self.world.as_deref(),
            HeadKind::World1 => self.world1.as_deref(),
            HeadKind::World2 => self.world2.as_deref(),
            _ => None,
        }
    }

    pub fn span_mut(&mut self, head: HeadKind) -> Option<&mut Option<Vec<usize>>> {
        match head {
            HeadKind::Cause => Some(&mut self.cause),
            HeadKind::Effect => Some(&mut self.effect),
            HeadKind::World => Some(&mut self.world),
            HeadKind::World1 => Some(&mut self.world1),
            HeadKind::World2 => Some(&mut self.world2),
            _ => None,
        }
    }

    /// Gold class index of a two-way head.
    pub fn class(&self, head: HeadKind) -> Option<usize> {
        match head {
            HeadKind::Polarity => self.polarity.map(Polarity::class),
            HeadKind::Value => self.value.map(ValueDir::class),
            HeadKind::Comparison => self.comparison.map(WorldOrder::class),
            HeadKind::Type => self.kind.map(ReasoningType::class),
            _ => None,
        }
    }

    /// Availability flag of a head's label.
    pub fn gamma(&self, head: HeadKind) -> bool {
        if head.is_span() {
            self.span(head).is_some_and(|s| !s.is_empty())
        } else {
            self.class(head).is_some()
        }
    }

    /// Drops every label; used for masking checks.
    pub fn clear(&mut self, head: HeadKind) {
        match head {
            HeadKind::Polarity => self.polarity = None,
            HeadKind::Value => self.value = None,
            HeadKind::Comparison => self.comparison = None,
            HeadKind::Type => self.kind = None,
            span => *self.span_mut(span).unwrap() = None,
        }
    }
}

/// A labelled dataset item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub instance: Instance,
    pub labels: Labels,
}

/// An example tokenized and assembled for a given vocabulary and lengths.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub example: Example,
    pub statement: String,
    pub knowledge_tokens: Vec<Token>,
    pub statement_tokens: Vec<Token>,
    pub input: Assembled,
    /// Labels restricted to positions that survived truncation.
    pub labels: Labels,
}

impl Prepared {
    pub fn new(example: &Example, vocab: &Vocab, lengths: Lengths) -> Self {
        let statement = example.instance.statement();
        let knowledge_tokens = tokenize(&example.instance.knowledge);
        let statement_tokens = tokenize(&statement);
        let input = assemble_pair(&knowledge_tokens, &statement_tokens, vocab, lengths);
        let mut labels = example.labels.clone();
        for head in HeadKind::SPANS {
            let limit = if matches!(head, HeadKind::Cause | HeadKind::Effect) {
                input.n
            } else {
                input.m
            };
            let slot = labels.span_mut(head).unwrap();
            if let Some(pos) = slot {
                pos.retain(|&p| p < limit);
                if pos.is_empty() {
                    *slot = None;
                }
            }
        }
        Self {
            example: example.clone(),
            statement,
            knowledge_tokens,
            statement_tokens,
            input,
            labels,
        }
    }

    pub fn id(&self) -> &str {
        &self.example.instance.id
    }
}

/// Words of the deduction templates and the answer-input separator.
pub const TEMPLATE_WORDS: [&str; 7] = ["will", "cause", "more", "less", "than", ".", ";"];

/// Vocabulary over the knowledge and statement texts of `examples`, plus the
/// template words.
pub fn corpus_vocab(examples: &[Example], min_count: usize) -> crate::Result<Vocab> {
    let texts: Vec<String> = examples
        .iter()
        .flat_map(|e| [e.instance.knowledge.clone(), e.instance.statement()])
        .collect();
    let mut vocab = Vocab::build(&texts, min_count)?;
    vocab.extend(TEMPLATE_WORDS);
    Ok(vocab)
}
