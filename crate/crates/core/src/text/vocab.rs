use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::tokenize::tokenize;
use crate::error::{invalid, Result};

pub const BOS: u32 = 0;
pub const EOS: u32 = 1;
pub const PAD: u32 = 2;
pub const UNK: u32 = 3;

/// Reserved tokens in id order.
pub const RESERVED: [&str; 4] = ["<s>", "</s>", "<pad>", "<unk>"];

/// Dense token-to-id map. Ids `0..4` are the reserved tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocab {
    /// Every token seen at least `min_count` times gets an id, most frequent
    /// first, ties in lexicographic order.
    pub fn build<S: AsRef<str>>(corpus: &[S], min_count: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(invalid("cannot build a vocabulary from an empty corpus"));
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for text in corpus {
            for tok in tokenize(text.as_ref()) {
                *counts.entry(tok.text).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count.max(1))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_tokens(
            RESERVED
                .iter()
                .map(|s| s.to_string())
                .chain(ranked.into_iter().map(|(t, _)| t))
                .collect(),
        )
    }

    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED {
            return Err(invalid("vocabulary must start with <s>, </s>, <pad>, <unk>"));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(invalid(alloc::format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(Self { tokens, index })
    }

    /// Adds tokens that are not yet present, in the given order.
    pub fn extend<'a>(&mut self, extra: impl IntoIterator<Item = &'a str>) {
        for t in extra {
            if !self.index.contains_key(t) {
                self.index.insert(t.to_string(), self.tokens.len() as u32);
                self.tokens.push(t.to_string());
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_threshold() {
        let v = Vocab::build(&["a b", "a c"], 2).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.id("a"), 4);
        assert_eq!(v.id("b"), UNK);
        let full = Vocab::build(&["a b", "a c"], 1).unwrap();
        for t in ["a", "b", "c"] {
            assert!(full.contains(t));
        }
        assert_eq!(full, Vocab::build(&["a b", "a c"], 1).unwrap());
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let none: [&str; 0] = [];
        assert!(Vocab::build(&none, 1).is_err());
    }

    #[test]
    fn reserved_order_is_enforced() {
        let bad = ["</s>", "<s>", "<pad>", "<unk>"].map(String::from).to_vec();
        assert!(Vocab::from_tokens(bad).is_err());
        let dup = ["<s>", "</s>", "<pad>", "<unk>", "x", "x"].map(String::from).to_vec();
        assert!(Vocab::from_tokens(dup).is_err());
    }
}
