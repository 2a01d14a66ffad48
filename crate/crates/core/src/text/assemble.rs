use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tokenize::Token;
use super::vocab::{Vocab, BOS, EOS, PAD};

/// Fixed segment lengths of the joint input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lengths {
    /// Knowledge segment budget, including `<s>` and its closing `</s>`.
    pub n_max: usize,
    /// Statement segment budget, including the final `</s>`.
    pub m_max: usize,
}

impl Default for Lengths {
    fn default() -> Self {
        Self { n_max: 64, m_max: 64 }
    }
}

impl Lengths {
    pub fn knowledge_capacity(&self) -> usize {
        self.n_max.saturating_sub(2)
    }

    pub fn statement_capacity(&self) -> usize {
        self.m_max.saturating_sub(1)
    }

    /// Padded length of the joint sequence.
    pub fn total(&self) -> usize {
        self.n_max + self.m_max + 1
    }
}

/// `<s> b_1..b_n </s> </s> s_1..s_m </s>` followed by padding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assembled {
    pub ids: Vec<u32>,
    /// Number of non-padding positions; they always form a prefix.
    pub len: usize,
    pub n: usize,
    pub m: usize,
    pub lengths: Lengths,
    pub knowledge_mask: Vec<bool>,
    pub statement_mask: Vec<bool>,
    pub truncated: bool,
}

impl Assembled {
    /// Position of knowledge token `j` in `ids`.
    pub fn knowledge_pos(&self, j: usize) -> usize {
        1 + j
    }

    /// Position of statement token `i` in `ids`.
    pub fn statement_pos(&self, i: usize) -> usize {
        self.n + 3 + i
    }

    /// Unpadded prefix of `ids`.
    pub fn real_ids(&self) -> &[u32] {
        &self.ids[..self.len]
    }
}

/// Joins two token sequences in the encoder layout. Over-long segments lose
/// tokens from the right and set `truncated`.
pub fn assemble_ids(knowledge: &[u32], statement: &[u32], lengths: Lengths) -> Assembled {
    let n = knowledge.len().min(lengths.knowledge_capacity());
    let m = statement.len().min(lengths.statement_capacity());
    let truncated = n < knowledge.len() || m < statement.len();
    let mut ids = Vec::with_capacity(lengths.total());
    ids.push(BOS);
    ids.extend_from_slice(&knowledge[..n]);
    ids.push(EOS);
    ids.push(EOS);
    ids.extend_from_slice(&statement[..m]);
    ids.push(EOS);
    let len = ids.len();
    ids.resize(lengths.total(), PAD);
    let mut knowledge_mask = vec![false; lengths.n_max];
    knowledge_mask[..n].iter_mut().for_each(|b| *b = true);
    let mut statement_mask = vec![false; lengths.m_max];
    statement_mask[..m].iter_mut().for_each(|b| *b = true);
    Assembled {
        ids,
        len,
        n,
        m,
        lengths,
        knowledge_mask,
        statement_mask,
        truncated,
    }
}

pub fn token_ids(tokens: &[Token], vocab: &Vocab) -> Vec<u32> {
    tokens.iter().map(|t| vocab.id(&t.text)).collect()
}

pub fn assemble_pair(
    knowledge: &[Token],
    statement: &[Token],
    vocab: &Vocab,
    lengths: Lengths,
) -> Assembled {
    assemble_ids(&token_ids(knowledge, vocab), &token_ids(statement, vocab), lengths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize::tokenize;
    use crate::text::vocab::UNK;

    #[test]
    fn layout_matches_separator_format() {
        let vocab = Vocab::build(&["b1 s1"], 1).unwrap();
        let a = assemble_pair(&tokenize("b1"), &tokenize("s1"), &vocab, Lengths { n_max: 4, m_max: 4 });
        let (b1, s1) = (vocab.id("b1"), vocab.id("s1"));
        assert_eq!(a.ids, vec![BOS, b1, EOS, EOS, s1, EOS, PAD, PAD, PAD]);
        assert_eq!(a.statement_mask, vec![true, false, false, false]);
        assert_eq!(a.knowledge_mask, vec![true, false, false, false]);
        assert_eq!(a.ids[a.statement_pos(0)], s1);
        assert_eq!(a.ids[a.knowledge_pos(0)], b1);
        assert!(!a.truncated);
        assert_ne!(b1, UNK);
    }

    #[test]
    fn truncates_from_the_right() {
        let a = assemble_ids(&[10, 11, 12, 13], &[20, 21, 22], Lengths { n_max: 4, m_max: 3 });
        assert!(a.truncated);
        assert_eq!((a.n, a.m), (2, 2));
        assert_eq!(a.real_ids(), &[BOS, 10, 11, EOS, EOS, 20, 21, EOS]);
        assert_eq!(a.ids.len(), 8);
    }
}
