//! Tokenization, vocabulary, input assembly and the transformer encoder.

mod assemble;
mod encoder;
mod tokenize;
mod vocab;

pub use assemble::{assemble_ids, assemble_pair, token_ids, Assembled, Lengths};
pub use encoder::{EncodedPair, Encoder, EncoderConfig};
pub use tokenize::{detokenize, tokenize, Token};
pub use vocab::{Vocab, BOS, EOS, PAD, RESERVED, UNK};
