use alloc::string::String;
use alloc::vec::Vec;

/// A lowercased word or punctuation mark with the byte span it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Splits on whitespace, breaks every punctuation character out as its own
/// token and lowercases. Alphanumeric runs stay whole.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    let flush = |out: &mut Vec<Token>, start: usize, end: usize| {
        out.push(Token {
            text: text[start..end].to_lowercase(),
            start,
            end,
        });
    };
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if word_start.is_none() {
                word_start = Some(i);
            }
            continue;
        }
        if let Some(s) = word_start.take() {
            flush(&mut out, s, i);
        }
        if !ch.is_whitespace() {
            flush(&mut out, i, i + ch.len_utf8());
        }
    }
    if let Some(s) = word_start {
        flush(&mut out, s, text.len());
    }
    out
}

/// Original substring covered by tokens `first..=last`.
pub fn detokenize<'a>(text: &'a str, tokens: &[Token], first: usize, last: usize) -> &'a str {
    &text[tokens[first].start..tokens[last].end]
}
