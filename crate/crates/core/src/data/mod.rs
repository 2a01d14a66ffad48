//! Instances, labels, supervision derived from annotations, and the seeded
//! synthetic corpus.

mod instance;
mod lexicon;
mod supervision;
mod synth;

pub use instance::{corpus_vocab, Annotation, Example, Instance, Labels, Prepared, TEMPLATE_WORDS};
pub use lexicon::{builtin_lexicon, PropertyPair};
pub use supervision::{align, derive_supervision, label_instance, parse_sign, AlignStats, Derived};
pub use synth::{generate_synthetic_corpus, Corpus, GenConfig};
