//! Answer prediction: score each option against the deduction sentence.

use alloc::format;
use alloc::string::String;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Instance, Prepared};
use crate::deduction::{deduce_comparison, deduce_prediction, synthesize_text, Slots, Span, SyntheticText};
use crate::diff::{ParamId, ParamStore, Real, Tape, Var};
use crate::error::{invalid, shape, Result};
use crate::heads::Segment;
use crate::kinds::{HeadKind, ReasoningType};
use crate::text::{assemble_pair, tokenize, Assembled, Encoder, EncoderConfig, Lengths, Vocab};

/// What the answerer reads in front of the question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerContext {
    /// The deduction sentence of a reasoning trace.
    Synthetic,
    /// The raw knowledge sentence (plain-encoder baseline).
    Knowledge,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnswerConfig {
    pub encoder: EncoderConfig,
    /// `n_max` bounds the context text, `m_max` the question and option.
    pub lengths: Lengths,
    pub context: AnswerContext,
}

impl Default for AnswerConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            lengths: Lengths { n_max: 48, m_max: 64 },
            context: AnswerContext::Synthetic,
        }
    }
}

/// `<s> text </s> </s> question ; option </s>`, padded.
pub fn assemble_answer_input(
    text: &str,
    question: &str,
    option: &str,
    vocab: &Vocab,
    lengths: Lengths,
) -> Result<Assembled> {
    if question.trim().is_empty() || option.trim().is_empty() {
        return Err(invalid("question and option must be non-empty"));
    }
    let context = tokenize(text);
    let tail = tokenize(&format!("{question} ; {option}"));
    if context.is_empty() {
        return Err(invalid("empty context text"));
    }
    Ok(assemble_pair(&context, &tail, vocab, lengths))
}

/// Picks the higher-scoring option; ties go to option 0 and are flagged.
pub fn predict_answer(scores: [f64; 2]) -> (usize, bool) {
    if scores[1] > scores[0] {
        (1, false)
    } else {
        (0, scores[0] == scores[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerPrediction {
    pub choice: usize,
    pub scores: [f64; 2],
    pub tie: bool,
}

/// Anything that picks one of the two options.
pub trait AnswerPredictor {
    fn context(&self) -> AnswerContext;
    fn predict(&self, text: &str, instance: &Instance) -> Result<AnswerPrediction>;
}

/// Seeded coin flip per instance id.
#[derive(Clone, Copy, Debug)]
pub struct RandomAnswerer {
    pub seed: u64,
}

impl AnswerPredictor for RandomAnswerer {
    fn context(&self) -> AnswerContext {
        AnswerContext::Synthetic
    }

    fn predict(&self, _text: &str, instance: &Instance) -> Result<AnswerPrediction> {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.seed;
        for b in instance.id.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
        }
        let u: f64 = rand::Rng::random(&mut ChaCha8Rng::seed_from_u64(h));
        let scores = [u, 1.0 - u];
        let (choice, tie) = predict_answer(scores);
        Ok(AnswerPrediction { choice, scores, tie })
    }
}

/// Answer-prediction model: its own encoder and a linear score on the first
/// position, squashed to a probability.
#[derive(Clone, Debug)]
pub struct AnswerModel {
    pub config: AnswerConfig,
    pub vocab: Vocab,
    pub store: ParamStore<f32>,
    pub encoder: Encoder,
    pub w: ParamId,
    pub b: ParamId,
}

impl AnswerModel {
    pub fn init(config: AnswerConfig, vocab: Vocab, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let d = config.encoder.d_model;
        let encoder = Encoder::init(&mut store, "ans", config.encoder, vocab.len(), config.lengths.total(), &mut rng)?;
        let w = store.insert_uniform("ans.score.w", d, 1, d, &mut rng)?;
        let b = store.insert_uniform("ans.score.b", 1, 1, d, &mut rng)?;
        Ok(Self {
            config,
            vocab,
            store,
            encoder,
            w,
            b,
        })
    }

    pub fn from_parts(config: AnswerConfig, vocab: Vocab, store: ParamStore<f32>) -> Result<Self> {
        let d = config.encoder.d_model;
        let encoder = Encoder::bind(&store, "ans", config.encoder, vocab.len(), config.lengths.total())?;
        let find = |name: &str, dims: (usize, usize)| {
            let id = store
                .id(name)
                .ok_or_else(|| invalid(format!("missing parameter `{name}`")))?;
            if store.get(id).dims() != dims {
                return Err(shape(format!("parameter `{name}` should be {dims:?}")));
            }
            Ok(id)
        };
        let w = find("ans.score.w", (d, 1))?;
        let b = find("ans.score.b", (1, 1))?;
        Ok(Self {
            config,
            vocab,
            store,
            encoder,
            w,
            b,
        })
    }

    /// Probability (`1 x 1`) that the option in `input` is correct.
    pub fn score_on<T: Real>(
        tape: &mut Tape<'_, T>,
        encoder: &Encoder,
        w: ParamId,
        b: ParamId,
        input: &Assembled,
    ) -> Result<Var> {
        let h = encoder.forward(tape, input.real_ids())?;
        let first = tape.remap_rows(h, &[Some(0)])?;
        let w = tape.param(w);
        let b = tape.param(b);
        let s = tape.matmul(first, w)?;
        let s = tape.add_row(s, b)?;
        Ok(tape.sigmoid(s))
    }

    pub fn input(&self, text: &str, instance: &Instance, option: usize) -> Result<Assembled> {
        assemble_answer_input(
            text,
            &instance.question,
            &instance.options[option],
            &self.vocab,
            self.config.lengths,
        )
    }

    pub fn score_option(&self, input: &Assembled) -> Result<f64> {
        let mut tape = Tape::new(&self.store);
        let p = Self::score_on(&mut tape, &self.encoder, self.w, self.b, input)?;
        tape.check_finite()?;
        Ok(f64::from(tape.scalar(p)))
    }
}

impl AnswerPredictor for AnswerModel {
    fn context(&self) -> AnswerContext {
        self.config.context
    }

    fn predict(&self, text: &str, instance: &Instance) -> Result<AnswerPrediction> {
        let scores = [
            self.score_option(&self.input(text, instance, 0)?)?,
            self.score_option(&self.input(text, instance, 1)?)?,
        ];
        let (choice, tie) = predict_answer(scores);
        Ok(AnswerPrediction { choice, scores, tie })
    }
}

fn gold_span(item: &Prepared, head: HeadKind) -> Result<Span> {
    let pos = item
        .labels
        .span(head)
        .ok_or_else(|| invalid(format!("no gold `{head}` span")))?;
    let (src, toks, seg) = if matches!(head, HeadKind::Cause | HeadKind::Effect) {
        (item.example.instance.knowledge.as_str(), &item.knowledge_tokens, Segment::Knowledge)
    } else {
        (item.statement.as_str(), &item.statement_tokens, Segment::Statement)
    };
    Span::over(src, toks, pos[0], *pos.last().unwrap(), seg)
}

/// Deduction sentence built from the gold labels (teacher forcing).
pub fn gold_synthetic(item: &Prepared) -> Result<SyntheticText> {
    let l = &item.labels;
    let missing = || invalid("gold labels are incomplete for the chain");
    let polarity = l.polarity.ok_or_else(missing)?;
    let effect: String = gold_span(item, HeadKind::Effect)?.text;
    let slots = match l.kind.ok_or_else(missing)? {
        ReasoningType::Prediction => Slots::Prediction {
            world: gold_span(item, HeadKind::World)?.text,
            effect,
            direction: deduce_prediction(polarity, l.value.ok_or_else(missing)?),
        },
        ReasoningType::Comparison => Slots::Comparison {
            world1: gold_span(item, HeadKind::World1)?.text,
            world2: gold_span(item, HeadKind::World2)?.text,
            effect,
            direction: deduce_comparison(polarity, l.comparison.ok_or_else(missing)?),
        },
    };
    synthesize_text(slots)
}
