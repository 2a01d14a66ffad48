use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::instance::{Annotation, Example, Instance, Labels};
use super::lexicon::{builtin_lexicon, PropertyPair};
use crate::deduction::{deduce_comparison, deduce_prediction};
use crate::error::{invalid, Result};
use crate::kinds::{Direction, Polarity, ReasoningType, ValueDir, WorldOrder};
use crate::text::tokenize;

/// Synthetic corpus settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    /// Probability that an instance is a comparison question.
    pub comparison_ratio: f64,
    /// Property pairs held out for the dev split.
    pub dev_pairs: usize,
    /// Property pairs held out for the test split.
    pub test_pairs: usize,
    pub seed: u64,
    /// Replaces the built-in lexicon when set.
    pub lexicon: Option<Vec<PropertyPair>>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_dev: 400,
            n_test: 400,
            comparison_ratio: 400.0 / 2696.0,
            dev_pairs: 8,
            test_pairs: 8,
            seed: 7,
            lexicon: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
}

/// Knowledge templates: positive wording, negative wording, and the
/// annotated direction signs of cause and (positive) effect.
const KNOWLEDGE: [(&str, &str, &str, &str); 12] = [
    ("the greater the {C}, the greater the {E}.", "the greater the {C}, the smaller the {E}.", "MORE", "MORE"),
    ("the higher the {C}, the higher the {E}.", "the higher the {C}, the lower the {E}.", "MORE", "MORE"),
    ("the {E} of {aN} increases with its {C}.", "the {E} of {aN} decreases with its {C}.", "MORE", "MORE"),
    ("as {C} increases, {E} increases.", "as {C} increases, {E} decreases.", "MORE", "MORE"),
    ("increasing the {C} of {aN} raises its {E}.", "increasing the {C} of {aN} lowers its {E}.", "MORE", "MORE"),
    ("{aN} with more {C} has more {E}.", "{aN} with more {C} has less {E}.", "MORE", "MORE"),
    ("{E} is directly proportional to {C}.", "{E} is inversely proportional to {C}.", "MORE", "MORE"),
    ("when the {C} goes down, the {E} goes down too.", "when the {C} goes down, the {E} goes up.", "LESS", "LESS"),
    ("lower {C} leads to lower {E}.", "lower {C} leads to higher {E}.", "LESS", "LESS"),
    ("more {C} means more {E} for {aN}.", "more {C} means less {E} for {aN}.", "MORE", "MORE"),
    ("if the {C} of {aN} is reduced, its {E} drops.", "if the {C} of {aN} is reduced, its {E} rises.", "LESS", "LESS"),
    ("{E} goes up when {C} rises.", "{E} goes down when {C} rises.", "MORE", "MORE"),
];

const CLAUSE_UP: [&str; 4] = ["{c} increases", "{c} goes up", "{c} rises", "{c} is increased"];
const CLAUSE_DOWN: [&str; 4] = ["{c} decreases", "{c} goes down", "{c} falls", "{c} is reduced"];
const NP_UP: [&str; 3] = ["more {c}", "a higher {c}", "a greater {c}"];
const NP_DOWN: [&str; 3] = ["less {c}", "a lower {c}", "a smaller {c}"];

const PREDICT_CLAUSE: [&str; 5] = [
    "as the {W}, what happens to the {E_} of {aN}?",
    "if the {W}, the {E_} will",
    "{Name} noticed that the {W}. what will happen to the {E_}?",
    "when the {W}, the {E_} of the {N} should",
    "suppose the {W} in {aN}. its {E_} would",
];
const PREDICT_NP: [&str; 2] = ["{aN} that gets {W} will see its {E_}", "with {W}, the {E_} of {aN} will"];
const PREDICT_OPTIONS: [(&str, &str); 5] = [
    ("increase", "decrease"),
    ("go up", "go down"),
    ("rise", "fall"),
    ("become greater", "become smaller"),
    ("get higher", "get lower"),
];

const MODIFIERS: [(&str, &str); 5] = [
    ("high", "low"),
    ("more", "less"),
    ("a lot of", "little"),
    ("greater", "lesser"),
    ("large", "small"),
];

/// Comparison questions: template, whether the subject is world 1, and
/// whether the options name the effect.
const COMPARE: [(&str, bool, bool); 5] = [
    ("compared to {aW1}, would {aW2} have", false, true),
    ("would {aW1} have more or less {E_} than {aW2}?", true, false),
    ("{aW1} is compared with {aW2}. the first one will show", true, true),
    ("{Name} studies {aW1} and then {aW2}. the second one has", false, true),
    ("relative to {aW1}, {aW2} produces", false, true),
];
const COMPARE_OPTIONS: [(&str, &str); 2] = [("more", "less"), ("higher", "lower")];

const NAMES: [&str; 8] = ["John", "Mia", "Omar", "Lena", "Ravi", "Sofia", "Ken", "Ada"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Cause,
    Effect,
    World,
    World1,
    World2,
}

#[derive(Default)]
struct Builder {
    text: String,
    marks: Vec<(Slot, usize, usize)>,
}

#[derive(Default)]
struct Vars<'a> {
    cause: &'a str,
    effect: &'a str,
    entity: &'a str,
    world: String,
    world1: String,
    world2: String,
    name: &'a str,
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

impl Builder {
    fn push(&mut self, s: &str) {
        self.text.push_str(s);
    }

    fn mark(&mut self, slot: Slot, s: &str) {
        let start = self.text.len();
        self.text.push_str(s);
        self.marks.push((slot, start, self.text.len()));
    }

    fn fill(&mut self, tpl: &str, v: &Vars<'_>) {
        let mut rest = tpl;
        while let Some(open) = rest.find('{') {
            self.push(&rest[..open]);
            let close = open + rest[open..].find('}').expect("unclosed placeholder");
            match &rest[open + 1..close] {
                "C" => self.mark(Slot::Cause, v.cause),
                "E" => self.mark(Slot::Effect, v.effect),
                "E_" => self.push(v.effect),
                "c" => self.push(v.cause),
                "N" => self.push(v.entity),
                "aN" => self.push(&format!("{} {}", article(v.entity), v.entity)),
                "W" => self.mark(Slot::World, &v.world),
                "aW1" => {
                    self.push(article(&v.world1));
                    self.push(" ");
                    self.mark(Slot::World1, &v.world1);
                }
                "aW2" => {
                    self.push(article(&v.world2));
                    self.push(" ");
                    self.mark(Slot::World2, &v.world2);
                }
                "Name" => self.push(v.name),
                other => panic!("unknown placeholder {other}"),
            }
            rest = &rest[close + 1..];
        }
        self.push(rest);
    }

    /// Upper-cases the first letter of each sentence. Byte offsets are
    /// unchanged since only ASCII letters are touched.
    fn finish(mut self) -> Self {
        let mut up = true;
        let mut out = String::with_capacity(self.text.len());
        for ch in self.text.chars() {
            if up && ch.is_ascii_lowercase() {
                out.push(ch.to_ascii_uppercase());
                up = false;
            } else {
                if !ch.is_whitespace() {
                    up = false;
                }
                out.push(ch);
            }
            if matches!(ch, '.' | '?') {
                up = true;
            }
        }
        self.text = out;
        self
    }

    fn positions(&self, slot: Slot) -> Option<Vec<usize>> {
        let &(_, a, b) = self.marks.iter().find(|m| m.0 == slot)?;
        let pos: Vec<usize> = tokenize(&self.text)
            .iter()
            .enumerate()
            .filter(|(_, t)| t.start >= a && t.end <= b)
            .map(|(i, _)| i)
            .collect();
        (!pos.is_empty()).then_some(pos)
    }
}

fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn instance<R: Rng>(id: String, pair: &PropertyPair, ratio: f64, rng: &mut R) -> Example {
    let (pos_t, neg_t, cause_sign, effect_sign) = *KNOWLEDGE.choose(rng).unwrap();
    let polarity = if rng.random_bool(0.5) {
        Polarity::Positive
    } else {
        Polarity::Negative
    };
    let mut vars = Vars {
        cause: &pair.cause,
        effect: &pair.effect,
        entity: &pair.entity,
        name: NAMES.choose(rng).unwrap(),
        ..Vars::default()
    };
    let mut kb = Builder::default();
    kb.fill(if polarity == Polarity::Positive { pos_t } else { neg_t }, &vars);
    let kb = kb.finish();
    let effect_sign = match (polarity, effect_sign) {
        (Polarity::Positive, s) => s,
        (Polarity::Negative, "MORE") => "LESS",
        (Polarity::Negative, _) => "MORE",
    };
    let para = map(&[
        ("cause_prop", &pair.cause),
        ("effect_prop", &pair.effect),
        ("cause_dir_sign", cause_sign),
        ("effect_dir_sign", effect_sign),
    ]);

    let mut labels = Labels {
        cause: kb.positions(Slot::Cause),
        effect: kb.positions(Slot::Effect),
        polarity: Some(polarity),
        ..Labels::default()
    };
    let mut qb = Builder::default();
    let (more_opt, less_opt, question_anno);
    let subject_dir;
    if rng.random_bool(ratio) {
        labels.kind = Some(ReasoningType::Comparison);
        let order = if rng.random_bool(0.5) {
            WorldOrder::Greater
        } else {
            WorldOrder::Less
        };
        let (hi, lo) = *MODIFIERS.choose(rng).unwrap();
        let (m1, m2) = if order == WorldOrder::Greater { (hi, lo) } else { (lo, hi) };
        vars.world1 = format!("{} with {m1} {}", pair.entity, pair.cause);
        vars.world2 = format!("{} with {m2} {}", pair.entity, pair.cause);
        let (tpl, subject_w1, name_effect) = *COMPARE.choose(rng).unwrap();
        qb.fill(tpl, &vars);
        let dir1 = deduce_comparison(polarity, order);
        subject_dir = if subject_w1 { dir1 } else { dir1.flip() };
        let (m, l) = *COMPARE_OPTIONS.choose(rng).unwrap();
        if name_effect {
            more_opt = format!("{m} {}", pair.effect);
            less_opt = format!("{l} {}", pair.effect);
        } else {
            more_opt = m.into();
            less_opt = l.into();
        }
        let (more_w, less_w) = if dir1 == Direction::More {
            (&vars.world1, &vars.world2)
        } else {
            (&vars.world2, &vars.world1)
        };
        question_anno = map(&[("more_effect_dir", more_w), ("less_effect_dir", less_w)]);
        labels.comparison = Some(order);
    } else {
        labels.kind = Some(ReasoningType::Prediction);
        let value = if rng.random_bool(0.5) { ValueDir::Up } else { ValueDir::Down };
        let clause = rng.random_bool(0.7);
        let forms: &[&str] = match (clause, value) {
            (true, ValueDir::Up) => &CLAUSE_UP,
            (true, ValueDir::Down) => &CLAUSE_DOWN,
            (false, ValueDir::Up) => &NP_UP,
            (false, ValueDir::Down) => &NP_DOWN,
        };
        vars.world = forms.choose(rng).unwrap().replace("{c}", &pair.cause);
        let tpl = if clause {
            PREDICT_CLAUSE.choose(rng).unwrap()
        } else {
            PREDICT_NP.choose(rng).unwrap()
        };
        qb.fill(tpl, &vars);
        subject_dir = deduce_prediction(polarity, value);
        let (m, l) = *PREDICT_OPTIONS.choose(rng).unwrap();
        more_opt = m.into();
        less_opt = l.into();
        let cause_key = if value == ValueDir::Up { "more_cause_dir" } else { "less_cause_dir" };
        let effect_key = if subject_dir == Direction::More {
            "more_effect_dir"
        } else {
            "less_effect_dir"
        };
        question_anno = map(&[(cause_key, &vars.world), (effect_key, &pair.effect)]);
        labels.value = Some(value);
    }
    let qb = qb.finish();
    labels.world = qb.positions(Slot::World);
    labels.world1 = qb.positions(Slot::World1);
    labels.world2 = qb.positions(Slot::World2);

    let swap = rng.random_bool(0.5);
    let correct_first = subject_dir == Direction::More;
    let options = if swap { [less_opt, more_opt] } else { [more_opt, less_opt] };
    let answer = usize::from(correct_first == swap);
    Example {
        instance: Instance {
            id,
            knowledge: kb.text,
            question: qb.text,
            options,
            answer,
            annotation: Some(Annotation {
                para: Some(para),
                question: Some(question_anno),
            }),
        },
        labels,
    }
}

/// Generates train/dev/test splits over disjoint property pairs. The same
/// configuration always yields the same corpus.
pub fn generate_synthetic_corpus(cfg: &GenConfig) -> Result<Corpus> {
    if cfg.n_train == 0 || cfg.n_dev == 0 || cfg.n_test == 0 {
        return Err(invalid("split sizes must be positive"));
    }
    if !(0.0..=1.0).contains(&cfg.comparison_ratio) {
        return Err(invalid("comparison ratio must lie in [0, 1]"));
    }
    if cfg.dev_pairs == 0 || cfg.test_pairs == 0 {
        return Err(invalid("dev and test need at least one held-out pair each"));
    }
    let mut lexicon = cfg.lexicon.clone().unwrap_or_else(builtin_lexicon);
    if lexicon.len() < cfg.dev_pairs + cfg.test_pairs + 1 {
        return Err(invalid(format!(
            "lexicon has {} pairs; {} held out plus one for training are needed",
            lexicon.len(),
            cfg.dev_pairs + cfg.test_pairs
        )));
    }
    if lexicon
        .iter()
        .any(|p| p.cause.trim().is_empty() || p.effect.trim().is_empty() || p.entity.trim().is_empty())
    {
        return Err(invalid("lexicon entries need a cause, effect and entity"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    lexicon.shuffle(&mut rng);
    let test_pairs = &lexicon[..cfg.test_pairs];
    let dev_pairs = &lexicon[cfg.test_pairs..cfg.test_pairs + cfg.dev_pairs];
    let train_pairs = &lexicon[cfg.test_pairs + cfg.dev_pairs..];
    let mut split = |name: &str, n: usize, pairs: &[PropertyPair]| -> Vec<Example> {
        (0..n)
            .map(|i| {
                let pair = pairs.choose(&mut rng).unwrap();
                instance(format!("SYN-{name}-{i:05}"), pair, cfg.comparison_ratio, &mut rng)
            })
            .collect()
    };
    let train = split("train", cfg.n_train, train_pairs);
    let dev = split("dev", cfg.n_dev, dev_pairs);
    let test = split("test", cfg.n_test, test_pairs);
    Ok(Corpus { train, dev, test })
}
