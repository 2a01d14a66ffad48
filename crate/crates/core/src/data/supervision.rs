use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::instance::{Annotation, Example, Instance, Labels};
use crate::kinds::{Polarity, ReasoningType};
use crate::text::{tokenize, Token};

/// Labels that follow from the annotation record alone.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Derived {
    pub polarity: Option<Polarity>,
    pub kind: Option<ReasoningType>,
    pub cause_text: Option<String>,
    pub effect_text: Option<String>,
}

/// Parses a direction sign. `None` for anything unrecognized.
pub fn parse_sign(s: &str) -> Option<i8> {
    match s.trim().to_ascii_lowercase().as_str() {
        "more" | "+" | "1" | "+1" | "increase" | "increases" | "higher" | "greater" | "up" => Some(1),
        "less" | "-" | "-1" | "decrease" | "decreases" | "lower" | "smaller" | "down" => Some(-1),
        _ => None,
    }
}

fn lookup<'a>(map: &'a BTreeMap<String, String>, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| map.get(*k)).map(String::as_str)
}

/// Polarity is positive iff the effect and cause signs agree; the reasoning
/// type is Comparison iff the question annotation carries both a more-effect
/// and a less-effect entry.
pub fn derive_supervision(anno: &Annotation) -> Derived {
    let mut out = Derived::default();
    if let Some(para) = &anno.para {
        let cause = lookup(para, &["cause_dir_sign", "casue_dir_sign"]).and_then(parse_sign);
        let effect = lookup(para, &["effect_dir_sign"]).and_then(parse_sign);
        if let (Some(c), Some(e)) = (cause, effect) {
            out.polarity = Some(if c == e {
                Polarity::Positive
            } else {
                Polarity::Negative
            });
        }
        out.cause_text = lookup(para, &["cause_prop", "casue_prop"])
            .filter(|s| !s.trim().is_empty())
            .map(String::from);
        out.effect_text = lookup(para, &["effect_prop"])
            .filter(|s| !s.trim().is_empty())
            .map(String::from);
    }
    if let Some(q) = &anno.question {
        let more = q.keys().any(|k| k.starts_with("more_effect"));
        let less = q.keys().any(|k| k.starts_with("less_effect"));
        out.kind = Some(if more && less {
            ReasoningType::Comparison
        } else {
            ReasoningType::Prediction
        });
    }
    out
}

const KEYWORDS: [&str; 16] = [
    "greater", "more", "less", "higher", "lower", "larger", "smaller", "increase", "increases",
    "decrease", "decreases", "increasing", "decreasing", "bigger", "fewer", "stronger",
];

/// Token positions of `needle` inside `tokens`. The first exact match wins;
/// with several matches, the one closest to a correlation keyword wins.
pub fn align(tokens: &[Token], needle: &str) -> Option<Vec<usize>> {
    let pat: Vec<String> = tokenize(needle).into_iter().map(|t| t.text).collect();
    if pat.is_empty() || pat.len() > tokens.len() {
        return None;
    }
    let starts: Vec<usize> = (0..=tokens.len() - pat.len())
        .filter(|&s| pat.iter().zip(&tokens[s..]).all(|(p, t)| *p == t.text))
        .collect();
    let keys: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| KEYWORDS.contains(&t.text.as_str()))
        .map(|(i, _)| i)
        .collect();
    let dist = |s: usize| {
        keys.iter()
            .map(|&k| {
                if k < s {
                    s - k
                } else if k >= s + pat.len() {
                    k + 1 - (s + pat.len())
                } else {
                    0
                }
            })
            .min()
            .unwrap_or(0)
    };
    let mut best: Option<usize> = None;
    for s in starts {
        if best.map_or(true, |b| dist(s) < dist(b)) {
            best = Some(s);
        }
    }
    best.map(|s| (s..s + pat.len()).collect())
}

/// Counts of annotation strings that could not be located in their text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AlignStats {
    pub unaligned: usize,
}

/// Turns an instance with a raw annotation into a labelled example.
/// Unavailable or unalignable labels stay `None`.
pub fn label_instance(instance: Instance, stats: &mut AlignStats) -> Example {
    let mut labels = Labels::default();
    if let Some(anno) = &instance.annotation {
        let d = derive_supervision(anno);
        labels.polarity = d.polarity;
        labels.kind = d.kind;
        let tokens = tokenize(&instance.knowledge);
        for (text, slot) in [(d.cause_text, &mut labels.cause), (d.effect_text, &mut labels.effect)] {
            if let Some(text) = text {
                *slot = align(&tokens, &text);
                if slot.is_none() {
                    stats.unaligned += 1;
                }
            }
        }
    }
    Example { instance, labels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn signs_decide_polarity() {
        let same = Annotation {
            para: Some(map(&[("cause_dir_sign", "MORE"), ("effect_dir_sign", "MORE")])),
            question: None,
        };
        assert_eq!(derive_supervision(&same).polarity, Some(Polarity::Positive));
        assert_eq!(derive_supervision(&same).kind, None);
        let typo = Annotation {
            para: Some(map(&[("casue_dir_sign", "LESS"), ("effect_dir_sign", "MORE")])),
            question: None,
        };
        assert_eq!(derive_supervision(&typo).polarity, Some(Polarity::Negative));
        let bad = Annotation {
            para: Some(map(&[("cause_dir_sign", "sideways"), ("effect_dir_sign", "MORE")])),
            question: None,
        };
        assert_eq!(derive_supervision(&bad).polarity, None);
    }

    #[test]
    fn question_keys_decide_type() {
        let both = Annotation {
            para: None,
            question: Some(map(&[("more_effect_dir", "a"), ("less_effect_dir", "b")])),
        };
        assert_eq!(derive_supervision(&both).kind, Some(ReasoningType::Comparison));
        let one = Annotation {
            para: None,
            question: Some(map(&[("more_effect_dir", "a")])),
        };
        assert_eq!(derive_supervision(&one).kind, Some(ReasoningType::Prediction));
    }

    #[test]
    fn alignment_prefers_occurrence_near_keyword() {
        let toks = tokenize("Mass is mass. The greater the mass, the greater the pull.");
        assert_eq!(align(&toks, "mass"), Some(vec![7]));
        assert_eq!(align(&toks, "the pull"), Some(vec![11, 12]));
        assert_eq!(align(&toks, "weight"), None);
        let toks = tokenize("mass and mass");
        assert_eq!(align(&toks, "mass"), Some(vec![0]));
    }

    #[test]
    fn unaligned_annotation_is_masked_and_counted() {
        let inst = Instance {
            id: "x".into(),
            knowledge: "The greater the mass, the greater the pull.".into(),
            question: "q".into(),
            options: ["a".into(), "b".into()],
            answer: 0,
            annotation: Some(Annotation {
                para: Some(map(&[("cause_prop", "mass"), ("effect_prop", "heat")])),
                question: None,
            }),
        };
        let mut stats = AlignStats::default();
        let ex = label_instance(inst, &mut stats);
        assert_eq!(ex.labels.cause, Some(vec![3]));
        assert_eq!(ex.labels.effect, None);
        assert_eq!(stats.unaligned, 1);
    }
}
