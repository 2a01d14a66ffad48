//! Line-delimited JSON datasets.
//!
//! Two record shapes are accepted: the flat one written by [`save_dataset`]
//! and the nested multiple-choice shape (`question.stem`,
//! `question.choices[].text/label`, `answerKey`). Field names are listed in
//! `docs/dataset-schema.md`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qreason_core::data::{label_instance, AlignStats, Annotation, Example, Instance, Labels};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{io, Error, Result};

/// One dataset item plus the fields this crate does not interpret.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub example: Example,
    pub extra: Map<String, Value>,
}

impl From<Example> for Record {
    fn from(example: Example) -> Self {
        Self {
            example,
            extra: Map::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    /// Annotation strings that could not be aligned to their source text.
    pub unaligned: usize,
}

impl Dataset {
    pub fn examples(&self) -> Vec<Example> {
        self.records.iter().map(|r| r.example.clone()).collect()
    }
}

#[derive(Deserialize)]
struct Choice {
    text: String,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QuestionField {
    Text(String),
    Nested { stem: String, choices: Vec<Choice> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnswerField {
    Index(u64),
    Label(String),
}

#[derive(Deserialize)]
struct InRecord {
    id: String,
    #[serde(alias = "knowledge")]
    para: String,
    question: QuestionField,
    #[serde(default)]
    options: Option<Vec<String>>,
    #[serde(default)]
    answer: Option<AnswerField>,
    #[serde(default, rename = "answerKey")]
    answer_key: Option<String>,
    #[serde(default)]
    para_anno: Option<Map<String, Value>>,
    #[serde(default)]
    question_anno: Option<Map<String, Value>>,
    #[serde(default)]
    labels: Option<Labels>,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    id: &'a str,
    para: &'a str,
    question: &'a str,
    options: &'a [String; 2],
    answer: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    para_anno: Option<&'a BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    question_anno: Option<&'a BTreeMap<String, String>>,
    labels: &'a Labels,
    #[serde(flatten)]
    extra: &'a Map<String, Value>,
}

fn anno_map(map: Option<Map<String, Value>>) -> Option<BTreeMap<String, String>> {
    map.map(|m| {
        m.into_iter()
            .filter_map(|(k, v)| match v {
                Value::String(s) => Some((k, s)),
                Value::Number(n) => Some((k, n.to_string())),
                Value::Bool(b) => Some((k, b.to_string())),
                _ => None,
            })
            .collect()
    })
}

fn answer_index(label: &str, labels: &[Option<String>]) -> Option<usize> {
    if let Some(i) = labels.iter().position(|l| l.as_deref() == Some(label)) {
        return Some(i);
    }
    match label {
        "A" | "a" | "0" => Some(0),
        "B" | "b" | "1" => Some(1),
        _ => None,
    }
}

fn convert(raw: InRecord, stats: &mut AlignStats) -> Result<Record, String> {
    let (question, options, choice_labels) = match raw.question {
        QuestionField::Text(q) => {
            let opts = raw.options.ok_or("missing `options`")?;
            (q, opts, Vec::new())
        }
        QuestionField::Nested { stem, choices } => {
            let labels = choices.iter().map(|c| c.label.clone()).collect();
            let opts = choices.into_iter().map(|c| c.text).collect();
            (stem, opts, labels)
        }
    };
    let options: [String; 2] = options
        .try_into()
        .map_err(|o: Vec<String>| format!("expected exactly 2 options, found {}", o.len()))?;
    let answer = match (raw.answer, raw.answer_key) {
        (Some(AnswerField::Index(i)), _) => i as usize,
        (Some(AnswerField::Label(l)), _) | (None, Some(l)) => {
            answer_index(&l, &choice_labels).ok_or_else(|| format!("unknown answer label `{l}`"))?
        }
        (None, None) => return Err("missing `answer`".into()),
    };
    if answer > 1 {
        return Err(format!("answer index {answer} out of range"));
    }
    let para = anno_map(raw.para_anno);
    let qa = anno_map(raw.question_anno);
    let annotation = (para.is_some() || qa.is_some()).then_some(Annotation { para, question: qa });
    let instance = Instance {
        id: raw.id,
        knowledge: raw.para,
        question,
        options,
        answer,
        annotation,
    };
    let example = match raw.labels {
        Some(labels) => Example { instance, labels },
        None => label_instance(instance, stats),
    };
    Ok(Record {
        example,
        extra: raw.extra,
    })
}

/// Parses dataset text; `path` is only used in error messages.
pub fn parse_dataset(text: &str, path: &Path) -> Result<Dataset> {
    let mut stats = AlignStats::default();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let raw: InRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        records.push(convert(raw, &mut stats).map_err(err)?);
    }
    Ok(Dataset {
        records,
        unaligned: stats.unaligned,
    })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    parse_dataset(&text, path)
}

pub fn render_record(record: &Record) -> String {
    let inst = &record.example.instance;
    let anno = inst.annotation.as_ref();
    let out = OutRecord {
        id: &inst.id,
        para: &inst.knowledge,
        question: &inst.question,
        options: &inst.options,
        answer: inst.answer,
        para_anno: anno.and_then(|a| a.para.as_ref()),
        question_anno: anno.and_then(|a| a.question.as_ref()),
        labels: &record.example.labels,
        extra: &record.extra,
    };
    serde_json::to_string(&out).expect("dataset records always serialize")
}

pub fn render_dataset(records: &[Record]) -> String {
    let mut text = String::new();
    for r in records {
        text.push_str(&render_record(r));
        text.push('\n');
    }
    text
}

pub fn save_dataset(path: &Path, records: &[Record]) -> Result<()> {
    fs::write(path, render_dataset(records)).map_err(io(path))
}

/// Resolves a split argument such as `data/test` to an existing file,
/// trying the `.jsonl` extension when the bare path is absent.
pub fn resolve_split(arg: &Path) -> PathBuf {
    if arg.is_file() {
        return arg.to_path_buf();
    }
    let mut with_ext = arg.as_os_str().to_owned();
    with_ext.push(".jsonl");
    let with_ext = PathBuf::from(with_ext);
    if with_ext.is_file() {
        with_ext
    } else {
        arg.to_path_buf()
    }
}
