//! Binary parameter container and checkpoint directories.
//!
//! A parameter file is `QRCK`, a u32 format version and a u32 parameter count,
//! then for each parameter: u16 name length, name bytes, u8 rank, one u32 per
//! dimension and the values as little-endian f32. All integers are
//! little-endian.
//!
//! A checkpoint directory holds `model.qrck`, `config.toml` and `vocab.txt`.

use std::fs;
use std::path::Path;

use qreason_core::answer::{AnswerConfig, AnswerModel};
use qreason_core::diff::{ParamStore, Tensor};
use qreason_core::model::{ReasonConfig, ReasonModel};
use qreason_core::text::Vocab;
use serde::{Deserialize, Serialize};

use crate::error::{format, io, Result};

pub const MAGIC: [u8; 4] = *b"QRCK";
pub const VERSION: u32 = 1;

pub const PARAMS_FILE: &str = "model.qrck";
pub const CONFIG_FILE: &str = "config.toml";
pub const VOCAB_FILE: &str = "vocab.txt";

pub fn encode_params(store: &ParamStore<f32>) -> Result<Vec<u8>, String> {
    let mut out = Vec::with_capacity(12 + 4 * store.num_values());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for id in store.ids() {
        let name = store.name(id).as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| "parameter name too long".to_string())?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name);
        let t = store.get(id);
        let dims: Vec<u32> = match store.rank(id) {
            1 => vec![t.cols() as u32],
            2 => vec![t.rows() as u32, t.cols() as u32],
            r => return Err(format!("unsupported rank {r} for `{}`", store.name(id))),
        };
        out.push(dims.len() as u8);
        for d in dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_params(bytes: &[u8]) -> Result<ParamStore<f32>, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("not a QRCK file".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let count = r.u32()?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| "parameter name is not UTF-8".to_string())?
            .to_string();
        let rank = r.u8()?;
        let (rows, cols) = match rank {
            1 => (1, r.u32()? as usize),
            2 => (r.u32()? as usize, r.u32()? as usize),
            _ => return Err(format!("unsupported rank {rank} for `{name}`")),
        };
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| format!("dimensions of `{name}` overflow"))?;
        let raw = r.take(n.checked_mul(4).ok_or("size overflow")?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Tensor::from_vec(rows, cols, data).map_err(|e| e.to_string())?;
        store.insert(&name, t, rank).map_err(|e| e.to_string())?;
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(store)
}

pub fn write_params(path: &Path, store: &ParamStore<f32>) -> Result<()> {
    let bytes = encode_params(store).map_err(|m| format(path, m))?;
    fs::write(path, bytes).map_err(io(path))
}

pub fn read_params(path: &Path) -> Result<ParamStore<f32>> {
    let bytes = fs::read(path).map_err(io(path))?;
    decode_params(&bytes).map_err(|m| format(path, m))
}

pub fn write_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    let mut text = vocab.tokens().join("\n");
    text.push('\n');
    fs::write(path, text).map_err(io(path))
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    let tokens = text.lines().map(str::to_string).collect();
    Vocab::from_tokens(tokens).map_err(|e| format(path, e))
}

/// Contents of `config.toml`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelConfig {
    Reason(ReasonConfig),
    Answer(AnswerConfig),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Reason(_) => "reason",
            ModelConfig::Answer(_) => "answer",
        }
    }
}

fn write_config(path: &Path, config: &ModelConfig) -> Result<()> {
    let text = toml::to_string(config).map_err(|e| format(path, e))?;
    fs::write(path, text).map_err(io(path))
}

fn read_config(path: &Path) -> Result<ModelConfig> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    toml::from_str(&text).map_err(|e| format(path, e))
}

fn save_dir(dir: &Path, config: &ModelConfig, vocab: &Vocab, store: &ParamStore<f32>) -> Result<()> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    write_params(&dir.join(PARAMS_FILE), store)?;
    write_config(&dir.join(CONFIG_FILE), config)?;
    write_vocab(&dir.join(VOCAB_FILE), vocab)
}

fn load_dir(dir: &Path) -> Result<(ModelConfig, Vocab, ParamStore<f32>)> {
    let config = read_config(&dir.join(CONFIG_FILE))?;
    let vocab = read_vocab(&dir.join(VOCAB_FILE))?;
    let store = read_params(&dir.join(PARAMS_FILE))?;
    Ok((config, vocab, store))
}

pub fn save_reason(dir: &Path, model: &ReasonModel) -> Result<()> {
    save_dir(dir, &ModelConfig::Reason(model.config), &model.vocab, &model.store)
}

pub fn save_answer(dir: &Path, model: &AnswerModel) -> Result<()> {
    save_dir(dir, &ModelConfig::Answer(model.config), &model.vocab, &model.store)
}

pub fn load_reason(dir: &Path) -> Result<ReasonModel> {
    match load_dir(dir)? {
        (ModelConfig::Reason(c), vocab, store) => Ok(ReasonModel::from_parts(c, vocab, store)?),
        (other, ..) => Err(format(dir, format!("expected a reason checkpoint, found {}", other.name()))),
    }
}

pub fn load_answer(dir: &Path) -> Result<AnswerModel> {
    match load_dir(dir)? {
        (ModelConfig::Answer(c), vocab, store) => Ok(AnswerModel::from_parts(c, vocab, store)?),
        (other, ..) => Err(format(dir, format!("expected an answer checkpoint, found {}", other.name()))),
    }
}
