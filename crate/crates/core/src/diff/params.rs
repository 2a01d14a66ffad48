use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use super::real::Real;
use super::tensor::Tensor;
use crate::error::{invalid, shape, Result};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) u32);

impl ParamId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Named, ordered collection of trainable tensors.
///
/// Insertion order is stable and defines checkpoint layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    ranks: Vec<u8>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Real> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            ranks: Vec::new(),
            tensors: Vec::new(),
        }
    }

    /// Registers a tensor. `rank` is 1 for vectors (stored as `1 x n`) and 2
    /// for matrices; it only affects how the tensor is written to disk.
    pub fn insert(&mut self, name: &str, tensor: Tensor<T>, rank: u8) -> Result<ParamId> {
        if self.names.iter().any(|n| n == name) {
            return Err(invalid(alloc::format!("duplicate parameter `{name}`")));
        }
        if rank == 1 && tensor.rows() != 1 {
            return Err(shape(alloc::format!("rank-1 parameter `{name}` must be a row")));
        }
        if rank == 0 || rank > 3 {
            return Err(invalid(alloc::format!("unsupported rank {rank}")));
        }
        self.names.push(name.to_string());
        self.ranks.push(rank);
        self.tensors.push(tensor);
        Ok(ParamId(self.tensors.len() as u32 - 1))
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn insert_uniform<R: Rng>(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut R,
    ) -> Result<ParamId> {
        let bound = 1.0 / libm::sqrt(fan_in.max(1) as f64);
        let data = (0..rows * cols)
            .map(|_| T::from_f64(rng.random_range(-bound..=bound)))
            .collect();
        let rank = if rows == 1 { 1 } else { 2 };
        self.insert(name, Tensor::from_vec(rows, cols, data)?, rank)
    }

    pub fn insert_filled(&mut self, name: &str, cols: usize, value: T) -> Result<ParamId> {
        let mut t = Tensor::zeros(1, cols);
        t.fill(value);
        self.insert(name, t, 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.index()]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.index()]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.index()]
    }

    pub fn rank(&self, id: ParamId) -> u8 {
        self.ranks[id.index()]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| ParamId(i as u32))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len() as u32).map(ParamId)
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            ranks: self.ranks.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    /// Replaces every tensor with a same-named, same-shaped one from `other`.
    pub fn load_from(&mut self, other: &ParamStore<T>) -> Result<()> {
        for (i, name) in self.names.iter().enumerate() {
            let j = other
                .id(name)
                .ok_or_else(|| invalid(alloc::format!("missing parameter `{name}`")))?;
            let src = other.get(j);
            if src.dims() != self.tensors[i].dims() {
                return Err(shape(alloc::format!(
                    "parameter `{name}`: expected {:?}, found {:?}",
                    self.tensors[i].dims(),
                    src.dims()
                )));
            }
            self.tensors[i] = src.clone();
        }
        Ok(())
    }
}

/// Gradient accumulator aligned with a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grads<T> {
    tensors: Vec<Tensor<T>>,
}

impl<T: Real> Grads<T> {
    pub fn zeros_like(store: &ParamStore<T>) -> Self {
        Self {
            tensors: store
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.rows(), t.cols()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.index()]
    }

    pub(crate) fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.index()]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn reset(&mut self) {
        for t in &mut self.tensors {
            t.fill(T::ZERO);
        }
    }

    pub fn scale(&mut self, s: T) {
        for t in &mut self.tensors {
            t.scale(s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data().iter().all(|v| v.is_finite()))
    }

    /// Sum of absolute values over one parameter.
    pub fn abs_sum(&self, id: ParamId) -> f64 {
        self.tensors[id.index()]
            .data()
            .iter()
            .map(|v| v.abs().to_f64())
            .sum()
    }
}
