//! Reverse-mode differentiation over a linear tape.
//!
//! Every builder method evaluates its forward value immediately and appends a
//! node. [`Tape::backward`] walks the nodes in reverse and accumulates
//! parameter gradients into a [`Grads`] buffer. Parameters are borrowed from a
//! [`ParamStore`], never copied onto the tape.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::params::{Grads, ParamId, ParamStore};
use super::real::Real;
use super::tensor::{gemm_into, MatRef, Tensor};
use crate::error::{invalid, shape, Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    fn ix(self) -> usize {
        self.0 as usize
    }
}

const LN_EPS: f64 = 1e-5;

enum Op<T> {
    Input,
    Param(ParamId),
    Gather { table: ParamId, ids: Vec<u32> },
    MatMul { a: Var, b: Var, ta: bool, tb: bool },
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Affine { a: Var, scale: T },
    Tanh(Var),
    Relu(Var),
    Sigmoid(Var),
    Log { a: Var, eps: T },
    Softmax { a: Var },
    LayerNorm { a: Var, gamma: Var, beta: Var, xhat: Vec<T>, inv_std: Vec<T> },
    ColSlice { a: Var, start: usize },
    ConcatCols(Vec<Var>),
    RemapRows { a: Var, src: Vec<Option<usize>> },
    Pick { a: Var, idx: Vec<usize> },
    Sum(Var),
    Reshape(Var),
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param(_) => "param",
            Op::Gather { .. } => "gather",
            Op::MatMul { .. } => "matmul",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::Mul(..) => "mul",
            Op::Affine { .. } => "affine",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Log { .. } => "log",
            Op::Softmax { .. } => "softmax_masked",
            Op::LayerNorm { .. } => "layer_norm",
            Op::ColSlice { .. } => "col_slice",
            Op::ConcatCols(_) => "concat_cols",
            Op::RemapRows { .. } => "remap_rows",
            Op::Pick { .. } => "pick",
            Op::Sum(_) => "sum",
            Op::Reshape(_) => "reshape",
        }
    }
}

struct Node<T> {
    /// Empty for parameter leaves; their value lives in the store.
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

pub struct Tape<'p, T: Real> {
    params: &'p ParamStore<T>,
    param_nodes: Vec<Option<Var>>,
    nodes: Vec<Node<T>>,
    first_non_finite: Option<&'static str>,
    log_clamps: usize,
}

/// Row-wise masked softmax of `logits` into `out`. Masked entries become
/// exactly zero.
fn softmax_row<T: Real>(logits: &[T], mask: Option<&[bool]>, out: &mut [T]) -> Result<()> {
    let on = |j: usize| mask.is_none_or(|m| m[j]);
    let mut max: Option<T> = None;
    for (j, &x) in logits.iter().enumerate() {
        if on(j) {
            max = Some(match max {
                Some(m) => m.max(x),
                None => x,
            });
        }
    }
    let max = max.ok_or_else(|| invalid("softmax mask has no true entry"))?;
    let mut sum = T::ZERO;
    for (j, (&x, o)) in logits.iter().zip(out.iter_mut()).enumerate() {
        *o = if on(j) { (x - max).exp() } else { T::ZERO };
        sum += *o;
    }
    for o in out.iter_mut() {
        *o = *o / sum;
    }
    Ok(())
}

/// Masked softmax over a single vector.
pub fn softmax_masked<T: Real>(logits: &[T], mask: &[bool]) -> Result<Vec<T>> {
    if logits.len() != mask.len() {
        return Err(shape(format!(
            "{} logits but {} mask entries",
            logits.len(),
            mask.len()
        )));
    }
    let mut out = vec![T::ZERO; logits.len()];
    softmax_row(logits, Some(mask), &mut out)?;
    Ok(out)
}

impl<'p, T: Real> Tape<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Self {
            params,
            param_nodes: vec![None; params.len()],
            nodes: Vec::with_capacity(256),
            first_non_finite: None,
            log_clamps: 0,
        }
    }

    pub fn params(&self) -> &'p ParamStore<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of `log` evaluations whose argument was clamped up to epsilon.
    pub fn log_clamps(&self) -> usize {
        self.log_clamps
    }

    /// Name of the first operation whose output contained NaN or infinity.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.first_non_finite
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        match &self.nodes[v.ix()].op {
            Op::Param(id) => self.params.get(*id),
            _ => &self.nodes[v.ix()].value,
        }
    }

    pub fn scalar(&self, v: Var) -> T {
        self.value(v).data()[0]
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.ix()].needs_grad
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        if self.first_non_finite.is_none() && value.data().iter().any(|x| !x.is_finite()) {
            self.first_non_finite = Some(op.name());
        }
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() as u32 - 1)
    }

    /// Constant leaf; receives no gradient.
    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Input, false)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.index()] {
            return v;
        }
        let v = self.push(Tensor::zeros(0, 0), Op::Param(id), true);
        self.param_nodes[id.index()] = Some(v);
        v
    }

    /// Rows of an embedding table, one per id.
    pub fn gather(&mut self, table: ParamId, ids: &[u32]) -> Result<Var> {
        let t = self.params.get(table);
        let cols = t.cols();
        let mut out = Vec::with_capacity(ids.len() * cols);
        for &id in ids {
            let r = id as usize;
            if r >= t.rows() {
                return Err(invalid(format!(
                    "id {r} out of range for table `{}` with {} rows",
                    self.params.name(table),
                    t.rows()
                )));
            }
            out.extend_from_slice(t.row_slice(r));
        }
        let value = Tensor::from_vec(ids.len(), cols, out)?;
        Ok(self.push(
            value,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
            true,
        ))
    }

    /// `op(a) @ op(b)` where `op` optionally transposes.
    pub fn matmul_t(&mut self, a: Var, b: Var, ta: bool, tb: bool) -> Result<Var> {
        let av = self.value(a).view().t_if(ta);
        let bv = self.value(b).view().t_if(tb);
        if av.cols() != bv.rows() {
            return Err(shape(format!(
                "matmul {}x{} by {}x{}",
                av.rows(),
                av.cols(),
                bv.rows(),
                bv.cols()
            )));
        }
        let mut out = Tensor::zeros(av.rows(), bv.cols());
        gemm_into(T::ONE, av, bv, T::ZERO, out.data_mut(), false);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::MatMul { a, b, ta, tb }, ng))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_t(a, b, false, false)
    }

    fn same_dims(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (da, db) = (self.value(a).dims(), self.value(b).dims());
        if da != db {
            return Err(shape(format!("{what}: {da:?} vs {db:?}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_dims(a, b, "add")?;
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b).data());
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Add(a, b), ng))
    }

    /// Adds a `1 x c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(bias));
        if bv.rows() != 1 || bv.cols() != av.cols() {
            return Err(shape(format!(
                "add_row {:?} with bias {:?}",
                av.dims(),
                bv.dims()
            )));
        }
        let mut out = av.clone();
        let c = av.cols();
        for (i, x) in out.data_mut().iter_mut().enumerate() {
            *x += bv.data()[i % c];
        }
        let ng = self.needs(a) || self.needs(bias);
        Ok(self.push(out, Op::AddRow(a, bias), ng))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_dims(a, b, "mul")?;
        let mut out = self.value(a).clone();
        for (x, y) in out.data_mut().iter_mut().zip(self.value(b).data()) {
            *x *= *y;
        }
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Mul(a, b), ng))
    }

    /// `scale * a + shift`, elementwise.
    pub fn affine(&mut self, a: Var, scale: T, shift: T) -> Var {
        let mut out = self.value(a).clone();
        for x in out.data_mut() {
            *x = *x * scale + shift;
        }
        let ng = self.needs(a);
        self.push(out, Op::Affine { a, scale }, ng)
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        self.affine(a, s, T::ZERO)
    }

    fn map(&mut self, a: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let mut out = self.value(a).clone();
        for x in out.data_mut() {
            *x = f(*x);
        }
        let ng = self.needs(a);
        self.push(out, op, ng)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, T::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |x| if x > T::ZERO { x } else { T::ZERO }, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(
            a,
            |x| {
                if x >= T::ZERO {
                    T::ONE / (T::ONE + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (T::ONE + e)
                }
            },
            Op::Sigmoid(a),
        )
    }

    /// Natural log with arguments below `eps` clamped to `eps`. Each clamped
    /// element bumps [`Tape::log_clamps`] and passes no gradient.
    pub fn log(&mut self, a: Var, eps: T) -> Var {
        let mut out = self.value(a).clone();
        let mut clamps = 0;
        for x in out.data_mut() {
            if *x < eps {
                clamps += 1;
                *x = eps;
            }
            *x = x.ln();
        }
        self.log_clamps += clamps;
        let ng = self.needs(a);
        self.push(out, Op::Log { a, eps }, ng)
    }

    /// Row-wise softmax. With a mask (one flag per column), masked columns
    /// get probability exactly zero in every row.
    pub fn softmax(&mut self, a: Var, mask: Option<&[bool]>) -> Result<Var> {
        let av = self.value(a);
        let (r, c) = av.dims();
        if let Some(m) = mask {
            if m.len() != c {
                return Err(shape(format!("softmax mask of {} over {c} columns", m.len())));
            }
        }
        let mut out = Tensor::zeros(r, c);
        for i in 0..r {
            softmax_row(
                av.row_slice(i),
                mask,
                &mut out.data_mut()[i * c..(i + 1) * c],
            )?;
        }
        let ng = self.needs(a);
        Ok(self.push(out, Op::Softmax { a }, ng))
    }

    /// Row-wise layer normalization with learned gain and bias rows.
    pub fn layer_norm(&mut self, a: Var, gamma: Var, beta: Var) -> Result<Var> {
        let av = self.value(a);
        let (r, c) = av.dims();
        let (g, b) = (self.value(gamma), self.value(beta));
        if g.dims() != (1, c) || b.dims() != (1, c) {
            return Err(shape(format!("layer_norm over {c} columns")));
        }
        let eps = T::from_f64(LN_EPS);
        let n = T::from_f64(c as f64);
        let mut out = Tensor::zeros(r, c);
        let mut xhat = vec![T::ZERO; r * c];
        let mut inv_std = vec![T::ZERO; r];
        for i in 0..r {
            let row = av.row_slice(i);
            let mut mean = T::ZERO;
            for &x in row {
                mean += x;
            }
            mean = mean / n;
            let mut var = T::ZERO;
            for &x in row {
                let d = x - mean;
                var += d * d;
            }
            var = var / n;
            let is = T::ONE / (var + eps).sqrt();
            inv_std[i] = is;
            for j in 0..c {
                let xh = (row[j] - mean) * is;
                xhat[i * c + j] = xh;
                out.data_mut()[i * c + j] = xh * g.data()[j] + b.data()[j];
            }
        }
        let ng = self.needs(a) || self.needs(gamma) || self.needs(beta);
        Ok(self.push(
            out,
            Op::LayerNorm {
                a,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            ng,
        ))
    }

    pub fn col_slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let av = self.value(a);
        let (r, c) = av.dims();
        if start + len > c {
            return Err(shape(format!("columns {start}..{} of {c}", start + len)));
        }
        let mut out = Vec::with_capacity(r * len);
        for i in 0..r {
            out.extend_from_slice(&av.row_slice(i)[start..start + len]);
        }
        let ng = self.needs(a);
        Ok(self.push(Tensor::from_vec(r, len, out)?, Op::ColSlice { a, start }, ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| invalid("concat of nothing"))?;
        let r = self.value(*first).rows();
        if parts.iter().any(|p| self.value(*p).rows() != r) {
            return Err(shape("concat_cols row counts differ"));
        }
        let c: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for p in parts {
                out.extend_from_slice(self.value(*p).row_slice(i));
            }
        }
        let ng = parts.iter().any(|p| self.needs(*p));
        Ok(self.push(Tensor::from_vec(r, c, out)?, Op::ConcatCols(parts.to_vec()), ng))
    }

    /// Output row `i` is row `src[i]` of `a`, or zeros when `src[i]` is
    /// `None`. Covers row selection, padding and scattering.
    pub fn remap_rows(&mut self, a: Var, src: &[Option<usize>]) -> Result<Var> {
        let av = self.value(a);
        let c = av.cols();
        let mut out = Tensor::zeros(src.len(), c);
        for (i, s) in src.iter().enumerate() {
            if let Some(s) = *s {
                if s >= av.rows() {
                    return Err(shape(format!("row {s} of {}", av.rows())));
                }
                out.data_mut()[i * c..(i + 1) * c].copy_from_slice(av.row_slice(s));
            }
        }
        let ng = self.needs(a);
        Ok(self.push(
            out,
            Op::RemapRows {
                a,
                src: src.to_vec(),
            },
            ng,
        ))
    }

    /// `1 x k` row of the flat elements of `a` at `idx`.
    pub fn pick(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let av = self.value(a);
        let mut out = Vec::with_capacity(idx.len());
        for &i in idx {
            out.push(
                *av.data()
                    .get(i)
                    .ok_or_else(|| shape(format!("pick index {i} of {}", av.len())))?,
            );
        }
        let ng = self.needs(a);
        Ok(self.push(
            Tensor::row(out),
            Op::Pick {
                a,
                idx: idx.to_vec(),
            },
            ng,
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let mut s = T::ZERO;
        for &x in self.value(a).data() {
            s += x;
        }
        let ng = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), ng)
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var> {
        let out = self.value(a).clone().reshaped(rows, cols)?;
        let ng = self.needs(a);
        Ok(self.push(out, Op::Reshape(a), ng))
    }

    /// Accumulates `d out / d param` into `grads` for every parameter reachable
    /// from the scalar `out`. Existing contents of `grads` are added to.
    pub fn backward(&self, out: Var, grads: &mut Grads<T>) -> Result<()> {
        if self.value(out).len() != 1 {
            return Err(invalid(format!(
                "backward from a non-scalar {:?} output",
                self.value(out).dims()
            )));
        }
        if grads.len() != self.params.len() {
            return Err(shape("gradient buffer does not match the parameter store"));
        }
        let mut g: Vec<Option<Vec<T>>> = Vec::new();
        g.resize_with(out.ix() + 1, || None);
        g[out.ix()] = Some(vec![T::ONE]);

        for i in (0..=out.ix()).rev() {
            let Some(gi) = g[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let y = &node.value;
            match &node.op {
                Op::Input => {}
                Op::Param(id) => grads.get_mut(*id).add_assign(&gi),
                Op::Gather { table, ids } => {
                    let t = grads.get_mut(*table);
                    let c = t.cols();
                    for (r, &id) in ids.iter().enumerate() {
                        let dst = &mut t.data_mut()[id as usize * c..(id as usize + 1) * c];
                        for (d, s) in dst.iter_mut().zip(&gi[r * c..(r + 1) * c]) {
                            *d += *s;
                        }
                    }
                }
                Op::MatMul { a, b, ta, tb } => {
                    let (m, n) = y.dims();
                    let dc = MatRef::new(&gi, m, n);
                    let a_op = self.value(*a).view().t_if(*ta);
                    let b_op = self.value(*b).view().t_if(*tb);
                    if self.needs(*a) {
                        let len = self.value(*a).len();
                        let buf = self.grad_buf(&mut g, *a, len);
                        gemm_into(T::ONE, dc, b_op.t(), T::ONE, buf, *ta);
                    }
                    if self.needs(*b) {
                        let len = self.value(*b).len();
                        let buf = self.grad_buf(&mut g, *b, len);
                        gemm_into(T::ONE, a_op.t(), dc, T::ONE, buf, *tb);
                    }
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut g, *a, &gi);
                    self.accumulate(&mut g, *b, &gi);
                }
                Op::AddRow(a, bias) => {
                    self.accumulate(&mut g, *a, &gi);
                    if self.needs(*bias) {
                        let c = y.cols();
                        let buf = self.grad_buf(&mut g, *bias, c);
                        for (k, v) in gi.iter().enumerate() {
                            buf[k % c] += *v;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    for (this, other) in [(*a, *b), (*b, *a)] {
                        if self.needs(this) {
                            let o = self.value(other).data();
                            let buf = self.grad_buf(&mut g, this, o.len());
                            for k in 0..o.len() {
                                buf[k] += gi[k] * o[k];
                            }
                        }
                    }
                }
                Op::Affine { a, scale } => {
                    self.accumulate_with(&mut g, *a, gi.len(), |k| gi[k] * *scale);
                }
                Op::Tanh(a) => {
                    let yd = y.data();
                    self.accumulate_with(&mut g, *a, gi.len(), |k| {
                        gi[k] * (T::ONE - yd[k] * yd[k])
                    });
                }
                Op::Relu(a) => {
                    let yd = y.data();
                    self.accumulate_with(&mut g, *a, gi.len(), |k| {
                        if yd[k] > T::ZERO {
                            gi[k]
                        } else {
                            T::ZERO
                        }
                    });
                }
                Op::Sigmoid(a) => {
                    let yd = y.data();
                    self.accumulate_with(&mut g, *a, gi.len(), |k| {
                        gi[k] * yd[k] * (T::ONE - yd[k])
                    });
                }
                Op::Log { a, eps } => {
                    let xd = self.value(*a).data();
                    self.accumulate_with(&mut g, *a, gi.len(), |k| {
                        if xd[k] < *eps {
                            T::ZERO
                        } else {
                            gi[k] / xd[k]
                        }
                    });
                }
                Op::Softmax { a } => {
                    if self.needs(*a) {
                        let (r, c) = y.dims();
                        let yd = y.data();
                        let buf = self.grad_buf(&mut g, *a, r * c);
                        for row in 0..r {
                            let s = row * c;
                            let mut dot = T::ZERO;
                            for j in s..s + c {
                                dot += yd[j] * gi[j];
                            }
                            for j in s..s + c {
                                buf[j] += yd[j] * (gi[j] - dot);
                            }
                        }
                    }
                }
                Op::LayerNorm {
                    a,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    let (r, c) = y.dims();
                    let gam = self.value(*gamma).data();
                    if self.needs(*gamma) {
                        let buf = self.grad_buf(&mut g, *gamma, c);
                        for k in 0..r * c {
                            buf[k % c] += gi[k] * xhat[k];
                        }
                    }
                    if self.needs(*beta) {
                        let buf = self.grad_buf(&mut g, *beta, c);
                        for k in 0..r * c {
                            buf[k % c] += gi[k];
                        }
                    }
                    if self.needs(*a) {
                        let n = T::from_f64(c as f64);
                        let buf = self.grad_buf(&mut g, *a, r * c);
                        let mut dxh = vec![T::ZERO; c];
                        for row in 0..r {
                            let s = row * c;
                            let mut sum_d = T::ZERO;
                            let mut sum_dx = T::ZERO;
                            for j in 0..c {
                                dxh[j] = gi[s + j] * gam[j];
                                sum_d += dxh[j];
                                sum_dx += dxh[j] * xhat[s + j];
                            }
                            let f = inv_std[row] / n;
                            for j in 0..c {
                                buf[s + j] += f * (n * dxh[j] - sum_d - xhat[s + j] * sum_dx);
                            }
                        }
                    }
                }
                Op::ColSlice { a, start } => {
                    if self.needs(*a) {
                        let (r, len) = y.dims();
                        let c = self.value(*a).cols();
                        let buf = self.grad_buf(&mut g, *a, r * c);
                        for row in 0..r {
                            for j in 0..len {
                                buf[row * c + start + j] += gi[row * len + j];
                            }
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let (r, c) = y.dims();
                    let mut off = 0;
                    for p in parts {
                        let pc = self.value(*p).cols();
                        if self.needs(*p) {
                            let buf = self.grad_buf(&mut g, *p, r * pc);
                            for row in 0..r {
                                for j in 0..pc {
                                    buf[row * pc + j] += gi[row * c + off + j];
                                }
                            }
                        }
                        off += pc;
                    }
                }
                Op::RemapRows { a, src } => {
                    if self.needs(*a) {
                        let c = y.cols();
                        let len = self.value(*a).len();
                        let buf = self.grad_buf(&mut g, *a, len);
                        for (i, s) in src.iter().enumerate() {
                            if let Some(s) = *s {
                                for j in 0..c {
                                    buf[s * c + j] += gi[i * c + j];
                                }
                            }
                        }
                    }
                }
                Op::Pick { a, idx } => {
                    if self.needs(*a) {
                        let len = self.value(*a).len();
                        let buf = self.grad_buf(&mut g, *a, len);
                        for (k, &i) in idx.iter().enumerate() {
                            buf[i] += gi[k];
                        }
                    }
                }
                Op::Sum(a) => {
                    let len = self.value(*a).len();
                    let g0 = gi[0];
                    self.accumulate_with(&mut g, *a, len, |_| g0);
                }
                Op::Reshape(a) => self.accumulate(&mut g, *a, &gi),
            }
        }
        Ok(())
    }

    fn grad_buf<'g>(&self, g: &'g mut [Option<Vec<T>>], v: Var, len: usize) -> &'g mut [T] {
        g[v.ix()].get_or_insert_with(|| vec![T::ZERO; len])
    }

    fn accumulate(&self, g: &mut [Option<Vec<T>>], v: Var, src: &[T]) {
        if !self.needs(v) {
            return;
        }
        match &mut g[v.ix()] {
            Some(buf) => {
                for (d, s) in buf.iter_mut().zip(src) {
                    *d += *s;
                }
            }
            slot @ None => *slot = Some(src.to_vec()),
        }
    }

    fn accumulate_with(
        &self,
        g: &mut [Option<Vec<T>>],
        v: Var,
        len: usize,
        f: impl Fn(usize) -> T,
    ) {
        if !self.needs(v) {
            return;
        }
        let buf = self.grad_buf(g, v, len);
        for (k, d) in buf.iter_mut().enumerate() {
            *d += f(k);
        }
    }

    /// Fails with the name of the first offending operation if any forward
    /// value so far was non-finite.
    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite {
            Some(op) => Err(Error::NonFinite { op }),
            None => Ok(()),
        }
    }
}
