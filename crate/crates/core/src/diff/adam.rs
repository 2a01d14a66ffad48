use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::params::{Grads, ParamStore};
use super::real::Real;
use super::tensor::Tensor;
use crate::error::{invalid, shape, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for every parameter of one store.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig, params: &ParamStore<T>) -> Result<Self> {
        if !(config.lr > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        let zeros = || {
            params
                .ids()
                .map(|id| {
                    let (r, c) = params.get(id).dims();
                    Tensor::zeros(r, c)
                })
                .collect::<Vec<_>>()
        };
        Ok(Self {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        })
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of every parameter.
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &Grads<T>) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(shape("optimizer state, gradients and parameters differ in count"));
        }
        for id in params.ids() {
            let (p, g) = (params.get(id), grads.get(id));
            if p.dims() != g.dims() || p.dims() != self.m[id.index()].dims() {
                return Err(shape(alloc::format!(
                    "parameter `{}`: {:?} vs gradient {:?}",
                    params.name(id),
                    p.dims(),
                    g.dims()
                )));
            }
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let b1 = T::from_f64(c.beta1);
        let b2 = T::from_f64(c.beta2);
        let bc1 = T::from_f64(1.0 - libm::pow(c.beta1, t as f64));
        let bc2 = T::from_f64(1.0 - libm::pow(c.beta2, t as f64));
        let lr = T::from_f64(c.lr);
        let eps = T::from_f64(c.eps);
        for id in params.ids() {
            let i = id.index();
            let g = grads.get(id).data();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let p = params.get_mut(id).data_mut();
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (T::ONE - b1) * g[k];
                v[k] = b2 * v[k] + (T::ONE - b2) * g[k] * g[k];
                let mh = m[k] / bc1;
                let vh = v[k] / bc2;
                let denom = vh.sqrt() + eps;
                if denom > T::ZERO {
                    p[k] -= lr * mh / denom;
                }
            }
        }
        Ok(())
    }
}
