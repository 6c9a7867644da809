//! Named parameters and the handful of differentiable building blocks the
//! encoder and the recurrent baseline need. Everything random is drawn from
//! explicitly seeded generators so runs are reproducible.

use std::collections::{BTreeMap, HashMap};

use candle_core::{DType, Device, Tensor, Var, D};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

const INIT_STD: f64 = 0.02;

/// Parameters keyed by checkpoint name, iterated in name order.
#[derive(Debug, Clone)]
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
    dtype: DType,
    device: Device,
}

/// Where new parameters come from.
pub(crate) enum Source<'a> {
    Random(&'a mut ChaCha8Rng),
    Loaded(&'a mut HashMap<String, Tensor>),
}

impl ParamStore {
    pub fn new(dtype: DType) -> Self {
        Self {
            vars: BTreeMap::new(),
            dtype,
            device: Device::Cpu,
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    pub fn vars(&self) -> Vec<Var> {
        self.vars.values().cloned().collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    pub fn count_with_prefix(&self, prefix: &str) -> usize {
        self.vars
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(_, v)| v.elem_count())
            .sum()
    }

    pub fn tensors(&self) -> HashMap<String, Tensor> {
        self.vars
            .iter()
            .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
            .collect()
    }

    fn insert(&mut self, name: &str, tensor: Tensor) -> Result<Var> {
        let var = Var::from_tensor(&tensor.to_dtype(self.dtype)?)?;
        self.vars.insert(name.to_string(), var.clone());
        Ok(var)
    }

    fn random(&self, rng: &mut ChaCha8Rng, shape: &[usize], init: Init) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = match init {
            Init::Normal => {
                let normal = Normal::new(0.0, INIT_STD).expect("valid std");
                (0..n).map(|_| normal.sample(rng)).collect()
            }
            Init::Uniform(bound) => (0..n).map(|_| rng.random_range(-bound..bound)).collect(),
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
        };
        Ok(Tensor::from_vec(data, shape, &self.device)?.to_dtype(self.dtype)?)
    }

    /// Creates (or takes from `source`) the parameter `name` of `shape`.
    pub(crate) fn param(
        &mut self,
        source: &mut Source<'_>,
        name: &str,
        shape: &[usize],
        init: Init,
    ) -> Result<Var> {
        let tensor = match source {
            Source::Random(rng) => self.random(rng, shape, init)?,
            Source::Loaded(map) => {
                let t = map.remove(name).ok_or_else(|| Error::CheckpointUnavailable {
                    encoder_id: String::new(),
                    reason: format!("weights lack tensor {name}"),
                })?;
                if t.dims() != shape {
                    return Err(Error::CheckpointUnavailable {
                        encoder_id: String::new(),
                        reason: format!("tensor {name} has shape {:?}, expected {shape:?}", t.dims()),
                    });
                }
                t
            }
        };
        self.insert(name, tensor)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Init {
    Normal,
    Uniform(f64),
    Zeros,
    Ones,
}

/// Training-time randomness. `None` means inference: dropout is the identity.
pub struct ForwardMode<'a> {
    rng: Option<&'a mut ChaCha8Rng>,
}

impl<'a> ForwardMode<'a> {
    pub fn eval() -> Self {
        Self { rng: None }
    }

    pub fn train(rng: &'a mut ChaCha8Rng) -> Self {
        Self { rng: Some(rng) }
    }

    /// Inverted dropout with a mask drawn from the seeded generator.
    pub fn dropout(&mut self, x: &Tensor, p: f64) -> Result<Tensor> {
        let Some(rng) = self.rng.as_deref_mut() else {
            return Ok(x.clone());
        };
        if p <= 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..x.elem_count())
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?.to_dtype(x.dtype())?;
        Ok(x.mul(&mask)?)
    }
}

/// `y = x W^T + b` with `W` stored `[out, in]` as in the checkpoint format.
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Var,
    pub bias: Var,
}

impl Linear {
    pub(crate) fn new(
        store: &mut ParamStore,
        source: &mut Source<'_>,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Result<Self> {
        Self::with_init(store, source, prefix, in_dim, out_dim, Init::Normal)
    }

    pub(crate) fn with_init(
        store: &mut ParamStore,
        source: &mut Source<'_>,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        init: Init,
    ) -> Result<Self> {
        let weight = store.param(source, &format!("{prefix}.weight"), &[out_dim, in_dim], init)?;
        let bias = store.param(source, &format!("{prefix}.bias"), &[out_dim], Init::Zeros)?;
        Ok(Self { weight, bias })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let w = self.weight.as_tensor().t()?;
        Ok(x.broadcast_matmul(&w)?.broadcast_add(self.bias.as_tensor())?)
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub weight: Var,
    pub bias: Var,
    pub eps: f64,
}

impl LayerNorm {
    pub(crate) fn new(
        store: &mut ParamStore,
        source: &mut Source<'_>,
        prefix: &str,
        dim: usize,
        eps: f64,
    ) -> Result<Self> {
        let weight = store.param(source, &format!("{prefix}.weight"), &[dim], Init::Ones)?;
        let bias = store.param(source, &format!("{prefix}.bias"), &[dim], Init::Zeros)?;
        Ok(Self { weight, bias, eps })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed
            .broadcast_mul(self.weight.as_tensor())?
            .broadcast_add(self.bias.as_tensor())?)
    }
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub weight: Var,
}

impl Embedding {
    pub(crate) fn new(
        store: &mut ParamStore,
        source: &mut Source<'_>,
        name: &str,
        count: usize,
        dim: usize,
    ) -> Result<Self> {
        let weight = store.param(source, name, &[count, dim], Init::Normal)?;
        Ok(Self { weight })
    }

    /// `ids` of any shape `[..]` to `[.., dim]`.
    pub fn forward(&self, ids: &Tensor) -> Result<Tensor> {
        let mut out_dims = ids.dims().to_vec();
        out_dims.push(self.weight.dim(1)?);
        let flat = ids.flatten_all()?;
        let rows = self.weight.as_tensor().index_select(&flat, 0)?;
        Ok(rows.reshape(out_dims)?)
    }

    pub fn row(&self, id: u32) -> Result<Tensor> {
        Ok(self.weight.as_tensor().get(id as usize)?)
    }
}

/// Logistic function composed from differentiable primitives.
pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(x.affine(0.5, 0.0)?.tanh()?.affine(0.5, 0.5)?)
}

/// Mean binary cross entropy on logits, in the overflow-free form
/// `max(z, 0) - z y + log(1 + exp(-|z|))`.
pub fn bce_with_logits(logits: &Tensor, targets: &Tensor) -> Result<Tensor> {
    let relu = logits.relu()?;
    let zy = logits.mul(targets)?;
    let softplus = logits.abs()?.neg()?.exp()?.affine(1.0, 1.0)?.log()?;
    Ok(((relu - zy)? + softplus)?.mean_all()?)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    #[test]
    fn bce_matches_direct_formula() {
        let dev = Device::Cpu;
        let z = [-3.0f64, -0.2, 0.0, 0.7, 40.0];
        let y = [0.0f64, 1.0, 1.0, 0.0, 1.0];
        let logits = Tensor::new(&z, &dev).unwrap();
        let targets = Tensor::new(&y, &dev).unwrap();
        let got = bce_with_logits(&logits, &targets).unwrap().to_scalar::<f64>().unwrap();
        let want: f64 = z
            .iter()
            .zip(&y)
            .map(|(&z, &y)| {
                let p = 1.0 / (1.0 + (-z).exp());
                -(y * p.max(1e-300).ln() + (1.0 - y) * (1.0 - p).max(1e-300).ln())
            })
            .sum::<f64>()
            / z.len() as f64;
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn sigmoid_matches_logistic() {
        let x = Tensor::new(&[-5.0f64, 0.0, 2.5], &Device::Cpu).unwrap();
        let got: Vec<f64> = sigmoid(&x).unwrap().to_vec1().unwrap();
        for (g, x) in got.iter().zip([-5.0f64, 0.0, 2.5]) {
            assert!((g - 1.0 / (1.0 + (-x).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn dropout_is_identity_in_eval() {
        let x = Tensor::ones((4, 4), DType::F64, &Device::Cpu).unwrap();
        let y = ForwardMode::eval().dropout(&x, 0.5).unwrap();
        assert_eq!(y.to_vec2::<f64>().unwrap(), x.to_vec2::<f64>().unwrap());
    }

    #[test]
    fn dropout_is_seeded() {
        let x = Tensor::ones((8, 8), DType::F64, &Device::Cpu).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ForwardMode::train(&mut rng)
                .dropout(&x, 0.3)
                .unwrap()
                .to_vec2::<f64>()
                .unwrap()
        };
        assert_eq!(run(1), run(1));
        assert_ne!(run(1), run(2));
    }

    #[test]
    fn layer_norm_normalizes() {
        let mut store = ParamStore::new(DType::F64);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ln = LayerNorm::new(&mut store, &mut Source::Random(&mut rng), "ln", 4, 1e-12).unwrap();
        let x = Tensor::new(&[[1.0f64, 2.0, 3.0, 4.0]], &Device::Cpu).unwrap();
        let y: Vec<Vec<f64>> = ln.forward(&x).unwrap().to_vec2().unwrap();
        let mean: f64 = y[0].iter().sum::<f64>() / 4.0;
        let var: f64 = y[0].iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-9);
    }
}
