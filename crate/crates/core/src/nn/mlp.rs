//! Declarative layer stacks and their forward/backward passes.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{dropout_forward, linear_forward, Activation, LinearLayer, Mode};
use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    Linear {
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
    },
    Dropout {
        p: f64,
    },
}

impl LayerSpec {
    pub fn linear(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        LayerSpec::Linear {
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn dropout(p: f64) -> Self {
        LayerSpec::Dropout { p }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Linear {
                in_dim,
                out_dim,
                activation,
            } => write!(f, "linear({in_dim},{out_dim},{activation})"),
            LayerSpec::Dropout { p } => write!(f, "dropout({p})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    pub layers: Vec<LayerSpec>,
}

impl MlpSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = Self { layers };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks dimension chaining and dropout probabilities; returns `(in, out)`.
    pub fn validate(&self) -> Result<(usize, usize)> {
        let mut input = None;
        let mut current: Option<usize> = None;
        for (i, layer) in self.layers.iter().enumerate() {
            match *layer {
                LayerSpec::Dropout { p } => {
                    if !(0.0..1.0).contains(&p) {
                        return Err(Error::InvalidSpec(format!(
                            "layer {i}: dropout probability {p} outside [0, 1)"
                        )));
                    }
                }
                LayerSpec::Linear {
                    in_dim, out_dim, ..
                } => {
                    if in_dim == 0 || out_dim == 0 {
                        return Err(Error::InvalidSpec(format!("layer {i}: zero dimension")));
                    }
                    if let Some(prev) = current {
                        if prev != in_dim {
                            return Err(Error::InvalidSpec(format!(
                                "layer {i}: expects input {in_dim}, previous layer yields {prev}"
                            )));
                        }
                    }
                    input.get_or_insert(in_dim);
                    current = Some(out_dim);
                }
            }
        }
        match (input, current) {
            (Some(i), Some(o)) => Ok((i, o)),
            _ => Err(Error::InvalidSpec("no linear layer".into())),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.validate().map(|d| d.0).unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.validate().map(|d| d.1).unwrap_or(0)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                LayerSpec::Linear {
                    in_dim, out_dim, ..
                } => in_dim * out_dim + out_dim,
                LayerSpec::Dropout { .. } => 0,
            })
            .sum()
    }
}

impl fmt::Display for MlpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layers.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

enum LayerCache {
    Linear { input: Tensor, output: Tensor },
    Dropout { mask: Option<Vec<f64>> },
}

/// A feed-forward stack with parameters, accumulated gradients and the
/// activations of the most recent training forward pass.
pub struct Mlp {
    spec: MlpSpec,
    linears: Vec<LinearLayer>,
    grads: Vec<LinearLayer>,
    cache: Option<Vec<LayerCache>>,
}

impl fmt::Debug for Mlp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mlp")
            .field("spec", &self.spec.to_string())
            .finish()
    }
}

impl Clone for Mlp {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            linears: self.linears.clone(),
            grads: self.grads.clone(),
            cache: None,
        }
    }
}

/// Builds a network with weights uniform in `±sqrt(1/in)` and zero biases.
pub fn build_mlp(spec: &MlpSpec, init_seed: u64) -> Result<Mlp> {
    Mlp::init(spec, &mut ChaCha8Rng::seed_from_u64(init_seed))
}

impl Mlp {
    pub fn init(spec: &MlpSpec, rng: &mut dyn RngCore) -> Result<Self> {
        spec.validate()?;
        let mut linears = Vec::new();
        for layer in &spec.layers {
            if let LayerSpec::Linear {
                in_dim, out_dim, ..
            } = *layer
            {
                let bound = (1.0 / in_dim as f64).sqrt();
                let weight = (0..in_dim * out_dim)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect();
                linears.push(LinearLayer::new(
                    in_dim,
                    out_dim,
                    weight,
                    vec![0.0; out_dim],
                )?);
            }
        }
        let grads = linears
            .iter()
            .map(|l| LinearLayer::zeros(l.in_dim, l.out_dim))
            .collect();
        Ok(Self {
            spec: spec.clone(),
            linears,
            grads,
            cache: None,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn linears(&self) -> &[LinearLayer] {
        &self.linears
    }

    pub fn linears_mut(&mut self) -> &mut [LinearLayer] {
        &mut self.linears
    }

    /// Accumulated gradients, shaped like [`Mlp::linears`].
    pub fn grads(&self) -> &[LinearLayer] {
        &self.grads
    }

    pub fn parameter_count(&self) -> usize {
        self.linears.iter().map(LinearLayer::parameter_count).sum()
    }

    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            g.weight.iter_mut().for_each(|x| *x = 0.0);
            g.bias.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// All parameters in declaration order: per linear layer, weight then bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.linears {
            out.extend_from_slice(&l.weight);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Loads parameters from the front of `params`, returning how many were consumed.
    pub fn load_flat_params(&mut self, params: &[f64]) -> Result<usize> {
        let needed = self.parameter_count();
        if params.len() < needed {
            return Err(Error::ShapeMismatch {
                op: "load parameters",
                lhs: vec![needed],
                rhs: vec![params.len()],
            });
        }
        let mut pos = 0;
        for l in &mut self.linears {
            let w = l.weight.len();
            l.weight.copy_from_slice(&params[pos..pos + w]);
            pos += w;
            let b = l.bias.len();
            l.bias.copy_from_slice(&params[pos..pos + b]);
            pos += b;
        }
        Ok(pos)
    }

    /// `(parameter, gradient)` slot pairs for an optimizer, in declaration order.
    pub fn param_slots(&mut self) -> Vec<(&mut [f64], &[f64])> {
        let mut out = Vec::with_capacity(2 * self.linears.len());
        for (l, g) in self.linears.iter_mut().zip(&self.grads) {
            out.push((l.weight.as_mut_slice(), g.weight.as_slice()));
            out.push((l.bias.as_mut_slice(), g.bias.as_slice()));
        }
        out
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let in_dim = self.spec.input_dim();
        if x.shape().len() != 2 || x.cols() != in_dim {
            return Err(Error::ShapeMismatch {
                op: "mlp input",
                lhs: x.shape().to_vec(),
                rhs: vec![in_dim],
            });
        }
        Ok(())
    }

    /// Forward pass that records what [`Mlp::backward`] needs.
    pub fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor> {
        self.check_input(x)?;
        let mut cache = Vec::with_capacity(self.spec.layers.len());
        let mut h = x.clone();
        let mut li = 0;
        for (i, layer) in self.spec.layers.iter().enumerate() {
            match *layer {
                LayerSpec::Linear { activation, .. } => {
                    let mut y = linear_forward(&self.linears[li], &h)?;
                    y.data_mut()
                        .iter_mut()
                        .for_each(|v| *v = activation.apply(*v));
                    y.check_finite(&format!("layer {i} ({layer})"))?;
                    cache.push(LayerCache::Linear {
                        input: std::mem::replace(&mut h, y.clone()),
                        output: y,
                    });
                    li += 1;
                }
                LayerSpec::Dropout { p } => {
                    let (y, mask) = dropout_forward(p, &h, mode, rng);
                    h = y;
                    cache.push(LayerCache::Dropout { mask });
                }
            }
        }
        self.cache = Some(cache);
        Ok(h)
    }

    /// Eval-mode forward pass without recording; a pure function of parameters and input.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = x.clone();
        let mut li = 0;
        for (i, layer) in self.spec.layers.iter().enumerate() {
            if let LayerSpec::Linear { activation, .. } = *layer {
                h = linear_forward(&self.linears[li], &h)?;
                h.data_mut()
                    .iter_mut()
                    .for_each(|v| *v = activation.apply(*v));
                h.check_finite(&format!("layer {i} ({layer})"))?;
                li += 1;
            }
        }
        Ok(h)
    }

    /// Back-propagates `grad_output` through the recorded forward pass, adding
    /// parameter gradients into [`Mlp::grads`]. Returns the gradient with respect
    /// to the input. The recording is consumed.
    pub fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let cache = self.cache.take().ok_or(Error::BackwardBeforeForward)?;
        let mut grad = grad_output.clone();
        let mut li = self.linears.len();
        for (layer, entry) in self.spec.layers.iter().zip(cache).rev() {
            match (layer, entry) {
                (LayerSpec::Linear { activation, .. }, LayerCache::Linear { input, output }) => {
                    li -= 1;
                    if grad.shape() != output.shape() {
                        return Err(Error::ShapeMismatch {
                            op: "backward",
                            lhs: grad.shape().to_vec(),
                            rhs: output.shape().to_vec(),
                        });
                    }
                    for (g, y) in grad.data_mut().iter_mut().zip(output.data()) {
                        *g *= activation.derivative_from_output(*y);
                    }
                    let layer = &self.linears[li];
                    let gl = &mut self.grads[li];
                    let (n, in_dim, out_dim) = (input.rows(), layer.in_dim, layer.out_dim);
                    // dW += gradᵀ · input
                    gemm(
                        out_dim,
                        n,
                        in_dim,
                        1.0,
                        grad.data(),
                        true,
                        input.data(),
                        false,
                        1.0,
                        &mut gl.weight,
                    );
                    for r in 0..n {
                        for (b, g) in gl.bias.iter_mut().zip(grad.row(r)) {
                            *b += g;
                        }
                    }
                    // dx = grad · W
                    let mut dx = vec![0.0; n * in_dim];
                    gemm(
                        n,
                        out_dim,
                        in_dim,
                        1.0,
                        grad.data(),
                        false,
                        &layer.weight,
                        false,
                        0.0,
                        &mut dx,
                    );
                    grad = Tensor::matrix(n, in_dim, dx)?;
                }
                (LayerSpec::Dropout { .. }, LayerCache::Dropout { mask }) => {
                    if let Some(mask) = mask {
                        grad.data_mut()
                            .iter_mut()
                            .zip(&mask)
                            .for_each(|(g, m)| *g *= m);
                    }
                }
                _ => unreachable!("cache entries mirror the layer list"),
            }
        }
        Ok(grad)
    }
}
