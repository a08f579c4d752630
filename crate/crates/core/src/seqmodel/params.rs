use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HeadKind;
use crate::scalar::Scalar;

/// Weights of one recurrent layer. Gate columns are laid out `[input | forget | output | candidate]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    /// `in_width × 4H`
    pub w_input: Array2<T>,
    /// `H × 4H`
    pub w_hidden: Array2<T>,
    /// `4H`
    pub bias: Array1<T>,
}

/// Every trainable tensor of a [`SequenceModel`](super::SequenceModel).
///
/// The same shape doubles as a gradient set and as optimizer moment storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameters<T> {
    /// `V × E`; row 0 is the padding slot.
    pub embedding: Array2<T>,
    pub layers: Vec<LayerParams<T>>,
    /// `H × C` where `C` is 1 (binary) or `V` (multiclass).
    pub head_w: Array2<T>,
    pub head_b: Array1<T>,
}

/// Shape summary used when laying tensors out in a checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub layers: usize,
    pub outputs: usize,
}

impl Dims {
    pub fn input_width(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embed + 1
        } else {
            self.hidden
        }
    }

    pub fn outputs_for(head: HeadKind, vocab: usize) -> usize {
        match head {
            HeadKind::Binary => 1,
            HeadKind::Multiclass => vocab,
        }
    }
}

impl<T: Scalar> Parameters<T> {
    pub fn zeros(dims: Dims) -> Self {
        let h4 = 4 * dims.hidden;
        Self {
            embedding: Array2::zeros((dims.vocab, dims.embed)),
            layers: (0..dims.layers)
                .map(|l| LayerParams {
                    w_input: Array2::zeros((dims.input_width(l), h4)),
                    w_hidden: Array2::zeros((dims.hidden, h4)),
                    bias: Array1::zeros(h4),
                })
                .collect(),
            head_w: Array2::zeros((dims.hidden, dims.outputs)),
            head_b: Array1::zeros(dims.outputs),
        }
    }

    /// Glorot-uniform weights, zero biases except the forget gate at 1.
    pub(crate) fn glorot(dims: Dims, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(dims);
        let h = dims.hidden;
        fill_uniform(&mut p.embedding, rng);
        for layer in &mut p.layers {
            let (rows, cols) = layer.w_input.dim();
            let limit = (6.0 / (rows + h + cols) as f64).sqrt();
            fill_with_limit(&mut layer.w_input, limit, rng);
            fill_with_limit(&mut layer.w_hidden, limit, rng);
            layer
                .bias
                .slice_mut(ndarray::s![h..2 * h])
                .fill(T::one());
        }
        fill_uniform(&mut p.head_w, rng);
        p
    }

    pub fn dims(&self) -> Dims {
        let (vocab, embed) = self.embedding.dim();
        let (hidden, outputs) = self.head_w.dim();
        Dims {
            vocab,
            embed,
            hidden,
            layers: self.layers.len(),
            outputs,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims())
    }

    /// Flat views of every tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = vec![self.embedding.as_slice().expect("standard layout")];
        for layer in &self.layers {
            out.push(layer.w_input.as_slice().expect("standard layout"));
            out.push(layer.w_hidden.as_slice().expect("standard layout"));
            out.push(layer.bias.as_slice().expect("standard layout"));
        }
        out.push(self.head_w.as_slice().expect("standard layout"));
        out.push(self.head_b.as_slice().expect("standard layout"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = vec![self.embedding.as_slice_mut().expect("standard layout")];
        for layer in &mut self.layers {
            out.push(layer.w_input.as_slice_mut().expect("standard layout"));
            out.push(layer.w_hidden.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.head_w.as_slice_mut().expect("standard layout"));
        out.push(self.head_b.as_slice_mut().expect("standard layout"));
        out
    }

    /// `(rows, cols)` per tensor, matching [`Parameters::tensors`]; vectors report one row.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut out = vec![self.embedding.dim()];
        for layer in &self.layers {
            out.push(layer.w_input.dim());
            out.push(layer.w_hidden.dim());
            out.push((1, layer.bias.len()));
        }
        out.push(self.head_w.dim());
        out.push((1, self.head_b.len()));
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `self += other`, tensor by tensor.
    pub fn accumulate(&mut self, other: &Self) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    /// Read the `index`-th scalar in flat tensor order.
    pub fn get_flat(&self, index: usize) -> T {
        let mut rest = index;
        for t in self.tensors() {
            if rest < t.len() {
                return t[rest];
            }
            rest -= t.len();
        }
        panic!("parameter index {index} out of range")
    }

    pub fn set_flat(&mut self, index: usize, value: T) {
        let mut rest = index;
        for t in self.tensors_mut() {
            if rest < t.len() {
                t[rest] = value;
                return;
            }
            rest -= t.len();
        }
        panic!("parameter index {index} out of range")
    }
}

fn fill_uniform<T: Scalar>(a: &mut Array2<T>, rng: &mut ChaCha8Rng) {
    let (rows, cols) = a.dim();
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    fill_with_limit(a, limit, rng);
}

fn fill_with_limit<T: Scalar>(a: &mut Array2<T>, limit: f64, rng: &mut ChaCha8Rng) {
    for v in a.iter_mut() {
        *v = T::of(rng.random_range(-limit..limit));
    }
}
