//! Batched forward pass and backpropagation through time.
//!
//! Each step's pre-activations are one GEMM per weight matrix over the whole
//! batch: `Z = X·W_in + H_prev·W_hid + b`.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Axis};

use super::params::Parameters;
use super::{HeadKind, Step};
use crate::scalar::Scalar;

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

struct LayerCache<T> {
    /// Per step, `B × in_width`.
    inputs: Vec<Array2<T>>,
    /// `h[t]` is the state entering step `t`; `h[K]` is the final state.
    h: Vec<Array2<T>>,
    c: Vec<Array2<T>>,
    /// Per step, activated gates `B × 4H`.
    gates: Vec<Array2<T>>,
    tanh_c: Vec<Array2<T>>,
}

/// Activations retained by a forward pass for the backward pass.
pub struct BatchCache<T> {
    /// `tokens[t][b]`: language index of instance `b` at step `t`.
    tokens: Vec<Vec<usize>>,
    layers: Vec<LayerCache<T>>,
    head: HeadKind,
    /// Head logits, `B × C`.
    pub logits: Array2<T>,
    /// Sigmoid (binary) or softmax (multiclass) outputs, `B × C`.
    pub outputs: Array2<T>,
}

impl<T: Scalar> BatchCache<T> {
    pub fn batch_size(&self) -> usize {
        self.outputs.nrows()
    }

    /// Final hidden state of the top layer.
    pub fn final_hidden(&self) -> &Array2<T> {
        let top = self.layers.last().expect("at least one layer");
        top.h.last().expect("at least one step")
    }
}

/// Supervision for a batch.
#[derive(Clone, Copy, Debug)]
pub enum Targets<'a> {
    /// Probabilities in `[0, 1]` (hard labels are 0 or 1).
    Binary(&'a [f64]),
    /// Class indices below the vocabulary size.
    Classes(&'a [usize]),
}

impl Targets<'_> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Binary(t) => t.len(),
            Targets::Classes(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Run the stack over `batch`; every sequence must have the same length and
/// valid language indices (checked by the caller).
pub(crate) fn forward_batch<T: Scalar>(
    params: &Parameters<T>,
    head: HeadKind,
    batch: &[&[Step]],
) -> BatchCache<T> {
    let b = batch.len();
    let steps = batch.first().map_or(0, |s| s.len());
    let dims = params.dims();
    let (e, h) = (dims.embed, dims.hidden);

    let tokens: Vec<Vec<usize>> = (0..steps)
        .map(|t| batch.iter().map(|seq| seq[t].language).collect())
        .collect();

    // Layer-0 inputs: embedding row followed by the delta feature.
    let mut inputs: Vec<Array2<T>> = (0..steps)
        .map(|t| {
            let mut x = Array2::zeros((b, e + 1));
            for (row, seq) in x.outer_iter_mut().zip(batch) {
                let row = row.into_slice().expect("standard layout");
                let emb = params.embedding.row(seq[t].language);
                row[..e].copy_from_slice(emb.as_slice().expect("standard layout"));
                row[e] = T::of(seq[t].delta);
            }
            x
        })
        .collect();

    let mut layers = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let mut hs = vec![Array2::zeros((b, h))];
        let mut cs = vec![Array2::zeros((b, h))];
        let mut gates_all = Vec::with_capacity(steps);
        let mut tanh_all = Vec::with_capacity(steps);
        for x in &inputs {
            let mut z = Array2::zeros((b, 4 * h));
            general_mat_mul(T::one(), x, &layer.w_input, T::zero(), &mut z);
            general_mat_mul(T::one(), &hs[hs.len() - 1], &layer.w_hidden, T::one(), &mut z);
            z += &layer.bias;

            let c_prev = &cs[cs.len() - 1];
            let mut c_new = Array2::zeros((b, h));
            let mut tanh_c = Array2::zeros((b, h));
            let mut h_new = Array2::zeros((b, h));
            {
                let zs = z.as_slice_mut().expect("standard layout");
                let cp = c_prev.as_slice().expect("standard layout");
                let cn = c_new.as_slice_mut().expect("standard layout");
                let tc = tanh_c.as_slice_mut().expect("standard layout");
                let hn = h_new.as_slice_mut().expect("standard layout");
                for r in 0..b {
                    let g = &mut zs[r * 4 * h..(r + 1) * 4 * h];
                    for v in &mut g[..3 * h] {
                        *v = sigmoid(*v);
                    }
                    for v in &mut g[3 * h..] {
                        *v = v.tanh();
                    }
                    for j in 0..h {
                        let (i_g, f_g, o_g, c_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                        let k = r * h + j;
                        cn[k] = f_g * cp[k] + i_g * c_g;
                        tc[k] = cn[k].tanh();
                        hn[k] = o_g * tc[k];
                    }
                }
            }
            gates_all.push(z);
            tanh_all.push(tanh_c);
            cs.push(c_new);
            hs.push(h_new);
        }
        let next_inputs: Vec<Array2<T>> = hs[1..].to_vec();
        layers.push(LayerCache {
            inputs: std::mem::replace(&mut inputs, next_inputs),
            h: hs,
            c: cs,
            gates: gates_all,
            tanh_c: tanh_all,
        });
    }

    let top = &layers.last().expect("at least one layer").h;
    let h_last = &top[top.len() - 1];
    let mut logits = Array2::zeros((b, params.head_b.len()));
    general_mat_mul(T::one(), h_last, &params.head_w, T::zero(), &mut logits);
    logits += &params.head_b;

    let mut outputs = logits.clone();
    match head {
        HeadKind::Binary => outputs.mapv_inplace(sigmoid),
        HeadKind::Multiclass => {
            for mut row in outputs.outer_iter_mut() {
                let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                row.mapv_inplace(|v| (v - max).exp());
                let sum = row.sum();
                row.mapv_inplace(|v| v / sum);
            }
        }
    }

    BatchCache {
        tokens,
        layers,
        head,
        logits,
        outputs,
    }
}

/// Per-instance cross-entropy computed stably from the logits.
pub(crate) fn losses<T: Scalar>(cache: &BatchCache<T>, targets: &Targets) -> Vec<T> {
    match (cache.head, targets) {
        (HeadKind::Binary, Targets::Binary(ys)) => cache
            .logits
            .column(0)
            .iter()
            .zip(ys.iter())
            .map(|(&z, &y)| {
                // max(z, 0) - z·y + ln(1 + e^{-|z|})
                let y = T::of(y);
                z.max(T::zero()) - z * y + (-z.abs()).exp().ln_1p()
            })
            .collect(),
        (HeadKind::Multiclass, Targets::Classes(cls)) => cache
            .logits
            .outer_iter()
            .zip(cls.iter())
            .map(|(row, &c)| {
                let max = row.iter().copied().fold(T::neg_infinity(), T::max);
                let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
                lse - row[c]
            })
            .collect(),
        _ => panic!("targets do not match the model head"),
    }
}

/// Gradient of `scale × Σ_b loss_b` with respect to every parameter.
pub(crate) fn backward_batch<T: Scalar>(
    params: &Parameters<T>,
    cache: &BatchCache<T>,
    targets: &Targets,
    scale: T,
) -> Parameters<T> {
    let mut grads = params.zeros_like();
    let b = cache.batch_size();
    let h = params.dims().hidden;
    let e = params.dims().embed;

    // dL/dlogits = output - target for both heads.
    let mut d_logits = cache.outputs.clone();
    match targets {
        Targets::Binary(ys) => {
            for (v, &y) in d_logits.column_mut(0).iter_mut().zip(ys.iter()) {
                *v -= T::of(y);
            }
        }
        Targets::Classes(cls) => {
            for (mut row, &c) in d_logits.outer_iter_mut().zip(cls.iter()) {
                row[c] -= T::one();
            }
        }
    }
    d_logits.mapv_inplace(|v| v * scale);

    let h_last = cache.final_hidden();
    general_mat_mul(T::one(), &h_last.t(), &d_logits, T::zero(), &mut grads.head_w);
    grads.head_b = d_logits.sum_axis(Axis(0));
    let mut d_h_top = Array2::zeros((b, h));
    general_mat_mul(T::one(), &d_logits, &params.head_w.t(), T::zero(), &mut d_h_top);

    let steps = cache.tokens.len();
    // Gradient arriving at each step's output from above (head or next layer).
    let mut from_above: Vec<Array2<T>> = vec![Array2::zeros((b, h)); steps];
    if steps > 0 {
        from_above[steps - 1] = d_h_top;
    }

    for (l, (layer, lc)) in params.layers.iter().zip(&cache.layers).enumerate().rev() {
        let g = &mut grads.layers[l];
        let in_width = layer.w_input.nrows();
        let mut d_inputs: Vec<Array2<T>> = vec![Array2::zeros((b, in_width)); steps];
        let mut dh_rec: Array2<T> = Array2::zeros((b, h));
        let mut dc_rec: Array2<T> = Array2::zeros((b, h));
        let mut dz = Array2::zeros((b, 4 * h));

        for t in (0..steps).rev() {
            {
                let gates = lc.gates[t].as_slice().expect("standard layout");
                let tc = lc.tanh_c[t].as_slice().expect("standard layout");
                let cp = lc.c[t].as_slice().expect("standard layout");
                let above = from_above[t].as_slice().expect("standard layout");
                let dhr = dh_rec.as_slice().expect("standard layout");
                let dcr = dc_rec.as_slice_mut().expect("standard layout");
                let dzs = dz.as_slice_mut().expect("standard layout");
                for r in 0..b {
                    let gr = &gates[r * 4 * h..(r + 1) * 4 * h];
                    let dzr = &mut dzs[r * 4 * h..(r + 1) * 4 * h];
                    for j in 0..h {
                        let k = r * h + j;
                        let (i_g, f_g, o_g, c_g) = (gr[j], gr[h + j], gr[2 * h + j], gr[3 * h + j]);
                        let dh = above[k] + dhr[k];
                        let dc = dcr[k] + dh * o_g * (T::one() - tc[k] * tc[k]);
                        dzr[j] = dc * c_g * i_g * (T::one() - i_g);
                        dzr[h + j] = dc * cp[k] * f_g * (T::one() - f_g);
                        dzr[2 * h + j] = dh * tc[k] * o_g * (T::one() - o_g);
                        dzr[3 * h + j] = dc * i_g * (T::one() - c_g * c_g);
                        dcr[k] = dc * f_g;
                    }
                }
            }
            general_mat_mul(T::one(), &lc.inputs[t].t(), &dz, T::one(), &mut g.w_input);
            general_mat_mul(T::one(), &lc.h[t].t(), &dz, T::one(), &mut g.w_hidden);
            g.bias += &dz.sum_axis(Axis(0));
            general_mat_mul(T::one(), &dz, &layer.w_input.t(), T::zero(), &mut d_inputs[t]);
            general_mat_mul(T::one(), &dz, &layer.w_hidden.t(), T::zero(), &mut dh_rec);
        }

        if l == 0 {
            for (t, dx) in d_inputs.iter().enumerate() {
                for (r, &token) in cache.tokens[t].iter().enumerate() {
                    let src = dx.row(r);
                    let mut dst = grads.embedding.row_mut(token);
                    for j in 0..e {
                        dst[j] += src[j];
                    }
                }
            }
        } else {
            from_above = d_inputs;
        }
    }
    grads
}
