use super::params::Parameters;
use super::ModelError;
use crate::scalar::Scalar;

/// Adam first/second moment accumulators and the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Parameters<T>,
    pub v: Parameters<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &Parameters<T>) -> Self {
        Self {
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub(crate) fn step(
        &mut self,
        params: &mut Parameters<T>,
        grads: &Parameters<T>,
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) -> Result<(), ModelError> {
        if grads.shapes() != params.shapes() {
            return Err(ModelError::ShapeMismatch);
        }
        if !grads.all_finite() {
            return Err(ModelError::NonFiniteGradient);
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::of(beta1), T::of(beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let correct1 = T::of(1.0 - beta1.powi(t));
        let correct2 = T::of(1.0 - beta2.powi(t));
        let (lr, eps) = (T::of(lr), T::of(eps));

        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for ((p, g), (m, v)) in tensors {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + one_b1 * g[i];
                v[i] = b2 * v[i] + one_b2 * g[i] * g[i];
                let m_hat = m[i] / correct1;
                let v_hat = v[i] / correct2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
