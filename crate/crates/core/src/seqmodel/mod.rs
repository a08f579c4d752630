//! From-scratch LSTM stack: embedding, one or two gated recurrent layers,
//! sigmoid or softmax head, backpropagation through time and Adam.
//!
//! Everything is generic over [`Scalar`]; results are fully determined by
//! `(seed, data, config)`.

mod checkpoint;
mod gradcheck;
mod lstm;
mod optim;
mod params;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointError};
pub use gradcheck::{gradient_check, gradient_check_model, relative_error};
pub use lstm::{BatchCache, Targets};
pub use optim::AdamState;
pub use params::{Dims, LayerParams, Parameters};
pub use train::{train, EpochRecord, Example, Target, TrainOutcome, VALIDATION_CHUNK};

/// Which output head the model carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// Single sigmoid unit: will the cascade continue?
    Binary,
    /// Softmax over the vocabulary: which edition comes next?
    Multiclass,
}

/// One input position: a language index and its time-delta feature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, f64)", into = "(usize, f64)")]
pub struct Step {
    pub language: usize,
    pub delta: f64,
}

impl Step {
    pub fn new(language: usize, delta: f64) -> Self {
        Self { language, delta }
    }
}

impl From<(usize, f64)> for Step {
    fn from((language, delta): (usize, f64)) -> Self {
        Self { language, delta }
    }
}

impl From<Step> for (usize, f64) {
    fn from(s: Step) -> Self {
        (s.language, s.delta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub head: HeadKind,
    /// Editions plus one padding slot (index 0).
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub window: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    /// Stop once the validation metric reaches this value.
    #[serde(default)]
    pub stop_at_validation_metric: Option<f64>,
}

impl ModelConfig {
    /// Continuation classifier: one recurrent layer, 20 epochs.
    pub fn binary(vocab_size: usize) -> Self {
        Self {
            head: HeadKind::Binary,
            vocab_size,
            embed_dim: 32,
            hidden_dim: 64,
            layers: 1,
            window: 4,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 2000,
            epochs: 20,
            validation_fraction: 0.10,
            seed: 0,
            stop_at_validation_metric: None,
        }
    }

    /// Next-language classifier: two recurrent layers, 200 epochs.
    pub fn next_language(vocab_size: usize) -> Self {
        Self {
            head: HeadKind::Multiclass,
            layers: 2,
            epochs: 200,
            ..Self::binary(vocab_size)
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            vocab: self.vocab_size,
            embed: self.embed_dim,
            hidden: self.hidden_dim,
            layers: self.layers,
            outputs: Dims::outputs_for(self.head, self.vocab_size),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        for (name, v) in [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("layers", self.layers),
            ("window", self.window),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation_fraction {} outside [0, 1)",
                self.validation_fraction
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)".into());
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("language index {index} outside vocabulary of size {vocab}")]
    IndexOutOfVocabulary { index: usize, vocab: usize },
    #[error("sequence length {got} differs from window {window}")]
    WrongSequenceLength { got: usize, window: usize },
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("gradient shapes do not match the model")]
    ShapeMismatch,
    #[error("no training instances")]
    EmptyInstances,
    #[error("target does not match the {0:?} head")]
    TargetMismatch(HeadKind),
}

/// Parameters, configuration and optimizer state of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceModel<T> {
    pub config: ModelConfig,
    pub params: Parameters<T>,
    pub optimizer: AdamState<T>,
}

/// Initialize a model deterministically from `config.seed`.
pub fn init_model<T: Scalar>(config: &ModelConfig) -> Result<SequenceModel<T>, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = Parameters::glorot(config.dims(), &mut rng);
    Ok(SequenceModel {
        config: config.clone(),
        optimizer: AdamState::new(&params),
        params,
    })
}

impl<T: Scalar> SequenceModel<T> {
    /// A model with every weight and bias zero.
    pub fn zeroed(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let params = Parameters::zeros(config.dims());
        Ok(Self {
            config: config.clone(),
            optimizer: AdamState::new(&params),
            params,
        })
    }

    pub fn head(&self) -> HeadKind {
        self.config.head
    }

    fn check_sequence(&self, seq: &[Step]) -> Result<(), ModelError> {
        if seq.len() != self.config.window {
            return Err(ModelError::WrongSequenceLength {
                got: seq.len(),
                window: self.config.window,
            });
        }
        if let Some(step) = seq.iter().find(|s| s.language >= self.config.vocab_size) {
            return Err(ModelError::IndexOutOfVocabulary {
                index: step.language,
                vocab: self.config.vocab_size,
            });
        }
        Ok(())
    }

    /// Forward pass over a batch of equal-length sequences.
    pub fn forward_batch(&self, batch: &[&[Step]]) -> Result<BatchCache<T>, ModelError> {
        for seq in batch {
            self.check_sequence(seq)?;
        }
        Ok(lstm::forward_batch(&self.params, self.config.head, batch))
    }

    /// Forward pass over one sequence; returns the head output and the cache.
    pub fn forward(&self, sequence: &[Step]) -> Result<(Vec<T>, BatchCache<T>), ModelError> {
        let cache = self.forward_batch(&[sequence])?;
        let output = cache.outputs.row(0).to_vec();
        Ok((output, cache))
    }

    pub fn predict_proba(&self, sequence: &[Step]) -> Result<Vec<T>, ModelError> {
        Ok(self.forward(sequence)?.0)
    }

    fn check_targets(&self, targets: &Targets) -> Result<(), ModelError> {
        match (self.config.head, targets) {
            (HeadKind::Binary, Targets::Binary(_)) => Ok(()),
            (HeadKind::Multiclass, Targets::Classes(cls)) => {
                match cls.iter().find(|&&c| c >= self.config.vocab_size) {
                    Some(&index) => Err(ModelError::IndexOutOfVocabulary {
                        index,
                        vocab: self.config.vocab_size,
                    }),
                    None => Ok(()),
                }
            }
            _ => Err(ModelError::TargetMismatch(self.config.head)),
        }
    }

    /// Per-instance losses for a cache produced by [`Self::forward_batch`].
    pub fn losses(&self, cache: &BatchCache<T>, targets: &Targets) -> Result<Vec<T>, ModelError> {
        self.check_targets(targets)?;
        Ok(lstm::losses(cache, targets))
    }

    /// Mean loss over a batch.
    pub fn mean_loss(&self, batch: &[&[Step]], targets: &Targets) -> Result<T, ModelError> {
        let cache = self.forward_batch(batch)?;
        let l = self.losses(&cache, targets)?;
        Ok(l.iter().copied().sum::<T>() / T::of_usize(l.len()))
    }

    /// Gradient of the mean batch loss.
    pub fn backward(&self, cache: &BatchCache<T>, targets: &Targets) -> Result<Parameters<T>, ModelError> {
        self.check_targets(targets)?;
        if targets.len() != cache.batch_size() {
            return Err(ModelError::ShapeMismatch);
        }
        let scale = T::one() / T::of_usize(cache.batch_size());
        Ok(lstm::backward_batch(&self.params, cache, targets, scale))
    }

    /// Gradient of `scale × Σ loss` for a batch.
    pub(crate) fn backward_scaled(&self, cache: &BatchCache<T>, targets: &Targets, scale: T) -> Parameters<T> {
        lstm::backward_batch(&self.params, cache, targets, scale)
    }

    /// One Adam update with bias correction.
    pub fn optimizer_step(&mut self, gradients: &Parameters<T>) -> Result<(), ModelError> {
        let cfg = &self.config;
        let (lr, b1, b2, eps) = (cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
        self.optimizer.step(&mut self.params, gradients, lr, b1, b2, eps)
    }
}
