use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::lstm::Targets;
use super::params::Parameters;
use super::{HeadKind, ModelError, SequenceModel, Step};
use crate::scalar::Scalar;

/// Minibatches are split into chunks of this many instances for gradient
/// computation. The chunking is fixed so results do not depend on the
/// number of worker threads.
pub const TRAIN_CHUNK: usize = 500;
pub const VALIDATION_CHUNK: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Target {
    Binary(bool),
    Class(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub steps: &'a [Step],
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's minibatches, before each update.
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    /// Positive-class F1 (binary) or top-1 accuracy (multiclass).
    pub validation_metric: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub model: SequenceModel<T>,
    pub history: Vec<EpochRecord>,
}

impl<T> TrainOutcome<T> {
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.train_loss).collect()
    }
}

enum OwnedTargets {
    Binary(Vec<f64>),
    Classes(Vec<usize>),
}

impl OwnedTargets {
    fn of(examples: &[&Example]) -> Self {
        match examples.first().map(|e| e.target) {
            Some(Target::Class(_)) => OwnedTargets::Classes(
                examples
                    .iter()
                    .map(|e| match e.target {
                        Target::Class(c) => c,
                        Target::Binary(_) => unreachable!("mixed targets rejected earlier"),
                    })
                    .collect(),
            ),
            _ => OwnedTargets::Binary(
                examples
                    .iter()
                    .map(|e| match e.target {
                        Target::Binary(b) => f64::from(u8::from(b)),
                        Target::Class(_) => unreachable!("mixed targets rejected earlier"),
                    })
                    .collect(),
            ),
        }
    }

    fn view(&self) -> Targets<'_> {
        match self {
            OwnedTargets::Binary(v) => Targets::Binary(v),
            OwnedTargets::Classes(v) => Targets::Classes(v),
        }
    }
}

fn check_examples<T: Scalar>(model: &SequenceModel<T>, examples: &[Example]) -> Result<(), ModelError> {
    for ex in examples {
        match (model.config.head, ex.target) {
            (HeadKind::Binary, Target::Binary(_)) => {}
            (HeadKind::Multiclass, Target::Class(c)) if c < model.config.vocab_size => {}
            (HeadKind::Multiclass, Target::Class(c)) => {
                return Err(ModelError::IndexOutOfVocabulary {
                    index: c,
                    vocab: model.config.vocab_size,
                })
            }
            _ => return Err(ModelError::TargetMismatch(model.config.head)),
        }
        model.check_sequence(ex.steps)?;
    }
    Ok(())
}

/// Sum of losses and gradient of `scale × Σ loss` over one chunk.
fn chunk_gradient<T: Scalar>(
    model: &SequenceModel<T>,
    chunk: &[&Example],
    scale: T,
) -> (Parameters<T>, f64) {
    let seqs: Vec<&[Step]> = chunk.iter().map(|e| e.steps).collect();
    let targets = OwnedTargets::of(chunk);
    let cache = super::lstm::forward_batch(&model.params, model.config.head, &seqs);
    let loss: f64 = super::lstm::losses(&cache, &targets.view())
        .into_iter()
        .map(Scalar::as_f64)
        .sum();
    (model.backward_scaled(&cache, &targets.view(), scale), loss)
}

/// Validation loss and metric over a held-out set.
fn validate<T: Scalar>(model: &SequenceModel<T>, held_out: &[&Example]) -> (f64, f64) {
    let parts: Vec<(f64, [u64; 4])> = held_out
        .par_chunks(VALIDATION_CHUNK)
        .map(|chunk| {
            let seqs: Vec<&[Step]> = chunk.iter().map(|e| e.steps).collect();
            let targets = OwnedTargets::of(chunk);
            let cache = super::lstm::forward_batch(&model.params, model.config.head, &seqs);
            let loss: f64 = super::lstm::losses(&cache, &targets.view())
                .into_iter()
                .map(Scalar::as_f64)
                .sum();
            // [tp, fp, fn, correct]
            let mut counts = [0u64; 4];
            for (row, ex) in cache.outputs.outer_iter().zip(chunk) {
                match ex.target {
                    Target::Binary(label) => {
                        let predicted = row[0].as_f64() > 0.5;
                        match (predicted, label) {
                            (true, true) => counts[0] += 1,
                            (true, false) => counts[1] += 1,
                            (false, true) => counts[2] += 1,
                            (false, false) => {}
                        }
                    }
                    Target::Class(class) => {
                        // argmax over real languages, lowest index on ties
                        let mut best = usize::from(row.len() > 1);
                        for j in best + 1..row.len() {
                            if row[j] > row[best] {
                                best = j;
                            }
                        }
                        if best == class {
                            counts[3] += 1;
                        }
                    }
                }
            }
            (loss, counts)
        })
        .collect();

    let mut loss = 0.0;
    let mut c = [0u64; 4];
    for (l, counts) in parts {
        loss += l;
        for i in 0..4 {
            c[i] += counts[i];
        }
    }
    let n = held_out.len() as f64;
    let metric = match model.config.head {
        HeadKind::Binary => {
            let denom = 2 * c[0] + c[1] + c[2];
            if denom == 0 {
                0.0
            } else {
                2.0 * c[0] as f64 / denom as f64
            }
        }
        HeadKind::Multiclass => c[3] as f64 / n,
    };
    (loss / n, metric)
}

/// Minibatch training with a seeded shuffle and a held-out validation tail.
///
/// All hyperparameters come from `model.config`. The validation set is the
/// last `validation_fraction` of one seeded shuffle; the training part is
/// reshuffled every epoch.
pub fn train<T: Scalar>(
    model: SequenceModel<T>,
    examples: &[Example],
) -> Result<TrainOutcome<T>, ModelError> {
    let mut model = model;
    if examples.is_empty() {
        return Err(ModelError::EmptyInstances);
    }
    check_examples(&model, examples)?;
    let cfg = model.config.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let n_val = (examples.len() as f64 * cfg.validation_fraction).floor() as usize;
    let n_train = examples.len() - n_val;
    if n_train == 0 {
        return Err(ModelError::EmptyInstances);
    }
    let mut training: Vec<&Example> = order[..n_train].iter().map(|&i| &examples[i]).collect();
    let held_out: Vec<&Example> = order[n_train..].iter().map(|&i| &examples[i]).collect();

    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        training.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in training.chunks(cfg.batch_size) {
            let scale = T::one() / T::of_usize(batch.len());
            let parts: Vec<(Parameters<T>, f64)> = batch
                .par_chunks(TRAIN_CHUNK)
                .map(|chunk| chunk_gradient(&model, chunk, scale))
                .collect();
            let mut parts = parts.into_iter();
            let (mut grads, mut batch_loss) = parts.next().expect("nonempty batch");
            for (g, l) in parts {
                grads.accumulate(&g);
                batch_loss += l;
            }
            loss_sum += batch_loss;
            model.optimizer_step(&grads)?;
        }
        let (validation_loss, validation_metric) = if held_out.is_empty() {
            (None, None)
        } else {
            let (l, m) = validate(&model, &held_out);
            (Some(l), Some(m))
        };
        history.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / n_train as f64,
            validation_loss,
            validation_metric,
        });
        if let (Some(target), Some(metric)) = (cfg.stop_at_validation_metric, validation_metric) {
            if metric >= target {
                break;
            }
        }
    }
    Ok(TrainOutcome { model, history })
}
