//! Central finite-difference verification of the analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lstm::Targets;
use super::{init_model, HeadKind, ModelConfig, ModelError, SequenceModel, Step};

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// `|a - b| / max(|a|, |b|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Largest relative discrepancy between `backward` and central differences
/// of the mean batch loss, over every parameter of `model`.
pub fn gradient_check_model(
    model: &SequenceModel<f64>,
    batch: &[&[Step]],
    targets: &Targets,
    step: f64,
) -> Result<f64, ModelError> {
    let cache = model.forward_batch(batch)?;
    let analytic = model.backward(&cache, targets)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for index in 0..model.params.len() {
        let original = model.params.get_flat(index);
        probe.params.set_flat(index, original + step);
        let plus = probe.mean_loss(batch, targets)?;
        probe.params.set_flat(index, original - step);
        let minus = probe.mean_loss(batch, targets)?;
        probe.params.set_flat(index, original);
        let numeric = (plus - minus) / (2.0 * step);
        worst = worst.max(relative_error(analytic.get_flat(index), numeric));
    }
    Ok(worst)
}

/// Random models, inputs and labels drawn from `seed`; returns the maximum
/// relative error over all trials and parameters.
pub fn gradient_check(config: &ModelConfig, seed: u64, trials: usize) -> Result<f64, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let cfg = ModelConfig {
            seed: rng.random(),
            ..config.clone()
        };
        let model = init_model::<f64>(&cfg)?;
        let batch_size = 3;
        let seqs: Vec<Vec<Step>> = (0..batch_size)
            .map(|_| {
                (0..cfg.window)
                    .map(|_| Step::new(rng.random_range(0..cfg.vocab_size), rng.random_range(0.0..3.0)))
                    .collect()
            })
            .collect();
        let batch: Vec<&[Step]> = seqs.iter().map(Vec::as_slice).collect();
        let err = match cfg.head {
            HeadKind::Binary => {
                let ys: Vec<f64> = (0..batch_size).map(|_| f64::from(rng.random_range(0..2u8))).collect();
                gradient_check_model(&model, &batch, &Targets::Binary(&ys), FD_STEP)?
            }
            HeadKind::Multiclass => {
                let cls: Vec<usize> = (0..batch_size).map(|_| rng.random_range(0..cfg.vocab_size)).collect();
                gradient_check_model(&model, &batch, &Targets::Classes(&cls), FD_STEP)?
            }
        };
        worst = worst.max(err);
    }
    Ok(worst)
}
