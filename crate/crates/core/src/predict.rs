//! Supervised window instances, the temporal split, and evaluation of the
//! continuation and next-language tasks.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{Cascade, CascadeDataset};
use crate::ids::{Edition, ItemId, UnixSeconds, SECONDS_PER_DAY};
use crate::scalar::Scalar;
use crate::seqmodel::{Example, HeadKind, ModelError, SequenceModel, Step, Target};

/// 2008-01-01T00:00:00Z
pub const TRAIN_START: UnixSeconds = 1_199_145_600;
/// 2015-01-01T00:00:00Z
pub const TRAIN_END: UnixSeconds = 1_420_070_400;
pub const TEST_START: UnixSeconds = TRAIN_END;
/// Default continuation timeout: one year.
pub const ONE_YEAR: UnixSeconds = 365 * SECONDS_PER_DAY;
pub const DEFAULT_WINDOW: usize = 4;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PredictError {
    #[error("invalid split: need train_start < train_end <= test_start")]
    InvalidSplit,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("edition {0} is not in the vocabulary")]
    UnknownEdition(Edition),
    #[error("requested {requested} instances but only {available} exist")]
    InsufficientInstances { requested: usize, available: usize },
    #[error("every language has already been seen")]
    AllLanguagesSeen,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("instance for {0} has no true continuation")]
    MissingContinuation(ItemId),
    #[error("instance label does not match the task")]
    LabelMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Edition ↔ language index map. Index 0 is the padding slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vocabulary {
    editions: Vec<Edition>,
}

impl Vocabulary {
    pub fn new(mut editions: Vec<Edition>) -> Self {
        editions.sort();
        editions.dedup();
        Self { editions }
    }

    pub fn from_dataset(dataset: &CascadeDataset) -> Self {
        Self::new(dataset.editions().cloned().collect())
    }

    /// Model vocabulary size: editions plus padding.
    pub fn size(&self) -> usize {
        self.editions.len() + 1
    }

    pub fn index_of(&self, edition: &Edition) -> Option<usize> {
        self.editions.binary_search(edition).ok().map(|i| i + 1)
    }

    pub fn edition(&self, index: usize) -> Option<&Edition> {
        index.checked_sub(1).and_then(|i| self.editions.get(i))
    }

    pub fn editions(&self) -> &[Edition] {
        &self.editions
    }

    pub fn codes(&self) -> Vec<String> {
        self.editions.iter().map(|e| e.to_string()).collect()
    }

    pub fn from_codes(codes: &[String]) -> Result<Self, crate::ids::EditionError> {
        let editions = codes.iter().map(|c| Edition::new(c.as_str())).collect::<Result<_, _>>()?;
        Ok(Self::new(editions))
    }
}

/// `ln(1 + days)` for a non-negative gap in seconds.
pub fn delta_feature(gap_seconds: i64) -> f64 {
    (gap_seconds as f64 / SECONDS_PER_DAY as f64).ln_1p()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    /// Binary task: does a new page appear within the timeout?
    Continue(bool),
    /// Next-language task: language index of the next page.
    Next(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowInstance {
    pub wikidata_id: ItemId,
    /// The last `K` pages as `[language index, delta feature]`.
    pub steps: Vec<Step>,
    /// Creation time of the window's last page.
    pub anchor_time: UnixSeconds,
    /// Languages of the full cascade prefix through the anchor.
    pub seen: BTreeSet<usize>,
    pub label: Label,
    /// Remaining true languages after the anchor, in order (next-language task).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub continuation: Vec<usize>,
}

impl WindowInstance {
    pub fn example(&self) -> Example<'_> {
        Example {
            steps: &self.steps,
            target: match self.label {
                Label::Continue(b) => Target::Binary(b),
                Label::Next(c) => Target::Class(c),
            },
        }
    }
}

pub fn to_examples(instances: &[WindowInstance]) -> Vec<Example<'_>> {
    instances.iter().map(WindowInstance::example).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalSplit {
    pub train_start: UnixSeconds,
    pub train_end: UnixSeconds,
    pub test_start: UnixSeconds,
}

impl Default for TemporalSplit {
    fn default() -> Self {
        Self {
            train_start: TRAIN_START,
            train_end: TRAIN_END,
            test_start: TEST_START,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SplitItems<'a> {
    pub train: Vec<&'a Cascade>,
    pub test: Vec<&'a Cascade>,
    /// Items starting before `train_start` or in `[train_end, test_start)`.
    pub discarded: usize,
}

/// Assign items by the time of their first page creation.
pub fn split_dataset<'a>(
    dataset: &'a CascadeDataset,
    split: &TemporalSplit,
) -> Result<SplitItems<'a>, PredictError> {
    if !(split.train_start < split.train_end && split.train_end <= split.test_start) {
        return Err(PredictError::InvalidSplit);
    }
    let mut out = SplitItems::default();
    for cascade in dataset.cascades() {
        let start = cascade.start_time();
        if start >= split.test_start {
            out.test.push(cascade);
        } else if (split.train_start..split.train_end).contains(&start) {
            out.train.push(cascade);
        } else {
            out.discarded += 1;
        }
    }
    Ok(out)
}

fn language_indices(cascade: &Cascade, vocab: &Vocabulary) -> Result<Vec<usize>, PredictError> {
    cascade
        .events()
        .iter()
        .map(|e| {
            vocab
                .index_of(&e.edition)
                .ok_or_else(|| PredictError::UnknownEdition(e.edition.clone()))
        })
        .collect()
}

fn steps_of(cascade: &Cascade, langs: &[usize]) -> Vec<Step> {
    let ev = cascade.events();
    (0..ev.len())
        .map(|i| {
            let gap = if i == 0 { 0 } else { ev[i].created_at - ev[i - 1].created_at };
            Step::new(langs[i], delta_feature(gap))
        })
        .collect()
}

/// How windows whose outcome is not yet observable at the cutoff are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    /// Drop windows with no successor and less than `δ` of observation left.
    Exclude,
    /// Label such windows negative.
    LabelNegative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryTask {
    pub window: usize,
    /// Timeout `δ` in seconds.
    pub timeout: UnixSeconds,
    pub censoring: Censoring,
}

impl Default for BinaryTask {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            timeout: ONE_YEAR,
            censoring: Censoring::Exclude,
        }
    }
}

/// Sliding windows labelled by whether another page follows within the timeout.
pub fn make_binary_instances(
    cascades: &[&Cascade],
    vocab: &Vocabulary,
    task: &BinaryTask,
    cutoff: UnixSeconds,
) -> Result<Vec<WindowInstance>, PredictError> {
    let k = task.window;
    if k == 0 || task.timeout <= 0 {
        return Err(PredictError::InvalidArgument(
            "window and timeout must be positive".into(),
        ));
    }
    let mut out = Vec::new();
    for cascade in cascades {
        let len = cascade.len();
        if len < k {
            continue;
        }
        let langs = language_indices(cascade, vocab)?;
        let steps = steps_of(cascade, &langs);
        let ev = cascade.events();
        // `end` is the 1-based position of the window's last page.
        for end in k..=len {
            let anchor = ev[end - 1].created_at;
            let label = match ev.get(end) {
                Some(next) => next.created_at - anchor <= task.timeout,
                None if cutoff - anchor >= task.timeout => false,
                None => match task.censoring {
                    Censoring::Exclude => continue,
                    Censoring::LabelNegative => false,
                },
            };
            out.push(WindowInstance {
                wikidata_id: cascade.wikidata_id(),
                steps: steps[end - k..end].to_vec(),
                anchor_time: anchor,
                seen: langs[..end].iter().copied().collect(),
                label: Label::Continue(label),
                continuation: Vec::new(),
            });
        }
    }
    Ok(out)
}

/// Sliding windows labelled with the language of the following page.
pub fn make_next_language_instances(
    cascades: &[&Cascade],
    vocab: &Vocabulary,
    window: usize,
) -> Result<Vec<WindowInstance>, PredictError> {
    if window == 0 {
        return Err(PredictError::InvalidArgument("window must be positive".into()));
    }
    let mut out = Vec::new();
    for cascade in cascades {
        let len = cascade.len();
        if len <= window {
            continue;
        }
        let langs = language_indices(cascade, vocab)?;
        let steps = steps_of(cascade, &langs);
        let ev = cascade.events();
        for end in window..len {
            out.push(WindowInstance {
                wikidata_id: cascade.wikidata_id(),
                steps: steps[end - window..end].to_vec(),
                anchor_time: ev[end - 1].created_at,
                seen: langs[..end].iter().copied().collect(),
                label: Label::Next(langs[end]),
                continuation: langs[end..].to_vec(),
            });
        }
    }
    Ok(out)
}

/// `(positive, negative)` binary label counts.
pub fn label_balance(instances: &[WindowInstance]) -> (usize, usize) {
    let pos = instances
        .iter()
        .filter(|i| i.label == Label::Continue(true))
        .count();
    let neg = instances
        .iter()
        .filter(|i| i.label == Label::Continue(false))
        .count();
    (pos, neg)
}

/// Uniform subset without replacement, kept in input order.
pub fn sample_instances(
    instances: &[WindowInstance],
    n: usize,
    seed: u64,
) -> Result<Vec<WindowInstance>, PredictError> {
    if n > instances.len() {
        return Err(PredictError::InsufficientInstances {
            requested: n,
            available: instances.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, instances.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| instances[i].clone()).collect())
}

/// Probability of continuation and the `> 0.5` decision.
pub fn predict_continuation<T: Scalar>(
    model: &SequenceModel<T>,
    instance: &WindowInstance,
) -> Result<(T, bool), PredictError> {
    if model.head() != HeadKind::Binary {
        return Err(PredictError::Model(ModelError::TargetMismatch(model.head())));
    }
    let p = model.predict_proba(&instance.steps)?[0];
    Ok((p, decide(p)))
}

fn decide<T: Scalar>(p: T) -> bool {
    p > T::of(0.5)
}

/// Drop padding and already-seen languages, then sort by probability
/// (descending) and language index (ascending).
pub fn rank_languages<T: Scalar>(
    probabilities: &[T],
    seen: &BTreeSet<usize>,
) -> Result<Vec<(usize, T)>, PredictError> {
    let mut ranked: Vec<(usize, T)> = probabilities
        .iter()
        .copied()
        .enumerate()
        .skip(1)
        .filter(|(i, _)| !seen.contains(i))
        .collect();
    if ranked.is_empty() {
        return Err(PredictError::AllLanguagesSeen);
    }
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
    Ok(ranked)
}

fn top_unseen<T: Scalar>(probabilities: &[T], seen: &BTreeSet<usize>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &p) in probabilities.iter().enumerate().skip(1) {
        if seen.contains(&i) {
            continue;
        }
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((i, p));
        }
    }
    best.map(|b| b.0)
}

pub fn predict_next_language<T: Scalar>(
    model: &SequenceModel<T>,
    instance: &WindowInstance,
) -> Result<Vec<(usize, T)>, PredictError> {
    if model.head() != HeadKind::Multiclass {
        return Err(PredictError::Model(ModelError::TargetMismatch(model.head())));
    }
    let probs = model.predict_proba(&instance.steps)?;
    rank_languages(&probs, &instance.seen)
}

const EVAL_CHUNK: usize = 2000;

/// Head outputs for many instances, in input order.
fn batch_outputs<T: Scalar, R: Send>(
    model: &SequenceModel<T>,
    instances: &[WindowInstance],
    per_row: impl Fn(&[T], &WindowInstance) -> R + Sync,
) -> Result<Vec<R>, PredictError> {
    let parts: Vec<Result<Vec<R>, ModelError>> = instances
        .par_chunks(EVAL_CHUNK)
        .map(|chunk| {
            let seqs: Vec<&[Step]> = chunk.iter().map(|i| i.steps.as_slice()).collect();
            let cache = model.forward_batch(&seqs)?;
            Ok(cache
                .outputs
                .outer_iter()
                .zip(chunk)
                .map(|(row, inst)| per_row(row.as_slice().expect("standard layout"), inst))
                .collect())
        })
        .collect();
    let mut out = Vec::with_capacity(instances.len());
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Self::default();
        for (predicted, actual) in pairs {
            match (predicted, actual) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassMetrics {
    fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        Self {
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            support: tp + fn_,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryReport {
    pub instances: u64,
    pub confusion: Confusion,
    pub not_propagate: ClassMetrics,
    pub propagate: ClassMetrics,
}

impl BinaryReport {
    pub fn from_confusion(c: Confusion) -> Self {
        Self {
            instances: c.total(),
            confusion: c,
            propagate: ClassMetrics::from_counts(c.tp, c.fp, c.fn_),
            not_propagate: ClassMetrics::from_counts(c.tn, c.fn_, c.fp),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowAccuracyReport {
    pub instances: u64,
    /// `accuracy_at[w - 1]` is accuracy@w; the first entry is top-1 accuracy.
    pub accuracy_at: Vec<f64>,
}

impl WindowAccuracyReport {
    pub fn top1(&self) -> f64 {
        self.accuracy_at[0]
    }

    pub fn at(&self, w: usize) -> f64 {
        self.accuracy_at[w - 1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum EvalReport {
    Binary(BinaryReport),
    NextLanguage(WindowAccuracyReport),
}

impl EvalReport {
    /// Plain-text table: per-class precision/recall/F1, or accuracy by window.
    pub fn text_table(&self) -> String {
        let mut s = String::new();
        match self {
            EvalReport::Binary(r) => {
                writeln!(s, "{:<15}{:>10}{:>10}{:>10}{:>10}", "Class", "Precision", "Recall", "F1-Score", "Support").unwrap();
                for (name, m) in [("Not propagate", &r.not_propagate), ("Propagate", &r.propagate)] {
                    writeln!(
                        s,
                        "{:<15}{:>10.2}{:>10.2}{:>10.2}{:>10}",
                        name, m.precision, m.recall, m.f1, m.support
                    )
                    .unwrap();
                }
            }
            EvalReport::NextLanguage(r) => {
                writeln!(s, "{:<8}{:>10}", "Window", "Accuracy").unwrap();
                for (i, acc) in r.accuracy_at.iter().enumerate() {
                    writeln!(s, "{:<8}{:>10.4}", i + 1, acc).unwrap();
                }
                writeln!(s, "instances: {}", r.instances).unwrap();
            }
        }
        s
    }
}

/// Precision, recall and F1 for both classes under the `> 0.5` rule.
pub fn evaluate_binary<T: Scalar>(
    model: &SequenceModel<T>,
    instances: &[WindowInstance],
) -> Result<BinaryReport, PredictError> {
    if instances.is_empty() {
        return Err(PredictError::EmptyTestSet);
    }
    if model.head() != HeadKind::Binary {
        return Err(PredictError::Model(ModelError::TargetMismatch(model.head())));
    }
    let pairs = batch_outputs(model, instances, |row, inst| match inst.label {
        Label::Continue(actual) => Ok((decide(row[0]), actual)),
        Label::Next(_) => Err(PredictError::LabelMismatch),
    })?;
    let pairs = pairs.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(BinaryReport::from_confusion(Confusion::from_pairs(pairs)))
}

/// accuracy@w for `w = 1..=w_max` given one top-1 prediction per instance.
pub fn window_accuracy_from_predictions(
    predictions: &[usize],
    instances: &[WindowInstance],
    w_max: usize,
) -> Result<WindowAccuracyReport, PredictError> {
    if instances.is_empty() {
        return Err(PredictError::EmptyTestSet);
    }
    if w_max == 0 || predictions.len() != instances.len() {
        return Err(PredictError::InvalidArgument(
            "need w_max >= 1 and one prediction per instance".into(),
        ));
    }
    // first_hit[w] = instances whose prediction first appears at future position w
    let mut first_hit = vec![0u64; w_max + 1];
    for (&pred, inst) in predictions.iter().zip(instances) {
        if inst.continuation.is_empty() {
            return Err(PredictError::MissingContinuation(inst.wikidata_id));
        }
        if let Some(pos) = inst.continuation.iter().take(w_max).position(|&l| l == pred) {
            first_hit[pos + 1] += 1;
        }
    }
    let n = instances.len() as f64;
    let mut running = 0;
    let accuracy_at = (1..=w_max)
        .map(|w| {
            running += first_hit[w];
            running as f64 / n
        })
        .collect();
    Ok(WindowAccuracyReport {
        instances: instances.len() as u64,
        accuracy_at,
    })
}

/// Whether the top-1 unseen language occurs among the next `w` true languages.
pub fn evaluate_window_accuracy<T: Scalar>(
    model: &SequenceModel<T>,
    instances: &[WindowInstance],
    w_max: usize,
) -> Result<WindowAccuracyReport, PredictError> {
    if instances.is_empty() {
        return Err(PredictError::EmptyTestSet);
    }
    if model.head() != HeadKind::Multiclass {
        return Err(PredictError::Model(ModelError::TargetMismatch(model.head())));
    }
    let predictions = batch_outputs(model, instances, |row, inst| {
        top_unseen(row, &inst.seen).ok_or(PredictError::AllLanguagesSeen)
    })?;
    let predictions = predictions.into_iter().collect::<Result<Vec<_>, _>>()?;
    window_accuracy_from_predictions(&predictions, instances, w_max)
}

/// Baseline predictor: a uniformly random unseen language per instance.
pub fn random_predictions(
    instances: &[WindowInstance],
    vocab_size: usize,
    seed: u64,
) -> Result<Vec<usize>, PredictError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    instances
        .iter()
        .map(|inst| {
            let unseen: Vec<usize> = (1..vocab_size).filter(|l| !inst.seen.contains(l)).collect();
            if unseen.is_empty() {
                return Err(PredictError::AllLanguagesSeen);
            }
            Ok(unseen[rng.random_range(0..unseen.len())])
        })
        .collect()
}

pub fn write_instances<W: Write>(instances: &[WindowInstance], mut out: W) -> io::Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut out, inst)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceFileError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
}

pub fn read_instances<R: BufRead>(source: R) -> Result<Vec<WindowInstance>, InstanceFileError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: WindowInstance = serde_json::from_str(&line).map_err(|e| InstanceFileError::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(inst);
    }
    Ok(out)
}
