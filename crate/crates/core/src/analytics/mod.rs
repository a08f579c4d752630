//! Descriptive statistics over an immutable [`CascadeDataset`].
//!
//! Every function here is a pure read of the dataset.

mod export;
mod similarity;

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike};
use serde::Serialize;

use crate::cascade::CascadeDataset;
use crate::ids::{Edition, UnixSeconds, SECONDS_PER_DAY};

pub use export::{
    continuation_csv, histogram_csv, intervals_csv, positions_csv, scalar_csv, similarity_csv,
};
pub use similarity::{
    average_ranks, jaccard_matrix, spearman_rho, translation_correlation, EditionPair,
    SimilarityMatrix, Spearman, TranslationCorrelation,
};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("unknown edition {0}")]
    UnknownEdition(Edition),
    #[error("need at least 3 pairs, got {0}")]
    InsufficientData(usize),
    #[error("input variable is constant")]
    DegenerateInput,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Integer-labelled counts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// `(label, count)` in ascending label order; zero-count labels omitted.
    pub bins: Vec<(usize, u64)>,
    pub total: u64,
}

impl Histogram {
    fn from_counts(counts: BTreeMap<usize, u64>) -> Self {
        let total = counts.values().sum();
        Self {
            bins: counts.into_iter().collect(),
            total,
        }
    }

    pub fn count(&self, label: usize) -> u64 {
        self.bins
            .iter()
            .find(|(l, _)| *l == label)
            .map_or(0, |(_, c)| *c)
    }

    /// Fraction of the total with label strictly below `k`.
    pub fn share_below(&self, k: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let below: u64 = self.bins.iter().filter(|(l, _)| *l < k).map(|(_, c)| c).sum();
        below as f64 / self.total as f64
    }

    /// `(label, share of total with label <= label)` per bin.
    pub fn cumulative_shares(&self) -> Vec<(usize, f64)> {
        let mut running = 0;
        self.bins
            .iter()
            .map(|&(label, count)| {
                running += count;
                (label, running as f64 / self.total as f64)
            })
            .collect()
    }
}

fn nonempty(dataset: &CascadeDataset) -> Result<(), AnalyticsError> {
    if dataset.is_empty() {
        Err(AnalyticsError::EmptyDataset)
    } else {
        Ok(())
    }
}

/// Distribution of cascade lengths.
pub fn length_distribution(dataset: &CascadeDataset) -> Result<Histogram, AnalyticsError> {
    nonempty(dataset)?;
    let mut counts = BTreeMap::new();
    for cascade in dataset.cascades() {
        *counts.entry(cascade.len()).or_insert(0) += 1;
    }
    Ok(Histogram::from_counts(counts))
}

/// Fraction of items that exist in exactly one edition.
pub fn single_language_share(dataset: &CascadeDataset) -> Result<f64, AnalyticsError> {
    nonempty(dataset)?;
    let single = dataset.cascades().filter(|c| c.len() == 1).count();
    Ok(single as f64 / dataset.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationPoint {
    pub k: usize,
    /// Items with length at least `k`.
    pub reached: u64,
    /// Items with length at least `k + 1`.
    pub continued: u64,
    pub probability: f64,
}

/// For each `k` from 1 to the longest cascade, P(L >= k+1 | L >= k).
pub fn continuation_probability(
    dataset: &CascadeDataset,
) -> Result<Vec<ContinuationPoint>, AnalyticsError> {
    let hist = length_distribution(dataset)?;
    let max_len = hist.bins.last().map_or(0, |b| b.0);
    // at_least[k] = #items with L >= k
    let mut at_least = vec![0u64; max_len + 2];
    for &(len, count) in &hist.bins {
        at_least[len] += count;
    }
    for k in (1..=max_len).rev() {
        at_least[k] += at_least[k + 1];
    }
    Ok((1..=max_len)
        .map(|k| ContinuationPoint {
            k,
            reached: at_least[k],
            continued: at_least[k + 1],
            probability: at_least[k + 1] as f64 / at_least[k] as f64,
        })
        .collect())
}

/// Empirical distribution function over a finite sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { samples }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Sorted samples.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Fraction of samples `<= x`; `None` for an empty sample.
    pub fn eval(&self, x: f64) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        let at_or_below = self.samples.partition_point(|&s| s <= x);
        Some(at_or_below as f64 / self.samples.len() as f64)
    }

    /// `(value, cumulative fraction)` at each distinct sample value.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.samples.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &s) in self.samples.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == s => last.1 = frac,
                _ => out.push((s, frac)),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HopIntervals {
    pub hop: usize,
    /// Days between the `hop`-th and `hop+1`-th creation.
    pub cdf: EmpiricalCdf,
}

/// Interval distributions per hop; an unreachable hop yields an empty CDF.
pub fn interval_cdf_by_hop(
    dataset: &CascadeDataset,
    hops: &[usize],
) -> Result<Vec<HopIntervals>, AnalyticsError> {
    if let Some(&bad) = hops.iter().find(|&&h| h == 0) {
        return Err(AnalyticsError::InvalidArgument(format!(
            "hop {bad}: hops are 1-based"
        )));
    }
    Ok(hops
        .iter()
        .map(|&hop| {
            let samples = dataset
                .cascades()
                .filter(|c| c.len() > hop)
                .map(|c| {
                    let ev = c.events();
                    (ev[hop].created_at - ev[hop - 1].created_at) as f64 / SECONDS_PER_DAY as f64
                })
                .collect();
            HopIntervals {
                hop,
                cdf: EmpiricalCdf::new(samples),
            }
        })
        .collect())
}

/// UTC calendar year of a Unix timestamp.
pub fn utc_year(t: UnixSeconds) -> i32 {
    DateTime::from_timestamp(t, 0)
        .expect("timestamp within chrono range")
        .year()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EditionPositions {
    /// Order divided by cascade length, one sample per qualifying page.
    pub samples: Vec<f64>,
    pub mean_absolute_position: Option<f64>,
    /// Items covered by the edition in the full dataset.
    pub edition_size: usize,
}

impl EditionPositions {
    pub fn mean_relative_position(&self) -> Option<f64> {
        (!self.samples.is_empty())
            .then(|| self.samples.iter().sum::<f64>() / self.samples.len() as f64)
    }
}

/// Relative and absolute positions of each edition within cascades that
/// started in `min_start_year` or later.
pub fn relative_positions(
    dataset: &CascadeDataset,
    min_start_year: i32,
) -> Result<BTreeMap<Edition, EditionPositions>, AnalyticsError> {
    if min_start_year < 2001 {
        return Err(AnalyticsError::InvalidArgument(format!(
            "min_start_year {min_start_year} precedes 2001"
        )));
    }
    let mut acc: BTreeMap<&Edition, (Vec<f64>, u64)> = BTreeMap::new();
    for cascade in dataset.cascades() {
        if utc_year(cascade.start_time()) < min_start_year {
            continue;
        }
        let len = cascade.len() as f64;
        for (i, event) in cascade.events().iter().enumerate() {
            let order = i + 1;
            let entry = acc.entry(&event.edition).or_default();
            entry.0.push(order as f64 / len);
            entry.1 += order as u64;
        }
    }
    Ok(dataset
        .editions()
        .map(|edition| {
            let (samples, order_sum) = acc.remove(edition).unwrap_or_default();
            let mean_absolute_position =
                (!samples.is_empty()).then(|| order_sum as f64 / samples.len() as f64);
            (
                edition.clone(),
                EditionPositions {
                    samples,
                    mean_absolute_position,
                    edition_size: dataset.edition_size(edition),
                },
            )
        })
        .collect())
}
