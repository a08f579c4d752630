//! Seeded synthetic cascades with known ground truth.
//!
//! Every generated cascade starts at a uniform time in the configured span after
//! the base epoch and advances by exponential inter-arrival gaps. Each item gets
//! its own ChaCha8 stream, so items can be generated in parallel and still come
//! out identical for a given seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Zipf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{build_cascades, CascadeDataset};
use crate::ids::{Edition, ItemId, UnixSeconds, SECONDS_PER_DAY};
use crate::ingest::{PageCreationRecord, TopicScores, MAX_CREATION_TIME};
use crate::predict::ONE_YEAR;

/// 2008-01-01T00:00:00Z
pub const BASE_EPOCH: UnixSeconds = 1_199_145_600;
/// Smallest gap between consecutive pages, so events never tie.
pub const MIN_GAP: UnixSeconds = 60;
const TOPICS: [&str; 4] = ["Culture", "Geography", "History_and_Society", "STEM"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// Editions visited in one fixed cyclic order from a random start.
    CyclicOrder {
        /// Permutation of edition positions; identity when absent.
        #[serde(default)]
        cycle: Option<Vec<usize>>,
        min_length: usize,
        /// Defaults to the edition count.
        #[serde(default)]
        max_length: Option<usize>,
        mean_gap_days: f64,
    },
    /// A page has a successor iff the gap leading to it is below the threshold.
    ThresholdContinuation {
        threshold_days: f64,
        /// Leading pages that always continue.
        forced_continuations: usize,
        continue_probability: f64,
        short_gap_mean_days: f64,
        /// Stopping gaps are at least `long_gap_factor * threshold_days`.
        long_gap_factor: f64,
        long_gap_mean_days: f64,
        max_gap_days: f64,
    },
    /// Lengths from a discrete power law on `1..=editions`.
    HeavyTail { exponent: f64, mean_gap_days: f64 },
}

impl Generator {
    pub fn cyclic_order() -> Self {
        Generator::CyclicOrder {
            cycle: None,
            min_length: 5,
            max_length: None,
            mean_gap_days: 30.0,
        }
    }

    pub fn threshold_continuation() -> Self {
        Generator::ThresholdContinuation {
            threshold_days: 30.0,
            forced_continuations: 4,
            continue_probability: 0.55,
            short_gap_mean_days: 5.0,
            long_gap_factor: 1.5,
            long_gap_mean_days: 60.0,
            max_gap_days: 330.0,
        }
    }

    pub fn heavy_tail() -> Self {
        Generator::HeavyTail {
            exponent: 2.5,
            mean_gap_days: 30.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Generator::CyclicOrder { .. } => "cyclic_order",
            Generator::ThresholdContinuation { .. } => "threshold_continuation",
            Generator::HeavyTail { .. } => "heavy_tail",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub generator: Generator,
    pub editions: usize,
    pub items: usize,
    pub seed: u64,
    #[serde(default = "default_base")]
    pub base_time: UnixSeconds,
    /// Cascade start times are uniform over this many days after `base_time`.
    #[serde(default = "default_span")]
    pub start_span_days: f64,
}

fn default_base() -> UnixSeconds {
    BASE_EPOCH
}

fn default_span() -> f64 {
    3650.0
}

impl SynthConfig {
    pub fn new(generator: Generator, editions: usize, items: usize, seed: u64) -> Self {
        Self {
            generator,
            editions,
            items,
            seed,
            base_time: BASE_EPOCH,
            start_span_days: default_span(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_owned()));
        if self.editions < 2 {
            return bad("edition count must be at least 2");
        }
        if self.items == 0 {
            return bad("item count must be at least 1");
        }
        if !(self.start_span_days.is_finite() && self.start_span_days >= 0.0) {
            return bad("start_span_days must be non-negative");
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match &self.generator {
            Generator::CyclicOrder {
                cycle,
                min_length,
                max_length,
                mean_gap_days,
            } => {
                if let Some(c) = cycle {
                    let mut sorted = c.clone();
                    sorted.sort_unstable();
                    if sorted != (0..self.editions).collect::<Vec<_>>() {
                        return bad("cycle must be a permutation of 0..editions");
                    }
                }
                let max = max_length.unwrap_or(self.editions);
                if *min_length == 0 || *min_length > max || max > self.editions {
                    return bad("need 1 <= min_length <= max_length <= editions");
                }
                if !positive(*mean_gap_days) {
                    return bad("mean_gap_days must be positive");
                }
            }
            Generator::ThresholdContinuation {
                threshold_days,
                forced_continuations,
                continue_probability,
                short_gap_mean_days,
                long_gap_factor,
                long_gap_mean_days,
                max_gap_days,
            } => {
                if *forced_continuations >= self.editions {
                    return bad("forced_continuations must be below the edition count");
                }
                if !(0.0..=1.0).contains(continue_probability) {
                    return bad("continue_probability must lie in [0, 1]");
                }
                if ![*threshold_days, *short_gap_mean_days, *long_gap_mean_days]
                    .into_iter()
                    .all(positive)
                    || !(*long_gap_factor >= 1.0)
                {
                    return bad("gap parameters must be positive and long_gap_factor >= 1");
                }
                if *threshold_days * SECONDS_PER_DAY as f64 <= MIN_GAP as f64 {
                    return bad("threshold must exceed the minimum gap");
                }
                if !(*max_gap_days > threshold_days * long_gap_factor) {
                    return bad("max_gap_days must exceed long_gap_factor * threshold_days");
                }
            }
            Generator::HeavyTail {
                exponent,
                mean_gap_days,
            } => {
                if !positive(*exponent) || !positive(*mean_gap_days) {
                    return bad("exponent and mean_gap_days must be positive");
                }
            }
        }
        Ok(())
    }
}

/// Ground truth written next to the generated records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthMetadata {
    pub config: SynthConfig,
    pub generator: String,
    /// Edition codes by generator position.
    pub editions: Vec<Edition>,
    pub items: usize,
    pub records: usize,
    pub max_timestamp: UnixSeconds,
    /// Far enough past the last page that one-year windows are fully observed.
    pub suggested_cutoff: UnixSeconds,
    /// Successor of each edition in the cycle (cyclic-order only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<Edition>>,
    /// A page continues iff its incoming gap is below this (threshold-continuation only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_seconds: Option<UnixSeconds>,
    /// Closed-form probability of a length-1 cascade (heavy-tail only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_one_mass: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthetic {
    /// Records ordered by item, then creation time.
    pub records: Vec<PageCreationRecord>,
    pub metadata: SynthMetadata,
}

impl Synthetic {
    /// Cascades observed at the suggested cutoff.
    pub fn dataset(&self) -> CascadeDataset {
        self.dataset_at(self.metadata.suggested_cutoff)
            .expect("generated records are consistent")
    }

    /// Cascades truncated at `cutoff` (later pages are dropped).
    pub fn dataset_at(&self, cutoff: UnixSeconds) -> Result<CascadeDataset, crate::cascade::CascadeError> {
        build_cascades(
            self.records.iter().filter(|r| r.created_at <= cutoff).cloned(),
            cutoff,
        )
    }
}

/// Edition codes `e0wiki`, `e1wiki`, ... zero-padded so code order matches position.
pub fn edition_codes(n: usize) -> Vec<Edition> {
    let width = (n.max(2) - 1).to_string().len();
    (0..n)
        .map(|i| Edition::new(format!("e{i:0width$}wiki")).expect("valid code"))
        .collect()
}

/// `1 / Σ_{k=1}^{n} k^{-s}`.
pub fn zipf_length_one_mass(n: usize, exponent: f64) -> f64 {
    1.0 / (1..=n).map(|k| (k as f64).powf(-exponent)).sum::<f64>()
}

fn days(d: f64) -> f64 {
    d * SECONDS_PER_DAY as f64
}

fn exp_gap(rng: &mut ChaCha8Rng, mean_days: f64) -> UnixSeconds {
    let e = Exp::new(1.0 / days(mean_days)).expect("positive rate");
    (e.sample(rng).round() as UnixSeconds).max(MIN_GAP)
}

/// Exponential gap redrawn until it lies in `[lo, hi)`.
fn bounded_gap(rng: &mut ChaCha8Rng, lo: UnixSeconds, hi: UnixSeconds, mean_days: f64) -> UnixSeconds {
    loop {
        let g = lo + exp_gap(rng, mean_days) - MIN_GAP;
        if g < hi {
            return g.max(MIN_GAP);
        }
    }
}

struct ItemPlan {
    positions: Vec<usize>,
    gaps: Vec<UnixSeconds>,
}

fn plan_item(config: &SynthConfig, cycle: &[usize], zipf: Option<&Zipf<f64>>, rng: &mut ChaCha8Rng) -> ItemPlan {
    let n = config.editions;
    match &config.generator {
        Generator::CyclicOrder {
            min_length,
            max_length,
            mean_gap_days,
            ..
        } => {
            let len = rng.random_range(*min_length..=max_length.unwrap_or(n));
            let start = rng.random_range(0..n);
            let positions = (0..len).map(|j| cycle[(start + j) % n]).collect();
            let gaps = (1..len).map(|_| exp_gap(rng, *mean_gap_days)).collect();
            ItemPlan { positions, gaps }
        }
        Generator::ThresholdContinuation {
            threshold_days,
            forced_continuations,
            continue_probability,
            short_gap_mean_days,
            long_gap_factor,
            long_gap_mean_days,
            max_gap_days,
        } => {
            let thr = days(*threshold_days) as UnixSeconds;
            let long_lo = days(threshold_days * long_gap_factor).ceil() as UnixSeconds;
            let long_hi = days(*max_gap_days) as UnixSeconds + 1;
            let mut gaps = Vec::new();
            // Page j (1-based) has a successor iff its incoming gap is short;
            // the first page has no incoming gap and always continues.
            let mut j = 1;
            loop {
                j += 1;
                let short = if j <= *forced_continuations {
                    true
                } else if j == n {
                    false
                } else {
                    rng.random_bool(*continue_probability)
                };
                gaps.push(if short {
                    bounded_gap(rng, MIN_GAP, thr, *short_gap_mean_days)
                } else {
                    bounded_gap(rng, long_lo, long_hi, *long_gap_mean_days)
                });
                if !short {
                    break;
                }
            }
            let mut order: Vec<usize> = (0..n).collect();
            let (picked, _) = order.partial_shuffle(rng, gaps.len() + 1);
            ItemPlan {
                positions: picked.to_vec(),
                gaps,
            }
        }
        Generator::HeavyTail { mean_gap_days, .. } => {
            let len = zipf.expect("zipf set").sample(rng) as usize;
            let mut order: Vec<usize> = (0..n).collect();
            let (picked, _) = order.partial_shuffle(rng, len.clamp(1, n));
            let gaps = (1..picked.len()).map(|_| exp_gap(rng, *mean_gap_days)).collect();
            ItemPlan {
                positions: picked.to_vec(),
                gaps,
            }
        }
    }
}

/// Generate page-creation records and their ground truth.
pub fn generate(config: &SynthConfig) -> Result<Synthetic, SynthError> {
    config.validate()?;
    let n = config.editions;
    let codes = edition_codes(n);
    let cycle: Vec<usize> = match &config.generator {
        Generator::CyclicOrder { cycle: Some(c), .. } => c.clone(),
        _ => (0..n).collect(),
    };
    let zipf = match &config.generator {
        Generator::HeavyTail { exponent, .. } => Some(
            Zipf::new(n as f64, *exponent)
                .map_err(|e| SynthError::InvalidConfig(e.to_string()))?,
        ),
        _ => None,
    };
    let span = days(config.start_span_days) as UnixSeconds;

    let per_item: Vec<Vec<PageCreationRecord>> = (0..config.items)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let id = ItemId::new(i as u64 + 1).expect("nonzero");
            let mut topics = TopicScores::new();
            let label = TOPICS[rng.random_range(0..TOPICS.len())];
            let score = (rng.random_range(50..=100) as f64) / 100.0;
            topics.insert(label.to_owned(), score);
            let mut t = config.base_time + if span > 0 { rng.random_range(0..span) } else { 0 };
            let plan = plan_item(config, &cycle, zipf.as_ref(), &mut rng);
            plan.positions
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    if j > 0 {
                        t += plan.gaps[j - 1];
                    }
                    PageCreationRecord {
                        edition: codes[p].clone(),
                        wikidata_id: id,
                        created_at: t,
                        creator_is_bot: false,
                        topics: topics.clone(),
                    }
                })
                .collect()
        })
        .collect();
    let records: Vec<PageCreationRecord> = per_item.into_iter().flatten().collect();
    let max_timestamp = records.iter().map(|r| r.created_at).max().unwrap_or(config.base_time);
    if max_timestamp > MAX_CREATION_TIME {
        return Err(SynthError::InvalidConfig(
            "generated timestamps exceed the 32-bit range; shorten the span or gaps".into(),
        ));
    }

    let metadata = SynthMetadata {
        config: config.clone(),
        generator: config.generator.name().to_owned(),
        editions: codes.clone(),
        items: config.items,
        records: records.len(),
        max_timestamp,
        suggested_cutoff: max_timestamp + ONE_YEAR + 30 * SECONDS_PER_DAY,
        cycle: matches!(config.generator, Generator::CyclicOrder { .. }).then(|| {
            let mut next = vec![codes[0].clone(); n];
            for j in 0..n {
                next[cycle[j]] = codes[cycle[(j + 1) % n]].clone();
            }
            next
        }),
        threshold_seconds: match &config.generator {
            Generator::ThresholdContinuation { threshold_days, .. } => {
                Some(days(*threshold_days) as UnixSeconds)
            }
            _ => None,
        },
        length_one_mass: match &config.generator {
            Generator::HeavyTail { exponent, .. } => Some(zipf_length_one_mass(n, *exponent)),
            _ => None,
        },
    };
    Ok(Synthetic { records, metadata })
}
