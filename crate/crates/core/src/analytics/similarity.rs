use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::AnalyticsError;
use crate::cascade::CascadeDataset;
use crate::ids::Edition;
use crate::scalar::Scalar;

/// Square, symmetric similarity matrix indexed by edition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimilarityMatrix<T> {
    editions: Vec<Edition>,
    values: Vec<T>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    pub fn editions(&self) -> &[Edition] {
        &self.editions
    }

    pub fn size(&self) -> usize {
        self.editions.len()
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.editions.len() + col]
    }

    pub fn position(&self, edition: &Edition) -> Option<usize> {
        self.editions.iter().position(|e| e == edition)
    }

    pub fn between(&self, a: &Edition, b: &Edition) -> Option<T> {
        Some(self.get(self.position(a)?, self.position(b)?))
    }

    pub fn row(&self, row: usize) -> &[T] {
        let n = self.editions.len();
        &self.values[row * n..(row + 1) * n]
    }
}

/// Pairwise Jaccard index of the item sets covered by each edition.
///
/// Intersections are counted by co-occurrence inside cascades; unions follow
/// from `|A| + |B| - |A ∩ B|`. Two empty sets have similarity 0.
pub fn jaccard_matrix<T: Scalar>(
    dataset: &CascadeDataset,
    editions: Option<&[Edition]>,
) -> Result<SimilarityMatrix<T>, AnalyticsError> {
    let editions: Vec<Edition> = match editions {
        Some(list) => {
            if let Some(unknown) = list.iter().find(|e| dataset.items_of(e).is_none()) {
                return Err(AnalyticsError::UnknownEdition(unknown.clone()));
            }
            list.to_vec()
        }
        None => dataset.editions().cloned().collect(),
    };
    let n = editions.len();
    let slot: HashMap<&Edition, usize> = editions.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let sizes: Vec<u64> = editions
        .iter()
        .map(|e| dataset.edition_size(e) as u64)
        .collect();

    let mut shared = vec![0u64; n * n];
    let mut present = Vec::new();
    for cascade in dataset.cascades() {
        present.clear();
        present.extend(cascade.events().iter().filter_map(|ev| slot.get(&ev.edition).copied()));
        for (x, &i) in present.iter().enumerate() {
            for &j in &present[x + 1..] {
                shared[i * n + j] += 1;
                shared[j * n + i] += 1;
            }
        }
    }

    let mut values = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let inter = if i == j { sizes[i] } else { shared[i * n + j] };
            let union = sizes[i] + sizes[j] - inter;
            values[i * n + j] = if union == 0 {
                T::zero()
            } else {
                T::of(inter as f64) / T::of(union as f64)
            };
        }
    }
    Ok(SimilarityMatrix { editions, values })
}

/// 1-based ranks, tied values sharing the mean of their positions.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let rank = T::of((start + 1 + end) as f64 / 2.0);
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Spearman<T> {
    pub rho: T,
    pub n: usize,
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman_rho<T: Scalar>(pairs: &[(T, T)]) -> Result<Spearman<T>, AnalyticsError> {
    let n = pairs.len();
    if n < 3 {
        return Err(AnalyticsError::InsufficientData(n));
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let xs: Vec<T> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<T> = pairs.iter().map(|p| p.1).collect();
    let rx = average_ranks(&xs);
    let ry = average_ranks(&ys);

    let count = T::of_usize(n);
    let mx = rx.iter().copied().sum::<T>() / count;
    let my = ry.iter().copied().sum::<T>() / count;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(AnalyticsError::DegenerateInput);
    }
    let rho = (sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one());
    Ok(Spearman { rho, n })
}

/// An unordered pair of distinct editions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EditionPair(Edition, Edition);

impl EditionPair {
    pub fn new(a: Edition, b: Edition) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self(a, b)),
            std::cmp::Ordering::Greater => Some(Self(b, a)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn first(&self) -> &Edition {
        &self.0
    }

    pub fn second(&self) -> &Edition {
        &self.1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranslationCorrelation {
    pub rho: f64,
    pub n: usize,
    /// Share of all dataset edition pairs without translation activity.
    pub excluded_pair_share: f64,
    pub total_pairs: usize,
    /// Count entries naming an edition absent from the dataset.
    pub ignored_entries: usize,
}

/// Rank correlation between edition-pair Jaccard similarity and translation
/// counts, over the pairs with a positive count.
pub fn translation_correlation(
    dataset: &CascadeDataset,
    translation_counts: &BTreeMap<EditionPair, u64>,
) -> Result<TranslationCorrelation, AnalyticsError> {
    let matrix = jaccard_matrix::<f64>(dataset, None)?;
    let n_ed = matrix.size();
    let total_pairs = n_ed * n_ed.saturating_sub(1) / 2;

    let mut pairs = Vec::new();
    let mut ignored_entries = 0;
    for (pair, &count) in translation_counts {
        if count == 0 {
            continue;
        }
        match (matrix.position(pair.first()), matrix.position(pair.second())) {
            (Some(i), Some(j)) => pairs.push((matrix.get(i, j), count as f64)),
            _ => ignored_entries += 1,
        }
    }
    let excluded_pair_share = if total_pairs == 0 {
        1.0
    } else {
        (total_pairs - pairs.len()) as f64 / total_pairs as f64
    };
    let Spearman { rho, n } = spearman_rho(&pairs)?;
    Ok(TranslationCorrelation {
        rho,
        n,
        excluded_pair_share,
        total_pairs,
        ignored_entries,
    })
}
