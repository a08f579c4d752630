//! CSV renderings of the analytics results.

use std::collections::BTreeMap;

use super::{ContinuationPoint, EditionPositions, Histogram, HopIntervals, SimilarityMatrix};
use crate::ids::Edition;
use crate::scalar::Scalar;

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn histogram_csv(hist: &Histogram) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["length", "count", "share", "cumulative_share"]).unwrap();
    for ((label, count), (_, cum)) in hist.bins.iter().zip(hist.cumulative_shares()) {
        let share = *count as f64 / hist.total as f64;
        w.write_record([label.to_string(), count.to_string(), share.to_string(), cum.to_string()])
            .unwrap();
    }
    finish(w)
}

pub fn continuation_csv(points: &[ContinuationPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "reached", "continued", "probability"]).unwrap();
    for p in points {
        w.write_record([
            p.k.to_string(),
            p.reached.to_string(),
            p.continued.to_string(),
            p.probability.to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn intervals_csv(hops: &[HopIntervals]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["hop", "days", "cumulative_fraction"]).unwrap();
    for h in hops {
        for (days, frac) in h.cdf.points() {
            w.write_record([h.hop.to_string(), days.to_string(), frac.to_string()])
                .unwrap();
        }
    }
    finish(w)
}

pub fn positions_csv(report: &BTreeMap<Edition, EditionPositions>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "edition",
        "edition_size",
        "samples",
        "mean_relative_position",
        "mean_absolute_position",
    ])
    .unwrap();
    for (edition, p) in report {
        w.write_record([
            edition.to_string(),
            p.edition_size.to_string(),
            p.samples.len().to_string(),
            opt(p.mean_relative_position()),
            opt(p.mean_absolute_position),
        ])
        .unwrap();
    }
    finish(w)
}

pub fn scalar_csv(name: &str, value: f64) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["statistic", "value"]).unwrap();
    w.write_record([name.to_string(), value.to_string()]).unwrap();
    finish(w)
}

/// Dense matrix with a header row of edition codes.
pub fn similarity_csv<T: Scalar>(matrix: &SimilarityMatrix<T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["edition".to_string()];
    header.extend(matrix.editions().iter().map(|e| e.to_string()));
    w.write_record(&header).unwrap();
    for (i, edition) in matrix.editions().iter().enumerate() {
        let mut row = vec![edition.to_string()];
        row.extend(matrix.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row).unwrap();
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::with_lengths;
    use super::super::*;

    #[test]
    fn continuation_rows() {
        let points = continuation_probability(&with_lengths(&[1, 1, 1, 2])).unwrap();
        assert_eq!(
            continuation_csv(&points),
            "k,reached,continued,probability\n1,4,1,0.25\n2,1,0,0\n"
        );
    }

    #[test]
    fn matrix_layout() {
        let m: SimilarityMatrix<f64> = jaccard_matrix(&with_lengths(&[1, 2]), None).unwrap();
        assert_eq!(
            similarity_csv(&m),
            "edition,e0wiki,e1wiki\ne0wiki,1,0.5\ne1wiki,0.5,1\n"
        );
    }

    #[test]
    fn histogram_rows() {
        let hist = length_distribution(&with_lengths(&[1, 1, 2, 4])).unwrap();
        assert_eq!(
            histogram_csv(&hist),
            "length,count,share,cumulative_share\n1,2,0.5,0.5\n2,1,0.25,0.75\n4,1,0.25,1\n"
        );
    }
}
