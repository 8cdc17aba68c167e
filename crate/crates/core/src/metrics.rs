//! Scoring for binary and ranked multiple-choice benchmarks.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub metrics: BTreeMap<String, f64>,
    pub n_items: usize,
}

impl ScoreReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn all_in_unit_interval(&self) -> bool {
        self.metrics.values().all(|v| (0.0..=1.0).contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricError {
    LengthMismatch { predictions: usize, items: usize },
    MalformedRanking { index: usize },
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::LengthMismatch { predictions, items } => {
                write!(f, "{predictions} predictions for {items} items")
            }
            MetricError::MalformedRanking { index } => {
                write!(f, "ranking {index} is not a permutation of the options")
            }
        }
    }
}

fn check_lengths(predictions: usize, items: usize) -> Result<(), MetricError> {
    if predictions != items || items == 0 {
        return Err(MetricError::LengthMismatch { predictions, items });
    }
    Ok(())
}

/// Accuracy, precision, recall and F1 with `true` as the positive class.
/// F1 is 0 when there are no true positives.
pub fn binary_scores(predictions: &[bool], truth: &[bool]) -> Result<ScoreReport, MetricError> {
    check_lengths(predictions.len(), truth.len())?;
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let n = truth.len() as f64;
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f1 = if tp == 0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    let mut metrics = BTreeMap::new();
    metrics.insert("accuracy".into(), (tp + tn) as f64 / n);
    metrics.insert("precision".into(), precision);
    metrics.insert("recall".into(), recall);
    metrics.insert("f1".into(), f1);
    Ok(ScoreReport { metrics, n_items: truth.len() })
}

/// Hit rate at each `k`: the fraction of rankings whose answer is among the
/// first `k` entries. Each ranking must be a permutation of `0..n_options`.
/// `top1` duplicates `hit@1`.
pub fn hit_rates(
    rankings: &[alloc::vec::Vec<usize>],
    answers: &[usize],
    n_options: usize,
    ks: &[usize],
) -> Result<ScoreReport, MetricError> {
    check_lengths(rankings.len(), answers.len())?;
    let mut hits = alloc::vec![0usize; ks.len()];
    let mut seen = alloc::vec![false; n_options];
    for (i, (ranking, &answer)) in rankings.iter().zip(answers).enumerate() {
        if ranking.len() != n_options {
            return Err(MetricError::MalformedRanking { index: i });
        }
        seen.iter_mut().for_each(|s| *s = false);
        for &opt in ranking {
            if opt >= n_options || seen[opt] {
                return Err(MetricError::MalformedRanking { index: i });
            }
            seen[opt] = true;
        }
        let pos = ranking.iter().position(|&o| o == answer).ok_or(MetricError::MalformedRanking { index: i })?;
        for (h, &k) in hits.iter_mut().zip(ks) {
            if pos < k {
                *h += 1;
            }
        }
    }
    let n = answers.len() as f64;
    let mut metrics = BTreeMap::new();
    for (&k, &h) in ks.iter().zip(&hits) {
        metrics.insert(format!("hit@{k}"), h as f64 / n);
        if k == 1 {
            metrics.insert("top1".into(), h as f64 / n);
        }
    }
    Ok(ScoreReport { metrics, n_items: answers.len() })
}

/// Fraction of `predictions` equal to the matching entry of `answers`.
pub fn exact_match_accuracy<T: PartialEq>(predictions: &[T], answers: &[T]) -> Result<ScoreReport, MetricError> {
    check_lengths(predictions.len(), answers.len())?;
    let correct = predictions.iter().zip(answers).filter(|(p, a)| p == a).count();
    let mut metrics = BTreeMap::new();
    metrics.insert("accuracy".into(), correct as f64 / answers.len() as f64);
    Ok(ScoreReport { metrics, n_items: answers.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn all_correct_binary() {
        let truth = [true, true, false, false];
        let r = binary_scores(&truth, &truth).unwrap();
        assert_eq!(r.get("accuracy"), Some(1.0));
        assert_eq!(r.get("f1"), Some(1.0));
    }

    #[test]
    fn all_negative_on_balanced_set() {
        let truth = [true, false, true, false, true, false];
        let preds = [false; 6];
        // confusion matrix: tp 0, tn 3, fp 0, fn 3
        let r = binary_scores(&preds, &truth).unwrap();
        assert_eq!(r.get("accuracy"), Some(3.0 / 6.0));
        assert_eq!(r.get("f1"), Some(0.0));
    }

    #[test]
    fn empty_is_length_mismatch() {
        assert!(matches!(binary_scores(&[], &[]), Err(MetricError::LengthMismatch { .. })));
        assert!(matches!(binary_scores(&[true], &[true, false]), Err(MetricError::LengthMismatch { .. })));
    }

    fn ranking_with_answer_at(answer: usize, pos: usize) -> Vec<usize> {
        let mut r: Vec<usize> = (0..10).filter(|&o| o != answer).collect();
        r.insert(pos, answer);
        r
    }

    #[test]
    fn answer_first_hits_everywhere() {
        let rankings: Vec<Vec<usize>> = (0..10).map(|a| ranking_with_answer_at(a, 0)).collect();
        let answers: Vec<usize> = (0..10).collect();
        let r = hit_rates(&rankings, &answers, 10, &[1, 3, 5]).unwrap();
        assert_eq!((r.get("hit@1"), r.get("hit@3"), r.get("hit@5")), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn answer_fourth() {
        let rankings: Vec<Vec<usize>> = (0..10).map(|a| ranking_with_answer_at(a, 3)).collect();
        let answers: Vec<usize> = (0..10).collect();
        let r = hit_rates(&rankings, &answers, 10, &[1, 3, 5]).unwrap();
        assert_eq!((r.get("hit@1"), r.get("hit@3"), r.get("hit@5")), (Some(0.0), Some(0.0), Some(1.0)));
    }

    #[test]
    fn non_permutation_is_malformed() {
        let bad = vec![vec![0, 0, 1, 2, 3, 4, 5, 6, 7, 8]];
        assert_eq!(hit_rates(&bad, &[0], 10, &[1]), Err(MetricError::MalformedRanking { index: 0 }));
        let short = vec![vec![0, 1]];
        assert_eq!(hit_rates(&short, &[0], 10, &[1]), Err(MetricError::MalformedRanking { index: 0 }));
    }

    #[test]
    fn exact_match_counts() {
        let r = exact_match_accuracy(&["a", "b", "x"], &["a", "b", "c"]).unwrap();
        assert_eq!(r.get("accuracy"), Some(2.0 / 3.0));
    }
}
