//! Classification scoring: confusion matrix, overall accuracy, and
//! per-class / grouped F1.

use crate::signal::{Family, CLASS_TABLE, FAMILIES};
use crate::{Error, Result};

/// Square count table; rows index ground truth, columns the prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

/// Precision / recall / F1 for one class. `zero_support` marks classes
/// that never appeared as ground truth; their F1 is defined as 0 so
/// macro averages stay finite on small splits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub zero_support: bool,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix { n_classes, counts: vec![0; n_classes * n_classes] }
    }

    /// Builds the matrix from parallel label/prediction slices.
    pub fn from_pairs(labels: &[usize], predictions: &[usize], n_classes: usize) -> Result<Self> {
        if labels.len() != predictions.len() {
            return Err(Error::CountMismatch(format!(
                "{} labels vs {} predictions",
                labels.len(),
                predictions.len()
            )));
        }
        let mut cm = ConfusionMatrix::new(n_classes);
        for (&t, &p) in labels.iter().zip(predictions) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, prediction: usize) -> Result<()> {
        if truth >= self.n_classes || prediction >= self.n_classes {
            return Err(Error::Config(format!(
                "class out of range: truth {truth}, prediction {prediction}, have {} classes",
                self.n_classes
            )));
        }
        self.counts[truth * self.n_classes + prediction] += 1;
        Ok(())
    }

    /// Adds another matrix of the same shape (for parallel evaluation
    /// shards; addition is order-independent).
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes != self.n_classes {
            return Err(Error::Shape(format!(
                "cannot merge a {}-class matrix into a {}-class one",
                other.n_classes, self.n_classes
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn count(&self, truth: usize, prediction: usize) -> u64 {
        self.counts[truth * self.n_classes + prediction]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Ground-truth count for one class (row sum).
    pub fn support(&self, class: usize) -> u64 {
        self.counts[class * self.n_classes..(class + 1) * self.n_classes].iter().sum()
    }

    /// Prediction count for one class (column sum).
    pub fn predicted(&self, class: usize) -> u64 {
        (0..self.n_classes).map(|t| self.count(t, class)).sum()
    }

    /// Correct / total. A matrix with no samples has no accuracy.
    pub fn overall_accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::Config("no samples: empty confusion matrix".into()));
        }
        let correct: u64 = (0..self.n_classes).map(|c| self.count(c, c)).sum();
        Ok(correct as f64 / total as f64)
    }

    /// Precision, recall, and F1 for every class. Empty denominators
    /// yield 0 rather than NaN.
    pub fn f1_per_class(&self) -> Vec<ClassScore> {
        (0..self.n_classes)
            .map(|c| {
                let tp = self.count(c, c) as f64;
                let support = self.support(c);
                let pred = self.predicted(c) as f64;
                let precision = if pred > 0.0 { tp / pred } else { 0.0 };
                let recall = if support > 0 { tp / support as f64 } else { 0.0 };
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassScore { precision, recall, f1, support, zero_support: support == 0 }
            })
            .collect()
    }

    /// Unweighted mean F1 over a class subset.
    pub fn macro_f1(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            return Err(Error::Config("macro F1 over an empty class subset".into()));
        }
        let scores = self.f1_per_class();
        let mut sum = 0.0;
        for &c in subset {
            let s = scores.get(c).ok_or_else(|| {
                Error::Config(format!("class {c} out of range for macro F1"))
            })?;
            sum += s.f1;
        }
        Ok(sum / subset.len() as f64)
    }

    /// Rows as slices, for report formatting.
    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.n_classes..(truth + 1) * self.n_classes]
    }
}

/// Class-id groups for the eight interference families, in table order.
/// Only meaningful for the full 21-class label space.
pub fn family_groups() -> Vec<(Family, Vec<usize>)> {
    FAMILIES
        .iter()
        .map(|&f| {
            let ids = CLASS_TABLE
                .iter()
                .filter(|c| c.family == f)
                .map(|c| c.id as usize)
                .collect();
            (f, ids)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_table() {
        let cm = ConfusionMatrix::from_pairs(&[0, 1, 1, 2], &[0, 0, 1, 2], 3).unwrap();
        assert_eq!(cm.count(0, 0), 1);
        assert_eq!(cm.count(1, 0), 1);
        assert_eq!(cm.count(1, 1), 1);
        assert_eq!(cm.count(2, 2), 1);
        assert_eq!(cm.total(), 4);
        assert_eq!(cm.overall_accuracy().unwrap(), 0.75);
        let scores = cm.f1_per_class();
        // Class 1: precision 1 (only predicted once, correctly), recall
        // 1/2 (one of its two samples found) -> F1 = 2/3.
        assert_eq!(scores[1].precision, 1.0);
        assert_eq!(scores[1].recall, 0.5);
        assert!((scores[1].f1 - 2.0 / 3.0).abs() < 1e-15);
        // Class 0: precision 1/2, recall 1 -> F1 = 2/3.
        assert!((scores[0].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(scores[2].f1, 1.0);
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix::from_pairs(&[0, 1, 2, 2], &[0, 1, 2, 2], 3).unwrap();
        assert_eq!(cm.overall_accuracy().unwrap(), 1.0);
        assert!(cm.f1_per_class().iter().all(|s| s.f1 == 1.0));
        assert_eq!(cm.macro_f1(&[0, 1, 2]).unwrap(), 1.0);
    }

    #[test]
    fn empty_matrix_has_no_accuracy() {
        let cm = ConfusionMatrix::from_pairs(&[], &[], 4).unwrap();
        assert_eq!(cm.total(), 0);
        assert!(cm.overall_accuracy().is_err());
    }

    #[test]
    fn zero_support_is_flagged_not_nan() {
        let cm = ConfusionMatrix::from_pairs(&[0, 0], &[0, 2], 3).unwrap();
        let scores = cm.f1_per_class();
        assert!(scores[1].zero_support);
        assert_eq!(scores[1].f1, 0.0);
        // Class 2 was predicted but never true: also zero support.
        assert!(scores[2].zero_support);
        assert_eq!(scores[2].f1, 0.0);
        assert!(scores.iter().all(|s| s.f1.is_finite()));
    }

    #[test]
    fn macro_subset_rules() {
        let cm = ConfusionMatrix::from_pairs(&[0, 1, 1, 2], &[0, 0, 1, 2], 3).unwrap();
        assert!(cm.macro_f1(&[]).is_err());
        assert!(cm.macro_f1(&[7]).is_err());
        // Uniform macro over all classes = mean of per-class F1.
        let scores = cm.f1_per_class();
        let mean: f64 = scores.iter().map(|s| s.f1).sum::<f64>() / 3.0;
        assert!((cm.macro_f1(&[0, 1, 2]).unwrap() - mean).abs() < 1e-15);
    }

    #[test]
    fn row_sums_are_class_counts() {
        let labels = [0usize, 0, 1, 2, 2, 2];
        let preds = [1usize, 0, 1, 2, 0, 2];
        let cm = ConfusionMatrix::from_pairs(&labels, &preds, 3).unwrap();
        assert_eq!(cm.support(0), 2);
        assert_eq!(cm.support(1), 1);
        assert_eq!(cm.support(2), 3);
        assert_eq!(cm.total(), 6);
        // Counting is order-independent.
        let rev_labels: Vec<usize> = labels.iter().rev().copied().collect();
        let rev_preds: Vec<usize> = preds.iter().rev().copied().collect();
        let cm2 = ConfusionMatrix::from_pairs(&rev_labels, &rev_preds, 3).unwrap();
        assert_eq!(cm, cm2);
    }

    #[test]
    fn merge_adds_counts() {
        let a = ConfusionMatrix::from_pairs(&[0, 1], &[0, 1], 2).unwrap();
        let b = ConfusionMatrix::from_pairs(&[1, 1], &[0, 1], 2).unwrap();
        let mut m = a.clone();
        m.merge(&b).unwrap();
        assert_eq!(m.total(), 4);
        assert_eq!(m.count(1, 0), 1);
        assert_eq!(m.count(1, 1), 2);
        let wrong = ConfusionMatrix::new(3);
        assert!(m.merge(&wrong).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfusionMatrix::from_pairs(&[0, 1], &[0], 2).is_err());
        assert!(ConfusionMatrix::from_pairs(&[0, 5], &[0, 1], 2).is_err());
        assert!(ConfusionMatrix::from_pairs(&[0, 1], &[0, 2], 2).is_err());
    }

    #[test]
    fn families_partition_the_class_table() {
        let groups = family_groups();
        assert_eq!(groups.len(), 8);
        let mut seen: Vec<usize> = groups.iter().flat_map(|(_, ids)| ids.clone()).collect();
        seen.sort_unstable();
        let expect: Vec<usize> = (0..crate::signal::N_CLASSES).collect();
        assert_eq!(seen, expect);
        assert!(groups.iter().all(|(_, ids)| !ids.is_empty()));
    }
}
