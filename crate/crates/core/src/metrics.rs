//! Classification metrics: confusion matrices, accuracy, macro and weighted F1.
//!
//! Conventions: a class's F1 is 0 when precision + recall is 0 (including a
//! class with no support and no predictions). Macro F1 averages over every
//! class in the universe; weighted F1 weights each class by its true support.

use crate::data::{Federation, View};
use crate::error::{Error, Result};
use crate::numerics::{MlpConfig, MlpModel, WeightVector};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("confusion matrix must be square".into()));
        }
        Ok(Self {
            num_classes: n,
            counts: rows.concat(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.num_classes + pred]
    }

    pub fn record(&mut self, truth: usize, pred: usize) -> Result<()> {
        let c = self.num_classes;
        if truth >= c || pred >= c {
            return Err(Error::Label(format!(
                "(truth {truth}, prediction {pred}) outside {c} classes"
            )));
        }
        self.counts[truth * c + pred] += 1;
        Ok(())
    }

    /// Adds another matrix's counts into this one.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::Shape("cannot merge confusion matrices of different sizes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.num_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        (0..self.num_classes).map(|p| self.get(class, p)).sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        (0..self.num_classes).map(|t| self.get(t, class)).sum()
    }
}

pub fn confusion(preds: &[usize], truths: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            preds.len(),
            truths.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(num_classes);
    for (&p, &t) in preds.iter().zip(truths) {
        cm.record(t, p)?;
    }
    Ok(cm)
}

/// All values are percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class_f1: Vec<f64>,
}

pub fn report(cm: &ConfusionMatrix) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Metric("cannot report on an empty confusion matrix".into()));
    }
    let per_class_f1: Vec<f64> = (0..cm.num_classes())
        .map(|c| {
            let tp = cm.get(c, c) as f64;
            let predicted = cm.predicted(c) as f64;
            let support = cm.support(c) as f64;
            let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let recall = if support > 0.0 { tp / support } else { 0.0 };
            if precision + recall > 0.0 {
                100.0 * 2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            }
        })
        .collect();
    let macro_f1 = per_class_f1.iter().sum::<f64>() / cm.num_classes() as f64;
    let supports: Vec<u64> = (0..cm.num_classes()).map(|c| cm.support(c)).collect();
    // equal supports make the weights uniform; reuse the macro average so the
    // two agree exactly instead of up to rounding
    let weighted_f1 = if supports.windows(2).all(|w| w[0] == w[1]) {
        macro_f1
    } else {
        per_class_f1
            .iter()
            .zip(&supports)
            .map(|(f1, &s)| s as f64 * f1)
            .sum::<f64>()
            / total as f64
    };
    Ok(EvalReport {
        accuracy: 100.0 * cm.correct() as f64 / total as f64,
        macro_f1,
        weighted_f1,
        per_class_f1,
    })
}

/// Confusion matrix of `model` over the union of every client's view.
pub fn federation_confusion(model: &MlpModel, fed: &Federation, view: View) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(fed.num_classes);
    for client in &fed.clients {
        let (x, y) = client.view(view).materialize();
        if y.is_empty() {
            continue;
        }
        let preds = model.predict(&x)?;
        cm.merge(&confusion(&preds, &y, fed.num_classes)?)?;
    }
    Ok(cm)
}

/// Report on the union of all clients' test views.
pub fn global_eval(weights: &WeightVector, model: &MlpConfig, fed: &Federation) -> Result<EvalReport> {
    let net = MlpModel::unflatten(weights, model.clone())?;
    report(&federation_confusion(&net, fed, View::Test)?)
}

/// Anything carrying a round index and a global accuracy.
pub trait RoundAccuracy {
    fn round(&self) -> usize;
    fn global_accuracy(&self) -> f64;
}

/// First recorded round whose global accuracy reaches `threshold`.
pub fn rounds_to_threshold<T: RoundAccuracy>(trace: &[T], threshold: f64) -> Option<usize> {
    trace
        .iter()
        .find(|t| t.global_accuracy() >= threshold)
        .map(RoundAccuracy::round)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct_is_diagonal() {
        let cm = confusion(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(cm, ConfusionMatrix::from_rows(&[vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]).unwrap());
        let r = report(&cm).unwrap();
        assert_eq!((r.accuracy, r.macro_f1, r.weighted_f1), (100.0, 100.0, 100.0));
    }

    #[test]
    fn empty_inputs_give_a_zero_matrix() {
        let cm = confusion(&[], &[], 2).unwrap();
        assert_eq!(cm.total(), 0);
        assert!(matches!(report(&cm), Err(Error::Metric(_))));
    }

    #[test]
    fn counts_go_to_truth_row() {
        let cm = confusion(&[0, 1], &[1, 1], 2).unwrap();
        assert_eq!((cm.get(1, 0), cm.get(1, 1), cm.get(0, 0)), (1, 1, 0));
        assert!(confusion(&[2], &[0], 2).is_err());
        assert!(confusion(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn uniform_two_by_two() {
        let cm = ConfusionMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        let r = report(&cm).unwrap();
        assert_eq!(r.accuracy, 50.0);
        assert_eq!(r.per_class_f1, vec![50.0, 50.0]);
        assert_eq!((r.macro_f1, r.weighted_f1), (50.0, 50.0));
    }

    #[test]
    fn absent_class_scores_zero_without_weight() {
        // class 2 never appears in truth or predictions
        let with_absent = ConfusionMatrix::from_rows(&[vec![3, 1, 0], vec![0, 4, 0], vec![0, 0, 0]]).unwrap();
        let without = ConfusionMatrix::from_rows(&[vec![3, 1], vec![0, 4]]).unwrap();
        let a = report(&with_absent).unwrap();
        let b = report(&without).unwrap();
        assert_eq!(a.per_class_f1[2], 0.0);
        assert_eq!(a.weighted_f1, b.weighted_f1);
        assert!((a.macro_f1 - b.macro_f1 * 2.0 / 3.0).abs() < 1e-12);
    }

    struct Point(usize, f64);
    impl RoundAccuracy for Point {
        fn round(&self) -> usize {
            self.0
        }
        fn global_accuracy(&self) -> f64 {
            self.1
        }
    }

    #[test]
    fn threshold_crossing() {
        let trace: Vec<Point> = (1..=10).map(|r| Point(r, r as f64 * 10.0)).collect();
        assert_eq!(rounds_to_threshold(&trace, 65.0), Some(7));
        assert_eq!(rounds_to_threshold(&trace, 101.0), None);
        assert_eq!(rounds_to_threshold(&trace, 0.0), Some(1));
    }
}
