//! Accuracy, per-class precision/recall/F1, and macro-F1 over the three
//! sentiment classes.

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, NUM_CLASSES};
use crate::error::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Evaluation summary; serializes deterministically for report files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub count: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Rows are gold labels, columns predictions, both in class order
    /// negative, neutral, positive.
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
    pub negative: ClassMetrics,
    pub neutral: ClassMetrics,
    pub positive: ClassMetrics,
    /// Classes that occur in neither predictions nor golds; they contribute
    /// an F1 of zero to the macro average.
    pub absent_classes: Vec<String>,
}

fn confusion(preds: &[Label], golds: &[Label]) -> [[usize; NUM_CLASSES]; NUM_CLASSES] {
    let mut matrix = [[0usize; NUM_CLASSES]; NUM_CLASSES];
    for (p, g) in preds.iter().zip(golds) {
        matrix[g.index()][p.index()] += 1;
    }
    matrix
}

fn class_metrics(matrix: &[[usize; NUM_CLASSES]; NUM_CLASSES], class: usize) -> ClassMetrics {
    let tp = matrix[class][class];
    let predicted: usize = (0..NUM_CLASSES).map(|g| matrix[g][class]).sum();
    let actual: usize = (0..NUM_CLASSES).map(|p| matrix[class][p]).sum();
    let precision = if predicted > 0 { tp as f64 / predicted as f64 } else { 0.0 };
    let recall = if actual > 0 { tp as f64 / actual as f64 } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassMetrics { precision, recall, f1 }
}

/// Full evaluation of aligned prediction and gold sequences.
pub fn evaluate(preds: &[Label], golds: &[Label]) -> Result<MetricsReport, TrainError> {
    if preds.is_empty() || preds.len() != golds.len() {
        return Err(TrainError::EmptyEval);
    }
    let matrix = confusion(preds, golds);
    let correct: usize = (0..NUM_CLASSES).map(|c| matrix[c][c]).sum();
    let per_class: Vec<ClassMetrics> =
        (0..NUM_CLASSES).map(|c| class_metrics(&matrix, c)).collect();
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / NUM_CLASSES as f64;
    let absent: Vec<String> = (0..NUM_CLASSES)
        .filter(|&c| {
            let in_golds: usize = (0..NUM_CLASSES).map(|p| matrix[c][p]).sum();
            let in_preds: usize = (0..NUM_CLASSES).map(|g| matrix[g][c]).sum();
            in_golds == 0 && in_preds == 0
        })
        .map(|c| Label::from_index(c).unwrap().as_str().to_string())
        .collect();
    Ok(MetricsReport {
        variant: None,
        count: preds.len(),
        accuracy: correct as f64 / preds.len() as f64,
        macro_f1,
        confusion: matrix,
        negative: per_class[0],
        neutral: per_class[1],
        positive: per_class[2],
        absent_classes: absent,
    })
}

/// Fraction of matching predictions.
pub fn accuracy(preds: &[Label], golds: &[Label]) -> Result<f64, TrainError> {
    Ok(evaluate(preds, golds)?.accuracy)
}

/// Unweighted mean of per-class F1.
pub fn macro_f1(preds: &[Label], golds: &[Label]) -> Result<f64, TrainError> {
    Ok(evaluate(preds, golds)?.macro_f1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(indices: &[usize]) -> Vec<Label> {
        indices.iter().map(|&i| Label::from_index(i).unwrap()).collect()
    }

    #[test]
    fn all_correct_is_perfect() {
        let golds = labels(&[0, 1, 2, 0]);
        let report = evaluate(&golds, &golds).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
        assert!(report.absent_classes.is_empty());
    }

    #[test]
    fn worked_case_accuracy_and_macro_f1() {
        // preds [0,1,1,2] vs golds [0,0,1,2]: class F1s are 2/3, 2/3, 1
        let preds = labels(&[0, 1, 1, 2]);
        let golds = labels(&[0, 0, 1, 2]);
        let report = evaluate(&preds, &golds).unwrap();
        assert_eq!(report.accuracy, 0.75);
        assert!((report.macro_f1 - 7.0 / 9.0).abs() < 1e-15, "{}", report.macro_f1);
        assert!((report.negative.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((report.neutral.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(report.positive.f1, 1.0);
    }

    #[test]
    fn all_wrong_is_zero_accuracy() {
        let preds = labels(&[1, 2, 0]);
        let golds = labels(&[0, 1, 2]);
        assert_eq!(accuracy(&preds, &golds).unwrap(), 0.0);
    }

    #[test]
    fn absent_classes_pull_macro_f1_down() {
        // only the negative class appears; perfect on it, zero elsewhere
        let golds = labels(&[0, 0, 0]);
        let report = evaluate(&golds, &golds).unwrap();
        assert!((report.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(report.absent_classes, vec!["neutral", "positive"]);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(evaluate(&[], &[]), Err(TrainError::EmptyEval)));
    }

    #[test]
    fn confusion_total_matches_count() {
        let preds = labels(&[0, 1, 1, 2, 2, 0, 1]);
        let golds = labels(&[0, 0, 1, 2, 1, 2, 1]);
        let report = evaluate(&preds, &golds).unwrap();
        let total: usize = report.confusion.iter().flatten().sum();
        assert_eq!(total, report.count);
        let trace: usize = (0..3).map(|c| report.confusion[c][c]).sum();
        assert_eq!(report.accuracy, trace as f64 / report.count as f64);
    }
}
