//! Evaluation: confusion matrices, per-class precision/recall/F1, pseudo-label
//! quality and predictive class proportions. Undefined ratios (0/0) are 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{ClassProportion, ProbVector};
use crate::select::PseudoLabelSet;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(num_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|c| self.counts[c][c]).sum()
    }

    /// `trace / total`, 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(
    truth: &[usize],
    predicted: &[usize],
    num_classes: usize,
) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::zeros(num_classes);
    for (&t, &p) in truth.iter().zip(predicted) {
        for label in [t, p] {
            if label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    classes: num_classes,
                });
            }
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

impl ClassScores {
    pub fn macro_precision(&self) -> f64 {
        mean(&self.precision)
    }

    pub fn macro_recall(&self) -> f64 {
        mean(&self.recall)
    }

    pub fn macro_f1(&self) -> f64 {
        mean(&self.f1)
    }

    pub fn worst_f1(&self) -> f64 {
        self.f1.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn precision_recall_f1(cm: &ConfusionMatrix) -> ClassScores {
    let n = cm.num_classes();
    let mut scores = ClassScores {
        precision: Vec::with_capacity(n),
        recall: Vec::with_capacity(n),
        f1: Vec::with_capacity(n),
    };
    for c in 0..n {
        let tp = cm.get(c, c);
        let p = ratio(tp, cm.col_sum(c));
        let r = ratio(tp, cm.row_sum(c));
        let f = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        scores.precision.push(p);
        scores.recall.push(r);
        scores.f1.push(f);
    }
    scores
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelQuality {
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub false_ratio: f64,
    /// Set when the pseudo set is empty; both ratios are then 0.
    pub empty: bool,
}

/// Fraction of pseudo labels that disagree with the hidden truth.
pub fn false_pseudo_label_ratio(
    pseudo: &PseudoLabelSet,
    truth: &BTreeMap<u64, usize>,
) -> Result<PseudoLabelQuality> {
    let mut correct = 0usize;
    for (id, label) in &pseudo.entries {
        let t = truth.get(id).ok_or(Error::MissingTruth(*id))?;
        if t == label {
            correct += 1;
        }
    }
    let count = pseudo.len();
    if count == 0 {
        return Ok(PseudoLabelQuality {
            count,
            correct,
            accuracy: 0.0,
            false_ratio: 0.0,
            empty: true,
        });
    }
    let wrong = count - correct;
    Ok(PseudoLabelQuality {
        count,
        correct,
        accuracy: correct as f64 / count as f64,
        false_ratio: wrong as f64 / count as f64,
        empty: false,
    })
}

/// Share of predictions whose argmax falls in each class.
pub fn predictive_class_proportion(predictions: &[ProbVector]) -> Result<ClassProportion> {
    let first = predictions.first().ok_or(Error::EmptyPredictions)?;
    let mut counts = vec![0usize; first.num_classes()];
    for p in predictions {
        if p.num_classes() != counts.len() {
            return Err(Error::ClassMismatch {
                expected: counts.len(),
                actual: p.num_classes(),
            });
        }
        counts[p.argmax()] += 1;
    }
    ClassProportion::from_counts(&counts)
}
