//! Adaptive prediction calibration.
//!
//! The difficulty ratio `R = q ⊘ p̄` compares a prior class proportion `q`
//! with the mean prediction `p̄` over the target set. Calibration rescales a
//! prediction by `R` and renormalizes, so under-predicted (hard) classes gain
//! mass and over-predicted (easy) classes lose it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{mean_distribution, normalize, ClassProportion, ProbVector};

/// Mean-prediction entries are clamped to at least this value before division.
pub const MEAN_PREDICTION_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyRatio(Vec<f64>);

impl DifficultyRatio {
    /// All-ones ratio: calibration becomes the identity.
    pub fn ones(classes: usize) -> Self {
        DifficultyRatio(vec![1.0; classes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }
}

/// `R = q ⊘ mean(predictions)`.
///
/// Fails with `DegenerateClass` when the mean prediction has collapsed onto a
/// single class (every other entry is below [`MEAN_PREDICTION_FLOOR`]).
pub fn difficulty_ratio<'a, I>(q: &ClassProportion, predictions: I) -> Result<DifficultyRatio>
where
    I: IntoIterator<Item = &'a ProbVector>,
{
    let mean = mean_distribution(predictions)?;
    ratio_from_mean(q, &mean)
}

/// `R = q ⊘ p̄` for an already computed mean prediction `p̄`.
pub fn ratio_from_mean(q: &ClassProportion, mean: &ClassProportion) -> Result<DifficultyRatio> {
    if q.num_classes() != mean.num_classes() {
        return Err(Error::ClassMismatch {
            expected: q.num_classes(),
            actual: mean.num_classes(),
        });
    }
    if let Some((index, &value)) = q.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::InvalidProportion { index, value });
    }
    let starved = mean.iter().filter(|&&x| x < MEAN_PREDICTION_FLOOR).count();
    if starved + 1 >= mean.num_classes() {
        return Err(Error::DegenerateClass {
            proportion: mean.to_vec(),
        });
    }
    Ok(DifficultyRatio(
        q.iter()
            .zip(mean.iter())
            .map(|(&qc, &pc)| qc / pc.max(MEAN_PREDICTION_FLOOR))
            .collect(),
    ))
}

/// `normalize(R ⊙ p)`.
pub fn calibrate(p: &ProbVector, ratio: &DifficultyRatio) -> Result<ProbVector> {
    if p.num_classes() != ratio.num_classes() {
        return Err(Error::ClassMismatch {
            expected: ratio.num_classes(),
            actual: p.num_classes(),
        });
    }
    let scaled: Vec<f64> = p.iter().zip(&ratio.0).map(|(x, r)| x * r).collect();
    normalize(&scaled)
}
