//! Probability-vector kernels shared by calibration, ensembling and selection.
//!
//! All arithmetic is `f64`. A [`ProbVector`] is a per-sample class
//! distribution; a [`ClassProportion`] is a distribution over classes for a
//! whole dataset. Both hold the same invariant (nonnegative, sums to one) and
//! are kept as separate types so the two roles cannot be swapped by accident.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed drift of the entry sum from 1 when constructing from raw values.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Below this total mass a vector is treated as all-zero.
const MIN_MASS: f64 = 1e-300;

/// Sums this close to 1 are left untouched by [`normalize`], which makes it idempotent bit-for-bit.
const EXACT_SUM_TOLERANCE: f64 = 1e-15;

fn check_entries(v: &[f64]) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::TooFewClasses(v.len()));
    }
    for (index, &value) in v.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if value < 0.0 {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    Ok(())
}

fn validated_distribution(v: Vec<f64>) -> Result<Vec<f64>> {
    check_entries(&v)?;
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotNormalized { sum });
    }
    if (sum - 1.0).abs() <= EXACT_SUM_TOLERANCE {
        Ok(v)
    } else {
        Ok(v.into_iter().map(|x| x / sum).collect())
    }
}

/// Class probabilities of a single sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates `probs`, renormalizing when the sum is within [`SUM_TOLERANCE`] of 1.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validated_distribution(probs).map(ProbVector)
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        Ok(ProbVector(vec![1.0 / classes as f64; classes]))
    }

    pub fn one_hot(classes: usize, class: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        if class >= classes {
            return Err(Error::LabelOutOfRange {
                label: class,
                classes,
            });
        }
        let mut v = vec![0.0; classes];
        v[class] = 1.0;
        Ok(ProbVector(v))
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Winning class under lowest-index tie-breaking.
    pub fn argmax(&self) -> usize {
        argmax_stable(&self.0)
    }

    /// Probability of the winning class.
    pub fn confidence(&self) -> f64 {
        self.0[self.argmax()]
    }
}

impl Deref for ProbVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbVector::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// A distribution over classes for a whole domain: `q(y)`, `p(y)`, or an
/// empirical predictive proportion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassProportion(Vec<f64>);

impl ClassProportion {
    pub fn new(props: Vec<f64>) -> Result<Self> {
        validated_distribution(props).map(ClassProportion)
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        ProbVector::uniform(classes).map(|p| ClassProportion(p.0))
    }

    /// Normalized histogram of `counts`.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        if counts.len() < 2 {
            return Err(Error::TooFewClasses(counts.len()));
        }
        Ok(ClassProportion(
            counts.iter().map(|&c| c as f64 / total as f64).collect(),
        ))
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// L1 distance to another proportion of the same length.
    pub fn l1_distance(&self, other: &ClassProportion) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl Deref for ClassProportion {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ClassProportion {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ClassProportion::new(v)
    }
}

impl From<ClassProportion> for Vec<f64> {
    fn from(p: ClassProportion) -> Self {
        p.0
    }
}

/// Scales nonnegative `v` to unit sum. Vectors already summing to 1 within
/// 1e-15 are returned unchanged.
pub fn normalize(v: &[f64]) -> Result<ProbVector> {
    check_entries(v)?;
    let sum: f64 = v.iter().sum();
    if sum <= MIN_MASS {
        return Err(Error::ZeroMass);
    }
    if (sum - 1.0).abs() <= EXACT_SUM_TOLERANCE {
        return Ok(ProbVector(v.to_vec()));
    }
    Ok(ProbVector(v.iter().map(|x| x / sum).collect()))
}

/// `normalize(p^(1/T))`. Entries are divided by the maximum before the power
/// so that small temperatures do not underflow the winning class.
pub fn sharpen(p: &ProbVector, temperature: f64) -> Result<ProbVector> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidTemperature(temperature));
    }
    if temperature == 1.0 {
        return Ok(p.clone());
    }
    let max = p.confidence();
    let inv_t = 1.0 / temperature;
    let powered: Vec<f64> = p.iter().map(|&x| (x / max).powf(inv_t)).collect();
    normalize(&powered)
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &ProbVector) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Index of the largest entry; ties go to the lowest index.
///
/// NaN entries never win. Panics on an empty slice.
pub fn argmax_stable(v: &[f64]) -> usize {
    assert!(!v.is_empty(), "argmax of empty slice");
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] || v[best].is_nan() {
            best = i;
        }
    }
    best
}

/// Element-wise mean of equally sized probability vectors.
pub fn mean_distribution<'a, I>(vectors: I) -> Result<ClassProportion>
where
    I: IntoIterator<Item = &'a ProbVector>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(Error::EmptyPredictions)?;
    let mut acc = first.0.clone();
    let mut n = 1usize;
    for p in iter {
        if p.len() != acc.len() {
            return Err(Error::ClassMismatch {
                expected: acc.len(),
                actual: p.len(),
            });
        }
        for (a, x) in acc.iter_mut().zip(p.iter()) {
            *a += x;
        }
        n += 1;
    }
    for a in &mut acc {
        *a /= n as f64;
    }
    ClassProportion::new(acc)
}
