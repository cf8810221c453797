//! Class-balanced pseudo-label selection.
//!
//! Each class `c` gets a confidence threshold equal to the rank-`⌈p·N_c/100⌉`
//! confidence among samples currently predicted as `c`. A sample is labeled
//! with the argmax of its threshold-scaled scores `z_c / threshold_c` when
//! that winning score reaches 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{argmax_stable, ProbVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortionSchedule {
    pub slope: f64,
    pub intercept: f64,
    pub cap: f64,
}

impl Default for PortionSchedule {
    fn default() -> Self {
        PortionSchedule {
            slope: 5.0,
            intercept: 10.0,
            cap: 90.0,
        }
    }
}

impl PortionSchedule {
    /// `min(slope·r + intercept, cap)` percent; rounds start at 1.
    pub fn portion_at_round(&self, round: usize) -> f64 {
        (self.slope * round as f64 + self.intercept).min(self.cap)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cap > 0.0 && self.cap <= 100.0) {
            return Err(Error::config("portion.cap", "must lie in (0, 100]"));
        }
        if !(self.slope >= 0.0) || !self.slope.is_finite() {
            return Err(Error::config("portion.slope", "must be nonnegative"));
        }
        if !(self.intercept + self.slope > 0.0) || !self.intercept.is_finite() {
            return Err(Error::config(
                "portion.intercept",
                "portion at round 1 must be positive",
            ));
        }
        Ok(())
    }
}

/// Per-class confidence thresholds. `f64::INFINITY` marks a class with no
/// predicted samples, which can then never be selected.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassThresholds(Vec<f64>);

impl ClassThresholds {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NegativeEntry { index, value });
        }
        Ok(ClassThresholds(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }
}

/// Number of samples a class of size `n` contributes at `percent`, at least 1 when `n > 0`.
pub fn selection_rank(percent: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    // multiply first so that integral percentages stay exact
    let rank = (percent * n as f64 / 100.0).ceil() as usize;
    rank.clamp(1, n)
}

pub fn class_thresholds(
    z: &[(u64, ProbVector)],
    percent: f64,
    num_classes: usize,
) -> Result<ClassThresholds> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::config(
            "portion",
            format!("{percent} is outside (0, 100]"),
        ));
    }
    let mut confidences: Vec<Vec<f64>> = vec![Vec::new(); num_classes];
    for (_, p) in z {
        if p.num_classes() != num_classes {
            return Err(Error::ClassMismatch {
                expected: num_classes,
                actual: p.num_classes(),
            });
        }
        let c = p.argmax();
        confidences[c].push(p[c]);
    }
    let thresholds = confidences
        .into_iter()
        .map(|mut conf| {
            if conf.is_empty() {
                return f64::INFINITY;
            }
            conf.sort_by(|a, b| b.total_cmp(a));
            conf[selection_rank(percent, conf.len()) - 1]
        })
        .collect();
    Ok(ClassThresholds(thresholds))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    pub entries: BTreeMap<u64, usize>,
    pub round: usize,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Count of pseudo labels per class.
    pub fn class_counts(&self, num_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_classes];
        for &label in self.entries.values() {
            counts[label] += 1;
        }
        counts
    }
}

/// Threshold-scaled argmax selection; unselected samples are left out.
pub fn cbst_select(
    z: &[(u64, ProbVector)],
    thresholds: &ClassThresholds,
    round: usize,
) -> Result<PseudoLabelSet> {
    let mut entries = BTreeMap::new();
    let mut scaled = vec![0.0; thresholds.num_classes()];
    for (id, p) in z {
        if p.num_classes() != thresholds.num_classes() {
            return Err(Error::ClassMismatch {
                expected: thresholds.num_classes(),
                actual: p.num_classes(),
            });
        }
        for ((s, &prob), &t) in scaled.iter_mut().zip(p.iter()).zip(&thresholds.0) {
            *s = if t.is_infinite() { 0.0 } else { prob / t };
        }
        let winner = argmax_stable(&scaled);
        if scaled[winner] >= 1.0 && entries.insert(*id, winner).is_some() {
            return Err(Error::DuplicateId(*id));
        }
    }
    Ok(PseudoLabelSet { entries, round })
}
