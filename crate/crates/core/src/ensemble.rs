//! The predicting phase: self-ensembling over two augmented passes,
//! calibration, sharpening, and the temporal (EMA) prediction store.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::apc::{calibrate, difficulty_ratio};
use crate::data::DomainDataset;
use crate::error::{Error, Result};
use crate::model::{augment, predict_proba, ModelParams};
use crate::prob::{normalize, sharpen, ClassProportion, ProbVector};

/// Which parts of the predicting phase are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ablation {
    pub use_apc: bool,
    pub use_se: bool,
    pub use_te: bool,
}

impl Ablation {
    pub const FULL: Ablation = Ablation {
        use_apc: true,
        use_se: true,
        use_te: true,
    };
    pub const NONE: Ablation = Ablation {
        use_apc: false,
        use_se: false,
        use_te: false,
    };
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation::FULL
    }
}

/// Predictions for every target sample, in dataset order.
///
/// With `use_se`, each sample is augmented twice (both draws taken before
/// moving to the next sample), `p(y)` is the mean over both prediction sets,
/// both sets are calibrated with the same ratio, averaged, then sharpened.
/// Without `use_se`, a single un-augmented pass is optionally calibrated and
/// then sharpened.
pub fn se_predict<R: Rng + ?Sized>(
    params: &ModelParams,
    targets: &DomainDataset,
    prior: &ClassProportion,
    temperature: f64,
    flags: Ablation,
    augment_std: f64,
    rng: &mut R,
) -> Result<Vec<ProbVector>> {
    if targets.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    if prior.num_classes() != params.num_classes() {
        return Err(Error::ClassMismatch {
            expected: params.num_classes(),
            actual: prior.num_classes(),
        });
    }

    if !flags.use_se {
        let mut preds = targets
            .samples()
            .iter()
            .map(|s| predict_proba(params, &s.features))
            .collect::<Result<Vec<_>>>()?;
        if flags.use_apc {
            let ratio = difficulty_ratio(prior, &preds)?;
            preds = preds
                .iter()
                .map(|p| calibrate(p, &ratio))
                .collect::<Result<_>>()?;
        }
        return preds.iter().map(|p| sharpen(p, temperature)).collect();
    }

    let mut first = Vec::with_capacity(targets.len());
    let mut second = Vec::with_capacity(targets.len());
    for s in targets.samples() {
        let x1 = augment(&s.features, augment_std, rng);
        let x2 = augment(&s.features, augment_std, rng);
        first.push(predict_proba(params, &x1)?);
        second.push(predict_proba(params, &x2)?);
    }
    if flags.use_apc {
        let ratio = difficulty_ratio(prior, first.iter().chain(&second))?;
        for p in first.iter_mut().chain(second.iter_mut()) {
            *p = calibrate(p, &ratio)?;
        }
    }
    first
        .iter()
        .zip(&second)
        .map(|(a, b)| {
            let avg: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| 0.5 * (x + y)).collect();
            sharpen(&normalize(&avg)?, temperature)
        })
        .collect()
}

/// Per-sample EMA of predicting-phase outputs, keyed by target id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStore {
    z: BTreeMap<u64, ProbVector>,
    alpha: f64,
    initialized: bool,
}

impl EnsembleStore {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::config("alpha", format!("{alpha} is outside [0, 1)")));
        }
        Ok(EnsembleStore {
            z: BTreeMap::new(),
            alpha,
            initialized: false,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn get(&self, id: u64) -> Option<&ProbVector> {
        self.z.get(&id)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.z.keys().copied()
    }

    /// `(id, z)` pairs in ascending id order.
    pub fn entries(&self) -> Vec<(u64, ProbVector)> {
        self.z.iter().map(|(&id, p)| (id, p.clone())).collect()
    }
}

/// `Z[id] ← α Z[id] + (1 − α) fresh`. The first call on an uninitialized
/// store copies `fresh` in directly.
pub fn te_update(store: &EnsembleStore, fresh: &[(u64, ProbVector)]) -> Result<EnsembleStore> {
    let mut next = store.clone();
    if !store.initialized {
        for (id, p) in fresh {
            if next.z.insert(*id, p.clone()).is_some() {
                return Err(Error::DuplicateId(*id));
            }
        }
        next.initialized = true;
        return Ok(next);
    }
    let alpha = store.alpha;
    for (id, p) in fresh {
        let z = next.z.get_mut(id).ok_or(Error::UnknownId(*id))?;
        if z.num_classes() != p.num_classes() {
            return Err(Error::ClassMismatch {
                expected: z.num_classes(),
                actual: p.num_classes(),
            });
        }
        let mixed: Vec<f64> = z
            .iter()
            .zip(p.iter())
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        *z = ProbVector::new(mixed)?;
    }
    Ok(next)
}
