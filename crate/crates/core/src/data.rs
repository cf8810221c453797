//! Domain datasets, the synthetic covariate-shift generator and CSV IO.
//!
//! Target samples carry their ground truth in `hidden_label`. Training code
//! only ever reads `label`, which is always `None` on target datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::ClassProportion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    /// Label visible to training.
    pub label: Option<usize>,
    /// Ground truth kept for evaluation only.
    pub hidden_label: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTag {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    samples: Vec<Sample>,
    num_classes: usize,
    dim: usize,
    domain: DomainTag,
}

impl DomainDataset {
    pub fn new(
        samples: Vec<Sample>,
        num_classes: usize,
        dim: usize,
        domain: DomainTag,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::TooFewClasses(num_classes));
        }
        let mut seen = BTreeSet::new();
        for s in &samples {
            if !seen.insert(s.id) {
                return Err(Error::DuplicateId(s.id));
            }
            if s.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: s.features.len(),
                });
            }
            if let Some(i) = s.features.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            for label in s.label.iter().chain(s.hidden_label.iter()) {
                if *label >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        label: *label,
                        classes: num_classes,
                    });
                }
            }
            match domain {
                DomainTag::Source if s.label.is_none() => {
                    return Err(Error::UnlabeledSample { id: s.id })
                }
                DomainTag::Target if s.label.is_some() => {
                    return Err(Error::spec(
                        "label",
                        format!("target sample {} exposes a training label", s.id),
                    ))
                }
                _ => {}
            }
        }
        Ok(DomainDataset {
            samples,
            num_classes,
            dim,
            domain,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.samples.iter().map(|s| s.id)
    }

    /// Ground truth by id, for every sample that has a hidden label.
    pub fn hidden_truth(&self) -> BTreeMap<u64, usize> {
        self.samples
            .iter()
            .filter_map(|s| s.hidden_label.map(|l| (s.id, l)))
            .collect()
    }

    /// True when every sample carries a hidden label.
    pub fn has_full_truth(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.hidden_label.is_some())
    }

    /// Copy with every hidden label removed.
    pub fn without_hidden_labels(&self) -> DomainDataset {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.hidden_label = None;
        }
        out
    }
}

/// Empirical class proportion of the visible labels.
pub fn class_proportion(ds: &DomainDataset) -> Result<ClassProportion> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = vec![0usize; ds.num_classes()];
    for s in ds.samples() {
        let label = s.label.ok_or(Error::UnlabeledSample { id: s.id })?;
        counts[label] += 1;
    }
    ClassProportion::from_counts(&counts)
}

/// Class proportion of the hidden labels (analysis only).
pub fn hidden_class_proportion(ds: &DomainDataset) -> Result<ClassProportion> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = vec![0usize; ds.num_classes()];
    for s in ds.samples() {
        let label = s.hidden_label.ok_or(Error::MissingTruth(s.id))?;
        counts[label] += 1;
    }
    ClassProportion::from_counts(&counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardClass {
    /// Class whose target cluster is dragged away.
    pub victim: usize,
    /// Class it is dragged toward.
    pub confusable: usize,
    /// Fraction of the way from the victim's to the confusable class's center.
    pub pull_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub n_source_per_class: usize,
    pub n_target_per_class: usize,
    pub class_centers: Vec<Vec<f64>>,
    pub within_class_std: f64,
    pub target_translation: Vec<f64>,
    /// Radians, applied in the first two coordinates.
    #[serde(default)]
    pub target_rotation_angle: f64,
    #[serde(default)]
    pub hard_class: Option<HardClass>,
    #[serde(default)]
    pub source_class_weights: Option<ClassProportion>,
    pub seed: u64,
}

impl ShiftSpec {
    /// The 5-class, 8-dimensional benchmark with one hard class used by the
    /// acceptance experiments.
    pub fn standard_benchmark(seed: u64) -> ShiftSpec {
        let num_classes = 5;
        let dim = 8;
        let separation = 3.5;
        let class_centers = (0..num_classes)
            .map(|c| {
                let mut v = vec![0.0; dim];
                v[c] = separation;
                v
            })
            .collect();
        ShiftSpec {
            num_classes,
            dim,
            n_source_per_class: 200,
            n_target_per_class: 200,
            class_centers,
            within_class_std: 1.0,
            target_translation: vec![0.4, -0.3, 0.3, 0.0, -0.2, 0.5, -0.5, 0.3],
            target_rotation_angle: 0.3,
            hard_class: Some(HardClass {
                victim: 3,
                confusable: 1,
                pull_fraction: 0.75,
            }),
            source_class_weights: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::spec("num_classes", "must be at least 2"));
        }
        if self.dim < 1 {
            return Err(Error::spec("dim", "must be at least 1"));
        }
        if self.n_source_per_class < 1 {
            return Err(Error::spec("n_source_per_class", "must be at least 1"));
        }
        if self.n_target_per_class < 1 {
            return Err(Error::spec("n_target_per_class", "must be at least 1"));
        }
        if self.class_centers.len() != self.num_classes {
            return Err(Error::spec(
                "class_centers",
                format!(
                    "expected {} centers, got {}",
                    self.num_classes,
                    self.class_centers.len()
                ),
            ));
        }
        for (c, center) in self.class_centers.iter().enumerate() {
            if center.len() != self.dim || center.iter().any(|x| !x.is_finite()) {
                return Err(Error::spec(
                    &format!("class_centers.{c}"),
                    format!("must hold {} finite coordinates", self.dim),
                ));
            }
        }
        if !(self.within_class_std > 0.0) || !self.within_class_std.is_finite() {
            return Err(Error::spec("within_class_std", "must be positive"));
        }
        if self.target_translation.len() != self.dim
            || self.target_translation.iter().any(|x| !x.is_finite())
        {
            return Err(Error::spec(
                "target_translation",
                format!("must hold {} finite coordinates", self.dim),
            ));
        }
        if !self.target_rotation_angle.is_finite() {
            return Err(Error::spec("target_rotation_angle", "must be finite"));
        }
        if self.target_rotation_angle != 0.0 && self.dim < 2 {
            return Err(Error::spec(
                "target_rotation_angle",
                "rotation needs at least 2 dimensions",
            ));
        }
        if let Some(h) = &self.hard_class {
            if h.victim >= self.num_classes {
                return Err(Error::spec("hard_class.victim", "class index out of range"));
            }
            if h.confusable >= self.num_classes {
                return Err(Error::spec(
                    "hard_class.confusable",
                    "class index out of range",
                ));
            }
            if h.victim == h.confusable {
                return Err(Error::spec(
                    "hard_class.confusable",
                    "must differ from the victim class",
                ));
            }
            if !(0.0..=1.0).contains(&h.pull_fraction) {
                return Err(Error::spec(
                    "hard_class.pull_fraction",
                    format!("{} is outside [0, 1]", h.pull_fraction),
                ));
            }
        }
        if let Some(w) = &self.source_class_weights {
            if w.num_classes() != self.num_classes {
                return Err(Error::spec(
                    "source_class_weights",
                    format!("expected {} entries", self.num_classes),
                ));
            }
        }
        Ok(())
    }

    fn source_counts(&self) -> Vec<usize> {
        match &self.source_class_weights {
            None => vec![self.n_source_per_class; self.num_classes],
            Some(w) => {
                let total = (self.n_source_per_class * self.num_classes) as f64;
                w.iter()
                    .map(|&x| ((x * total).round() as usize).max(1))
                    .collect()
            }
        }
    }

    fn target_centers(&self) -> Vec<Vec<f64>> {
        let (sin, cos) = self.target_rotation_angle.sin_cos();
        let mut centers: Vec<Vec<f64>> = self
            .class_centers
            .iter()
            .map(|c| {
                let mut t = c.clone();
                if self.dim >= 2 {
                    t[0] = c[0] * cos - c[1] * sin;
                    t[1] = c[0] * sin + c[1] * cos;
                }
                for (x, shift) in t.iter_mut().zip(&self.target_translation) {
                    *x += shift;
                }
                t
            })
            .collect();
        if let Some(h) = &self.hard_class {
            let pull: Vec<f64> = self.class_centers[h.confusable]
                .iter()
                .zip(&self.class_centers[h.victim])
                .map(|(e, v)| h.pull_fraction * (e - v))
                .collect();
            for (x, d) in centers[h.victim].iter_mut().zip(pull) {
                *x += d;
            }
        }
        centers
    }
}

fn draw_blob(rng: &mut ChaCha8Rng, center: &[f64], std: f64) -> Vec<f64> {
    center
        .iter()
        .map(|&m| {
            let z: f64 = StandardNormal.sample(rng);
            m + std * z
        })
        .collect()
}

/// Draws a labeled source set and a target set with hidden labels.
///
/// Source ids run from 0; target ids continue after the last source id.
/// Draw order is source classes, then target classes, each class sample by
/// sample, from a single ChaCha8 stream seeded with `spec.seed`.
pub fn generate_shifted_pair(spec: &ShiftSpec) -> Result<(DomainDataset, DomainDataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std = spec.within_class_std;
    let mut next_id = 0u64;

    let mut source = Vec::new();
    for (class, &count) in spec.source_counts().iter().enumerate() {
        for _ in 0..count {
            source.push(Sample {
                id: next_id,
                features: draw_blob(&mut rng, &spec.class_centers[class], std),
                label: Some(class),
                hidden_label: None,
            });
            next_id += 1;
        }
    }

    let mut target = Vec::new();
    for (class, center) in spec.target_centers().iter().enumerate() {
        for _ in 0..spec.n_target_per_class {
            target.push(Sample {
                id: next_id,
                features: draw_blob(&mut rng, center, std),
                label: None,
                hidden_label: Some(class),
            });
            next_id += 1;
        }
    }

    Ok((
        DomainDataset::new(source, spec.num_classes, spec.dim, DomainTag::Source)?,
        DomainDataset::new(target, spec.num_classes, spec.dim, DomainTag::Target)?,
    ))
}

/// Moves `shots_per_class` revealed target samples of every class into the
/// source set. `shots_per_class == 0` returns the inputs unchanged.
pub fn compose_ssda_source(
    source: &DomainDataset,
    target: &DomainDataset,
    shots_per_class: usize,
    seed: u64,
) -> Result<(DomainDataset, DomainDataset)> {
    if source.num_classes() != target.num_classes() {
        return Err(Error::ClassMismatch {
            expected: source.num_classes(),
            actual: target.num_classes(),
        });
    }
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            actual: target.dim(),
        });
    }
    if shots_per_class == 0 {
        return Ok((source.clone(), target.clone()));
    }

    let classes = target.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, s) in target.samples().iter().enumerate() {
        let label = s.hidden_label.ok_or(Error::MissingTruth(s.id))?;
        by_class[label].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut moved = vec![false; target.len()];
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.len() < shots_per_class {
            return Err(Error::InsufficientSamples {
                class,
                available: members.len(),
                required: shots_per_class,
            });
        }
        members.shuffle(&mut rng);
        for &i in &members[..shots_per_class] {
            moved[i] = true;
        }
    }

    let mut new_source = source.samples().to_vec();
    let mut new_target = Vec::with_capacity(target.len() - classes * shots_per_class);
    for (s, &m) in target.samples().iter().zip(&moved) {
        if m {
            new_source.push(Sample {
                id: s.id,
                features: s.features.clone(),
                label: s.hidden_label,
                hidden_label: None,
            });
        } else {
            new_target.push(s.clone());
        }
    }
    Ok((
        DomainDataset::new(new_source, classes, source.dim(), DomainTag::Source)?,
        DomainDataset::new(new_target, classes, target.dim(), DomainTag::Target)?,
    ))
}

fn schema(path: &Path, reason: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_label(label: Option<usize>) -> String {
    match label {
        Some(l) => l.to_string(),
        None => "-1".to_string(),
    }
}

/// Writes `id,label[,hidden_label],f0,...`. The `hidden_label` column is
/// present iff some sample carries a hidden label.
pub fn save_csv(ds: &DomainDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let with_hidden = ds.samples().iter().any(|s| s.hidden_label.is_some());

    let mut header = vec!["id".to_string(), "label".to_string()];
    if with_hidden {
        header.push("hidden_label".to_string());
    }
    header.extend((0..ds.dim()).map(|j| format!("f{j}")));
    writeln!(w, "{}", header.join(",")).map_err(io_err(path))?;

    for s in ds.samples() {
        let mut row = vec![s.id.to_string(), fmt_label(s.label)];
        if with_hidden {
            row.push(fmt_label(s.hidden_label));
        }
        row.extend(s.features.iter().map(|&x| fmt_f64(x)));
        writeln!(w, "{}", row.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn parse_label(
    path: &Path,
    cell: &str,
    row: usize,
    column: &str,
    classes: usize,
) -> Result<Option<usize>> {
    let value: i64 = cell.trim().parse().map_err(|_| {
        schema(
            path,
            format!("row {row}, column `{column}`: `{cell}` is not an integer"),
        )
    })?;
    match value {
        -1 => Ok(None),
        v if v >= 0 && (v as usize) < classes => Ok(Some(v as usize)),
        v => Err(schema(
            path,
            format!("row {row}, column `{column}`: label {v} outside [0, {classes})"),
        )),
    }
}

/// Reads a dataset written by [`save_csv`]. Row numbers in errors are
/// 1-based data rows (the header is row 0).
pub fn load_csv(path: &Path, num_classes: usize, domain: DomainTag) -> Result<DomainDataset> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| schema(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();

    if header.len() < 3 || header[0] != "id" || header[1] != "label" {
        return Err(schema(path, "header must start with `id,label`"));
    }
    let with_hidden = header[2] == "hidden_label";
    let first_feature = if with_hidden { 3 } else { 2 };
    let dim = header.len() - first_feature;
    if dim == 0 {
        return Err(schema(path, "no feature columns"));
    }
    for (j, name) in header[first_feature..].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(schema(
                path,
                format!("expected column `f{j}`, found `{name}`"),
            ));
        }
    }

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| schema(path, format!("row {row}: {e}")))?;
        if record.len() != header.len() {
            return Err(schema(
                path,
                format!(
                    "row {row}: expected {} cells, got {}",
                    header.len(),
                    record.len()
                ),
            ));
        }
        let id: u64 = record[0].trim().parse().map_err(|_| {
            schema(
                path,
                format!("row {row}, column `id`: `{}` is not an id", &record[0]),
            )
        })?;
        let label = parse_label(path, &record[1], row, "label", num_classes)?;
        let hidden_label = if with_hidden {
            parse_label(path, &record[2], row, "hidden_label", num_classes)?
        } else {
            None
        };
        let features = record
            .iter()
            .skip(first_feature)
            .enumerate()
            .map(|(j, cell)| {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        schema(
                            path,
                            format!("row {row}, column `f{j}`: `{cell}` is not a number"),
                        )
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(Sample {
            id,
            features,
            label,
            hidden_label,
        });
    }
    DomainDataset::new(samples, num_classes, dim, domain).map_err(|e| match e {
        Error::Io { .. } | Error::Schema { .. } => e,
        other => schema(path, other.to_string()),
    })
}
