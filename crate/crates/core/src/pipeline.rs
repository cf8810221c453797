//! Round-based self-training.
//!
//! A run pretrains on the source set, seeds the ensemble store from one
//! predicting pass, then repeats for each round: `epochs_per_round` times
//! (train on `source ∪ pseudo`, predict the target set, fold into the EMA
//! store), followed by class-balanced selection from the store.
//!
//! Target ground truth is split off into a separate map when the pipeline is
//! built. Everything that trains or predicts sees a copy of the target set
//! with hidden labels removed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{class_proportion, compose_ssda_source, hidden_class_proportion, DomainDataset};
use crate::ensemble::{se_predict, te_update, Ablation, EnsembleStore};
use crate::error::{Error, Result};
use crate::metrics::{
    confusion, false_pseudo_label_ratio, precision_recall_f1, predictive_class_proportion,
    ClassScores, ConfusionMatrix,
};
use crate::model::{
    init_params, predict_proba, save_checkpoint, sgd_epoch, LabeledPoint, ModelParams, SgdState,
    TrainConfig,
};
use crate::prob::{ClassProportion, ProbVector};
use crate::select::{cbst_select, class_thresholds, PortionSchedule, PseudoLabelSet};

const TRAIN_STREAM: u64 = 1;
const PREDICT_STREAM: u64 = 2;

/// Where the calibration prior `q(y)` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorSource {
    /// Label proportion of the (possibly SSDA-augmented) source set.
    #[default]
    SourceProportion,
    Explicit {
        proportion: ClassProportion,
    },
    /// Proportion of the hidden target labels. Analysis only; refused for SSDA runs.
    TargetOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rounds: usize,
    pub epochs_per_round: usize,
    /// EMA momentum of the ensemble store.
    pub alpha: f64,
    /// Sharpening temperature.
    pub temperature: f64,
    pub portion: PortionSchedule,
    pub pretrain_epochs: usize,
    /// Used for pretraining and round 1.
    pub first_round_lr: f64,
    pub later_round_lr: f64,
    pub ablation: Ablation,
    pub prior: PriorSource,
    pub ssda_shots: usize,
    /// Keep earlier pseudo labels that are not re-selected.
    pub accumulate_pseudo_labels: bool,
    /// Optimizer settings. `learning_rate` and `seed` are replaced by the
    /// phase learning rate and the run seed.
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            rounds: 10,
            epochs_per_round: 5,
            alpha: 0.95,
            temperature: 0.5,
            portion: PortionSchedule::default(),
            pretrain_epochs: 20,
            first_round_lr: 0.05,
            later_round_lr: 0.015,
            ablation: Ablation::FULL,
            prior: PriorSource::SourceProportion,
            ssda_shots: 0,
            accumulate_pseudo_labels: false,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

/// Named flag bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Plain class-balanced self-training: no calibration, no ensembling, `T = 1`.
    Cbst,
    /// All components on at desk-scale schedule.
    Hcrpl,
    /// All components on with the 30×20 schedule and fine-tuning learning rates.
    Paper,
}

impl Preset {
    pub fn apply(self, cfg: &mut RunConfig) {
        match self {
            Preset::Cbst => {
                cfg.ablation = Ablation::NONE;
                cfg.temperature = 1.0;
            }
            Preset::Hcrpl => {
                cfg.ablation = Ablation::FULL;
                cfg.temperature = 0.5;
                cfg.alpha = 0.95;
            }
            Preset::Paper => {
                cfg.ablation = Ablation::FULL;
                cfg.temperature = 0.5;
                cfg.alpha = 0.95;
                cfg.rounds = 30;
                cfg.epochs_per_round = 20;
                cfg.first_round_lr = 5e-5;
                cfg.later_round_lr = 1.5e-5;
            }
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cbst" => Ok(Preset::Cbst),
            "hcrpl" => Ok(Preset::Hcrpl),
            "paper" => Ok(Preset::Paper),
            other => Err(format!("unknown preset `{other}` (cbst, hcrpl, paper)")),
        }
    }
}

impl RunConfig {
    pub fn preset(preset: Preset) -> RunConfig {
        let mut cfg = RunConfig::default();
        preset.apply(&mut cfg);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::config("rounds", "must be at least 1"));
        }
        if self.epochs_per_round < 1 {
            return Err(Error::config("epochs_per_round", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1)"));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::config("temperature", "must be positive"));
        }
        for (name, lr) in [
            ("first_round_lr", self.first_round_lr),
            ("later_round_lr", self.later_round_lr),
        ] {
            if !(lr >= 0.0) || !lr.is_finite() {
                return Err(Error::config(name, "must be nonnegative"));
            }
        }
        self.portion.validate()?;
        self.train.validate().map_err(|e| match e {
            Error::InvalidConfig { field, reason } => Error::InvalidConfig {
                field: format!("train.{field}"),
                reason,
            },
            other => other,
        })?;
        if self.ssda_shots > 0 && self.prior == PriorSource::TargetOracle {
            return Err(Error::config(
                "prior",
                "target-oracle prior is not allowed together with ssda_shots",
            ));
        }
        Ok(())
    }

    /// EMA momentum actually used: 0 when temporal ensembling is off.
    pub fn effective_alpha(&self) -> f64 {
        if self.ablation.use_te {
            self.alpha
        } else {
            0.0
        }
    }

    fn phase_train_config(&self, learning_rate: f64) -> TrainConfig {
        TrainConfig {
            learning_rate,
            seed: self.seed,
            ..self.train.clone()
        }
    }
}

/// Model evaluation against hidden target labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub test_accuracy: f64,
    pub macro_f1: f64,
    pub worst_class_f1: f64,
    pub scores: ClassScores,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub portion: f64,
    pub learning_rate: f64,
    /// Size of `source ∪ pseudo` used for training in this round.
    pub train_size: usize,
    pub pseudo_count: usize,
    pub pseudo_per_class: Vec<usize>,
    pub pseudo_empty: bool,
    pub pseudo_accuracy: Option<f64>,
    pub false_ratio: Option<f64>,
    /// `None` for classes without any predicted sample.
    pub thresholds: Vec<Option<f64>>,
    /// Argmax histogram of the model's raw target predictions.
    pub predictive_proportion: ClassProportion,
    pub evaluation: Option<Evaluation>,
}

/// Mutable state carried between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    /// Index of the last completed round (0 after pretraining).
    pub round: usize,
    pub sgd: SgdState,
    pub store: EnsembleStore,
    pub pseudo: PseudoLabelSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub pretrain_evaluation: Option<Evaluation>,
    pub reports: Vec<RoundReport>,
    pub params: ModelParams,
    pub pseudo: PseudoLabelSet,
}

/// A configured run over one source/target pair.
pub struct Pipeline {
    cfg: RunConfig,
    source: DomainDataset,
    /// Target inputs without hidden labels.
    target: DomainDataset,
    truth: BTreeMap<u64, usize>,
    prior: ClassProportion,
    train_rng: ChaCha8Rng,
    predict_rng: ChaCha8Rng,
}

impl Pipeline {
    /// Applies SSDA composition when `ssda_shots > 0`, resolves the prior and
    /// separates target ground truth from the inputs.
    pub fn new(source: &DomainDataset, target: &DomainDataset, cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
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
        if source.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if target.is_empty() {
            return Err(Error::EmptyPredictions);
        }
        let (source, target) = compose_ssda_source(source, target, cfg.ssda_shots, cfg.seed)?;

        let prior = match &cfg.prior {
            PriorSource::SourceProportion => class_proportion(&source)?,
            PriorSource::Explicit { proportion } => {
                if proportion.num_classes() != source.num_classes() {
                    return Err(Error::config(
                        "prior.proportion",
                        format!("expected {} entries", source.num_classes()),
                    ));
                }
                proportion.clone()
            }
            PriorSource::TargetOracle => hidden_class_proportion(&target)?,
        };

        let truth = target.hidden_truth();
        let target = target.without_hidden_labels();
        let mut train_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        train_rng.set_stream(TRAIN_STREAM);
        let mut predict_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        predict_rng.set_stream(PREDICT_STREAM);

        Ok(Pipeline {
            cfg,
            source,
            target,
            truth,
            prior,
            train_rng,
            predict_rng,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn prior(&self) -> &ClassProportion {
        &self.prior
    }

    pub fn source(&self) -> &DomainDataset {
        &self.source
    }

    pub fn target(&self) -> &DomainDataset {
        &self.target
    }

    fn has_full_truth(&self) -> bool {
        self.target.ids().all(|id| self.truth.contains_key(&id))
    }

    /// Source points followed by pseudo-labeled target points, in dataset order.
    pub fn training_points(&self, pseudo: &PseudoLabelSet) -> Vec<LabeledPoint<'_>> {
        training_points(&self.source, &self.target, pseudo)
    }

    fn predict(&mut self, params: &ModelParams) -> Result<Vec<(u64, ProbVector)>> {
        predict_targets(
            params,
            &self.target,
            &self.prior,
            &self.cfg,
            &mut self.predict_rng,
        )
    }

    /// Trains on the source set only and seeds the ensemble store.
    pub fn pretrain(&mut self) -> Result<RoundState> {
        let params = init_params(self.source.num_classes(), self.source.dim(), self.cfg.seed)?;
        let mut sgd = SgdState::new(params);
        let train_cfg = self.cfg.phase_train_config(self.cfg.first_round_lr);
        let points = training_points(&self.source, &self.target, &PseudoLabelSet::default());
        for _ in 0..self.cfg.pretrain_epochs {
            sgd = sgd_epoch(&sgd, &points, &train_cfg, &mut self.train_rng)?;
        }
        let fresh = self.predict(&sgd.params)?;
        let store = te_update(&EnsembleStore::new(self.cfg.effective_alpha())?, &fresh)?;
        Ok(RoundState {
            round: 0,
            sgd,
            store,
            pseudo: PseudoLabelSet::default(),
        })
    }

    /// One round: train/predict for `epochs_per_round` epochs, then select.
    pub fn run_round(&mut self, state: RoundState) -> Result<(RoundState, RoundReport)> {
        let round = state.round + 1;
        let lr = if round == 1 {
            self.cfg.first_round_lr
        } else {
            self.cfg.later_round_lr
        };
        let train_cfg = self.cfg.phase_train_config(lr);
        let RoundState {
            mut sgd,
            mut store,
            pseudo,
            ..
        } = state;

        let points = training_points(&self.source, &self.target, &pseudo);
        let train_size = points.len();
        for _ in 0..self.cfg.epochs_per_round {
            sgd = sgd_epoch(&sgd, &points, &train_cfg, &mut self.train_rng)?;
            let fresh = predict_targets(
                &sgd.params,
                &self.target,
                &self.prior,
                &self.cfg,
                &mut self.predict_rng,
            )?;
            store = te_update(&store, &fresh)?;
        }

        let portion = self.cfg.portion.portion_at_round(round);
        let z = store.entries();
        let thresholds = class_thresholds(&z, portion, self.target.num_classes())?;
        let selected = cbst_select(&z, &thresholds, round)?;
        let next_pseudo = if self.cfg.accumulate_pseudo_labels {
            let mut merged = pseudo.entries.clone();
            merged.extend(selected.entries);
            PseudoLabelSet {
                entries: merged,
                round,
            }
        } else {
            selected
        };

        let raw = self.raw_predictions(&sgd.params)?;
        let report = RoundReport {
            round,
            portion,
            learning_rate: lr,
            train_size,
            pseudo_count: next_pseudo.len(),
            pseudo_per_class: next_pseudo.class_counts(self.target.num_classes()),
            pseudo_empty: next_pseudo.is_empty(),
            pseudo_accuracy: None,
            false_ratio: None,
            thresholds: thresholds
                .as_slice()
                .iter()
                .map(|&t| t.is_finite().then_some(t))
                .collect(),
            predictive_proportion: predictive_class_proportion(&raw)?,
            evaluation: self.evaluate_predictions(&raw)?,
        };
        let report = if self.has_full_truth() {
            let quality = false_pseudo_label_ratio(&next_pseudo, &self.truth)?;
            RoundReport {
                pseudo_accuracy: Some(quality.accuracy),
                false_ratio: Some(quality.false_ratio),
                ..report
            }
        } else {
            report
        };

        Ok((
            RoundState {
                round,
                sgd,
                store,
                pseudo: next_pseudo,
            },
            report,
        ))
    }

    fn raw_predictions(&self, params: &ModelParams) -> Result<Vec<ProbVector>> {
        self.target
            .samples()
            .iter()
            .map(|s| predict_proba(params, &s.features))
            .collect()
    }

    fn evaluate_predictions(&self, raw: &[ProbVector]) -> Result<Option<Evaluation>> {
        if !self.has_full_truth() {
            return Ok(None);
        }
        let truth: Vec<usize> = self.target.ids().map(|id| self.truth[&id]).collect();
        let predicted: Vec<usize> = raw.iter().map(ProbVector::argmax).collect();
        let cm = confusion(&truth, &predicted, self.target.num_classes())?;
        let scores = precision_recall_f1(&cm);
        Ok(Some(Evaluation {
            test_accuracy: cm.accuracy(),
            macro_f1: scores.macro_f1(),
            worst_class_f1: scores.worst_f1(),
            scores,
            confusion: cm,
        }))
    }

    /// Evaluates `params` on the target set; `None` without full ground truth.
    pub fn evaluate(&self, params: &ModelParams) -> Result<Option<Evaluation>> {
        let raw = self.raw_predictions(params)?;
        self.evaluate_predictions(&raw)
    }
}

fn predict_targets(
    params: &ModelParams,
    target: &DomainDataset,
    prior: &ClassProportion,
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(u64, ProbVector)>> {
    let preds = se_predict(
        params,
        target,
        prior,
        cfg.temperature,
        cfg.ablation,
        cfg.train.augment_std,
        rng,
    )?;
    Ok(target.ids().zip(preds).collect())
}

fn training_points<'a>(
    source: &'a DomainDataset,
    target: &'a DomainDataset,
    pseudo: &PseudoLabelSet,
) -> Vec<LabeledPoint<'a>> {
    let source_points = source.samples().iter().map(|s| LabeledPoint {
        features: &s.features,
        label: s.label.expect("source samples are labeled"),
    });
    let pseudo_points = target.samples().iter().filter_map(|s| {
        pseudo.entries.get(&s.id).map(|&label| LabeledPoint {
            features: &s.features,
            label,
        })
    });
    source_points.chain(pseudo_points).collect()
}

/// Pretraining followed by `cfg.rounds` rounds.
pub fn run_full(
    source: &DomainDataset,
    target: &DomainDataset,
    cfg: &RunConfig,
) -> Result<RunOutcome> {
    let mut pipeline = Pipeline::new(source, target, cfg.clone())?;
    let mut state = pipeline.pretrain()?;
    let pretrain_evaluation = pipeline.evaluate(&state.sgd.params)?;
    let mut reports = Vec::with_capacity(cfg.rounds);
    for _ in 0..cfg.rounds {
        let (next, report) = pipeline.run_round(state)?;
        state = next;
        reports.push(report);
    }
    Ok(RunOutcome {
        pretrain_evaluation,
        reports,
        params: state.sgd.params,
        pseudo: state.pseudo,
    })
}

/// Header of `metrics.csv` for `num_classes` classes.
pub fn metrics_header(num_classes: usize) -> Vec<String> {
    let mut header: Vec<String> = [
        "round",
        "test_accuracy",
        "pseudo_count",
        "pseudo_accuracy",
        "false_ratio",
        "macro_f1",
        "worst_class_f1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for c in 0..num_classes {
        header.push(format!("precision_{c}"));
        header.push(format!("recall_{c}"));
        header.push(format!("f1_{c}"));
    }
    header
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per round; metrics needing ground truth are left empty without it.
pub fn metrics_csv(reports: &[RoundReport], num_classes: usize) -> String {
    let mut out = metrics_header(num_classes).join(",");
    out.push('\n');
    for r in reports {
        let eval = r.evaluation.as_ref();
        let mut row = vec![
            r.round.to_string(),
            opt_cell(eval.map(|e| e.test_accuracy)),
            r.pseudo_count.to_string(),
            opt_cell(r.pseudo_accuracy),
            opt_cell(r.false_ratio),
            opt_cell(eval.map(|e| e.macro_f1)),
            opt_cell(eval.map(|e| e.worst_class_f1)),
        ];
        for c in 0..num_classes {
            row.push(opt_cell(eval.map(|e| e.scores.precision[c])));
            row.push(opt_cell(eval.map(|e| e.scores.recall[c])));
            row.push(opt_cell(eval.map(|e| e.scores.f1[c])));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `config.json`, `round_{r:03}.json`, `metrics.csv` and `model_final.json`.
pub fn write_run_dir<C: Serialize>(dir: &Path, config: &C, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    write_text(&dir.join("config.json"), &text)?;
    for report in &outcome.reports {
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        write_text(&dir.join(format!("round_{:03}.json", report.round)), &text)?;
    }
    write_text(
        &dir.join("metrics.csv"),
        &metrics_csv(&outcome.reports, outcome.params.num_classes()),
    )?;
    save_checkpoint(&outcome.params, &dir.join("model_final.json"))
}
