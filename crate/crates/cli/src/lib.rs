//! Experiment driver behind the `hcrpl` binary.
//!
//! An [`ExperimentConfig`] JSON document names either a synthetic shift spec
//! or a pair of CSV files, a [`RunConfig`], an output directory and optional
//! sweep lists. Relative paths inside a config resolve against the config's
//! own directory.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use hcrpl_core::data::{
    generate_shifted_pair, load_csv, save_csv, DomainDataset, DomainTag, ShiftSpec,
};
use hcrpl_core::ensemble::Ablation;
use hcrpl_core::pipeline::{run_full, write_run_dir, Preset, RunConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config error at {pointer}: {reason}")]
    Config { pointer: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no metrics.csv in {0}")]
    MissingMetrics(PathBuf),
    #[error("malformed {path}: {reason}")]
    Metrics { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] hcrpl_core::Error),
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// CSV inputs for a run on existing data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub source: PathBuf,
    pub target: PathBuf,
    pub num_classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    Full,
    NoApc,
    NoSe,
    NoTe,
}

impl AblationVariant {
    pub fn flags(self) -> Ablation {
        match self {
            AblationVariant::Full => Ablation::FULL,
            AblationVariant::NoApc => Ablation {
                use_apc: false,
                ..Ablation::FULL
            },
            AblationVariant::NoSe => Ablation {
                use_se: false,
                ..Ablation::FULL
            },
            AblationVariant::NoTe => Ablation {
                use_te: false,
                ..Ablation::FULL
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::NoApc => "no_apc",
            AblationVariant::NoSe => "no_se",
            AblationVariant::NoTe => "no_te",
        }
    }
}

/// Each list varies one setting with everything else held at the base run.
/// `seeds` multiplies every variant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub alpha: Vec<f64>,
    pub temperature: Vec<f64>,
    pub ablation: Vec<AblationVariant>,
    pub seeds: Vec<u64>,
}

impl Sweep {
    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
            && self.temperature.is_empty()
            && self.ablation.is_empty()
            && self.seeds.is_empty()
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Grouping key for `report`; defaults to the run directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataPaths>,
    /// Applied on top of `run` before command-line overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Sweep::is_empty")]
    pub sweep: Sweep,
}

impl ExperimentConfig {
    pub fn new(run: RunConfig) -> Self {
        ExperimentConfig {
            label: None,
            shift: None,
            data: None,
            preset: None,
            run,
            out_dir: default_out_dir(),
            sweep: Sweep::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.shift, &self.data) {
            (Some(_), Some(_)) => {
                return Err(config_error(
                    "",
                    "`shift` and `data` are mutually exclusive",
                ));
            }
            (None, None) => return Err(config_error("", "one of `shift` or `data` is required")),
            _ => {}
        }
        if let Some(shift) = &self.shift {
            shift
                .validate()
                .map_err(|e| core_config_error("/shift", e))?;
        }
        if let Some(data) = &self.data {
            if data.num_classes < 2 {
                return Err(config_error("/data/num_classes", "must be at least 2"));
            }
        }
        self.run
            .validate()
            .map_err(|e| core_config_error("/run", e))?;
        for (i, &a) in self.sweep.alpha.iter().enumerate() {
            if !(0.0..1.0).contains(&a) {
                return Err(config_error(
                    &format!("/sweep/alpha/{i}"),
                    "must lie in [0, 1)",
                ));
            }
        }
        for (i, &t) in self.sweep.temperature.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(config_error(
                    &format!("/sweep/temperature/{i}"),
                    "must be positive",
                ));
            }
        }
        Ok(())
    }
}

fn config_error(pointer: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        pointer: if pointer.is_empty() {
            "/".into()
        } else {
            pointer.into()
        },
        reason: reason.into(),
    }
}

fn core_config_error(prefix: &str, err: hcrpl_core::Error) -> CliError {
    match err {
        hcrpl_core::Error::InvalidSpec { field, reason }
        | hcrpl_core::Error::InvalidConfig { field, reason } => config_error(
            &format!("{prefix}/{}", field.replace('.', "/")),
            format!("`{field}` {reason}"),
        ),
        other => CliError::Core(other),
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(variant);
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

/// Parses and validates a config document; errors carry a JSON pointer.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        config_error(&pointer, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file and rebases its relative paths onto the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    cfg.out_dir = base.join(&cfg.out_dir);
    if let Some(data) = &mut cfg.data {
        data.source = base.join(&data.source);
        data.target = base.join(&data.target);
    }
    Ok(cfg)
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
}

fn apply_overrides(cfg: &mut ExperimentConfig, ov: &Overrides) -> Result<()> {
    if let Some(preset) = cfg.preset.take() {
        preset.apply(&mut cfg.run);
    }
    if let Some(preset) = ov.preset {
        preset.apply(&mut cfg.run);
    }
    if let Some(seed) = ov.seed {
        set_seed(cfg, seed);
    }
    if let Some(out) = &ov.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()
}

fn set_seed(cfg: &mut ExperimentConfig, seed: u64) {
    cfg.run.seed = seed;
    if let Some(shift) = &mut cfg.shift {
        shift.seed = seed;
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(hcrpl_core::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    shift: &'a ShiftSpec,
    source: &'a str,
    target: &'a str,
    source_samples: usize,
    target_samples: usize,
}

/// Writes `source.csv`, `target.csv` and `manifest.json`; returns the directory.
pub fn cmd_generate(config_path: &Path, ov: &Overrides) -> Result<PathBuf> {
    let mut cfg = load_config(config_path)?;
    apply_overrides(&mut cfg, ov)?;
    let shift = cfg
        .shift
        .as_ref()
        .ok_or_else(|| config_error("/shift", "generate needs a `shift` section"))?;
    let (source, target) = generate_shifted_pair(shift)?;
    let dir = cfg.out_dir.clone();
    create_dir(&dir)?;
    save_csv(&source, &dir.join("source.csv"))?;
    save_csv(&target, &dir.join("target.csv"))?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            shift,
            source: "source.csv",
            target: "target.csv",
            source_samples: source.len(),
            target_samples: target.len(),
        },
    )?;
    Ok(dir)
}

/// One concrete run produced by expanding a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
}

fn variant_label(base: &Option<String>, variant: &str) -> Option<String> {
    match (base, variant.is_empty()) {
        (Some(b), true) => Some(b.clone()),
        (Some(b), false) => Some(format!("{b}/{variant}")),
        (None, true) => None,
        (None, false) => Some(variant.to_string()),
    }
}

/// Expands the sweep into single runs. Without a sweep the result is one run
/// writing straight into `out_dir`.
pub fn plan_runs(cfg: &ExperimentConfig) -> Vec<PlannedRun> {
    let mut base = cfg.clone();
    base.sweep = Sweep::default();

    let mut variants: Vec<(String, ExperimentConfig)> = Vec::new();
    for &a in &cfg.sweep.alpha {
        let mut c = base.clone();
        c.run.alpha = a;
        variants.push((format!("alpha_{a}"), c));
    }
    for &t in &cfg.sweep.temperature {
        let mut c = base.clone();
        c.run.temperature = t;
        variants.push((format!("temperature_{t}"), c));
    }
    for &v in &cfg.sweep.ablation {
        let mut c = base.clone();
        c.run.ablation = v.flags();
        variants.push((v.name().to_string(), c));
    }
    if variants.is_empty() {
        variants.push((String::new(), base));
    }

    let mut runs = Vec::new();
    for (name, mut c) in variants {
        c.label = variant_label(&cfg.label, &name);
        let dir = cfg.out_dir.join(&name);
        if cfg.sweep.seeds.is_empty() {
            runs.push(PlannedRun { dir, config: c });
        } else {
            for &seed in &cfg.sweep.seeds {
                let mut s = c.clone();
                set_seed(&mut s, seed);
                runs.push(PlannedRun {
                    dir: dir.join(format!("seed_{seed}")),
                    config: s,
                });
            }
        }
    }
    runs
}

fn load_datasets(cfg: &ExperimentConfig) -> Result<(DomainDataset, DomainDataset)> {
    match (&cfg.shift, &cfg.data) {
        (Some(shift), _) => Ok(generate_shifted_pair(shift)?),
        (None, Some(data)) => Ok((
            load_csv(&data.source, data.num_classes, DomainTag::Source)?,
            load_csv(&data.target, data.num_classes, DomainTag::Target)?,
        )),
        (None, None) => Err(config_error("", "one of `shift` or `data` is required")),
    }
}

/// The config echoed into a run directory: data paths made absolute and
/// `out_dir` pointing at the run directory itself, so rerunning it
/// reproduces the run in place.
fn echo_config(cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
    let mut echo = cfg.clone();
    echo.out_dir = PathBuf::from(".");
    echo.sweep = Sweep::default();
    echo.preset = None;
    if let Some(data) = &mut echo.data {
        data.source = fs::canonicalize(&data.source).map_err(|e| CliError::io(&data.source, e))?;
        data.target = fs::canonicalize(&data.target).map_err(|e| CliError::io(&data.target, e))?;
    }
    Ok(echo)
}

/// Executes every planned run and returns the run directories.
pub fn cmd_run(config_path: &Path, ov: &Overrides) -> Result<Vec<PathBuf>> {
    let mut cfg = load_config(config_path)?;
    apply_overrides(&mut cfg, ov)?;
    let mut dirs = Vec::new();
    for planned in plan_runs(&cfg) {
        planned.config.validate()?;
        let (source, target) = load_datasets(&planned.config)?;
        let outcome = run_full(&source, &target, &planned.config.run)?;
        write_run_dir(&planned.dir, &echo_config(&planned.config)?, &outcome)?;
        dirs.push(planned.dir);
    }
    Ok(dirs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub label: String,
    pub rounds: usize,
    pub final_test_accuracy: Option<f64>,
    pub final_worst_class_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub label: String,
    pub runs: usize,
    pub mean_test_accuracy: Option<f64>,
    pub std_test_accuracy: Option<f64>,
    pub mean_worst_class_f1: Option<f64>,
    pub std_worst_class_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub runs: Vec<RunSummary>,
    pub groups: Vec<GroupSummary>,
}

/// Mean and sample standard deviation; a single value has deviation 0.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

struct MetricsTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_metrics(dir: &Path) -> Result<MetricsTable> {
    let path = dir.join("metrics.csv");
    if !path.is_file() {
        return Err(CliError::MissingMetrics(dir.to_path_buf()));
    }
    let malformed = |reason: String| CliError::Metrics {
        path: path.clone(),
        reason,
    };
    let mut reader = csv::Reader::from_path(&path).map_err(|e| malformed(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(MetricsTable { header, rows })
}

fn read_label(dir: &Path) -> Option<String> {
    let text = fs::read_to_string(dir.join("config.json")).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    value.get("label")?.as_str().map(str::to_string)
}

fn cell(table: &MetricsTable, row: &[String], column: &str, path: &Path) -> Result<Option<f64>> {
    let idx = table
        .header
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| CliError::Metrics {
            path: path.to_path_buf(),
            reason: format!("missing column `{column}`"),
        })?;
    match row.get(idx).map(String::as_str) {
        None | Some("") => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| CliError::Metrics {
            path: path.to_path_buf(),
            reason: format!("`{s}` in column `{column}` is not a number"),
        }),
    }
}

/// Joins `metrics.csv` from every directory into `aggregate.csv` and writes
/// per-run and per-label summaries to `summary.json` under `out`.
pub fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<ReportSummary> {
    if dirs.is_empty() {
        return Err(CliError::Usage(
            "report needs at least one run directory".into(),
        ));
    }
    let mut header: Option<Vec<String>> = None;
    let mut aggregate = String::new();
    let mut runs = Vec::new();
    for dir in dirs {
        let table = read_metrics(dir)?;
        let metrics_path = dir.join("metrics.csv");
        match &header {
            None => {
                aggregate.push_str("run_id,");
                aggregate.push_str(&table.header.join(","));
                aggregate.push('\n');
                header = Some(table.header.clone());
            }
            Some(h) if *h != table.header => {
                return Err(CliError::Metrics {
                    path: metrics_path,
                    reason: "columns differ from the first run".into(),
                });
            }
            Some(_) => {}
        }
        let run_id = dir.display().to_string();
        let id_cell = if run_id.contains([',', '"', '\n']) {
            format!("\"{}\"", run_id.replace('"', "\"\""))
        } else {
            run_id.clone()
        };
        for row in &table.rows {
            aggregate.push_str(&id_cell);
            aggregate.push(',');
            aggregate.push_str(&row.join(","));
            aggregate.push('\n');
        }
        let (acc, worst) = match table.rows.last() {
            Some(last) => (
                cell(&table, last, "test_accuracy", &metrics_path)?,
                cell(&table, last, "worst_class_f1", &metrics_path)?,
            ),
            None => (None, None),
        };
        runs.push(RunSummary {
            label: read_label(dir).unwrap_or_else(|| run_id.clone()),
            run_id,
            rounds: table.rows.len(),
            final_test_accuracy: acc,
            final_worst_class_f1: worst,
        });
    }

    let mut grouped: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for r in &runs {
        grouped.entry(r.label.as_str()).or_default().push(r);
    }
    let groups = grouped
        .into_iter()
        .map(|(label, members)| {
            let accs: Vec<f64> = members
                .iter()
                .filter_map(|r| r.final_test_accuracy)
                .collect();
            let worst: Vec<f64> = members
                .iter()
                .filter_map(|r| r.final_worst_class_f1)
                .collect();
            let acc = mean_std(&accs);
            let wf = mean_std(&worst);
            GroupSummary {
                label: label.to_string(),
                runs: members.len(),
                mean_test_accuracy: acc.map(|x| x.0),
                std_test_accuracy: acc.map(|x| x.1),
                mean_worst_class_f1: wf.map(|x| x.0),
                std_worst_class_f1: wf.map(|x| x.1),
            }
        })
        .collect();
    let summary = ReportSummary { runs, groups };

    create_dir(out)?;
    let agg_path = out.join("aggregate.csv");
    fs::write(&agg_path, aggregate).map_err(|e| CliError::io(&agg_path, e))?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_conventions() {
        assert_eq!(mean_std(&[]), None);
        assert_eq!(mean_std(&[0.7]), Some((0.7, 0.0)));
        assert_eq!(mean_std(&[0.5, 0.5, 0.5]), Some((0.5, 0.0)));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected_with_pointer() {
        let err = parse_config(r#"{"shift": null, "run": {"rounds": 2, "bogus": 1}}"#).unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/run/bogus"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn type_errors_point_into_nested_arrays() {
        let text = r#"{"run": {"rounds": 1}, "sweep": {"alpha": [0.5, "x"]}}"#;
        match parse_config(text).unwrap_err() {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/sweep/alpha/1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn source_of_data_is_required_and_exclusive() {
        assert!(matches!(parse_config("{}"), Err(CliError::Config { .. })));
        let mut cfg = ExperimentConfig::new(RunConfig::default());
        cfg.shift = Some(ShiftSpec::standard_benchmark(0));
        cfg.data = Some(DataPaths {
            source: "a.csv".into(),
            target: "b.csv".into(),
            num_classes: 5,
        });
        assert!(matches!(cfg.validate(), Err(CliError::Config { .. })));
    }

    #[test]
    fn json_pointer_escapes() {
        let text = r#"{"data": {"source": "a", "target": "b", "num_classes": 2, "a/b~": 1}}"#;
        match parse_config(text).unwrap_err() {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/data/a~1b~0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plan_without_sweep_is_single_run_in_out_dir() {
        let mut cfg = ExperimentConfig::new(RunConfig::default());
        cfg.shift = Some(ShiftSpec::standard_benchmark(0));
        let runs = plan_runs(&cfg);
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].dir, cfg.out_dir.join(""));
    }

    #[test]
    fn plan_crosses_variants_with_seeds() {
        let mut cfg = ExperimentConfig::new(RunConfig::default());
        cfg.label = Some("exp".into());
        cfg.shift = Some(ShiftSpec::standard_benchmark(0));
        cfg.sweep.alpha = vec![0.0, 0.9];
        cfg.sweep.ablation = vec![AblationVariant::NoTe];
        cfg.sweep.seeds = vec![3, 4];
        let runs = plan_runs(&cfg);
        assert_eq!(runs.len(), 6);
        assert_eq!(runs[0].dir, PathBuf::from("out/alpha_0/seed_3"));
        assert_eq!(runs[0].config.run.alpha, 0.0);
        assert_eq!(runs[0].config.label.as_deref(), Some("exp/alpha_0"));
        assert_eq!(runs[1].config.run.seed, 4);
        assert_eq!(runs[1].config.shift.as_ref().unwrap().seed, 4);
        assert_eq!(runs[5].dir, PathBuf::from("out/no_te/seed_4"));
        assert!(!runs[5].config.run.ablation.use_te);
    }

    #[test]
    fn overrides_apply_preset_then_seed() {
        let mut cfg = ExperimentConfig::new(RunConfig::default());
        cfg.shift = Some(ShiftSpec::standard_benchmark(0));
        let ov = Overrides {
            seed: Some(9),
            out: Some("elsewhere".into()),
            preset: Some(Preset::Cbst),
        };
        apply_overrides(&mut cfg, &ov).unwrap();
        assert_eq!(cfg.run.ablation, Ablation::NONE);
        assert_eq!(cfg.run.temperature, 1.0);
        assert_eq!(cfg.run.seed, 9);
        assert_eq!(cfg.shift.unwrap().seed, 9);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
    }
}
