//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs under `cargo test` with a custom harness.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use hcrpl_cli::{cmd_generate, cmd_run, DataPaths, ExperimentConfig, Overrides};
use hcrpl_core::apc::{calibrate, difficulty_ratio, DifficultyRatio};
use hcrpl_core::data::{
    generate_shifted_pair, DomainDataset, DomainTag, HardClass, Sample, ShiftSpec,
};
use hcrpl_core::ensemble::{se_predict, te_update, Ablation, EnsembleStore};
use hcrpl_core::metrics::{confusion, precision_recall_f1, predictive_class_proportion};
use hcrpl_core::model::{
    augment, init_params, loss_gradient, mixed_loss, predict_proba, sgd_epoch, LabeledPoint,
    ModelParams, SgdState, TrainConfig,
};
use hcrpl_core::pipeline::{run_full, Pipeline, Preset, PriorSource, RunConfig, RunOutcome};
use hcrpl_core::prob::{
    argmax_stable, entropy, mean_distribution, normalize, sharpen, ClassProportion, ProbVector,
};
use hcrpl_core::select::{cbst_select, class_thresholds, ClassThresholds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

type Check = std::result::Result<String, String>;
type Criterion = (u8, &'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{name}: got {got}, want {want} (tol {tol})")
    })
}

fn close_all(name: &str, got: &[f64], want: &[f64], tol: f64) -> std::result::Result<(), String> {
    ensure(got.len() == want.len(), || {
        format!("{name}: length {} vs {}", got.len(), want.len())
    })?;
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        close(&format!("{name}[{i}]"), *g, *w, tol)?;
    }
    Ok(())
}

fn pv(v: &[f64]) -> ProbVector {
    ProbVector::new(v.to_vec()).unwrap()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- scalar oracles

fn oracle_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Two-view predict pass with identical views, written out step by step.
fn oracle_se(w: &[[f64; 2]; 2], xs: &[[f64; 2]], q: [f64; 2], t: f64) -> Vec<[f64; 2]> {
    let raw: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            oracle_softmax(&[
                w[0][0] * x[0] + w[0][1] * x[1],
                w[1][0] * x[0] + w[1][1] * x[1],
            ])
        })
        .collect();
    let n = raw.len() as f64;
    let py = [
        raw.iter().map(|p| p[0]).sum::<f64>() / n,
        raw.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let r = [q[0] / py[0], q[1] / py[1]];
    raw.iter()
        .map(|p| {
            let a = [r[0] * p[0], r[1] * p[1]];
            let s = a[0] + a[1];
            let c = [a[0] / s, a[1] / s];
            let m = c[0].max(c[1]);
            let h = [(c[0] / m).powf(1.0 / t), (c[1] / m).powf(1.0 / t)];
            let hs = h[0] + h[1];
            [h[0] / hs, h[1] / hs]
        })
        .collect()
}

fn targets(points: &[Vec<f64>]) -> DomainDataset {
    let samples = points
        .iter()
        .enumerate()
        .map(|(i, x)| Sample {
            id: i as u64,
            features: x.clone(),
            label: None,
            hidden_label: None,
        })
        .collect();
    DomainDataset::new(samples, 2, points[0].len(), DomainTag::Target).unwrap()
}

fn accuracy_on(params: &ModelParams, ds: &DomainDataset, truth: impl Fn(&Sample) -> usize) -> f64 {
    let correct = ds
        .samples()
        .iter()
        .filter(|s| predict_proba(params, &s.features).unwrap().argmax() == truth(s))
        .count();
    correct as f64 / ds.len() as f64
}

fn blob_spec(seed: u64, separation: f64, pull: f64) -> ShiftSpec {
    let centers = (0..3)
        .map(|c| {
            let mut v = vec![0.0; 3];
            v[c] = separation;
            v
        })
        .collect();
    ShiftSpec {
        num_classes: 3,
        dim: 3,
        n_source_per_class: 150,
        n_target_per_class: 150,
        class_centers: centers,
        within_class_std: 1.0,
        target_translation: vec![0.0; 3],
        target_rotation_angle: 0.0,
        hard_class: Some(HardClass {
            victim: 2,
            confusable: 0,
            pull_fraction: pull,
        }),
        source_class_weights: None,
        seed,
    }
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1() -> Check {
    let tol = 1e-9;
    let mut n = 0;

    close_all(
        "normalize",
        &normalize(&[0.5625, 0.25]).map_err(err)?,
        &[0.5625 / 0.8125, 0.25 / 0.8125],
        tol,
    )?;
    close_all(
        "normalize fixture",
        &normalize(&[0.5625, 0.25]).map_err(err)?,
        &[0.6923076923076923, 0.3076923076923077],
        tol,
    )?;
    n += 1;

    let s = sharpen(&pv(&[0.8, 0.2]), 0.5).map_err(err)?;
    close_all("sharpen", &s, &[0.64 / 0.68, 0.04 / 0.68], tol)?;
    close_all(
        "sharpen fixture",
        &s,
        &[0.9411764705882353, 0.058823529411764705],
        tol,
    )?;
    n += 1;

    let h = -(0.8f64 * 0.8f64.ln() + 0.2 * 0.2f64.ln());
    close("entropy", entropy(&pv(&[0.8, 0.2])), h, tol)?;
    close("entropy fixture", h, 0.5004024235381879, tol)?;
    n += 1;

    let params =
        ModelParams::from_parts(2, 1, vec![0.0, 0.0], vec![2f64.ln(), 0.0]).map_err(err)?;
    close_all(
        "softmax bias",
        &predict_proba(&params, &[0.7]).map_err(err)?,
        &[2.0 / 3.0, 1.0 / 3.0],
        tol,
    )?;
    n += 1;

    // one point with a saturated logit (loss 0) and one at the origin (loss ln 2)
    let params = ModelParams::from_parts(2, 1, vec![1000.0, 0.0], vec![0.0, 0.0]).map_err(err)?;
    let (one, zero) = ([1.0], [0.0]);
    let src = [
        LabeledPoint {
            features: &one,
            label: 0,
        },
        LabeledPoint {
            features: &zero,
            label: 0,
        },
    ];
    close(
        "mixed_loss",
        mixed_loss(&params, &src, &[]).map_err(err)?,
        2f64.ln() / 2.0,
        tol,
    )?;
    n += 1;

    let q = ClassProportion::new(vec![0.5, 0.5]).map_err(err)?;
    let r = difficulty_ratio(&q, &[pv(&[0.9, 0.1]), pv(&[0.7, 0.3])]).map_err(err)?;
    close_all(
        "difficulty ratio",
        r.as_slice(),
        &[0.5 / 0.8, 0.5 / 0.2],
        tol,
    )?;
    let py = mean_distribution(&[pv(&[0.9, 0.1]), pv(&[0.7, 0.3])]).map_err(err)?;
    close_all("p(y)", &py, &[0.8, 0.2], tol)?;
    n += 1;

    close_all(
        "calibrate a",
        &calibrate(&pv(&[0.9, 0.1]), &r).map_err(err)?,
        &[0.5625 / 0.8125, 0.25 / 0.8125],
        tol,
    )?;
    close_all(
        "calibrate b",
        &calibrate(&pv(&[0.7, 0.3]), &r).map_err(err)?,
        &[0.4375 / 1.1875, 0.75 / 1.1875],
        tol,
    )?;
    close_all(
        "calibrate b fixture",
        &calibrate(&pv(&[0.7, 0.3]), &r).map_err(err)?,
        &[0.3684210526315789, 0.631578947368421],
        tol,
    )?;
    close_all(
        "calibrate identity",
        &calibrate(&pv(&[0.2, 0.8]), &DifficultyRatio::ones(2)).map_err(err)?,
        &[0.2, 0.8],
        tol,
    )?;
    n += 1;

    let w = [[1.0, 0.2], [-0.5, 0.4]];
    let xs = [[1.0, 0.0], [0.0, 1.0]];
    let want = oracle_se(&w, &xs, [0.5, 0.5], 0.5);
    let fixture = [
        [0.8701501598888954, 0.1298498401111045],
        [0.18276688258806337, 0.8172331174119367],
    ];
    let params =
        ModelParams::from_parts(2, 2, vec![1.0, 0.2, -0.5, 0.4], vec![0.0, 0.0]).map_err(err)?;
    let t = targets(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for use_se in [true, false] {
        let flags = Ablation {
            use_se,
            ..Ablation::FULL
        };
        let got = se_predict(&params, &t, &q, 0.5, flags, 0.0, &mut rng).map_err(err)?;
        for i in 0..2 {
            close_all("se oracle", &got[i], &want[i], tol)?;
            close_all("se fixture", &want[i], &fixture[i], tol)?;
        }
    }
    n += 1;

    let store = te_update(
        &EnsembleStore::new(0.95).map_err(err)?,
        &[(7, pv(&[0.6, 0.4]))],
    )
    .map_err(err)?;
    let store = te_update(&store, &[(7, pv(&[0.2, 0.8]))]).map_err(err)?;
    close_all(
        "te_update",
        store.get(7).unwrap(),
        &[0.95 * 0.6 + 0.05 * 0.2, 0.95 * 0.4 + 0.05 * 0.8],
        tol,
    )?;
    close_all(
        "te_update fixture",
        store.get(7).unwrap(),
        &[0.58, 0.42],
        tol,
    )?;
    n += 1;

    let z: Vec<(u64, ProbVector)> = [
        [0.9, 0.05, 0.05],
        [0.8, 0.1, 0.1],
        [0.6, 0.3, 0.1],
        [0.4, 0.3, 0.3],
    ]
    .iter()
    .enumerate()
    .map(|(i, v)| (i as u64, pv(v)))
    .collect();
    let thr = class_thresholds(&z, 50.0, 3).map_err(err)?;
    close("threshold rank 2", thr.as_slice()[0], 0.8, tol)?;
    n += 1;

    let z = vec![
        (1, pv(&[0.9, 0.1])),
        (2, pv(&[0.8, 0.2])),
        (3, pv(&[0.6, 0.4])),
    ];
    let sel = cbst_select(
        &z,
        &ClassThresholds::new(vec![0.8, f64::INFINITY]).map_err(err)?,
        1,
    )
    .map_err(err)?;
    ensure(sel.entries == BTreeMap::from([(1, 0), (2, 0)]), || {
        format!("cbst_select {:?}", sel.entries)
    })?;
    let sel = cbst_select(
        &[(9, pv(&[0.55, 0.45]))],
        &ClassThresholds::new(vec![0.9, 0.5]).map_err(err)?,
        1,
    )
    .map_err(err)?;
    ensure(sel.is_empty(), || {
        "flipped winner below 1 was selected".into()
    })?;
    n += 1;

    let cm = confusion(&[0, 0, 0, 0, 1, 1, 1, 1], &[0, 0, 0, 1, 0, 1, 1, 1], 2).map_err(err)?;
    let sc = precision_recall_f1(&cm);
    for v in sc.precision.iter().chain(&sc.recall).chain(&sc.f1) {
        close("P/R/F1", *v, 0.75, tol)?;
    }
    n += 1;

    // run-based examples
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = [0.3, -1.2, 4.0];
    let mut sq = 0.0;
    let draws = 10_000;
    for _ in 0..draws {
        let a = augment(&x, 0.5, &mut rng);
        sq += a.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
    }
    let std = (sq / (draws as f64 * x.len() as f64)).sqrt();
    ensure((std - 0.5).abs() <= 0.025, || format!("augment std {std}"))?;
    n += 1;

    let (source, target) =
        generate_shifted_pair(&blob_spec(3, 6.0 / 2f64.sqrt(), 0.0)).map_err(err)?;
    let mut p = Pipeline::new(&source, &target, RunConfig::default()).map_err(err)?;
    let state = p.pretrain().map_err(err)?;
    let src_acc = accuracy_on(&state.sgd.params, &source, |s| s.label.unwrap());
    ensure(src_acc >= 0.98, || {
        format!("pretrain source accuracy {src_acc}")
    })?;
    let tgt_acc = accuracy_on(&state.sgd.params, &target, |s| s.hidden_label.unwrap());
    ensure(tgt_acc >= 0.95, || {
        format!("identical-distribution target accuracy {tgt_acc}")
    })?;
    n += 2;

    let (source, target) = generate_shifted_pair(&blob_spec(4, 4.0, 1.0)).map_err(err)?;
    let mut p = Pipeline::new(&source, &target, RunConfig::default()).map_err(err)?;
    let state = p.pretrain().map_err(err)?;
    let victims: Vec<&Sample> = target
        .samples()
        .iter()
        .filter(|s| s.hidden_label == Some(2))
        .collect();
    let pulled = victims
        .iter()
        .filter(|s| {
            predict_proba(&state.sgd.params, &s.features)
                .unwrap()
                .argmax()
                == 0
        })
        .count() as f64
        / victims.len() as f64;
    ensure(pulled >= 0.9, || {
        format!("lambda=1 victim share predicted as confusable {pulled}")
    })?;
    n += 1;

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut xs = Vec::new();
    for i in 0..200 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        xs.push((
            [
                sign * 2.0 + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ],
            i % 2,
        ));
    }
    let pts: Vec<LabeledPoint> = xs
        .iter()
        .map(|(x, y)| LabeledPoint {
            features: x,
            label: *y,
        })
        .collect();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        augment_std: 0.0,
        ..TrainConfig::default()
    };
    let mut s = SgdState::new(init_params(2, 2, 0).map_err(err)?);
    let mut last = mixed_loss(&s.params, &pts, &[]).map_err(err)?;
    for epoch in 1..=5 {
        s = sgd_epoch(&s, &pts, &cfg, &mut rng).map_err(err)?;
        let loss = mixed_loss(&s.params, &pts, &[]).map_err(err)?;
        ensure(loss < last, || {
            format!("loss rose at epoch {epoch}: {last} -> {loss}")
        })?;
        last = loss;
    }
    n += 1;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (c, m) = (4usize, 40_000usize);
    let preds: Vec<ProbVector> = (0..m)
        .map(|_| {
            let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0.0..1.0)).collect();
            normalize(&raw).unwrap()
        })
        .collect();
    let prop = predictive_class_proportion(&preds).map_err(err)?;
    let p0 = 1.0 / c as f64;
    let bound = 3.0 * (p0 * (1.0 - p0) / m as f64).sqrt();
    for (k, &v) in prop.iter().enumerate() {
        ensure((v - p0).abs() <= bound, || {
            format!("predictive proportion[{k}] = {v}")
        })?;
    }
    n += 1;

    Ok(format!("{n} derived examples"))
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut partials = 0;
    let mut worst: f64 = 0.0;
    for draw in 0..20 {
        let c = rng.random_range(2..=5);
        let d = rng.random_range(1..=6);
        let w: Vec<f64> = (0..c * d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let b: Vec<f64> = (0..c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let params = ModelParams::from_parts(c, d, w, b).map_err(err)?;
        let xs: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..2).map(|_| rng.random_range(0..c)).collect();
        let src = [LabeledPoint {
            features: &xs[0],
            label: labels[0],
        }];
        let pseudo = [LabeledPoint {
            features: &xs[1],
            label: labels[1],
        }];
        let all = [src[0], pseudo[0]];
        let grad = loss_gradient(&params, &all).map_err(err)?;

        let loss_at = |p: &ModelParams| mixed_loss(p, &src, &pseudo).unwrap();
        let mut compare = |analytic: f64, plus: ModelParams, minus: ModelParams, what: String| {
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let diff = (analytic - fd).abs();
            let rel = diff / analytic.abs().max(fd.abs()).max(1e-300);
            partials += 1;
            worst = worst.max(diff);
            ensure(diff <= 1e-8 || rel <= 1e-6, || {
                format!("draw {draw} {what}: analytic {analytic}, fd {fd}")
            })
        };
        for i in 0..c * d {
            let (mut plus, mut minus) = (params.clone(), params.clone());
            plus.weights_mut()[i] += h;
            minus.weights_mut()[i] -= h;
            compare(grad.weights()[i], plus, minus, format!("w[{i}]"))?;
        }
        for i in 0..c {
            let (mut plus, mut minus) = (params.clone(), params.clone());
            plus.bias_mut()[i] += h;
            minus.bias_mut()[i] -= h;
            compare(grad.bias()[i], plus, minus, format!("b[{i}]"))?;
        }
    }
    Ok(format!(
        "{partials} partials over 20 draws, max |analytic - fd| {worst:.2e}"
    ))
}

// ---------------------------------------------------------------- criterion 3

/// k-th largest confidence found by counting, not sorting.
fn oracle_threshold(conf: &[f64], percent: u64) -> f64 {
    if conf.is_empty() {
        return f64::INFINITY;
    }
    let n = conf.len() as u64;
    let k = (percent * n).div_ceil(100).max(1) as usize;
    for &v in conf {
        let at_least = conf.iter().filter(|&&x| x >= v).count();
        let above = conf.iter().filter(|&&x| x > v).count();
        if at_least >= k && above < k {
            return v;
        }
    }
    unreachable!("some value is the k-th largest")
}

/// Exhaustive minimization of `-sum_c y_c ln(p_c / k_c)` over one-hot `y` and
/// the zero vector. Ties go to labeling, then to the lowest class.
fn oracle_select(z: &[(u64, Vec<f64>)], thresholds: &[f64]) -> BTreeMap<u64, usize> {
    let mut out = BTreeMap::new();
    for (id, p) in z {
        let mut best_cost = 0.0;
        let mut best: Option<usize> = None;
        for c in 0..p.len() {
            let cost = if thresholds[c].is_infinite() {
                f64::INFINITY
            } else {
                -(p[c] / thresholds[c]).ln()
            };
            let better = match best {
                None => cost <= best_cost,
                Some(_) => cost < best_cost,
            };
            if better {
                best_cost = cost;
                best = Some(c);
            }
        }
        if let Some(c) = best {
            out.insert(*id, c);
        }
    }
    out
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut selected = 0;
    for instance in 0..200 {
        let c = rng.random_range(2..=4);
        let n = rng.random_range(1..=20);
        let percent: u64 = rng.random_range(1..=100);
        // small integer weights so that ties in confidence are common
        let z: Vec<(u64, Vec<f64>)> = (0..n)
            .map(|i| {
                let w: Vec<f64> = (0..c).map(|_| rng.random_range(0..=6) as f64).collect();
                let w = if w.iter().sum::<f64>() == 0.0 {
                    vec![1.0; c]
                } else {
                    w
                };
                let s: f64 = w.iter().sum();
                (100 + i as u64, w.iter().map(|x| x / s).collect())
            })
            .collect();

        let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); c];
        for (_, p) in &z {
            let mut arg = 0;
            for k in 1..c {
                if p[k] > p[arg] {
                    arg = k;
                }
            }
            per_class[arg].push(p[arg]);
        }
        let want_thr: Vec<f64> = per_class
            .iter()
            .map(|conf| oracle_threshold(conf, percent))
            .collect();

        let zp: Vec<(u64, ProbVector)> = z.iter().map(|(id, p)| (*id, pv(p))).collect();
        let thr = class_thresholds(&zp, percent as f64, c).map_err(err)?;
        ensure(thr.as_slice() == want_thr.as_slice(), || {
            format!(
                "instance {instance}: thresholds {:?} vs oracle {want_thr:?}",
                thr.as_slice()
            )
        })?;
        let got = cbst_select(&zp, &thr, 1).map_err(err)?;
        let want = oracle_select(&z, &want_thr);
        ensure(got.entries == want, || {
            format!("instance {instance}: {:?} vs oracle {want:?}", got.entries)
        })?;
        selected += want.len();
    }
    Ok(format!("200 instances, {selected} selections, exact match"))
}

// ---------------------------------------------------------------- criterion 4

fn random_prob(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0.001..1.0)).collect();
    normalize(&raw).unwrap().into_inner()
}

fn criterion_4() -> Check {
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..CASES {
        let c = rng.random_range(2..=10);
        let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0.0..5.0) + 1e-3).collect();
        let once = normalize(&raw).map_err(err)?;
        let twice = normalize(&once).map_err(err)?;
        ensure(once == twice, || {
            format!("normalize not idempotent at case {case}")
        })?;
    }
    for case in 0..CASES {
        let c = rng.random_range(2..=10);
        let p = pv(&random_prob(&mut rng, c));
        let s = sharpen(&p, 1.0).map_err(err)?;
        ensure(
            s.iter().zip(p.iter()).all(|(a, b)| (a - b).abs() <= 1e-12),
            || format!("sharpen(p, 1) != p at case {case}"),
        )?;
    }
    for case in 0..CASES {
        let c = rng.random_range(2..=10);
        let p = pv(&random_prob(&mut rng, c));
        for t in [0.2, 0.5, 2.0] {
            let s = sharpen(&p, t).map_err(err)?;
            let (h0, h1) = (entropy(&p), entropy(&s));
            let ok = if t < 1.0 { h1 < h0 } else { h1 > h0 };
            ensure(ok, || {
                format!("entropy order at case {case}, T={t}: {h0} -> {h1}")
            })?;
            ensure(argmax_stable(&s) == argmax_stable(&p), || {
                format!("argmax moved at case {case}, T={t}")
            })?;
        }
    }
    for case in 0..CASES {
        let c = rng.random_range(2..=10);
        let q = ClassProportion::new(random_prob(&mut rng, c)).map_err(err)?;
        let mean = pv(&random_prob(&mut rng, c));
        let preds = vec![mean; rng.random_range(1..30)];
        let r = difficulty_ratio(&q, &preds).map_err(err)?;
        for p in &preds {
            let out = calibrate(p, &r).map_err(err)?;
            ensure(
                out.iter()
                    .zip(q.iter())
                    .all(|(a, b)| (a - b).abs() <= 1e-12),
                || format!("fixed point failed at case {case}"),
            )?;
        }
    }
    for case in 0..CASES {
        let c = rng.random_range(2..=10);
        let q = ClassProportion::new(random_prob(&mut rng, c)).map_err(err)?;
        let m = rng.random_range(1..30);
        let preds: Vec<ProbVector> = (0..m).map(|_| pv(&random_prob(&mut rng, c))).collect();
        let before = mean_distribution(&preds).map_err(err)?;
        let r = difficulty_ratio(&q, &preds).map_err(err)?;
        let out: Vec<ProbVector> = preds.iter().map(|p| calibrate(p, &r).unwrap()).collect();
        for p in &out {
            ensure(
                p.iter().all(|&x| x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
                || format!("invalid calibrated output at case {case}"),
            )?;
        }
        let after = mean_distribution(&out).map_err(err)?;
        ensure(
            after.l1_distance(&q) <= before.l1_distance(&q) + 1e-12,
            || format!("L1 to prior grew at case {case}"),
        )?;
    }
    Ok(format!("{CASES} cases for each of 6 properties"))
}

// ---------------------------------------------------------------- benchmark runs

fn bench_run(seed: u64, cfg: &RunConfig, spec: &ShiftSpec) -> RunOutcome {
    let (source, target) = generate_shifted_pair(spec).expect("benchmark generation");
    run_full(
        &source,
        &target,
        &RunConfig {
            seed,
            ..cfg.clone()
        },
    )
    .expect("benchmark run")
}

fn bench_variant(cfg: &RunConfig) -> Vec<RunOutcome> {
    SEEDS
        .iter()
        .map(|&s| bench_run(s, cfg, &ShiftSpec::standard_benchmark(s)))
        .collect()
}

fn hcrpl_runs() -> &'static [RunOutcome] {
    static RUNS: OnceLock<Vec<RunOutcome>> = OnceLock::new();
    RUNS.get_or_init(|| bench_variant(&RunConfig::preset(Preset::Hcrpl)))
}

fn final_eval(o: &RunOutcome) -> (f64, f64) {
    let e = o
        .reports
        .last()
        .and_then(|r| r.evaluation.as_ref())
        .expect("final evaluation");
    (e.test_accuracy, e.worst_class_f1)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_5() -> Check {
    let hcrpl = hcrpl_runs();
    let cbst = bench_variant(&RunConfig::preset(Preset::Cbst));
    let victim = ShiftSpec::standard_benchmark(0)
        .hard_class
        .expect("hard class")
        .victim;
    let acc_h = mean(hcrpl.iter().map(|o| final_eval(o).0));
    let acc_c = mean(cbst.iter().map(|o| final_eval(o).0));
    let wf_h = mean(hcrpl.iter().map(|o| final_eval(o).1));
    let wf_c = mean(cbst.iter().map(|o| final_eval(o).1));
    let per_seed: Vec<String> = hcrpl
        .iter()
        .zip(&cbst)
        .map(|(h, c)| {
            let f = |o: &RunOutcome| {
                o.reports
                    .last()
                    .unwrap()
                    .evaluation
                    .as_ref()
                    .unwrap()
                    .scores
                    .f1[victim]
            };
            format!("{:.3}/{:.3}", f(h), f(c))
        })
        .collect();
    let detail = format!(
        "worst-F1 {wf_h:.4} vs {wf_c:.4} (margin {:.4}), acc {acc_h:.4} vs {acc_c:.4}; hard-class F1 per seed [{}]",
        wf_h - wf_c,
        per_seed.join(" ")
    );
    ensure(wf_h - wf_c >= 0.10 && acc_h >= acc_c, || detail.clone())?;
    Ok(detail)
}

fn criterion_6() -> Check {
    let base = RunConfig::preset(Preset::Hcrpl);
    let full = mean(hcrpl_runs().iter().map(|o| final_eval(o).0));
    let mut parts = vec![format!("full {full:.4}")];
    let mut ok = true;
    for (name, flags) in [
        (
            "no_apc",
            Ablation {
                use_apc: false,
                ..Ablation::FULL
            },
        ),
        (
            "no_se",
            Ablation {
                use_se: false,
                ..Ablation::FULL
            },
        ),
        (
            "no_te",
            Ablation {
                use_te: false,
                ..Ablation::FULL
            },
        ),
    ] {
        let acc = mean(
            bench_variant(&RunConfig {
                ablation: flags,
                ..base.clone()
            })
            .iter()
            .map(|o| final_eval(o).0),
        );
        let tol = if name == "no_apc" { 0.0 } else { 0.01 };
        ok &= full >= acc - tol;
        parts.push(format!("{name} {acc:.4}"));
    }
    let detail = parts.join(", ");
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, y)| (i as f64 - xm) * (y - ym))
        .sum();
    let den: f64 = (0..ys.len()).map(|i| (i as f64 - xm).powi(2)).sum();
    num / den
}

fn criterion_7() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (seed, o) in SEEDS.iter().zip(hcrpl_runs()) {
        let pre = o
            .pretrain_evaluation
            .as_ref()
            .expect("pretrain evaluation")
            .test_accuracy;
        let mut series = vec![pre];
        series.extend(
            o.reports
                .iter()
                .map(|r| r.evaluation.as_ref().unwrap().test_accuracy),
        );
        let last = *series.last().unwrap();
        let s = slope(&series);
        ok &= last >= pre && s >= 0.0;
        parts.push(format!("seed {seed}: {pre:.3}->{last:.3} slope {s:.2e}"));
    }
    let detail = parts.join("; ");
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn criterion_8() -> Check {
    let weights = ClassProportion::new(
        normalize(&[1.2, 0.8, 1.2, 0.8, 1.0])
            .map_err(err)?
            .into_inner(),
    )
    .map_err(err)?;
    let base = RunConfig::preset(Preset::Hcrpl);
    let mut diffs = Vec::new();
    let (mut src_accs, mut tgt_accs) = (Vec::new(), Vec::new());
    for &seed in &SEEDS {
        let spec = ShiftSpec {
            source_class_weights: Some(weights.clone()),
            ..ShiftSpec::standard_benchmark(seed)
        };
        let a = final_eval(&bench_run(
            seed,
            &RunConfig {
                prior: PriorSource::SourceProportion,
                ..base.clone()
            },
            &spec,
        ))
        .0;
        let b = final_eval(&bench_run(
            seed,
            &RunConfig {
                prior: PriorSource::TargetOracle,
                ..base.clone()
            },
            &spec,
        ))
        .0;
        diffs.push((a - b).abs());
        src_accs.push(a);
        tgt_accs.push(b);
    }
    let mean_abs = mean(diffs.into_iter());
    let detail = format!(
        "mean |diff| {:.2} points (q=source {:.4}, q=target {:.4})",
        100.0 * mean_abs,
        mean(src_accs.into_iter()),
        mean(tgt_accs.into_iter())
    );
    ensure(mean_abs <= 0.03, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------- CLI criteria

fn write_config(path: &Path, cfg: &ExperimentConfig) {
    fs::write(path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
}

fn criterion_9() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut cfg = ExperimentConfig::new(RunConfig::preset(Preset::Hcrpl));
    cfg.shift = Some(ShiftSpec::standard_benchmark(7));
    let path = tmp.path().join("exp.json");
    write_config(&path, &cfg);
    let mut outputs = Vec::new();
    for out in ["a", "b"] {
        let ov = Overrides {
            seed: Some(7),
            out: Some(tmp.path().join(out)),
            preset: None,
        };
        let dirs = cmd_run(&path, &ov).map_err(err)?;
        let dir = &dirs[0];
        outputs.push((
            fs::read(dir.join("metrics.csv")).map_err(err)?,
            fs::read(dir.join("model_final.json")).map_err(err)?,
        ));
    }
    ensure(outputs[0].0 == outputs[1].0, || {
        "metrics.csv differs".into()
    })?;
    ensure(outputs[0].1 == outputs[1].1, || {
        "model_final.json differs".into()
    })?;
    Ok(format!(
        "metrics.csv {} bytes and model_final.json {} bytes identical",
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

fn zero_hidden_labels(src: &Path, dst: &Path) {
    let text = fs::read_to_string(src).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let col = header
        .split(',')
        .position(|h| h == "hidden_label")
        .expect("hidden_label column");
    let mut out = String::from(header);
    out.push('\n');
    for line in lines {
        let mut cells: Vec<&str> = line.split(',').collect();
        cells[col] = "0";
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(dst, out).unwrap();
}

fn criterion_10() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut gen = ExperimentConfig::new(RunConfig::default());
    gen.shift = Some(ShiftSpec::standard_benchmark(3));
    gen.out_dir = "data".into();
    let gen_path = tmp.path().join("gen.json");
    write_config(&gen_path, &gen);
    let data = cmd_generate(&gen_path, &Overrides::default()).map_err(err)?;
    zero_hidden_labels(&data.join("target.csv"), &data.join("target_zeroed.csv"));

    let mut runs = Vec::new();
    for (name, target) in [("truth", "target.csv"), ("zeroed", "target_zeroed.csv")] {
        let mut cfg = ExperimentConfig::new(RunConfig::preset(Preset::Hcrpl));
        cfg.data = Some(DataPaths {
            source: "data/source.csv".into(),
            target: format!("data/{target}").into(),
            num_classes: 5,
        });
        cfg.out_dir = name.into();
        let path = tmp.path().join(format!("{name}.json"));
        write_config(&path, &cfg);
        let dir = cmd_run(&path, &Overrides::default())
            .map_err(err)?
            .remove(0);
        runs.push((
            fs::read(dir.join("model_final.json")).map_err(err)?,
            fs::read(dir.join("metrics.csv")).map_err(err)?,
        ));
    }
    ensure(runs[0].0 == runs[1].0, || {
        "model_final.json changed when hidden labels were zeroed".into()
    })?;
    // evaluation does read the hidden column, so the audit is not vacuous
    ensure(runs[0].1 != runs[1].1, || {
        "metrics unchanged: hidden labels were never read".into()
    })?;
    Ok("model_final.json byte-identical; metrics.csv differs as expected".into())
}

// ---------------------------------------------------------------- driver

fn main() {
    let criteria: [Criterion; 10] = [
        (
            1,
            "derived example suite",
            Duration::from_secs(5),
            criterion_1,
        ),
        (2, "gradient check", Duration::from_secs(10), criterion_2),
        (
            3,
            "selection brute-force oracle",
            Duration::from_secs(5),
            criterion_3,
        ),
        (
            4,
            "calibration and probability invariants",
            Duration::from_secs(10),
            criterion_4,
        ),
        (
            5,
            "hard-class rectification vs CBST",
            Duration::from_secs(180),
            criterion_5,
        ),
        (
            6,
            "ablation ordering",
            Duration::from_secs(480),
            criterion_6,
        ),
        (7, "convergence", Duration::from_secs(60), criterion_7),
        (
            8,
            "prior-proportion robustness",
            Duration::from_secs(600),
            criterion_8,
        ),
        (9, "determinism", Duration::from_secs(120), criterion_9),
        (
            10,
            "no-leakage audit",
            Duration::from_secs(120),
            criterion_10,
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > budget => Err(format!("{detail}; over time budget {budget:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!(
                "ACCEPTANCE {id:>2} PASS  {name} ({:.1}s): {detail}",
                took.as_secs_f64()
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "ACCEPTANCE {id:>2} FAIL  {name} ({:.1}s): {detail}",
                    took.as_secs_f64()
                );
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
