//! Runs the standard hard-class benchmark for every preset and ablation and
//! prints seed-averaged final metrics.
//!
//! cargo run --release -p hcrpl-core --example benchmark [seeds] [augment_std]

use hcrpl_core::data::{generate_shifted_pair, ShiftSpec};
use hcrpl_core::ensemble::Ablation;
use hcrpl_core::pipeline::{run_full, Preset, RunConfig};

fn main() -> hcrpl_core::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(5);
    let augment_std: Option<f64> = std::env::args().nth(2).and_then(|s| s.parse().ok());

    let hcrpl = RunConfig::preset(Preset::Hcrpl);
    let variants: Vec<(&str, RunConfig)> = vec![
        ("hcrpl", hcrpl.clone()),
        ("cbst", RunConfig::preset(Preset::Cbst)),
        (
            "no_apc",
            RunConfig {
                ablation: Ablation {
                    use_apc: false,
                    ..Ablation::FULL
                },
                ..hcrpl.clone()
            },
        ),
        (
            "no_se",
            RunConfig {
                ablation: Ablation {
                    use_se: false,
                    ..Ablation::FULL
                },
                ..hcrpl.clone()
            },
        ),
        (
            "no_te",
            RunConfig {
                ablation: Ablation {
                    use_te: false,
                    ..Ablation::FULL
                },
                ..hcrpl.clone()
            },
        ),
    ];

    println!(
        "{:<8} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "variant", "pre_acc", "acc", "worst_f1", "pseudo_acc", "hard_f1"
    );
    for (name, base) in &variants {
        let mut sums = [0.0; 5];
        for seed in 0..seeds {
            let spec = ShiftSpec::standard_benchmark(seed);
            let victim = spec.hard_class.as_ref().map_or(0, |h| h.victim);
            let (source, target) = generate_shifted_pair(&spec)?;
            let mut cfg = RunConfig {
                seed,
                ..base.clone()
            };
            if let Some(std) = augment_std {
                cfg.train.augment_std = std;
            }
            let out = run_full(&source, &target, &cfg)?;
            let last = out.reports.last().expect("at least one round");
            let eval = last
                .evaluation
                .as_ref()
                .expect("synthetic targets carry truth");
            sums[0] += out
                .pretrain_evaluation
                .as_ref()
                .map_or(0.0, |e| e.test_accuracy);
            sums[1] += eval.test_accuracy;
            sums[2] += eval.worst_class_f1;
            sums[3] += last.pseudo_accuracy.unwrap_or(0.0);
            sums[4] += eval.scores.f1[victim];
        }
        let n = seeds as f64;
        println!(
            "{:<8} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            name,
            sums[0] / n,
            sums[1] / n,
            sums[2] / n,
            sums[3] / n,
            sums[4] / n
        );
    }
    Ok(())
}
