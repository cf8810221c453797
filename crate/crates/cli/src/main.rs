use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hcrpl_cli::{cmd_generate, cmd_report, cmd_run, Overrides};
use hcrpl_core::pipeline::Preset;

#[derive(Parser)]
#[command(
    name = "hcrpl",
    version,
    about = "Self-training domain adaptation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic source/target pair from the config's `shift` section.
    Generate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one experiment, or every entry of its sweep.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// cbst, hcrpl or paper
        #[arg(long)]
        preset: Option<Preset>,
    },
    /// Aggregate finished run directories.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { config, out, seed } => {
            let ov = Overrides {
                seed,
                out,
                preset: None,
            };
            cmd_generate(&config, &ov).map(|dir| println!("wrote {}", dir.display()))
        }
        Command::Run {
            config,
            out,
            seed,
            preset,
        } => {
            let ov = Overrides { seed, out, preset };
            cmd_run(&config, &ov).map(|dirs| {
                for d in dirs {
                    println!("wrote {}", d.display());
                }
            })
        }
        Command::Report { dirs, out } => cmd_report(&dirs, &out).map(|summary| {
            for g in &summary.groups {
                let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
                println!(
                    "{}  n={}  acc {} ± {}  worst_f1 {} ± {}",
                    g.label,
                    g.runs,
                    fmt(g.mean_test_accuracy),
                    fmt(g.std_test_accuracy),
                    fmt(g.mean_worst_class_f1),
                    fmt(g.std_worst_class_f1)
                );
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
