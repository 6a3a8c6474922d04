use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glno_core::datasets::{generate, write_dataset, Profile, Task};
use glno_core::harness::{
    bench_forward, bench_network, check_evaluation, check_gradcheck, check_spectrum, dump_spectrum,
    evaluate_checkpoint, parse_sizes, plan_training, run_gradcheck, train, GradcheckConfig,
    RunConfig,
};
use glno_core::{GlnoError, Result};

// Forward passes allocate many short-lived multi-megabyte matrices; the system
// allocator maps and zeroes fresh pages for each of them.
#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Marker left in an output directory when a command fails after writing.
const INCOMPLETE: &str = "INCOMPLETE";

#[derive(Parser)]
#[command(
    name = "glno",
    version,
    about = "Laplace neural operators on grids and meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset.
    Datagen {
        #[arg(long)]
        task: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// desk or full sample counts.
        #[arg(long, default_value = "desk")]
        profile: String,
        /// Validate arguments without writing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Train a network from a key = value config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dry_run: bool,
        /// Suppress per-epoch lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a checkpoint on the test split of a dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Compare network gradients with central finite differences.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Dump Laplace-Beltrami eigenpairs of an OFF/OBJ mesh.
    Spectrum {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dry_run: bool,
    },
    /// Time 1D forward passes and fit the runtime scaling exponent.
    Bench {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "256..16384")]
        sizes: String,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long)]
        dry_run: bool,
    },
}

/// Runs `f` and flags `dir` as incomplete when it fails after creating it.
fn with_marker<T>(dir: &Path, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let marker = dir.join(INCOMPLETE);
    if marker.exists() {
        std::fs::remove_file(&marker)?;
    }
    let out = f();
    if let Err(e) = &out {
        if dir.is_dir() {
            let _ = std::fs::write(&marker, format!("{e}\n"));
        }
    }
    out
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Datagen {
            task,
            out,
            seed,
            profile,
            dry_run,
        } => {
            let task: Task = task.parse()?;
            let profile: Profile = profile.parse()?;
            if out.is_file() {
                return Err(GlnoError::InvalidArgument(format!(
                    "{} is a file",
                    out.display()
                )));
            }
            if dry_run {
                println!(
                    "ok: would generate {task} ({profile}, seed {seed}) into {}",
                    out.display()
                );
                return Ok(true);
            }
            let manifest = with_marker(&out, || {
                write_dataset(&out, &generate(task, profile, seed)?)
            })?;
            let counts: Vec<String> = manifest
                .counts
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            println!("{task}: {} -> {}", counts.join(" "), out.display());
        }
        Command::Train {
            config,
            out,
            dry_run,
            quiet,
        } => {
            let cfg = RunConfig::from_file(&config)?;
            let out = out.or_else(|| cfg.out.clone()).ok_or_else(|| {
                GlnoError::InvalidArgument("no output directory (--out or out = ...)".into())
            })?;
            let plan = plan_training(&cfg)?;
            if dry_run {
                println!(
                    "ok: {} on {:?}, {} parameters, {} epochs, splits {:?}",
                    plan.task, plan.network.domain, plan.parameters, cfg.epochs, plan.counts
                );
                return Ok(true);
            }
            let mut log = |r: &glno_core::harness::MetricsRecord| {
                if !quiet {
                    let val = r
                        .val_metric
                        .map_or(String::new(), |v| format!(" val {v:.6}"));
                    println!(
                        "epoch {:>5} loss {:.6}{val} lr {:.2e} {:.1}s",
                        r.epoch, r.train_loss, r.lr, r.seconds
                    );
                }
            };
            let s = with_marker(&out, || train(&cfg, &out, &mut log))?;
            println!(
                "{}: best val {:.6} at epoch {}, test {} {:.6}, {} parameters, {:.1}s",
                s.task,
                s.best_val,
                s.best_epoch,
                s.test.metric,
                s.test.value,
                s.parameters,
                s.seconds
            );
            for (id, v) in &s.test.per_mesh {
                if s.test.per_mesh.len() > 1 {
                    println!("  mesh {id}: {v:.6}");
                }
            }
        }
        Command::Eval {
            checkpoint,
            dataset,
            dry_run,
        } => {
            if dry_run {
                let meta = check_evaluation(&checkpoint, &dataset)?;
                println!(
                    "ok: checkpoint for {} fits {}",
                    meta.task,
                    dataset.display()
                );
                return Ok(true);
            }
            let r = evaluate_checkpoint(&checkpoint, &dataset)?;
            println!("{} {:.6} over {} samples", r.metric, r.value, r.samples);
            let mut sorted = r.per_sample.clone();
            sorted.sort_by(f64::total_cmp);
            if let (Some(lo), Some(hi)) = (sorted.first(), sorted.last()) {
                println!(
                    "  min {lo:.6} median {:.6} max {hi:.6}",
                    sorted[sorted.len() / 2]
                );
            }
            if r.per_mesh.len() > 1 {
                for (id, v) in &r.per_mesh {
                    println!("  mesh {id}: {v:.6}");
                }
            }
        }
        Command::Gradcheck { config, dry_run } => {
            let cfg = GradcheckConfig::from_file(&config)?;
            if dry_run {
                println!("ok: {} parameters", check_gradcheck(&cfg)?);
                return Ok(true);
            }
            let report = run_gradcheck(&cfg)?;
            for (group, err, n) in &report.groups {
                println!("{group:<12} {err:.3e} ({n} entries)");
            }
            let worst = report.max_rel_error();
            let pass = worst < cfg.tolerance;
            println!(
                "max relative error {worst:.3e} ({} {:.0e})",
                if pass { "<" } else { ">=" },
                cfg.tolerance
            );
            return Ok(pass);
        }
        Command::Spectrum {
            mesh,
            k,
            out,
            dry_run,
        } => {
            if dry_run {
                let m = check_spectrum(&mesh, k)?;
                println!("ok: {} vertices, {k} eigenpairs", m.num_vertices());
                return Ok(true);
            }
            let s = with_marker(&out, || dump_spectrum(&mesh, k, &out))?;
            println!(
                "{} vertices, {} eigenpairs -> {}",
                s.vertices,
                s.eigenvalues.len(),
                out.display()
            );
            for (i, e) in s.eigenvalues.iter().enumerate() {
                println!("{i:>4} {e:.10}");
            }
        }
        Command::Bench {
            dim,
            sizes,
            repeats,
            dry_run,
        } => {
            if dim != 1 {
                return Err(GlnoError::InvalidArgument(format!(
                    "bench supports --dim 1 only, got {dim}"
                )));
            }
            let sizes = parse_sizes(&sizes)?;
            let network = bench_network();
            if dry_run {
                println!("ok: sizes {sizes:?}, {repeats} repeats");
                return Ok(true);
            }
            let r = bench_forward(&sizes, repeats, &network)?;
            for (k, t) in r.sizes.iter().zip(&r.seconds) {
                println!("{k:>7} {:.6}s", t);
            }
            println!("slope {:.3}", r.slope);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
