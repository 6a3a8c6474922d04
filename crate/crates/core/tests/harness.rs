use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use glno_core::autodiff::Matrix;
use glno_core::datasets::{generate_dataset, Profile, Task};
use glno_core::harness::{
    evaluate_checkpoint, load_model, loglog_slope, nll_loss, parse_sizes, plan_training,
    relative_l2, run_gradcheck, train, GradcheckConfig, MetricsRecord, RunConfig, CHECKPOINT_FILE,
    METRICS_FILE,
};
use proptest::prelude::*;
use tempfile::TempDir;

/// Exact `sqrt(sum w (t-p)^2 / sum w t^2)` for integer data: the sums are
/// exact in `i128`, leaving one rounding in the final division and root.
fn integer_oracle(pred: &[i64], target: &[i64], weights: &[i64], cols: usize) -> f64 {
    let (mut num, mut den) = (0i128, 0i128);
    for (k, (p, t)) in pred.iter().zip(target).enumerate() {
        let w = weights[k / cols] as i128;
        num += w * ((t - p) as i128).pow(2);
        den += w * (*t as i128).pow(2);
    }
    (num as f64 / den as f64).sqrt()
}

fn as_f64(v: &[i64]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

#[test]
fn relative_l2_matches_exact_integer_sums() {
    let target = [3, -4, 12, 0, 5, 7];
    let pred = [2, -4, 10, 1, 5, 9];
    let uniform = [1; 6];
    let got = relative_l2(&as_f64(&pred), &as_f64(&target), None).unwrap();
    let want = integer_oracle(&pred, &target, &uniform, 1);
    assert!((got - want).abs() / want < 1e-12);
    let mass = [2, 1, 3];
    let got = relative_l2(&as_f64(&pred), &as_f64(&target), Some(&as_f64(&mass))).unwrap();
    let want = integer_oracle(&pred, &target, &mass, 2);
    assert!((got - want).abs() / want < 1e-12);
}

#[test]
fn relative_l2_edge_cases() {
    assert_eq!(relative_l2(&[1.0, 2.0], &[1.0, 2.0], None).unwrap(), 0.0);
    assert_eq!(relative_l2(&[0.0, 0.0], &[3.0, 4.0], None).unwrap(), 1.0);
    assert!(relative_l2(&[1.0], &[0.0], None).is_err());
    assert!(relative_l2(&[1.0, 2.0], &[1.0], None).is_err());
    assert!(relative_l2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Some(&[1.0, 1.0])).is_err());
}

proptest! {
    #[test]
    fn relative_l2_agrees_with_integer_oracle(
        rows in prop::collection::vec((-1000i64..1000, -1000i64..1000, -1000i64..1000, -1000i64..1000, 1i64..50), 1..200),
    ) {
        prop_assume!(rows.iter().any(|r| r.2 != 0 || r.3 != 0));
        let pred: Vec<i64> = rows.iter().flat_map(|r| [r.0, r.1]).collect();
        let target: Vec<i64> = rows.iter().flat_map(|r| [r.2, r.3]).collect();
        let mass: Vec<i64> = rows.iter().map(|r| r.4).collect();
        let got = relative_l2(&as_f64(&pred), &as_f64(&target), Some(&as_f64(&mass))).unwrap();
        let want = integer_oracle(&pred, &target, &mass, 2);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300));
    }

    #[test]
    fn nll_is_nonnegative(
        logits in prop::collection::vec(-30.0f64..30.0, 12),
        labels in prop::collection::vec(0usize..4, 3),
    ) {
        let m = Matrix::new(3, 4, logits).unwrap();
        prop_assert!(nll_loss(&m, &labels).unwrap() >= 0.0);
    }
}

#[test]
fn nll_of_equal_logits_is_log_class_count() {
    let m = Matrix::new(2, 7, vec![0.3; 14]).unwrap();
    let loss = nll_loss(&m, &[0, 6]).unwrap();
    assert!((loss - 7f64.ln()).abs() < 1e-14);
}

#[test]
fn nll_of_confident_one_hot_logits_vanishes() {
    let labels = [2, 0, 1];
    let data = labels
        .iter()
        .flat_map(|&y| (0..3).map(move |c| if c == y { 50.0 } else { 0.0 }))
        .collect();
    let loss = nll_loss(&Matrix::new(3, 3, data).unwrap(), &labels).unwrap();
    assert!((0.0..1e-20).contains(&loss), "{loss}");
}

#[test]
fn nll_rejects_out_of_range_labels() {
    let m = Matrix::zeros(2, 3);
    assert!(nll_loss(&m, &[0, 3]).is_err());
    assert!(nll_loss(&m, &[0]).is_err());
}

#[test]
fn slope_of_power_law() {
    let x = [256.0, 512.0, 1024.0, 2048.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.2)).collect();
    assert!((loglog_slope(&x, &y).unwrap() - 1.2).abs() < 1e-12);
    assert!(loglog_slope(&[1.0], &[1.0]).is_err());
    assert_eq!(
        parse_sizes("256..2048").unwrap(),
        vec![256, 512, 1024, 2048]
    );
    assert_eq!(parse_sizes("3, 5").unwrap(), vec![3, 5]);
    assert!(parse_sizes("256").is_err());
    assert!(parse_sizes("512..256").is_err());
}

fn pendulum_data() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        generate_dataset(
            "pendulum-c0.5".parse::<Task>().unwrap(),
            Profile::Desk,
            3,
            dir.path(),
        )
        .unwrap();
        dir
    })
    .path()
}

fn small_run(out: &Path, epochs: usize) -> RunConfig {
    let text = format!(
        "task = pendulum-c0.5\ndataset = {}\nout = {}\nchannels = 4\nblocks = 1\nmodes = 8\n\
         epochs = {epochs}\nmax_train = 6\nbatch_size = 3\neval_every = 5\nseed = 11\n",
        pendulum_data().display(),
        out.display()
    );
    RunConfig::parse(&text, Path::new("/")).unwrap()
}

fn records(dir: &Path) -> Vec<MetricsRecord> {
    std::fs::read_to_string(dir.join(METRICS_FILE))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn single_epoch_writes_one_checkpoint_and_one_record() {
    let out = TempDir::new().unwrap();
    let cfg = small_run(out.path(), 1);
    let summary = train(&cfg, out.path(), &mut |_| {}).unwrap();
    assert_eq!(summary.epochs_run, 1);
    assert_eq!(records(out.path()).len(), 1);
    let checkpoints: Vec<PathBuf> = std::fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ckpt"))
        .collect();
    assert_eq!(checkpoints, vec![out.path().join(CHECKPOINT_FILE)]);
}

#[test]
fn identical_seeds_give_identical_metrics() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    train(&small_run(a.path(), 10), a.path(), &mut |_| {}).unwrap();
    train(&small_run(b.path(), 10), b.path(), &mut |_| {}).unwrap();
    let (ra, rb) = (records(a.path()), records(b.path()));
    assert_eq!(ra.len(), 10);
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(
            (x.epoch, x.train_loss.to_bits(), x.lr.to_bits()),
            (y.epoch, y.train_loss.to_bits(), y.lr.to_bits())
        );
        assert_eq!(
            x.val_metric.map(f64::to_bits),
            y.val_metric.map(f64::to_bits)
        );
    }
}

#[test]
fn checkpoint_reproduces_the_test_metric() {
    let out = TempDir::new().unwrap();
    let summary = train(&small_run(out.path(), 2), out.path(), &mut |_| {}).unwrap();
    let report = evaluate_checkpoint(&summary.checkpoint, pendulum_data()).unwrap();
    assert_eq!(report.value.to_bits(), summary.test.value.to_bits());
    assert_eq!(report.samples, 130);
    let (model, meta) = load_model(&summary.checkpoint).unwrap();
    assert_eq!(model.num_parameters(), summary.parameters);
    assert_eq!(meta.task, "pendulum-c0.5");
}

#[test]
fn dry_run_plan_has_no_side_effects() {
    let out = TempDir::new().unwrap();
    let target = out.path().join("never");
    let plan = plan_training(&small_run(&target, 5)).unwrap();
    assert_eq!(plan.counts["train"], 170);
    assert!(plan.parameters > 0);
    assert!(!target.exists());
}

#[test]
fn task_mismatch_is_rejected() {
    let out = TempDir::new().unwrap();
    let mut cfg = small_run(out.path(), 1);
    cfg.task = Some("duffing-c0.5".into());
    assert!(plan_training(&cfg).is_err());
}

#[test]
fn gradcheck_passes_on_toy_networks() {
    for text in [
        "domain = grid1d\ngrid = 64\n",
        "domain = grid2d\nnx = 6\ngrid = 8\n",
        "domain = mesh\n",
    ] {
        let cfg = GradcheckConfig::parse(text, Path::new(".")).unwrap();
        let worst = run_gradcheck(&cfg).unwrap().max_rel_error();
        assert!(worst < 1e-4, "{text}: {worst}");
    }
}
