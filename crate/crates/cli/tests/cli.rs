use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn glno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glno"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn datagen_dry_run_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("data");
    let o = glno(&[
        "datagen",
        "--task",
        "diffusion",
        "--out",
        p(&out),
        "--seed",
        "1",
        "--dry-run",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("ok:"));
    assert!(!out.exists());
}

#[test]
fn datagen_rejects_unknown_task() {
    let dir = TempDir::new().unwrap();
    let o = glno(&[
        "datagen",
        "--task",
        "navier-stokes",
        "--out",
        p(dir.path()),
        "--seed",
        "1",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn datagen_train_eval_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    let o = glno(&[
        "datagen",
        "--task",
        "duffing-c0.5",
        "--out",
        p(&data),
        "--seed",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(data.join("manifest.json").is_file());

    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# tiny run\ndataset = data\nout = run\nchannels = 4\nblocks = 1\nmodes = 6\n\
         epochs = 2\nmax_train = 4\nbatch_size = 2\neval_every = 1\n",
    )
    .unwrap();
    let o = glno(&["train", "--config", p(&cfg), "--dry-run"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("run").exists());

    let o = glno(&["train", "--config", p(&cfg), "--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ckpt = dir.path().join("run/model.ckpt");
    assert!(ckpt.is_file());
    assert_eq!(
        std::fs::read_to_string(dir.path().join("run/metrics.jsonl"))
            .unwrap()
            .lines()
            .count(),
        2
    );

    let o = glno(&[
        "eval",
        "--checkpoint",
        p(&ckpt),
        "--dataset",
        p(&data),
        "--dry-run",
    ]);
    assert!(o.status.success());
    let o = glno(&["eval", "--checkpoint", p(&ckpt), "--dataset", p(&data)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("relative_l2"));
    assert!(stdout(&o).contains("130 samples"));
}

#[test]
fn train_reports_bad_config_lines() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "dataset = x\nchanels = 4\n").unwrap();
    let o = glno(&["train", "--config", p(&cfg), "--dry-run"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn gradcheck_exit_code_follows_tolerance() {
    let dir = TempDir::new().unwrap();
    let ok = dir.path().join("ok.cfg");
    std::fs::write(&ok, "domain = grid1d\ngrid = 32\n").unwrap();
    let o = glno(&["gradcheck", "--config", p(&ok)]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("max relative error"));
    let o = glno(&["gradcheck", "--config", p(&ok), "--dry-run"]);
    assert!(o.status.success());

    // A huge finite-difference step cannot meet a tiny tolerance.
    let strict = dir.path().join("strict.cfg");
    std::fs::write(
        &strict,
        "domain = grid1d\ngrid = 32\nstep = 0.5\ntolerance = 1e-12\n",
    )
    .unwrap();
    let o = glno(&["gradcheck", "--config", p(&strict)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn spectrum_of_an_octahedron() {
    let dir = TempDir::new().unwrap();
    let mesh = dir.path().join("octa.off");
    std::fs::write(
        &mesh,
        "OFF\n6 8 0\n1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 0 -1\n\
         3 0 2 4\n3 2 1 4\n3 1 3 4\n3 3 0 4\n3 2 0 5\n3 1 2 5\n3 3 1 5\n3 0 3 5\n",
    )
    .unwrap();
    let out = dir.path().join("spec");
    let o = glno(&[
        "spectrum",
        "--mesh",
        p(&mesh),
        "--k",
        "4",
        "--out",
        p(&out),
        "--dry-run",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
    let o = glno(&["spectrum", "--mesh", p(&mesh), "--k", "4", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let values: Vec<f64> = std::fs::read_to_string(out.join("eigenvalues.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 4);
    assert!(values[0].abs() < 1e-10);
    // The first nonzero level of the octahedron is triply degenerate.
    assert!((values[1] - values[3]).abs() < 1e-8 * values[3]);
    for f in ["eigenvalues.bin", "eigenfunctions.bin", "mass.bin"] {
        assert!(out.join(f).is_file());
    }
    let o = glno(&["spectrum", "--mesh", p(&mesh), "--k", "7", "--out", p(&out)]);
    assert!(!o.status.success());
}

#[test]
fn bench_dry_run_and_small_sizes() {
    let o = glno(&["bench", "--dim", "1", "--sizes", "256..16384", "--dry-run"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("16384"));
    let o = glno(&["bench", "--dim", "1", "--sizes", "64,128", "--repeats", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("slope"));
    let o = glno(&["bench", "--dim", "2"]);
    assert!(!o.status.success());
}
