use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{LossKind, RunConfig};
use super::data::{LoadedDataset, Normalization};
use super::metrics::{accuracy, labels_from_targets, relative_l2, relative_l2_var, MetricsRecord};
use crate::autodiff::{Matrix, Tape, Var};
use crate::datasets::Split;
use crate::error::{GlnoError, Result};
use crate::nn::{
    read_checkpoint, write_checkpoint, AdamConfig, Checkpoint, Domain, Glno, NetworkConfig,
    ParameterStore, TaskKind,
};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const SUMMARY_FILE: &str = "summary.json";

/// Test-split evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `relative_l2` or `accuracy`.
    pub metric: String,
    /// Mean over samples.
    pub value: f64,
    /// Mean per mesh id.
    pub per_mesh: BTreeMap<usize, f64>,
    pub samples: usize,
    /// Metric of every sample in split order.
    pub per_sample: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub task: String,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val: f64,
    pub test: EvalReport,
    pub parameters: usize,
    pub seconds: f64,
    pub checkpoint: PathBuf,
}

/// Static description of a run, produced without side effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub task: String,
    pub network: NetworkConfig,
    pub parameters: usize,
    pub counts: BTreeMap<String, usize>,
}

/// Checkpoint metadata document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub task: String,
    pub network: NetworkConfig,
    pub normalization: Normalization,
    pub run: RunConfig,
    pub best_epoch: usize,
    pub best_val: f64,
}

fn checked_plan(cfg: &RunConfig, data: &LoadedDataset) -> Result<TrainPlan> {
    if let Some(task) = &cfg.task {
        if *task != data.manifest.task {
            return Err(GlnoError::InvalidArgument(format!(
                "config expects task {task}, dataset holds {}",
                data.manifest.task
            )));
        }
    }
    let network = data.network_config(&cfg.network);
    let model = Glno::init(network.clone(), 1.0, 1.0, cfg.seed)?;
    for split in ["train", "val", "test"] {
        if !data.manifest.files.contains_key(split) {
            return Err(GlnoError::Format(format!("dataset has no {split} split")));
        }
    }
    Ok(TrainPlan {
        task: data.manifest.task.clone(),
        network,
        parameters: model.num_parameters(),
        counts: data.manifest.counts.clone(),
    })
}

/// Validates a run configuration against its dataset manifest.
pub fn plan_training(cfg: &RunConfig) -> Result<TrainPlan> {
    cfg.validate()?;
    checked_plan(cfg, &LoadedDataset::manifest_only(&cfg.dataset)?)
}

fn loss_var(
    tape: &mut Tape,
    kind: LossKind,
    model: &Glno,
    domain: &Domain,
    norm: &Normalization,
    input: &Matrix,
    target: &Matrix,
) -> Result<(Var, Vec<Var>)> {
    let (out, pv) = model.forward(tape, domain, input)?;
    let loss = match model.config.task {
        TaskKind::Regression if kind == LossKind::Mse => {
            let t = tape.leaf(norm.standardize_target(target));
            let diff = tape.sub(out, t)?;
            let sq = tape.mul(diff, diff)?;
            let w = domain.weights();
            let total: f64 = w.iter().sum::<f64>() * target.cols as f64;
            let w = tape.leaf(Matrix::column(w));
            let wsq = tape.mul_col(sq, w)?;
            let s = tape.sum(wsq);
            tape.scale(s, 1.0 / total)
        }
        TaskKind::Regression => {
            let std = tape.leaf(Matrix::new(1, norm.out_std.len(), norm.out_std.clone())?);
            let mean = tape.leaf(Matrix::new(1, norm.out_mean.len(), norm.out_mean.clone())?);
            let scaled = tape.mul_row(out, std)?;
            let pred = tape.add_row(scaled, mean)?;
            relative_l2_var(tape, pred, target, &domain.weights())?
        }
        TaskKind::NodeClassification => {
            let labels = labels_from_targets(&target.data, model.config.out_dim)?;
            let logp = tape.log_softmax_rows(out);
            tape.nll(logp, labels)?
        }
    };
    Ok((loss, pv.0))
}

/// Mean test metric of `model` on a split.
pub fn evaluate(
    model: &Glno,
    domains: &[Domain],
    norm: &Normalization,
    split: &Split,
) -> Result<EvalReport> {
    let mut per: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    let mut total = 0.0;
    let mut per_sample = Vec::with_capacity(split.len());
    for i in 0..split.len() {
        let id = split.mesh_ids[i];
        let domain = &domains[id];
        let out = model.predict(domain, &norm.input(split, i))?;
        let target = norm.target(split, i);
        let value = match model.config.task {
            TaskKind::Regression => relative_l2(
                &norm.denormalize(&out).data,
                &target.data,
                Some(&domain.weights()),
            )?,
            TaskKind::NodeClassification => accuracy(
                &out,
                &labels_from_targets(&target.data, model.config.out_dim)?,
            )?,
        };
        total += value;
        per_sample.push(value);
        let e = per.entry(id).or_insert((0.0, 0));
        e.0 += value;
        e.1 += 1;
    }
    if split.is_empty() {
        return Err(GlnoError::InvalidArgument(
            "cannot evaluate an empty split".into(),
        ));
    }
    Ok(EvalReport {
        metric: match model.config.task {
            TaskKind::Regression => "relative_l2".into(),
            TaskKind::NodeClassification => "accuracy".into(),
        },
        value: total / split.len() as f64,
        per_mesh: per
            .into_iter()
            .map(|(k, (s, n))| (k, s / n as f64))
            .collect(),
        samples: split.len(),
        per_sample,
    })
}

fn better(task: TaskKind, a: f64, b: f64) -> bool {
    match task {
        TaskKind::Regression => a < b,
        TaskKind::NodeClassification => a > b,
    }
}

/// Trains, writes `metrics.jsonl` (one record per epoch), a single
/// checkpoint of the best validation epoch and `summary.json`.
pub fn train(
    cfg: &RunConfig,
    out_dir: &Path,
    on_epoch: &mut dyn FnMut(&MetricsRecord),
) -> Result<TrainSummary> {
    let start = Instant::now();
    cfg.validate()?;
    let data = LoadedDataset::open(&cfg.dataset)?;
    let plan = checked_plan(cfg, &data)?;
    let mut train_split = data.split("train")?;
    if cfg.max_train > 0 && cfg.max_train < train_split.len() {
        train_split = train_split.split_off_front(cfg.max_train)?.0;
    }
    let val = data.split("val")?;
    let test = data.split("test")?;
    let domains = data.build_domains(&plan.network)?;
    let classify = plan.network.task == TaskKind::NodeClassification;
    let norm = Normalization::fit(&train_split, cfg.normalize, classify, plan.network.out_dim);
    let mut model = Glno::new(plan.network.clone(), &domains[0], cfg.seed)?;
    let inputs: Vec<Matrix> = (0..train_split.len())
        .map(|i| norm.input(&train_split, i))
        .collect();
    let targets: Vec<Matrix> = (0..train_split.len())
        .map(|i| norm.target(&train_split, i))
        .collect();

    std::fs::create_dir_all(out_dir)?;
    let mut metrics = std::fs::File::create(out_dir.join(METRICS_FILE))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut order: Vec<usize> = (0..train_split.len()).collect();
    let mut best: Option<(usize, f64, ParameterStore)> = None;
    let mut epochs_run = 0;
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads: Vec<Vec<f64>> = model
                .params
                .values()
                .iter()
                .map(|m| vec![0.0; m.data.len()])
                .collect();
            for &i in batch {
                let mut tape = Tape::new();
                let domain = &domains[train_split.mesh_ids[i]];
                let (loss, pv) = loss_var(
                    &mut tape,
                    cfg.loss,
                    &model,
                    domain,
                    &norm,
                    &inputs[i],
                    &targets[i],
                )?;
                loss_sum += tape.scalar(loss);
                let g = tape.backward(loss)?;
                for (k, v) in pv.iter().enumerate() {
                    if let Some(gk) = g.get(*v) {
                        for (a, b) in grads[k].iter_mut().zip(gk) {
                            *a += b / batch.len() as f64;
                        }
                    }
                }
            }
            model.params.adam_step(&grads, lr, AdamConfig::default())?;
        }
        epochs_run = epoch + 1;
        let out_of_time = cfg.time_budget > 0.0 && start.elapsed().as_secs_f64() > cfg.time_budget;
        let last = epochs_run == cfg.epochs || out_of_time;
        let val_metric = if epochs_run % cfg.eval_every == 0 || last {
            let v = evaluate(&model, &domains, &norm, &val)?.value;
            if best
                .as_ref()
                .is_none_or(|b| better(plan.network.task, v, b.1))
            {
                best = Some((epochs_run, v, model.params.clone()));
            }
            Some(v)
        } else {
            None
        };
        let record = MetricsRecord {
            epoch: epochs_run,
            train_loss: loss_sum / train_split.len() as f64,
            val_metric,
            lr,
            seconds: start.elapsed().as_secs_f64(),
        };
        writeln!(metrics, "{}", serde_json::to_string(&record)?)?;
        metrics.flush()?;
        on_epoch(&record);
        if last {
            break;
        }
    }
    let (best_epoch, best_val, params) = best.expect("last epoch is always validated");
    model.params = params;
    let meta = CheckpointMeta {
        task: data.manifest.task.clone(),
        network: model.config.clone(),
        normalization: norm.clone(),
        run: cfg.clone(),
        best_epoch,
        best_val,
    };
    let checkpoint = out_dir.join(CHECKPOINT_FILE);
    save_model(&checkpoint, &model, &meta)?;
    let summary = TrainSummary {
        task: data.manifest.task.clone(),
        epochs_run,
        best_epoch,
        best_val,
        test: evaluate(&model, &domains, &norm, &test)?,
        parameters: model.num_parameters(),
        seconds: start.elapsed().as_secs_f64(),
        checkpoint,
    };
    std::fs::write(
        out_dir.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

pub fn save_model(path: &Path, model: &Glno, meta: &CheckpointMeta) -> Result<()> {
    let ckpt = Checkpoint {
        metadata: serde_json::to_string(meta)?,
        blobs: model
            .params
            .names()
            .iter()
            .zip(model.params.values())
            .map(|(n, m)| (n.clone(), m.clone()))
            .collect(),
    };
    write_checkpoint(path, &ckpt)
}

pub fn load_model(path: &Path) -> Result<(Glno, CheckpointMeta)> {
    let ckpt = read_checkpoint(path)?;
    let meta: CheckpointMeta = serde_json::from_str(&ckpt.metadata)?;
    let mut params = ParameterStore::new();
    for (name, m) in ckpt.blobs {
        params.insert(name, m)?;
    }
    Ok((Glno::from_parts(meta.network.clone(), params)?, meta))
}

/// Evaluates a checkpoint on the test split of a dataset directory.
pub fn evaluate_checkpoint(checkpoint: &Path, dataset: &Path) -> Result<EvalReport> {
    let (model, meta) = load_model(checkpoint)?;
    let data = LoadedDataset::open(dataset)?;
    let expected = data.network_config(&model.config);
    if expected != model.config {
        return Err(GlnoError::InvalidArgument(format!(
            "checkpoint network ({:?}, {} in, {} out) does not fit dataset {}",
            model.config.domain, model.config.in_dim, model.config.out_dim, data.manifest.task
        )));
    }
    let domains = data.build_domains(&model.config)?;
    evaluate(&model, &domains, &meta.normalization, &data.split("test")?)
}

/// Dry-run check of `evaluate_checkpoint`: reads the checkpoint and the
/// manifest and checks they fit.
pub fn check_evaluation(checkpoint: &Path, dataset: &Path) -> Result<CheckpointMeta> {
    let (model, meta) = load_model(checkpoint)?;
    let data = LoadedDataset::manifest_only(dataset)?;
    if data.network_config(&model.config) != model.config {
        return Err(GlnoError::InvalidArgument(
            "checkpoint network does not fit the dataset".into(),
        ));
    }
    if !data.manifest.files.contains_key("test") {
        return Err(GlnoError::Format("dataset has no test split".into()));
    }
    Ok(meta)
}
