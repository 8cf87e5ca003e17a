use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{build_phi, BasisConfig};
use crate::dataset::{DatasetKind, DemoDataset};
use crate::dmp::{fit_dmp, DmpGains};
use crate::error::{Error, Result};
use crate::linalg::{pairwise_mean, rms};
use crate::promp::{fit_many, DEFAULT_LAMBDA};
use crate::regressor::{
    adam_step, ridge_fit, AdamState, LossKind, MlpParams, DEFAULT_DDMP_ALPHA,
};

use super::config::{DataSplit, NetConfig, TrainConfig};
use super::model::{GroupMeans, Method, Model, OutputHead, Regressor, Standardizer, TargetSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoEpochs,
    Completed,
    EarlyStopped,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainReport {
    pub fn final_epoch(&self) -> usize {
        self.epochs.last().map_or(0, |e| e.epoch)
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    /// CSV with columns `epoch,train_loss,val_loss` (empty when no
    /// validation set was used).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_loss", "val_loss"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                e.val_loss.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One supervised pair in network coordinates.
struct Example<'a> {
    input: Vec<f64>,
    target: &'a [f64],
    offset: Option<&'a [f64]>,
}

struct Problem<'a> {
    loss: LossKind,
    scale: &'a [f64],
}

impl Problem<'_> {
    fn prediction(&self, raw: &[f64], ex: &Example) -> Vec<f64> {
        raw.iter()
            .zip(self.scale)
            .enumerate()
            .map(|(k, (y, s))| ex.offset.map_or(0.0, |o| o[k]) + s * y)
            .collect()
    }

    fn mean_loss(&self, net: &MlpParams, set: &[Example]) -> Result<f64> {
        let losses = set
            .iter()
            .map(|ex| {
                let raw = net.forward(&ex.input)?;
                self.loss.value(&self.prediction(&raw, ex), ex.target)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pairwise_mean(&losses))
    }

    /// Mean gradient over a batch, accumulated in batch order.
    fn batch_gradient(&self, net: &MlpParams, set: &[Example], batch: &[usize]) -> Result<Vec<f64>> {
        let mut grads = vec![0.0; net.n_params()];
        for &i in batch {
            let ex = &set[i];
            let trace = net.forward_trace(&ex.input)?;
            let pred = self.prediction(trace.output(), ex);
            let (_, dpred) = self.loss.value_and_grad(&pred, ex.target)?;
            let draw: Vec<f64> = dpred.iter().zip(self.scale).map(|(g, s)| g * s).collect();
            net.backward_into(&trace, &draw, &mut grads)?;
        }
        let inv = 1.0 / batch.len() as f64;
        grads.iter_mut().for_each(|g| *g *= inv);
        Ok(grads)
    }
}

/// Mini-batch Adam with best-checkpoint selection and early stopping.
fn run_training(net: &mut MlpParams, problem: &Problem, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
    let mut adam = AdamState::new(net.n_params(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x0b5e55ed));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut since_best = 0;
    let mut stop_reason = if cfg.epochs == 0 { StopReason::NoEpochs } else { StopReason::Completed };
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let grads = problem.batch_gradient(net, train, batch)?;
            adam_step(&mut adam, net.params_mut(), &grads)?;
        }
        let train_loss = problem.mean_loss(net, train)?;
        let val_loss = if val.is_empty() { None } else { Some(problem.mean_loss(net, val)?) };
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        let monitor = val_loss.unwrap_or(train_loss);
        if !monitor.is_finite() {
            stop_reason = StopReason::Diverged;
            break;
        }
        if best.as_ref().is_none_or(|(b, _, _)| monitor < *b) {
            best = Some((monitor, epoch, net.params().to_vec()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                stop_reason = StopReason::EarlyStopped;
                break;
            }
        }
    }
    let best_epoch = match best {
        Some((_, epoch, params)) => {
            net.params_mut().copy_from_slice(&params);
            epoch
        }
        None => 0,
    };
    Ok(TrainReport {
        epochs,
        best_epoch,
        stop_reason,
    })
}

fn check_dataset(dataset: &DemoDataset, split: &DataSplit) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    dataset.validate()?;
    if split.train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if let Some(&bad) = split.train.iter().chain(&split.val).chain(&split.test).find(|&&i| i >= dataset.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: dataset.len(),
        });
    }
    Ok(())
}

/// Ground-truth ProMP weights of every demo, flattened joint-major.
pub fn ground_truth_weights(dataset: &DemoDataset, basis: &BasisConfig) -> Result<Vec<Vec<f64>>> {
    let phi = build_phi(&dataset.phase_cfg, basis)?;
    Ok(fit_many(dataset.samples.iter().map(|s| &s.trajectory), &phi, DEFAULT_LAMBDA)?
        .iter()
        .map(|w| w.flatten())
        .collect())
}

fn input_standardizer(dataset: &DemoDataset, split: &DataSplit) -> Result<Standardizer> {
    Standardizer::fit(split.train.iter().map(|&i| dataset.samples[i].context.as_slice()))
}

fn examples<'a>(
    dataset: &DemoDataset,
    indices: &[usize],
    input: &Standardizer,
    targets: &'a [Vec<f64>],
    offsets: Option<&'a GroupMeans>,
) -> Result<Vec<Example<'a>>> {
    indices
        .iter()
        .map(|&i| {
            let s = &dataset.samples[i];
            Ok(Example {
                input: input.apply(&s.context)?,
                target: &targets[i],
                offset: offsets.map(|o| o.offset_for(&s.tags)),
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn train_network(
    dataset: &DemoDataset,
    split: &DataSplit,
    targets: &[Vec<f64>],
    head: OutputHead,
    loss: LossKind,
    net_cfg: &NetConfig,
    cfg: &TrainConfig,
    method: Method,
    target: TargetSpace,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    let input = input_standardizer(dataset, split)?;
    let out_len = targets[split.train[0]].len();
    let mut sizes = vec![input.mean.len()];
    sizes.extend(&net_cfg.hidden);
    sizes.push(out_len);
    let mut net = MlpParams::init(sizes, cfg.seed)?;
    let report = {
        let train = examples(dataset, &split.train, &input, targets, head.offsets.as_ref())?;
        let val = examples(dataset, &split.val, &input, targets, head.offsets.as_ref())?;
        let problem = Problem {
            loss,
            scale: &head.scale,
        };
        run_training(&mut net, &problem, &train, &val, cfg)?
    };
    let model = Model {
        method,
        task: dataset.kind,
        phase_cfg: dataset.phase_cfg,
        n_joints: dataset.n_joints,
        target,
        input,
        head,
        regressor: Regressor::Mlp(net),
        seed: cfg.seed,
    };
    Ok((model, report))
}

/// Network predicts full ProMP weights, trained on the trajectory loss.
pub fn train_deep_mp(
    dataset: &DemoDataset,
    basis: &BasisConfig,
    net_cfg: &NetConfig,
    cfg: &TrainConfig,
    split: &DataSplit,
) -> Result<(Model, TrainReport)> {
    check_dataset(dataset, split)?;
    let targets = ground_truth_weights(dataset, basis)?;
    let phi = build_phi(&dataset.phase_cfg, basis)?;
    let head = OutputHead::identity(basis.n_basis() * dataset.n_joints);
    let loss = LossKind::trajectory(&phi, dataset.n_joints);
    let target = TargetSpace::Promp { basis: basis.clone() };
    train_network(dataset, split, &targets, head, loss, net_cfg, cfg, Method::DeepMp, target)
}

/// Network predicts residuals around the training-split mean weights,
/// grouped according to `cfg.residual_mean_scope`.
pub fn train_residual_deep_mp(
    dataset: &DemoDataset,
    basis: &BasisConfig,
    net_cfg: &NetConfig,
    cfg: &TrainConfig,
    split: &DataSplit,
) -> Result<(Model, TrainReport)> {
    check_dataset(dataset, split)?;
    let targets = ground_truth_weights(dataset, basis)?;
    let means = GroupMeans::compute(dataset, &targets, &split.train, cfg.residual_mean_scope)?;
    let phi = build_phi(&dataset.phase_cfg, basis)?;
    let head = OutputHead {
        scale: vec![1.0; basis.n_basis() * dataset.n_joints],
        offsets: Some(means),
    };
    let loss = LossKind::trajectory(&phi, dataset.n_joints);
    let target = TargetSpace::Promp { basis: basis.clone() };
    train_network(dataset, split, &targets, head, loss, net_cfg, cfg, Method::Residual, target)
}

/// DMP parameter vector of every demo; `q0` is appended when requested.
pub fn ddmp_targets(dataset: &DemoDataset, n_basis: usize, tau: f64, include_start: bool) -> Result<Vec<Vec<f64>>> {
    dataset
        .samples
        .iter()
        .map(|s| Ok(fit_dmp(&s.trajectory, n_basis, tau)?.param_vector(include_start)))
        .collect()
}

/// Network predicts DMP parameters. Reaching tasks exclude the start
/// posture from the output and use the goal-weighted loss.
pub fn train_ddmp(
    dataset: &DemoDataset,
    n_basis: usize,
    tau: f64,
    task: DatasetKind,
    net_cfg: &NetConfig,
    cfg: &TrainConfig,
    split: &DataSplit,
) -> Result<(Model, TrainReport)> {
    check_dataset(dataset, split)?;
    let include_start = task == DatasetKind::Wpp;
    let targets = ddmp_targets(dataset, n_basis, tau, include_start)?;
    let len = targets[0].len();
    let scale: Vec<f64> = (0..len)
        .map(|k| {
            let col: Vec<f64> = split.train.iter().map(|&i| targets[i][k]).collect();
            let r = rms(&col);
            if r > 1e-12 { r } else { 1.0 }
        })
        .collect();
    let loss = match task {
        DatasetKind::Rtp => LossKind::DdmpRtp {
            alpha: DEFAULT_DDMP_ALPHA,
            n_joints: dataset.n_joints,
        },
        DatasetKind::Wpp => LossKind::DdmpWpp,
    };
    let target = TargetSpace::Dmp {
        n_basis,
        tau,
        gains: DmpGains::default(),
        include_start,
    };
    let head = OutputHead { scale, offsets: None };
    let (mut model, report) = train_network(dataset, split, &targets, head, loss, net_cfg, cfg, Method::Ddmp, target)?;
    model.task = task;
    Ok((model, report))
}

/// Closed-form linear baseline mapping contexts to full weights.
pub fn train_ridge(dataset: &DemoDataset, basis: &BasisConfig, lambda: f64, split: &DataSplit, seed: u64) -> Result<Model> {
    check_dataset(dataset, split)?;
    let targets = ground_truth_weights(dataset, basis)?;
    let input = input_standardizer(dataset, split)?;
    let xs = split
        .train
        .iter()
        .map(|&i| input.apply(&dataset.samples[i].context))
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<Vec<f64>> = split.train.iter().map(|&i| targets[i].clone()).collect();
    let ridge = ridge_fit(&xs, &ys, lambda)?;
    Ok(Model {
        method: Method::Ridge,
        task: dataset.kind,
        phase_cfg: dataset.phase_cfg,
        n_joints: dataset.n_joints,
        target: TargetSpace::Promp { basis: basis.clone() },
        input,
        head: OutputHead::identity(ys[0].len()),
        regressor: Regressor::Ridge(ridge),
        seed,
    })
}
