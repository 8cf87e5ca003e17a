use std::fs::File;
use std::io::BufWriter;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use mprim::basis::BasisConfig;
use mprim::dataset::{apply_split, load_jsonl, DatasetKind, DemoDataset, SplitSpec};
use mprim::dmp::{DEFAULT_N_BASIS, DEFAULT_TAU};
use mprim::regressor::DEFAULT_HIDDEN;
use mprim::training::{
    train_ddmp, train_deep_mp, train_residual_deep_mp, train_ridge, DataSplit, MeanScope, Method, NetConfig,
    StopReason, TrainConfig, TrainReport,
};

use super::parse_kind;
use crate::checkpoint::{Checkpoint, TrainSettings};
use crate::config::FileConfig;
use crate::manifest::RunManifest;
use crate::TrainArgs;

pub const DEFAULT_N_BASIS_PROMP: usize = 10;
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;

fn resolve(args: &TrainArgs, file: &FileConfig, dataset: &DemoDataset) -> Result<TrainSettings> {
    let s = &file.train;
    let method = args
        .method
        .clone()
        .or_else(|| s.method.clone())
        .context("no method given (use --method deep-mp|residual|ddmp|ridge)")?;
    Method::parse(&method)?;
    let task = match (args.task, &s.task) {
        (Some(k), _) => DatasetKind::from(k),
        (None, Some(t)) => parse_kind(t)?,
        (None, None) => dataset.kind,
    };
    let seed = file.resolve_seed(args.seed)?;
    let mut train = match dataset.kind {
        DatasetKind::Rtp => TrainConfig::rtp(seed),
        DatasetKind::Wpp => TrainConfig::wpp(seed),
    };
    if let Some(v) = args.epochs.or(s.epochs) {
        train.epochs = v;
    }
    if let Some(v) = args.batch_size.or(s.batch_size) {
        train.batch_size = v;
    }
    if let Some(v) = args.lr.or(s.lr) {
        train.learning_rate = v;
    }
    if let Some(v) = args.patience.or(s.patience) {
        train.early_stop_patience = v;
    }
    if let Some(v) = args.residual_scope.as_ref().or(s.residual_scope.as_ref()) {
        train.residual_mean_scope = match v.as_str() {
            "per-region" => MeanScope::PerRegion,
            "global" => MeanScope::Global,
            other => bail!("unknown residual scope {other:?} (expected per-region or global)"),
        };
    }
    train.validate()?;
    let hidden = args
        .hidden
        .clone()
        .or_else(|| s.hidden.clone())
        .unwrap_or_else(|| DEFAULT_HIDDEN.to_vec());
    Ok(TrainSettings {
        method,
        task: task.to_string(),
        split: args.split.clone().or_else(|| s.split.clone()),
        n_basis: args.n_basis.or(s.n_basis).unwrap_or(DEFAULT_N_BASIS_PROMP),
        dmp_basis: args.dmp_basis.or(s.dmp_basis).unwrap_or(DEFAULT_N_BASIS),
        tau: args.tau.or(s.tau).unwrap_or(DEFAULT_TAU),
        lambda: args.lambda.or(s.lambda).unwrap_or(DEFAULT_RIDGE_LAMBDA),
        net: NetConfig { hidden },
        train,
    })
}

/// Table split for `WPPn` ids, seeded random split otherwise.
pub fn build_split(dataset: &DemoDataset, split_id: Option<&str>, train: &TrainConfig) -> Result<DataSplit> {
    match split_id {
        Some(id) => {
            if dataset.kind != DatasetKind::Wpp {
                bail!("split {id} needs a wpp dataset, got {}", dataset.kind);
            }
            let spec = SplitSpec::parse(id)?;
            let idx = apply_split(dataset, &spec, train.seed)?;
            Ok(DataSplit::from_train_test(
                idx.train,
                idx.test,
                train.val_fraction_of_train,
                train.seed,
            )?)
        }
        None => Ok(DataSplit::random(dataset.len(), train)?),
    }
}

pub fn run(args: &TrainArgs, file: &FileConfig) -> Result<()> {
    let dataset = load_jsonl(&args.data).with_context(|| format!("loading {}", args.data.display()))?;
    let settings = resolve(args, file, &dataset)?;
    let split = build_split(&dataset, settings.split.as_deref(), &settings.train)?;
    info!(
        "{} on {} samples: {} train, {} validation, {} test",
        settings.method,
        dataset.len(),
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    let basis = BasisConfig::evenly_spaced(settings.n_basis, &dataset.phase_cfg)?;
    let cfg = &settings.train;
    let (model, report) = match Method::parse(&settings.method)? {
        Method::DeepMp => train_deep_mp(&dataset, &basis, &settings.net, cfg, &split)?,
        Method::Residual => train_residual_deep_mp(&dataset, &basis, &settings.net, cfg, &split)?,
        Method::Ddmp => train_ddmp(
            &dataset,
            settings.dmp_basis,
            settings.tau,
            parse_kind(&settings.task)?,
            &settings.net,
            cfg,
            &split,
        )?,
        Method::Ridge => {
            let model = train_ridge(&dataset, &basis, settings.lambda, &split, cfg.seed)?;
            (
                model,
                TrainReport {
                    epochs: Vec::new(),
                    best_epoch: 0,
                    stop_reason: StopReason::NoEpochs,
                },
            )
        }
    };
    if let Some(last) = report.epochs.last() {
        info!(
            "stopped after epoch {} ({:?}), best epoch {}, final train loss {:.6e}",
            last.epoch, report.stop_reason, report.best_epoch, last.train_loss
        );
    } else if model.mlp().is_some() {
        warn!("no epochs run; checkpoint holds the initialization");
    }

    super::create_dir(&args.out_dir)?;
    let ck_path = args.out_dir.join("checkpoint.json");
    let curve_path = args.out_dir.join("loss_curve.csv");
    let seed = settings.train.seed;
    let mut manifest = RunManifest::new("train", seed, &settings, file)?;
    manifest.input(&args.data)?;
    let dataset_sha256 = manifest.inputs.last().expect("just pushed").sha256.clone();

    Checkpoint::new(settings, dataset_sha256, split, model).save(&ck_path)?;
    let out = File::create(&curve_path).with_context(|| format!("creating {}", curve_path.display()))?;
    report.write_csv(BufWriter::new(out))?;
    manifest.output(&ck_path)?;
    manifest.output(&curve_path)?;
    manifest.write(&args.out_dir.join("manifest.json"))?;
    info!("wrote {}", ck_path.display());
    Ok(())
}
