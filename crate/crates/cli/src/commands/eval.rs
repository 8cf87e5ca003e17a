use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use mprim::basis::{build_phi, BasisConfig};
use mprim::dataset::{apply_split, load_jsonl, DatasetKind, PhantomConfig, Region, SplitSpec};
use mprim::kinematics::KinematicChain;
use mprim::metrics::{write_records_csv, EvalRecord};
use mprim::training::{evaluate, sample_trajectories, TargetSpace};
use serde::Serialize;

use super::sha256_file;
use crate::checkpoint::Checkpoint;
use crate::config::FileConfig;
use crate::manifest::RunManifest;
use crate::plot;
use crate::EvalArgs;

#[derive(Debug, Serialize)]
struct EvalSettings {
    /// `checkpoint-test`, `all` or a WPP split id.
    samples: String,
    chain: Option<PathBuf>,
    n_basis: usize,
    plot_samples: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    method: &'a str,
    samples: &'a str,
    groups: &'a [EvalRecord],
    overall: &'a EvalRecord,
    missing_groups: Vec<String>,
}

fn load_chain(path: Option<&PathBuf>) -> Result<KinematicChain> {
    match path {
        None => Ok(KinematicChain::default_seven_dof()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading chain {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing chain {}", p.display()))
        }
    }
}

pub fn run(args: &EvalArgs, file: &FileConfig) -> Result<()> {
    let dataset = load_jsonl(&args.data).with_context(|| format!("loading {}", args.data.display()))?;
    let ck = Checkpoint::load(&args.checkpoint)?;
    let model = &ck.model;
    if model.n_joints != dataset.n_joints {
        bail!(
            "checkpoint predicts {} joints, dataset has {}",
            model.n_joints,
            dataset.n_joints
        );
    }
    let chain_path = args.chain.clone().or_else(|| file.eval.chain.clone());
    let chain = load_chain(chain_path.as_ref())?;
    if chain.n_joints() != model.n_joints {
        bail!("chain has {} joints, model has {}", chain.n_joints(), model.n_joints);
    }

    let same_data = sha256_file(&args.data)? == ck.dataset_sha256;
    let split_id = args.split.clone().or_else(|| file.eval.split.clone());
    let (label, indices) = if args.all {
        ("all".to_string(), (0..dataset.len()).collect::<Vec<_>>())
    } else if let Some(id) = split_id {
        let spec = SplitSpec::parse(&id)?;
        (spec.id.clone(), apply_split(&dataset, &spec, ck.settings.train.seed)?.test)
    } else {
        if !same_data {
            bail!(
                "{} differs from the dataset the checkpoint was trained on; pass --split or --all",
                args.data.display()
            );
        }
        ("checkpoint-test".to_string(), ck.split.test.clone())
    };
    if !same_data {
        warn!("dataset checksum differs from the training dataset");
    }
    if indices.is_empty() {
        bail!("no samples to evaluate ({label})");
    }

    let basis = match &model.target {
        TargetSpace::Promp { basis } => basis.clone(),
        TargetSpace::Dmp { .. } => BasisConfig::evenly_spaced(ck.settings.n_basis, &dataset.phase_cfg)?,
    };
    let phi = build_phi(&dataset.phase_cfg, &basis)?;
    let evaluation = evaluate(model, &dataset, &indices, &phi, &chain)?;

    let expected: Vec<String> = match dataset.kind {
        DatasetKind::Rtp => Region::ALL.iter().map(|r| r.to_string()).collect(),
        DatasetKind::Wpp => PhantomConfig::ALL.iter().map(|c| c.to_string()).collect(),
    };
    let missing: Vec<String> = expected
        .into_iter()
        .filter(|g| !evaluation.groups.iter().any(|r| &r.group == g))
        .collect();
    for g in &missing {
        warn!("group {g} has no evaluated samples; row omitted");
    }
    for r in evaluation.rows() {
        info!(
            "{:>4}: AveMSE {:.6e} rad^2, AveED {:.3} mm ({} samples)",
            r.group, r.ave_mse, r.ave_ed, r.count
        );
    }

    let plot_samples = args
        .plot_samples
        .clone()
        .or_else(|| file.eval.plot_samples.clone())
        .unwrap_or_else(|| vec![indices[0]]);
    let settings = EvalSettings {
        samples: label.clone(),
        chain: chain_path,
        n_basis: basis.n_basis(),
        plot_samples: plot_samples.clone(),
    };
    let mut manifest = RunManifest::new("eval", ck.settings.train.seed, &settings, file)?;
    manifest.input(&args.data)?;
    manifest.input(&args.checkpoint)?;
    if let Some(p) = &settings.chain {
        manifest.input(p)?;
    }

    super::create_dir(&args.out_dir)?;
    let metrics_path = args.out_dir.join("metrics.csv");
    let out = File::create(&metrics_path).with_context(|| format!("creating {}", metrics_path.display()))?;
    write_records_csv(&evaluation.groups, BufWriter::new(out))?;
    manifest.output(&metrics_path)?;

    let summary_path = args.out_dir.join("summary.json");
    let summary = Summary {
        method: model.method.name(),
        samples: &label,
        groups: &evaluation.groups,
        overall: &evaluation.overall,
        missing_groups: missing,
    };
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", summary_path.display()))?;
    manifest.output(&summary_path)?;

    for &i in &plot_samples {
        let (pred, gt) = sample_trajectories(model, &dataset, i, &phi)?;
        let group = dataset.samples[i].tags.group();
        for path in plot::emit_sample(&args.out_dir, i, &group, &pred, &gt, &chain)? {
            manifest.output(&path)?;
        }
    }
    manifest.write(&args.out_dir.join("manifest.json"))?;
    info!("wrote {}", metrics_path.display());
    Ok(())
}
