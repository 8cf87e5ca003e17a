use anyhow::{bail, Result};
use log::info;
use mprim::dataset::{generate_rtp, generate_wpp, save_jsonl, DatasetKind, RtpConfig, WppConfig};
use serde::Serialize;

use super::parse_kind;
use crate::config::FileConfig;
use crate::manifest::RunManifest;
use crate::GenerateArgs;

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Resolved {
    Rtp(RtpConfig),
    Wpp(WppConfig),
}

pub fn run(args: &GenerateArgs, file: &FileConfig) -> Result<()> {
    let section = &file.generate;
    let kind = match (args.kind, &section.kind) {
        (Some(k), _) => k.into(),
        (None, Some(s)) => parse_kind(s)?,
        (None, None) => bail!("no dataset kind given (use --kind rtp|wpp)"),
    };
    let seed = file.resolve_seed(args.seed)?;
    let noise_sigma = args.noise.or(section.noise).unwrap_or(0.0);
    let resolved = match kind {
        DatasetKind::Rtp => {
            let mut cfg = RtpConfig {
                seed,
                noise_sigma,
                ..RtpConfig::default()
            };
            if let Some(c) = &args.counts {
                cfg.counts = c.as_slice().try_into().map_err(|_| anyhow::anyhow!("--counts takes four values, got {}", c.len()))?;
            } else if let Some(c) = section.counts {
                cfg.counts = c;
            }
            Resolved::Rtp(cfg)
        }
        DatasetKind::Wpp => {
            let mut cfg = WppConfig {
                seed,
                noise_sigma,
                ..WppConfig::default()
            };
            if let Some(t) = args.trials.or(section.trials) {
                cfg.trials_per_cell = t;
            }
            Resolved::Wpp(cfg)
        }
    };
    let dataset = match &resolved {
        Resolved::Rtp(cfg) => generate_rtp(cfg)?,
        Resolved::Wpp(cfg) => generate_wpp(cfg)?,
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        super::create_dir(parent)?;
    }
    save_jsonl(&dataset, &args.out)?;
    info!("wrote {} {} samples to {}", dataset.len(), kind, args.out.display());

    let mut manifest = RunManifest::new("generate", seed, &resolved, file)?;
    manifest.output(&args.out)?;
    manifest.write(&args.out.with_extension("manifest.json"))
}
