pub mod eval;
pub mod generate;
pub mod train;

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mprim::dataset::DatasetKind;
use sha2::{Digest, Sha256};

use crate::Kind;

pub fn sha256_file(path: &Path) -> Result<String> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&data)))
}

pub fn parse_kind(s: &str) -> Result<DatasetKind> {
    match s {
        "rtp" => Ok(DatasetKind::Rtp),
        "wpp" => Ok(DatasetKind::Wpp),
        other => bail!("unknown dataset kind {other:?} (expected rtp or wpp)"),
    }
}

impl From<Kind> for DatasetKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Rtp => DatasetKind::Rtp,
            Kind::Wpp => DatasetKind::Wpp,
        }
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
