//! Synthetic demonstration datasets with the structure of the reach-to-palpate
//! (RTP) and wedges-palpation-path (WPP) corpora, the WPP1-WPP10 split
//! protocol, and JSONL persistence.
//!
//! The geometry here (region rectangles, wedge strokes, the posture map from a
//! task-space point to joint angles) is synthetic: it reproduces the counts,
//! tags and density ordering of the recorded data, not its values.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::PhaseConfig;
use crate::error::{Error, Result};
use crate::promp::Trajectory;

pub const SCHEMA_VERSION: u32 = 1;
pub const N_JOINTS: usize = 7;
pub const DEFAULT_DURATION_SAMPLES: usize = 150;
pub const DEFAULT_SAMPLING_FREQUENCY: f64 = 20.0;
pub const DEFAULT_RTP_COUNTS: [usize; 4] = [292, 128, 73, 52];
pub const DEFAULT_WPP_TRIALS: usize = 31;
pub const N_PATTERNS: u8 = 7;

/// Panda "ready" posture used as the RTP home configuration (rad).
pub const HOME_POSTURE: [f64; N_JOINTS] = [0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785];

/// Table height of the phantom (m).
const PHANTOM_Z: f64 = 0.09;
/// Center of the RTP workspace on the table (m).
const WORKSPACE_CENTER: [f64; 2] = [0.55, 0.05];
/// Outer half-extent of each RTP region; region `k` is the square annulus
/// between half-extents `k-1` and `k` (region A is the inner square).
const REGION_HALF_EXTENTS: [f64; 4] = [0.05, 0.09, 0.13, 0.17];

const WEDGE_LENGTH: f64 = 0.07;
const SHORT_PATTERN_SCALE: f64 = 0.6;
const WEDGE_ANGLE_JITTER: f64 = 0.03;
const WEDGE_LENGTH_JITTER: f64 = 0.03;
/// Height drop of the phantom surface per squared meter of radial distance.
const DOME_CURVATURE: f64 = 4.0;

/// Minimum-jerk profile `q0 + (q1 - q0)(10 s^3 - 15 s^4 + 6 s^5)`,
/// `s = t / (T - 1)`.
pub fn min_jerk(q0: &DVector<f64>, q1: &DVector<f64>, phase_cfg: &PhaseConfig) -> Result<Trajectory> {
    if q0.len() != q1.len() {
        return Err(Error::DimensionMismatch {
            context: "min_jerk endpoints",
            expected: q0.len(),
            actual: q1.len(),
        });
    }
    let t_len = phase_cfg.duration_samples();
    let values = DMatrix::from_fn(t_len, q0.len(), |t, j| {
        let s = t as f64 / (t_len - 1) as f64;
        q0[j] + (q1[j] - q0[j]) * min_jerk_profile(s)
    });
    Trajectory::new(values, *phase_cfg)
}

pub fn min_jerk_profile(s: f64) -> f64 {
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Smooth stand-in for inverse kinematics: joint posture that places the
/// finger at task-space point `p` (m).
pub fn posture_for_point(p: [f64; 3]) -> DVector<f64> {
    let [x, y, z] = p;
    let yaw = y.atan2(x);
    let reach = x.hypot(y) - WORKSPACE_CENTER[0];
    let dz = z - PHANTOM_Z;
    DVector::from_vec(vec![
        yaw,
        0.25 + 1.6 * reach + 2.5 * reach * reach - 2.0 * dz,
        0.15 * (3.0 * yaw).sin(),
        -2.0 + 1.9 * reach + 3.0 * reach * reach + 1.0 * dz,
        0.2 * (2.0 * yaw).sin() * (1.0 + reach),
        1.9 + 0.6 * reach - 0.8 * reach * reach + 1.5 * dz,
        0.785 + yaw,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
    D,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::A, Region::B, Region::C, Region::D];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Phantom placement of the WPP corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhantomConfig {
    I,
    II,
    III,
    IV,
}

impl PhantomConfig {
    pub const ALL: [PhantomConfig; 4] = [
        PhantomConfig::I,
        PhantomConfig::II,
        PhantomConfig::III,
        PhantomConfig::IV,
    ];

    /// Phantom (nipple) position in the robot base frame (m).
    pub fn position(self) -> [f64; 3] {
        match self {
            PhantomConfig::I => [0.608, 0.063, 0.086],
            PhantomConfig::II => [0.516, 0.120, 0.096],
            PhantomConfig::III => [0.575, 0.015, 0.093],
            PhantomConfig::IV => [0.488, 0.014, 0.092],
        }
    }

    fn stroke_scale(self) -> f64 {
        match self {
            PhantomConfig::I => 1.0,
            PhantomConfig::II => 0.9,
            PhantomConfig::III => 1.1,
            PhantomConfig::IV => 0.95,
        }
    }
}

impl fmt::Display for PhantomConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Patterns 6 and 7 are the shorter wedges.
pub fn is_short_pattern(pattern: u8) -> bool {
    pattern >= 6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tags {
    Rtp { region: Region },
    Wpp { pattern: u8, config: PhantomConfig },
}

impl Tags {
    /// Evaluation group: the region for RTP, the configuration for WPP.
    pub fn group(&self) -> String {
        match self {
            Tags::Rtp { region } => region.to_string(),
            Tags::Wpp { config, .. } => config.to_string(),
        }
    }

    pub fn region(&self) -> Option<Region> {
        match self {
            Tags::Rtp { region } => Some(*region),
            Tags::Wpp { .. } => None,
        }
    }

    pub fn pattern(&self) -> Option<u8> {
        match self {
            Tags::Wpp { pattern, .. } => Some(*pattern),
            Tags::Rtp { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Rtp,
    Wpp,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Rtp => "rtp",
            DatasetKind::Wpp => "wpp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSample {
    pub context: Vec<f64>,
    pub trajectory: Trajectory,
    pub tags: Tags,
    pub split: Option<SplitRole>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoDataset {
    pub kind: DatasetKind,
    pub seed: u64,
    pub noise_sigma: f64,
    pub phase_cfg: PhaseConfig,
    pub n_joints: usize,
    pub samples: Vec<DemoSample>,
}

impl DemoDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn context_dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.context.len())
    }

    /// Checks that every sample matches the header and its dataset kind.
    pub fn validate(&self) -> Result<()> {
        let dim = self.context_dim();
        for (i, s) in self.samples.iter().enumerate() {
            if s.trajectory.n_samples() != self.phase_cfg.duration_samples()
                || s.trajectory.n_joints() != self.n_joints
            {
                return Err(Error::InconsistentDataset(format!(
                    "sample {i} has a {}x{} trajectory, expected {}x{}",
                    s.trajectory.n_samples(),
                    s.trajectory.n_joints(),
                    self.phase_cfg.duration_samples(),
                    self.n_joints
                )));
            }
            if Some(s.context.len()) != dim {
                return Err(Error::InconsistentDataset(format!(
                    "sample {i} has context dimension {}",
                    s.context.len()
                )));
            }
            let tag_ok = match (self.kind, s.tags) {
                (DatasetKind::Rtp, Tags::Rtp { .. }) => true,
                (DatasetKind::Wpp, Tags::Wpp { pattern, .. }) => (1..=N_PATTERNS).contains(&pattern),
                _ => false,
            };
            if !tag_ok {
                return Err(Error::InconsistentDataset(format!(
                    "sample {i} tags {:?} do not fit a {} dataset",
                    s.tags, self.kind
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtpConfig {
    pub seed: u64,
    pub counts: [usize; 4],
    pub noise_sigma: f64,
    pub phase: PhaseConfig,
}

impl Default for RtpConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            counts: DEFAULT_RTP_COUNTS,
            noise_sigma: 0.0,
            phase: default_phase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WppConfig {
    pub seed: u64,
    pub trials_per_cell: usize,
    pub noise_sigma: f64,
    pub phase: PhaseConfig,
}

impl Default for WppConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials_per_cell: DEFAULT_WPP_TRIALS,
            noise_sigma: 0.0,
            phase: default_phase(),
        }
    }
}

pub fn default_phase() -> PhaseConfig {
    PhaseConfig::new(DEFAULT_SAMPLING_FREQUENCY, DEFAULT_DURATION_SAMPLES)
        .expect("default phase is valid")
}

fn noise_source(sigma: f64) -> Result<Option<Normal<f64>>> {
    if sigma == 0.0 {
        return Ok(None);
    }
    Normal::new(0.0, sigma)
        .map(Some)
        .map_err(|e| Error::InvalidConfig(format!("noise sigma {sigma}: {e}")))
}

fn add_noise(traj: Trajectory, noise: Option<&Normal<f64>>, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    match noise {
        None => Ok(traj),
        Some(n) => {
            let phase = *traj.phase_cfg();
            let mut v = traj.into_values();
            v.iter_mut().for_each(|x| *x += n.sample(rng));
            Trajectory::new(v, phase)
        }
    }
}

/// Uniform sample from the square annulus of `region` around the workspace
/// center.
fn sample_in_region(region: Region, rng: &mut ChaCha8Rng) -> [f64; 2] {
    let outer = REGION_HALF_EXTENTS[region.index()];
    let inner = if region.index() == 0 {
        0.0
    } else {
        REGION_HALF_EXTENTS[region.index() - 1]
    };
    loop {
        let dx = rng.random_range(-outer..outer);
        let dy = rng.random_range(-outer..outer);
        if dx.abs().max(dy.abs()) >= inner {
            return [WORKSPACE_CENTER[0] + dx, WORKSPACE_CENTER[1] + dy];
        }
    }
}

/// Area of each region's annulus (m^2).
pub fn region_area(region: Region) -> f64 {
    let outer = REGION_HALF_EXTENTS[region.index()];
    let inner = if region.index() == 0 {
        0.0
    } else {
        REGION_HALF_EXTENTS[region.index() - 1]
    };
    4.0 * (outer * outer - inner * inner)
}

/// Reach-to-palpate demos: from the home posture to the posture above a
/// phantom placed uniformly inside each region.
pub fn generate_rtp(cfg: &RtpConfig) -> Result<DemoDataset> {
    if cfg.counts.contains(&0) {
        return Err(Error::InvalidConfig("every region count must be positive".into()));
    }
    let noise = noise_source(cfg.noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let home = DVector::from_column_slice(&HOME_POSTURE);
    let mut samples = Vec::with_capacity(cfg.counts.iter().sum());
    for region in Region::ALL {
        for _ in 0..cfg.counts[region.index()] {
            let [x, y] = sample_in_region(region, &mut rng);
            let target = [x, y, PHANTOM_Z];
            let goal = posture_for_point(target);
            let traj = add_noise(min_jerk(&home, &goal, &cfg.phase)?, noise.as_ref(), &mut rng)?;
            samples.push(DemoSample {
                context: target.to_vec(),
                trajectory: traj,
                tags: Tags::Rtp { region },
                split: None,
            });
        }
    }
    Ok(DemoDataset {
        kind: DatasetKind::Rtp,
        seed: cfg.seed,
        noise_sigma: cfg.noise_sigma,
        phase_cfg: cfg.phase,
        n_joints: N_JOINTS,
        samples,
    })
}

/// Task-space point on the phantom surface at radial distance `r` along
/// heading `angle` from the nipple.
fn wedge_point(nipple: [f64; 3], angle: f64, r: f64) -> [f64; 3] {
    [
        nipple[0] + r * angle.cos(),
        nipple[1] + r * angle.sin(),
        nipple[2] - DOME_CURVATURE * r * r,
    ]
}

/// Wedge palpation demos: 7 radial strokes from the nipple for each of the
/// 4 phantom configurations, `trials_per_cell` perturbed repetitions each.
pub fn generate_wpp(cfg: &WppConfig) -> Result<DemoDataset> {
    if cfg.trials_per_cell == 0 {
        return Err(Error::InvalidConfig("trials_per_cell must be positive".into()));
    }
    let noise = noise_source(cfg.noise_sigma)?;
    let angle_jitter = Normal::new(0.0, WEDGE_ANGLE_JITTER).expect("valid");
    let length_jitter = Normal::new(0.0, WEDGE_LENGTH_JITTER).expect("valid");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t_len = cfg.phase.duration_samples();
    let mut samples = Vec::with_capacity(7 * 4 * cfg.trials_per_cell);
    for pattern in 1..=N_PATTERNS {
        let base_angle = 2.0 * std::f64::consts::PI * f64::from(pattern - 1) / f64::from(N_PATTERNS);
        let pattern_scale = if is_short_pattern(pattern) { SHORT_PATTERN_SCALE } else { 1.0 };
        for config in PhantomConfig::ALL {
            let nipple = config.position();
            for _ in 0..cfg.trials_per_cell {
                let angle = base_angle + angle_jitter.sample(&mut rng);
                let length = WEDGE_LENGTH
                    * config.stroke_scale()
                    * pattern_scale
                    * (1.0 + length_jitter.sample(&mut rng));
                let values = DMatrix::from_fn(t_len, N_JOINTS, |_, _| 0.0);
                let mut values = values;
                for t in 0..t_len {
                    let s = min_jerk_profile(t as f64 / (t_len - 1) as f64);
                    let q = posture_for_point(wedge_point(nipple, angle, s * length));
                    values.set_row(t, &q.transpose());
                }
                let traj = add_noise(Trajectory::new(values, cfg.phase)?, noise.as_ref(), &mut rng)?;
                let end = wedge_point(nipple, angle, length);
                samples.push(DemoSample {
                    context: vec![nipple[0], nipple[1], nipple[2], end[0], end[1]],
                    trajectory: traj,
                    tags: Tags::Wpp { pattern, config },
                    split: None,
                });
            }
        }
    }
    Ok(DemoDataset {
        kind: DatasetKind::Wpp,
        seed: cfg.seed,
        noise_sigma: cfg.noise_sigma,
        phase_cfg: cfg.phase,
        n_joints: N_JOINTS,
        samples,
    })
}

/// How one palpation pattern is used by a split experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Disposition {
    Train,
    Test,
    Half,
    NotUsed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub id: String,
    /// Disposition of patterns 1..=7, in order.
    pub patterns: [Disposition; 7],
}

impl SplitSpec {
    pub fn new(id: impl Into<String>, patterns: [Disposition; 7]) -> Result<Self> {
        let s = Self {
            id: id.into(),
            patterns,
        };
        let trains = patterns
            .iter()
            .any(|d| matches!(d, Disposition::Train | Disposition::Half));
        let tests = patterns
            .iter()
            .any(|d| matches!(d, Disposition::Test | Disposition::Half));
        if !trains || !tests {
            return Err(Error::InvalidConfig(format!(
                "split {} needs at least one training and one test pattern",
                s.id
            )));
        }
        Ok(s)
    }

    /// Experiments WPP1 to WPP10.
    pub fn wpp(experiment: u8) -> Result<Self> {
        use Disposition::{Half as H, NotUsed as N, Test as Te, Train as Tr};
        let patterns = match experiment {
            1 => [Tr, Tr, Tr, Te, Te, Tr, Tr],
            2 => [Tr, Tr, Te, Te, Tr, Tr, Tr],
            3 => [Tr, Tr, Te, Te, Tr, N, N],
            4 => [Tr, Te, Te, Tr, Tr, N, N],
            5 => [Tr, Tr, Tr, H, H, Tr, Tr],
            6 => [Tr, Tr, H, H, Tr, Tr, Tr],
            7 => [Tr, Tr, H, H, Tr, N, N],
            8 => [Tr, H, H, Tr, Tr, N, N],
            9 => [H, H, H, H, H, H, H],
            10 => [H, H, H, H, H, N, N],
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown WPP experiment {experiment} (expected 1-10)"
                )))
            }
        };
        Self::new(format!("WPP{experiment}"), patterns)
    }

    /// Parses identifiers such as `WPP4` or `wpp4`.
    pub fn parse(id: &str) -> Result<Self> {
        let digits = id
            .strip_prefix("WPP")
            .or_else(|| id.strip_prefix("wpp"))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown split id {id:?}")))?;
        let n: u8 = digits
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("unknown split id {id:?}")))?;
        Self::wpp(n)
    }

    pub fn disposition(&self, pattern: u8) -> Disposition {
        self.patterns[usize::from(pattern - 1)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Assigns WPP samples to train/test. Half patterns are shuffled per
/// configuration; the first `ceil(n/2)` go to training.
pub fn apply_split(dataset: &DemoDataset, spec: &SplitSpec, seed: u64) -> Result<SplitIndices> {
    let mut cells: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); 4]; usize::from(N_PATTERNS)];
    for (i, s) in dataset.samples.iter().enumerate() {
        match s.tags {
            Tags::Wpp { pattern, config } if (1..=N_PATTERNS).contains(&pattern) => {
                cells[usize::from(pattern - 1)][config as usize].push(i);
            }
            _ => {
                return Err(Error::InconsistentDataset(format!(
                    "sample {i} has no WPP pattern tag"
                )))
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SplitIndices::default();
    for pattern in 1..=N_PATTERNS {
        let per_config = &cells[usize::from(pattern - 1)];
        let disposition = spec.disposition(pattern);
        if disposition != Disposition::NotUsed && per_config.iter().all(Vec::is_empty) {
            return Err(Error::MissingPattern(pattern));
        }
        for idx in per_config {
            match disposition {
                Disposition::Train => out.train.extend(idx),
                Disposition::Test => out.test.extend(idx),
                Disposition::NotUsed => {}
                Disposition::Half => {
                    let mut idx = idx.clone();
                    idx.shuffle(&mut rng);
                    let n_train = idx.len().div_ceil(2);
                    out.train.extend(&idx[..n_train]);
                    out.test.extend(&idx[n_train..]);
                }
            }
        }
    }
    out.train.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct HeaderRecord {
    schema_version: u32,
    record: String,
    kind: DatasetKind,
    seed: u64,
    noise_sigma: f64,
    n_joints: usize,
    sampling_frequency: f64,
    duration_samples: usize,
    n_samples: usize,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    schema_version: u32,
    record: String,
    index: usize,
    context: Vec<f64>,
    trajectory: Vec<Vec<f64>>,
    tags: Tags,
    split: Option<SplitRole>,
}

pub fn write_jsonl<W: Write>(dataset: &DemoDataset, mut w: W) -> Result<()> {
    let header = HeaderRecord {
        schema_version: SCHEMA_VERSION,
        record: "header".into(),
        kind: dataset.kind,
        seed: dataset.seed,
        noise_sigma: dataset.noise_sigma,
        n_joints: dataset.n_joints,
        sampling_frequency: dataset.phase_cfg.sampling_frequency(),
        duration_samples: dataset.phase_cfg.duration_samples(),
        n_samples: dataset.samples.len(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for (index, s) in dataset.samples.iter().enumerate() {
        let v = s.trajectory.values();
        let rec = SampleRecord {
            schema_version: SCHEMA_VERSION,
            record: "sample".into(),
            index,
            context: s.context.clone(),
            trajectory: (0..v.nrows())
                .map(|t| v.row(t).iter().copied().collect())
                .collect(),
            tags: s.tags,
            split: s.split,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_jsonl(dataset: &DemoDataset, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_jsonl(dataset, BufWriter::new(f))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<DemoDataset> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "missing header record"))?;
    let header: HeaderRecord =
        serde_json::from_str(&first?).map_err(|e| parse_err(1, e.to_string()))?;
    if header.schema_version != SCHEMA_VERSION || header.record != "header" {
        return Err(parse_err(
            1,
            format!(
                "expected a schema {SCHEMA_VERSION} header, got record {:?} schema {}",
                header.record, header.schema_version
            ),
        ));
    }
    let phase_cfg = PhaseConfig::new(header.sampling_frequency, header.duration_samples)
        .map_err(|e| parse_err(1, e.to_string()))?;
    let mut samples = Vec::with_capacity(header.n_samples);
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        if rec.schema_version != SCHEMA_VERSION || rec.record != "sample" {
            return Err(parse_err(line_no, "expected a sample record"));
        }
        if rec.index != samples.len() {
            return Err(parse_err(
                line_no,
                format!("sample index {} out of sequence", rec.index),
            ));
        }
        if rec.trajectory.len() != phase_cfg.duration_samples()
            || rec.trajectory.iter().any(|row| row.len() != header.n_joints)
        {
            return Err(parse_err(line_no, "trajectory shape does not match the header"));
        }
        let values = DMatrix::from_fn(phase_cfg.duration_samples(), header.n_joints, |t, j| {
            rec.trajectory[t][j]
        });
        let trajectory =
            Trajectory::new(values, phase_cfg).map_err(|e| parse_err(line_no, e.to_string()))?;
        samples.push(DemoSample {
            context: rec.context,
            trajectory,
            tags: rec.tags,
            split: rec.split,
        });
    }
    if samples.len() != header.n_samples {
        return Err(parse_err(
            1,
            format!("header announces {} samples, found {}", header.n_samples, samples.len()),
        ));
    }
    let ds = DemoDataset {
        kind: header.kind,
        seed: header.seed,
        noise_sigma: header.noise_sigma,
        phase_cfg,
        n_joints: header.n_joints,
        samples,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<DemoDataset> {
    let f = std::fs::File::open(path)?;
    read_jsonl(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn small_wpp() -> DemoDataset {
        generate_wpp(&WppConfig {
            seed: 3,
            trials_per_cell: 4,
            ..WppConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn min_jerk_examples() {
        let p = default_phase();
        let a = DVector::from_vec(vec![0.3, -1.2]);
        let c = min_jerk(&a, &a, &p).unwrap();
        assert!(c.values().row_iter().all(|r| r.transpose() == a));
        assert_eq!(min_jerk_profile(0.5), 0.5);
        let b = DVector::from_vec(vec![1.3, 0.8]);
        let odd = PhaseConfig::new(20.0, 151).unwrap();
        let m = min_jerk(&a, &b, &odd).unwrap();
        assert!((m.values().row(75).transpose() - (&a + &b) / 2.0).amax() < 1e-15);
    }

    #[test]
    fn min_jerk_endpoint_derivatives_vanish() {
        // Finite differences of the profile at s = 0 and s = 1.
        let h = 1e-4;
        for s in [0.0, 1.0] {
            let vel = (min_jerk_profile(s + h) - min_jerk_profile(s - h)) / (2.0 * h);
            let acc = (min_jerk_profile(s + h) - 2.0 * min_jerk_profile(s) + min_jerk_profile(s - h))
                / (h * h);
            assert!(vel.abs() < 1e-6, "vel {vel}");
            assert!(acc.abs() < 1e-6 * 1e3, "acc {acc}");
        }
    }

    #[test]
    fn rtp_defaults() {
        let ds = generate_rtp(&RtpConfig::default()).unwrap();
        assert_eq!(ds.len(), 545);
        let mut counts: HashMap<Region, usize> = HashMap::new();
        for s in &ds.samples {
            *counts.entry(s.tags.region().unwrap()).or_default() += 1;
            assert_eq!(s.trajectory.first().as_slice(), &HOME_POSTURE);
        }
        assert_eq!(counts[&Region::A], 292);
        assert_eq!(counts[&Region::B], 128);
        assert_eq!(counts[&Region::C], 73);
        assert_eq!(counts[&Region::D], 52);
        ds.validate().unwrap();
    }

    #[test]
    fn rtp_density_decreases_from_a_to_d() {
        let density: Vec<f64> = Region::ALL
            .iter()
            .map(|&r| DEFAULT_RTP_COUNTS[r.index()] as f64 / region_area(r))
            .collect();
        assert!(density.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn generators_are_deterministic() {
        let cfg = RtpConfig {
            seed: 11,
            counts: [5, 4, 3, 2],
            noise_sigma: 0.01,
            ..RtpConfig::default()
        };
        assert_eq!(generate_rtp(&cfg).unwrap(), generate_rtp(&cfg).unwrap());
        let other = RtpConfig { seed: 12, ..cfg.clone() };
        assert_ne!(generate_rtp(&cfg).unwrap(), generate_rtp(&other).unwrap());
        assert_eq!(small_wpp(), small_wpp());
    }

    #[test]
    fn rtp_rejects_zero_counts() {
        let cfg = RtpConfig {
            counts: [1, 0, 1, 1],
            ..RtpConfig::default()
        };
        assert!(generate_rtp(&cfg).is_err());
    }

    #[test]
    fn wpp_defaults() {
        let ds = generate_wpp(&WppConfig::default()).unwrap();
        assert_eq!(ds.len(), 868);
        let mut cells: HashMap<(u8, PhantomConfig), usize> = HashMap::new();
        for s in &ds.samples {
            if let Tags::Wpp { pattern, config } = s.tags {
                *cells.entry((pattern, config)).or_default() += 1;
                let nipple = config.position();
                assert_eq!(&s.context[..3], &nipple);
                assert_eq!(s.trajectory.first(), posture_for_point(nipple));
            }
        }
        assert_eq!(cells.len(), 28);
        assert!(cells.values().all(|&c| c == 31));
    }

    #[test]
    fn short_patterns_have_shorter_strokes() {
        let ds = small_wpp();
        let mut extent: HashMap<u8, Vec<f64>> = HashMap::new();
        for s in &ds.samples {
            let p = s.tags.pattern().unwrap();
            let len = (s.context[3] - s.context[0]).hypot(s.context[4] - s.context[1]);
            extent.entry(p).or_default().push(len);
        }
        let max_short = extent[&6].iter().chain(&extent[&7]).cloned().fold(0.0, f64::max);
        let min_long = (1..=5).flat_map(|p| extent[&p].clone()).fold(f64::INFINITY, f64::min);
        assert!(max_short < min_long);
        assert!(is_short_pattern(6) && is_short_pattern(7) && !is_short_pattern(5));
    }

    fn patterns_of(ds: &DemoDataset, idx: &[usize]) -> HashSet<u8> {
        idx.iter().map(|&i| ds.samples[i].tags.pattern().unwrap()).collect()
    }

    #[test]
    fn wpp4_split_membership() {
        let ds = small_wpp();
        let s = apply_split(&ds, &SplitSpec::wpp(4).unwrap(), 0).unwrap();
        assert_eq!(patterns_of(&ds, &s.train), HashSet::from([1, 4, 5]));
        assert_eq!(patterns_of(&ds, &s.test), HashSet::from([2, 3]));
        assert_eq!(s.train.len() + s.test.len(), 5 * 4 * 4);
    }

    #[test]
    fn wpp9_splits_every_cell_in_half() {
        let ds = small_wpp();
        let s = apply_split(&ds, &SplitSpec::parse("WPP9").unwrap(), 5).unwrap();
        assert_eq!(patterns_of(&ds, &s.train).len(), 7);
        assert_eq!(patterns_of(&ds, &s.test).len(), 7);
        assert_eq!(s.train.len(), 28 * 2);
        assert_eq!(s.test.len(), 28 * 2);
        let again = apply_split(&ds, &SplitSpec::wpp(9).unwrap(), 5).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn splits_are_disjoint() {
        let ds = small_wpp();
        for e in 1..=10 {
            let s = apply_split(&ds, &SplitSpec::wpp(e).unwrap(), u64::from(e)).unwrap();
            let train: HashSet<_> = s.train.iter().collect();
            assert!(s.test.iter().all(|i| !train.contains(i)));
        }
    }

    #[test]
    fn split_errors() {
        assert!(SplitSpec::wpp(0).is_err());
        assert!(SplitSpec::wpp(11).is_err());
        assert!(SplitSpec::parse("RTP1").is_err());
        assert!(SplitSpec::new("x", [Disposition::Train; 7]).is_err());
        let mut ds = small_wpp();
        ds.samples.retain(|s| s.tags.pattern() != Some(2));
        assert!(matches!(
            apply_split(&ds, &SplitSpec::wpp(4).unwrap(), 0),
            Err(Error::MissingPattern(2))
        ));
        let rtp = generate_rtp(&RtpConfig {
            counts: [1, 1, 1, 1],
            ..RtpConfig::default()
        })
        .unwrap();
        assert!(apply_split(&rtp, &SplitSpec::wpp(9).unwrap(), 0).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let mut ds = generate_rtp(&RtpConfig {
            seed: 4,
            counts: [3, 2, 2, 1],
            noise_sigma: 0.003,
            ..RtpConfig::default()
        })
        .unwrap();
        ds.samples[1].split = Some(SplitRole::Test);
        let mut buf = Vec::new();
        write_jsonl(&ds, &mut buf).unwrap();
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), ds);

        let wpp = small_wpp();
        let mut buf = Vec::new();
        write_jsonl(&wpp, &mut buf).unwrap();
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), wpp);
    }

    #[test]
    fn empty_dataset_round_trips() {
        let ds = DemoDataset {
            kind: DatasetKind::Wpp,
            seed: 9,
            noise_sigma: 0.0,
            phase_cfg: default_phase(),
            n_joints: N_JOINTS,
            samples: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        save_jsonl(&ds, &path).unwrap();
        assert_eq!(load_jsonl(&path).unwrap(), ds);
    }

    #[test]
    fn corrupted_line_is_reported() {
        let ds = generate_rtp(&RtpConfig {
            counts: [2, 1, 1, 1],
            ..RtpConfig::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        write_jsonl(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[3] = "{\"schema_version\":1,\"record\":\"sample\",\"index\":2,\"context\":[oops";
        let err = read_jsonl(lines.join("\n").as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        assert!(err.to_string().starts_with("line 4:"));
    }
}
