//! Plot files for one evaluated sample: per-joint and end-effector CSV
//! tables plus an SVG overlay of predicted (dashed red) and ground-truth
//! joint trajectories.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mprim::kinematics::{fk_position, KinematicChain};
use mprim::promp::Trajectory;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 120.0;
const MARGIN: f64 = 40.0;
const GT_COLOR: &str = "#1f1f1f";
const PRED_COLOR: &str = "#d62728";

fn times(traj: &Trajectory) -> Vec<f64> {
    let f = traj.phase_cfg().sampling_frequency();
    (0..traj.n_samples()).map(|k| k as f64 / f).collect()
}

/// `t, pred_q1, gt_q1, ...`: one row per time step.
pub fn write_joint_csv(path: &Path, pred: &Trajectory, gt: &Trajectory) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["t".to_string()];
    for j in 1..=pred.n_joints() {
        header.push(format!("pred_q{j}"));
        header.push(format!("gt_q{j}"));
    }
    w.write_record(&header)?;
    for (k, t) in times(pred).into_iter().enumerate() {
        let mut row = vec![t.to_string()];
        for j in 0..pred.n_joints() {
            row.push(pred.values()[(k, j)].to_string());
            row.push(gt.values()[(k, j)].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `t, pred_x, pred_y, pred_z, gt_x, gt_y, gt_z` in metres.
pub fn write_ee_csv(path: &Path, pred: &Trajectory, gt: &Trajectory, chain: &KinematicChain) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["t", "pred_x", "pred_y", "pred_z", "gt_x", "gt_y", "gt_z"])?;
    for (k, t) in times(pred).into_iter().enumerate() {
        let qp: Vec<f64> = pred.values().row(k).iter().copied().collect();
        let qg: Vec<f64> = gt.values().row(k).iter().copied().collect();
        let p = fk_position(chain, &qp)?;
        let g = fk_position(chain, &qg)?;
        let mut row = vec![t.to_string()];
        row.extend(p.iter().chain(g.iter()).map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn polyline(ts: &[f64], ys: &[f64], x0: f64, y0: f64, y_range: (f64, f64), color: &str, dashed: bool) -> String {
    let t_max = ts.last().copied().unwrap_or(0.0).max(f64::EPSILON);
    let (lo, hi) = y_range;
    let span = (hi - lo).max(1e-9);
    let mut pts = String::new();
    for (t, y) in ts.iter().zip(ys) {
        let px = x0 + t / t_max * PANEL_W;
        let py = y0 + PANEL_H - (y - lo) / span * PANEL_H;
        let _ = write!(pts, "{px:.2},{py:.2} ");
    }
    let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
    format!(
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
        pts.trim_end()
    )
}

/// One stacked panel per joint with a shared time axis.
pub fn render_svg(title: &str, pred: &Trajectory, gt: &Trajectory) -> String {
    let ts = times(pred);
    let n = pred.n_joints();
    let width = PANEL_W + 2.0 * MARGIN;
    let height = n as f64 * (PANEL_H + MARGIN) + MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="20" font-size="13">{title}</text>"#);
    for j in 0..n {
        let yp: Vec<f64> = pred.joint(j).iter().copied().collect();
        let yg: Vec<f64> = gt.joint(j).iter().copied().collect();
        let lo = yp.iter().chain(&yg).copied().fold(f64::INFINITY, f64::min);
        let hi = yp.iter().chain(&yg).copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.05).max(1e-3);
        let range = (lo - pad, hi + pad);
        let y0 = MARGIN + j as f64 * (PANEL_H + MARGIN);
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#999"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">q{} [{:.3}, {:.3}] rad</text>"#,
            MARGIN + 4.0,
            y0 + 12.0,
            j + 1,
            range.0,
            range.1
        );
        let _ = writeln!(svg, "{}", polyline(&ts, &yg, MARGIN, y0, range, GT_COLOR, false));
        let _ = writeln!(svg, "{}", polyline(&ts, &yp, MARGIN, y0, range, PRED_COLOR, true));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the three plot files of sample `index` and returns their paths.
pub fn emit_sample(
    dir: &Path,
    index: usize,
    group: &str,
    pred: &Trajectory,
    gt: &Trajectory,
    chain: &KinematicChain,
) -> Result<Vec<PathBuf>> {
    let joints = dir.join(format!("sample_{index}_joints.csv"));
    let ee = dir.join(format!("sample_{index}_ee.csv"));
    let svg = dir.join(format!("sample_{index}.svg"));
    write_joint_csv(&joints, pred, gt)?;
    write_ee_csv(&ee, pred, gt, chain)?;
    let title = format!("sample {index} ({group}): predicted dashed red, ground truth solid");
    std::fs::write(&svg, render_svg(&title, pred, gt)).with_context(|| format!("writing {}", svg.display()))?;
    Ok(vec![joints, ee, svg])
}

#[cfg(test)]
mod tests {
    use super::*;
    use mprim::basis::PhaseConfig;
    use nalgebra::DMatrix;

    fn traj(offset: f64) -> Trajectory {
        let cfg = PhaseConfig::new(10.0, 5).unwrap();
        Trajectory::new(DMatrix::from_fn(5, 2, |k, j| offset + k as f64 * (j + 1) as f64), cfg).unwrap()
    }

    #[test]
    fn svg_has_one_dashed_and_one_solid_line_per_joint() {
        let svg = render_svg("t", &traj(0.1), &traj(0.0));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert_eq!(svg.matches(PRED_COLOR).count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn polyline_spans_the_panel() {
        let line = polyline(&[0.0, 1.0], &[0.0, 1.0], 0.0, 0.0, (0.0, 1.0), "red", false);
        assert!(line.contains(r#"points="0.00,120.00 640.00,0.00""#));
    }
}
