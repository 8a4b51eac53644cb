//! Figure-ready CSV series and a plain-text manifest describing them.

use super::experiment::{ExperimentResult, RowStatus, SweepMetric, SweepTable};
use crate::channel::HistogramBin;
use crate::{DfrcError, Result};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.txt";

/// Floor of relative beampattern values, in dB.
const DB_FLOOR: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Beampattern,
    SweepCurve,
    Histogram,
    KlCurve,
}

impl PlotKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::Beampattern => "beampattern",
            PlotKind::SweepCurve => "sweep_curve",
            PlotKind::Histogram => "histogram",
            PlotKind::KlCurve => "kl_curve",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PlotSource<'a> {
    Experiment(&'a ExperimentResult),
    Sweep(&'a SweepTable),
}

/// One emitted series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotFile {
    pub path: PathBuf,
    pub kind: PlotKind,
    pub x_axis: String,
    pub y_axis: String,
    pub label: String,
}

fn missing(what: &str) -> DfrcError {
    DfrcError::MissingSeries(what.into())
}

/// Beampattern in dB relative to its peak.
pub fn relative_db(pattern: &[f64]) -> Vec<f64> {
    let peak = pattern.iter().copied().fold(0.0, f64::max);
    pattern
        .iter()
        .map(|&p| if peak > 0.0 && p > 0.0 { (10.0 * (p / peak).log10()).max(DB_FLOOR) } else { DB_FLOOR })
        .collect()
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    f.flush()?;
    Ok(())
}

fn histogram_rows(h: &[HistogramBin]) -> Vec<String> {
    h.iter().map(|b| format!("{},{},{}", b.center, b.empirical_density, b.fitted_density)).collect()
}

/// Writes the CSV files of one plot kind into `dir` and records them in the
/// manifest. Beampatterns come from the first successful realization.
pub fn emit_plot_data(source: PlotSource<'_>, kind: PlotKind, dir: &Path) -> Result<Vec<PlotFile>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut push = |name: String, x: &str, y: &str, label: String| {
        files.push(PlotFile { path: dir.join(name), kind, x_axis: x.into(), y_axis: y.into(), label });
    };
    match (kind, source) {
        (PlotKind::Beampattern, PlotSource::Experiment(r)) => {
            let row = r
                .rows
                .iter()
                .find(|row| row.status == RowStatus::Ok && row.beampattern.is_some())
                .ok_or_else(|| missing("no successful realization carries a beampattern"))?;
            let pattern = row.beampattern.as_ref().expect("checked above");
            let grid = r.config.loss_config()?.spec.grid;
            let theta: Vec<f64> = grid.points().iter().map(|t| t.to_degrees()).collect();
            let db = relative_db(pattern);
            let label = format!("{} realization {}", r.config.algorithm.as_str(), row.index);
            write_csv(
                &dir.join("beampattern.csv"),
                "theta_deg,power_db_relative",
                theta.iter().zip(&db).map(|(t, p)| format!("{t},{p}")),
            )?;
            push("beampattern.csv".into(), "theta_deg", "power_db_relative", label.clone());
            write_csv(
                &dir.join("beampattern_linear.csv"),
                "theta_deg,power",
                theta.iter().zip(pattern).map(|(t, p)| format!("{t},{p}")),
            )?;
            push("beampattern_linear.csv".into(), "theta_deg", "power", label);
        }
        (PlotKind::SweepCurve, PlotSource::Sweep(t)) => {
            let mut any = false;
            for metric in SweepMetric::ALL {
                let curve = t.curve(metric);
                if curve.is_empty() {
                    continue;
                }
                any = true;
                let name = format!("sweep_{}_{}.csv", t.axis.as_str(), metric.as_str());
                write_csv(&dir.join(&name), "x,mean,stderr", curve.iter().map(|(x, m, s)| format!("{x},{m},{s}")))?;
                push(name, t.axis.as_str(), metric.as_str(), format!("{} versus {}", metric.as_str(), t.axis.as_str()));
            }
            if !any {
                return Err(missing("no sweep point produced an aggregate"));
            }
        }
        (PlotKind::Histogram, PlotSource::Experiment(r)) => {
            let clt = r.clt.as_ref().ok_or_else(|| missing("result has no CLT series"))?;
            if clt.histograms.is_empty() {
                return Err(missing("CLT series has no histogram"));
            }
            for (law, h) in &clt.histograms {
                let name = format!("histogram_{}.csv", law.as_str());
                write_csv(&dir.join(&name), "bin_center,empirical_density,fitted_density", histogram_rows(h))?;
                push(name, "bin_center", "density", format!("-Tr[BE], {} entries, N = {}", law.as_str(), r.config.array.num_antennas));
            }
        }
        (PlotKind::KlCurve, PlotSource::Experiment(r)) => {
            let clt = r.clt.as_ref().ok_or_else(|| missing("result has no CLT series"))?;
            for law in &r.config.clt.entry_laws {
                let pts: Vec<_> = clt.points.iter().filter(|p| p.entry_law == *law).collect();
                let name = format!("kl_{}.csv", law.as_str());
                write_csv(&dir.join(&name), "N,kl", pts.iter().map(|p| format!("{},{}", p.n, p.kl)))?;
                push(name, "N", "kl", format!("KL to fitted Gaussian, {} entries", law.as_str()));
            }
        }
        (kind, _) => return Err(missing(&format!("{} needs a different result type", kind.as_str()))),
    }
    update_manifest(dir, &files)?;
    Ok(files)
}

/// Replaces the manifest entries of these files, keeping the others, sorted
/// by file name so that reruns write identical manifests.
fn update_manifest(dir: &Path, files: &[PlotFile]) -> Result<()> {
    let path = dir.join(MANIFEST);
    let names: Vec<String> = files.iter().map(|f| file_name(&f.path)).collect();
    let mut lines: Vec<String> = match fs::read_to_string(&path) {
        Ok(text) => text
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter(|l| !names.iter().any(|n| l.split('\t').next() == Some(n.as_str())))
            .map(str::to_string)
            .collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    for f in files {
        lines.push(format!("{}\t{}\t{}\t{}\t{}", file_name(&f.path), f.kind.as_str(), f.x_axis, f.y_axis, f.label));
    }
    lines.sort();
    let mut out = String::from("# file\tkind\tx_axis\ty_axis\tlabel\n");
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_db_peaks_at_zero() {
        let db = relative_db(&[1.0, 10.0, 0.1, 0.0]);
        assert_eq!(db[1], 0.0);
        assert!((db[0] + 10.0).abs() < 1e-12);
        assert!((db[2] + 20.0).abs() < 1e-12);
        assert_eq!(db[3], DB_FLOOR);
    }
}
