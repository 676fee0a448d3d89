//! Files written by a run: trajectory CSV, JSON summaries, manifest, plots.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;

use crate::montecarlo::RunSummary;
use crate::sim::TrajectoryRecord;

pub const CSV_HEADER: &str =
    "t,px,py,pz,rx,ry,rz,q1,q2,q3,wx,wy,wz,f1,f2,f3,f4,f5,f6,maxReEig,detX,kappa";
pub const CSV_COLUMNS: usize = 22;

pub const RUNS_HEADER: &str = "run,seed,converged,terminal_p,terminal_qv,max_thrust,median_kappa,median_kappa_random,failure";

/// 17 significant digits, enough to round-trip any `f64`.
fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(record.samples.len() * CSV_COLUMNS * 24);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &record.samples {
        num(&mut out, s.t);
        for v in s.x.iter().chain(s.f_a.iter()).chain([s.max_re_eig, s.det_x, s.kappa].iter()) {
            out.push(',');
            num(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

pub fn runs_csv(runs: &[RunSummary]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in runs {
        let _ = write!(out, "{},{},{},", r.index, r.seed, r.converged);
        for v in [
            r.metrics.terminal_position_norm,
            r.metrics.terminal_attitude_norm,
            r.metrics.max_thrust_n,
            r.median_kappa,
        ] {
            num(&mut out, v);
            out.push(',');
        }
        if let Some(k) = r.median_kappa_random {
            num(&mut out, k);
        }
        out.push(',');
        if let Some(f) = &r.failure {
            let _ = write!(out, "\"{}\"", f.replace('"', "'"));
        }
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    s.push('\n');
    write_file(path, &s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the resolved configuration.
    pub config_digest: String,
    pub tool_version: String,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
    pub failed: bool,
}

impl RunManifest {
    pub fn new(command: &str, config_digest: String, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
            failed: false,
        }
    }
}

const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

/// Line plot of the chosen CSV columns against time.
pub fn plot_columns(
    record: &TrajectoryRecord,
    columns: &[usize],
    path: &Path,
) -> Result<(), Box<dyn std::error::Error>> {
    let value = |s: &crate::sim::TrajectorySample, c: usize| if c < 12 { s.x[c] } else { s.f_a[c - 12] };
    let t_end = record.samples.last().map_or(1.0, |s| s.t).max(1e-9);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &record.samples {
        for &c in columns {
            lo = lo.min(value(s, c));
            hi = hi.max(value(s, c));
        }
    }
    if !(lo < hi) {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);

    let root = SVGBackend::new(path, (800, 480)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(30)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..t_end, (lo - pad)..(hi + pad))?;
    chart.configure_mesh().draw()?;
    for (k, &c) in columns.iter().enumerate() {
        chart.draw_series(LineSeries::new(
            record.samples.iter().map(|s| (s.t, value(s, c))),
            COLORS[k % COLORS.len()].stroke_width(2),
        ))?;
    }
    root.present()?;
    Ok(())
}

/// Position, attitude and thrust plots; returns the files written.
pub fn write_plots(record: &TrajectoryRecord, dir: &Path) -> Result<Vec<PathBuf>, Box<dyn std::error::Error>> {
    let mut written = Vec::new();
    for (name, cols) in [
        ("position.svg", vec![0, 1, 2]),
        ("attitude.svg", vec![6, 7, 8]),
        ("forces.svg", (12..18).collect()),
    ] {
        let path = dir.join(name);
        plot_columns(record, &cols, &path)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::StabilityWitness;
    use crate::dynamics::Vector12;
    use crate::sim::TrajectorySample;

    fn record() -> TrajectoryRecord {
        let samples = (0..3)
            .map(|i| TrajectorySample {
                t: 0.1 * i as f64,
                x: Vector12::from_fn(|r, _| r as f64 + 0.1),
                f_a: crate::allocation::Vector6::repeat(-1.0 / 3.0),
                max_re_eig: -0.1,
                det_x: 0.25,
                kappa: 9.5,
            })
            .collect();
        TrajectoryRecord {
            samples,
            controls: Vec::new(),
            witness: StabilityWitness::default(),
            failure: None,
        }
    }

    #[test]
    fn csv_schema_and_round_trip() {
        let rec = record();
        let csv = trajectory_csv(&rec);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(CSV_HEADER.split(',').count(), CSV_COLUMNS);
        for (line, s) in lines.zip(&rec.samples) {
            let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
            assert_eq!(fields.len(), CSV_COLUMNS);
            assert_eq!(fields[0], s.t);
            assert_eq!(fields[13], s.f_a[0]);
            assert_eq!(fields[21], s.kappa);
        }
    }

    #[test]
    fn plots_are_svg() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_plots(&record(), dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        for f in files {
            let text = std::fs::read_to_string(f).unwrap();
            assert!(text.contains("<svg"));
        }
    }
}
