//! CSV and JSON writers for benchmark reports.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::SatelliteConfig;
use crate::satellite::{gen_truth, measurements, FilterSummary, SatelliteReport};
use crate::scalar::ScalarReport;
use crate::quaternion::to_array;
use crate::CliError;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SCALAR_FILE: &str = "scalar.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "run_id",
    "k",
    "filter",
    "true_w",
    "true_x",
    "true_y",
    "true_z",
    "est_w",
    "est_x",
    "est_y",
    "est_z",
    "geodesic_error",
    "min_cov_eigenvalue",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "filter",
    "rmse_x1e6",
    "completed_runs",
    "failed_runs",
    "positiveness_losses",
    "first_failure_step_min",
    "first_failure_step_max",
];

pub const SCALAR_HEADER: [&str; 7] = ["k", "kf_x", "kf_p", "riadukf_x", "riadukf_p", "ukfrm_x", "ukfrm_p"];

pub const SIMULATION_HEADER: [&str; 10] = [
    "k", "t", "true_w", "true_x", "true_y", "true_z", "meas_w", "meas_x", "meas_y", "meas_z",
];

/// Shortest round-trip text, in exponent form for very small or large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.display().to_string(), e)
}

pub fn write_trajectory<W: Write>(report: &SatelliteReport, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for run in &report.runs {
        for f in &run.filters {
            for r in &f.records {
                let t = report.truth[r.k];
                let mut row = vec![run.run_id.to_string(), r.k.to_string(), f.variant.name().to_string()];
                row.extend(t.iter().map(|x| num(*x)));
                row.extend(r.estimate.iter().map(|x| num(*x)));
                row.push(num(r.error));
                row.push(num(r.min_eigenvalue));
                out.write_record(&row)?;
            }
        }
    }
    out.flush().map_err(|e| CliError::Io("trajectory".into(), e))?;
    Ok(())
}

pub fn write_summary<W: Write>(summary: &[FilterSummary], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in summary {
        let (lo, hi) = s
            .first_failure_step
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .unwrap_or_default();
        out.write_record([
            s.variant.name().to_string(),
            opt(s.rmse_x1e6),
            s.completed_runs.to_string(),
            s.failed_runs.to_string(),
            s.positiveness_losses.to_string(),
            lo,
            hi,
        ])?;
    }
    out.flush().map_err(|e| CliError::Io("summary".into(), e))?;
    Ok(())
}

pub fn write_scalar<W: Write>(report: &ScalarReport, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SCALAR_HEADER)?;
    for r in &report.rows {
        out.write_record([
            r.k.to_string(),
            num(r.kf.0),
            num(r.kf.1),
            opt(r.riadukf.map(|p| p.0)),
            opt(r.riadukf.map(|p| p.1)),
            opt(r.ukfrm.map(|p| p.0)),
            opt(r.ukfrm.map(|p| p.1)),
        ])?;
    }
    out.flush().map_err(|e| CliError::Io("scalar".into(), e))?;
    Ok(())
}

/// Ground truth and the measurements of one Monte-Carlo run.
pub fn write_simulation<W: Write>(cfg: &SatelliteConfig, run_id: usize, w: W) -> Result<(), CliError> {
    let truth = gen_truth(cfg);
    let ys = measurements(cfg, &truth, run_id)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SIMULATION_HEADER)?;
    for (k, q) in truth.iter().enumerate() {
        let mut row = vec![k.to_string(), num(k as f64 * cfg.dt)];
        row.extend(to_array(q).iter().map(|x| num(*x)));
        if k == 0 {
            row.extend(std::iter::repeat_n(String::new(), 4));
        } else {
            row.extend(ys[k - 1].coords().iter().map(|x| num(*x)));
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| CliError::Io("simulation".into(), e))?;
    Ok(())
}

fn conventions() -> serde_json::Value {
    json!({
        "quaternion_order": "[eta, eps1, eps2, eps3]",
        "process_map_rate_time": "omega evaluated at t_(k-1) = (k-1)*dt",
        "measurement_model": "y_k = exp_(q_k)(v_k), v_k ~ N(0, R) in the deterministic tangent basis at q_k",
        "measurement_seed": "seed + run_id * 0x9E3779B97F4A7C15 (wrapping), ChaCha8",
        "initial_estimate": "true q(0) with covariance p0",
        "attitude_error": "geodesic distance on S^3 after identifying q with -q",
        "rmse": "per run sqrt(mean_k error^2), averaged over completed runs, reported x1e6",
        "failure": "a run fails at the first step that returns an error; positiveness_losses counts covariance breakdowns",
    })
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    Ok((path, BufWriter::new(file)))
}

/// Writes the summary, the manifest and, when enabled, the trajectories.
pub fn emit_satellite(report: &SatelliteReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    if report.config.trajectories {
        let (path, w) = create(dir, TRAJECTORY_FILE)?;
        write_trajectory(report, w)?;
        files.push(path);
    }
    let (path, w) = create(dir, SUMMARY_FILE)?;
    write_summary(&report.summary, w)?;
    files.push(path);

    let summary: Vec<_> = report
        .summary
        .iter()
        .map(|s| {
            json!({
                "filter": s.variant.name(),
                "rmse_x1e6": s.rmse_x1e6,
                "completed_runs": s.completed_runs,
                "failed_runs": s.failed_runs,
                "positiveness_losses": s.positiveness_losses,
            })
        })
        .collect();
    let manifest = json!({
        "tool": "riukf",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": "satellite",
        "seed": report.config.seed,
        "steps": report.config.steps(),
        "config": report.config,
        "conventions": conventions(),
        "files": files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy()).collect::<Vec<_>>(),
        "summary": summary,
    });
    files.push(write_manifest(dir, &manifest)?);
    Ok(files)
}

pub fn emit_scalar(report: &ScalarReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (path, w) = create(dir, SCALAR_FILE)?;
    write_scalar(report, w)?;
    let manifest = json!({
        "tool": "riukf",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": "scalar",
        "steps": report.rows.len(),
        "system": "x0 ~ (1, 1), f(x) = x, h(x) = 1 - x, Q = R = 1, y_k = 1",
        "riadukf_failure": report.riadukf_failure,
        "ukfrm_failure": report.ukfrm_failure,
        "ukfrm_positiveness_loss": report.ukfrm_positiveness_loss,
        "max_kf_deviation": report.max_deviation,
        "files": [SCALAR_FILE],
    });
    let m = write_manifest(dir, &manifest)?;
    Ok(vec![path, m])
}

fn write_manifest(dir: &Path, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(dir, MANIFEST_FILE)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::satellite::SatelliteReport;
    use std::time::Duration;

    #[test]
    fn numbers_roundtrip() {
        for x in [0.0, -1.5, 7.612261675166602e-17, 1.4048322863586623e-8, 3e20, 0.96] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.5e-8), "1.5e-8");
        assert_eq!(num(0.25), "0.25");
    }

    #[test]
    fn empty_report_writes_headers_only() {
        let report = SatelliteReport {
            config: SatelliteConfig::default(),
            truth: vec![],
            runs: vec![],
            summary: vec![],
            wall_time: Duration::ZERO,
        };
        let mut buf = Vec::new();
        write_trajectory(&report, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), TRAJECTORY_HEADER.join(",") + "\n");
        let mut buf = Vec::new();
        write_summary(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SUMMARY_HEADER.join(",") + "\n");
    }

    #[test]
    fn simulation_rows() {
        let cfg = SatelliteConfig {
            duration: 1.0,
            ..SatelliteConfig::default()
        };
        let mut buf = Vec::new();
        write_simulation(&cfg, 0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.lines().nth(1).unwrap().ends_with(",,,,"));
    }
}
