//! Artifact serialization: CSV writers, the trajectory reader, report text,
//! run manifest.
//!
//! Column contracts (headers are byte-exact):
//!
//! ```text
//! trajectory.csv   t,agent,x0,..,x{n-1}     one row per sample per agent
//! center.csv       t,x0,..,x{n-1}           one row per sample
//! series.csv       t,V,dispersion,rho_sq    one row per sample
//! report.csv       header + a single row of the containment verdict
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! reloaded trajectory carries bit-identical values and re-analysis gives
//! the identical report.

use serde::Serialize;
use swarm_core::analysis::{BoundReport, CenterDrift};
use swarm_core::coupling::ValidationReport;
use swarm_core::integrator::Trajectory;
use ndarray::Array2;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.first().positions.ncols();
    let mut out = String::from("t,agent");
    for d in 0..dim {
        out.push_str(&format!(",x{d}"));
    }
    out.push('\n');
    for sample in traj.samples() {
        for (agent, row) in sample.positions.outer_iter().enumerate() {
            out.push_str(&format!("{},{agent}", sample.time));
            for v in row.iter() {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}

pub fn center_csv(traj: &Trajectory) -> String {
    let dim = traj.first().center.len();
    let mut out = String::from("t");
    for d in 0..dim {
        out.push_str(&format!(",x{d}"));
    }
    out.push('\n');
    for sample in traj.samples() {
        out.push_str(&sample.time.to_string());
        for v in sample.center.iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn series_csv(traj: &Trajectory, rho_sq: f64) -> String {
    let mut out = String::from("t,V,dispersion,rho_sq\n");
    for sample in traj.samples() {
        out.push_str(&format!(
            "{},{},{},{rho_sq}\n",
            sample.time, sample.lyapunov, sample.dispersion
        ));
    }
    out
}

fn opt(field: Option<f64>) -> String {
    field.map(|v| v.to_string()).unwrap_or_default()
}

pub fn report_csv(scenario: &str, report: &BoundReport, drift: &CenterDrift) -> String {
    let mut out = String::from(
        "scenario,lambda2,total_weight,rho,rho_sq,threshold_v,t_hold,t_end,\
         entry_time,contained,max_dispersion_after_entry,dispersion_ratio,\
         net_center_displacement,center_path_length\n",
    );
    out.push_str(&format!(
        "{scenario},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        report.bound.lambda2,
        report.bound.total_weight,
        report.bound.rho,
        report.bound.rho_sq(),
        opt(report.bound.threshold_v),
        report.t_hold,
        report.t_end,
        opt(report.entry_time),
        report.contained,
        opt(report.max_dispersion_after_entry),
        opt(report.dispersion_ratio()),
        drift.net_displacement,
        drift.path_length,
    ));
    out
}

pub fn bound_report_text(
    report: &BoundReport,
    validation: &ValidationReport,
    drift: &CenterDrift,
    clamped_evaluations: Option<u64>,
    coincident_samples: usize,
) -> String {
    let mut out = report.to_text();
    out.push_str(&validation.to_text());
    out.push_str(&format!("net_center_displacement: {}\n", drift.net_displacement));
    out.push_str(&format!("center_path_length: {}\n", drift.path_length));
    let max_speed = drift.speeds.iter().fold(0.0f64, |acc, &s| acc.max(s));
    out.push_str(&format!("max_center_speed: {max_speed}\n"));
    out.push_str(&format!("coincident_samples: {coincident_samples}\n"));
    if let Some(n) = clamped_evaluations {
        out.push_str(&format!("clamped_evaluations: {n}\n"));
    }
    out
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    scenario: &'a str,
    config: &'a ScenarioConfig,
}

/// Resolved config echo plus the software version. Deliberately free of
/// timestamps and host details so reruns are byte-identical.
pub fn manifest_toml(scenario: &str, config: &ScenarioConfig) -> Result<String> {
    toml::to_string_pretty(&Manifest {
        version: env!("CARGO_PKG_VERSION"),
        scenario,
        config,
    })
    .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))
}

/// Parses a `trajectory.csv` back into a [`Trajectory`]. Agent blocks must
/// start at index 0 and count up, the order the writer emits.
pub fn read_trajectory_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Config("trajectory csv: empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "t" || cols[1] != "agent" {
        return Err(CliError::Config(format!(
            "trajectory csv: unexpected header {header:?}"
        )));
    }
    for (d, col) in cols[2..].iter().enumerate() {
        if *col != format!("x{d}") {
            return Err(CliError::Config(format!(
                "trajectory csv: unexpected header {header:?}"
            )));
        }
    }
    let dim = cols.len() - 2;

    let mut records: Vec<(f64, Vec<f64>)> = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(CliError::Config(format!(
                "trajectory csv line {lineno}: expected {} fields, got {}",
                dim + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| {
                CliError::Config(format!("trajectory csv line {lineno}: {e} in {s:?}"))
            })
        };
        let t = parse(fields[0])?;
        let agent: usize = fields[1].parse().map_err(|e| {
            CliError::Config(format!("trajectory csv line {lineno}: {e} in agent index"))
        })?;
        if agent == 0 {
            records.push((t, Vec::new()));
        }
        let current = records.last_mut().ok_or_else(|| {
            CliError::Config(format!(
                "trajectory csv line {lineno}: agent indices must start at 0"
            ))
        })?;
        if agent * dim != current.1.len() || t != current.0 {
            return Err(CliError::Config(format!(
                "trajectory csv line {lineno}: rows out of order"
            )));
        }
        for field in &fields[2..] {
            current.1.push(parse(field)?);
        }
    }

    let arrays: Vec<(f64, Array2<f64>)> = records
        .into_iter()
        .map(|(t, flat)| {
            let n = flat.len() / dim;
            Array2::from_shape_vec((n, dim), flat)
                .map(|positions| (t, positions))
                .map_err(|e| CliError::Config(format!("trajectory csv: {e}")))
        })
        .collect::<Result<_>>()?;
    Trajectory::from_records(arrays).map_err(CliError::from)
}
