//! Drives generation, integration, and analysis for scenarios and batches.

use std::fs;
use std::path::{Path, PathBuf};

use swarm_core::analysis::{
    cohesion_bound_general, cohesion_bound_gaussian, center_drift_summary, containment_check,
    BoundReport, CenterDrift, CohesionBound,
};
use swarm_core::coupling::CouplingMatrix;
use swarm_core::integrator::integrate;
use swarm_core::kernel::GeneralKernel;

use crate::config::{KernelInstance, Scenario};
use crate::error::{CliError, Result};
use crate::output;

/// Output root: `$SWARM_OUT_DIR`, or `runs` under the working directory.
pub fn out_root() -> PathBuf {
    std::env::var_os("SWARM_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: BoundReport,
    pub drift: CenterDrift,
}

/// Runs one scenario end to end and writes its artifact directory.
/// An `assert_contained` failure still writes artifacts; the error only
/// carries the verdict to the exit code.
pub fn run_scenario(config_path: &Path, out_root: &Path) -> Result<RunOutcome> {
    let scenario = Scenario::load(config_path)?;
    let outcome = execute(&scenario, out_root)?;
    if scenario.config.analysis.assert_contained && !outcome.report.contained {
        return Err(CliError::AssertionFailed(format!(
            "scenario {} not contained (entry_time {}, t_hold {}); artifacts in {}",
            scenario.name,
            outcome
                .report
                .entry_time
                .map(|t| t.to_string())
                .unwrap_or_else(|| "never".into()),
            outcome.report.t_hold,
            outcome.dir.display()
        )));
    }
    Ok(outcome)
}

fn compute_bound(kernel: &KernelInstance, coupling: &CouplingMatrix) -> Result<CohesionBound> {
    match kernel {
        KernelInstance::Gaussian(k) => cohesion_bound_gaussian(k, coupling),
        KernelInstance::General(k) => cohesion_bound_general(k, coupling),
    }
    .map_err(CliError::from)
}

/// Computes everything in memory first; the artifact directory is only
/// created once the run has succeeded, so failures leave nothing behind.
fn execute(scenario: &Scenario, out_root: &Path) -> Result<RunOutcome> {
    let bound = compute_bound(&scenario.kernel, &scenario.coupling)?;
    let interaction = scenario.kernel.interaction();
    let traj = integrate(
        &scenario.initial,
        &scenario.coupling,
        &interaction,
        &scenario.integration,
    )
    .map_err(CliError::from)?;

    let report = containment_check(&traj, &bound, scenario.config.analysis.t_hold);
    let drift = center_drift_summary(&traj);
    let validation = scenario.coupling.validate();
    let clamped = match &scenario.kernel {
        KernelInstance::General(k) => Some(k.clamp_count()),
        KernelInstance::Gaussian(_) => None,
    };

    let dir = out_root.join(&scenario.name);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("trajectory.csv"), output::trajectory_csv(&traj))?;
    fs::write(dir.join("center.csv"), output::center_csv(&traj))?;
    fs::write(
        dir.join("series.csv"),
        output::series_csv(&traj, bound.rho_sq()),
    )?;
    fs::write(
        dir.join("bound_report.txt"),
        output::bound_report_text(
            &report,
            &validation,
            &drift,
            clamped,
            traj.coincident_samples(),
        ),
    )?;
    fs::write(
        dir.join("report.csv"),
        output::report_csv(&scenario.name, &report, &drift),
    )?;
    fs::write(
        dir.join("manifest.toml"),
        output::manifest_toml(&scenario.name, &scenario.config)?,
    )?;

    Ok(RunOutcome { dir, report, drift })
}

/// One line of `summary.csv`. Failed scenarios keep their name and seed and
/// carry the error in `status`; value columns stay empty.
pub struct SummaryRow {
    pub scenario: String,
    pub seed: Option<u64>,
    pub lambda2: Option<f64>,
    pub total_weight: Option<f64>,
    pub rho: Option<f64>,
    pub entry_time: Option<f64>,
    pub contained: Option<bool>,
    pub max_dispersion_ratio: Option<f64>,
    pub status: String,
}

impl SummaryRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

fn sanitize(message: &str) -> String {
    message.replace([',', '\n'], ";")
}

fn empty_row(scenario: String, seed: Option<u64>, status: String) -> SummaryRow {
    SummaryRow {
        scenario,
        seed,
        lambda2: None,
        total_weight: None,
        rho: None,
        entry_time: None,
        contained: None,
        max_dispersion_ratio: None,
        status,
    }
}

fn batch_row(path: &Path, out_root: &Path) -> SummaryRow {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario")
        .to_string();
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => return empty_row(name, None, sanitize(&e.to_string())),
    };
    let seed = scenario.config.coupling.seed.or(scenario.config.initial.seed);
    match execute(&scenario, out_root) {
        Err(e) => empty_row(name, seed, sanitize(&e.to_string())),
        Ok(outcome) => {
            let status = if scenario.config.analysis.assert_contained
                && !outcome.report.contained
            {
                "assertion failed: not contained".to_string()
            } else {
                "ok".to_string()
            };
            SummaryRow {
                scenario: name,
                seed,
                lambda2: Some(outcome.report.bound.lambda2),
                total_weight: Some(outcome.report.bound.total_weight),
                rho: Some(outcome.report.bound.rho),
                entry_time: outcome.report.entry_time,
                contained: Some(outcome.report.contained),
                max_dispersion_ratio: outcome.report.dispersion_ratio(),
                status,
            }
        }
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    fn opt<T: ToString>(v: &Option<T>) -> String {
        v.as_ref().map(T::to_string).unwrap_or_default()
    }
    let mut out = String::from(
        "scenario,seed,lambda2,total_weight,rho,entry_time,contained,max_dispersion_ratio,status\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.scenario,
            opt(&row.seed),
            opt(&row.lambda2),
            opt(&row.total_weight),
            opt(&row.rho),
            opt(&row.entry_time),
            opt(&row.contained),
            opt(&row.max_dispersion_ratio),
            row.status,
        ));
    }
    out
}

/// Runs every `*.toml` in `dir`, up to `parallel` at a time (thread count
/// chosen automatically when `None`). Individual failures become rows, not
/// batch errors. Rows are sorted by scenario name, and `summary.csv` is
/// written to the output root.
pub fn run_batch(dir: &Path, parallel: Option<usize>, out_root: &Path) -> Result<Vec<SummaryRow>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    paths.sort();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let mut rows: Vec<SummaryRow> = pool.install(|| {
        use rayon::prelude::*;
        paths.par_iter().map(|p| batch_row(p, out_root)).collect()
    });
    rows.sort_by(|a, b| a.scenario.cmp(&b.scenario));

    fs::create_dir_all(out_root)?;
    fs::write(out_root.join("summary.csv"), summary_csv(&rows))?;
    Ok(rows)
}

/// Spectral quantities without simulating. The Gaussian kernel reports both
/// its own bound and the general-kernel bound it satisfies (they coincide
/// when the repulsion bound is taken at the Gaussian's peak).
pub fn bounds_text(config_path: &Path) -> Result<String> {
    let scenario = Scenario::load(config_path)?;
    let bound = compute_bound(&scenario.kernel, &scenario.coupling)?;
    let mut out = String::new();
    out.push_str(&format!("lambda2: {}\n", bound.lambda2));
    out.push_str(&format!("total_weight: {}\n", bound.total_weight));
    match &scenario.kernel {
        KernelInstance::Gaussian(k) => {
            out.push_str(&format!("rho: {}\n", bound.rho));
            out.push_str(&format!("threshold_v: {}\n", bound.threshold_v.unwrap()));
            let star = cohesion_bound_general(&GeneralKernel::from_gaussian(k), &scenario.coupling)
                .map_err(CliError::from)?;
            out.push_str(&format!("rho_star: {}\n", star.rho));
        }
        KernelInstance::General(_) => {
            out.push_str(&format!("rho_star: {}\n", bound.rho));
        }
    }
    Ok(out)
}

/// Structural report for a coupling matrix file. `ok` decides the exit
/// code; spectral lines appear only when the structure supports them.
pub fn validate_coupling_text(matrix_path: &Path) -> Result<(String, bool)> {
    let text = fs::read_to_string(matrix_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", matrix_path.display())))?;
    let matrix = CouplingMatrix::parse_text(&text).map_err(CliError::from)?;
    let report = matrix.validate();
    let mut out = report.to_text();
    out.push_str(&format!("n_agents: {}\n", matrix.n_agents()));
    out.push_str(&format!("total_weight: {}\n", matrix.total_weight()));
    if report.all_passed() {
        let pair = matrix.laplacian().map_err(CliError::from)?;
        out.push_str(&format!(
            "lambda2: {}\n",
            pair.lambda2().map_err(CliError::from)?
        ));
    }
    Ok((out, report.all_passed()))
}
