//! End-to-end tests of the `swarm` binary: exit codes, artifact layout,
//! byte-level reproducibility, and CSV round-trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use swarm_cli::config::{KernelInstance, Scenario};
use swarm_cli::output::{read_trajectory_csv, report_csv};
use swarm_core::analysis::{center_drift_summary, cohesion_bound_gaussian, containment_check};

fn swarm(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarm"))
        .args(args)
        .env("SWARM_OUT_DIR", out_dir)
        .output()
        .expect("binary should spawn")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no exit code")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write(path: &Path, body: &str) -> PathBuf {
    fs::write(path, body).unwrap();
    path.to_path_buf()
}

fn gaussian_scenario(n_agents: usize, t_end: f64, coupling_seed: u64, initial_seed: u64) -> String {
    format!(
        r#"
n_agents = {n_agents}
dimension = 2

[kernel]
type = "gaussian"
a = 1.0
b = 20.0
c = 0.2

[coupling]
density = 0.5
seed = {coupling_seed}

[initial]
box_min = -5.0
box_max = 5.0
seed = {initial_seed}

[integration]
t_end = {t_end}

[analysis]
t_hold = 3.0
"#
    )
}

const ARTIFACTS: [&str; 6] = [
    "trajectory.csv",
    "center.csv",
    "series.csv",
    "bound_report.txt",
    "report.csv",
    "manifest.toml",
];

#[test]
fn run_writes_artifacts_and_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        &dir.path().join("demo.toml"),
        &gaussian_scenario(4, 5.0, 7, 11),
    );

    let out_a = dir.path().join("a");
    let first = swarm(&["run", config.to_str().unwrap()], &out_a);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    assert!(stdout(&first).contains("contained: true"));

    let run_dir = out_a.join("demo");
    for name in ARTIFACTS {
        let path = run_dir.join(name);
        assert!(path.is_file(), "missing {name}");
        assert!(fs::metadata(&path).unwrap().len() > 0, "empty {name}");
    }

    let out_b = dir.path().join("b");
    let second = swarm(&["run", config.to_str().unwrap()], &out_b);
    assert_eq!(code(&second), 0);
    for name in ARTIFACTS {
        let a = fs::read(run_dir.join(name)).unwrap();
        let b = fs::read(out_b.join("demo").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn malformed_config_exits_2_with_no_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(&dir.path().join("broken.toml"), "n_agents = \"ten\"\n");
    let out = dir.path().join("out");
    let result = swarm(&["run", config.to_str().unwrap()], &out);
    assert_eq!(code(&result), 2, "stderr: {}", stderr(&result));
    assert!(stderr(&result).contains("config error"));
    assert!(!out.join("broken").exists(), "partial artifacts written");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let body = gaussian_scenario(4, 5.0, 7, 11) + "\n[integration2]\nx = 1\n";
    let config = write(&dir.path().join("typo.toml"), &body);
    let result = swarm(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(code(&result), 2);
}

#[test]
fn unbalanced_matrix_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("w.txt"), "0 1\n0 0\n");
    let body = r#"
n_agents = 2
dimension = 2

[kernel]
type = "gaussian"
a = 1.0
b = 20.0
c = 0.2

[coupling]
matrix_file = "w.txt"

[initial]
box_min = -1.0
box_max = 1.0
seed = 3
"#;
    let config = write(&dir.path().join("lopsided.toml"), body);
    let out = dir.path().join("out");
    let result = swarm(&["run", config.to_str().unwrap()], &out);
    assert_eq!(code(&result), 3, "stderr: {}", stderr(&result));
    assert!(!out.join("lopsided").exists());
}

fn divergent_scenario() -> &'static str {
    // Euler with dt far beyond the stability limit of the long-range
    // linear attraction: each step multiplies the separation by about
    // (1 - 2 a w dt) = -3, so the guard trips after a few dozen steps.
    r#"
n_agents = 2
dimension = 2

[kernel]
type = "gaussian"
a = 1.0
b = 20.0
c = 0.2

[coupling]
matrix_file = "w2.txt"

[initial]
positions_file = "x0.txt"

[integration]
method = "euler"
dt = 2.0
t_end = 200.0

[analysis]
t_hold = 1.0
"#
}

fn write_divergence_inputs(dir: &Path) {
    write(&dir.join("w2.txt"), "0 1\n1 0\n");
    write(&dir.join("x0.txt"), "0 0\n40 0\n");
}

#[test]
fn divergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    write_divergence_inputs(dir.path());
    let config = write(&dir.path().join("runaway.toml"), divergent_scenario());
    let out = dir.path().join("out");
    let result = swarm(&["run", config.to_str().unwrap()], &out);
    assert_eq!(code(&result), 4, "stderr: {}", stderr(&result));
    assert!(stderr(&result).contains("divergence"));
    assert!(!out.join("runaway").exists());
}

#[test]
fn failed_containment_assertion_exits_1_but_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    // t_hold longer than the horizon: containment cannot be certified.
    let body = gaussian_scenario(4, 5.0, 7, 11)
        .replace("t_hold = 3.0", "t_hold = 50.0\nassert_contained = true");
    let config = write(&dir.path().join("strict.toml"), &body);
    let out = dir.path().join("out");
    let result = swarm(&["run", config.to_str().unwrap()], &out);
    assert_eq!(code(&result), 1, "stderr: {}", stderr(&result));
    assert!(stderr(&result).contains("not contained"));
    for name in ARTIFACTS {
        assert!(out.join("strict").join(name).is_file(), "missing {name}");
    }
}

#[test]
fn validate_coupling_reports_and_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(&dir.path().join("good.txt"), "0 1 1\n1 0 1\n1 1 0\n");
    let result = swarm(&["validate-coupling", good.to_str().unwrap()], dir.path());
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("balanced: true"), "{text}");
    assert!(text.contains("lambda2: "), "{text}");

    let bad = write(&dir.path().join("bad.txt"), "0 1\n0 0\n");
    let result = swarm(&["validate-coupling", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&result), 3);
    assert!(stdout(&result).contains("balanced: false"));

    let garbled = write(&dir.path().join("garbled.txt"), "0 x\n1 0\n");
    let result = swarm(&["validate-coupling", garbled.to_str().unwrap()], dir.path());
    assert_eq!(code(&result), 2);
}

#[test]
fn bounds_prints_spectral_quantities_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        &dir.path().join("demo.toml"),
        &gaussian_scenario(6, 30.0, 5, 6),
    );
    let out = dir.path().join("out");
    let result = swarm(&["bounds", config.to_str().unwrap()], &out);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    assert!(!out.exists(), "bounds must not write artifacts");

    let text = stdout(&result);
    let grab = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap_or_else(|| panic!("missing {key} in:\n{text}"))
            .trim()
            .parse()
            .unwrap()
    };
    let rho = grab("rho: ");
    let rho_star = grab("rho_star: ");
    let lambda2 = grab("lambda2: ");
    let total_weight = grab("total_weight: ");
    assert!(lambda2 > 0.0 && total_weight > 0.0);
    // The Gaussian kernel satisfies the general-kernel hypotheses with the
    // repulsion bound taken at its peak, and there the two formulas agree.
    assert!(
        ((rho - rho_star) / rho).abs() <= 1e-12,
        "rho {rho} vs rho_star {rho_star}"
    );
}

#[test]
fn batch_isolates_failures_and_summarizes_all_rows() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = dir.path().join("scenarios");
    fs::create_dir(&scenarios).unwrap();
    write_divergence_inputs(&scenarios);
    write(&scenarios.join("a-ok.toml"), &gaussian_scenario(4, 5.0, 1, 2));
    write(&scenarios.join("b-runaway.toml"), divergent_scenario());
    write(&scenarios.join("c-ok.toml"), &gaussian_scenario(5, 5.0, 3, 4));
    write(&scenarios.join("notes.txt"), "ignored");

    let out = dir.path().join("out");
    let result = swarm(
        &["batch", scenarios.to_str().unwrap(), "--parallel", "2"],
        &out,
    );
    assert_eq!(code(&result), 1, "stderr: {}", stderr(&result));

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(
        lines[0],
        "scenario,seed,lambda2,total_weight,rho,entry_time,contained,max_dispersion_ratio,status"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("a-ok,1,"), "{}", lines[1]);
    assert!(lines[1].ends_with(",ok"), "{}", lines[1]);
    assert!(lines[1].contains(",true,"), "{}", lines[1]);
    assert!(lines[2].starts_with("b-runaway,"), "{}", lines[2]);
    assert!(lines[2].contains("divergence"), "{}", lines[2]);
    for line in &lines {
        assert_eq!(line.split(',').count(), 9, "ragged row: {line}");
    }
    assert!(lines[3].starts_with("c-ok,3,"), "{}", lines[3]);
    assert!(lines[3].ends_with(",ok"), "{}", lines[3]);

    assert!(out.join("a-ok").join("trajectory.csv").is_file());
    assert!(out.join("c-ok").join("trajectory.csv").is_file());
    assert!(!out.join("b-runaway").exists());
}

#[test]
fn batch_empty_directory_exits_0_with_header_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = dir.path().join("scenarios");
    fs::create_dir(&scenarios).unwrap();
    let out = dir.path().join("out");
    let result = swarm(&["batch", scenarios.to_str().unwrap()], &out);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
}

#[test]
fn reloaded_trajectory_reanalyzes_to_the_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        &dir.path().join("demo.toml"),
        &gaussian_scenario(5, 8.0, 17, 18),
    );
    let out = dir.path().join("out");
    let result = swarm(&["run", config.to_str().unwrap()], &out);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));

    let run_dir = out.join("demo");
    let csv = fs::read_to_string(run_dir.join("trajectory.csv")).unwrap();
    let reloaded = read_trajectory_csv(&csv).unwrap();

    let scenario = Scenario::load(&config).unwrap();
    let KernelInstance::Gaussian(kernel) = &scenario.kernel else {
        panic!("demo scenario is gaussian");
    };
    let bound = cohesion_bound_gaussian(kernel, &scenario.coupling).unwrap();
    let report = containment_check(&reloaded, &bound, scenario.config.analysis.t_hold);
    let drift = center_drift_summary(&reloaded);

    let written = fs::read_to_string(run_dir.join("report.csv")).unwrap();
    assert_eq!(report_csv("demo", &report, &drift), written);
}
