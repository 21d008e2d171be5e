mod common;

use std::path::Path;
use std::process::Command;

use common::*;
use plume_swarm::output::read_grid_bin;

const SMALL: &str = "\
# reduced desk-scale setup
grid_size = 64
flow_modes = 32
spin_up_time = 1.5
spin_up_dt = 0.02
max_time = 0.9
n_agents = 12
n_trials = 2
";

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("small.cfg");
    std::fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        run_tool(&["run", "--config", &cfg, "--seed", "7", "--out", s(out)]);
    }
    assert_eq!(csv_files(&a), ["agents.csv", "arrivals.csv", "series.csv"]);
    assert!(same_csvs(&a, &b));
    let agents = std::fs::read_to_string(a.join("agents.csv")).unwrap();
    assert!(agents.starts_with("t,id,x,y,px,py,C_i\n"));
}

#[test]
fn manifest_reproduces_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let first = tmp.path().join("first");
    let again = tmp.path().join("again");
    run_tool(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "3",
        "--agents",
        "9",
        "--out",
        s(&first),
    ]);
    let manifest = first.join("manifest.txt");
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("n_agents = 9"));
    assert!(text.contains("base_seed = 3"));
    run_tool(&["run", "--config", s(&manifest), "--out", s(&again)]);
    assert!(same_csvs(&first, &again));
}

#[test]
fn source_amplitude_does_not_change_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    let many = tmp.path().join("many");
    let cfg1 = tmp.path().join("one.cfg");
    let cfg2 = tmp.path().join("many.cfg");
    std::fs::write(&cfg1, format!("{SMALL}source_amplitude = 1\n")).unwrap();
    std::fs::write(&cfg2, format!("{SMALL}source_amplitude = 1000\n")).unwrap();
    run_tool(&["run", "--config", s(&cfg1), "--out", s(&one)]);
    run_tool(&["run", "--config", s(&cfg2), "--out", s(&many)]);
    assert!(same_csvs(&one, &many));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = tmp.path().join("sweep");
    run_tool(&[
        "sweep",
        "--config",
        &cfg,
        "--agents",
        "4,8",
        "--alpha",
        "12.5e-3,0.5e-3",
        "--trials",
        "1",
        "--out",
        s(&out),
    ]);
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("n_agents,repulsion_radius,alpha,effective_area,p_success,se_p,"));
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[1].starts_with("4,0.002,0.0125,"));
    assert!(lines[4].starts_with("8,0.002,0.0005,"));
}

#[test]
fn sweep_is_byte_reproducible_from_its_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_tool(&[
        "sweep",
        "--config",
        &cfg,
        "--agents",
        "4,8",
        "--repulsion",
        "1e-3,3e-3",
        "--trials",
        "2",
        "--verbose",
        "--out",
        s(&a),
    ]);
    let manifest = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("sweep_agents = 4,8"));
    assert!(manifest.contains("sweep_repulsion = 0.001,0.003"));
    run_tool(&[
        "sweep",
        "--config",
        s(&a.join("manifest.txt")),
        "--verbose",
        "--out",
        s(&b),
    ]);
    assert_eq!(csv_files(&a), ["sweep.csv", "trials.csv"]);
    assert!(same_csvs(&a, &b));
}

#[test]
fn snapshot_writes_headed_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = tmp.path().join("snap");
    run_tool(&["snapshot", "--config", &cfg, "--out", s(&out)]);
    let (magic, w, h, planes) =
        read_grid_bin(&std::fs::read(out.join("flow.bin")).unwrap()).unwrap();
    assert_eq!((&magic, w, h, planes.len()), (b"KFLO", 32, 32, 2));
    let (magic, w, h, planes) =
        read_grid_bin(&std::fs::read(out.join("scalar.bin")).unwrap()).unwrap();
    assert_eq!((&magic, w, h, planes.len()), (b"CFLD", 64, 64, 1));
    assert!(planes[0].iter().all(|&c| c >= 0.0));
    let csv = std::fs::read_to_string(out.join("flow.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 32 * 32);
}

#[test]
fn width_reports_sigma_and_crossing_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = tmp.path().join("width");
    let stdout = run_tool(&["width", "--config", &cfg, "--out", s(&out)]);
    assert!(stdout.contains("sigma = "));
    assert!(stdout.contains("t_star = "));
    assert!(out.join("transects.csv").exists());
}

#[test]
fn invalid_configuration_exits_nonzero_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "speed = -1\n");
    let out = tmp.path().join("bad");
    let status = Command::new(bin())
        .args(["run", "--config", &cfg, "--out", s(&out)])
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("error"));
    assert!(!out.join("agents.csv").exists());
}

#[test]
fn malformed_thread_count_is_a_usage_error() {
    let status = Command::new(bin())
        .args(["run", "--help"])
        .env("SIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}
