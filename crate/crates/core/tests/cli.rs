use std::fs;
use std::path::Path;
use std::process::Command;

use chns::cli::{convergence, parse_config, simulate, TIMESERIES_HEADER};

fn config(dir: &Path, body: &str) -> chns::cli::RunConfig {
    parse_config(&format!("{body}\noutput_dir = {}\n", dir.display())).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn constant_state_time_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "mesh_n = 4\nT = 0.1\ntau = 0.05\nphi0 = 0.3\nu0 = zero\nsnapshot_every = 0");
    let out = simulate(&cfg).unwrap();
    let csv = fs::read_to_string(&out.timeseries).unwrap();
    assert_eq!(csv.lines().next().unwrap(), TIMESERIES_HEADER);
    assert_eq!(csv.lines().count(), 4);
    let mass = column(&csv, "mass");
    assert_eq!(mass.len(), 3);
    assert!(mass.iter().all(|m| (m - mass[0]).abs() <= 1e-15));
    assert!(out.snapshots.is_empty());
    let vtk = fs::read_dir(dir.path()).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "vtk")
    });
    assert_eq!(vtk.count(), 0);
}

#[test]
fn droplet_energy_decreases_and_snapshots_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "mesh_n = 8\nT = 0.1\nsnapshot_every = 16");
    let out = simulate(&cfg).unwrap();
    let csv = fs::read_to_string(&out.timeseries).unwrap();
    let energy = column(&csv, "energy");
    assert_eq!(energy.len(), 33);
    assert!(energy.windows(2).all(|w| w[1] <= w[0]));
    let dissipated = column(&csv, "dissipation_integral");
    let balance = energy[0] - energy[32] - dissipated[32];
    assert!(balance.abs() <= 1e-8, "{balance:e}");
    let names: Vec<String> = out
        .snapshots
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["fields_0.vtk", "fields_16.vtk", "fields_32.vtk"]);
    let vtk = fs::read_to_string(&out.snapshots[2]).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(vtk.contains("POINTS 289 double\n"));
}

#[test]
fn two_level_study_has_one_row_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "mesh_n = 4\nT = 0.05\nlevels = 2");
    let table = convergence(&cfg, |_| {}).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert!(table.rows[0].eoc.is_none() && table.rows[0].eoc_p.is_none());
    let path = dir.path().join("table1.csv");
    let first = fs::read(&path).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("k,e,eoc,ep,eoc_p\n0,"));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row.len(), row[2], row[4]), (5, "", ""));
    convergence(&cfg, |_| {}).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn one_level_study_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "levels = 1");
    assert!(convergence(&cfg, |_| {}).unwrap_err().to_string().contains("levels"));
}

#[test]
fn binary_reports_success_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    fs::write(
        &good,
        format!("mesh_n = 2\nT = 0.02\ntau = 0.01\noutput_dir = {}\n", dir.path().display()),
    )
    .unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_chns")).args(["simulate"]).arg(&good).output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("timeseries.csv")).unwrap().lines().count(), 4);

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "mesh_n = 2\nfrobnicate = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_chns")).args(["simulate"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("frobnicate"), "{err}");
}
