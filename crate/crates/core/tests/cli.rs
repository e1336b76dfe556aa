use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dmpfem::io::{read_field, LOG_HEADER, TABLE_HEADER};

fn dmpfem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmpfem"))
        .current_dir(dir)
        .env_remove("DMPFEM_OUT")
        .args(args)
        .output()
        .expect("spawn dmpfem")
}

#[test]
fn run_writes_field_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dmpfem(dir.path(), &["run", "--problem", "STEADY_PARABOLIC", "--output", "res"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("problem = STEADY_PARABOLIC") && stdout.contains("nx = 12"));
    let res = dir.path().join("res");
    let field = read_field(&res.join("steady_parabolic.vtk")).unwrap();
    assert_eq!(field.values.len(), 13 * 13);
    let log = fs::read_to_string(res.join("steady_parabolic_log.csv")).unwrap();
    assert!(log.starts_with(LOG_HEADER));
    assert!(log.lines().count() > 2);

    let audit = dmpfem(
        dir.path(),
        &["audit", "res/steady_parabolic.vtk", "--problem", "STEADY_PARABOLIC", "--local"],
    );
    assert_eq!(audit.status.code(), Some(0), "{}", String::from_utf8_lossy(&audit.stdout));
}

#[test]
fn config_file_and_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "[run]\nproblem = STRAIGHT_DISCONTINUITY\n[mesh]\nnx = 8\nny = 8\n[output]\noutput = ignored\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dmpfem"))
        .current_dir(dir.path())
        .env("DMPFEM_OUT", "from_env")
        .args(["run", "--config", "run.cfg", "--q", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let echo = fs::read_to_string(dir.path().join("from_env/config.txt")).unwrap();
    assert!(echo.contains("q = 4\n") && echo.contains("nx = 8\n"));
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn table_has_sixteen_rows_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "table", "--problem", "STRAIGHT_DISCONTINUITY", "--nx", "6", "--ny", "6", "--sigma_rule", "beta_eps",
        "--sigma_factor", "1e-5", "--output", "t1",
    ];
    let first = dmpfem(dir.path(), &args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let table = fs::read_to_string(dir.path().join("t1/straight_discontinuity_table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], TABLE_HEADER);
    assert_eq!(lines.len(), 17);
    assert!(dir.path().join("t1/straight_discontinuity_table_full.csv").exists());

    let mut again = args;
    *again.last_mut().unwrap() = "t2";
    assert_eq!(dmpfem(dir.path(), &again).status.code(), Some(0));
    for f in ["straight_discontinuity_table.csv", "straight_discontinuity_table_full.csv"] {
        let a = fs::read(dir.path().join("t1").join(f)).unwrap();
        let b = fs::read(dir.path().join("t2").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn table_eps_zero_rows_skip_newton() {
    let dir = tempfile::tempdir().unwrap();
    let out = dmpfem(
        dir.path(),
        &["table", "--q-list", "4", "--eps-list", "0", "--problem", "STRAIGHT_DISCONTINUITY", "--nx", "6", "--ny", "6"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("out/straight_discontinuity_table.csv")).unwrap();
    let cells: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert!(!cells[2].is_empty() && !cells[3].is_empty());
    assert!(cells[4].is_empty() && cells[5].is_empty());
}

#[test]
fn converge_writes_one_row_per_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dmpfem(dir.path(), &["converge", "--problem", "STEADY_PARABOLIC", "--sizes", "12,24,48,96"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/steady_parabolic_converge.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let last_eoc: f64 = csv.lines().last().unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!(last_eoc > 1.5, "{last_eoc}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_problem = dmpfem(dir.path(), &["run", "--problem", "SQUARE"]);
    assert_eq!(bad_problem.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_problem.stderr).contains("STEADY_PARABOLIC"));

    let bad_q = dmpfem(dir.path(), &["run", "--problem", "STEADY_PARABOLIC", "--q", "-1"]);
    assert_eq!(bad_q.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_q.stderr).contains("q must be positive"));

    let unknown_key = dmpfem(dir.path(), &["run", "--problem", "STEADY_PARABOLIC", "--colour", "red"]);
    assert_eq!(unknown_key.status.code(), Some(2));

    let stuck = dmpfem(
        dir.path(),
        &["run", "--problem", "STRAIGHT_DISCONTINUITY", "--nx", "8", "--ny", "8", "--k_max", "2"],
    );
    assert_eq!(stuck.status.code(), Some(3));

    fs::write(dir.path().join("blocker"), "").unwrap();
    let unwritable = dmpfem(dir.path(), &["run", "--problem", "STEADY_PARABOLIC", "--output", "blocker/sub"]);
    assert_eq!(unwritable.status.code(), Some(4));

    let missing = dmpfem(dir.path(), &["audit", "nowhere.vtk"]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn audit_flags_led_violations() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dmpfem::mesh::Mesh2D::build_structured(2, 2, dmpfem::mesh::Rect::unit(), dmpfem::mesh::ElementKind::Q1)
        .unwrap();
    dmpfem::io::write_field(&dir.path().join("a.vtk"), &mesh, &[0.5; 9], 0.0).unwrap();
    let mut grown = [0.5; 9];
    grown[4] = 0.9;
    dmpfem::io::write_field(&dir.path().join("b.vtk"), &mesh, &grown, 0.1).unwrap();
    let ok = dmpfem(dir.path(), &["audit", "a.vtk", "a.vtk"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = dmpfem(dir.path(), &["audit", "a.vtk", "b.vtk", "--local"]);
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.contains("LED: 1 violating"), "{text}");
}
