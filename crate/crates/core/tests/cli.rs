use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltafinger"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn deltafinger")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn ik_on_axis_prints_equal_angles() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ik", "0", "0", "-0.040"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let v: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(v.len(), 3);
    assert!(v[0] == v[1] && v[1] == v[2]);
    assert_eq!(v[0].split('.').nth(1).unwrap().len(), 9);
}

#[test]
fn ik_unreachable_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ik", "0.5", "0", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unreachable: chain 0"));
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "forearm = sixty\n").unwrap();
    let o = run(
        &["--config", cfg.to_str().unwrap(), "ik", "0", "0", "-0.04"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["--config", "missing.cfg", "ik", "0", "0", "-0.04"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fk_and_encode() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["fk", "0", "0", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: Vec<f64> = stdout(&o).split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert_eq!(v[0], 0.0);
    assert!(v[2] < 0.0);
    assert!(!stdout(&o).contains("-0.000000000 "));

    let o = run(&["encode", "0.1", "-0.1", "0.05"], dir.path());
    assert_eq!(o.stdout, b"A 1000 -1000 500\n");
    let o = run(&["encode", "0", "2", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["fk", "3", "3", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn workspace_writes_map_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("coarse.cfg");
    std::fs::write(&cfg, "[workspace]\ngrid_spacing = 0.002\n").unwrap();
    let o = run(
        &["--config", cfg.to_str().unwrap(), "--out", "ws", "workspace"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("z0=") && out.contains(" disc_radius="));
    let csv = std::fs::read_to_string(dir.path().join("ws/workspace.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,z,reachable"));
    assert_eq!(csv.lines().count(), 1 + 51 * 51 * 41);
}

#[test]
fn degenerate_geometry_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.cfg");
    std::fs::write(
        &cfg,
        "[geometry]\nbase_radius = 0.0105\nupper_arm = 0.001\nforearm = 0.001\neffector_radius = 0.010\n\
         [servo]\ntorque_limit = 1\n[workspace]\ngrid_spacing = 0.002\n",
    )
    .unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "workspace"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

fn write_path(path: &Path, rows: impl Iterator<Item = (f64, f64)>) {
    let mut s = String::from("t,x,y,z\n");
    for (t, z) in rows {
        s.push_str(&format!("{t},0,0,{z}\n"));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn render_descending_saturates() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("plane.off");
    std::fs::write(&mesh, "OFF\n4 2 0\n-1 -1 0\n1 -1 0\n1 1 0\n-1 1 0\n3 0 1 2\n3 0 2 3\n").unwrap();
    let path = dir.path().join("path.csv");
    write_path(&path, (0..=40).map(|k| (k as f64 * 0.01, 0.005 - k as f64 * 0.001)));
    let o = run(&["render", mesh.to_str().unwrap(), path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("render.csv")).unwrap();
    let fz: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(fz[0], 0.0);
    assert!(fz.iter().all(|&f| f <= 1.8 + 1e-9));
    assert!((fz.last().unwrap() - 1.8).abs() < 1e-6);
    assert!(fz.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn render_flags_incomplete_patch_and_bad_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("strip.off");
    std::fs::write(
        &mesh,
        "OFF\n4 2 0\n-1 -1 0\n0.02 -1 0\n0.02 1 0\n-1 1 0\n3 0 1 2\n3 0 2 3\n",
    )
    .unwrap();
    let path = dir.path().join("path.csv");
    write_path(&path, [(0.0, -0.01), (0.1, -0.02)].into_iter());
    let o = run(&["render", mesh.to_str().unwrap(), path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("render.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",,,,,error:patch_incomplete(2)"));
    assert_eq!(csv.lines().count(), 3);

    let bad = dir.path().join("bad.off");
    std::fs::write(&bad, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1\n3 0 1 2\n").unwrap();
    let o = run(&["render", bad.to_str().unwrap(), path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));
}

#[test]
fn experiment_outputs_and_unreachable_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "[experiment]\nduration = 2\nnoise_level = 0.04\n").unwrap();
    let o = run(
        &["--config", cfg.to_str().unwrap(), "--seed", "5", "experiment"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in [
        "stats.csv",
        "stats.txt",
        "anova.txt",
        "trace_00_r5.000mm.csv",
        "trace_03_r20.000mm.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let trace = std::fs::read_to_string(dir.path().join("trace_00_r5.000mm.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t,px,py,pz,fx,fy,fz"));
    let anova = std::fs::read_to_string(dir.path().join("anova.txt")).unwrap();
    assert!(anova.contains(" f=") && anova.contains(" p="));

    let far = dir.path().join("far.cfg");
    std::fs::write(&far, "[experiment]\nradii = 0.005, 0.040\n").unwrap();
    let o = run(&["--config", far.to_str().unwrap(), "experiment"], dir.path());
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("experiment"));
}
