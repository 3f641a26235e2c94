use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bearing_formation::io::{parse_scenario, PeSettings};
use bearing_formation::presets;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bearing-formation"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn short_pyramid(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(scenario("pyramid.cfg")).unwrap();
    let text = text.replace("t_end = 30", "t_end = 1").replace("duration = 400", "duration = 1");
    let path = dir.join("short.cfg");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn pyramid_file_matches_preset() {
    let file = parse_scenario(scenario("pyramid.cfg")).unwrap();
    assert_eq!(file.scenario, presets::pyramid());
    let window = 2.0 * std::f64::consts::PI * presets::PYRAMID_PERIOD;
    assert_eq!(file.pe, PeSettings { window, mu: 0.2, horizon: 2.0 * window, dt: 1e-2 });
    assert!(file.observer.is_some());
    assert!(parse_scenario(scenario("static_pair.cfg")).is_ok());
}

#[test]
fn simulate_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_pyramid(dir.path());
    let out = dir.path().join("out");
    let res = run(&["--scenario", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "simulate"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let agents = fs::read_to_string(out.join("agents.csv")).unwrap();
    let edges = fs::read_to_string(out.join("edges.csv")).unwrap();
    assert_eq!(agents.lines().count(), 1 + 4 * 1001);
    assert_eq!(edges.lines().count(), 1 + 3 * 1001);
}

#[test]
fn every_subcommand_succeeds_on_short_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_pyramid(dir.path());
    let out = dir.path().join("out");
    for cmd in [&["observe"][..], &["check-pe"], &["analyze-gains"], &["plot", "--kind", "all"]] {
        let mut args = vec!["--scenario", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dt", "1e-2"];
        args.extend_from_slice(cmd);
        let res = run(&args);
        assert!(res.status.success(), "{cmd:?}: {}", stderr(&res));
    }
    for f in ["observer.csv", "pe.csv", "certificates.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let svgs = fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"));
    assert!(svgs.count() >= 3);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.cfg");
    fs::write(&empty, "").unwrap();
    let res = run(&["--scenario", empty.to_str().unwrap(), "simulate"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).starts_with("error[validation]: missing sections"), "{}", stderr(&res));

    let text = fs::read_to_string(scenario("pyramid.cfg")).unwrap().replace("kp = 3", "kp = 4");
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, text).unwrap();
    let res = run(&["--scenario", bad.to_str().unwrap(), "simulate"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("gain bound violated"), "{}", stderr(&res));

    let pyramid = scenario("pyramid.cfg");
    for args in [
        vec!["simulate"],
        vec!["--scenario", pyramid.to_str().unwrap(), "--dt", "-1", "simulate"],
        vec!["--scenario", pyramid.to_str().unwrap(), "frobnicate"],
    ] {
        let res = run(&args);
        assert_eq!(res.status.code(), Some(1), "{args:?}");
        assert!(stderr(&res).starts_with("error[validation]: "), "{args:?}: {}", stderr(&res));
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn separation_violation_exits_two_with_partial_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("crash.cfg");
    // the follower starts 0.1 from the leader and is pushed straight through it
    fs::write(
        &cfg,
        "[graph]\nagents = 2\nedge = 2 1\n\n[desired]\nkind = static\np1 = 0 0 0\np2 = 0 0 -1\n\n\
         [gains]\nkp = 3\nkd = 10\n\n[initial]\np1 = 0 0 0\nv1 = 0 0 0\np2 = 0 0 -0.1\nv2 = 0 0 5\n\n\
         [sim]\ndt = 1e-3\nt_end = 5\nseparation_guard = 0.05\n\n[pe]\nwindow = 1\nmu = 0.1\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = run(&["--scenario", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "simulate"]);
    assert_eq!(res.status.code(), Some(2), "{}", stderr(&res));
    assert!(stderr(&res).starts_with("error[runtime]: separation guard violated"), "{}", stderr(&res));
    let rows = fs::read_to_string(out.join("edges.csv")).unwrap().lines().count();
    assert!(rows > 1 && rows < 1 + 5001);
}

#[test]
fn batch_mode_writes_one_directory_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch");
    fs::create_dir(&batch).unwrap();
    fs::copy(scenario("pyramid.cfg"), batch.join("pyramid.cfg")).unwrap();
    fs::copy(scenario("static_pair.cfg"), batch.join("static_pair.cfg")).unwrap();
    let out = dir.path().join("out");
    let res = run(&["--batch", batch.to_str().unwrap(), "--out", out.to_str().unwrap(), "check-pe"]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(out.join("pyramid/pe.csv").is_file());
    assert!(out.join("static_pair/pe.csv").is_file());
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("[pyramid]") && stdout.contains("[static_pair]"), "{stdout}");
}
