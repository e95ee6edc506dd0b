use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_d2d-offload"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_assumed_defaults() {
    let out = bin(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[assumed]"));
    for sub in ["run", "sweep", "fit"] {
        assert!(text.contains(sub));
    }
}

#[test]
fn run_writes_episode_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["run", "--seed", "5", "--replicas", "2", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["per_user.csv", "episodes.csv", "edges.csv", "positions.csv"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let episodes = fs::read_to_string(dir.path().join("episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 3);
    assert!(episodes.lines().nth(1).unwrap().starts_with("0,5,"));
}

#[test]
fn sweep_writes_csv_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "n_users = 12\nsweep_axis = \"alpha\"\nsweep_values = [2, 8]\n").unwrap();
    let out = bin(&[
        "sweep",
        "--config",
        path(&cfg),
        "--replicas",
        "3",
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.starts_with('#'));
    assert!(csv.contains("alpha"));
    let svgs = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert_eq!(svgs, 3);
}

#[test]
fn fit_reads_a_trace_back() {
    let dir = tempfile::tempdir().unwrap();
    let run = bin(&["run", "--out", path(dir.path())]);
    assert!(run.status.success());
    let trace = dir.path().join("trace.csv");
    fs::write(
        &trace,
        "user_a,user_b,start_s,duration_s\n0,1,0,2.0\n0,1,10,4.0\n1,2,3,1.5\n1,2,9,0.5\n",
    )
    .unwrap();
    let fit_dir = dir.path().join("fit");
    let out = bin(&[
        "fit",
        "--trace",
        path(&trace),
        "--positions",
        path(&dir.path().join("positions.csv")),
        "--out",
        path(&fit_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let laws = fs::read_to_string(fit_dir.join("contact_laws.csv")).unwrap();
    assert_eq!(laws.lines().count(), 3);
    // pair (0,1): mean 3, variance 1 -> shape 9, scale 1/3
    let row: Vec<&str> = laws.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], ["0", "1", "2"]);
    assert!((row[5].parse::<f64>().unwrap() - 9.0).abs() < 1e-9);
    assert!(fit_dir.join("partition.csv").is_file());
}

#[test]
fn unknown_config_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "alhpa = 4\n").unwrap();
    let out = bin(&["run", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alhpa"));
}
