use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pursuit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pursuit"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn workdir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("one.json"),
        r#"{"dim":1,"evader":[0.0],"pursuers":[[-1.0]]}"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("two.json"),
        r#"{"dim":1,"evader":[0.0],"pursuers":[[-1.0],[2.0]]}"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("plane.json"),
        r#"{"dim":2,"evader":[0.0,0.0],"pursuers":[[-1.0,0.0],[0.5,-0.8],[0.5,0.8]]}"#,
    )
    .unwrap();
    dir
}

#[test]
fn classify_exit_codes() {
    let d = workdir();
    let o = pursuit(&["classify", "--scenario", "one.json"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["regime"], "evasion");
    assert_eq!(doc["witness"], serde_json::json!([1.0]));

    let o = pursuit(&["classify", "--scenario", "two.json"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains(r#""regime":"pursuit""#));

    let o = pursuit(&["classify", "--scenario", "missing.json"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_arguments_exit_one() {
    let d = workdir();
    let o = pursuit(&["classify"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let o = pursuit(
        &[
            "simulate",
            "--scenario",
            "one.json",
            "--evader",
            "witness",
            "--dt",
            "0",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let o = pursuit(
        &["simulate", "--scenario", "two.json", "--evader", "warp:9"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_summaries_and_outputs() {
    let d = workdir();
    let o = pursuit(
        &[
            "simulate",
            "--scenario",
            "two.json",
            "--evader",
            "constant:[1]",
            "--out",
            "run.csv",
            "--svg",
            "run.svg",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "captured i=2 tau=1.0");

    let events: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("run.events.json")).unwrap())
            .unwrap();
    assert_eq!(events["capture"]["i"], 2);
    assert_eq!(events["capture"]["tau"], 1.0);

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("run.manifest.json")).unwrap())
            .unwrap();
    for key in [
        "command",
        "scenario",
        "options",
        "seed",
        "version",
        "outputs",
        "duration_ms",
    ] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["run.csv", "run.events.json", "run.svg"]);
    assert!(fs::read_to_string(d.path().join("run.svg"))
        .unwrap()
        .starts_with("<svg"));

    let o = pursuit(
        &[
            "simulate",
            "--scenario",
            "one.json",
            "--evader",
            "witness",
            "--horizon",
            "5",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "no capture within horizon");
}

#[test]
fn simulate_with_recorded_pursuers() {
    let d = workdir();
    // Pursuer 1 chases at full speed, pursuer 2 stands still.
    fs::write(
        d.path().join("rec.json"),
        r#"{"dt":0.5,"values":[[[1.0],[0.0]]]}"#,
    )
    .unwrap();
    let o = pursuit(
        &[
            "simulate",
            "--scenario",
            "two.json",
            "--evader",
            "constant:[0]",
            "--pursuers",
            "file:rec.json",
            "--dt",
            "0.5",
            "--horizon",
            "3",
            "--out",
            "r.csv",
        ],
        d.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o).trim(), "captured i=1 tau=1.0");
    let events = fs::read_to_string(d.path().join("r.events.json")).unwrap();
    assert!(events.contains(r#""kind": "distance""#));
}

#[test]
fn theta_on_one_pursuer_is_zero() {
    let d = workdir();
    let o = pursuit(&["theta", "--scenario", "one.json"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["theta_estimate"], 0.0);
}

#[test]
fn verify_reports_slacks() {
    let d = workdir();
    let o = pursuit(
        &[
            "verify",
            "--scenario",
            "two.json",
            "--control",
            "constant:[1]",
            "--control",
            "constant:[-1]",
            "--control",
            "constant:[0]",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let slacks: Vec<f64> = doc["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["slack"].as_f64().unwrap())
        .collect();
    assert_eq!(slacks, [0.5, 1.0, 0.5]);
    assert_eq!(doc["eta_upper"], 1.5);
}

#[test]
fn verify_rejects_evasion_scenarios() {
    let d = workdir();
    let o = pursuit(
        &[
            "verify",
            "--scenario",
            "one.json",
            "--control",
            "constant:[1]",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_plane_triple_and_vacuous_grid() {
    // A grid step of 3 rad leaves no positive certified bound: usage error.
    let d = workdir();
    let o = pursuit(
        &[
            "verify",
            "--scenario",
            "plane.json",
            "--control",
            "sphere:seed=3,scale=1",
            "--control",
            "rotate:plane=(1,2),rate=0.5",
        ],
        d.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = pursuit(
        &[
            "verify",
            "--scenario",
            "plane.json",
            "--control",
            "constant:[1,0]",
            "--grid-step",
            "3.0",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_empty_grid() {
    let d = workdir();
    fs::write(d.path().join("cfg.json"), r#"{"m":[],"n":[2],"seeds":[1]}"#).unwrap();
    let o = pursuit(&["sweep", "--config", "cfg.json", "--out", "sw"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let agg = fs::read_to_string(d.path().join("sw/aggregate.csv")).unwrap();
    assert_eq!(agg, "m,n,seed,regime,theta_est,theta_lb,tau,eta,slack\n");
}

fn data_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn sweep_is_deterministic_across_job_counts() {
    let d = workdir();
    fs::write(
        d.path().join("cfg.json"),
        r#"{"m":[1,3],"n":[1,2],"seeds":[5,6],"horizon":5.0}"#,
    )
    .unwrap();
    let a = pursuit(
        &["sweep", "--config", "cfg.json", "--out", "a", "--jobs", "1"],
        d.path(),
    );
    let b = pursuit(
        &["sweep", "--config", "cfg.json", "--out", "b", "--jobs", "4"],
        d.path(),
    );
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let fa = data_files(&d.path().join("a"));
    let fb = data_files(&d.path().join("b"));
    assert_eq!(fa.len(), 1 + 8 * 5);
    assert_eq!(fa, fb);

    let agg = String::from_utf8(
        fa.iter()
            .find(|f| f.0 == "aggregate.csv")
            .unwrap()
            .1
            .clone(),
    )
    .unwrap();
    assert_eq!(agg.lines().count(), 9);
    let manifest: Value = serde_json::from_str(
        &fs::read_to_string(d.path().join("a/m3_n1_s5/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 5);
}

#[test]
fn simulate_is_deterministic() {
    let d = workdir();
    let args = |out: &str| {
        vec![
            "simulate".to_string(),
            "--scenario".into(),
            "plane.json".into(),
            "--evader".into(),
            "sphere:scale=0.9".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            out.into(),
        ]
    };
    for out in ["x.csv", "y.csv"] {
        let a = args(out);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        assert_eq!(pursuit(&refs, d.path()).status.code(), Some(0));
    }
    for suffix in [".csv", ".events.json"] {
        let x = fs::read(d.path().join(format!("x{suffix}"))).unwrap();
        let y = fs::read(d.path().join(format!("y{suffix}"))).unwrap();
        assert_eq!(x, y, "{suffix} differs");
    }
    let o1 = pursuit(
        &["theta", "--scenario", "plane.json", "--seed", "4"],
        d.path(),
    );
    let o2 = pursuit(
        &["theta", "--scenario", "plane.json", "--seed", "4"],
        d.path(),
    );
    assert_eq!(o1.stdout, o2.stdout);
}
