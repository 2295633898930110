use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn mlc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlc")).args(args).output().expect("mlc runs")
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mlc(&args)
}

fn write_config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, json).unwrap();
    p
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn analyze_reproduces_equal_delay_margin() {
    let out = TempDir::new().unwrap();
    let o = run("analyze", &scenario("fig7b"), out.path(), &["--oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1);
    let a = read_json(out.path().join("analysis.json"));
    let m = &a["margins"];
    assert_eq!(m["verdict"], "ConsensusGuaranteed");
    assert_eq!(m["justification"], "equal-delay");
    assert!((m["tau_max"].as_f64().unwrap() - 0.230038).abs() < 1e-6);
    assert_eq!(a["oracle"]["stable"], true);
    assert_eq!(a["oracle"]["agrees_with_theory"], true);
    assert_eq!(a["graph"]["laplacian"]["lambda_max"], 4.0);
    let scan = fs::read_to_string(out.path().join("oracle_scan.csv")).unwrap();
    assert_eq!(scan.lines().next(), Some("omega,abs_f"));
    assert_eq!(scan.lines().count(), 4002);
}

#[test]
fn analyze_exit_codes_follow_verdict() {
    let dir = TempDir::new().unwrap();
    let unstable = write_config(
        &dir,
        "a3.json",
        r#"{ "graph": { "family": "cycle", "n": 4 }, "pattern": [[1, 2], [1, 1]], "delays": { "tau1": 0, "tau2": 0 } }"#,
    );
    let o = run("analyze", &unstable, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("UnstableGuaranteed"));

    let o = run("analyze", &scenario("fig5b"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
    let a = read_json(dir.path().join("analysis.json"));
    assert_eq!(a["margins"]["verdict"], "OutsideTheory");
    assert_eq!(a["margins"]["note"], "marginal pattern; simulate");

    let disconnected = write_config(
        &dir,
        "split.json",
        r#"{ "graph": { "n": 4, "edges": [[1, 2], [3, 4]] }, "pattern": [[1, 1], [0.5, 1]], "delays": { "tau1": 0, "tau2": 0 } }"#,
    );
    let o = run("analyze", &disconnected, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("disconnected"));
}

#[test]
fn config_errors_point_at_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(
        &dir,
        "bad.json",
        "{\n  \"graph\": { \"family\": \"cycle\", \"n\": 4 },\n  \"pattern\": [[1, 1], [0.5, true]]\n}\n",
    );
    let o = run("spectrum", &bad, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("pattern[1][1]") && err.contains("line 3"), "{err}");
    assert!(stdout(&o).is_empty());

    let o = mlc(&["analyze"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_writes_trajectory_files() {
    let out = TempDir::new().unwrap();
    let o = run("simulate", &scenario("fig7a"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = read_json(out.path().join("summary.json"));
    assert_eq!(s["classification"]["kind"], "Bounded");
    assert!((s["oscillation_frequency"].as_f64().unwrap() - 6.8284).abs() < 0.05);

    let traj = fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("t,agent,layer,value"));
    // 3001 recorded times x 4 agents x 2 layers
    assert_eq!(lines.count(), 3001 * 8);
    let dis = fs::read_to_string(out.path().join("disagreement.csv")).unwrap();
    assert_eq!(dis.lines().next(), Some("t,disagreement"));
    assert_eq!(dis.lines().count(), 3002);
}

#[test]
fn simulate_scenario_classifications() {
    let out = TempDir::new().unwrap();
    for (name, kind) in [("fig4a", "Converged"), ("fig6a", "Diverged"), ("fig7a", "Bounded")] {
        let o = run("simulate", &scenario(name), out.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let s = read_json(out.path().join("summary.json"));
        assert_eq!(s["classification"]["kind"], kind, "{name}");
    }
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for out in [&a, &b] {
        assert!(run("simulate", &scenario("fig7f"), out.path(), &["--seed", "9"]).status.success());
        assert_eq!(run("analyze", &scenario("fig7c"), out.path(), &["--oracle"]).status.code(), Some(0));
    }
    for file in ["trajectory.csv", "disagreement.csv", "summary.json", "analysis.json", "oracle_scan.csv"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file} differs"
        );
    }
    let c = TempDir::new().unwrap();
    assert!(run("simulate", &scenario("fig7f"), c.path(), &["--seed", "10"]).status.success());
    assert_ne!(
        fs::read(a.path().join("trajectory.csv")).unwrap(),
        fs::read(c.path().join("trajectory.csv")).unwrap()
    );
}

#[test]
fn sweep_theory_flips_at_the_margin() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "grid.json",
        r#"{ "graph": { "family": "cycle", "n": 4 }, "pattern": [[1, 1], [0.5, 1]],
             "grid": { "equal": { "min": 0.1, "max": 0.3, "points": 11 } } }"#,
    );
    let o = run("sweep", &cfg, dir.path(), &["--oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        let tau: f64 = r[0].parse().unwrap();
        let (theory, oracle) = if tau < 0.2300 {
            ("ConsensusGuaranteed", "stable")
        } else {
            ("UnstableGuaranteed", "unstable")
        };
        assert_eq!((r[2], r[3], r[4]), (theory, oracle, ""), "tau = {tau}");
    }
}

#[test]
fn sweep_single_points() {
    let dir = TempDir::new().unwrap();
    let origin = write_config(
        &dir,
        "origin.json",
        r#"{ "graph": { "family": "cycle", "n": 4 }, "pattern": [[1, 1], [0.5, 1]],
             "grid": { "equal": { "min": 0, "max": 0, "points": 1 } } }"#,
    );
    let o = run("sweep", &origin, dir.path(), &["--oracle", "--sim"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv, "tau1,tau2,theory,oracle,sim\n0,0,ConsensusGuaranteed,stable,Converged\n");

    let long = write_config(
        &dir,
        "long.json",
        r#"{ "graph": { "family": "cycle", "n": 4 }, "pattern": [[1, 1], [0.5, 1]],
             "grid": { "tau1": { "min": 0.23, "max": 0.23, "points": 1 },
                       "tau2": { "min": 10, "max": 10, "points": 1 } },
             "simulation": { "horizon": 400, "seed": 5, "record_every": 100 } }"#,
    );
    let o = run("sweep", &long, dir.path(), &["--sim"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("0.23,10,OutsideTheory,,Diverged"));
}

#[test]
fn sweep_warns_when_simulation_lags_theory() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "short.json",
        r#"{ "graph": { "family": "cycle", "n": 4 }, "pattern": [[1, 1], [0.5, 1]],
             "grid": { "equal": { "min": 0.2, "max": 0.2, "points": 1 } },
             "simulation": { "horizon": 5 } }"#,
    );
    let o = run("sweep", &cfg, dir.path(), &["--sim"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("horizon may be too short"), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 warnings"));
}

#[test]
fn spectrum_dump() {
    let out = TempDir::new().unwrap();
    let o = run("spectrum", &scenario("fig6a"), out.path(), &[]);
    assert!(o.status.success());
    let s = read_json(out.path().join("spectrum.json"));
    assert_eq!(s["graph"]["edges"], serde_json::json!([[1, 2], [1, 4], [2, 3], [3, 4]]));
    assert_eq!(s["pattern"]["hurwitz_delay_free"], false);
    assert!((s["pattern"]["cross_spectrum"]["mu_max_abs"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn every_scenario_parses_and_analyzes() {
    let out = TempDir::new().unwrap();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let expected: Vec<String> = ["4", "5", "6", "7"]
        .iter()
        .flat_map(|f| {
            let panels: &[&str] = if *f == "7" { &["a", "b", "c", "d", "e", "f"] } else { &["a", "b", "c"] };
            panels.iter().map(move |p| format!("fig{f}{p}.json"))
        })
        .collect();
    assert_eq!(names, expected);
    for name in names {
        let o = run("analyze", &dir.join(&name), out.path(), &[]);
        assert!(matches!(o.status.code(), Some(0 | 2 | 3)), "{name}: {}", stderr(&o));
    }
}
