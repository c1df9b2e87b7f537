use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FIG1: &str = r#"{"d": 8.0, "agents": [
  {"x": 0.0, "type": "L"}, {"x": 1.0, "type": "H"}, {"x": 5.0, "type": "L"},
  {"x": 7.0, "type": "H"}, {"x": 8.0, "type": "L"}]}"#;

const FIG2: &str = r#"{"d": 8.0, "agents": [
  {"x": 0.0, "type": "L"}, {"x": 1.0, "type": "L"}, {"x": 5.0, "type": "H"},
  {"x": 6.5, "type": "H"}, {"x": 8.0, "type": "H"}]}"#;

fn exe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exchg-mech"))
        .args(args)
        .env("EXCHG_MECH_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn exe_with_workers(workers: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exchg-mech"))
        .args(args)
        .env("EXCHG_MECH_WORKERS", workers)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn replay_figures_exit_cleanly() {
    let fig1 = exe(&["replay", "--figure", "fig1"]);
    assert_eq!(fig1.status.code(), Some(0));
    assert!(!stdout(&fig1).contains("MISMATCH"));

    let fig2 = exe(&["replay", "--figure", "fig2", "--format", "json"]);
    let v = json(&fig2);
    assert_eq!(v["verdict"], "not truthful");
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn central_opt_on_fig1_reaches_the_optimum() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "fig1.json", FIG1);
    let v = json(&exe(&[
        "run",
        "--mechanism",
        "central-opt",
        "--instance",
        &path,
        "--format",
        "json",
    ]));
    let point = &v["support"][0];
    assert_eq!(point["facility"], 8.0);
    assert_eq!(point["welfare"], 35.0);
    assert_eq!(point["trades"].as_array().unwrap().len(), 0);
    let locations: Vec<f64> = serde_json::from_value(point["locations"].clone()).unwrap();
    assert_eq!(locations, vec![5.0, 0.0, 7.0, 1.0, 8.0]);
}

#[test]
fn random_endpoints_reports_its_whole_support() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "fig1.json", FIG1);
    let v = json(&exe(&[
        "run",
        "--mechanism",
        "random-endpoints",
        "--instance",
        &path,
        "--format",
        "json",
    ]));
    assert_eq!(v["expected_welfare_allocated"], 20.0);
    let support = v["support"].as_array().unwrap();
    assert_eq!(support.len(), 2);
    assert_eq!(support[0]["facility"], 0.0);
    assert_eq!(support[1]["facility"], 8.0);
    assert!(support.iter().all(|p| p["probability"] == 0.5));
    assert!(v["expected_welfare"].as_f64().unwrap() >= 20.0);

    let table = stdout(&exe(&["run", "--mechanism", "random-endpoints", "--instance", &path]));
    assert!(table.contains("expected welfare: 20 before exchange"), "{table}");
}

#[test]
fn opt_ttc_on_fig2_places_at_zero_without_trades() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "fig2.json", FIG2);
    let v = json(&exe(&[
        "run",
        "--mechanism",
        "opt-ttc",
        "--instance",
        &path,
        "--format",
        "json",
    ]));
    assert_eq!(v["support"][0]["facility"], 0.0);
    assert!(v["support"][0]["trades"].as_array().unwrap().is_empty());
    assert_eq!(v["support"][0]["utilities"][3], 6.5);

    let table = stdout(&exe(&["run", "--mechanism", "opt-ttc", "--instance", &path]));
    assert!(table.contains("trades: none"), "{table}");
}

#[test]
fn pinned_facility_overrides_the_choice() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "fig2.json", FIG2);
    let v = json(&exe(&[
        "run",
        "--mechanism",
        "opt-ttc",
        "--instance",
        &path,
        "--facility",
        "8",
        "--format",
        "json",
    ]));
    assert_eq!(v["support"][0]["facility"], 8.0);
    assert_eq!(v["support"][0]["trades"].as_array().unwrap().len(), 2);

    let out = exe(&["run", "--mechanism", "opt-ttc", "--instance", &path, "--facility", "9"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn generate_round_trips_and_is_seeded() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = exe(&[
            "generate",
            "--n",
            "5",
            "--d",
            "8.0",
            "--seed",
            "42",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let inst = exchg_mech_core::Instance::load_json(&text).unwrap();
    assert_eq!(inst.n(), 5);
    assert_eq!(exchg_mech_core::Instance::load_json(&inst.to_json()).unwrap(), inst);

    let one = dir.path().join("one.json");
    assert!(exe(&[
        "generate",
        "--n",
        "1",
        "--d",
        "1.0",
        "--seed",
        "7",
        "--out",
        one.to_str().unwrap()
    ])
    .status
    .success());
    let single = exchg_mech_core::Instance::load_json(&std::fs::read_to_string(&one).unwrap()).unwrap();
    assert_eq!(single.n(), 1);
    assert!((0.0..=1.0).contains(&single.position(0)));
}

#[test]
fn generate_rejects_empty_instances() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("x.json");
    let out = exe(&[
        "generate",
        "--n",
        "0",
        "--d",
        "8",
        "--seed",
        "1",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!p.exists());
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.json");
    let malformed = write(&dir, "bad.json", "{\"d\": 8.0, \"agents\": [");
    let invalid = write(
        &dir,
        "invalid.json",
        r#"{"d": 8.0, "agents": [{"x": 9.5, "type": "L"}]}"#,
    );

    let code = |path: &str| {
        let out = exe(&["run", "--mechanism", "central-opt", "--instance", path]);
        assert!(!out.stderr.is_empty());
        out.status.code()
    };
    assert_eq!(code(missing.to_str().unwrap()), Some(3));
    assert_eq!(code(&malformed), Some(4));
    assert_eq!(code(&invalid), Some(5));
    assert_eq!(
        exe(&["run", "--mechanism", "nope", "--instance", &invalid])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(exe(&["replay", "--figure", "fig3"]).status.code(), Some(2));

    let unwritable = dir.path().join("no/such/dir/out.json");
    let out = exe(&[
        "generate",
        "--n",
        "2",
        "--d",
        "8",
        "--seed",
        "1",
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn audit_rejects_invalid_configs() {
    for args in [
        ["--trials", "0", "--n-min", "1", "--n-max", "3", "--d", "8"],
        ["--trials", "5", "--n-min", "4", "--n-max", "3", "--d", "8"],
        ["--trials", "5", "--n-min", "1", "--n-max", "3", "--d", "-1"],
    ] {
        let mut full = vec!["audit", "--mechanism", "central-opt", "--seed", "1"];
        full.extend(args);
        assert_eq!(exe(&full).status.code(), Some(2), "{args:?}");
    }
    let out = exe_with_workers(
        "zero",
        &[
            "audit",
            "--mechanism",
            "central-opt",
            "--trials",
            "2",
            "--n-min",
            "1",
            "--n-max",
            "2",
            "--d",
            "8",
            "--seed",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

fn audit_args<'a>(extra: &[&'a str], out: &'a str) -> Vec<&'a str> {
    let mut v = vec![
        "audit", "--trials", "300", "--n-min", "1", "--n-max", "6", "--d", "8", "--seed", "11", "--out", out,
    ];
    v.extend(extra);
    v
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn reports_are_byte_identical_across_runs_and_worker_counts() {
    let dir = TempDir::new().unwrap();
    for mode in [
        vec!["--mechanism", "opt-ttc", "--inject", "fig2", "--format", "json"],
        vec!["--mechanism", "random-endpoints", "--ratio", "--format", "json"],
        vec!["--mechanism", "central-opt", "--monotonicity", "--format", "json"],
    ] {
        let outputs: Vec<String> = [("1", "a"), ("1", "b"), ("3", "c")]
            .iter()
            .map(|(w, name)| {
                let p = dir.path().join(name);
                let out = exe_with_workers(w, &audit_args(&mode, p.to_str().unwrap()));
                assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
                read(&p)
            })
            .collect();
        assert_eq!(outputs[0], outputs[1], "{mode:?}");
        assert_eq!(outputs[0], outputs[2], "{mode:?}");
    }
}

#[test]
fn injected_counterexample_is_caught() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("audit.json");
    let out = exe(&audit_args(
        &["--mechanism", "opt-ttc", "--inject", "fig2", "--format", "json"],
        p.to_str().unwrap(),
    ));
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&read(&p)).unwrap();
    assert_eq!(v["header"]["injected"], 1);
    assert_eq!(v["header"]["seed"], 11);
    let last = v["rows"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["truthful"], false);
    assert_eq!(last["max_gain"], 0.5);
}

#[test]
fn central_opt_campaign_is_truthful() {
    let out = exe(&[
        "audit",
        "--mechanism",
        "central-opt",
        "--trials",
        "500",
        "--n-min",
        "1",
        "--n-max",
        "7",
        "--d",
        "8",
        "--seed",
        "1",
    ]);
    assert!(
        stdout(&out).contains("truthful on all trials, max_gain 0"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn random_endpoints_ratio_stays_within_two() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("ratio.json");
    let out = exe(&[
        "audit",
        "--mechanism",
        "random-endpoints",
        "--ratio",
        "--trials",
        "1000",
        "--n-min",
        "1",
        "--n-max",
        "8",
        "--d",
        "8",
        "--seed",
        "42",
        "--format",
        "json",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&read(&p)).unwrap();
    assert!(v["worst_ratio"].as_f64().unwrap() <= 2.0 + 1e-9);
    assert_eq!(v["oracle_discrepancies"], 0);
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let dir = TempDir::new().unwrap();
    let (pj, pc) = (dir.path().join("r.json"), dir.path().join("r.csv"));
    let base = ["--mechanism", "random-endpoints", "--ratio", "--format"];
    assert!(exe(&audit_args(&[&base[..], &["json"]].concat(), pj.to_str().unwrap()))
        .status
        .success());
    assert!(exe(&audit_args(&[&base[..], &["csv"]].concat(), pc.to_str().unwrap()))
        .status
        .success());

    let v: Value = serde_json::from_str(&read(&pj)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let csv = read(&pc);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# mechanism=random-endpoints"));
    assert_eq!(lines.next().unwrap(), "trial,n,optimum,achieved,ratio");
    let parsed: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(parsed.len(), rows.len());
    for (row, cells) in rows.iter().zip(&parsed) {
        let from_json: Vec<f64> = ["trial", "n", "optimum", "achieved", "ratio"]
            .iter()
            .map(|k| row[*k].as_f64().unwrap())
            .collect();
        assert_eq!(&from_json, cells);
    }
}
