use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "small"
model = "mam"
observed_link = "0>1"
seeds = [1, 2]

[topology]
switches = 3
edges = [[0, 1], [1, 2]]
capacity_mbps = 100

[workload]
demand_mbps = [1, 5]
mean_holding_s = 30
flows = [[0, 1], [0, 2]]

[[classes]]
id = 0
priority = 0
bc_percent = 40
sharing_percent = 100

[[classes]]
id = 1
priority = 1
bc_percent = 60
sharing_percent = 100

[[phases]]
duration_s = 1800
load = 0.3
class_load = { TC0 = 2.0 }
"#;

fn bwbroker(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bwbroker")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn transparency_only_writes_reports_and_stops() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = bwbroker(&["run", "--scenario", "scenario1.toml", "--transparency-only", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let text = std::fs::read_to_string(out.join("scenario1/transparency.txt")).unwrap();
    assert!(text.contains("TC0"));
    assert!(out.join("scenario1/transparency.json").exists());
    assert!(!out.join("scenario1/atcs").exists());
}

#[test]
fn transparency_command_prints_to_stdout() {
    let o = bwbroker(&["transparency", "--scenario", "scenario2.toml", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["class_count"], 3);
}

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small(dir.path());
    let runs: Vec<PathBuf> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let o = bwbroker(&["run", "--scenario", s(&scenario), "--model", "atcs,frfs", "--out", s(&out)]);
            assert_eq!(code(&o), 0, "{o:?}");
            out.join("small")
        })
        .collect();
    let files = [
        "table.csv",
        "table.json",
        "transparency.txt",
        "atcs/average.json",
        "atcs/conformance.json",
        "atcs/seed-1/events.csv",
        "atcs/seed-2/summary.json",
        "frfs/seed-2/timeseries.csv",
    ];
    for f in files {
        let a = std::fs::read(runs[0].join(f)).unwrap_or_else(|e| panic!("{f}: {e}"));
        assert_eq!(a, std::fs::read(runs[1].join(f)).unwrap(), "{f} differs");
    }
    let table = std::fs::read_to_string(runs[0].join("table.csv")).unwrap();
    assert!(table.starts_with("metric,ATCS,FRFS\n"));
}

#[test]
fn strict_mode_turns_conformance_failures_into_exit_6() {
    // MAM cannot lend TC1's idle constraint to the overloaded TC0, so it
    // blocks far more than FRFS on the same arrivals.
    let dir = tempfile::tempdir().unwrap();
    let scenario = small(dir.path());
    let out = dir.path().join("out");
    let args = ["run", "--scenario", s(&scenario), "--model", "mam,frfs", "--probes", "500", "--out", s(&out)];
    let o = bwbroker(&args);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).contains("mam: exceptionality PASS, non-discrimination PASS, proportionality FAIL"));
    let o = bwbroker(&[&args[..], &["--strict"]].concat());
    assert_eq!(code(&o), 6, "{o:?}");
}

#[test]
fn check_accepts_real_logs_and_rejects_planted_ones() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = small(dir.path());
    let out = dir.path().join("out");
    assert_eq!(code(&bwbroker(&["run", "--scenario", s(&scenario), "--seeds", "1", "--model", "atcs", "--out", s(&out)])), 0);
    let events = out.join("small/atcs/seed-1/events.csv");
    let o = bwbroker(&["check", "--scenario", s(&scenario), "--events", s(&events)]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("exceptionality PASS"));

    let planted = dir.path().join("planted.csv");
    std::fs::write(
        &planted,
        "# bwbroker-events v1\n# scenario: small\n# model: atcs\n# seed: 1\n# duration_ms: 1800000\n\
         time_ms,kind,request,class,bw_kbps,links,phase,cause,site,breakdown\n\
         0,arrival,1,0,1000,0>1,1,,,\n\
         0,block,1,0,1000,0>1,1,,0>1,\n",
    )
    .unwrap();
    let verdict = dir.path().join("verdict.json");
    let o = bwbroker(&["check", "--scenario", s(&scenario), "--events", s(&planted), "--out", s(&verdict)]);
    assert_eq!(code(&o), 6, "{o:?}");
    assert!(stdout(&o).starts_with("exceptionality FAIL"));
    assert!(std::fs::read_to_string(&verdict).unwrap().contains("\"passed\": false"));

    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "not,an,events,file\n1,2,3,4\n").unwrap();
    assert_eq!(code(&bwbroker(&["check", "--scenario", s(&scenario), "--events", s(&garbage)])), 3);
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, SMALL.replace("bc_percent = 60", "bc_percent = 70")).unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&bwbroker(&["run", "--scenario", s(&bad), "--out", s(&out)])), 3);
    std::fs::write(&bad, "name = ").unwrap();
    assert_eq!(code(&bwbroker(&["run", "--scenario", s(&bad), "--out", s(&out)])), 3);

    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&bwbroker(&["transparency", "--scenario", s(&missing)])), 5);

    // A regular file where the output directory should be.
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let o = bwbroker(&["run", "--scenario", s(&small(dir.path())), "--out", s(&blocker)]);
    assert_eq!(code(&o), 5, "{o:?}");

    assert_eq!(code(&bwbroker(&["run"])), 2);
    assert_eq!(code(&bwbroker(&["run", "--scenario", "x", "--model", "bogus"])), 2);
    assert_eq!(code(&bwbroker(&["run", "--scenario", "x", "--seeds", "9-1"])), 2);
    assert_eq!(code(&bwbroker(&["frobnicate"])), 2);
}
