use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const PATH4: &str = r#"{"n":4,"k":2,"edges":[[0,1],[1,2],[2,3]],"costs":[1,1,1,1],"weights":[1,1,1,1],"capacities":[3,3]}"#;

fn memsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memsched")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn solve_exact_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "p4.json", PATH4);
    let out = memsched(&["solve", &file, "--exact"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["outcome"]["makespan"], 2);
    assert_eq!(v["outcome"]["mems"], serde_json::json!([3, 3]));
    assert_eq!(v["instance"]["width"], 1);
    assert!(v["runtime"]["timings_ms"]["dp"].is_number());
}

#[test]
fn solve_fptas_reports_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "p4.json", PATH4);
    let v = json(&memsched(&["solve", &file, "--fptas", "--eps", "0.5"]));
    let cert = &v["outcome"]["certificate"];
    assert_eq!(cert["epsilon"], "1/2");
    assert!(v["outcome"]["makespan"].as_u64().unwrap() <= 3);
    for m in v["outcome"]["mems"].as_array().unwrap() {
        assert!(m.as_u64().unwrap() * 2 <= 3 * 3);
    }
}

#[test]
fn csv_output_has_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "p4.json", PATH4);
    let out = memsched(&["solve", &file, "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("mode,epsilon,n,"));
    assert!(lines.next().unwrap().starts_with("exact,,4,3,2,1,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = memsched(&["solve", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let zero = write(dir.path(), "zero.json", &PATH4.replace("[3,3]", "[0,0]"));
    let out = memsched(&["solve", &zero]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["outcome"]["status"], "infeasible");

    let bad = write(dir.path(), "bad.json", "{\"n\": 3");
    assert_eq!(memsched(&["solve", &bad]).status.code(), Some(1));
    assert_eq!(memsched(&["solve", &zero, "--fptas", "--eps", "3"]).status.code(), Some(1));
}

#[test]
fn gen_then_decompose() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.json");
    let file = file.to_str().unwrap();
    let out = memsched(&["gen", "grid", "1", "6", "--seed", "3", "-o", file]);
    assert_eq!(out.status.code(), Some(0));
    let inst: Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(inst["n"], 6);
    assert_eq!(inst["edges"].as_array().unwrap().len(), 5);

    let v = json(&memsched(&["decompose", file]));
    assert_eq!(v["decomposition"]["width"], 1);
    assert_eq!(v["nice"]["width"], 1);
    assert!(v["nice"]["jl_max"].as_u64() <= v["nice"]["frontier_bound"].as_u64());
}

#[test]
fn gen_ktree_with_unrelated_costs() {
    let out = memsched(&["gen", "ktree", "12", "2", "--machines", "3", "--unrelated", "--costs", "5..7"]);
    let v = json(&out);
    assert_eq!(v["k"], 3);
    let rows = v["costs"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.as_array().unwrap().len() == 3));
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let out = memsched(&["verify", "--seed", "7", "--n", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "pass");

    let out = memsched(&["verify", "--seed", "3", "--n", "6", "--inject-fault", "skip-neighbor-charge"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["verdict"], "fail");
    let small = v["counterexample"]["instance"]["n"].as_u64().unwrap();
    assert!(small <= 6);
}

#[test]
fn bench_writes_one_row_per_case() {
    let out = memsched(&["bench", "--n", "6,7", "--tw", "1", "--eps", "1", "--seeds", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "trimmed_peak"));
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let oracle = headers.iter().position(|h| h == "oracle_makespan").unwrap();
    let exact = headers.iter().position(|h| h == "exact_makespan").unwrap();
    for row in rows {
        if !row[oracle].is_empty() {
            assert_eq!(row[oracle], row[exact]);
        }
    }
}

#[test]
fn pareto_exact_and_approximate() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "p4.json", PATH4);
    let v = json(&memsched(&["pareto", &file, "--exact"]));
    assert_eq!(v["points"], serde_json::json!([[2, 3]]));
    let v = json(&memsched(&["pareto", &file, "--fptas", "--eps", "1"]));
    assert_eq!(v["mode"], "fptas");
    assert!(!v["points"].as_array().unwrap().is_empty());
}

#[test]
fn state_ceiling_is_a_resource_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_memsched"))
        .args(["gen", "grid", "2", "6", "--seed", "1"])
        .output()
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "g.json", std::str::from_utf8(&out.stdout).unwrap());
    let out = Command::new(env!("CARGO_BIN_EXE_memsched"))
        .args(["solve", &file])
        .env("MEMSCHED_STATE_CEILING", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource limit"));
}
