//! Drives the installed binary end to end: envelope shape, byte-identical
//! reruns, config precedence, context files, report files, and the exit
//! code contract.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use cebotarev::cset::ContextSpec;
use cebotarev::{FiniteGroup, GroupSpec};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cebotarev"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn payload(out: &Output) -> Value {
    let doc: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    doc["payload"].clone()
}

fn group_spec(g: &FiniteGroup) -> GroupSpec {
    let n = g.order();
    let table = (0..n)
        .map(|a| (0..n).map(|b| g.mul(a, b)).collect())
        .collect();
    GroupSpec { table: Some(table), permutation_generators: None }
}

fn write_heisenberg_context(dir: &Path) -> String {
    let g = FiniteGroup::heisenberg(3).unwrap();
    let (sigma, tau, rho) = FiniteGroup::heisenberg_generators(3);
    let center = g.center();
    let spec = ContextSpec {
        group: group_spec(&g),
        fields: [("L".to_string(), center.members().to_vec())].into(),
        elements: [
            ("sigma".to_string(), sigma),
            ("tau".to_string(), tau),
            ("rho".to_string(), rho),
        ]
        .into(),
    };
    let path = dir.join("heis3.json");
    std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        vec!["frobenius", "2", "--quad", "5"],
        vec!["metric", "delta", "5", "11", "--compat"],
        vec!["sieve", "--pred", "quad(-1)=1 & quad(5)=-1", "--bound", "5000"],
        vec!["topology", "separate", "7", "2"],
        vec!["metric", "partition", "4", "--compat"],
    ] {
        let first = run(&args);
        let second = run(&args);
        assert_eq!(first.status.code(), Some(0), "{args:?} failed");
        assert_eq!(
            first.stdout, second.stdout,
            "stdout differs between runs of {args:?}"
        );
    }
}

#[test]
fn frobenius_example_has_the_documented_payload() {
    let out = run(&["frobenius", "2", "--quad", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(payload(&out), serde_json::json!({ "symbol": "inert" }));
}

#[test]
fn cset_density_of_central_class_is_one_twentyseventh() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = write_heisenberg_context(dir.path());
    let out = run(&[
        "cset", "density", "--context", &ctx, "--level", "N", "--class-of", "rho",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(payload(&out), serde_json::json!({ "density": "1/27" }));

    // The same element by numeric index, at the coarser level.
    let out = run(&[
        "cset", "show", "--context", &ctx, "--level", "L", "--class-of", "9",
    ]);
    let p = payload(&out);
    assert_eq!(p["density"], "1/9");
    assert_eq!(p["level"], "L");

    let out = run(&[
        "cset", "equal", "--context", &ctx,
        "--level-a", "N", "--class-a", "sigma",
        "--level-b", "L", "--class-b", "sigma",
    ]);
    assert_eq!(payload(&out), serde_json::json!({ "almost_equal": true }));

    let out = run(&[
        "cset", "bauer-subset", "--context", &ctx,
        "--level-a", "N", "--class-a", "rho",
        "--level-b", "L", "--class-b", "rho",
    ]);
    assert_eq!(payload(&out), serde_json::json!({ "bauer_subset": true }));
}

#[test]
fn group_info_reads_both_file_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("q8.json");
    std::fs::write(
        &table_path,
        serde_json::to_string(&group_spec(&FiniteGroup::quaternion())).unwrap(),
    )
    .unwrap();
    let out = run(&["group", "info", "--group", table_path.to_str().unwrap()]);
    let p = payload(&out);
    assert_eq!(p["order"], 8);
    assert_eq!(p["abelian"], false);
    assert_eq!(p["class_count"], 5);

    let perm_path = dir.path().join("s3.json");
    std::fs::write(
        &perm_path,
        r#"{ "permutation_generators": ["(1 2 3)", "(1 2)"] }"#,
    )
    .unwrap();
    let out = run(&["group", "info", "--group", perm_path.to_str().unwrap()]);
    let p = payload(&out);
    assert_eq!(p["order"], 6);
    assert_eq!(p["class_count"], 3);
}

#[test]
fn report_files_are_schema_versioned_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let args = [
        "report", "density-audit",
        "--out", out_path.to_str().unwrap(),
        "--universe", "-1,5,2",
        "--sieve-bound", "20000",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0));
    let first_bytes = std::fs::read(&out_path).unwrap();
    let doc: Value = serde_json::from_slice(&first_bytes).unwrap();
    assert_eq!(doc["schema"], "cebotarev.density-audit.v1");
    assert_eq!(doc["config"]["sieve_bound"], 20000);
    assert_eq!(doc["data"]["rows"].as_array().unwrap().len(), 8);

    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first_bytes, std::fs::read(&out_path).unwrap());

    // An empty prime range still writes a schema-valid comparison report.
    let empty_path = dir.path().join("empty.json");
    let out = run(&[
        "report", "compat-comparison",
        "--out", empty_path.to_str().unwrap(),
        "--sieve-bound", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(payload(&out)["records"], 0);
    let doc: Value =
        serde_json::from_slice(&std::fs::read(&empty_path).unwrap()).unwrap();
    assert_eq!(doc["schema"], "cebotarev.compat-comparison.v1");
    assert_eq!(doc["data"], serde_json::json!([]));
}

#[test]
fn config_file_is_honored_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{ "sieve_bound": 1000, "compat": true }"#).unwrap();
    let out = run(&[
        "metric", "delta", "5", "11", "--config", cfg.to_str().unwrap(),
    ]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["compat"], true);
    assert_eq!(doc["config"]["sieve_bound"], 1000);
    assert_eq!(doc["payload"]["literal"], "1/3");

    let out = run(&[
        "metric", "delta", "5", "11",
        "--config", cfg.to_str().unwrap(),
        "--sieve-bound", "500",
    ]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["sieve_bound"], 500);
}

#[test]
fn errors_are_structured_with_the_exit_code_contract() {
    // Malformed input: exit 2.
    let out = run(&["frobenius", "9", "--quad", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["error"]["kind"], "input");
    assert_eq!(doc["status"], 2);

    // Unknown flags and malformed files are input errors too.
    assert_eq!(run(&["frobenius", "7", "--nope"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["group", "info", "--group", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    let out = run(&["topology", "member", "7", "--set", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // A presentation whose exceptions are not prime is rejected.
    let set = dir.path().join("set.json");
    std::fs::write(
        &set,
        r#"{ "clauses": [[{ "quad": -1, "sign": 1 }]], "added": [4], "removed": [] }"#,
    )
    .unwrap();
    let out = run(&["topology", "member", "7", "--set", set.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // An unsatisfiable search bound: exit 3.
    let out = run(&["metric", "partition", "3", "--dmax", "3", "--disc-bound", "3"]);
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["error"]["kind"], "search-exhausted");

    // Help is a success, not an error.
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sieve_and_topology_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();

    let out = run(&["sieve", "--pred", "cyclo(8)=1", "--bound", "300", "--limit", "5"]);
    let p = payload(&out);
    assert_eq!(p["members"], serde_json::json!([17, 41, 73, 89, 97]));
    assert_eq!(p["truncated"], true);

    // Complement round trip: the complement of the split set within its own
    // universe is the non-split set plus the ramified prime.
    let set = dir.path().join("split.json");
    std::fs::write(
        &set,
        r#"{ "clauses": [[{ "quad": -1, "sign": 1 }]] }"#,
    )
    .unwrap();
    let out = run(&["topology", "complement", "--set", set.to_str().unwrap()]);
    let p = payload(&out);
    assert_eq!(p["universe"], serde_json::json!([-1]));
    let clauses = p["result"]["clauses"].as_array().unwrap();
    assert_eq!(clauses.len(), 1);

    let out = run(&["topology", "member", "2", "--set", set.to_str().unwrap()]);
    assert_eq!(payload(&out)["member"], false);

    // Matrix CSV lands on disk with the documented golden content.
    let csv = dir.path().join("m.csv");
    let out = run(&["metric", "matrix", "--primes", "2,3,5", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap(),
        "delta,2,3,5\n2,0,1/2,1/4\n3,1/2,0,1/2\n5,1/4,1/2,0\n"
    );
}
