use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn instances() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn vpcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpcn")).args(args).output().expect("binary runs")
}

fn instance(name: &str) -> String {
    instances().join(format!("{name}.toml")).to_string_lossy().into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Relaying through B costs 3, more than the budget, so A -> C needs a
/// virtual channel whose creation cost exhausts the budget.
const VC_NEEDED: &str = r#"
nodes = ["A", "B", "C"]
budget = 2
max_level = 0

[vc_defaults]
creation_cost = 2

[[payment_channels]]
endpoints = ["A", "B"]
balance_1 = 10
balance_2 = 0
base_fee_1 = 3

[[payment_channels]]
endpoints = ["B", "C"]
balance_1 = 10
balance_2 = 0
base_fee_1 = 3

[[demand]]
source = "A"
receiver = "C"
amount = 10
"#;

#[test]
fn bundled_instances_match_the_oracle() {
    for entry in std::fs::read_dir(instances()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = vpcn(&["check", path.to_str().unwrap()]);
            assert_eq!(code(&out), 0, "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
            assert!(stdout(&out).contains("match"));
        }
    }
}

#[test]
fn optimize_reports_objective() {
    let out = vpcn(&["optimize", &instance("empty_demand")]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("objective: 0\n"));

    let out = vpcn(&["optimize", &instance("two_node")]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("status: optimal\n"));
    assert!(stdout(&out).contains("objective: 40\n"));
}

#[test]
fn emitted_files_match_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["lp", "mps"] {
        let out_path = dir.path().join(format!("two_node.{format}"));
        let out = vpcn(&["emit", &instance("two_node"), "--format", format, "--out", out_path.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        let golden = std::fs::read_to_string(instances().join("golden").join(format!("two_node.{format}"))).unwrap();
        assert_eq!(std::fs::read_to_string(&out_path).unwrap(), golden);
    }
}

#[test]
fn validate_prints_counts() {
    let out = vpcn(&["validate", &instance("relay_or_vc")]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("model ok"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&vpcn(&[])), 1);
    assert_eq!(code(&vpcn(&["optimize"])), 1);
    assert_eq!(code(&vpcn(&["emit", &instance("two_node"), "--format", "xml", "--out", "x"])), 1);
    assert_eq!(code(&vpcn(&["--help"])), 0);
}

#[test]
fn unreadable_or_invalid_instances_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&vpcn(&["optimize", "/nonexistent/instance.toml"])), 2);
    let bad = write(dir.path(), "bad.toml", "nodes = [\"A\"]\nbudget = \"lots\"\n");
    assert_eq!(code(&vpcn(&["optimize", &bad])), 2);
    let unknown = write(dir.path(), "unknown.toml", "nodes = [\"A\", \"B\"]\nbudget = 0\n\n[[demand]]\nsource = \"A\"\nreceiver = \"Z\"\namount = 1\n");
    assert_eq!(code(&vpcn(&["validate", &unknown])), 2);
}

#[test]
fn oracle_refuses_instances_outside_its_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let big = write(dir.path(), "big.toml", "nodes = [\"A\", \"B\", \"C\", \"D\", \"E\", \"F\"]\nbudget = 0\n");
    let out = vpcn(&["oracle", &big]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn model_size_limit_exits_with_three() {
    assert_eq!(code(&vpcn(&["optimize", &instance("square"), "--max-vars", "10"])), 3);
}

#[test]
fn optimized_solution_replays_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "vc.toml", VC_NEEDED);
    let report = dir.path().join("solution.toml");
    let out = vpcn(&["optimize", &inst, "--out", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("virtual channels: 1\n"));

    for extra in [None, Some("--reverse")] {
        let mut args = vec!["replay", inst.as_str(), report.to_str().unwrap()];
        args.extend(extra);
        let out = vpcn(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }

    // paying the creation cost from the channel leaves too little to open it
    let out = vpcn(&["replay", &inst, report.to_str().unwrap(), "--creation-fee", "channel"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn flags_override_instance_values() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "vc.toml", VC_NEEDED);
    let out = vpcn(&["optimize", &inst]);
    assert!(stdout(&out).contains("objective: 10\n"));
    let out = vpcn(&["optimize", &inst, "--budget", "1"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("objective: 0\n"));
    let out = vpcn(&["optimize", &inst, "--budget", "1", "--max-level", "1"]);
    assert!(stdout(&out).contains("objective: 0\n"));
}
