//! End-to-end checks of the binary: determinism, exit codes, and the
//! documented output schema.

use std::process::Command;

fn run(args: &[&str]) -> (String, String, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ringcalc"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code(),
    )
}

#[test]
fn taylor_emits_published_series() {
    let (stdout, _, code) = run(&["taylor", "--nodes", "4", "--k", "4", "--mode", "compressed"]);
    assert_eq!(code, Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(
        v["results"]["expected_queue_per_node"],
        serde_json::json!(["0", "0", "9", "60", "360"])
    );
    assert_eq!(v["results"]["all_empty_state"][1], "-24");
    assert_eq!(v["results"]["converged"], true);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["simulate", "--nodes", "4", "--max-path", "2", "--p", "0.4", "--steps", "5000", "--reps", "2", "--seed", "9"];
    let (a, _, code_a) = run(&args);
    let (b, _, code_b) = run(&args);
    assert_eq!(code_a, Some(0));
    assert_eq!(code_b, Some(0));
    assert_eq!(a, b, "same config and seed must reproduce bytes");
    // Worker count must not change the payload either.
    let mut with_workers: Vec<&str> = args.to_vec();
    with_workers.extend(["--workers", "3"]);
    let (c, _, _) = run(&with_workers);
    let strip = |s: &str| {
        let mut v: serde_json::Value = serde_json::from_str(s).unwrap();
        v["config"]["options"].as_object_mut().unwrap().remove("workers");
        v
    };
    assert_eq!(strip(&a), strip(&c));
}

#[test]
fn envelope_has_config_seed_results_checks() {
    let (stdout, _, _) = run(&["formulas", "eval", "l2-moments", "p=0.4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    for key in ["config", "seed", "results", "checks"] {
        assert!(v.get(key).is_some(), "envelope missing {key}");
    }
    assert_eq!(v["results"]["expected_queue_exact"], "1/5");
}

#[test]
fn usage_errors_exit_two() {
    let (_, _, code) = run(&["simulate", "--bogus-flag"]);
    assert_eq!(code, Some(2));
}

#[test]
fn failed_checks_exit_one() {
    // An unroutable verification: paths file that does not exist.
    let (_, stderr, code) = run(&["butterfly", "verify", "--d", "2", "--paths", "/nonexistent.json", "-A", "0", "-B", "1"]);
    assert_eq!(code, Some(1));
    assert!(!stderr.is_empty());
}

#[test]
fn butterfly_route_verifies() {
    let (stdout, _, code) = run(&["butterfly", "route", "--d", "3", "-A", "0,2,3,5,7", "-B", "1,2,4,5,6"]);
    assert_eq!(code, Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["checks"][0]["pass"], true);
    assert_eq!(v["results"]["paths"]["paths"].as_array().unwrap().len(), 5);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = std::env::temp_dir().join(format!("ringcalc-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("spec.json");
    std::fs::write(&config, r#"{"nodes": 4, "max_path": 2, "p": 0.5}"#).unwrap();
    // p from the flag overrides the file; nodes/max_path come from it.
    let (stdout, _, code) = run(&[
        "simulate", "--config", config.to_str().unwrap(), "--p", "0.4",
        "--steps", "2000", "--reps", "1", "--seed", "1",
    ]);
    assert_eq!(code, Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["config"]["spec"]["nodes"], 4);
    assert_eq!(v["config"]["spec"]["max_path"], 2);
    assert_eq!(v["config"]["spec"]["arrival"]["p"], 0.4);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn compare_l2_passes_at_modest_size() {
    let (stdout, _, code) = run(&[
        "compare", "--l2", "--nodes", "5", "--p", "0.4",
        "--steps", "200000", "--reps", "4", "--seed", "3", "--taylor",
    ]);
    assert_eq!(code, Some(0), "compare failed:\n{stdout}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    for check in v["checks"].as_array().unwrap() {
        assert_eq!(check["pass"], true, "check failed: {check}");
    }
}
