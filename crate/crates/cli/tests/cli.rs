//! End-to-end tests of the workbench binary: output formats, exit codes,
//! and the cache contract.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ghw"));
    cmd.args(args).env_remove("GH_CACHE_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn fresh_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("temp dir");
    dir
}

fn only_file(dir: &PathBuf) -> PathBuf {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .expect("readable")
        .map(|e| e.expect("entry").path())
        .collect();
    assert_eq!(files.len(), 1, "expected exactly one cache entry in {}", dir.display());
    files.pop().expect("one file")
}

#[test]
fn invalid_parameters_are_a_usage_error() {
    let out = run(&["enumerate", "--vertices", "two", "--edges", "3"], &[]);
    assert!(!out.status.success());
    assert!(!stderr(&out).is_empty(), "usage errors must explain themselves on stderr");

    let out = run(&["verify", "nonsense"], &[]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("nonsense"));
}

#[test]
fn homology_of_an_empty_bidegree_reports_betti_zero() {
    let out = run(&["homology", "-i", "1", "-j", "1", "--format", "json"], &[]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).expect("json output");
    assert_eq!(v["dim"], 0);
    assert_eq!(v["betti"], 0);
}

#[test]
fn csv_output_is_a_scalar_summary() {
    let out = run(&["homology", "-i", "2", "-j", "3", "--format", "csv"], &[]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "i,j,dim,rank_d,betti\n2,3,1,0,1\n");
}

#[test]
fn cache_hits_are_byte_identical() {
    let dir = fresh_dir("hits");
    let args = ["boundary", "-i", "2", "-j", "3", "--format", "json"];
    let mut with_cache = args.to_vec();
    with_cache.extend(["--cache-dir", dir.to_str().expect("utf8 path")]);

    let first = run(&with_cache, &[]);
    assert!(first.status.success());
    let entry = only_file(&dir);
    assert_eq!(fs::read_to_string(&entry).expect("readable"), stdout(&first));

    let second = run(&with_cache, &[]);
    assert_eq!(stdout(&second), stdout(&first));

    let uncached = run(&args, &[]);
    assert_eq!(stdout(&uncached), stdout(&first), "hits must equal recomputation");
}

#[test]
fn corrupted_cache_entries_are_recomputed_and_overwritten() {
    let dir = fresh_dir("corrupted");
    let args = [
        "enumerate", "-i", "2", "-j", "3", "--format", "json",
        "--cache-dir", dir.to_str().expect("utf8 path"),
    ];
    let first = run(&args, &[]);
    assert!(first.status.success());
    let entry = only_file(&dir);
    fs::write(&entry, "{ not json").expect("writable");

    let second = run(&args, &[]);
    assert!(second.status.success());
    assert_eq!(stdout(&second), stdout(&first));
    assert!(stderr(&second).contains("corrupted"));
    serde_json::from_str::<Value>(&fs::read_to_string(&entry).expect("readable"))
        .expect("entry was overwritten with valid json");
}

fn cache_key(version: &str, command: &str, params: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(version.as_bytes());
    hasher.update(b"\n");
    hasher.update(command.as_bytes());
    hasher.update(b"\n");
    hasher.update(params.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[test]
fn cache_keys_include_the_artifact_version() {
    let version = concat!("ghw-", env!("CARGO_PKG_VERSION"));
    let planted = "{\n  \"planted\": true\n}\n";

    // An entry under the current version's key is returned verbatim.
    let dir = fresh_dir("version-hit");
    let key = cache_key(version, "chords", "j=2");
    fs::write(dir.join(format!("{key}.json")), planted).expect("writable");
    let out = run(
        &["chords", "-j", "2", "--format", "json", "--cache-dir", dir.to_str().expect("utf8")],
        &[],
    );
    assert_eq!(stdout(&out), planted);

    // The same entry under a different version's key is a miss.
    let dir = fresh_dir("version-miss");
    let stale = cache_key("ghw-0.0.0", "chords", "j=2");
    fs::write(dir.join(format!("{stale}.json")), planted).expect("writable");
    let out = run(
        &["chords", "-j", "2", "--format", "json", "--cache-dir", dir.to_str().expect("utf8")],
        &[],
    );
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).expect("json output");
    assert_eq!(v["count"], 3, "a stale-version entry must not be served");
}

#[test]
fn environment_variable_supplies_the_cache_directory() {
    let dir = fresh_dir("from-env");
    let out = run(
        &["chords", "-j", "1", "--format", "json"],
        &[("GH_CACHE_DIR", dir.to_str().expect("utf8"))],
    );
    assert!(out.status.success());
    only_file(&dir);
}

#[test]
fn unusable_cache_directory_warns_and_still_computes() {
    let dir = fresh_dir("blocked");
    let file = dir.join("occupied");
    fs::write(&file, "not a directory").expect("writable");
    let out = run(
        &["chords", "-j", "2", "--cache-dir", file.to_str().expect("utf8")],
        &[],
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("3 diagrams"));
    assert!(stderr(&out).contains("warning"));
}

#[test]
fn verify_all_passes_cleanly_at_desk_scale() {
    let out = run(
        &["verify", "all", "--n", "2", "--m", "1", "--max-j", "2", "--format", "json"],
        &[],
    );
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).expect("json output");
    assert_eq!(v["passed"], true);
    assert!(v["reports"].as_array().expect("report list").len() > 1);
}

#[test]
fn injected_edge_direction_error_fails_the_battery() {
    let out = run(
        &[
            "verify", "all", "--n", "3", "--m", "0", "--max-j", "3",
            "--inject-sign-error", "edge-direction",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL left_inverse"));
    assert!(text.contains("FAIL right_inverse"));
}

#[test]
fn injected_differential_error_fails_the_battery() {
    let out = run(
        &[
            "verify", "all", "--n", "1", "--m", "0", "--max-j", "6",
            "--inject-sign-error", "ce-parity", "--format", "csv",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(
        text.lines().any(|l| l.starts_with("chain_map,1,0,3,6,172,18,")),
        "expected 18 of 172 words to fail at the sensitive window; got:\n{text}"
    );
}
