//! End-to-end tests for the `pfret` binary: output bytes, exit codes, file
//! handling, the cache round-trip, and the validation subcommand.

use std::fs;
use std::process::{Command, Output};

const P001_SRC: &str =
    "whenever idealConditions SensorSelection shall immediately satisfy q_hat = q";
const P001_OUT: &str = "P>=1[(G (idealConditions => (P>=1[(q_hat = q)])))]";

const P017_SRC: &str = "whenever q_k RunwayIntrusionDetector shall with probability > 0.9999 within 10 ticks satisfy incursionDetected";
const P017_OUT: &str = "P>=1[(G (q_k => (P>0.9999[(F<=10 incursionDetected)])))]";

const P006_SRC: &str = "in auto_takeoff_mode whenever q_k SensorSelection shall with probability > 0.99 at the next timepoint satisfy incursionDetected";

fn pfret() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pfret"))
}

fn run(args: &[&str]) -> Output {
    pfret().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn compile_prints_reference_formulas_byte_exact() {
    let out = run(&["compile", P017_SRC]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), format!("{P017_OUT}\n"));

    let out = run(&["compile", P001_SRC]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), format!("{P001_OUT}\n"));
}

#[test]
fn parse_failure_exits_with_input_error() {
    let out = run(&["compile", "this is not a requirement"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).starts_with("error:"), "stderr: {}", stderr_of(&out));
}

#[test]
fn wall_clock_durations_need_a_tick_configuration() {
    let src = "whenever q_k Comp shall with probability > 0.9999 within 2 seconds satisfy r";
    let out = run(&["compile", src]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("tick duration"),
        "stderr: {}",
        stderr_of(&out)
    );

    let out = run(&["compile", src, "--tick-duration", "100 milliseconds"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(
        stdout_of(&out).contains("F<=20"),
        "stdout: {}",
        stdout_of(&out)
    );
}

#[test]
fn file_input_skips_comments_and_blank_lines() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("reqs.fret");
    fs::write(
        &path,
        format!(
            "# reference corpus extract\n\n{P017_SRC}\n   \n{P001_SRC} # trailing note\n"
        ),
    )
    .expect("write reqs");
    let out = run(&["compile", "--file", path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), format!("{P017_OUT}\n{P001_OUT}\n"));
}

#[test]
fn cache_builds_verifies_and_serves_compiles() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("cache.json");
    let path_str = path.to_str().unwrap();

    let out = run(&["cache", "--out", path_str]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("480"), "stdout: {}", stdout_of(&out));

    let out = run(&["cache", "--verify", path_str]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    // Explicit path: identical bytes to the direct compilation route.
    let cache_arg = format!("--cache={path_str}");
    let out = run(&["compile", &cache_arg, P017_SRC]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), format!("{P017_OUT}\n"));

    // Bare `--cache` resolves through the environment variable.
    let out = pfret()
        .args(["compile", "--cache", P017_SRC])
        .env("FRET_CACHE", path_str)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), format!("{P017_OUT}\n"));
}

#[test]
fn missing_or_unreadable_cache_is_a_cache_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let absent = dir.path().join("absent.json");
    let arg = format!("--cache={}", absent.to_str().unwrap());
    let out = run(&["compile", &arg, P017_SRC]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "not json at all").expect("write garbage");
    let arg = format!("--cache={}", garbage.to_str().unwrap());
    let out = run(&["compile", &arg, P017_SRC]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn tampered_cache_verification_names_the_offending_key() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("cache.json");
    let path_str = path.to_str().unwrap();
    let out = run(&["cache", "--out", path_str]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let mut doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).expect("read cache")).expect("cache json");
    let key = "null,holding,bound,within";
    let donor = doc["templates"]["null,holding,bound,eventually"]["formula"].clone();
    doc["templates"][key]["formula"] = donor;
    fs::write(&path, serde_json::to_string_pretty(&doc).expect("serialize")).expect("write");

    let out = run(&["cache", "--verify", path_str]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains(key), "stderr: {}", stderr_of(&out));
}

#[test]
fn validate_single_key_writes_a_report() {
    let dir = tempfile::tempdir().expect("tempdir");
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "validate",
        "--keys",
        "null,holding,bound,within",
        "--models-per-key",
        "50",
        "--seed",
        "24301",
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).expect("read report"))
            .expect("report json");
    assert_eq!(report["comparisons"], 50);
    assert_eq!(report["agreements"], 50);
    assert_eq!(report["keys"][0]["key"], "null,holding,bound,within");
}

#[test]
fn mutated_compilation_fails_validation_with_exit_code_three() {
    let out = run(&["validate", "--mutate", "weak-to-optional", "--seed", "24301"]);
    assert_eq!(out.status.code(), Some(3), "stdout: {}", stdout_of(&out));
    assert!(
        stdout_of(&out).contains("disagree"),
        "stdout: {}",
        stdout_of(&out)
    );
}

#[test]
fn emit_prism_pair_writes_model_and_property_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = run(&[
        "validate",
        "--keys",
        "in,holding,bound,next",
        "--models-per-key",
        "3",
        "--emit-prism-pair",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    for index in 0..3 {
        let model_path = dir.path().join(format!("in-holding-bound-next-{index}.pm"));
        let property_path = dir.path().join(format!("in-holding-bound-next-{index}.pctl"));
        let model_text = fs::read_to_string(&model_path).expect("model file");
        pfret_core::dtmc::Dtmc::parse_prism_model(&model_text).expect("model file parses");
        let property_text = fs::read_to_string(&property_path).expect("property file");
        pfret_core::pctl::parse_prism(property_text.trim_end()).expect("property file parses");
    }
}

#[test]
fn explain_emits_the_pipeline_stages_as_json() {
    let out = run(&["compile", "--explain", P006_SRC]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&stdout_of(&out)).expect("explain output is json");
    assert_eq!(doc["key"], "in,holding,bound,next");
    assert!(
        doc["formula"].as_str().unwrap().contains("(X incursionDetected)"),
        "formula: {}",
        doc["formula"]
    );
}
