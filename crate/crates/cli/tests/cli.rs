mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn polybias(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polybias"))
        .current_dir(dir)
        .args(args)
        .env("POLYBIAS_LOG", "warn")
        .env_remove("POLYBIAS_OUTPUT_DIR")
        .env_remove("POLYBIAS_BACKEND_ENDPOINT")
        .output()
        .unwrap()
}

fn run_file(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = polybias(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("evaluate"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(polybias(dir.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn missing_run_file_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = polybias(dir.path(), &["-c", "absent.toml", "evaluate"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn unknown_dataset_kind_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_english_corpus(dir.path(), 5);
    let text = reference_run_file("r", "out", None).replace("kind = \"bbq\"", "kind = \"winogender\"");
    let cfg = run_file(dir.path(), "run.toml", &text);
    let o = polybias(dir.path(), &["-c", &cfg, "validate"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("winogender"));
}

#[test]
fn missing_required_exclusions_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write_english_corpus(dir.path(), 5);
    let text = reference_run_file("r", "out", None).replace(
        "path = \"data/bbq_en.jsonl\"",
        "path = \"data/bbq_en.jsonl\"\nexclusions = \"missing.json\"\nrequire_exclusions = true",
    );
    let cfg = run_file(dir.path(), "run.toml", &text);
    let o = polybias(dir.path(), &["-c", &cfg, "evaluate"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!dir.path().join("out/r/metrics.json").exists());
}

#[test]
fn unreachable_backend_is_transport_error() {
    let dir = tempfile::tempdir().unwrap();
    write_english_corpus(dir.path(), 5);
    // bind then drop a listener so the port is closed
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let text = reference_run_file("r", "out", None).replace(
        "backend_kind = \"reference\"",
        &format!("backend_kind = \"remote\"\nendpoint = \"http://127.0.0.1:{port}\"\ntimeout_secs = 2\nmax_retries = 0"),
    );
    let cfg = run_file(dir.path(), "run.toml", &text);
    let o = polybias(dir.path(), &["-c", &cfg, "evaluate"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn validate_reports_datasets() {
    let dir = tempfile::tempdir().unwrap();
    write_english_corpus(dir.path(), 5);
    let cfg = run_file(dir.path(), "run.toml", &reference_run_file("r", "out", None));
    let o = polybias(dir.path(), &["-c", &cfg, "validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["datasets"].as_array().unwrap().len(), 3);
}

#[test]
fn rerun_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_english_corpus(dir.path(), 12);
    let cfg = run_file(dir.path(), "run.toml", &reference_run_file("r", "out", None));
    let mut trees = Vec::new();
    for _ in 0..2 {
        for cmd in ["evaluate", "report"] {
            let o = polybias(dir.path(), &["-c", &cfg, cmd]);
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        }
        trees.push(tree(&dir.path().join("out/r")));
    }
    assert!(trees[0].iter().any(|(p, _)| p.ends_with("report/crows_heatmap.svg")));
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn output_dir_override_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    write_english_corpus(dir.path(), 4);
    let cfg = run_file(dir.path(), "run.toml", &reference_run_file("r", "out", None));
    let o = Command::new(env!("CARGO_BIN_EXE_polybias"))
        .current_dir(dir.path())
        .args(["-c", &cfg, "evaluate"])
        .env("POLYBIAS_LOG", "warn")
        .env("POLYBIAS_OUTPUT_DIR", "elsewhere")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("elsewhere/r/metrics.json").is_file());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn annotate_export_after_translate() {
    let dir = tempfile::tempdir().unwrap();
    write_english_corpus(dir.path(), 6);
    let text = format!(
        "{}
[translate]
source_language = \"en\"
target_languages = [\"fr\"]
review_sample_size = 4

[[translate.providers]]
kind = \"mock\"
id = \"mock\"

[annotate]
database = \"out/r/annotations.sqlite\"
samples = [\"out/r/review/crows_pairs_fr.json\"]

[[annotate.annotators]]
id = \"a-1\"
languages = [\"fr\"]
",
        reference_run_file("r", "out", None)
    );
    let cfg = run_file(dir.path(), "run.toml", &text);
    let o = polybias(dir.path(), &["-c", &cfg, "translate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("out/r/review/crows_pairs_fr.json").is_file());

    let o = polybias(dir.path(), &["-c", &cfg, "annotate-export"]);
    assert_eq!(o.status.code(), Some(1), "a missing token is a usage error: {}", stderr(&o));
    assert!(stderr(&o).contains("POLYBIAS_ANNOTATOR_A_1_TOKEN"));

    let o = Command::new(env!("CARGO_BIN_EXE_polybias"))
        .current_dir(dir.path())
        .args(["-c", &cfg, "annotate-export"])
        .env("POLYBIAS_LOG", "warn")
        .env("POLYBIAS_ANNOTATOR_A_1_TOKEN", "secret")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ann = dir.path().join("out/r/annotations");
    for f in ["annotations.json", "exclusions.json", "summary.json", "agreement.json"] {
        assert!(ann.join(f).is_file(), "{f}");
    }
    let exclusions: serde_json::Value =
        serde_json::from_slice(&std::fs::read(ann.join("exclusions.json")).unwrap()).unwrap();
    assert_eq!(exclusions["ids"], serde_json::json!([]));
}
