use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn rhetoric(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rhetoric"))
        .current_dir(root())
        .env_remove("LLM_API_KEY")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = rhetoric(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn count_lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

/// Stances, two topics of debates and annotation, with the mock backend.
fn generate(out: &Path) {
    ok(out, &["stances", "gen"]);
    ok(out, &["debates", "gen", "--topics", "2"]);
    ok(out, &["annotate", "run"]);
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&rhetoric(tmp.path(), &["stances", "gen", "--bogus"])), 2);
    assert_eq!(code(&rhetoric(tmp.path(), &["nonsense"])), 2);
    assert_eq!(code(&rhetoric(tmp.path(), &["metrics", "agreement", "--scheme", "4"])), 2);
    assert_eq!(code(&rhetoric(tmp.path(), &["analyze", "transcripts", "--scorer", "http"])), 2);
}

#[test]
fn bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\nno_such_key = true\n").unwrap();
    let o = rhetoric(tmp.path(), &["--config", cfg.to_str().unwrap(), "stances", "gen"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_input_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    // debates need the stage-1 outputs
    assert_eq!(code(&rhetoric(tmp.path(), &["debates", "gen"])), 1);
    let o = rhetoric(tmp.path(), &["stances", "gen", "--topics-csv", "does/not/exist.csv"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn live_backend_without_key_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rhetoric(tmp.path(), &["--backend", "live", "stances", "gen"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn dry_run_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let stdout = ok(&out, &["--dry-run", "stances", "gen"]);
    let plan: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(plan["command"], "stances gen");
    assert!(!out.exists());
}

#[test]
fn example_config_loads() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    ok(&out, &["--config", "config/run.example.toml", "--seed", "9", "stances", "gen"]);
    let meta = read_json(&out.join("stances.jsonl.run_meta.json"));
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["backend"], "mock");
    assert_eq!(count_lines(&out.join("stances.jsonl")), 146);
}

#[test]
fn seed_changes_annotation_panel() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&a, &["--seed", "1", "stances", "gen"]);
    ok(&a, &["--seed", "1", "debates", "gen", "--topics", "1"]);
    std::fs::create_dir_all(&b).unwrap();
    for f in ["topics.jsonl", "stances.jsonl", "debates.jsonl"] {
        std::fs::copy(a.join(f), b.join(f)).unwrap();
    }
    ok(&a, &["--seed", "1", "annotate", "run"]);
    ok(&b, &["--seed", "2", "annotate", "run"]);
    assert_ne!(std::fs::read(a.join("personas.json")).unwrap(), std::fs::read(b.join("personas.json")).unwrap());
}

#[test]
fn downstream_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    generate(out);
    assert_eq!(count_lines(&out.join("dialogues.jsonl")), 16);

    ok(out, &["dataset", "split"]);
    let plan = read_json(&out.join("split_plan.json"));
    assert_eq!(plan["mode"], "Random811");
    let n = count_lines(&out.join("corpus.jsonl"));
    let counts = &plan["counts"];
    let total: u64 = ["train", "val", "test_in_domain"].iter().map(|s| counts[s].as_u64().unwrap()).sum();
    assert_eq!(total as usize, n);
    assert_eq!(counts["val"].as_u64().unwrap() as usize, n / 10);

    ok(out, &["export", "training"]);
    let exported: usize = ["train", "val", "test_in_domain"]
        .iter()
        .map(|s| count_lines(&out.join("training").join(format!("{s}.jsonl"))))
        .sum();
    assert_eq!(exported, n);

    // two topics cannot fill 101 training topics
    assert_eq!(code(&rhetoric(out, &["dataset", "split", "--mode", "topic-transfer"])), 1);

    ok(out, &["metrics", "agreement"]);
    ok(out, &["metrics", "loo", "--with-llm"]);
    ok(out, &["metrics", "condition-validity"]);
    ok(out, &["metrics", "external-validity"]);
    let report = read_json(&out.join("metrics_report.json"));
    for key in ["agreement", "loo", "condition_validity", "external_validity"] {
        assert!(report[key]["run_meta"].is_object(), "{key} block missing");
    }
    let kappa = &report["agreement"]["result"]["human"];
    assert!(kappa["five_class"].is_object() && kappa["two_class"].is_object(), "{kappa}");
}

#[test]
fn transcript_analysis() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(out, &["analyze", "transcripts", "--scorer", "panel"]);
    assert_eq!(count_lines(&out.join("arguments.jsonl")), 12);
    ok(out, &["analyze", "trend"]);
    ok(out, &["analyze", "partisan"]);
    let trend = std::fs::read_to_string(out.join("trend.csv")).unwrap();
    assert!(trend.lines().next().unwrap().contains("affect_gap_affective_minus_cognitive_mean"));
    let partisan = std::fs::read_to_string(out.join("partisan.csv")).unwrap();
    assert!(partisan.starts_with("strategy,party,n,mean,ci95"));
    let report = read_json(&out.join("analysis_report.json"));
    for key in ["transcripts", "trend", "partisan"] {
        assert!(report[key].is_object(), "{key} block missing");
    }
}
