//! Drives the compiled binary end to end: a benchmark is recorded into a
//! replay cache through the library, then the binary replays it offline
//! and must produce a byte-identical report on every run.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use veritab::agents::{AgentBinding, AgentRole, TemplateSet};
use veritab::bench::{
    run_benchmark, BaselinePrompts, DatasetName, DatasetSpec, RunConfig, Variant,
};
use veritab::gateway::{Gateway, Mode, ModelEndpoint, ScriptStep};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

fn record_cache(cache: &Path, dataset: &Path) {
    let answer = |verdict: &str| {
        ScriptStep::Reply(format!(
            "<explanation>Checked the cited cells against the table.</explanation>\n{verdict}"
        ))
    };
    let gateway = Gateway::scripted(
        vec![ModelEndpoint::new("primary")],
        vec![
            answer("support"),
            answer("refute"),
            answer("support"),
            answer("refute"),
        ],
    )
    .with_replay(cache, Mode::Record)
    .unwrap();
    let spec = DatasetSpec::builtin(DatasetName::FinDVerTestmini);
    let mut cfg = RunConfig::new(spec, dataset, Variant::WCot);
    cfg.bindings = vec![AgentBinding::new(AgentRole::Executor, "primary")];
    cfg.parallelism = 1;
    let report = run_benchmark(
        &cfg,
        &TemplateSet::builtin(),
        &BaselinePrompts::builtin(),
        &gateway,
        None,
    )
    .unwrap();
    assert_eq!(report.evaluated, 4);
}

fn find_report(out: &Path) -> PathBuf {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1, "one run directory per invocation");
    dirs.pop().unwrap().join("report.json")
}

#[test]
fn recorded_benchmark_replays_through_the_binary() {
    let work = tempfile::tempdir().unwrap();
    let cache = work.path().join("cache");
    let dataset = fixture("datasets/native_tiny.jsonl");
    record_cache(&cache, &dataset);

    let config_path = work.path().join("run.toml");
    fs::write(
        &config_path,
        format!(
            r#"
mode = "replay"
replay_dir = {cache:?}

[[endpoints]]
id = "primary"

[bindings.wCOT]
executor = "primary"

[datasets]
"FinDVer-TM" = {dataset:?}
"#,
            cache = cache.display().to_string(),
            dataset = dataset.display().to_string(),
        ),
    )
    .unwrap();

    let mut reports = Vec::new();
    for pass in ["first", "second"] {
        let out = work.path().join(pass);
        let result = Command::new(env!("CARGO_BIN_EXE_veritab"))
            .args(["--config"])
            .arg(&config_path)
            .args(["--mode", "replay", "--out"])
            .arg(&out)
            .args(["bench", "--dataset", "FinDVer-TM", "--variant", "wCOT"])
            .output()
            .unwrap();
        let stdout = String::from_utf8_lossy(&result.stdout).into_owned();
        assert!(
            result.status.success(),
            "exit {:?}\nstdout: {stdout}\nstderr: {}",
            result.status.code(),
            String::from_utf8_lossy(&result.stderr)
        );
        assert!(stdout.contains("accuracy: 1"), "stdout: {stdout}");
        assert!(stdout.contains("evaluated: 4 failed: 0"), "stdout: {stdout}");
        reports.push(fs::read(find_report(&out)).unwrap());
    }
    assert_eq!(
        reports[0], reports[1],
        "replayed reports must be byte-identical"
    );
}

#[test]
fn replay_without_recording_exits_with_the_cache_miss_code() {
    let work = tempfile::tempdir().unwrap();
    let cache = work.path().join("empty-cache");
    fs::create_dir_all(&cache).unwrap();
    let dataset = fixture("datasets/native_tiny.jsonl");

    let config_path = work.path().join("run.toml");
    fs::write(
        &config_path,
        format!(
            r#"
replay_dir = {cache:?}

[[endpoints]]
id = "primary"

[bindings.wCOT]
executor = "primary"

[datasets]
"FinDVer-TM" = {dataset:?}
"#,
            cache = cache.display().to_string(),
            dataset = dataset.display().to_string(),
        ),
    )
    .unwrap();

    let result = Command::new(env!("CARGO_BIN_EXE_veritab"))
        .args(["--config"])
        .arg(&config_path)
        .args(["--mode", "replay", "--out"])
        .arg(work.path().join("out"))
        .args(["bench", "--dataset", "FinDVer-TM", "--variant", "wCOT"])
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(4), "cache miss is exit 4");
}
