//! End-to-end CLI behavior: exit codes, output contracts, and the
//! train → detect → eval flow over real files.

mod support;

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use support::http::{StubResponse, StubServer};

fn gauntlet(args: &[&str], stdin: Option<&str>, dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gauntlet"));
    cmd.args(args)
        .current_dir(dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("spawn gauntlet");
    if let Some(text) = stdin {
        child
            .stdin
            .as_mut()
            .unwrap()
            .write_all(text.as_bytes())
            .unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().expect("collect gauntlet output")
}

fn stdout_str(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_str(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn write_lines(path: &Path, lines: &[&str]) {
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn help_exits_zero_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--help"],
        vec!["train-lm", "--help"],
        vec!["train-clf", "--help"],
        vec!["perturb", "--help"],
        vec!["detect", "--help"],
        vec!["eval", "--help"],
    ] {
        let out = gauntlet(&args, None, dir.path());
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(stdout_str(&out).contains("Usage"), "{args:?}");
    }
    // no files were created by help
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn train_lm_prints_stats_and_writes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write_lines(
        &corpus,
        &[
            "The method provides a clear, simple summary of the topic.",
            "The answer stays plain, and it reads well throughout.",
        ],
    );
    let out = gauntlet(
        &[
            "train-lm",
            "--corpus",
            "corpus.txt",
            "--order",
            "3",
            "--alpha",
            "0.1",
            "--mode",
            "char",
            "--out",
            "lm.bin",
        ],
        None,
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let stdout = stdout_str(&out);
    assert!(stdout.contains("vocab size:"), "{stdout}");
    assert!(stdout.contains("corpus tokens:"), "{stdout}");
    assert!(dir.path().join("lm.bin").exists());
}

#[test]
fn train_lm_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    // missing --corpus is a usage error
    let out = gauntlet(&["train-lm", "--out", "lm.bin"], None, dir.path());
    assert_eq!(code(&out), 1);
    assert!(
        stderr_str(&out).to_lowercase().contains("usage") || stderr_str(&out).contains("--corpus")
    );

    // empty corpus file is a data error
    std::fs::write(dir.path().join("empty.txt"), "").unwrap();
    let out = gauntlet(
        &["train-lm", "--corpus", "empty.txt", "--out", "lm.bin"],
        None,
        dir.path(),
    );
    assert_eq!(code(&out), 2, "stderr: {}", stderr_str(&out));

    // unreadable corpus path is a data error
    let out = gauntlet(
        &["train-lm", "--corpus", "missing.txt", "--out", "lm.bin"],
        None,
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn train_clf_on_separable_corpora_reports_unit_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let ai: Vec<String> = (0..30).map(|i| format!("aaaa aaaa aaaa {i}")).collect();
    let human: Vec<String> = (0..30).map(|i| format!("bbbb bbbb bbbb {i}")).collect();
    write_lines(
        &dir.path().join("ai.txt"),
        &ai.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
    );
    write_lines(
        &dir.path().join("human.txt"),
        &human.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
    );
    let args = [
        "train-clf",
        "--ai",
        "ai.txt",
        "--human",
        "human.txt",
        "--out",
        "clf.bin",
        "--epochs",
        "500",
        "--learning-rate",
        "0.5",
        "--feature-dim",
        "4096",
    ];
    let out = gauntlet(&args, None, dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    assert!(
        stdout_str(&out).contains("accuracy: 1.0000"),
        "{}",
        stdout_str(&out)
    );
    let first = std::fs::read(dir.path().join("clf.bin")).unwrap();

    // retraining is byte-for-byte reproducible
    let out = gauntlet(&args, None, dir.path());
    assert_eq!(code(&out), 0);
    let second = std::fs::read(dir.path().join("clf.bin")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn train_clf_one_class_or_missing_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    write_lines(&dir.path().join("ai.txt"), &["aaaa"]);
    std::fs::write(dir.path().join("none.txt"), "").unwrap();
    let out = gauntlet(
        &[
            "train-clf",
            "--ai",
            "ai.txt",
            "--human",
            "none.txt",
            "--out",
            "clf.bin",
        ],
        None,
        dir.path(),
    );
    assert_eq!(code(&out), 2);

    let out = gauntlet(
        &[
            "train-clf",
            "--ai",
            "ai.txt",
            "--human",
            "missing.txt",
            "--out",
            "clf.bin",
        ],
        None,
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn perturb_spaceinfi_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let out = gauntlet(
        &["perturb", "--strategy", "spaceinfi", "--seed", "0"],
        Some("a,b"),
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_str(&out), "a ,b");
    assert!(stderr_str(&out).contains("applied=true"));
    assert!(stderr_str(&out).contains("offset=1"));
}

#[test]
fn perturb_without_commas_flags_the_noop() {
    let dir = tempfile::tempdir().unwrap();
    let out = gauntlet(
        &["perturb", "--strategy", "spaceinfi", "--seed", "3"],
        Some("no commas here"),
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_str(&out), "no commas here");
    assert!(stderr_str(&out).contains("applied=false"));
}

#[test]
fn perturb_rejects_prompt_and_unknown_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let out = gauntlet(&["perturb", "--strategy", "slang"], Some("x"), dir.path());
    assert_eq!(code(&out), 1);
    assert!(stderr_str(&out).contains("eval"));

    let out = gauntlet(
        &["perturb", "--strategy", "nonsense"],
        Some("x"),
        dir.path(),
    );
    assert_eq!(code(&out), 1);
}

fn train_small_lm(dir: &Path) {
    let docs: Vec<String> = gauntlet_core::synth::clean_training_corpus(20_000, 99)
        .into_iter()
        .collect();
    write_lines(
        &dir.join("train.txt"),
        &docs.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
    );
    let out = gauntlet(
        &[
            "train-lm",
            "--corpus",
            "train.txt",
            "--order",
            "4",
            "--alpha",
            "0.1",
            "--mode",
            "char",
            "--out",
            "lm.bin",
        ],
        None,
        dir,
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
}

#[test]
fn detect_reports_scores_and_spaceinfi_raises_perplexity() {
    let dir = tempfile::tempdir().unwrap();
    train_small_lm(dir.path());
    std::fs::write(
        dir.path().join("det.json"),
        r#"{"kind":"perplexity","model":"lm.bin","thresholds":{"ppl_cut":1000.0,"burst_cut":1000.0}}"#,
    )
    .unwrap();

    let text = "The method provides a clear, simple summary of the topic.";
    let out = gauntlet(
        &["detect", "--detector", "det.json"],
        Some(text),
        dir.path(),
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    let result: serde_json::Value = serde_json::from_str(stdout_str(&out).trim()).unwrap();
    assert_eq!(result["verdict"], "AI"); // scores far below the huge cuts
    let before = result["perplexity"].as_f64().unwrap();

    let edited = gauntlet_core::perturb::space_infi(text, 0).text;
    let out = gauntlet(
        &["detect", "--detector", "det.json"],
        Some(&edited),
        dir.path(),
    );
    let result: serde_json::Value = serde_json::from_str(stdout_str(&out).trim()).unwrap();
    let after = result["perplexity"].as_f64().unwrap();
    assert!(after > before, "{after} <= {before}");
}

#[test]
fn detect_missing_model_is_a_config_error_and_remote_failure_is_network() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("missing.json"),
        r#"{"kind":"perplexity","model":"nope.bin","thresholds":{"ppl_cut":5.0,"burst_cut":1.0}}"#,
    )
    .unwrap();
    let out = gauntlet(
        &["detect", "--detector", "missing.json"],
        Some("text"),
        dir.path(),
    );
    assert_eq!(code(&out), 1);

    // a remote endpoint nobody listens on
    std::fs::write(
        dir.path().join("remote.json"),
        r#"{"kind":"remote","id":"svc","url":"http://127.0.0.1:9/detect",
            "response_field":"ai_score","mapping":{"score":{"ai_threshold":0.5}},
            "timeout_secs":1}"#,
    )
    .unwrap();
    let out = gauntlet(
        &["detect", "--detector", "remote.json"],
        Some("text"),
        dir.path(),
    );
    assert_eq!(code(&out), 3, "stderr: {}", stderr_str(&out));
}

fn write_eval_fixtures(dir: &Path) {
    train_small_lm(dir);
    // benchmark with pre-generated responses: no gateway needed
    let items: Vec<String> = gauntlet_core::synth::ai_corpus(6, 123)
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            serde_json::json!({"id": format!("item-{i}"), "question": format!("q{i}"), "response": text})
                .to_string()
        })
        .collect();
    write_lines(
        &dir.join("bench.jsonl"),
        &items.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
    );
    std::fs::write(
        dir.join("run.json"),
        r#"{
            "benchmarks": [{"path": "bench.jsonl", "format": "json_lines"}],
            "strategies": [{"kind": "noprompt"}, {"kind": "spaceinfi"}],
            "detectors": [{"kind": "perplexity", "model": "lm.bin",
                           "thresholds": {"ppl_cut": 2.0, "burst_cut": 0.05}}],
            "seed": 7,
            "output_dir": "out"
        }"#,
    )
    .unwrap();
}

#[test]
fn eval_writes_accounting_consistent_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_eval_fixtures(dir.path());
    let out = gauntlet(&["eval", "--config", "run.json"], None, dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", stderr_str(&out));
    // markdown table lands on stdout
    assert!(stdout_str(&out).contains("| noprompt |"));

    let csv = std::fs::read_to_string(dir.path().join("out/bench.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "strategy,detector,evaded,detected,tie,undetermined,evasion_rate"
    );
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let total: usize = fields[2..6]
            .iter()
            .map(|f| f.parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, 6, "cell accounting in {line}");
    }
    assert!(dir.path().join("out/bench.json").exists());
    assert!(dir.path().join("out/bench.md").exists());
}

#[test]
fn eval_missing_benchmark_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    write_eval_fixtures(dir.path());
    std::fs::remove_file(dir.path().join("bench.jsonl")).unwrap();
    let out = gauntlet(&["eval", "--config", "run.json"], None, dir.path());
    assert_eq!(code(&out), 2, "stderr: {}", stderr_str(&out));
}

#[test]
fn eval_bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), "{\"benchmarks\": []}").unwrap();
    let out = gauntlet(&["eval", "--config", "run.json"], None, dir.path());
    assert_eq!(code(&out), 1);

    let out = gauntlet(&["eval", "--config", "absent.json"], None, dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn eval_offline_cold_cache_is_a_network_error() {
    let dir = tempfile::tempdir().unwrap();
    write_eval_fixtures(dir.path());
    // a prompt strategy forces generation; offline with a cold cache fails
    let server = StubServer::start(vec![StubResponse::completion("unused")]);
    let config = format!(
        r#"{{
            "benchmarks": [{{"path": "bench.jsonl", "format": "json_lines"}}],
            "strategies": [{{"kind": "slang"}}],
            "detectors": [{{"kind": "perplexity", "model": "lm.bin",
                           "thresholds": {{"ppl_cut": 2.0, "burst_cut": 0.05}}}}],
            "cache_dir": "cache",
            "llm": {{"base_url": "{}", "model_name": "stub"}},
            "output_dir": "out"
        }}"#,
        server.url("/v1/chat")
    );
    std::fs::write(dir.path().join("offline.json"), config).unwrap();
    let out = gauntlet(
        &["eval", "--config", "offline.json", "--offline"],
        None,
        dir.path(),
    );
    assert_eq!(code(&out), 3, "stderr: {}", stderr_str(&out));
    assert_eq!(server.hits(), 0);
}
