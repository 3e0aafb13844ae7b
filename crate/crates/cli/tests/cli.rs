use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn semlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semlink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn make_fixtures(dir: &Path) {
    let d = dir.to_str().unwrap();
    let out = semlink(&["fixtures", "make", "--out", d, "--seed", "3", "--entities", "20", "--train-docs", "6", "--dev-docs", "6", "--dim", "16"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn usage_help_and_version() {
    assert_eq!(code(&semlink(&[])), 1);
    assert_eq!(code(&semlink(&["no-such-command"])), 1);
    assert_eq!(code(&semlink(&["embed", "reinforce", "--alpha", "x"])), 1);
    assert_eq!(code(&semlink(&["--help"])), 0);
    assert_eq!(code(&semlink(&["--version"])), 0);
    assert_eq!(code(&semlink(&["link", "train", "--help"])), 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = p(dir.path(), "missing.bin");
    assert_eq!(code(&semlink(&["embed", "neighbors", "--embeddings", &missing, "--query", "a"])), 2);

    make_fixtures(dir.path());
    let words = p(dir.path(), "words.bin");
    let out = semlink(&["embed", "neighbors", "--embeddings", &words, "--query", "not_a_word"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn invalid_alpha_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    make_fixtures(dir.path());
    let out = semlink(&[
        "embed", "reinforce",
        "--wikitext", &p(dir.path(), "wikitext.bin"),
        "--words", &p(dir.path(), "words.bin"),
        "--types", &p(dir.path(), "nothing.tsv"),
        "--alpha", "1.5",
        "--out", &p(dir.path(), "r.bin"),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn exhaustive_capacity_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    make_fixtures(dir.path());
    let (words, entities) = (p(dir.path(), "words.bin"), p(dir.path(), "wikitext.bin"));
    let model = p(dir.path(), "model.txt");
    let out = semlink(&[
        "link", "train", "--words", &words, "--entities", &entities,
        "--train", &p(dir.path(), "train.jsonl"), "--epochs", "0", "--model-out", &model,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    // Twenty mentions with four candidates each: 4^20 assignments.
    let tokens: Vec<String> = (0..20).map(|i| format!("\"t{i}\"")).collect();
    let mentions: Vec<String> = (0..20)
        .map(|i| {
            format!(
                r#"{{"start":{i},"end":{},"gold":"Entity_0000","candidates":["Entity_0000","Entity_0001","Entity_0002","Entity_0003"]}}"#,
                i + 1
            )
        })
        .collect();
    let doc = format!(r#"{{"doc_id":"big","tokens":[{}],"mentions":[{}]}}"#, tokens.join(","), mentions.join(","));
    let docs = p(dir.path(), "big.jsonl");
    fs::write(&docs, doc + "\n").unwrap();

    let args = ["link", "score", "--words", &words, "--entities", &entities, "--docs", &docs, "--model", &model];
    assert_eq!(code(&semlink(&args)), 3);
    let mut greedy = args.to_vec();
    greedy.extend(["--strategy", "greedy"]);
    assert_eq!(code(&semlink(&greedy)), 0);
}

#[test]
fn runs_summary_prints_json() {
    let out = semlink(&["eval", "runs", "0.9", "0.91", "0.92", "0.93", "0.94"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["mean"].as_f64().unwrap() - 0.92).abs() < 1e-12);
    assert!(v["ci95_halfwidth"].as_f64().unwrap() > 0.0);
}

#[test]
fn pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    make_fixtures(dir.path());
    let conf = p(dir.path(), "pipeline.conf");
    let run = |extra: &[&str]| {
        let mut args = vec!["pipeline", "run", "--config", &conf, "--set", "epochs=2", "--set", "seeds=0,1"];
        args.extend_from_slice(extra);
        semlink(&args)
    };
    let first = run(&[]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    for f in ["manifest.json", "reinforced.bin", "eval.json", "predictions.jsonl"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let reinforced = fs::read(dir.path().join("out/reinforced.bin")).unwrap();
    assert_eq!(code(&run(&[])), 0);
    assert_eq!(fs::read(dir.path().join("out/reinforced.bin")).unwrap(), reinforced);

    assert_eq!(code(&run(&["--set", "bogus=1"])), 1);
    assert_eq!(code(&run(&["--set", "dev=missing.jsonl"])), 1);
}

#[test]
fn fixtures_are_reproducible_through_the_binary() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    make_fixtures(a.path());
    make_fixtures(b.path());
    for f in ["words.bin", "wikitext.bin", "corpus.tsv", "train.jsonl", "dev.jsonl", "probes.tsv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let empty = tempfile::tempdir().unwrap();
    let out = semlink(&["fixtures", "make", "--out", empty.path().to_str().unwrap(), "--empty"]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(empty.path().join("dev.jsonl")).unwrap(), "");
}
