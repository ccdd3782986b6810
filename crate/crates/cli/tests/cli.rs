use std::path::Path;
use std::process::{Command, Output};

fn resrec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resrec")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = resrec(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synthetic(dir: &Path) {
    ok(dir, &["gen-synthetic", "--out", "corpus.jsonl", "--papers", "60", "--topic-affinity", "2", "--test-fraction", "0.25"]);
    ok(dir, &["--work-dir", "w", "ingest", "--corpus", "corpus.jsonl"]);
}

#[test]
fn gen_synthetic_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["--seed", "3", "gen-synthetic", "--out", "a.jsonl", "--papers", "30"]);
    ok(d, &["--seed", "3", "gen-synthetic", "--out", "b.jsonl", "--papers", "30"]);
    ok(d, &["--seed", "4", "gen-synthetic", "--out", "c.jsonl", "--papers", "30"]);
    let read = |f: &str| std::fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert_ne!(read("a.jsonl"), read("c.jsonl"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(resrec(d, &["query"]).status.code(), Some(1));
    assert_eq!(resrec(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(resrec(d, &["--help"]).status.code(), Some(0));
    assert_eq!(resrec(d, &["--work-dir", "empty", "query", "--text", "x"]).status.code(), Some(2));
    assert_eq!(resrec(d, &["gen-synthetic", "--out", "x.jsonl", "--topics", "99"]).status.code(), Some(1));
    synthetic(d);
    let out = resrec(d, &["--work-dir", "w", "--provider", "http://127.0.0.1:9", "build-index"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn pipeline_round_trip_with_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synthetic(d);
    std::fs::write(d.join("run.toml"), "seed = 9\n[paths]\nwork_dir = \"w\"\nreports = \"out\"\n[eval]\nrecall = [5, 20]\nhitrate = [3]\n").unwrap();
    let cfg = ["--config", "run.toml"];
    ok(d, &[&cfg[..], &["build-perception", "--exclude", "test.ids"]].concat());
    ok(d, &[&cfg[..], &["build-index"]].concat());

    let paper = std::fs::read_to_string(d.join("test.ids")).unwrap().lines().next().unwrap().to_string();
    let json = ok(d, &[&cfg[..], &["--format", "json", "query", "--paper", &paper, "--kind", "baseline", "--k", "4"]].concat());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rows = v["results"][0]["results"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["rank"], 1);

    let text = ok(d, &[&cfg[..], &["evaluate", "--split", "test.ids"]].concat());
    assert!(text.contains("R@5") && text.contains("HR@3") && !text.contains("R@10"), "{text}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("out/eval.json")).unwrap()).unwrap();
    assert!(!report["rows"].as_array().unwrap().is_empty());

    let again = ok(d, &[&cfg[..], &["evaluate", "--split", "test.ids"]].concat());
    assert_eq!(text, again, "evaluation is deterministic");

    ok(d, &[&cfg[..], &["emit-sft", "--split", "train.ids", "--out", "sft.jsonl"]].concat());
    let first = std::fs::read_to_string(d.join("sft.jsonl")).unwrap();
    let t: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert!(t["A"].as_str().unwrap().contains("RANKING: "));

    ok(d, &[&cfg[..], &["train-adapter", "--split", "train.ids", "--epochs", "3"]].concat());
    assert!(d.join("w/adapter.ckpt").exists());
    let q = resrec(d, &["--config", "run.toml", "query", "--text", "x", "--adapter"]);
    assert_eq!(q.status.code(), Some(1), "index built without the adapter must be refused");

    let chains = ok(d, &[&cfg[..], &["analyze-chains", "--split", "test.ids", "--chains-out", "chains.jsonl"]].concat());
    assert!(chains.contains("recall") && d.join("chains.jsonl").exists());
}

#[test]
fn commands_compose_on_the_fixture_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny_corpus.jsonl");
    let w = ["--work-dir", "w"];
    let ingest = ok(d, &[&w[..], &["ingest", "--corpus", corpus.to_str().unwrap()]].concat());
    assert!(ingest.contains("8 papers, 5 baselines, 5 datasets"), "{ingest}");
    ok(d, &[&w[..], &["build-perception"]].concat());
    ok(d, &[&w[..], &["build-index"]].concat());
    let out = ok(d, &[&w[..], &["query", "--text", "node classification on citation graphs", "--bridges", "cora", "--kind", "baseline", "--k", "3"]].concat());
    let top = out.lines().find(|l| l.trim_start().starts_with("1 ")).unwrap();
    assert!(["gcn", "gat", "sage"].iter().any(|id| top.contains(id)), "{out}");
    let out = ok(d, &[&w[..], &["query", "--paper", "V3", "--kind", "dataset", "--k", "2"]].concat());
    assert!(out.contains("imagenet") || out.contains("cifar10"), "{out}");
}
