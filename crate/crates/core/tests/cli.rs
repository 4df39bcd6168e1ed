use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drexplainer"))
        .args(args)
        .env("DREXPLAIN_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const QUICK: [&str; 8] = ["--preset", "desk", "--set", "epochs=40", "--set", "folds=2", "--set", "mask_iterations=30"];

fn quick(mut args: Vec<&str>) -> Vec<&str> {
    args.extend(QUICK);
    args
}

#[test]
fn full_command_chain() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run_dir = dir.path().join("run");
    ok(&["synth", "--seed", "3", "--out", p(&data)]);
    for f in ["expr.tsv", "mut.tsv", "cnv.tsv", "drugs.tsv", "responses.tsv", "manifest.json"] {
        assert!(data.join(f).exists(), "{f}");
    }

    let ingest_dir = dir.path().join("ingest");
    ok(&["ingest", "--data-dir", p(&data), "--out", p(&ingest_dir)]);
    let graph = std::fs::read_to_string(ingest_dir.join("graph.tsv")).unwrap();
    assert!(graph.starts_with("source\trelation\ttarget\n"));
    assert!(graph.contains("\tsensitive\t") && graph.contains("\tcell_sim\t") || graph.contains("\tsensitive\t"));

    ok(&quick(vec!["train", "--seed", "3", "--data-dir", p(&data), "--out", p(&run_dir)]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("eval_report.json")).unwrap()).unwrap();
    assert_eq!(report["folds"].as_array().unwrap().len(), 2);
    assert!(run_dir.join("model.ckpt").exists());

    ok(&quick(vec!["predict", "--data-dir", p(&data), "--out", p(&run_dir)]));
    let predictions = std::fs::read_to_string(run_dir.join("predictions.tsv")).unwrap();
    let first = predictions.lines().nth(1).unwrap().to_string();
    let cols: Vec<&str> = first.split('\t').collect();
    assert_eq!(cols.len(), 5);

    let truth = std::fs::read_to_string(data.join("truth_responses.tsv")).unwrap();
    let line = truth.lines().skip(1).find(|l| l.ends_with("sensitive")).unwrap();
    let f: Vec<&str> = line.split('\t').collect();
    let triple = format!("{},{},{}", f[0], f[2], f[1]);
    for method in ["explaine", "deletion"] {
        ok(&quick(vec!["explain", "--data-dir", p(&data), "--out", p(&run_dir), "--triple", &triple, "--method", method]));
    }
    let explained: Vec<_> = std::fs::read_dir(run_dir.join("explanations")).unwrap().collect();
    assert_eq!(explained.len(), 4, "json and dot per method");

    ok(&quick(vec!["eval-explain", "--data-dir", p(&data), "--out", p(&run_dir), "--max-targets", "3"]));
    let bench = std::fs::read_to_string(run_dir.join("benchmark.tsv")).unwrap();
    assert!(bench.contains("mask") && bench.contains("explaine"));

    ok(&[
        "report",
        "--out",
        p(&run_dir),
        "--predictions",
        p(&run_dir.join("predictions.tsv")),
        "--explanations",
        p(&run_dir.join("explanations.jsonl")),
        "--top",
        "3",
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "report");
}

#[test]
fn training_is_reproducible_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--seed", "8", "--out", p(&data)]);
    let mut reports = Vec::new();
    // Same output directory both times: the echoed config includes it.
    let out = dir.path().join("run");
    for _ in 0..2 {
        ok(&quick(vec!["train", "--seed", "8", "--data-dir", p(&data), "--out", p(&out)]));
        reports.push(std::fs::read(out.join("eval_report.json")).unwrap());
        reports.push(std::fs::read(out.join("model.ckpt")).unwrap());
    }
    assert!(reports[0] == reports[2], "eval reports differ");
    assert!(reports[1] == reports[3], "checkpoints differ");
}

#[test]
fn exit_codes_separate_validation_from_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    // Parse errors and config violations are validation failures.
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--out", out, "--set", "lr=-1"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--out", out, "--set", "bogus=1"]).status.code(), Some(1));
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "epochs = 10\nepochs = 20\n").unwrap();
    let bad = run(&["train", "--config", p(&cfg), "--out", out]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bad.cfg:2:1"));
    // Missing inputs are runtime failures.
    let missing = dir.path().join("nowhere");
    assert_eq!(run(&["train", "--data-dir", p(&missing), "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["predict", "--checkpoint", p(&missing.join("m.ckpt")), "--out", out]).status.code(), Some(2));
    // Malformed SMILES in the drug table is a validation failure.
    let data = dir.path().join("data");
    ok(&["synth", "--out", p(&data)]);
    let drugs = std::fs::read_to_string(data.join("drugs.tsv")).unwrap();
    let mut lines: Vec<String> = drugs.lines().map(String::from).collect();
    let cols: Vec<&str> = lines[1].split('\t').collect();
    lines[1] = format!("{}\tC1CC", cols[0]);
    std::fs::write(data.join("drugs.tsv"), lines.join("\n") + "\n").unwrap();
    let smiles = run(&["ingest", "--data-dir", p(&data), "--out", p(&dir.path().join("i"))]);
    assert_eq!(smiles.status.code(), Some(1), "{}", String::from_utf8_lossy(&smiles.stderr));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
