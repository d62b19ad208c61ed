use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scriptnarr")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn corpus(dir: &Path) {
    let o = run(
        dir,
        &["gen-corpus", "--out", "c", "--docs", "40", "--tokens", "1200", "--signals", "marker,arc", "--seed", "5"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn train_eval_inspect_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    let o = run(
        dir,
        &[
            "train",
            "--manifest",
            "c/manifest.jsonl",
            "--config",
            "c/config.txt",
            "--out",
            "m.json",
            "--test-manifest",
            "t.jsonl",
            "--report",
            "val.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let val: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        val,
        serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(dir.join("val.json")).unwrap()).unwrap()
    );

    let o = run(dir, &["eval", "--model", "m.json", "--manifest", "c/manifest.jsonl"]);
    assert_eq!(code(&o), 2);

    let o = run(dir, &["--sequential", "eval", "--model", "m.json", "--manifest", "t.jsonl", "--predictions", "p.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["macro_f1"].as_f64().is_some());
    let preds = std::fs::read_to_string(dir.join("p.csv")).unwrap();
    let tests = std::fs::read_to_string(dir.join("t.jsonl")).unwrap();
    assert_eq!(preds.lines().count(), tests.lines().filter(|l| l.contains("\"id\"")).count() + 1);

    let o = run(dir, &["inspect-model", "m.json", "--vocab", "v.tsv", "--top", "3"]);
    assert_eq!(code(&o), 0);
    let info: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(info["blocks"], "ling+emo");
    assert_eq!(info["top_nominated_terms"].as_array().unwrap().len(), 3);
    assert!(std::fs::read_to_string(dir.join("v.tsv")).unwrap().starts_with("term\tindex\tdf\timportance\tselected\n"));
}

#[test]
fn ablate_features_plot_and_parse() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    corpus(dir);
    let o = run(dir, &["ablate", "--manifest", "c/manifest.jsonl", "--blocks", "none", "--blocks", "tt+vad"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].starts_with("tt+vad,29,"));

    let o = run(dir, &["features", "--manifest", "c/manifest.jsonl", "--blocks", "tt"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("id,label,tt.c1,tt.c2\n"));

    let o = run(
        dir,
        &["plot", "--manifest", "c/manifest.jsonl", "--feature", "int.fear", "--out", "p.csv", "--svg", "p.svg"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(dir.join("p.csv")).unwrap().lines().count(), 10);
    assert!(std::fs::read_to_string(dir.join("p.svg")).unwrap().starts_with("<svg"));

    let o = run(dir, &["parse", "c/scripts/script_0001.txt"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["id"], "script_0001");
    assert_eq!(v["structural_points"].as_array().unwrap().len(), 9);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&run(dir, &["--help"])), 0);
    assert_eq!(code(&run(dir, &["frobnicate"])), 1);
    assert_eq!(code(&run(dir, &["train", "--manifest", "x.jsonl"])), 1);
    assert_eq!(code(&run(dir, &["gen-corpus", "--out", "c", "--signals", "sparkle"])), 1);
    assert_eq!(code(&run(dir, &["train", "--manifest", "missing.jsonl", "--out", "m.json"])), 2);

    corpus(dir);
    assert_eq!(
        code(&run(dir, &["train", "--manifest", "c/manifest.jsonl", "--out", "m.json", "--blocks", "ling,nope"])),
        1
    );
    assert_eq!(
        code(&run(dir, &["plot", "--manifest", "c/manifest.jsonl", "--feature", "vad.pitch", "--out", "p.csv"])),
        1
    );

    std::fs::write(dir.join("broken.json"), "{\"format\": \"scriptnarr-model\", ").unwrap();
    assert_eq!(code(&run(dir, &["inspect-model", "broken.json"])), 2);

    assert_eq!(code(&run(dir, &["train", "--manifest", "c/manifest.jsonl", "--out", "m.json"])), 0);
    let mut model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("m.json")).unwrap()).unwrap();
    model["svm"]["weights"].as_array_mut().unwrap().pop();
    std::fs::write(dir.join("bad.json"), model.to_string()).unwrap();
    assert_eq!(code(&run(dir, &["inspect-model", "bad.json"])), 3);
}
