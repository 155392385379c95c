use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"
n_dialogs = 12
prompts_per_dialog = 20
campaign_seed = 5
injection_probability = 0.3

[model_under_test.stub]
kind = "parrot"
seed = 2

[scorers]
toxicity_url = "stub:lexicon"
nsp_url = "stub:overlap"
qa_url = "stub:overlap"
"#;

fn convqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convqa"))
        .args(args)
        .env_remove("CONVQA_SEED")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("campaign.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    (dir, cfg)
}

#[test]
fn run_matches_chained_commands() {
    let (dir, cfg) = setup();
    let out = dir.path().join("run");
    let r = convqa(&["run", "--config", s(&cfg), "--out", s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(r.stdout.is_empty());

    let t = dir.path().join("t.jsonl");
    let v = dir.path().join("v.jsonl");
    assert!(convqa(&["generate", "--config", s(&cfg), "--out", s(&t), "--workers", "1"]).status.success());
    assert!(convqa(&["analyze", "--transcripts", s(&t), "--config", s(&cfg), "--out", s(&v), "--sequential"]).status.success());
    assert_eq!(std::fs::read(&t).unwrap(), std::fs::read(out.join("transcripts.jsonl")).unwrap());
    assert_eq!(std::fs::read(&v).unwrap(), std::fs::read(out.join("verdicts.jsonl")).unwrap());
    for (format, ext) in [("json", "json"), ("md", "md"), ("html", "html")] {
        let r_path = dir.path().join(format!("r.{ext}"));
        let r = convqa(&["report", "--verdicts", s(&v), "--format", format, "--out", s(&r_path)]);
        assert!(r.status.success());
        assert_eq!(std::fs::read(&r_path).unwrap(), std::fs::read(out.join(format!("report.{ext}"))).unwrap());
    }

    let again = dir.path().join("again");
    assert!(convqa(&["run", "--config", s(&cfg), "--out", s(&again)]).status.success());
    for f in ["transcripts.jsonl", "verdicts.jsonl", "report.json"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let (dir, cfg) = setup();
    assert_eq!(convqa(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(convqa(&[]).status.code(), Some(1));
    assert_eq!(convqa(&["--help"]).status.code(), Some(0));
    let missing = dir.path().join("nope.toml");
    assert_eq!(convqa(&["generate", "--config", s(&missing), "--out", "x"]).status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, CONFIG.replace("0.3", "1.2")).unwrap();
    let r = convqa(&["generate", "--config", s(&bad), "--out", s(&dir.path().join("t"))]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("injection_probability"));
    let v = dir.path().join("v.jsonl");
    std::fs::write(&v, "").unwrap();
    let r = convqa(&["report", "--verdicts", s(&v), "--format", "pdf", "--out", s(&dir.path().join("r"))]);
    assert_eq!(r.status.code(), Some(2));
    let _ = cfg;
}

#[test]
fn single_and_comparison_reports() {
    let (dir, cfg) = setup();
    let out = dir.path().join("a");
    assert!(convqa(&["run", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let report = std::fs::read_to_string(out.join("report.md")).unwrap();
    assert!(report.contains("| metric | stub:parrot |"));

    let other = dir.path().join("other.toml");
    std::fs::write(&other, CONFIG.replace("\"parrot\"", "\"amnesiac\"")).unwrap();
    let out2 = dir.path().join("b");
    assert!(convqa(&["run", "--config", s(&other), "--out", s(&out2)]).status.success());
    let cmp = dir.path().join("cmp.md");
    let v1 = out.join("verdicts.jsonl");
    let v2 = out2.join("verdicts.jsonl");
    let r = convqa(&["report", "--verdicts", s(&v1), "--verdicts", s(&v2), "--format", "md", "--out", s(&cmp)]);
    assert!(r.status.success());
    assert!(std::fs::read_to_string(&cmp).unwrap().contains("| metric | stub:parrot | stub:amnesiac |"));
    let dup = convqa(&["report", "--verdicts", s(&v1), "--verdicts", s(&v1), "--out", s(&cmp)]);
    assert_eq!(dup.status.code(), Some(2));
}

#[test]
fn seed_env_override_and_sweep() {
    let (dir, cfg) = setup();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    assert!(convqa(&["generate", "--config", s(&cfg), "--out", s(&a)]).status.success());
    let r = Command::new(env!("CARGO_BIN_EXE_convqa"))
        .args(["generate", "--config", s(&cfg), "--out", s(&b)])
        .env("CONVQA_SEED", "99")
        .output()
        .unwrap();
    assert!(r.status.success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let sweep = dir.path().join("sweep");
    let r = convqa(&["sweep", "--config", s(&cfg), "--fractions", "0,0.5", "--out", s(&sweep)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sweep.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), 2);
    assert!(sweep.join("f0.5").join("verdicts.jsonl").exists());
}
