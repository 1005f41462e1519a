use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trendgrad"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn err(args: &[&str]) -> String {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Three planted trends over a small, frequent background vocabulary.
fn three_trends(dir: &Path) -> PathBuf {
    let corpus = dir.join("corpus.jsonl");
    ok(&[
        "synth",
        "-o",
        s(&corpus),
        "--seed",
        "11",
        "--docs",
        "60000",
        "--weeks",
        "104",
        "--vocabulary",
        "50",
        "--trend",
        "glorp:30:49:5:elite-led",
        "--trend",
        "zib:60:75:4",
        "--trend",
        "frumble:40:55:6:periphery-led",
    ]);
    corpus
}

#[test]
fn help_lists_defaults() {
    let bursts = ok(&["bursts", "--help"]);
    for needle in [
        "[default: 0.1]",
        "[default: 5000]",
        "[default: 500]",
        "8 for weeks",
        "3 for years",
        "1.5,2,...,10",
    ] {
        assert!(bursts.contains(needle), "bursts --help lacks {needle}");
    }
    let gradient = ok(&["gradient", "--help"]);
    assert!(gradient.contains("[default: 1500]"));
    let lifecycle = ok(&["lifecycle", "--help"]);
    assert!(lifecycle.contains("[default: 10]") && lifecycle.contains("[default: 5]"));
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for path in [&a, &b] {
        ok(&[
            "synth",
            "-o",
            s(path),
            "--seed",
            "1",
            "--authors",
            "200",
            "--weeks",
            "120",
            "--trend",
            "blip:50:69:5",
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let truth: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a.jsonl.truth.json")).unwrap()).unwrap();
    let trend = &truth["planted"][0]["trend"];
    assert_eq!(
        (trend["start_week"].as_u64(), trend["end_week"].as_u64()),
        (Some(50), Some(69))
    );
    assert_eq!(trend["multiplier"].as_f64(), Some(5.0));
}

#[test]
fn bursts_finds_the_planted_words() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = three_trends(dir.path());
    let out = dir.path().join("out");
    ok(&["bursts", s(&corpus), "-o", s(&out), "--target-median", "300"]);
    let report = fs::read_to_string(out.join("bursts.csv")).unwrap();
    let words: Vec<&str> = report.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let mut sorted = words.clone();
    sorted.sort();
    assert_eq!(sorted, ["frumble", "glorp", "zib"]);
    let weights: Vec<f64> = report
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(weights.windows(2).all(|w| w[0] >= w[1]));

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("bursts.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["transition"].as_f64(), Some(0.1));
    assert_eq!(manifest["config"]["threshold"].as_u64(), Some(1500));
    assert_eq!(manifest["filter"]["min_burst_len"].as_u64(), Some(8));
    assert_eq!(manifest["calibration"]["satisfied"].as_bool(), Some(true));
    assert_eq!(manifest["input"]["file"]["sha256"].as_str().unwrap().len(), 64);

    // same input and settings, same bytes
    let again = dir.path().join("again");
    ok(&[
        "bursts",
        s(&corpus),
        "-o",
        s(&again),
        "--target-median",
        "300",
        "--threads",
        "1",
    ]);
    for name in ["bursts.csv", "top_words.csv", "bursts.manifest.json"] {
        assert_eq!(
            fs::read(out.join(name)).unwrap(),
            fs::read(again.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = three_trends(dir.path());
    let config = dir.path().join("run.conf");
    fs::write(&config, "# small run\ntop_k = 1\ntarget_median = 300\n").unwrap();
    let out = dir.path().join("out");
    ok(&["bursts", s(&corpus), "-o", s(&out), "--config", s(&config)]);
    assert_eq!(fs::read_to_string(out.join("bursts.csv")).unwrap().lines().count(), 2);
    ok(&[
        "bursts",
        s(&corpus),
        "-o",
        s(&out),
        "--config",
        s(&config),
        "--top-k",
        "2",
    ]);
    assert_eq!(fs::read_to_string(out.join("bursts.csv")).unwrap().lines().count(), 3);

    fs::write(&config, "top_k = lots\n").unwrap();
    assert!(err(&["bursts", s(&corpus), "-o", s(&out), "--config", s(&config)]).contains("top_k"));
}

#[test]
fn empty_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let msg = err(&["bursts", s(&empty), "-o", s(dir.path())]);
    assert!(msg.contains("error"), "{msg}");
    assert!(err(&["bursts", s(&dir.path().join("missing.jsonl"))]).contains("missing.jsonl"));
}

#[test]
fn gradient_variants_need_their_fields() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = three_trends(dir.path());
    let out = dir.path().join("out");
    ok(&["bursts", s(&corpus), "-o", s(&out), "--target-median", "300"]);
    let report = out.join("bursts.csv");
    assert!(err(&[
        "gradient",
        s(&corpus),
        "-o",
        s(&out),
        "--bursts",
        s(&report),
        "--subset",
        "comment"
    ])
    .contains("'kind'"));
    assert!(err(&[
        "gradient",
        s(&corpus),
        "-o",
        s(&out),
        "--bursts",
        s(&report),
        "--population-key",
        "producer"
    ])
    .contains("'producer'"));

    let stdout = ok(&[
        "gradient",
        s(&corpus),
        "-o",
        s(&out),
        "--bursts",
        s(&report),
        "--mode",
        "final,current",
        "--per-word",
    ]);
    assert_eq!(stdout.lines().count(), 2);
    let curve = fs::read_to_string(out.join("gradient_author_current_all.csv")).unwrap();
    assert!(curve.starts_with("rel_start,rel_end,count,median_activity,f,residual_flag\n"));
    assert!(out.join("gradient_author_final_all_per_word.csv").exists());
}

#[test]
fn lifecycle_constant_rate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let rate = 0.3;
    fs::write(
        &spec,
        serde_json::json!({
            "seed": 5, "authors": 3000, "target_docs": null, "activity_exponent": 1.1, "max_activity": 400,
            "weeks": 52, "epoch": 1262304000, "vocabulary": 100, "words_per_doc": 4, "zipf_exponent": 1.0,
            "producers": 0, "producer_exponent": 1.2, "post_fraction": null, "trends": [],
            "life_usage": { "word": "steady", "start_rate": rate, "end_rate": rate }
        })
        .to_string(),
    )
    .unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    ok(&["synth", "--spec", s(&spec), "-o", s(&corpus)]);
    let report = dir.path().join("bursts.csv");
    fs::write(
        &report,
        "word,start_bucket,end_bucket,weight,occurrences,alpha\nsteady,10,20,1,1,0.3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&["lifecycle", s(&corpus), "-o", s(&out), "--bursts", s(&report)]);
    let table = fs::read_to_string(out.join("life_stages.csv")).unwrap();
    let mut cells = 0;
    for line in table.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let docs: u64 = cols[2].parse().unwrap();
        let avg: f64 = cols[3].parse().unwrap();
        let bound = trendgrad::synth::LifeUsage::noise_bound(rate, docs, 5.0);
        assert!((avg - rate).abs() <= bound, "{line}: bound {bound}");
        cells += 1;
    }
    assert!(cells > 50);
    let middle = fs::read_to_string(out.join("life_stages_middle.csv")).unwrap();
    assert!(middle
        .lines()
        .skip(1)
        .all(|l| ["2", "3", "4"].contains(&l.split(',').next().unwrap())));

    assert!(err(&[
        "lifecycle",
        s(&corpus),
        "-o",
        s(&out),
        "--bursts",
        s(&report),
        "--min-activity",
        "100000"
    ])
    .contains("authors"));
}
