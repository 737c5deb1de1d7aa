use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use xdtc::synthetic::SyntheticSpec;

fn xdtc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xdtc")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = xdtc(args);
    assert!(
        out.status.success(),
        "xdtc {}: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Writes source and target TSV files; target labels are dropped when
/// `unlabeled_target` is set.
fn tsv_pair(dir: &Path, unlabeled_target: bool) -> (PathBuf, PathBuf) {
    let (src, tgt) = SyntheticSpec {
        docs_per_label: 6,
        ..Default::default()
    }
    .generate_raw(3);
    let write = |name: &str, docs: &[xdtc::corpus::RawDocument], hide: bool| {
        let body: String = docs
            .iter()
            .map(|d| {
                let label = if hide { "-" } else { d.label.as_deref().unwrap() };
                format!("{}\t{label}\t{}\n", d.id, d.text)
            })
            .collect();
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        path
    };
    (write("src.tsv", &src, false), write("tgt.tsv", &tgt, unlabeled_target))
}

fn prepared(dir: &Path, unlabeled_target: bool) -> PathBuf {
    let (src, tgt) = tsv_pair(dir, unlabeled_target);
    let out = dir.join("corpus.xdtc");
    ok(&["prep", "--source", &s(&src), "--target", &s(&tgt), "--min-df", "1", "--out", &s(&out)]);
    out
}

const SMALL: [&str; 10] = [
    "--t-common", "2", "--t-spec-src", "2", "--t-spec-tgt", "2", "--burn-in", "4", "--sample-lag", "2",
];

#[test]
fn malformed_input_exits_with_two_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = tsv_pair(dir.path(), false);
    let mut text = std::fs::read_to_string(&src).unwrap();
    text.push_str("broken line without tabs\n");
    std::fs::write(&src, &text).unwrap();
    let out = xdtc(&["prep", "--source", &s(&src), "--target", &s(&tgt), "--out", &s(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("src.tsv:{}:", text.lines().count())), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = prepared(dir.path(), false);
    let out = s(&dir.path().join("runs"));
    let no_seed = xdtc(&["train", "--corpus", &s(&corpus), "--out", &out]);
    assert_eq!(no_seed.status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seeds = [1]\n[train]\nwarmup = 3\n").unwrap();
    let unknown = xdtc(&["train", "--config", &s(&cfg), "--corpus", &s(&corpus), "--out", &out]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("warmup"));

    let bad_hp = xdtc(&["train", "--corpus", &s(&corpus), "--out", &out, "--seed", "1", "--alpha", "-1"]);
    assert_eq!(bad_hp.status.code(), Some(2));

    let missing = xdtc(&["eval", "--corpus", &s(&dir.path().join("nothing")), "--runs", &out]);
    assert_eq!(missing.status.code(), Some(2));

    let bad_flag = xdtc(&["train", "--frobnicate"]);
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn config_file_sections_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = prepared(dir.path(), false);
    let runs = dir.path().join("runs");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "corpus = \"{}\"\nseeds = [4]\nalpha = 3.0\nt_common = 2\nt_spec_src = 2\nt_spec_tgt = 2\n\n[train]\niterations = 6\nburn_in = 2\nsample_lag = 2\nalpha = 2.0\n",
            s(&corpus)
        ),
    )
    .unwrap();
    ok(&["train", "--config", &s(&cfg), "--out", &s(&runs), "--beta", "0.05"]);
    let record = std::fs::read_to_string(runs.join("config.toml")).unwrap();
    assert!(record.contains("alpha = 2.0"), "{record}");
    assert!(record.contains("beta = 0.05"), "{record}");
    assert!(record.contains("iterations = 6"), "{record}");
    let trace = std::fs::read_to_string(runs.join("trace-seed4.tsv")).unwrap();
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#')).count(), 6);

    // The recorded file reproduces the run.
    let again = dir.path().join("again");
    ok(&["train", "--config", &s(&runs.join("config.toml")), "--out", &s(&again)]);
    for f in ["checkpoint-seed4.xdtk", "params-seed4.xdtp", "trace-seed4.tsv"] {
        assert_eq!(std::fs::read(runs.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn resumed_training_matches_an_uninterrupted_one() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = s(&prepared(dir.path(), false));
    let (full, part) = (s(&dir.path().join("full")), s(&dir.path().join("part")));
    let mut a = vec!["train", "--corpus", &corpus, "--out", &full, "--seeds", "1,2", "--iterations", "10"];
    a.extend(SMALL);
    ok(&a);
    let mut b = vec!["train", "--corpus", &corpus, "--out", &part, "--seeds", "1,2", "--iterations", "5"];
    b.extend(SMALL);
    ok(&b);
    let mut c = vec!["train", "--corpus", &corpus, "--out", &part, "--seeds", "1,2", "--iterations", "10", "--resume"];
    c.extend(SMALL);
    ok(&c);
    for seed in [1, 2] {
        for f in ["checkpoint", "params", "trace"] {
            let ext = match f {
                "checkpoint" => "xdtk",
                "params" => "xdtp",
                _ => "tsv",
            };
            let name = format!("{f}-seed{seed}.{ext}");
            let x = std::fs::read(dir.path().join("full").join(&name)).unwrap();
            let y = std::fs::read(dir.path().join("part").join(&name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
    }

    let mut d = vec!["train", "--corpus", &corpus, "--out", &part, "--seeds", "1", "--iterations", "12", "--resume", "--alpha", "4"];
    d.extend(SMALL);
    assert_eq!(xdtc(&d).status.code(), Some(2), "changed settings must not resume");
}

#[test]
fn evaluation_reports_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = s(&prepared(dir.path(), false));
    let sets = dir.path().join("sets");
    for mode in ["supervised", "ccl"] {
        let out = s(&sets.join(mode));
        let mut a = vec!["train", "--corpus", &corpus, "--out", &out, "--seeds", "1,2,3", "--iterations", "8", "--mode", mode];
        a.extend(SMALL);
        ok(&a);
        ok(&["eval", "--corpus", &corpus, "--runs", &out, "--format", "json"]);
        let report = std::fs::read_to_string(sets.join(mode).join("eval.tsv")).unwrap();
        let rows: Vec<&str> = report.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 5, "{report}");
        assert!(rows[3].starts_with("mean\t") && rows[4].starts_with("sd\t"));
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(sets.join(mode).join("eval.json")).unwrap()).unwrap();
        assert_eq!(json["runs"].as_array().unwrap().len(), 3);
        let preds = std::fs::read_to_string(sets.join(mode).join("predictions-seed2.tsv")).unwrap();
        assert!(preds.contains("# seed 2\n"));
        assert!(preds.contains("# doc_id\tpredicted_label\tscore_0\tscore_1\n"));
        assert_eq!(preds.lines().filter(|l| !l.starts_with('#')).count(), 12);
    }
    let text = ok(&[
        "eval",
        "--compare",
        &s(&sets.join("ccl")),
        &s(&sets.join("supervised")),
        "--metric",
        "perplexity",
    ]);
    let last = text.lines().last().unwrap();
    let cols: Vec<f64> = last.split('\t').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols.len(), 3);
    assert_eq!(cols[1], 2.0);
    assert!((0.0..=1.0).contains(&cols[2]));
}

#[test]
fn unlabeled_target_needs_no_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = s(&prepared(dir.path(), true));
    let runs = s(&dir.path().join("runs"));
    let mut a = vec!["train", "--corpus", &corpus, "--out", &runs, "--seed", "9", "--iterations", "6"];
    a.extend(SMALL);
    ok(&a);
    let refused = xdtc(&["eval", "--corpus", &corpus, "--runs", &runs]);
    assert_eq!(refused.status.code(), Some(2));
    ok(&["eval", "--corpus", &corpus, "--runs", &runs, "--no-accuracy"]);
    let report = std::fs::read_to_string(dir.path().join("runs/eval.tsv")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("9\tNA\t")), "{report}");
}

#[test]
fn topics_in_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = s(&prepared(dir.path(), false));
    let runs = dir.path().join("runs");
    let runs_arg = s(&runs);
    let mut a = vec!["train", "--corpus", &corpus, "--out", &runs_arg, "--seed", "1", "--iterations", "8"];
    a.extend(SMALL);
    ok(&a);
    let params = s(&runs.join("params-seed1.xdtp"));
    let text = ok(&["topics", "--corpus", &corpus, "--params", &params, "--group", "l1", "--k", "4"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "l1");
    assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["Com", "0", "Com", "1", "Src", "0", "Src", "1", "Tgt", "0", "Tgt", "1"]);
    assert_eq!(lines.len(), 2 + 4);

    let json = ok(&[
        "topics", "--corpus", &corpus, "--params", &params, "--group", "0", "--type", "specific", "--domain", "target",
        "--topic", "1", "--k", "3", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let words = v[0]["words"].as_array().unwrap();
    assert_eq!(words.len(), 3);
    let probs: Vec<f64> = words.iter().map(|w| w[1].as_f64().unwrap()).collect();
    assert!(probs.windows(2).all(|w| w[0] >= w[1]));

    let no_domain = xdtc(&["topics", "--corpus", &corpus, "--params", &params, "--type", "specific"]);
    assert_eq!(no_domain.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = s(&prepared(dir.path(), false));
    let out = dir.path().join("sweep.tsv");
    let task = format!("t={corpus}");
    let mut a = vec![
        "sweep", "--task", &task, "--seeds", "1,2", "--modes", "supervised,unsupervised", "--axis", "gamma=0.5,1",
        "--axis", "t_spec_tgt=1,3", "--iterations", "4", "--out",
    ];
    let o = s(&out);
    a.push(&o);
    a.extend(SMALL);
    let stderr = xdtc(&a).stderr;
    assert!(String::from_utf8_lossy(&stderr).contains("sweep: 16 runs"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains(
        "# task\tmode\talpha\tbeta\tgamma\teta\tt_common\tt_spec_src\tt_spec_tgt\tseed\taccuracy\tperplexity_tgt\twall_seconds\n"
    ));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 16);

    let bad = xdtc(&["sweep", "--task", &task, "--seed", "1", "--axis", "delta=1", "--out", &o]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn help_lists_config_keys() {
    let help = ok(&["train", "--help"]);
    for key in ["t_spec_src", "burn_in", "sample_lag", "checkpoint_every", "perplexity_over"] {
        assert!(help.contains(key), "{key}");
    }
}
