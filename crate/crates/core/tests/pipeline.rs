use std::collections::BTreeMap;

use xdtc::corpus::{corpus_from_raw, CorpusOptions, Stopwords};
use xdtc::eval::{evaluate, run_sweep, write_sweep_tsv, Axis, EvalOptions, FeatureEncoding, SweepGrid, SweepOptions};
use xdtc::inference::{group_topics, render_topics};
use xdtc::io::{load_checkpoint, load_params, save_checkpoint, save_params, Checkpoint};
use xdtc::model::{Hyperparams, Mode};
use xdtc::sampler::Trainer;
use xdtc::synthetic::SyntheticSpec;

fn spec() -> SyntheticSpec {
    SyntheticSpec {
        docs_per_label: 10,
        ..Default::default()
    }
}

fn small(mode: Mode, seed: u64) -> Hyperparams {
    Hyperparams {
        mode,
        alpha: 1.0,
        t_common: 2,
        t_specific: [2, 2],
        iterations: 30,
        burn_in: 10,
        sample_lag: 5,
        seed,
        ..Default::default()
    }
}

#[test]
fn raw_documents_to_topics() {
    let (src, tgt) = spec().generate_raw(4);
    let corpus = corpus_from_raw(
        src,
        tgt,
        &CorpusOptions {
            min_df: 1,
            stopwords: Stopwords::none(),
            ..Default::default()
        },
    )
    .unwrap();
    let mut trainer = Trainer::new(&corpus, small(Mode::Supervised, 1)).unwrap();
    let trace = trainer.run(|_| {});
    assert_eq!(trace.len(), 30);
    assert!(trace.last().unwrap().log_joint > trainer.initial_log_joint());
    let params = trainer.params();
    let reports = group_topics(&params, corpus.vocabulary(), 0, 5).unwrap();
    assert_eq!(reports.len(), 2 + 2 + 2);
    let text = render_topics(&reports, &corpus.label_names()[0]);
    assert!(text.starts_with("l0\nCom 0"));
    let ev = evaluate(trainer.state(), &params, &EvalOptions::default()).unwrap();
    assert!(ev.accuracy.unwrap() >= 0.9, "{:?}", ev.accuracy);
}

#[test]
fn interrupted_run_resumes_to_the_same_files() {
    let corpus = spec().generate(9);
    let dir = tempfile::tempdir().unwrap();
    for mode in [Mode::Supervised, Mode::Ccl] {
        let hp = small(mode, 5);
        let mut straight = Trainer::new(&corpus, hp.clone()).unwrap();
        straight.run(|_| {});

        let mut first = Trainer::new(&corpus, hp).unwrap();
        for _ in 0..13 {
            first.step();
        }
        let path = dir.path().join("half.xdtk");
        save_checkpoint(&path, &Checkpoint::from_trainer(&first)).unwrap();
        let mut resumed = load_checkpoint(&path).unwrap().into_trainer(&corpus).unwrap();
        resumed.run(|_| {});

        let (a, b) = (dir.path().join("a.xdtk"), dir.path().join("b.xdtk"));
        save_checkpoint(&a, &Checkpoint::from_trainer(&straight)).unwrap();
        save_checkpoint(&b, &Checkpoint::from_trainer(&resumed)).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{mode}");

        let p = dir.path().join("p.xdtp");
        save_params(&p, &resumed.params()).unwrap();
        assert_eq!(load_params(&p).unwrap(), straight.params());
    }
}

#[test]
fn checkpoint_refuses_another_corpus() {
    let corpus = spec().generate(1);
    let other = spec().generate(2);
    let trainer = Trainer::new(&corpus, small(Mode::Unsupervised, 1)).unwrap();
    let c = Checkpoint::from_trainer(&trainer);
    assert!(c.into_trainer(&other).is_err());
}

#[test]
fn every_mode_and_encoding_evaluates() {
    let corpus = spec().generate(21);
    for mode in [Mode::Supervised, Mode::Unsupervised, Mode::Ccl] {
        for encoding in [FeatureEncoding::LatentCounts, FeatureEncoding::Theta] {
            let mut trainer = Trainer::new(&corpus, small(mode, 2)).unwrap();
            trainer.run(|_| {});
            let opts = EvalOptions {
                encoding,
                ..Default::default()
            };
            let ev = evaluate(trainer.state(), &trainer.params(), &opts).unwrap();
            assert_eq!(ev.predictions.len(), 20);
            let acc = ev.accuracy.unwrap();
            assert!((0.0..=1.0).contains(&acc));
            assert!(ev.perplexity > 1.0 && ev.perplexity < corpus.vocab_size() as f64);
        }
    }
}

#[test]
fn sweep_rows_follow_grid_order() {
    let mut corpora = BTreeMap::new();
    corpora.insert("a".to_string(), spec().generate(1));
    corpora.insert("b".to_string(), spec().generate(2));
    let grid = SweepGrid {
        base: Hyperparams {
            iterations: 4,
            burn_in: 1,
            sample_lag: 1,
            ..small(Mode::Supervised, 0)
        },
        tasks: vec!["a".into(), "b".into()],
        modes: vec![Mode::Supervised, Mode::Unsupervised],
        axes: vec![(Axis::Alpha, vec![0.5, 2.0]), (Axis::TSpec, vec![1.0, 3.0])],
        seeds: vec![7, 8],
    };
    assert_eq!(grid.size(), 2 * 2 * 4 * 2);
    let opts = SweepOptions {
        jobs: 4,
        eval: EvalOptions::default(),
        timing: false,
    };
    let rows = run_sweep(&grid, &corpora, &opts).unwrap();
    assert_eq!(rows.len(), grid.size());
    assert!(rows.iter().all(|r| r.error.is_none()));
    assert_eq!(rows[0].task, "a");
    assert_eq!(rows.last().unwrap().task, "b");
    let seeds: Vec<u64> = rows.iter().take(2).map(|r| r.hp.as_ref().unwrap().seed).collect();
    assert_eq!(seeds, [7, 8]);

    let again = run_sweep(&grid, &corpora, &SweepOptions { jobs: 1, ..opts }).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_sweep_tsv(&mut x, &rows).unwrap();
    write_sweep_tsv(&mut y, &again).unwrap();
    assert_eq!(x, y, "thread count must not change results");
}
