use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use xdtc::corpus::{read_corpus, write_corpus, Corpus, Document};
use xdtc::eval::{paired_t_test, student_t_sf};
use xdtc::inference::{classify, document_log_likelihood, perplexity, word_likelihood, DomainSelector};
use xdtc::io::{read_checkpoint, read_params, write_checkpoint, write_params, Checkpoint};
use xdtc::model::{estimate_params, init_state, rebuild_counts, ChainRng, Hyperparams, Mode, ScanOrder};
use xdtc::sampler::{resample_token, SweepBuffer, Trainer};
use xdtc::synthetic::tiny_corpus;

fn mode_strategy() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Supervised), Just(Mode::Unsupervised), Just(Mode::Ccl)]
}

fn hp(mode: Mode, seed: u64, labels: usize) -> Hyperparams {
    Hyperparams {
        alpha: 0.5,
        beta: 0.2,
        gamma: 1.0,
        eta: 0.5,
        t_common: 2,
        t_specific: if mode == Mode::Ccl { [2, 2] } else { [3, 1] },
        labels,
        iterations: 6,
        burn_in: 2,
        sample_lag: 2,
        mode,
        seed,
        scan: ScanOrder::Sequential,
    }
}

fn trained(corpus: &Corpus, h: Hyperparams) -> Trainer<'_> {
    let mut trainer = Trainer::new(corpus, h).unwrap();
    trainer.run(|_| {});
    trainer
}

/// The same corpus with the tokens of every document shuffled.
fn shuffle_tokens(corpus: &Corpus, seed: u64) -> Corpus {
    let mut rng = ChainRng::seed_from_u64(seed);
    let docs: Vec<Document> = corpus
        .documents()
        .iter()
        .map(|d| {
            let mut d = d.clone();
            d.tokens.shuffle(&mut rng);
            d
        })
        .collect();
    Corpus::new(docs, corpus.vocabulary().clone(), corpus.label_names().to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counts_match_rebuild_under_random_steps(
        mode in mode_strategy(),
        corpus_seed in 0u64..10_000,
        steps in proptest::collection::vec((0usize..3, 0usize..8), 1..60),
    ) {
        let corpus = tiny_corpus(2, 4, 6, corpus_seed);
        let mut state = init_state(&corpus, hp(mode, corpus_seed, 2)).unwrap();
        let mut buf = SweepBuffer::default();
        for (d, t) in steps {
            let d = d % corpus.documents().len();
            let t = t % corpus.document(d).tokens.len();
            resample_token(&mut state, d, t, &mut buf);
            prop_assert_eq!(state.counts(), &rebuild_counts(&state));
        }
        prop_assert!(state.counts().check_marginals().is_ok());
    }

    #[test]
    fn word_likelihood_is_a_distribution(mode in mode_strategy(), seed in 0u64..10_000) {
        let corpus = tiny_corpus(2, 5, 5, seed);
        let trainer = trained(&corpus, hp(mode, seed, 2));
        let params = trainer.params();
        for d in 0..corpus.documents().len() {
            let total: f64 = (0..corpus.vocab_size()).map(|v| word_likelihood(&params, d, v)).sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "doc {}: {}", d, total);
        }
    }

    #[test]
    fn perplexity_ignores_token_order(mode in mode_strategy(), seed in 0u64..10_000) {
        let corpus = tiny_corpus(2, 5, 5, seed);
        let trainer = trained(&corpus, hp(mode, seed, 2));
        let params = trainer.params();
        let shuffled = shuffle_tokens(&corpus, seed + 1);
        for which in [DomainSelector::Source, DomainSelector::Target, DomainSelector::All] {
            let a = perplexity(&params, &corpus, which).unwrap();
            let b = perplexity(&params, &shuffled, which).unwrap();
            prop_assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perplexity_ignores_document_order(mode in mode_strategy(), seed in 0u64..10_000) {
        let corpus = tiny_corpus(2, 5, 5, seed);
        let trainer = trained(&corpus, hp(mode, seed, 2));
        let params = trainer.params();
        let mut order: Vec<usize> = (0..corpus.documents().len()).collect();
        order.shuffle(&mut ChainRng::seed_from_u64(seed));
        let ll: f64 = order.iter().map(|&d| document_log_likelihood(&params, &corpus, d)).sum();
        let n: usize = corpus.documents().iter().map(|d| d.tokens.len()).sum();
        let expected = (-ll / n as f64).exp();
        let got = perplexity(&params, &corpus, DomainSelector::All).unwrap();
        prop_assert!((got / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_survives_monotone_rescaling(seed in 0u64..10_000, power in 0.2f64..5.0) {
        let corpus = tiny_corpus(3, 5, 5, seed);
        let trainer = trained(&corpus, hp(Mode::Unsupervised, seed, 3));
        let params = trainer.params();
        let mut rescaled = params.clone();
        for p in &mut rescaled.pi {
            *p = p.powf(power) * 7.0;
        }
        let a: Vec<usize> = classify(&params, &corpus).unwrap().iter().map(|p| p.label).collect();
        let b: Vec<usize> = classify(&rescaled, &corpus).unwrap().iter().map(|p| p.label).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn estimated_distributions_normalize(mode in mode_strategy(), seed in 0u64..10_000) {
        let corpus = tiny_corpus(2, 5, 5, seed);
        let state = init_state(&corpus, hp(mode, seed, 2)).unwrap();
        let (worst_sum, smallest) = estimate_params(&state).normalization_error();
        prop_assert!(worst_sum < 1e-9 && smallest > 0.0, "{} {}", worst_sum, smallest);
    }

    #[test]
    fn checkpoints_and_params_round_trip(mode in mode_strategy(), seed in 0u64..10_000) {
        let corpus = tiny_corpus(2, 5, 5, seed);
        let trainer = trained(&corpus, hp(mode, seed, 2));
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &Checkpoint::from_trainer(&trainer)).unwrap();
        let back = read_checkpoint(&bytes[..]).unwrap();
        let mut again = Vec::new();
        write_checkpoint(&mut again, &back).unwrap();
        prop_assert_eq!(&bytes, &again);

        let params = trainer.params();
        let mut pbytes = Vec::new();
        write_params(&mut pbytes, &params).unwrap();
        prop_assert_eq!(read_params(&pbytes[..]).unwrap(), params);
    }

    #[test]
    fn corpus_file_round_trips(seed in 0u64..10_000, labels in 1usize..4) {
        let corpus = tiny_corpus(labels, 6, 5, seed);
        let mut bytes = Vec::new();
        write_corpus(&corpus, &mut bytes).unwrap();
        let back = read_corpus(&bytes[..]).unwrap();
        prop_assert_eq!(back.content_hash(), corpus.content_hash());
        prop_assert_eq!(back.documents(), corpus.documents());
    }

    #[test]
    fn t_test_is_antisymmetric(
        pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..12),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let (Ok(a), Ok(b)) = (paired_t_test(&x, &y), paired_t_test(&y, &x)) {
            prop_assert!((a.t + b.t).abs() < 1e-9 * a.t.abs().max(1.0));
            prop_assert!((a.p + b.p - 1.0).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&a.p));
        }
    }

    #[test]
    fn t_tail_is_monotone(t in -20.0f64..20.0, dt in 0.01f64..5.0, df in 1usize..40) {
        let df = df as f64;
        prop_assert!(student_t_sf(t + dt, df) <= student_t_sf(t, df) + 1e-15);
    }
}
