//! Small generated corpora for tests, examples and smoke runs.
//!
//! [`SyntheticSpec`] draws documents whose words come from three pools: words
//! shared by both domains within a label, words specific to one domain and
//! label, and background words shared by everything. A model that aligns the
//! two domains through the shared pool can label target documents even
//! though their domain-specific words never occur in the source.

use rand::{Rng, SeedableRng};

use crate::corpus::{corpus_from_raw, Corpus, CorpusOptions, Document, Domain, RawDocument, Stopwords, Vocabulary};
use crate::model::ChainRng;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub labels: usize,
    /// Documents per label in each domain.
    pub docs_per_label: usize,
    pub doc_len: usize,
    /// Distinct words in each pool.
    pub words_per_pool: usize,
    /// Probability that a token comes from its label's cross-domain pool.
    pub shared_share: f64,
    /// Probability that a token comes from its (domain, label) pool.
    pub specific_share: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            labels: 2,
            docs_per_label: 6,
            doc_len: 20,
            words_per_pool: 8,
            shared_share: 0.4,
            specific_share: 0.4,
        }
    }
}

fn letters(mut n: usize, width: usize) -> String {
    let mut out = vec![b'a'; width];
    for slot in out.iter_mut().rev() {
        *slot = b'a' + (n % 26) as u8;
        n /= 26;
    }
    String::from_utf8(out).expect("ascii")
}

impl SyntheticSpec {
    fn word(&self, pool: &str, label: usize, k: usize) -> String {
        format!("{pool}{}{}", letters(label, 2), letters(k, 3))
    }

    /// Raw source and target documents with gold labels `l0`, `l1`, ...
    pub fn generate_raw(&self, seed: u64) -> (Vec<RawDocument>, Vec<RawDocument>) {
        let mut rng = ChainRng::seed_from_u64(seed);
        let mut out = [Vec::new(), Vec::new()];
        for domain in Domain::ALL {
            let pool = match domain {
                Domain::Source => "src",
                Domain::Target => "tgt",
            };
            for label in 0..self.labels {
                for i in 0..self.docs_per_label {
                    let words: Vec<String> = (0..self.doc_len)
                        .map(|_| {
                            let u: f64 = rng.random();
                            let k = rng.random_range(0..self.words_per_pool);
                            if u < self.shared_share {
                                self.word("com", label, k)
                            } else if u < self.shared_share + self.specific_share {
                                self.word(pool, label, k)
                            } else {
                                self.word("bgr", 0, k)
                            }
                        })
                        .collect();
                    out[domain.index()].push(RawDocument {
                        id: format!("{}-{label}-{i}", domain.name()),
                        label: Some(format!("l{label}")),
                        text: words.join(" "),
                    });
                }
            }
        }
        let [src, tgt] = out;
        (src, tgt)
    }

    pub fn generate(&self, seed: u64) -> Corpus {
        let (src, tgt) = self.generate_raw(seed);
        corpus_from_raw(
            src,
            tgt,
            &CorpusOptions {
                min_df: 1,
                stopwords: Stopwords::none(),
                ..Default::default()
            },
        )
        .expect("synthetic corpus is well formed")
    }
}

/// A random corpus of two or three documents (at least one per domain) with
/// `1..=max_len` tokens each over a vocabulary of `vocab` words.
pub fn tiny_corpus(labels: usize, vocab: usize, max_len: usize, seed: u64) -> Corpus {
    let mut rng = ChainRng::seed_from_u64(seed);
    let n_docs = rng.random_range(2..=3);
    let documents = (0..n_docs)
        .map(|i| {
            let domain = match i {
                0 => Domain::Source,
                1 => Domain::Target,
                _ => {
                    if rng.random() {
                        Domain::Source
                    } else {
                        Domain::Target
                    }
                }
            };
            let len = rng.random_range(1..=max_len);
            Document {
                id: format!("d{i}"),
                domain,
                label: Some(rng.random_range(0..labels)),
                tokens: (0..len).map(|_| rng.random_range(0..vocab) as u32).collect(),
            }
        })
        .collect();
    let vocabulary = Vocabulary::from_words((0..vocab).map(|i| format!("w{}", letters(i, 3))));
    let label_names = (0..labels).map(|l| format!("l{l}")).collect();
    Corpus::new(documents, vocabulary, label_names).expect("tiny corpus is well formed")
}

/// The same corpus with every document repeated right after itself.
pub fn duplicate_documents(corpus: &Corpus) -> Corpus {
    let documents = corpus
        .documents()
        .iter()
        .flat_map(|d| {
            let mut copy = d.clone();
            copy.id.push_str("#2");
            [d.clone(), copy]
        })
        .collect();
    Corpus::new(documents, corpus.vocabulary().clone(), corpus.label_names().to_vec())
        .expect("duplicating documents keeps invariants")
}
