//! Corpus ingestion: tokenization, vocabulary construction and document
//! encoding for a labeled source domain and an unlabeled target domain.
//!
//! Documents arrive either as canonical TSV files (`doc_id<TAB>label<TAB>text`,
//! with `-` as the label of an unlabeled document) or as a directory tree in
//! the 20 Newsgroups layout (`<label>/<file>`). Both domains share a single
//! vocabulary.

mod format;
pub mod newsgroups;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{read_corpus, write_corpus, CORPUS_MAGIC};

/// Which collection a document belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Source, Domain::Target];

    pub fn index(self) -> usize {
        match self {
            Domain::Source => 0,
            Domain::Target => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" | "src" => Ok(Domain::Source),
            "target" | "tgt" => Ok(Domain::Target),
            other => Err(Error::InvalidCorpus(format!("unknown domain `{other}`"))),
        }
    }
}

/// Bijective word <-> id map. Ids are assigned in lexicographic word order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from a set of distinct words.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        let words: Vec<String> = set.into_iter().collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocabulary { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub domain: Domain,
    /// Gold label. Present for every source document; for target documents it
    /// is evaluation-only and never read by the sampler.
    pub label: Option<usize>,
    pub tokens: Vec<u32>,
}

impl Document {
    /// The label the sampler is allowed to see: the gold label of a source
    /// document, nothing for a target document.
    pub fn supervision_label(&self) -> Option<usize> {
        match self.domain {
            Domain::Source => self.label,
            Domain::Target => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
    label_names: Vec<String>,
}

impl Corpus {
    /// Assembles a corpus from already-encoded documents, checking every
    /// structural invariant.
    pub fn new(
        documents: Vec<Document>,
        vocabulary: Vocabulary,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if label_names.is_empty() {
            return Err(Error::InvalidCorpus("corpus has no labels".into()));
        }
        let distinct: HashSet<&String> = label_names.iter().collect();
        if distinct.len() != label_names.len() {
            return Err(Error::InvalidCorpus("duplicate label names".into()));
        }
        let v = vocabulary.len() as u32;
        for doc in &documents {
            if doc.tokens.is_empty() {
                return Err(Error::InvalidCorpus(format!("document `{}` is empty", doc.id)));
            }
            if let Some(&bad) = doc.tokens.iter().find(|&&t| t >= v) {
                return Err(Error::InvalidCorpus(format!(
                    "document `{}` has token id {bad} outside vocabulary of size {v}",
                    doc.id
                )));
            }
            match doc.label {
                Some(l) if l >= label_names.len() => {
                    return Err(Error::InvalidCorpus(format!(
                        "document `{}` has label id {l} but only {} labels exist",
                        doc.id,
                        label_names.len()
                    )))
                }
                None if doc.domain == Domain::Source => {
                    return Err(Error::InvalidCorpus(format!(
                        "source document `{}` has no label",
                        doc.id
                    )))
                }
                _ => {}
            }
        }
        if !documents.iter().any(|d| d.domain == Domain::Source) {
            return Err(Error::InvalidCorpus("no source documents".into()));
        }
        if !documents.iter().any(|d| d.domain == Domain::Target) {
            return Err(Error::InvalidCorpus("no target documents".into()));
        }
        Ok(Corpus {
            documents,
            vocabulary,
            label_names,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, d: usize) -> &Document {
        &self.documents[d]
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn num_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    pub fn label_id(&self, name: &str) -> Option<usize> {
        self.label_names.iter().position(|l| l == name)
    }

    /// Indices of the documents in one domain, in corpus order.
    pub fn domain_indices(&self, domain: Domain) -> Vec<usize> {
        self.documents
            .iter()
            .enumerate()
            .filter(|(_, d)| d.domain == domain)
            .map(|(i, _)| i)
            .collect()
    }

    /// Decodes a document back into its preprocessed token stream.
    pub fn decode(&self, d: usize) -> Vec<&str> {
        self.documents[d]
            .tokens
            .iter()
            .map(|&t| self.vocabulary.word(t))
            .collect()
    }

    /// SHA-256 of the serialized corpus, hex encoded.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut buf = Vec::new();
        write_corpus(self, &mut buf).expect("writing to a Vec cannot fail");
        hex::encode(Sha256::digest(&buf))
    }
}

/// A document before tokenization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub label: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    /// Minimum number of documents (over both domains) a word must occur in.
    pub min_df: usize,
    /// Drop the RFC 822 style header block of raw newsgroup posts.
    pub strip_headers: bool,
    /// With directory ingestion, use the part of the directory name before
    /// the first `.` as label (`comp.graphics` -> `comp`).
    pub top_level_labels: bool,
    pub stopwords: Stopwords,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            min_df: 3,
            strip_headers: false,
            top_level_labels: false,
            stopwords: Stopwords::english(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The bundled English list (318 words).
    pub fn english() -> Self {
        Stopwords(english_stopwords().clone())
    }

    pub fn none() -> Self {
        Stopwords(HashSet::new())
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Stopwords(words.into_iter().map(|w| w.into().to_lowercase()).collect())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

fn english_stopwords() -> &'static HashSet<String> {
    static LIST: OnceLock<HashSet<String>> = OnceLock::new();
    LIST.get_or_init(|| {
        include_str!("stopwords.txt")
            .lines()
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect()
    })
}

/// Splits text into lowercase alphabetic tokens, dropping one-letter tokens
/// and English stopwords. Every non-letter character is a separator.
///
/// ```
/// assert_eq!(xdtc::corpus::tokenize("NHL 1993 hockey!!"), ["nhl", "hockey"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, english_stopwords_ref())
}

fn english_stopwords_ref() -> &'static Stopwords {
    static LIST: OnceLock<Stopwords> = OnceLock::new();
    LIST.get_or_init(Stopwords::english)
}

pub fn tokenize_with(text: &str, stopwords: &Stopwords) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|piece| !piece.is_empty())
        .map(str::to_lowercase)
        .filter(|tok| tok.chars().count() >= 2 && !stopwords.contains(tok))
        .collect()
}

/// Removes the header block (everything up to the first blank line) of a
/// newsgroup post. Text without a blank line is returned unchanged.
pub fn strip_headers(text: &str) -> &str {
    let normalized = text.find("\n\n").or_else(|| text.find("\r\n\r\n"));
    match normalized {
        Some(pos) => text[pos..].trim_start_matches(['\r', '\n']),
        None => text,
    }
}

/// Reads source and target documents and builds an encoded corpus.
///
/// Each path may be a canonical TSV file or a directory in `<label>/<file>`
/// layout.
pub fn build_corpus(source: &Path, target: &Path, opts: &CorpusOptions) -> Result<Corpus> {
    let src = read_documents(source, Domain::Source, opts)?;
    let tgt = read_documents(target, Domain::Target, opts)?;
    corpus_from_raw(src, tgt, opts)
}

/// Reads raw documents from a TSV file or a label directory tree.
pub fn read_documents(path: &Path, domain: Domain, opts: &CorpusOptions) -> Result<Vec<RawDocument>> {
    let docs = if path.is_dir() {
        newsgroups::read_label_dirs(path, opts.top_level_labels)?
    } else {
        read_tsv(path, domain)?
    };
    Ok(docs)
}

/// Parses a canonical `doc_id<TAB>label<TAB>text` file. Blank lines are
/// skipped. Source documents must carry a label.
pub fn read_tsv(path: &Path, domain: Domain) -> Result<Vec<RawDocument>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: line_of_byte(e.as_bytes(), e.utf8_error().valid_up_to()),
        message: "invalid UTF-8".into(),
    })?;
    parse_tsv(&text, domain).map_err(|(line, message)| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    })
}

fn line_of_byte(bytes: &[u8], offset: usize) -> usize {
    bytes[..offset].iter().filter(|&&b| b == b'\n').count() + 1
}

pub(crate) fn parse_tsv(
    text: &str,
    domain: Domain,
) -> std::result::Result<Vec<RawDocument>, (usize, String)> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (id, label, body) = match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(label), Some(body)) => (id, label, body),
            _ => return Err((lineno, "expected 3 tab-separated fields: doc_id, label, text".into())),
        };
        if id.is_empty() {
            return Err((lineno, "empty doc_id".into()));
        }
        let label = match label.trim() {
            "" | "-" => None,
            name => Some(name.to_owned()),
        };
        if domain == Domain::Source && label.is_none() {
            return Err((lineno, format!("source document `{id}` missing label")));
        }
        docs.push(RawDocument {
            id: id.to_owned(),
            label,
            text: body.to_owned(),
        });
    }
    Ok(docs)
}

/// Tokenizes both domains, applies the document-frequency threshold and
/// encodes the result.
pub fn corpus_from_raw(
    source: Vec<RawDocument>,
    target: Vec<RawDocument>,
    opts: &CorpusOptions,
) -> Result<Corpus> {
    if source.is_empty() {
        return Err(Error::InvalidCorpus("no source documents".into()));
    }
    if target.is_empty() {
        return Err(Error::InvalidCorpus("no target documents".into()));
    }

    let label_names: Vec<String> = source
        .iter()
        .filter_map(|d| d.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if let Some(doc) = source.iter().find(|d| d.label.is_none()) {
        return Err(Error::InvalidCorpus(format!(
            "source document `{}` missing label",
            doc.id
        )));
    }
    let label_of = |doc: &RawDocument| -> Result<Option<usize>> {
        match &doc.label {
            None => Ok(None),
            Some(name) => label_names
                .iter()
                .position(|l| l == name)
                .map(Some)
                .ok_or_else(|| {
                    Error::InvalidCorpus(format!(
                        "document `{}` has label `{name}` which no source document carries",
                        doc.id
                    ))
                }),
        }
    };

    let tokenized: Vec<(Domain, &RawDocument, Vec<String>)> = source
        .iter()
        .map(|d| (Domain::Source, d))
        .chain(target.iter().map(|d| (Domain::Target, d)))
        .map(|(domain, doc)| {
            let text = if opts.strip_headers {
                strip_headers(&doc.text)
            } else {
                doc.text.as_str()
            };
            (domain, doc, tokenize_with(text, &opts.stopwords))
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, _, toks) in &tokenized {
        let distinct: HashSet<&str> = toks.iter().map(String::as_str).collect();
        for w in distinct {
            *df.entry(w).or_default() += 1;
        }
    }
    let vocabulary = Vocabulary::from_words(
        df.iter()
            .filter(|(_, &n)| n >= opts.min_df.max(1))
            .map(|(w, _)| (*w).to_owned()),
    );
    if vocabulary.is_empty() {
        return Err(Error::InvalidCorpus(format!(
            "no word reaches document frequency {}",
            opts.min_df
        )));
    }

    let mut documents = Vec::with_capacity(tokenized.len());
    let mut dropped = 0usize;
    for (domain, raw, toks) in &tokenized {
        let tokens: Vec<u32> = toks.iter().filter_map(|w| vocabulary.id(w)).collect();
        if tokens.is_empty() {
            log::warn!("dropping {} document `{}`: empty after preprocessing", domain.name(), raw.id);
            dropped += 1;
            continue;
        }
        documents.push(Document {
            id: raw.id.clone(),
            domain: *domain,
            label: label_of(raw)?,
            tokens,
        });
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} empty documents");
    }
    Corpus::new(documents, vocabulary, label_names)
}

/// Combines two corpora with disjoint label sets into one. Labels of `b` are
/// shifted past those of `a`; the vocabulary is the union of both and all
/// documents are re-encoded against it.
pub fn merge_datasets(a: &Corpus, b: &Corpus) -> Result<Corpus> {
    if let Some(dup) = b.label_names.iter().find(|l| a.label_names.contains(l)) {
        return Err(Error::InvalidCorpus(format!(
            "cannot merge corpora: label `{dup}` appears in both"
        )));
    }
    let vocabulary = Vocabulary::from_words(
        a.vocabulary
            .words()
            .iter()
            .chain(b.vocabulary.words())
            .cloned(),
    );
    let shift = a.num_labels();
    let reencode = |src: &Corpus, doc: &Document, offset: usize| Document {
        id: doc.id.clone(),
        domain: doc.domain,
        label: doc.label.map(|l| l + offset),
        tokens: doc
            .tokens
            .iter()
            .map(|&t| {
                vocabulary
                    .id(src.vocabulary.word(t))
                    .expect("union vocabulary contains every word")
            })
            .collect(),
    };
    let documents = a
        .documents
        .iter()
        .map(|d| reencode(a, d, 0))
        .chain(b.documents.iter().map(|d| reencode(b, d, shift)))
        .collect();
    let label_names = a.label_names.iter().chain(&b.label_names).cloned().collect();
    Corpus::new(documents, vocabulary, label_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: &str, label: Option<&str>, text: &str) -> RawDocument {
        RawDocument {
            id: id.into(),
            label: label.map(Into::into),
            text: text.into(),
        }
    }

    fn opts(min_df: usize) -> CorpusOptions {
        CorpusOptions {
            min_df,
            ..CorpusOptions::default()
        }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("The cat sat."), ["cat", "sat"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("NHL 1993 hockey!!"), ["nhl", "hockey"]);
        assert_eq!(tokenize("a b-c x86_64 don't"), ["don"]);
    }

    #[test]
    fn min_df_keeps_shared_words_only() {
        let c = corpus_from_raw(
            vec![raw("s1", Some("a"), "car engine")],
            vec![raw("t1", None, "car wheel")],
            &opts(2),
        )
        .unwrap();
        assert_eq!(c.vocabulary().words(), ["car"]);
        assert_eq!(c.documents().len(), 2);
    }

    #[test]
    fn empty_source_is_an_error() {
        let err = corpus_from_raw(vec![], vec![raw("t", None, "car")], &opts(1)).unwrap_err();
        assert_eq!(err.to_string(), "no source documents");
    }

    #[test]
    fn documents_emptied_by_preprocessing_are_dropped() {
        let c = corpus_from_raw(
            vec![raw("s1", Some("a"), "hockey game"), raw("s2", Some("a"), "the of 12")],
            vec![raw("t1", None, "hockey")],
            &opts(1),
        )
        .unwrap();
        let ids: Vec<_> = c.documents().iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["s1", "t1"]);
    }

    #[test]
    fn labels_are_sorted_and_dense() {
        let c = corpus_from_raw(
            vec![raw("s1", Some("rec"), "hockey"), raw("s2", Some("comp"), "disk")],
            vec![raw("t1", Some("rec"), "hockey disk")],
            &opts(1),
        )
        .unwrap();
        assert_eq!(c.label_names(), ["comp", "rec"]);
        assert_eq!(c.document(0).label, Some(1));
        assert_eq!(c.document(2).label, Some(1));
        assert_eq!(c.document(2).supervision_label(), None);
    }

    #[test]
    fn unknown_target_label_is_rejected() {
        let err = corpus_from_raw(
            vec![raw("s1", Some("rec"), "hockey")],
            vec![raw("t1", Some("sci"), "hockey")],
            &opts(1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("sci"));
    }

    #[test]
    fn tsv_errors_carry_line_numbers() {
        let err = parse_tsv("a\tx\tcar\nbroken line\n", Domain::Source).unwrap_err();
        assert_eq!(err.0, 2);
        let err = parse_tsv("a\tx\tcar\n\nb\t-\tbus\n", Domain::Source).unwrap_err();
        assert_eq!(err.0, 3);
        assert!(err.1.contains("missing label"));
        let ok = parse_tsv("b\t-\tbus\twith tab\n", Domain::Target).unwrap();
        assert_eq!(ok[0].text, "bus\twith tab");
        assert_eq!(ok[0].label, None);
    }

    #[test]
    fn strip_headers_drops_block() {
        let post = "From: x@y\nSubject: hockey\n\nThe Leafs won.\n";
        assert_eq!(strip_headers(post), "The Leafs won.\n");
        assert_eq!(strip_headers("no header"), "no header");
    }

    fn small(labels: [&str; 2], words: [&str; 2]) -> Corpus {
        corpus_from_raw(
            vec![
                raw("s1", Some(labels[0]), words[0]),
                raw("s2", Some(labels[1]), words[1]),
            ],
            vec![raw("t1", None, &format!("{} {}", words[0], words[1]))],
            &opts(1),
        )
        .unwrap()
    }

    #[test]
    fn merge_shifts_labels_and_unions_vocabulary() {
        let a = small(["comp", "rec"], ["disk", "hockey"]);
        let b = small(["sci", "talk"], ["space", "guns"]);
        let m = merge_datasets(&a, &b).unwrap();
        assert_eq!(m.label_names(), ["comp", "rec", "sci", "talk"]);
        assert_eq!(m.vocab_size(), a.vocab_size() + b.vocab_size());
        assert_eq!(m.document(3).label, Some(2));
        assert_eq!(m.decode(3), b.decode(0));
        assert_eq!(m.decode(2), a.decode(2));
    }

    #[test]
    fn merge_with_itself_fails() {
        let a = small(["comp", "rec"], ["disk", "hockey"]);
        assert!(merge_datasets(&a, &a).is_err());
    }

    #[test]
    fn vocabulary_is_bijective() {
        let v = Vocabulary::from_words(["zeta", "alpha", "mid", "alpha"]);
        assert_eq!(v.len(), 3);
        for id in 0..v.len() as u32 {
            assert_eq!(v.id(v.word(id)), Some(id));
        }
    }
}
