//! Line-oriented serialized corpus.
//!
//! ```text
//! XDTC1
//! labels<TAB>comp<TAB>rec
//! vocab<TAB>3
//! car
//! disk
//! hockey
//! docs<TAB>2
//! s<TAB>0<TAB>doc-1<TAB>1 1 0
//! t<TAB>-<TAB>doc-2<TAB>2 0
//! ```
//!
//! Document lines hold the domain (`s`/`t`), the label id (or `-`), the
//! document id and the space separated token ids.

use std::io::{BufRead, Write};

use super::{Corpus, Document, Domain, Vocabulary};
use crate::error::{Error, Result};

pub const CORPUS_MAGIC: &str = "XDTC1";

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CORPUS_MAGIC}")?;
    write!(out, "labels")?;
    for l in corpus.label_names() {
        write!(out, "\t{l}")?;
    }
    writeln!(out)?;
    writeln!(out, "vocab\t{}", corpus.vocab_size())?;
    for w in corpus.vocabulary().words() {
        writeln!(out, "{w}")?;
    }
    writeln!(out, "docs\t{}", corpus.documents().len())?;
    let mut line = String::new();
    for doc in corpus.documents() {
        line.clear();
        line.push_str(match doc.domain {
            Domain::Source => "s\t",
            Domain::Target => "t\t",
        });
        match doc.label {
            Some(l) => line.push_str(&l.to_string()),
            None => line.push('-'),
        }
        line.push('\t');
        line.push_str(&doc.id);
        line.push('\t');
        for (i, t) in doc.tokens.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&t.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Corpus> {
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(Error::Format(format!("line {}: {e}", i + 1))),
            None => Err(Error::Format(format!("unexpected end of corpus file, expected {what}"))),
        }
    };
    let bad = |line: usize, msg: &str| Error::Format(format!("line {line}: {msg}"));

    let (_, magic) = next("magic header")?;
    if magic != CORPUS_MAGIC {
        return Err(Error::Format(format!(
            "not a corpus file: expected magic `{CORPUS_MAGIC}`, found `{magic}`"
        )));
    }
    let (n, labels) = next("labels")?;
    let mut fields = labels.split('\t');
    if fields.next() != Some("labels") {
        return Err(bad(n, "expected `labels`"));
    }
    let label_names: Vec<String> = fields.map(str::to_owned).collect();

    let (n, vocab) = next("vocab")?;
    let v: usize = vocab
        .strip_prefix("vocab\t")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(n, "expected `vocab<TAB>size`"))?;
    let mut words = Vec::with_capacity(v);
    for _ in 0..v {
        words.push(next("vocabulary word")?.1);
    }
    let vocabulary = Vocabulary::from_words(words.iter().cloned());
    if vocabulary.words() != words.as_slice() {
        return Err(Error::Format("vocabulary is not sorted and distinct".into()));
    }

    let (n, docs) = next("docs")?;
    let d: usize = docs
        .strip_prefix("docs\t")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(n, "expected `docs<TAB>count`"))?;
    let mut documents = Vec::with_capacity(d);
    for _ in 0..d {
        let (n, line) = next("document")?;
        let mut f = line.splitn(4, '\t');
        let (domain, label, id, toks) = match (f.next(), f.next(), f.next(), f.next()) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => return Err(bad(n, "expected 4 tab-separated fields")),
        };
        let domain = match domain {
            "s" => Domain::Source,
            "t" => Domain::Target,
            _ => return Err(bad(n, "domain must be `s` or `t`")),
        };
        let label = match label {
            "-" => None,
            l => Some(l.parse().map_err(|_| bad(n, "bad label id"))?),
        };
        let tokens = toks
            .split(' ')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad(n, "bad token id"))?;
        documents.push(Document {
            id: id.to_owned(),
            domain,
            label,
            tokens,
        });
    }
    Corpus::new(documents, vocabulary, label_names)
}

#[cfg(test)]
mod tests {
    use super::super::{corpus_from_raw, CorpusOptions, RawDocument};
    use super::*;

    #[test]
    fn roundtrip_and_magic() {
        let corpus = corpus_from_raw(
            vec![RawDocument {
                id: "s 1".into(),
                label: Some("rec".into()),
                text: "hockey puck hockey".into(),
            }],
            vec![RawDocument {
                id: "t1".into(),
                label: None,
                text: "puck".into(),
            }],
            &CorpusOptions {
                min_df: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        assert!(buf.starts_with(b"XDTC1\n"));
        let back = read_corpus(&buf[..]).unwrap();
        assert_eq!(back, corpus);
    }

    #[test]
    fn rejects_wrong_magic() {
        let err = read_corpus(&b"XDTC0\n"[..]).unwrap_err();
        assert!(err.to_string().contains("magic"));
    }
}
