//! Decisions read off a trained model: target labels, perplexity and topic
//! word lists.
//!
//! Everything here is transductive. The parameters come from a chain that
//! saw the target documents, so no fold-in sampling is needed.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Domain, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{Mode, PosteriorParams, TopicKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub label: usize,
    /// Group proportions of the document; sums to 1.
    pub scores: Vec<f64>,
}

/// Index of the largest score, lowest index on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn check_params(params: &PosteriorParams, corpus: &Corpus) -> Result<()> {
    let domains: Vec<Domain> = corpus.documents().iter().map(|d| d.domain).collect();
    if params.doc_domains != domains || params.layout.vocab != corpus.vocab_size() {
        return Err(Error::Shape("parameters were not estimated on this corpus".into()));
    }
    Ok(())
}

/// Labels every target document with its dominant topic group.
pub fn classify(params: &PosteriorParams, corpus: &Corpus) -> Result<Vec<Prediction>> {
    if params.mode == Mode::Ccl {
        return Err(Error::Unsupported(
            "ccl models have no label axis; classify through eval::train_logistic on topic features".into(),
        ));
    }
    check_params(params, corpus)?;
    Ok(corpus
        .domain_indices(Domain::Target)
        .into_iter()
        .map(|d| {
            let scores = params.pi(d).to_vec();
            Prediction {
                doc_id: corpus.document(d).id.clone(),
                label: argmax(&scores),
                scores,
            }
        })
        .collect())
}

/// Mixture weight of every topic for document `d`, laid out like the
/// conditional cells: for each group, common topics then specific ones.
fn topic_weights(params: &PosteriorParams, d: usize) -> Vec<f64> {
    let mut w = Vec::new();
    for l in 0..params.groups() {
        let pi = params.pi(d)[l];
        let sigma = params.sigma(d, l);
        w.extend(params.theta_common(d, l).iter().map(|t| pi * (1.0 - sigma) * t));
        w.extend(params.theta_spec(d, l).iter().map(|t| pi * sigma * t));
    }
    w
}

fn mixture_prob(params: &PosteriorParams, m: Domain, weights: &[f64], v: usize) -> f64 {
    let lay = &params.layout;
    let (tc, ts) = (lay.t_common, lay.t_spec(m));
    let mut p = 0.0;
    for l in 0..lay.groups {
        let block = &weights[l * (tc + ts)..(l + 1) * (tc + ts)];
        for c in 0..tc {
            p += block[c] * params.phi_common(l, c)[v];
        }
        for s in 0..ts {
            p += block[tc + s] * params.phi_spec(m, l, s)[v];
        }
    }
    p
}

/// `p(v | d)`: the word marginal of document `d` under the fitted mixture.
pub fn word_likelihood(params: &PosteriorParams, d: usize, v: usize) -> f64 {
    mixture_prob(params, params.doc_domains[d], &topic_weights(params, d), v)
}

/// Which documents a perplexity is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSelector {
    Source,
    #[default]
    Target,
    All,
}

impl DomainSelector {
    pub fn includes(self, domain: Domain) -> bool {
        match self {
            DomainSelector::Source => domain == Domain::Source,
            DomainSelector::Target => domain == Domain::Target,
            DomainSelector::All => true,
        }
    }
}

impl FromStr for DomainSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" | "src" => Ok(DomainSelector::Source),
            "target" | "tgt" => Ok(DomainSelector::Target),
            "all" => Ok(DomainSelector::All),
            _ => Err(Error::Format(format!("unknown domain selector `{s}`"))),
        }
    }
}

/// Sum of `ln p(w | d)` over the tokens of one document.
pub fn document_log_likelihood(params: &PosteriorParams, corpus: &Corpus, d: usize) -> f64 {
    let weights = topic_weights(params, d);
    let m = params.doc_domains[d];
    corpus
        .document(d)
        .tokens
        .iter()
        .map(|&v| mixture_prob(params, m, &weights, v as usize).ln())
        .sum()
}

/// `exp(-Σ ln p(w|d) / Σ N_d)` over the selected documents. The
/// denominator counts exactly the tokens in the numerator.
pub fn perplexity(params: &PosteriorParams, corpus: &Corpus, which: DomainSelector) -> Result<f64> {
    check_params(params, corpus)?;
    let docs: Vec<usize> = (0..corpus.documents().len())
        .filter(|&d| which.includes(corpus.document(d).domain))
        .collect();
    let tokens: usize = docs.iter().map(|&d| corpus.document(d).tokens.len()).sum();
    if tokens == 0 {
        return Err(Error::InvalidCorpus(format!("no tokens in the {which:?} selection")));
    }
    // Collected before summing so the result does not depend on scheduling.
    let per_doc: Vec<f64> = docs
        .par_iter()
        .map(|&d| document_log_likelihood(params, corpus, d))
        .collect();
    Ok((-per_doc.iter().sum::<f64>() / tokens as f64).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub group: usize,
    pub kind: TopicKind,
    pub domain: Option<Domain>,
    pub topic: usize,
    pub words: Vec<(String, f64)>,
}

impl TopicReport {
    /// Short column title such as `Com 2`, `Src 0` or `Tgt 4`.
    pub fn title(&self) -> String {
        match (self.kind, self.domain) {
            (TopicKind::Common, _) => format!("Com {}", self.topic),
            (TopicKind::Specific, Some(Domain::Source)) => format!("Src {}", self.topic),
            (TopicKind::Specific, _) => format!("Tgt {}", self.topic),
        }
    }
}

/// The `k` most probable words of one topic, descending, ties by word id.
pub fn top_words(
    params: &PosteriorParams,
    vocabulary: &Vocabulary,
    group: usize,
    kind: TopicKind,
    domain: Option<Domain>,
    topic: usize,
    k: usize,
) -> Result<TopicReport> {
    let lay = &params.layout;
    if group >= lay.groups {
        return Err(Error::OutOfRange(format!("group {group} of {}", lay.groups)));
    }
    let domain = match kind {
        TopicKind::Common => None,
        TopicKind::Specific => Some(domain.ok_or_else(|| {
            Error::OutOfRange("a specific topic needs a domain".into())
        })?),
    };
    let count = match domain {
        None => lay.t_common,
        Some(m) => lay.t_spec(m),
    };
    if topic >= count {
        return Err(Error::OutOfRange(format!("topic {topic} of {count}")));
    }
    if vocabulary.len() != lay.vocab {
        return Err(Error::Shape("vocabulary does not match the parameters".into()));
    }
    let phi = params.phi(group, kind, domain.unwrap_or(Domain::Source), topic);
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    let words = order
        .into_iter()
        .take(k)
        .map(|v| (vocabulary.word(v as u32).to_string(), phi[v]))
        .collect();
    Ok(TopicReport {
        group,
        kind,
        domain,
        topic,
        words,
    })
}

/// Every topic of one group: common topics, then source and target
/// specific ones.
pub fn group_topics(
    params: &PosteriorParams,
    vocabulary: &Vocabulary,
    group: usize,
    k: usize,
) -> Result<Vec<TopicReport>> {
    let lay = &params.layout;
    let mut out = Vec::new();
    for c in 0..lay.t_common {
        out.push(top_words(params, vocabulary, group, TopicKind::Common, None, c, k)?);
    }
    for m in Domain::ALL {
        for s in 0..lay.t_spec(m) {
            out.push(top_words(params, vocabulary, group, TopicKind::Specific, Some(m), s, k)?);
        }
    }
    Ok(out)
}

/// Topics side by side, one column each, words ranked top to bottom.
pub fn render_topics(reports: &[TopicReport], group_name: &str) -> String {
    let titles: Vec<String> = reports.iter().map(TopicReport::title).collect();
    let widths: Vec<usize> = reports
        .iter()
        .zip(&titles)
        .map(|(r, t)| r.words.iter().map(|(w, _)| w.chars().count()).chain([t.len()]).max().unwrap_or(0))
        .collect();
    let rows = reports.iter().map(|r| r.words.len()).max().unwrap_or(0);
    let mut out = format!("{group_name}\n");
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let _ = write!(s, "{cell:<w$}");
        }
        s.trim_end().to_string()
    };
    out.push_str(&line(titles.iter().map(String::as_str).collect()));
    out.push('\n');
    for i in 0..rows {
        let cells = reports
            .iter()
            .map(|r| r.words.get(i).map(|(w, _)| w.as_str()).unwrap_or(""))
            .collect();
        out.push_str(&line(cells));
        out.push('\n');
    }
    out
}

/// Prediction table: a `#` header row, then
/// `doc_id<TAB>predicted_label<TAB>score_0..score_{L-1}`.
pub fn write_predictions<W: Write>(mut w: W, predictions: &[Prediction], label_names: &[String]) -> std::io::Result<()> {
    write!(w, "# doc_id\tpredicted_label")?;
    for l in 0..label_names.len() {
        write!(w, "\tscore_{l}")?;
    }
    writeln!(w)?;
    for p in predictions {
        write!(w, "{}\t{}", p.doc_id, label_names[p.label])?;
        for s in &p.scores {
            write!(w, "\t{s}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
