//! Metrics, the paired t-test, a feature-based classifier for models
//! without supervision, and parameter sweeps.

mod features;
mod logistic;
mod sweep;
mod ttest;

pub use features::{extract_features, extract_theta_features, FeatureEncoding, FeatureMatrix};
pub use logistic::{loss, loss_and_gradient, train_logistic, LogisticConfig, LogisticModel};
pub use sweep::{run_sweep, write_sweep_tsv, Axis, SweepCell, SweepGrid, SweepOptions, SweepRow};
pub use ttest::{beta_reg, paired_t_test, student_t_sf, TTest};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Domain};
use crate::error::{Error, Result};
use crate::inference::{classify, perplexity, DomainSelector, Prediction};
use crate::model::{Mode, ModelState, PosteriorParams};

/// Gold labels of the target documents, in corpus order.
pub fn target_gold(corpus: &Corpus) -> Result<Vec<(String, usize)>> {
    corpus
        .domain_indices(Domain::Target)
        .into_iter()
        .map(|d| {
            let doc = corpus.document(d);
            doc.label
                .map(|l| (doc.id.clone(), l))
                .ok_or_else(|| Error::InvalidCorpus(format!("target document `{}` has no gold label", doc.id)))
        })
        .collect()
}

/// Fraction of predictions equal to the gold label of the same document.
pub fn accuracy(predictions: &[Prediction], gold: &[(String, usize)]) -> Result<f64> {
    if predictions.len() != gold.len() || predictions.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    let mut hits = 0;
    for (p, (id, label)) in predictions.iter().zip(gold) {
        if &p.doc_id != id {
            return Err(Error::Shape(format!("prediction for `{}` aligned with gold `{id}`", p.doc_id)));
        }
        hits += usize::from(p.label == *label);
    }
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub encoding: FeatureEncoding,
    pub logistic: LogisticConfig,
    pub perplexity_over: DomainSelector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvaluation {
    pub predictions: Vec<Prediction>,
    /// `None` when some target document has no gold label.
    pub accuracy: Option<f64>,
    pub perplexity: f64,
}

/// Labels target documents and scores the run.
///
/// Supervised chains read labels off the group proportions. Other chains
/// train a logistic regression on source-document features and apply it to
/// the target documents.
pub fn evaluate(state: &ModelState<'_>, params: &PosteriorParams, opts: &EvalOptions) -> Result<RunEvaluation> {
    let corpus = state.corpus();
    let predictions = match params.mode {
        Mode::Supervised => classify(params, corpus)?,
        Mode::Unsupervised | Mode::Ccl => feature_predictions(state, params, opts)?,
    };
    let accuracy = match target_gold(corpus) {
        Ok(gold) => Some(accuracy(&predictions, &gold)?),
        Err(_) => None,
    };
    Ok(RunEvaluation {
        predictions,
        accuracy,
        perplexity: perplexity(params, corpus, opts.perplexity_over)?,
    })
}

fn feature_predictions(state: &ModelState<'_>, params: &PosteriorParams, opts: &EvalOptions) -> Result<Vec<Prediction>> {
    let corpus = state.corpus();
    let x = match opts.encoding {
        FeatureEncoding::LatentCounts => extract_features(state),
        FeatureEncoding::Theta => extract_theta_features(params),
    };
    let src = corpus.domain_indices(Domain::Source);
    let y: Vec<usize> = src
        .iter()
        .map(|&d| corpus.document(d).label.expect("source documents are labeled"))
        .collect();
    let model = train_logistic(&x.select(&src), &y, corpus.num_labels(), &opts.logistic)?;
    Ok(corpus
        .domain_indices(Domain::Target)
        .into_iter()
        .map(|d| {
            let scores = model.predict_proba(x.row(d));
            Prediction {
                doc_id: corpus.document(d).id.clone(),
                label: crate::inference::argmax(&scores),
                scores,
            }
        })
        .collect())
}
