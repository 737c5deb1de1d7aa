use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mode, ModelState, PosteriorParams, TopicKind};

/// Dense row-major document-by-feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FeatureMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged feature rows".into()));
        }
        Ok(FeatureMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// The rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// How documents are turned into classifier inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureEncoding {
    /// Share of the document's tokens assigned to each latent cell.
    #[default]
    #[serde(alias = "counts")]
    LatentCounts,
    /// Estimated topic proportions weighted by group and type.
    Theta,
}

impl FromStr for FeatureEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counts" | "latent-counts" => Ok(FeatureEncoding::LatentCounts),
            "theta" => Ok(FeatureEncoding::Theta),
            _ => Err(Error::Format(format!("unknown feature encoding `{s}`"))),
        }
    }
}

/// Per-document normalized latent-cell counts.
///
/// Grouped chains give `L × (T^C + max T^S)` columns: for each group the
/// common topics, then the document's own specific topics, zero padded so
/// source and target rows share a width. Ccl chains give `T^C` columns of
/// `(n_zc + n_zs) / N_d`. Rows sum to 1.
pub fn extract_features(state: &ModelState<'_>) -> FeatureMatrix {
    let counts = state.counts();
    let lay = counts.layout();
    let n_docs = counts.num_docs();
    if state.hyperparams().mode == Mode::Ccl {
        let mut x = FeatureMatrix::zeros(n_docs, lay.t_common);
        for d in 0..n_docs {
            let n = counts.n_d(d) as f64;
            let c = counts.doc_topics(d, 0, TopicKind::Common);
            let s = counts.doc_topics(d, 0, TopicKind::Specific);
            for (z, out) in x.row_mut(d).iter_mut().enumerate() {
                *out = (c[z] + s[z]) as f64 / n;
            }
        }
        return x;
    }
    let width = lay.t_common + lay.t_spec.iter().copied().max().unwrap_or(0);
    let mut x = FeatureMatrix::zeros(n_docs, lay.groups * width);
    for d in 0..n_docs {
        let n = counts.n_d(d) as f64;
        let row = x.row_mut(d);
        for l in 0..lay.groups {
            let block = &mut row[l * width..(l + 1) * width];
            for (out, &k) in block.iter_mut().zip(counts.doc_topics(d, l, TopicKind::Common)) {
                *out = k as f64 / n;
            }
            for (out, &k) in block[lay.t_common..].iter_mut().zip(counts.doc_topics(d, l, TopicKind::Specific)) {
                *out = k as f64 / n;
            }
        }
    }
    x
}

/// Topic-proportion features with the same column layout as
/// [`extract_features`]: `π_l (1 − σ_l) θ^C_l` then `π_l σ_l θ^S_l` per group,
/// or the shared mixture for ccl parameters. Rows sum to 1.
pub fn extract_theta_features(params: &PosteriorParams) -> FeatureMatrix {
    let lay = &params.layout;
    let n_docs = params.num_docs();
    if params.mode == Mode::Ccl {
        let mut x = FeatureMatrix::zeros(n_docs, lay.t_common);
        for d in 0..n_docs {
            x.row_mut(d).copy_from_slice(params.theta_common(d, 0));
        }
        return x;
    }
    let width = lay.t_common + lay.t_spec.iter().copied().max().unwrap_or(0);
    let mut x = FeatureMatrix::zeros(n_docs, lay.groups * width);
    for d in 0..n_docs {
        let row = x.row_mut(d);
        for l in 0..lay.groups {
            let (pi, sigma) = (params.pi(d)[l], params.sigma(d, l));
            let block = &mut row[l * width..(l + 1) * width];
            for (out, t) in block.iter_mut().zip(params.theta_common(d, l)) {
                *out = pi * (1.0 - sigma) * t;
            }
            for (out, t) in block[lay.t_common..].iter_mut().zip(params.theta_spec(d, l)) {
                *out = pi * sigma * t;
            }
        }
    }
    x
}
