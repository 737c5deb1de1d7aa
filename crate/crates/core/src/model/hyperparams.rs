use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Domain;
use crate::error::{Error, Result};

/// Sampler variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Source tokens keep their document's gold group label; everything else
    /// is sampled.
    Supervised,
    /// Every label is sampled.
    Unsupervised,
    /// Cross-collection LDA: one topic index shared by the common and the
    /// domain-specific word distributions (one-to-one alignment), no groups.
    Ccl,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Supervised => "supervised",
            Mode::Unsupervised => "unsupervised",
            Mode::Ccl => "ccl",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "supervised" | "sup" => Ok(Mode::Supervised),
            "unsupervised" | "un" => Ok(Mode::Unsupervised),
            "ccl" | "cclda" => Ok(Mode::Ccl),
            other => Err(Error::InvalidHyperparams(format!(
                "unknown mode `{other}` (expected supervised, unsupervised or ccl)"
            ))),
        }
    }
}

/// Order in which a sweep visits documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanOrder {
    /// Corpus order, every sweep.
    #[default]
    Sequential,
    /// A fresh random permutation of the documents each sweep, drawn from the
    /// chain's generator.
    Random,
}

impl FromStr for ScanOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(ScanOrder::Sequential),
            "random" => Ok(ScanOrder::Random),
            other => Err(Error::InvalidHyperparams(format!("unknown scan order `{other}`"))),
        }
    }
}

impl fmt::Display for ScanOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanOrder::Sequential => "sequential",
            ScanOrder::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Dirichlet prior of the per-document topic mixtures.
    pub alpha: f64,
    /// Dirichlet prior of the topic-word distributions.
    pub beta: f64,
    /// Beta prior of the common/specific switch.
    pub gamma: f64,
    /// Dirichlet prior of the per-document group distribution.
    pub eta: f64,
    pub t_common: usize,
    /// Number of specific topics, indexed by [`Domain::index`].
    pub t_specific: [usize; 2],
    pub labels: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default)]
    pub scan: ScanOrder,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 10.0,
            beta: 0.1,
            gamma: 1.0,
            eta: 0.01,
            t_common: 6,
            t_specific: [6, 6],
            labels: 2,
            iterations: 50,
            burn_in: 30,
            sample_lag: 5,
            mode: Mode::Supervised,
            seed: 0,
            scan: ScanOrder::Sequential,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::InvalidHyperparams(m));
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("eta", self.eta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{name} must be a positive finite number, got {v}"));
            }
        }
        if self.t_common == 0 {
            return err("t_common must be at least 1".into());
        }
        if self.t_specific.iter().any(|&t| t == 0) {
            return err("every t_specific must be at least 1".into());
        }
        if self.labels == 0 {
            return err("labels must be at least 1".into());
        }
        if self.burn_in >= self.iterations {
            return err(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            ));
        }
        if self.sample_lag == 0 {
            return err("sample_lag must be at least 1".into());
        }
        if self.mode == Mode::Ccl && self.t_specific.iter().any(|&t| t != self.t_common) {
            return err(format!(
                "ccl mode aligns topics one-to-one and needs t_spec_src = t_spec_tgt = t_common, got {}/{}/{}",
                self.t_common, self.t_specific[0], self.t_specific[1]
            ));
        }
        Ok(())
    }

    /// Number of topic groups the sampler works with: the label count, or one
    /// in ccl mode.
    pub fn groups(&self) -> usize {
        match self.mode {
            Mode::Ccl => 1,
            _ => self.labels,
        }
    }

    pub fn t_spec(&self, domain: Domain) -> usize {
        self.t_specific[domain.index()]
    }

    /// Whether sweep `sweep` (1-based) contributes a posterior sample.
    pub fn is_sample_sweep(&self, sweep: usize) -> bool {
        sweep > self.burn_in && (sweep - self.burn_in) % self.sample_lag == 0
    }
}
