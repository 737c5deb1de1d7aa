//! Run configuration files.
//!
//! A config file is TOML: top-level `key = value` settings apply to every
//! command, and `[train]`, `[eval]` and `[sweep]` sections override them for
//! one command. Command-line flags override both. The sweep section also
//! takes `modes`, a `[sweep.tasks]` table of corpus paths and a
//! `[sweep.grid]` table of axis values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xdtc::eval::{Axis, EvalOptions, FeatureEncoding, LogisticConfig};
use xdtc::inference::DomainSelector;
use xdtc::model::{Hyperparams, Mode, ScanOrder};

use crate::Failure;

/// Every accepted key with a one-line description, as listed by `--help`.
pub const KEYS: &[(&str, &str)] = &[
    ("corpus", "prepared corpus file"),
    ("out", "output directory (train, eval) or report file (sweep)"),
    ("format", "report format: tsv or json"),
    ("seeds", "chain seeds, e.g. [1, 2, 3]"),
    ("jobs", "parallel chains; 0 uses every core"),
    ("timing", "record wall-clock seconds in traces and sweep reports"),
    ("mode", "supervised, unsupervised or ccl"),
    ("alpha", "prior of per-document topic mixtures"),
    ("beta", "prior of topic-word distributions"),
    ("gamma", "prior of the common/specific switch"),
    ("eta", "prior of per-document group mixtures"),
    ("t_common", "common topics per group"),
    ("t_spec_src", "source-specific topics per group"),
    ("t_spec_tgt", "target-specific topics per group"),
    ("iterations", "Gibbs sweeps"),
    ("burn_in", "sweeps before the first posterior sample"),
    ("sample_lag", "sweeps between posterior samples"),
    ("scan", "document order within a sweep: sequential or random"),
    ("checkpoint_every", "write a checkpoint every this many sweeps; 0 only at the end"),
    ("encoding", "classifier features for unsupervised and ccl runs: latent-counts or theta"),
    ("perplexity_over", "documents scored by perplexity: target, source or all"),
    ("final_sample", "evaluate the last sample instead of the posterior mean"),
    ("lambda", "L2 penalty of the logistic regression"),
];

/// Keys that only the sweep section accepts.
pub const SWEEP_KEYS: &[(&str, &str)] = &[
    ("modes", "modes to sweep, e.g. [\"supervised\", \"ccl\"]"),
    ("[sweep.tasks]", "task name = prepared corpus path"),
    ("[sweep.grid]", "axis = [values]; axes: alpha beta gamma eta t_common t_spec_src t_spec_tgt t_spec"),
];

pub fn keys_help() -> String {
    let mut s = String::from("Config keys (TOML; top level or in [train], [eval], [sweep]):\n");
    for (k, h) in KEYS.iter().chain(SWEEP_KEYS) {
        s.push_str(&format!("  {k:<18} {h}\n"));
    }
    s
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<ReportFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_common: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_spec_src: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_spec_tgt: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_lag: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanOrder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoding: Option<FeatureEncoding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perplexity_over: Option<DomainSelector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_sample: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $(if $top.$f.is_some() { $base.$f = $top.$f.clone(); })*
    };
}

impl Settings {
    /// `self` with every key set in `top` replaced.
    pub fn overlay(mut self, top: &Settings) -> Settings {
        overlay_fields!(self, top; corpus, out, format, seeds, jobs, timing, mode, alpha, beta, gamma, eta,
            t_common, t_spec_src, t_spec_tgt, iterations, burn_in, sample_lag, scan, checkpoint_every,
            encoding, perplexity_over, final_sample, lambda);
        self
    }

    pub fn corpus(&self) -> Result<&Path, Failure> {
        self.corpus
            .as_deref()
            .ok_or_else(|| Failure::usage("no corpus given (--corpus or `corpus` key)"))
    }

    pub fn out(&self) -> Result<&Path, Failure> {
        self.out
            .as_deref()
            .ok_or_else(|| Failure::usage("no output location given (--out or `out` key)"))
    }

    /// Chain seeds. Randomized commands never fall back to a default seed.
    pub fn seeds(&self) -> Result<Vec<u64>, Failure> {
        match &self.seeds {
            Some(s) if !s.is_empty() => {
                let mut sorted = s.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != s.len() {
                    return Err(Failure::usage("seeds must be distinct"));
                }
                Ok(s.clone())
            }
            _ => Err(Failure::usage("an explicit --seed or --seeds is required")),
        }
    }

    /// Hyperparameters with defaults for unset keys. `labels` and `seed` are
    /// left at their defaults for the caller to fill in.
    pub fn hyperparams(&self) -> Hyperparams {
        let d = Hyperparams::default();
        Hyperparams {
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            gamma: self.gamma.unwrap_or(d.gamma),
            eta: self.eta.unwrap_or(d.eta),
            t_common: self.t_common.unwrap_or(d.t_common),
            t_specific: [
                self.t_spec_src.unwrap_or(d.t_specific[0]),
                self.t_spec_tgt.unwrap_or(d.t_specific[1]),
            ],
            iterations: self.iterations.unwrap_or(d.iterations),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            sample_lag: self.sample_lag.unwrap_or(d.sample_lag),
            mode: self.mode.unwrap_or(d.mode),
            scan: self.scan.unwrap_or(d.scan),
            ..d
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            encoding: self.encoding.unwrap_or_default(),
            logistic: LogisticConfig {
                lambda: self.lambda.unwrap_or(LogisticConfig::default().lambda),
                ..Default::default()
            },
            perplexity_over: self.perplexity_over.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSpec {
    pub tasks: BTreeMap<String, PathBuf>,
    pub modes: Vec<Mode>,
    pub grid: Vec<(Axis, Vec<f64>)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub global: Settings,
    pub sections: BTreeMap<String, Settings>,
    pub sweep: SweepSpec,
}

pub const SECTIONS: [&str; 3] = ["train", "eval", "sweep"];

fn bad(msg: impl std::fmt::Display) -> Failure {
    Failure::usage(format!("config: {msg}"))
}

fn settings_from(table: toml::Table, context: &str) -> Result<Settings, Failure> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| bad(format!("{context}: {}", e.message())))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, Failure> {
        let mut root: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(e.message().trim_end()))?;
        let mut cfg = RunConfig::default();
        for name in SECTIONS {
            let Some(value) = root.remove(name) else { continue };
            let toml::Value::Table(mut table) = value else {
                return Err(bad(format!("`{name}` must be a section")));
            };
            if name == "sweep" {
                cfg.sweep = take_sweep_spec(&mut table)?;
            }
            cfg.sections.insert(name.to_string(), settings_from(table, &format!("[{name}]"))?);
        }
        if let Some((k, _)) = root.iter().find(|(_, v)| v.is_table()) {
            return Err(bad(format!("unknown section [{k}]")));
        }
        cfg.global = settings_from(root, "top level")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(|f| Failure::usage(format!("{}: {}", path.display(), f.message)))
    }

    /// Settings for one command: top level, then its section.
    pub fn for_command(&self, command: &str) -> Settings {
        match self.sections.get(command) {
            Some(s) => self.global.clone().overlay(s),
            None => self.global.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        let mut root = toml::Table::try_from(&self.global).expect("settings serialize");
        for (name, s) in &self.sections {
            let mut table = toml::Table::try_from(s).expect("settings serialize");
            if name == "sweep" {
                put_sweep_spec(&self.sweep, &mut table);
            }
            root.insert(name.clone(), toml::Value::Table(table));
        }
        if !self.sweep.tasks.is_empty() || !self.sweep.modes.is_empty() || !self.sweep.grid.is_empty() {
            if let toml::map::Entry::Vacant(e) = root.entry("sweep") {
                let mut table = toml::Table::new();
                put_sweep_spec(&self.sweep, &mut table);
                e.insert(toml::Value::Table(table));
            }
        }
        toml::to_string(&root).expect("table serializes")
    }
}

fn take_sweep_spec(table: &mut toml::Table) -> Result<SweepSpec, Failure> {
    let mut spec = SweepSpec::default();
    if let Some(v) = table.remove("tasks") {
        spec.tasks = v.try_into().map_err(|e: toml::de::Error| bad(format!("[sweep.tasks]: {}", e.message())))?;
    }
    if let Some(v) = table.remove("modes") {
        spec.modes = v.try_into().map_err(|e: toml::de::Error| bad(format!("sweep modes: {}", e.message())))?;
    }
    if let Some(v) = table.remove("grid") {
        let grid: BTreeMap<String, Vec<f64>> =
            v.try_into().map_err(|e: toml::de::Error| bad(format!("[sweep.grid]: {}", e.message())))?;
        for (k, values) in grid {
            let axis: Axis = k.parse().map_err(bad)?;
            spec.grid.push((axis, values));
        }
    }
    Ok(spec)
}

fn put_sweep_spec(spec: &SweepSpec, table: &mut toml::Table) {
    if !spec.modes.is_empty() {
        table.insert("modes".into(), toml::Value::try_from(&spec.modes).expect("modes serialize"));
    }
    if !spec.tasks.is_empty() {
        table.insert("tasks".into(), toml::Value::try_from(&spec.tasks).expect("paths serialize"));
    }
    if !spec.grid.is_empty() {
        let grid: BTreeMap<String, Vec<f64>> = spec.grid.iter().map(|(a, v)| (a.name().to_string(), v.clone())).collect();
        table.insert("grid".into(), toml::Value::try_from(grid).expect("grid serializes"));
    }
}
