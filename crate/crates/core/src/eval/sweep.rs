use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, EvalOptions};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::{Hyperparams, Mode};
use crate::sampler::train;

/// A hyperparameter a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Alpha,
    Beta,
    Gamma,
    Eta,
    TCommon,
    TSpecSrc,
    TSpecTgt,
    /// Both specific-topic counts at once.
    TSpec,
}

impl Axis {
    pub const ALL: [Axis; 8] = [
        Axis::Alpha,
        Axis::Beta,
        Axis::Gamma,
        Axis::Eta,
        Axis::TCommon,
        Axis::TSpecSrc,
        Axis::TSpecTgt,
        Axis::TSpec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Alpha => "alpha",
            Axis::Beta => "beta",
            Axis::Gamma => "gamma",
            Axis::Eta => "eta",
            Axis::TCommon => "t_common",
            Axis::TSpecSrc => "t_spec_src",
            Axis::TSpecTgt => "t_spec_tgt",
            Axis::TSpec => "t_spec",
        }
    }

    fn apply(self, hp: &mut Hyperparams, value: f64) -> Result<()> {
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidHyperparams(format!("{} must be a whole number, got {value}", self.name())))
            }
        };
        match self {
            Axis::Alpha => hp.alpha = value,
            Axis::Beta => hp.beta = value,
            Axis::Gamma => hp.gamma = value,
            Axis::Eta => hp.eta = value,
            Axis::TCommon => hp.t_common = count()?,
            Axis::TSpecSrc => hp.t_specific[0] = count()?,
            Axis::TSpecTgt => hp.t_specific[1] = count()?,
            Axis::TSpec => hp.t_specific = [count()?; 2],
        }
        Ok(())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown sweep axis `{s}`")))
    }
}

/// Cartesian product of tasks, modes, axis values and seeds around a base
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub base: Hyperparams,
    pub tasks: Vec<String>,
    pub modes: Vec<Mode>,
    pub axes: Vec<(Axis, Vec<f64>)>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub task: String,
    pub hp: Result<Hyperparams, String>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() || self.modes.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidHyperparams("a sweep needs at least one task, mode and seed".into()));
        }
        for (axis, values) in &self.axes {
            if values.is_empty() {
                return Err(Error::InvalidHyperparams(format!("sweep axis {axis} has no values")));
            }
        }
        Ok(())
    }

    /// Number of training runs the grid expands to.
    pub fn size(&self) -> usize {
        self.tasks.len() * self.modes.len() * self.seeds.len() * self.axes.iter().map(|(_, v)| v.len()).product::<usize>()
    }

    /// Every run, with tasks outermost and seeds innermost. Cells whose
    /// settings are invalid carry the reason instead of hyperparameters.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut points: Vec<Vec<(Axis, f64)>> = vec![Vec::new()];
        for (axis, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((*axis, v));
                        q
                    })
                })
                .collect();
        }
        let mut out = Vec::with_capacity(self.size());
        for task in &self.tasks {
            for &mode in &self.modes {
                for point in &points {
                    for &seed in &self.seeds {
                        let mut hp = Hyperparams { mode, seed, ..self.base.clone() };
                        let hp = point
                            .iter()
                            .try_for_each(|&(a, v)| a.apply(&mut hp, v))
                            .and_then(|_| hp.validate())
                            .map(|_| hp)
                            .map_err(|e| match e {
                                Error::InvalidHyperparams(m) => m,
                                other => other.to_string(),
                            });
                        out.push(SweepCell { task: task.clone(), hp });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOptions {
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub eval: EvalOptions,
    /// Record wall-clock seconds. Off gives byte-stable reports.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub task: String,
    pub hp: Option<Hyperparams>,
    pub accuracy: Option<f64>,
    pub perplexity_tgt: Option<f64>,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

fn run_cell(cell: &SweepCell, corpora: &BTreeMap<String, Corpus>, opts: &SweepOptions) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        task: cell.task.clone(),
        hp: cell.hp.as_ref().ok().cloned(),
        accuracy: None,
        perplexity_tgt: None,
        wall_seconds: 0.0,
        error: None,
    };
    let result = (|| -> Result<(Option<f64>, f64)> {
        let hp = cell.hp.clone().map_err(Error::InvalidHyperparams)?;
        let corpus = corpora
            .get(&cell.task)
            .ok_or_else(|| Error::InvalidCorpus(format!("no corpus for task `{}`", cell.task)))?;
        let hp = Hyperparams {
            labels: corpus.num_labels(),
            ..hp
        };
        let out = train(corpus, hp)?;
        let ev = evaluate(&out.state, &out.params, &opts.eval)?;
        Ok((ev.accuracy, ev.perplexity))
    })();
    match result {
        Ok((acc, ppl)) => {
            row.accuracy = acc;
            row.perplexity_tgt = Some(ppl);
        }
        Err(e) => {
            log::warn!("sweep cell for task {} failed: {e}", cell.task);
            row.error = Some(e.to_string());
        }
    }
    if opts.timing {
        row.wall_seconds = start.elapsed().as_secs_f64();
    }
    row
}

/// Trains and evaluates every cell of the grid in parallel. Rows come back
/// in [`SweepGrid::cells`] order; failures are recorded per row.
pub fn run_sweep(grid: &SweepGrid, corpora: &BTreeMap<String, Corpus>, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    let cells = grid.cells();
    log::info!("sweep of {} runs", cells.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(|| cells.par_iter().map(|c| run_cell(c, corpora, opts)).collect()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Long-format report, one row per run. Failed runs carry `NA` metrics and
/// are explained in trailing `#` lines.
pub fn write_sweep_tsv<W: Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(
        w,
        "# task\tmode\talpha\tbeta\tgamma\teta\tt_common\tt_spec_src\tt_spec_tgt\tseed\taccuracy\tperplexity_tgt\twall_seconds"
    )?;
    for r in rows {
        match &r.hp {
            Some(hp) => write!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.task, hp.mode, hp.alpha, hp.beta, hp.gamma, hp.eta, hp.t_common, hp.t_specific[0], hp.t_specific[1], hp.seed
            )?,
            None => write!(w, "{}{}", r.task, "\tNA".repeat(9))?,
        }
        writeln!(w, "\t{}\t{}\t{}", opt(r.accuracy), opt(r.perplexity_tgt), r.wall_seconds)?;
    }
    for (i, r) in rows.iter().enumerate() {
        if let Some(e) = &r.error {
            writeln!(w, "# row {}: {e}", i + 1)?;
        }
    }
    Ok(())
}
