use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use xdtc::corpus::{
    build_corpus, merge_datasets, newsgroups::build_task_corpus, read_corpus, write_corpus, Corpus, CorpusOptions,
    Domain, Stopwords,
};
use xdtc::eval::{evaluate, paired_t_test, run_sweep, target_gold, write_sweep_tsv, Axis, EvalOptions, SweepGrid, SweepOptions};
use xdtc::inference::{group_topics, render_topics, top_words, write_predictions, TopicReport};
use xdtc::io::{load_checkpoint, load_params, save_checkpoint, save_params, Checkpoint};
use xdtc::model::{estimate_params, Hyperparams, Mode, TopicKind};
use xdtc::sampler::{TraceRow, Trainer};

use crate::config::{ReportFormat, RunConfig, Settings};
use crate::report::{config_hash, ensure_dir, fmt_opt, mean_sd, seed_of, seeded_name, write_file, Provenance};
use crate::{CommonArgs, EvalArgs, Failure, PrepArgs, SweepArgs, TopicsArgs, TrainArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    Accuracy,
    Perplexity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Common,
    Specific,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TopicFormat {
    Text,
    Json,
}

/// Config file settings for `command`, overridden by each of `flags` in turn.
fn resolve(common: &CommonArgs, command: &str, flags: &[Settings]) -> Result<(Settings, RunConfig), Failure> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut s = cfg.for_command(command);
    for f in flags {
        s = s.overlay(f);
    }
    Ok((s, cfg))
}

pub fn load_corpus(path: &Path) -> Result<Corpus, Failure> {
    let f = File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    read_corpus(BufReader::new(f)).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::runtime(format!("cannot start worker threads: {e}")))
}

fn validated(hp: Hyperparams) -> Result<Hyperparams, Failure> {
    hp.validate()?;
    Ok(hp)
}

pub fn prep(a: &PrepArgs) -> Result<(), Failure> {
    let opts = CorpusOptions {
        min_df: a.min_df,
        strip_headers: a.strip_headers,
        top_level_labels: a.top_level_labels,
        stopwords: if a.no_stopwords { Stopwords::none() } else { Stopwords::english() },
    };
    let corpus = if let Some(m) = &a.merge {
        merge_datasets(&load_corpus(&m[0])?, &load_corpus(&m[1])?)?
    } else if let Some(task) = &a.task {
        let root = a.newsgroups.as_deref().expect("clap requires --newsgroups with --task");
        build_task_corpus(root, task, &opts)?
    } else {
        let (src, tgt) = (a.source.as_deref(), a.target.as_deref());
        build_corpus(src.expect("input group"), tgt.expect("clap requires both domains"), &opts)?
    };
    write_file(&a.out, |w| write_corpus(&corpus, w))?;
    println!(
        "{}: {} source and {} target documents, {} words, labels {}",
        a.out.display(),
        corpus.domain_indices(Domain::Source).len(),
        corpus.domain_indices(Domain::Target).len(),
        corpus.vocab_size(),
        corpus.label_names().join(",")
    );
    Ok(())
}

/// Settings written next to the run so it can be reproduced from the file.
fn recorded_settings(s: &Settings, hp: &Hyperparams, seeds: &[u64]) -> Settings {
    Settings {
        corpus: s.corpus.clone(),
        seeds: Some(seeds.to_vec()),
        timing: s.timing,
        mode: Some(hp.mode),
        alpha: Some(hp.alpha),
        beta: Some(hp.beta),
        gamma: Some(hp.gamma),
        eta: Some(hp.eta),
        t_common: Some(hp.t_common),
        t_spec_src: Some(hp.t_specific[0]),
        t_spec_tgt: Some(hp.t_specific[1]),
        iterations: Some(hp.iterations),
        burn_in: Some(hp.burn_in),
        sample_lag: Some(hp.sample_lag),
        scan: Some(hp.scan),
        checkpoint_every: s.checkpoint_every,
        ..Default::default()
    }
}

fn trace_text(prov: &Provenance, rows: &[TraceRow], timing: bool) -> String {
    let mut s = prov.header();
    s.push_str(if timing { "# sweep\tlog_joint\tseconds\n" } else { "# sweep\tlog_joint\n" });
    for r in rows {
        if timing {
            s.push_str(&format!("{}\t{}\t{}\n", r.sweep, r.log_joint, r.seconds));
        } else {
            s.push_str(&format!("{}\t{}\n", r.sweep, r.log_joint));
        }
    }
    s
}

fn read_trace(path: &Path) -> Result<Vec<TraceRow>, Failure> {
    let Ok(f) = File::open(path) else {
        return Ok(Vec::new());
    };
    let mut rows = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let parse = |c: Option<&str>| c.and_then(|v| v.parse::<f64>().ok());
        let (Some(sweep), Some(log_joint)) = (parse(cols.next()), parse(cols.next())) else {
            return Err(Failure::usage(format!("{}: malformed trace row `{line}`", path.display())));
        };
        rows.push(TraceRow {
            sweep: sweep as usize,
            log_joint,
            seconds: parse(cols.next()).unwrap_or(0.0),
        });
    }
    Ok(rows)
}

struct SeedJob<'a> {
    corpus: &'a Corpus,
    hp: Hyperparams,
    out: &'a Path,
    prov: Provenance,
    checkpoint_every: usize,
    resume: bool,
    timing: bool,
}

fn train_seed(job: &SeedJob<'_>) -> Result<(), Failure> {
    let seed = job.hp.seed;
    let ckpt_path = job.out.join(seeded_name("checkpoint", seed, "xdtk"));
    let trace_path = job.out.join(seeded_name("trace", seed, "tsv"));
    let params_path = job.out.join(seeded_name("params", seed, "xdtp"));
    let (mut trainer, mut rows) = if job.resume && ckpt_path.exists() {
        let mut c = load_checkpoint(&ckpt_path)?;
        let stored = Hyperparams {
            iterations: job.hp.iterations,
            ..c.hyperparams.clone()
        };
        if stored != job.hp {
            return Err(Failure::usage(format!(
                "{}: checkpoint settings differ from the requested run",
                ckpt_path.display()
            )));
        }
        c.hyperparams.iterations = job.hp.iterations;
        let done = c.sweeps_done;
        let mut rows = read_trace(&trace_path)?;
        rows.truncate(done);
        log::info!("seed {seed}: resuming after sweep {done}");
        (c.into_trainer(job.corpus)?, rows)
    } else {
        (Trainer::new(job.corpus, job.hp.clone())?, Vec::new())
    };
    let save = |trainer: &Trainer<'_>, rows: &[TraceRow]| -> Result<(), Failure> {
        save_checkpoint(&ckpt_path, &Checkpoint::from_trainer(trainer)).map_err(|e| Failure::runtime(e.to_string()))?;
        write_file(&trace_path, |w| w.write_all(trace_text(&job.prov, rows, job.timing).as_bytes()))
    };
    while !trainer.is_finished() {
        let row = trainer.step();
        log::info!("seed {seed} sweep {} log joint {:.4}", row.sweep, row.log_joint);
        rows.push(row);
        if job.checkpoint_every > 0 && row.sweep % job.checkpoint_every == 0 && !trainer.is_finished() {
            save(&trainer, &rows)?;
        }
    }
    save(&trainer, &rows)?;
    save_params(&params_path, &trainer.params()).map_err(|e| Failure::runtime(e.to_string()))
}

pub fn train(a: &TrainArgs) -> Result<(), Failure> {
    let flags = Settings {
        checkpoint_every: a.checkpoint_every,
        ..a.common.settings().overlay(&a.hyper.settings())
    };
    let (s, _) = resolve(&a.common, "train", &[flags])?;
    let seeds = s.seeds()?;
    let out = ensure_dir(s.out()?)?;
    let corpus = load_corpus(s.corpus()?)?;
    let hp = validated(Hyperparams {
        labels: corpus.num_labels(),
        ..s.hyperparams()
    })?;
    let prov = Provenance::new(
        config_hash(&Hyperparams { seed: 0, ..hp.clone() }),
        corpus.content_hash(),
    );
    let record = RunConfig {
        global: recorded_settings(&s, &hp, &seeds),
        ..Default::default()
    };
    write_file(&out.join("config.toml"), |w| w.write_all(record.to_toml().as_bytes()))?;

    let jobs: Vec<SeedJob<'_>> = seeds
        .iter()
        .map(|&seed| SeedJob {
            corpus: &corpus,
            hp: Hyperparams { seed, ..hp.clone() },
            out: &out,
            prov: prov.with_seed(seed),
            checkpoint_every: s.checkpoint_every.unwrap_or(0),
            resume: a.resume,
            timing: s.timing.unwrap_or(false),
        })
        .collect();
    thread_pool(s.jobs.unwrap_or(0))?.install(|| jobs.par_iter().map(train_seed).collect::<Result<Vec<()>, _>>())?;
    println!("trained {} chain(s) into {}", seeds.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct EvalIdentity<'a> {
    hyperparams: &'a Hyperparams,
    options: &'a EvalOptions,
    final_sample: bool,
    accuracy: bool,
}

#[derive(Serialize)]
struct RunScore {
    seed: u64,
    accuracy: Option<f64>,
    perplexity: f64,
}

#[derive(Serialize)]
struct Summary {
    accuracy: Option<f64>,
    perplexity: f64,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    runs: Vec<RunScore>,
    mean: Summary,
    sd: Summary,
}

fn checkpoints_in(dir: &Path) -> Result<Vec<(u64, PathBuf)>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    let mut found: Vec<(u64, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            seed_of(&name, "checkpoint", "xdtk").map(|s| (s, e.path()))
        })
        .collect();
    found.sort();
    Ok(found)
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    let flags = a.common.settings().overlay(&a.scoring.settings());
    let (s, _) = resolve(&a.common, "eval", &[flags])?;
    if let Some(pair) = &a.compare {
        return compare(&pair[0], &pair[1], a.metric, s.out.as_deref());
    }
    let runs = a
        .runs
        .as_deref()
        .ok_or_else(|| Failure::usage("eval needs --runs DIR or --compare A B"))?;
    let out = ensure_dir(s.out.as_deref().unwrap_or(runs))?;
    let corpus = load_corpus(s.corpus()?)?;
    let want_accuracy = !a.no_accuracy;
    if want_accuracy {
        target_gold(&corpus).map_err(|e| Failure::usage(format!("{e}; pass --no-accuracy to skip accuracy")))?;
    }
    let mut ckpts = checkpoints_in(runs)?;
    if let Some(seeds) = &s.seeds {
        ckpts.retain(|(seed, _)| seeds.contains(seed));
    }
    if ckpts.is_empty() {
        return Err(Failure::usage(format!("no checkpoints in {}", runs.display())));
    }
    let opts = s.eval_options();
    let final_sample = s.final_sample.unwrap_or(false);
    let results = thread_pool(s.jobs.unwrap_or(0))?.install(|| {
        ckpts
            .par_iter()
            .map(|(seed, path)| -> Result<_, Failure> {
                let c = load_checkpoint(path)?;
                let hp = c.hyperparams.clone();
                let trainer = c.into_trainer(&corpus)?;
                let params = if final_sample {
                    estimate_params(trainer.state())
                } else {
                    trainer.params()
                };
                let ev = evaluate(trainer.state(), &params, &opts)?;
                Ok((*seed, hp, ev))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let hp0 = Hyperparams {
        seed: 0,
        ..results[0].1.clone()
    };
    let prov = Provenance::new(
        config_hash(&EvalIdentity {
            hyperparams: &hp0,
            options: &opts,
            final_sample,
            accuracy: want_accuracy,
        }),
        corpus.content_hash(),
    );
    let mut scores = Vec::new();
    for (seed, _, ev) in &results {
        let path = out.join(seeded_name("predictions", *seed, "tsv"));
        let header = prov.with_seed(*seed).header();
        write_file(&path, |w| {
            w.write_all(header.as_bytes())?;
            write_predictions(w, &ev.predictions, corpus.label_names())
        })?;
        scores.push(RunScore {
            seed: *seed,
            accuracy: if want_accuracy { ev.accuracy } else { None },
            perplexity: ev.perplexity,
        });
    }
    let accs: Vec<f64> = scores.iter().filter_map(|r| r.accuracy).collect();
    let ppls: Vec<f64> = scores.iter().map(|r| r.perplexity).collect();
    let (acc_ms, (ppl_mean, ppl_sd)) = (mean_sd(&accs), mean_sd(&ppls).expect("at least one run"));
    let report = EvalReport {
        provenance: &prov,
        runs: scores,
        mean: Summary {
            accuracy: acc_ms.map(|m| m.0),
            perplexity: ppl_mean,
        },
        sd: Summary {
            accuracy: acc_ms.map(|m| m.1),
            perplexity: ppl_sd,
        },
    };
    let mut text = prov.header();
    let seeds: Vec<String> = report.runs.iter().map(|r| r.seed.to_string()).collect();
    text.push_str(&format!("# seeds {}\n# seed\taccuracy\tperplexity\n", seeds.join(",")));
    for r in &report.runs {
        text.push_str(&format!("{}\t{}\t{}\n", r.seed, fmt_opt(r.accuracy), r.perplexity));
    }
    text.push_str(&format!("mean\t{}\t{}\n", fmt_opt(report.mean.accuracy), report.mean.perplexity));
    text.push_str(&format!("sd\t{}\t{}\n", fmt_opt(report.sd.accuracy), report.sd.perplexity));
    write_file(&out.join("eval.tsv"), |w| w.write_all(text.as_bytes()))?;
    if s.format == Some(ReportFormat::Json) {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(&out.join("eval.json"), |w| writeln!(w, "{json}"))?;
    }
    print!("{}", text.lines().filter(|l| !l.starts_with("# tool") && !l.starts_with("# config") && !l.starts_with("# corpus")).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}

/// Per-seed values of an evaluated run directory.
fn read_eval_series(path: &Path, metric: Metric) -> Result<BTreeMap<String, f64>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 || cols[0].parse::<u64>().is_err() {
            continue;
        }
        let raw = match metric {
            Metric::Accuracy => cols[1],
            Metric::Perplexity => cols[2],
        };
        let v: f64 = raw
            .parse()
            .map_err(|_| Failure::usage(format!("{}: no {metric:?} value for seed {}", path.display(), cols[0])))?;
        out.insert(cols[0].to_string(), v);
    }
    Ok(out)
}

/// Values to pair: per seed from `dir/eval.tsv`, or else the per-seed mean of
/// every subdirectory holding an `eval.tsv`, keyed by subdirectory name.
fn load_series(dir: &Path, metric: Metric) -> Result<BTreeMap<String, f64>, Failure> {
    let direct = dir.join("eval.tsv");
    if direct.exists() {
        return read_eval_series(&direct, metric);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    let mut out = BTreeMap::new();
    for e in entries.filter_map(|e| e.ok()) {
        let report = e.path().join("eval.tsv");
        if report.exists() {
            let values: Vec<f64> = read_eval_series(&report, metric)?.into_values().collect();
            if let Some((mean, _)) = mean_sd(&values) {
                out.insert(e.file_name().to_string_lossy().into_owned(), mean);
            }
        }
    }
    if out.is_empty() {
        return Err(Failure::usage(format!("no eval.tsv in {} or its subdirectories", dir.display())));
    }
    Ok(out)
}

fn compare(a: &Path, b: &Path, metric: Metric, out: Option<&Path>) -> Result<(), Failure> {
    let (xa, xb) = (load_series(a, metric)?, load_series(b, metric)?);
    let keys: Vec<&String> = xa.keys().filter(|k| xb.contains_key(*k)).collect();
    if keys.len() != xa.len() || keys.len() != xb.len() {
        log::warn!("comparing the {} keys present in both run sets", keys.len());
    }
    let x: Vec<f64> = keys.iter().map(|k| xa[*k]).collect();
    let y: Vec<f64> = keys.iter().map(|k| xb[*k]).collect();
    let t = paired_t_test(&x, &y)?;
    let metric_name = match metric {
        Metric::Accuracy => "accuracy",
        Metric::Perplexity => "perplexity",
    };
    let text = format!(
        "# tool {}\n# metric {metric_name}\n# a {}\n# b {}\n# pairs {}\n# t\tdf\tp\n{}\t{}\t{}\n",
        crate::report::TOOL,
        a.display(),
        b.display(),
        keys.len(),
        t.t,
        t.df,
        t.p
    );
    if let Some(path) = out {
        write_file(path, |w| w.write_all(text.as_bytes()))?;
    }
    print!("{text}");
    Ok(())
}

pub fn topics(a: &TopicsArgs) -> Result<(), Failure> {
    let corpus = load_corpus(&a.corpus)?;
    let params = load_params(&a.params)?;
    let group = match a.group.parse::<usize>() {
        Ok(g) => g,
        Err(_) => corpus
            .label_id(&a.group)
            .ok_or_else(|| Failure::usage(format!("unknown group `{}`", a.group)))?,
    };
    let group_name = match params.mode {
        Mode::Ccl => "all".to_string(),
        _ => corpus
            .label_names()
            .get(group)
            .cloned()
            .ok_or_else(|| Failure::usage(format!("group {group} out of range")))?,
    };
    let voc = corpus.vocabulary();
    let lay = &params.layout;
    let reports: Vec<TopicReport> = match a.kind {
        None => group_topics(&params, voc, group, a.k)?,
        Some(kind) => {
            let (kind, domain, count) = match kind {
                KindArg::Common => (TopicKind::Common, None, lay.t_common),
                KindArg::Specific => {
                    let m = a.domain.ok_or_else(|| Failure::usage("--type specific needs --domain"))?;
                    (TopicKind::Specific, Some(m), lay.t_spec(m))
                }
            };
            let topics: Vec<usize> = match a.topic {
                Some(t) => vec![t],
                None => (0..count).collect(),
            };
            topics
                .into_iter()
                .map(|t| top_words(&params, voc, group, kind, domain, t, a.k))
                .collect::<Result<_, _>>()?
        }
    };
    match a.format {
        TopicFormat::Text => print!("{}", render_topics(&reports, &group_name)),
        TopicFormat::Json => println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialize")),
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepIdentity<'a> {
    base: &'a Hyperparams,
    modes: &'a [Mode],
    axes: &'a [(Axis, Vec<f64>)],
    seeds: &'a [u64],
    options: &'a EvalOptions,
}

fn parse_pair(s: &str, what: &str) -> Result<(String, String), Failure> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Failure::usage(format!("{what} must look like NAME=VALUE, got `{s}`")))
}

pub fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let flags = a
        .common
        .settings()
        .overlay(&a.hyper.settings())
        .overlay(&a.scoring.settings());
    let (s, cfg) = resolve(&a.common, "sweep", &[flags])?;
    let mut spec = cfg.sweep;
    for t in &a.tasks {
        let (name, path) = parse_pair(t, "--task")?;
        spec.tasks.insert(name, PathBuf::from(path));
    }
    if spec.tasks.is_empty() {
        if let Some(c) = &s.corpus {
            spec.tasks.insert("corpus".into(), c.clone());
        }
    }
    if let Some(m) = &a.modes {
        spec.modes = m.clone();
    }
    if spec.modes.is_empty() {
        spec.modes = vec![s.mode.unwrap_or(Mode::Supervised)];
    }
    for ax in &a.axes {
        let (name, values) = parse_pair(ax, "--axis")?;
        let axis: Axis = name.parse()?;
        let values = values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| Failure::usage(format!("bad value `{v}` for axis {name}"))))
            .collect::<Result<Vec<_>, _>>()?;
        spec.grid.retain(|(a, _)| *a != axis);
        spec.grid.push((axis, values));
    }
    if spec.tasks.is_empty() {
        return Err(Failure::usage("sweep needs at least one --task NAME=CORPUS"));
    }
    let seeds = s.seeds()?;
    let out = s.out()?.to_path_buf();
    let opts = SweepOptions {
        jobs: s.jobs.unwrap_or(0),
        eval: s.eval_options(),
        timing: s.timing.unwrap_or(false),
    };
    let grid = SweepGrid {
        base: s.hyperparams(),
        tasks: spec.tasks.keys().cloned().collect(),
        modes: spec.modes.clone(),
        axes: spec.grid.clone(),
        seeds: seeds.clone(),
    };
    grid.validate()?;
    eprintln!("sweep: {} runs", grid.size());

    let mut corpora = BTreeMap::new();
    let mut hashes = String::new();
    for (name, path) in &spec.tasks {
        let c = load_corpus(path)?;
        hashes.push_str(&format!("{name}={}\n", c.content_hash()));
        corpora.insert(name.clone(), c);
    }
    let prov = Provenance::new(
        config_hash(&SweepIdentity {
            base: &grid.base,
            modes: &grid.modes,
            axes: &grid.axes,
            seeds: &grid.seeds,
            options: &opts.eval,
        }),
        config_hash(&hashes),
    );
    let rows = run_sweep(&grid, &corpora, &opts)?;
    match s.format.unwrap_or_default() {
        ReportFormat::Tsv => write_file(&out, |w| {
            w.write_all(prov.header().as_bytes())?;
            write_sweep_tsv(w, &rows)
        })?,
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct SweepReport<'a, T> {
                #[serde(flatten)]
                provenance: &'a Provenance,
                rows: &'a [T],
            }
            let json = serde_json::to_string_pretty(&SweepReport {
                provenance: &prov,
                rows: &rows,
            })
            .expect("rows serialize");
            write_file(&out, |w| writeln!(w, "{json}"))?;
        }
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows written to {} ({failed} failed)", rows.len(), out.display());
    Ok(())
}
