//! Checkpoint and parameter files.
//!
//! Both formats start with a magic line and a one-line JSON header, followed
//! by little-endian binary payloads. A checkpoint stores everything needed to
//! continue a chain bit-identically: hyperparameters, the corpus hash,
//! completed sweeps, generator state, assignments and the running sum of
//! posterior samples.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Domain};
use crate::error::{Error, Result};
use crate::model::{
    Assignment, ChainRng, Hyperparams, Layout, Mode, ModelState, ParamsAccumulator, PosteriorParams, TopicKind,
};
use crate::sampler::Trainer;

pub const CHECKPOINT_MAGIC: &str = "XDTK1";
pub const PARAMS_MAGIC: &str = "XDTP1";

const MAX_TOPIC: usize = 1 << 16;
const MAX_LABEL: usize = 1 << 15;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn read_line<R: BufRead>(r: &mut R, what: &str) -> Result<String> {
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| format_err(format!("reading {what}: {e}")))?;
    if !line.ends_with('\n') {
        return Err(format_err(format!("truncated file: missing {what}")));
    }
    line.pop();
    Ok(line)
}

fn write_err(e: std::io::Error) -> Error {
    format_err(format!("write failed: {e}"))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|_| format_err("truncated binary payload"))
}

fn write_f64s<W: Write>(w: &mut W, xs: &[f64]) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes()).map_err(write_err)?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    read_exact(r, &mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

#[derive(Serialize, Deserialize)]
struct ParamsHeader {
    mode: Mode,
    layout: Layout,
    doc_domains: Vec<Domain>,
    theta_spec_offset: Vec<usize>,
    lengths: [usize; 7],
}

fn tables(p: &PosteriorParams) -> [&Vec<f64>; 7] {
    [
        &p.phi_common,
        &p.phi_spec[0],
        &p.phi_spec[1],
        &p.theta_common,
        &p.theta_spec,
        &p.sigma,
        &p.pi,
    ]
}

fn write_params_body<W: Write>(w: &mut W, p: &PosteriorParams) -> Result<()> {
    let header = ParamsHeader {
        mode: p.mode,
        layout: p.layout.clone(),
        doc_domains: p.doc_domains.clone(),
        theta_spec_offset: p.theta_spec_offset.clone(),
        lengths: tables(p).map(Vec::len),
    };
    serde_json::to_writer(&mut *w, &header).map_err(|e| format_err(e.to_string()))?;
    w.write_all(b"\n").map_err(write_err)?;
    for t in tables(p) {
        write_f64s(w, t)?;
    }
    Ok(())
}

fn read_params_body<R: BufRead>(r: &mut R) -> Result<PosteriorParams> {
    let header: ParamsHeader = serde_json::from_str(&read_line(r, "parameter header")?)
        .map_err(|e| format_err(format!("bad parameter header: {e}")))?;
    let mut t = header.lengths.map(|n| (n, Vec::new()));
    for (n, v) in t.iter_mut() {
        *v = read_f64s(r, *n)?;
    }
    let [a, b, c, d, e, f, g] = t.map(|(_, v)| v);
    let p = PosteriorParams {
        mode: header.mode,
        layout: header.layout,
        doc_domains: header.doc_domains,
        phi_common: a,
        phi_spec: [b, c],
        theta_common: d,
        theta_spec: e,
        theta_spec_offset: header.theta_spec_offset,
        sigma: f,
        pi: g,
    };
    check_params_shape(&p)?;
    Ok(p)
}

fn check_params_shape(p: &PosteriorParams) -> Result<()> {
    let lay = &p.layout;
    let (g, n) = (lay.groups, p.doc_domains.len());
    let spec_rows: usize = p.doc_domains.iter().map(|&m| g * lay.t_spec(m)).sum();
    let ok = p.phi_common.len() == g * lay.t_common * lay.vocab
        && Domain::ALL.iter().all(|&m| p.phi_spec[m.index()].len() == g * lay.t_spec(m) * lay.vocab)
        && p.theta_common.len() == n * g * lay.t_common
        && p.theta_spec.len() == spec_rows
        && p.theta_spec_offset.len() == n + 1
        && p.theta_spec_offset.last() == Some(&spec_rows)
        && p.sigma.len() == n * g
        && p.pi.len() == n * g;
    if ok {
        Ok(())
    } else {
        Err(format_err("parameter tables do not match their layout"))
    }
}

pub fn write_params<W: Write>(mut w: W, p: &PosteriorParams) -> Result<()> {
    writeln!(w, "{PARAMS_MAGIC}").map_err(write_err)?;
    write_params_body(&mut w, p)?;
    w.flush().map_err(write_err)
}

pub fn read_params<R: BufRead>(mut r: R) -> Result<PosteriorParams> {
    if read_line(&mut r, "magic")? != PARAMS_MAGIC {
        return Err(format_err("not a parameter file"));
    }
    read_params_body(&mut r)
}

/// A resumable snapshot of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hyperparams: Hyperparams,
    pub corpus_hash: String,
    pub sweeps_done: usize,
    pub initial_log_joint: f64,
    pub rng: ChainRng,
    pub assignments: Vec<Vec<Assignment>>,
    pub accumulator: ParamsAccumulator,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    hyperparams: Hyperparams,
    corpus_hash: String,
    sweeps_done: usize,
    initial_log_joint: f64,
    rng: ChainRng,
    doc_lengths: Vec<usize>,
    samples: usize,
}

impl Checkpoint {
    pub fn from_trainer(trainer: &Trainer<'_>) -> Self {
        let state = trainer.state();
        Checkpoint {
            hyperparams: state.hyperparams().clone(),
            corpus_hash: state.corpus().content_hash(),
            sweeps_done: trainer.sweeps_done(),
            initial_log_joint: trainer.initial_log_joint(),
            rng: state.rng().clone(),
            assignments: state.assignments().to_vec(),
            accumulator: trainer.accumulator().clone(),
        }
    }

    /// Rebuilds the trainer over `corpus`, which must be the corpus the
    /// checkpoint was taken on.
    pub fn into_trainer(self, corpus: &Corpus) -> Result<Trainer<'_>> {
        if corpus.content_hash() != self.corpus_hash {
            return Err(Error::InvalidCorpus("checkpoint was taken on a different corpus".into()));
        }
        let state = ModelState::from_assignments(corpus, self.hyperparams, self.assignments, self.rng)?;
        Ok(Trainer::resume(state, self.accumulator, self.sweeps_done, self.initial_log_joint))
    }
}

fn pack(a: Assignment) -> Result<u32> {
    if a.topic >= MAX_TOPIC || a.label >= MAX_LABEL {
        return Err(format_err(format!("assignment {a:?} too large to store")));
    }
    Ok(((a.label as u32) << 17) | ((a.kind.index() as u32) << 16) | a.topic as u32)
}

fn unpack(x: u32) -> Assignment {
    Assignment::new(
        (x >> 17) as usize,
        TopicKind::from_index(((x >> 16) & 1) as usize),
        (x & 0xffff) as usize,
    )
}

pub fn write_checkpoint<W: Write>(mut w: W, c: &Checkpoint) -> Result<()> {
    let header = CheckpointHeader {
        hyperparams: c.hyperparams.clone(),
        corpus_hash: c.corpus_hash.clone(),
        sweeps_done: c.sweeps_done,
        initial_log_joint: c.initial_log_joint,
        rng: c.rng.clone(),
        doc_lengths: c.assignments.iter().map(Vec::len).collect(),
        samples: c.accumulator.count(),
    };
    writeln!(w, "{CHECKPOINT_MAGIC}").map_err(write_err)?;
    serde_json::to_writer(&mut w, &header).map_err(|e| format_err(e.to_string()))?;
    w.write_all(b"\n").map_err(write_err)?;
    for a in c.assignments.iter().flatten() {
        w.write_all(&pack(*a)?.to_le_bytes()).map_err(write_err)?;
    }
    match c.accumulator.sum() {
        Some(sum) => {
            w.write_all(b"\n").map_err(write_err)?;
            write_params_body(&mut w, sum)?;
        }
        None => w.write_all(b"\n").map_err(write_err)?,
    }
    w.flush().map_err(write_err)
}

pub fn read_checkpoint<R: BufRead>(mut r: R) -> Result<Checkpoint> {
    if read_line(&mut r, "magic")? != CHECKPOINT_MAGIC {
        return Err(format_err("not a checkpoint file"));
    }
    let header: CheckpointHeader = serde_json::from_str(&read_line(&mut r, "checkpoint header")?)
        .map_err(|e| format_err(format!("bad checkpoint header: {e}")))?;
    let mut assignments = Vec::with_capacity(header.doc_lengths.len());
    let mut word = [0u8; 4];
    for &n in &header.doc_lengths {
        let mut row = Vec::with_capacity(n);
        for _ in 0..n {
            read_exact(&mut r, &mut word)?;
            row.push(unpack(u32::from_le_bytes(word)));
        }
        assignments.push(row);
    }
    let mut sep = [0u8; 1];
    read_exact(&mut r, &mut sep)?;
    let sum = if header.samples > 0 {
        Some(read_params_body(&mut r)?)
    } else {
        None
    };
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(|e| format_err(e.to_string()))?;
    if sep[0] != b'\n' || !rest.is_empty() {
        return Err(format_err("unexpected bytes in checkpoint"));
    }
    Ok(Checkpoint {
        hyperparams: header.hyperparams,
        corpus_hash: header.corpus_hash,
        sweeps_done: header.sweeps_done,
        initial_log_joint: header.initial_log_joint,
        rng: header.rng,
        assignments,
        accumulator: ParamsAccumulator::from_parts(sum, header.samples),
    })
}

pub fn save_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(BufWriter::new(f), c)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(f))
}

pub fn save_params(path: &Path, p: &PosteriorParams) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_params(BufWriter::new(f), p)
}

pub fn load_params(path: &Path) -> Result<PosteriorParams> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_params(BufReader::new(f))
}
