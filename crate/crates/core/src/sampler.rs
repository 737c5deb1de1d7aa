//! Collapsed Gibbs sampling.
//!
//! Each token's label, topic type and topic are drawn jointly from their
//! full conditional given every other token:
//!
//! ```text
//! p(z, r, l | rest) ∝ (N_{w,z,r,l} + β) / (N_{z,r,l} + Vβ)
//!                   × (N_{z,r,l,d} + α) / (N_{r,l,d} + T^r α)
//!                   × (N_{r,l,d} + γ)   / (N_{l,d} + 2γ)
//!                   × (N_{l,d} + η)     / (N_d + Lη)
//! ```
//!
//! with all counts excluding the token itself. For a specific topic the word
//! counts are those of the document's own domain and `T^r` is that domain's
//! number of specific topics.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Domain};
use crate::error::{Error, Result};
use crate::model::{
    estimate_params, init_state, joint_log_prob, Assignment, CountTables, Hyperparams, Mode,
    ModelState, ParamsAccumulator, PosteriorParams, ScanOrder, TopicKind,
};

/// Normalized full conditional of one token over its legal support.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub probs: Vec<f64>,
    pub cells: Vec<Assignment>,
}

impl ConditionalTable {
    pub fn prob_of(&self, a: Assignment) -> Option<f64> {
        self.cells.iter().position(|&c| c == a).map(|i| self.probs[i])
    }
}

/// Unnormalized conditional weights for a token of word `v` in document `d`,
/// written to `buf` in cell order (label-major, common topics before
/// specific ones). Returns the total weight.
#[inline]
fn grouped_weights(
    counts: &CountTables,
    hp: &Hyperparams,
    d: usize,
    v: usize,
    fixed_label: Option<usize>,
    buf: &mut Vec<f64>,
) -> f64 {
    let lay = counts.layout();
    let m = counts.doc_domain(d);
    let (g, tc, ts) = (lay.groups, lay.t_common, lay.t_spec(m));
    let (alpha, beta, gamma, eta) = (hp.alpha, hp.beta, hp.gamma, hp.eta);
    let vb = lay.vocab as f64 * beta;
    let word_c = counts.word_common_row(v);
    let total_c = counts.common_totals();
    let word_s = counts.word_spec_row(m, v);
    let total_s = counts.spec_totals(m);
    let doc_norm = counts.n_d(d) as f64 + g as f64 * eta;

    buf.clear();
    let mut sum = 0.0;
    let labels = match fixed_label {
        Some(l) => l..l + 1,
        None => 0..g,
    };
    for l in labels {
        let n_l = counts.n_l(d, l) as f64;
        let n_c = counts.n_rl(d, l, TopicKind::Common) as f64;
        let n_s = counts.n_rl(d, l, TopicKind::Specific) as f64;
        let label_f = (n_l + eta) / doc_norm;
        let type_norm = n_l + 2.0 * gamma;
        let f_c = label_f * (n_c + gamma) / type_norm / (n_c + tc as f64 * alpha);
        let f_s = label_f * (n_s + gamma) / type_norm / (n_s + ts as f64 * alpha);

        let doc_c = counts.doc_topics(d, l, TopicKind::Common);
        let (wc, nc) = (&word_c[l * tc..(l + 1) * tc], &total_c[l * tc..(l + 1) * tc]);
        for c in 0..tc {
            let w = (wc[c] as f64 + beta) / (nc[c] as f64 + vb) * (doc_c[c] as f64 + alpha) * f_c;
            sum += w;
            buf.push(w);
        }
        let doc_s = counts.doc_topics(d, l, TopicKind::Specific);
        let (ws, ns) = (&word_s[l * ts..(l + 1) * ts], &total_s[l * ts..(l + 1) * ts]);
        for s in 0..ts {
            let w = (ws[s] as f64 + beta) / (ns[s] as f64 + vb) * (doc_s[s] as f64 + alpha) * f_s;
            sum += w;
            buf.push(w);
        }
    }
    sum
}

fn grouped_cell(counts: &CountTables, d: usize, fixed_label: Option<usize>, i: usize) -> Assignment {
    let lay = counts.layout();
    let tc = lay.t_common;
    let width = tc + lay.t_spec(counts.doc_domain(d));
    let label = fixed_label.unwrap_or(i / width);
    let rem = i % width;
    if rem < tc {
        Assignment::new(label, TopicKind::Common, rem)
    } else {
        Assignment::new(label, TopicKind::Specific, rem - tc)
    }
}

/// Weights of the one-to-one aligned model: a single topic index `z` shared
/// by the common and the domain-specific word distribution, one topic
/// mixture per document. Cells: `(Common, z)` for all z, then `(Specific, z)`.
#[inline]
fn ccl_weights(counts: &CountTables, hp: &Hyperparams, d: usize, v: usize, buf: &mut Vec<f64>) -> f64 {
    let lay = counts.layout();
    let m = counts.doc_domain(d);
    let t = lay.t_common;
    let (alpha, beta, gamma) = (hp.alpha, hp.beta, hp.gamma);
    let vb = lay.vocab as f64 * beta;
    let n_d = counts.n_d(d) as f64;
    let doc_c = counts.doc_topics(d, 0, TopicKind::Common);
    let doc_s = counts.doc_topics(d, 0, TopicKind::Specific);
    let topic_norm = n_d + t as f64 * alpha;
    let type_norm = n_d + 2.0 * gamma;
    let word_c = counts.word_common_row(v);
    let total_c = counts.common_totals();
    let word_s = counts.word_spec_row(m, v);
    let total_s = counts.spec_totals(m);

    buf.clear();
    let mut sum = 0.0;
    for (kind, words, totals) in [
        (TopicKind::Common, word_c, total_c),
        (TopicKind::Specific, word_s, total_s),
    ] {
        let type_f = (counts.n_rl(d, 0, kind) as f64 + gamma) / type_norm;
        for z in 0..t {
            let topic_f = (doc_c[z] as f64 + doc_s[z] as f64 + alpha) / topic_norm;
            let w = (words[z] as f64 + beta) / (totals[z] as f64 + vb) * topic_f * type_f;
            sum += w;
            buf.push(w);
        }
    }
    sum
}

fn ccl_cell(t: usize, i: usize) -> Assignment {
    if i < t {
        Assignment::new(0, TopicKind::Common, i)
    } else {
        Assignment::new(0, TopicKind::Specific, i - t)
    }
}

fn normalize(weights: Vec<f64>, total: f64, cells: Vec<Assignment>) -> ConditionalTable {
    let probs = weights.into_iter().map(|w| w / total).collect();
    ConditionalTable { probs, cells }
}

/// Full conditional of token `t` of document `d`.
///
/// The token must already be removed from the count tables
/// ([`ModelState::remove_token`]). In a supervised chain a source token's
/// support is restricted to its gold label. In ccl mode this is
/// [`conditional_ccl`].
pub fn conditional(state: &ModelState<'_>, d: usize, t: usize) -> ConditionalTable {
    if state.hyperparams().mode == Mode::Ccl {
        return conditional_ccl(state, d, t).expect("mode checked");
    }
    let counts = state.counts();
    let v = state.corpus().document(d).tokens[t] as usize;
    let fixed = state.fixed_label(d);
    let mut buf = Vec::new();
    let total = grouped_weights(counts, state.hyperparams(), d, v, fixed, &mut buf);
    let cells = (0..buf.len()).map(|i| grouped_cell(counts, d, fixed, i)).collect();
    normalize(buf, total, cells)
}

/// Full conditional of token `t` under one-to-one topic alignment. Only
/// valid for ccl chains; the token must already be removed.
pub fn conditional_ccl(state: &ModelState<'_>, d: usize, t: usize) -> Result<ConditionalTable> {
    if state.hyperparams().mode != Mode::Ccl {
        return Err(Error::Unsupported(format!(
            "one-to-one conditional requested on a {} chain",
            state.hyperparams().mode
        )));
    }
    let counts = state.counts();
    let v = state.corpus().document(d).tokens[t] as usize;
    let mut buf = Vec::new();
    let total = ccl_weights(counts, state.hyperparams(), d, v, &mut buf);
    let tc = counts.layout().t_common;
    let cells = (0..buf.len()).map(|i| ccl_cell(tc, i)).collect();
    Ok(normalize(buf, total, cells))
}

/// Draws an index proportionally to `weights`.
#[inline]
fn draw<R: Rng>(rng: &mut R, weights: &[f64], total: f64) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    // Rounding left a sliver past the last cell.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Per-chain scratch space reused across tokens.
#[derive(Debug, Default)]
pub struct SweepBuffer {
    weights: Vec<f64>,
}

/// Resamples one token: remove, draw from the full conditional, re-add.
pub fn resample_token(state: &mut ModelState<'_>, d: usize, t: usize, buf: &mut SweepBuffer) -> Assignment {
    state.remove_token(d, t);
    let v = state.corpus().document(d).tokens[t] as usize;
    let fixed = state.fixed_label(d);
    let a = {
        let (counts, hp, rng) = state.split_for_draw();
        match hp.mode {
            Mode::Ccl => {
                let total = ccl_weights(counts, hp, d, v, &mut buf.weights);
                let i = draw(rng, &buf.weights, total);
                ccl_cell(counts.layout().t_common, i)
            }
            _ => {
                let total = grouped_weights(counts, hp, d, v, fixed, &mut buf.weights);
                let i = draw(rng, &buf.weights, total);
                grouped_cell(counts, d, fixed, i)
            }
        }
    };
    state.assign(d, t, a);
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    pub tokens: usize,
    pub log_joint: f64,
}

/// One pass over every token. Documents are visited in corpus order, or in
/// a fresh random order per sweep when the chain uses [`ScanOrder::Random`].
pub fn gibbs_sweep(state: &mut ModelState<'_>) -> SweepStats {
    let tokens = sweep_tokens(state, &mut SweepBuffer::default());
    SweepStats {
        tokens,
        log_joint: joint_log_prob(state),
    }
}

fn sweep_tokens(state: &mut ModelState<'_>, buf: &mut SweepBuffer) -> usize {
    let corpus = state.corpus();
    let mut order: Vec<usize> = (0..corpus.documents().len()).collect();
    if state.hyperparams().scan == ScanOrder::Random {
        order.shuffle(&mut state.rng);
    }
    let mut visited = 0;
    for d in order {
        for t in 0..corpus.document(d).tokens.len() {
            resample_token(state, d, t, buf);
            visited += 1;
        }
    }
    visited
}

/// One row of the per-sweep trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: usize,
    pub log_joint: f64,
    pub seconds: f64,
}

/// A chain together with its posterior-sample accumulator. Resumable: the
/// pieces needed to continue bit-identically are exposed for checkpoints.
#[derive(Debug, Clone)]
pub struct Trainer<'c> {
    state: ModelState<'c>,
    accumulator: ParamsAccumulator,
    sweeps_done: usize,
    initial_log_joint: f64,
    buf_weights: Vec<f64>,
}

impl<'c> Trainer<'c> {
    pub fn new(corpus: &'c Corpus, hp: Hyperparams) -> Result<Self> {
        let state = init_state(corpus, hp)?;
        let initial_log_joint = joint_log_prob(&state);
        Ok(Trainer {
            state,
            accumulator: ParamsAccumulator::default(),
            sweeps_done: 0,
            initial_log_joint,
            buf_weights: Vec::new(),
        })
    }

    /// Rebuilds a trainer from checkpointed parts.
    pub fn resume(
        state: ModelState<'c>,
        accumulator: ParamsAccumulator,
        sweeps_done: usize,
        initial_log_joint: f64,
    ) -> Self {
        Trainer {
            state,
            accumulator,
            sweeps_done,
            initial_log_joint,
            buf_weights: Vec::new(),
        }
    }

    pub fn state(&self) -> &ModelState<'c> {
        &self.state
    }

    pub fn accumulator(&self) -> &ParamsAccumulator {
        &self.accumulator
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps_done
    }

    pub fn initial_log_joint(&self) -> f64 {
        self.initial_log_joint
    }

    pub fn is_finished(&self) -> bool {
        self.sweeps_done >= self.state.hyperparams().iterations
    }

    /// Runs one sweep, collecting a posterior sample when the schedule asks
    /// for one.
    pub fn step(&mut self) -> TraceRow {
        let start = Instant::now();
        let mut buf = SweepBuffer {
            weights: std::mem::take(&mut self.buf_weights),
        };
        sweep_tokens(&mut self.state, &mut buf);
        self.buf_weights = buf.weights;
        self.sweeps_done += 1;
        if self.state.hyperparams().is_sample_sweep(self.sweeps_done) {
            self.accumulator
                .add(&estimate_params(&self.state))
                .expect("samples of one chain share a shape");
        }
        let log_joint = joint_log_prob(&self.state);
        TraceRow {
            sweep: self.sweeps_done,
            log_joint,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    /// Runs the remaining sweeps, reporting each trace row to `observer`.
    pub fn run(&mut self, mut observer: impl FnMut(&TraceRow)) -> Vec<TraceRow> {
        let mut trace = Vec::new();
        while !self.is_finished() {
            let row = self.step();
            observer(&row);
            trace.push(row);
        }
        trace
    }

    /// Averaged posterior samples, or the estimate at the current state if
    /// the schedule has not produced any sample.
    pub fn params(&self) -> PosteriorParams {
        self.accumulator
            .mean()
            .unwrap_or_else(|_| estimate_params(&self.state))
    }

    pub fn into_state(self) -> ModelState<'c> {
        self.state
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput<'c> {
    pub state: ModelState<'c>,
    /// Mean of the posterior samples collected after burn-in.
    pub params: PosteriorParams,
    pub trace: Vec<TraceRow>,
    pub initial_log_joint: f64,
}

impl TrainOutput<'_> {
    /// Estimates from the final sample only.
    pub fn final_params(&self) -> PosteriorParams {
        estimate_params(&self.state)
    }
}

/// Initializes a chain and runs `hp.iterations` sweeps.
pub fn train(corpus: &Corpus, hp: Hyperparams) -> Result<TrainOutput<'_>> {
    let mut trainer = Trainer::new(corpus, hp)?;
    let trace = trainer.run(|_| {});
    let params = trainer.params();
    let initial_log_joint = trainer.initial_log_joint();
    Ok(TrainOutput {
        state: trainer.into_state(),
        params,
        trace,
        initial_log_joint,
    })
}

/// Cell-by-cell conditional of a model with the same common/specific
/// structure but no label variable, for a single-group chain. Test helper
/// exposed for the mode-reduction check.
#[doc(hidden)]
pub fn unlabeled_conditional(state: &ModelState<'_>, d: usize, t: usize) -> Vec<f64> {
    let counts = state.counts();
    let hp = state.hyperparams();
    let lay = counts.layout();
    assert_eq!(lay.groups, 1);
    let m: Domain = counts.doc_domain(d);
    let v = state.corpus().document(d).tokens[t] as usize;
    let n = counts.n_d(d) as f64;
    let mut w = Vec::new();
    for (kind, topics) in [(TopicKind::Common, lay.t_common), (TopicKind::Specific, lay.t_spec(m))] {
        let n_r = counts.n_rl(d, 0, kind) as f64;
        for z in 0..topics {
            let (nw, nz) = match kind {
                TopicKind::Common => (counts.n_w_common(0, z, v), counts.n_common(0, z)),
                TopicKind::Specific => (counts.n_w_spec(m, 0, z, v), counts.n_spec(m, 0, z)),
            };
            let ndz = counts.doc_topics(d, 0, kind)[z] as f64;
            w.push(
                (nw as f64 + hp.beta) / (nz as f64 + lay.vocab as f64 * hp.beta)
                    * (ndz + hp.alpha) / (n_r + topics as f64 * hp.alpha)
                    * (n_r + hp.gamma) / (n + 2.0 * hp.gamma),
            );
        }
    }
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rebuild_counts, ChainRng};
    use crate::synthetic::{tiny_corpus, SyntheticSpec};
    use rand::SeedableRng;

    fn small_hp(mode: Mode) -> Hyperparams {
        Hyperparams {
            mode,
            t_common: 2,
            t_specific: [2, 2],
            alpha: 0.8,
            beta: 0.3,
            gamma: 1.5,
            eta: 0.6,
            ..Default::default()
        }
    }

    /// The conditional must be proportional to exp(joint) over the support.
    fn oracle_deviation(state: &mut ModelState<'_>, d: usize, t: usize) -> f64 {
        state.remove_token(d, t);
        let table = conditional(state, d, t);
        state.restore(d, t);
        let original = state.assignment(d, t);
        let mut logs = Vec::new();
        for &cell in &table.cells {
            state.set_assignment(d, t, cell).unwrap();
            logs.push(joint_log_prob(state));
        }
        state.set_assignment(d, t, original).unwrap();
        let max = logs.iter().copied().fold(f64::MIN, f64::max);
        let z: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        table
            .probs
            .iter()
            .zip(&logs)
            .map(|(p, l)| ((l - max).exp() / z / p - 1.0).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn conditional_matches_joint_ratios() {
        for mode in [Mode::Supervised, Mode::Unsupervised, Mode::Ccl] {
            for seed in 0..10 {
                let corpus = tiny_corpus(2, 4, 4, seed);
                let mut state = init_state(&corpus, Hyperparams { seed, ..small_hp(mode) }).unwrap();
                for d in 0..corpus.documents().len() {
                    for t in 0..corpus.document(d).tokens.len() {
                        let dev = oracle_deviation(&mut state, d, t);
                        assert!(dev < 1e-9, "{mode} seed {seed} d{d} t{t}: {dev}");
                    }
                }
            }
        }
    }

    #[test]
    fn asymmetric_specific_topics_use_own_domain_count() {
        let corpus = tiny_corpus(2, 4, 4, 3);
        let hp = Hyperparams {
            t_specific: [3, 1],
            ..small_hp(Mode::Unsupervised)
        };
        let mut state = init_state(&corpus, hp).unwrap();
        for d in 0..corpus.documents().len() {
            let m = corpus.document(d).domain;
            state.remove_token(d, 0);
            let table = conditional(&state, d, 0);
            state.restore(d, 0);
            assert_eq!(table.cells.len(), 2 * (2 + state.layout().t_spec(m)));
            assert!(oracle_deviation(&mut state, d, 0) < 1e-9);
        }
    }

    #[test]
    fn supervised_source_support_is_gold_label() {
        let corpus = tiny_corpus(2, 4, 4, 5);
        let mut state = init_state(&corpus, small_hp(Mode::Supervised)).unwrap();
        let d = 0;
        let gold = corpus.document(d).label.unwrap();
        state.remove_token(d, 0);
        let table = conditional(&state, d, 0);
        state.restore(d, 0);
        assert_eq!(table.cells.len(), 4);
        assert!(table.cells.iter().all(|c| c.label == gold));
        // Target documents see the full support in a supervised chain.
        state.remove_token(1, 0);
        assert_eq!(conditional(&state, 1, 0).cells.len(), 8);
        state.restore(1, 0);
    }

    #[test]
    fn strong_gamma_splits_type_evenly() {
        // L = 1, gamma large: the type factor approaches 1/2 for both kinds.
        let corpus = tiny_corpus(1, 4, 4, 2);
        let hp = Hyperparams {
            labels: 1,
            gamma: 1e12,
            t_common: 2,
            t_specific: [2, 2],
            beta: 1e12,
            alpha: 1e12,
            mode: Mode::Unsupervised,
            ..Default::default()
        };
        let mut state = init_state(&corpus, hp).unwrap();
        state.remove_token(0, 0);
        let table = conditional(&state, 0, 0);
        let common: f64 = table
            .cells
            .iter()
            .zip(&table.probs)
            .filter(|(c, _)| c.kind == TopicKind::Common)
            .map(|(_, p)| p)
            .sum();
        assert!((common - 0.5).abs() < 1e-9, "{common}");
    }

    #[test]
    fn normalization_and_nonnegativity() {
        for mode in [Mode::Supervised, Mode::Unsupervised, Mode::Ccl] {
            let corpus = SyntheticSpec::default().generate(1);
            let mut state = init_state(&corpus, Hyperparams { mode, ..Default::default() }).unwrap();
            gibbs_sweep(&mut state);
            for d in [0, 5, 13] {
                state.remove_token(d, 1);
                let table = conditional(&state, d, 1);
                state.restore(d, 1);
                let s: f64 = table.probs.iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(table.probs.iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn single_label_reduces_to_unlabeled_model() {
        let corpus = tiny_corpus(1, 5, 5, 9);
        let hp = Hyperparams {
            labels: 1,
            t_common: 2,
            t_specific: [3, 1],
            mode: Mode::Unsupervised,
            ..Default::default()
        };
        let mut state = init_state(&corpus, hp).unwrap();
        for _ in 0..3 {
            gibbs_sweep(&mut state);
        }
        for d in 0..corpus.documents().len() {
            for t in 0..corpus.document(d).tokens.len() {
                state.remove_token(d, t);
                let a = conditional(&state, d, t).probs;
                let b = unlabeled_conditional(&state, d, t);
                state.restore(d, t);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn ccl_single_topic_is_type_switch_only() {
        let corpus = tiny_corpus(2, 4, 4, 1);
        let hp = Hyperparams {
            mode: Mode::Ccl,
            t_common: 1,
            t_specific: [1, 1],
            ..small_hp(Mode::Ccl)
        };
        let mut state = init_state(&corpus, hp.clone()).unwrap();
        state.remove_token(0, 0);
        let table = conditional_ccl(&state, 0, 0).unwrap();
        let c = state.counts();
        let v = corpus.document(0).tokens[0] as usize;
        let m = corpus.document(0).domain;
        let vb = c.layout().vocab as f64 * hp.beta;
        let w0 = (c.n_w_common(0, 0, v) as f64 + hp.beta) / (c.n_common(0, 0) as f64 + vb)
            * (c.n_rl(0, 0, TopicKind::Common) as f64 + hp.gamma);
        let w1 = (c.n_w_spec(m, 0, 0, v) as f64 + hp.beta) / (c.n_spec(m, 0, 0) as f64 + vb)
            * (c.n_rl(0, 0, TopicKind::Specific) as f64 + hp.gamma);
        assert_eq!(table.cells.len(), 2);
        assert!((table.probs[0] - w0 / (w0 + w1)).abs() < 1e-14);
        assert!((table.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ccl_conditional_refused_on_grouped_chain() {
        let corpus = tiny_corpus(2, 4, 4, 1);
        let mut state = init_state(&corpus, small_hp(Mode::Unsupervised)).unwrap();
        state.remove_token(0, 0);
        assert!(conditional_ccl(&state, 0, 0).is_err());
    }

    #[test]
    fn sweep_keeps_counts_and_supervision() {
        let corpus = SyntheticSpec::default().generate(2);
        let mut state = init_state(&corpus, Hyperparams { seed: 4, ..Default::default() }).unwrap();
        for _ in 0..10 {
            let stats = gibbs_sweep(&mut state);
            assert_eq!(stats.tokens, corpus.num_tokens());
            assert!(stats.log_joint.is_finite());
            for (d, doc) in corpus.documents().iter().enumerate() {
                if let Some(gold) = doc.supervision_label() {
                    assert!(state.assignments()[d].iter().all(|a| a.label == gold));
                }
            }
        }
        assert_eq!(rebuild_counts(&state), *state.counts());
        state.counts().check_marginals().unwrap();
    }

    #[test]
    fn resampling_touches_only_own_domain_tables() {
        let corpus = SyntheticSpec::default().generate(3);
        let mut state = init_state(&corpus, Hyperparams::default()).unwrap();
        let mut buf = SweepBuffer::default();
        for (d, doc) in corpus.documents().iter().enumerate() {
            let other = match doc.domain {
                Domain::Source => Domain::Target,
                Domain::Target => Domain::Source,
            };
            let before = state.counts().word_spec_table(other).to_vec();
            for t in 0..doc.tokens.len() {
                resample_token(&mut state, d, t, &mut buf);
            }
            assert_eq!(state.counts().word_spec_table(other), &before[..]);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let corpus = SyntheticSpec::default().generate(5);
        for scan in [ScanOrder::Sequential, ScanOrder::Random] {
            let run = || {
                let out = train(&corpus, Hyperparams { seed: 77, scan, iterations: 8, burn_in: 4, sample_lag: 2, ..Default::default() })
                    .unwrap();
                (out.state.assignments().to_vec(), out.params)
            };
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn held_token_frequencies_match_conditional() {
        let corpus = tiny_corpus(2, 4, 4, 12);
        let mut state = init_state(&corpus, small_hp(Mode::Unsupervised)).unwrap();
        let (d, t) = (1, 0);
        state.remove_token(d, t);
        let exact = conditional(&state, d, t);
        state.restore(d, t);
        let mut freq = vec![0usize; exact.cells.len()];
        let mut buf = SweepBuffer::default();
        let n = 50_000;
        for _ in 0..n {
            let a = resample_token(&mut state, d, t, &mut buf);
            freq[exact.cells.iter().position(|&c| c == a).unwrap()] += 1;
        }
        for (f, p) in freq.iter().zip(&exact.probs) {
            assert!((*f as f64 / n as f64 - p).abs() < 0.02);
        }
    }

    #[test]
    fn log_joint_rises_from_random_start() {
        let corpus = SyntheticSpec::default().generate(11);
        let rising = (0..5)
            .filter(|&seed| {
                let out = train(&corpus, Hyperparams { seed, iterations: 20, burn_in: 10, ..Default::default() }).unwrap();
                out.trace.last().unwrap().log_joint > out.initial_log_joint
            })
            .count();
        assert!(rising >= 3, "{rising} of 5 chains improved");
    }

    #[test]
    fn trainer_resume_is_bit_identical() {
        let corpus = SyntheticSpec::default().generate(8);
        let hp = Hyperparams { seed: 3, iterations: 12, burn_in: 4, sample_lag: 3, ..Default::default() };
        let mut straight = Trainer::new(&corpus, hp.clone()).unwrap();
        straight.run(|_| {});

        let mut first = Trainer::new(&corpus, hp.clone()).unwrap();
        for _ in 0..7 {
            first.step();
        }
        let (hp2, assignments, rng) = first.state().clone().into_parts();
        let rng: ChainRng = rng;
        let state = ModelState::from_assignments(&corpus, hp2, assignments, rng).unwrap();
        let mut resumed = Trainer::resume(state, first.accumulator().clone(), 7, first.initial_log_joint());
        resumed.run(|_| {});
        assert_eq!(resumed.state().assignments(), straight.state().assignments());
        assert_eq!(resumed.params(), straight.params());
        let _ = ChainRng::seed_from_u64(0);
    }
}
