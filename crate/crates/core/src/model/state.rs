use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::counts::{Assignment, CountTables, Layout, TopicKind};
use super::hyperparams::{Hyperparams, Mode};
use crate::corpus::{Corpus, Domain};
use crate::error::{Error, Result};

/// Generator family used by every chain. Seeded with `seed_from_u64`.
pub type ChainRng = Xoshiro256PlusPlus;

/// The latent state of one Markov chain over a corpus.
#[derive(Debug, Clone)]
pub struct ModelState<'c> {
    corpus: &'c Corpus,
    hp: Hyperparams,
    assignments: Vec<Vec<Assignment>>,
    counts: CountTables,
    pub(crate) rng: ChainRng,
}

impl<'c> ModelState<'c> {
    /// Builds a state from explicit assignments, validating every one of them
    /// against its legal support.
    pub fn from_assignments(
        corpus: &'c Corpus,
        hp: Hyperparams,
        assignments: Vec<Vec<Assignment>>,
        rng: ChainRng,
    ) -> Result<Self> {
        check_compatible(corpus, &hp)?;
        if assignments.len() != corpus.documents().len() {
            return Err(Error::Shape(format!(
                "{} assignment rows for {} documents",
                assignments.len(),
                corpus.documents().len()
            )));
        }
        let layout = layout_for(corpus, &hp);
        for (d, (doc, row)) in corpus.documents().iter().zip(&assignments).enumerate() {
            if row.len() != doc.tokens.len() {
                return Err(Error::Shape(format!(
                    "document {d}: {} assignments for {} tokens",
                    row.len(),
                    doc.tokens.len()
                )));
            }
            for (t, a) in row.iter().enumerate() {
                if a.label >= layout.groups || a.topic >= layout.topics(a.kind, doc.domain) {
                    return Err(Error::OutOfRange(format!("document {d} token {t}: {a:?}")));
                }
                if hp.mode == Mode::Supervised {
                    if let Some(gold) = doc.supervision_label() {
                        if a.label != gold {
                            return Err(Error::InvalidHyperparams(format!(
                                "document {d} token {t}: supervised source token must carry label {gold}"
                            )));
                        }
                    }
                }
            }
        }
        let counts = tally(corpus, &layout, &assignments);
        Ok(ModelState {
            corpus,
            hp,
            assignments,
            counts,
            rng,
        })
    }

    pub fn corpus(&self) -> &'c Corpus {
        self.corpus
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn layout(&self) -> &Layout {
        self.counts.layout()
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    pub fn assignments(&self) -> &[Vec<Assignment>] {
        &self.assignments
    }

    pub fn assignment(&self, d: usize, t: usize) -> Assignment {
        self.assignments[d][t]
    }

    pub fn rng(&self) -> &ChainRng {
        &self.rng
    }

    /// Label a supervised chain pins this document's tokens to, if any.
    pub fn fixed_label(&self, d: usize) -> Option<usize> {
        match self.hp.mode {
            Mode::Supervised => self.corpus.document(d).supervision_label(),
            _ => None,
        }
    }

    /// Removes token `t` of document `d` from the count tables, leaving the
    /// state in its "minus t" form. Must be paired with [`Self::restore`] or
    /// [`Self::assign`].
    pub fn remove_token(&mut self, d: usize, t: usize) {
        let v = self.corpus.document(d).tokens[t];
        self.counts.update(d, v, self.assignments[d][t], false);
    }

    /// Re-adds token `t` with its previous assignment.
    pub fn restore(&mut self, d: usize, t: usize) {
        let v = self.corpus.document(d).tokens[t];
        self.counts.update(d, v, self.assignments[d][t], true);
    }

    /// Assigns a removed token and adds it back to the count tables.
    pub fn assign(&mut self, d: usize, t: usize, a: Assignment) {
        let v = self.corpus.document(d).tokens[t];
        self.assignments[d][t] = a;
        self.counts.update(d, v, a, true);
    }

    /// Replaces the assignment of a counted token, keeping tables consistent.
    pub fn set_assignment(&mut self, d: usize, t: usize, a: Assignment) -> Result<()> {
        let doc = self.corpus.document(d);
        if a.label >= self.layout().groups || a.topic >= self.layout().topics(a.kind, doc.domain) {
            return Err(Error::OutOfRange(format!("{a:?} for document {d}")));
        }
        if let Some(gold) = self.fixed_label(d) {
            if a.label != gold {
                return Err(Error::InvalidHyperparams(format!(
                    "label of supervised source document {d} is fixed to {gold}"
                )));
            }
        }
        self.remove_token(d, t);
        self.assign(d, t, a);
        Ok(())
    }

    /// Counts and hyperparameters alongside the generator, for drawing
    /// without cloning the tables.
    pub(crate) fn split_for_draw(&mut self) -> (&CountTables, &Hyperparams, &mut ChainRng) {
        (&self.counts, &self.hp, &mut self.rng)
    }

    #[cfg(test)]
    pub(crate) fn into_parts(self) -> (Hyperparams, Vec<Vec<Assignment>>, ChainRng) {
        (self.hp, self.assignments, self.rng)
    }
}

fn check_compatible(corpus: &Corpus, hp: &Hyperparams) -> Result<()> {
    hp.validate()?;
    if hp.mode != Mode::Ccl && hp.labels != corpus.num_labels() {
        return Err(Error::InvalidHyperparams(format!(
            "labels = {} but the corpus has {} labels",
            hp.labels,
            corpus.num_labels()
        )));
    }
    Ok(())
}

pub(crate) fn layout_for(corpus: &Corpus, hp: &Hyperparams) -> Layout {
    Layout {
        groups: hp.groups(),
        t_common: hp.t_common,
        t_spec: hp.t_specific,
        vocab: corpus.vocab_size(),
    }
}

fn tally(corpus: &Corpus, layout: &Layout, assignments: &[Vec<Assignment>]) -> CountTables {
    let domains: Vec<Domain> = corpus.documents().iter().map(|d| d.domain).collect();
    let mut counts = CountTables::zeros(layout.clone(), domains);
    for (d, (doc, row)) in corpus.documents().iter().zip(assignments).enumerate() {
        for (&v, &a) in doc.tokens.iter().zip(row) {
            counts.update(d, v, a, true);
        }
    }
    counts
}

/// Draws a uniformly random initial state. In supervised mode every source
/// token takes its document's gold label instead of a random one.
pub fn init_state(corpus: &Corpus, hp: Hyperparams) -> Result<ModelState<'_>> {
    check_compatible(corpus, &hp)?;
    let mut rng = ChainRng::seed_from_u64(hp.seed);
    let layout = layout_for(corpus, &hp);
    let assignments = corpus
        .documents()
        .iter()
        .map(|doc| {
            let fixed = match hp.mode {
                Mode::Supervised => doc.supervision_label(),
                _ => None,
            };
            doc.tokens
                .iter()
                .map(|_| {
                    let label = match fixed {
                        Some(l) => l,
                        None => rng.random_range(0..layout.groups),
                    };
                    let kind = TopicKind::from_index(rng.random_range(0..2));
                    let topic = rng.random_range(0..layout.topics(kind, doc.domain));
                    Assignment { label, kind, topic }
                })
                .collect()
        })
        .collect();
    ModelState::from_assignments(corpus, hp, assignments, rng)
}

/// Recomputes every count table from the assignments alone.
pub fn rebuild_counts(state: &ModelState<'_>) -> CountTables {
    tally(state.corpus, state.layout(), &state.assignments)
}
