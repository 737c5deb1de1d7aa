use serde::{Deserialize, Serialize};

use crate::corpus::Domain;

/// Common or domain-specific topic set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicKind {
    Common,
    Specific,
}

impl TopicKind {
    pub fn index(self) -> usize {
        match self {
            TopicKind::Common => 0,
            TopicKind::Specific => 1,
        }
    }

    pub fn from_index(r: usize) -> Self {
        if r == 0 {
            TopicKind::Common
        } else {
            TopicKind::Specific
        }
    }
}

/// Latent variables of one token: group label, topic type and topic index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub label: usize,
    pub kind: TopicKind,
    pub topic: usize,
}

impl Assignment {
    pub fn new(label: usize, kind: TopicKind, topic: usize) -> Self {
        Assignment { label, kind, topic }
    }
}

/// Table dimensions shared by count tables and posterior estimates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub groups: usize,
    pub t_common: usize,
    pub t_spec: [usize; 2],
    pub vocab: usize,
}

impl Layout {
    pub fn t_spec(&self, domain: Domain) -> usize {
        self.t_spec[domain.index()]
    }

    pub fn topics(&self, kind: TopicKind, domain: Domain) -> usize {
        match kind {
            TopicKind::Common => self.t_common,
            TopicKind::Specific => self.t_spec(domain),
        }
    }

    /// Number of latent cells `(l, r, z)` for a token of `domain`.
    pub fn cells(&self, domain: Domain) -> usize {
        self.groups * (self.t_common + self.t_spec(domain))
    }
}

/// Sufficient statistics of the collapsed model.
///
/// Word tables are stored word-major (`[v][l][z]`) so that the sampler reads
/// one contiguous block per token. Per-document tables are flattened with
/// the document as the outermost axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTables {
    layout: Layout,
    doc_domains: Vec<Domain>,
    word_common: Vec<u32>,
    common_total: Vec<u32>,
    word_spec: [Vec<u32>; 2],
    spec_total: [Vec<u32>; 2],
    doc_common: Vec<u32>,
    doc_spec: Vec<u32>,
    doc_spec_offset: Vec<usize>,
    doc_type: Vec<u32>,
    doc_label: Vec<u32>,
    doc_len: Vec<u32>,
}

impl CountTables {
    pub fn zeros(layout: Layout, doc_domains: Vec<Domain>) -> Self {
        let g = layout.groups;
        let n_docs = doc_domains.len();
        let mut doc_spec_offset = Vec::with_capacity(n_docs + 1);
        let mut acc = 0;
        for &m in &doc_domains {
            doc_spec_offset.push(acc);
            acc += g * layout.t_spec(m);
        }
        doc_spec_offset.push(acc);
        let spec = |m: usize| layout.vocab * g * layout.t_spec[m];
        CountTables {
            word_common: vec![0; layout.vocab * g * layout.t_common],
            common_total: vec![0; g * layout.t_common],
            word_spec: [vec![0; spec(0)], vec![0; spec(1)]],
            spec_total: [vec![0; g * layout.t_spec[0]], vec![0; g * layout.t_spec[1]]],
            doc_common: vec![0; n_docs * g * layout.t_common],
            doc_spec: vec![0; acc],
            doc_spec_offset,
            doc_type: vec![0; n_docs * g * 2],
            doc_label: vec![0; n_docs * g],
            doc_len: vec![0; n_docs],
            layout,
            doc_domains,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn num_docs(&self) -> usize {
        self.doc_len.len()
    }

    pub fn doc_domain(&self, d: usize) -> Domain {
        self.doc_domains[d]
    }

    /// Adds (`inc = true`) or removes one token with word `v` in document `d`.
    #[inline]
    pub fn update(&mut self, d: usize, v: u32, a: Assignment, inc: bool) {
        let g = self.layout.groups;
        let m = self.doc_domains[d];
        let v = v as usize;
        let l = a.label;
        let z = a.topic;
        let (word, total, doc) = match a.kind {
            TopicKind::Common => {
                let tc = self.layout.t_common;
                (
                    &mut self.word_common[(v * g + l) * tc + z],
                    &mut self.common_total[l * tc + z],
                    &mut self.doc_common[(d * g + l) * tc + z],
                )
            }
            TopicKind::Specific => {
                let ts = self.layout.t_spec(m);
                let mi = m.index();
                let off = self.doc_spec_offset[d];
                (
                    &mut self.word_spec[mi][(v * g + l) * ts + z],
                    &mut self.spec_total[mi][l * ts + z],
                    &mut self.doc_spec[off + l * ts + z],
                )
            }
        };
        let ty = &mut self.doc_type[(d * g + l) * 2 + a.kind.index()];
        if inc {
            *word += 1;
            *total += 1;
            *doc += 1;
            *ty += 1;
            self.doc_label[d * g + l] += 1;
            self.doc_len[d] += 1;
        } else {
            *word -= 1;
            *total -= 1;
            *doc -= 1;
            *ty -= 1;
            self.doc_label[d * g + l] -= 1;
            self.doc_len[d] -= 1;
        }
    }

    /// `N_{v,c,r=0,l}`: occurrences of word `v` assigned to common topic `c` of group `l`.
    #[inline]
    pub fn n_w_common(&self, l: usize, c: usize, v: usize) -> u32 {
        let (g, tc) = (self.layout.groups, self.layout.t_common);
        self.word_common[(v * g + l) * tc + c]
    }

    #[inline]
    pub fn n_common(&self, l: usize, c: usize) -> u32 {
        self.common_total[l * self.layout.t_common + c]
    }

    #[inline]
    pub fn n_w_spec(&self, m: Domain, l: usize, s: usize, v: usize) -> u32 {
        let (g, ts) = (self.layout.groups, self.layout.t_spec(m));
        self.word_spec[m.index()][(v * g + l) * ts + s]
    }

    #[inline]
    pub fn n_spec(&self, m: Domain, l: usize, s: usize) -> u32 {
        self.spec_total[m.index()][l * self.layout.t_spec(m) + s]
    }

    #[inline]
    pub fn n_zc(&self, d: usize, l: usize, c: usize) -> u32 {
        let (g, tc) = (self.layout.groups, self.layout.t_common);
        self.doc_common[(d * g + l) * tc + c]
    }

    #[inline]
    pub fn n_zs(&self, d: usize, l: usize, s: usize) -> u32 {
        let ts = self.layout.t_spec(self.doc_domains[d]);
        self.doc_spec[self.doc_spec_offset[d] + l * ts + s]
    }

    #[inline]
    pub fn n_rl(&self, d: usize, l: usize, r: TopicKind) -> u32 {
        self.doc_type[(d * self.layout.groups + l) * 2 + r.index()]
    }

    #[inline]
    pub fn n_l(&self, d: usize, l: usize) -> u32 {
        self.doc_label[d * self.layout.groups + l]
    }

    #[inline]
    pub fn n_d(&self, d: usize) -> u32 {
        self.doc_len[d]
    }

    /// Topic counts of document `d` for `(l, kind)`, a slice of length
    /// `T^C` or `T^S[m_d]`.
    pub fn doc_topics(&self, d: usize, l: usize, kind: TopicKind) -> &[u32] {
        match kind {
            TopicKind::Common => {
                let tc = self.layout.t_common;
                let start = (d * self.layout.groups + l) * tc;
                &self.doc_common[start..start + tc]
            }
            TopicKind::Specific => {
                let ts = self.layout.t_spec(self.doc_domains[d]);
                let start = self.doc_spec_offset[d] + l * ts;
                &self.doc_spec[start..start + ts]
            }
        }
    }

    /// Word counts of one word across `(l, z)` for common topics:
    /// index `l * T^C + c`.
    #[inline]
    pub(crate) fn word_common_row(&self, v: usize) -> &[u32] {
        let n = self.layout.groups * self.layout.t_common;
        &self.word_common[v * n..(v + 1) * n]
    }

    #[inline]
    pub(crate) fn word_spec_row(&self, m: Domain, v: usize) -> &[u32] {
        let n = self.layout.groups * self.layout.t_spec(m);
        &self.word_spec[m.index()][v * n..(v + 1) * n]
    }

    #[inline]
    pub(crate) fn common_totals(&self) -> &[u32] {
        &self.common_total
    }

    #[inline]
    pub(crate) fn spec_totals(&self, m: Domain) -> &[u32] {
        &self.spec_total[m.index()]
    }

    /// Raw word table for specific topics of domain `m` (used by tests that
    /// check domain separation).
    pub fn word_spec_table(&self, m: Domain) -> &[u32] {
        &self.word_spec[m.index()]
    }

    /// Verifies the marginalization chain. Returns a description of the first
    /// violated identity.
    pub fn check_marginals(&self) -> Result<(), String> {
        let lay = &self.layout;
        let g = lay.groups;
        for l in 0..g {
            for c in 0..lay.t_common {
                let s: u64 = (0..lay.vocab).map(|v| self.n_w_common(l, c, v) as u64).sum();
                if s != self.n_common(l, c) as u64 {
                    return Err(format!("sum_v n_w_common[{l}][{c}] != n_common"));
                }
            }
            for m in Domain::ALL {
                for s in 0..lay.t_spec(m) {
                    let sum: u64 = (0..lay.vocab).map(|v| self.n_w_spec(m, l, s, v) as u64).sum();
                    if sum != self.n_spec(m, l, s) as u64 {
                        return Err(format!("sum_v n_w_spec[{m:?}][{l}][{s}] != n_spec"));
                    }
                }
            }
        }
        for d in 0..self.num_docs() {
            let mut total = 0u64;
            for l in 0..g {
                for kind in [TopicKind::Common, TopicKind::Specific] {
                    let s: u64 = self.doc_topics(d, l, kind).iter().map(|&x| x as u64).sum();
                    if s != self.n_rl(d, l, kind) as u64 {
                        return Err(format!("doc {d}: topic counts of ({l}, {kind:?}) != n_rl"));
                    }
                }
                if self.n_rl(d, l, TopicKind::Common) + self.n_rl(d, l, TopicKind::Specific)
                    != self.n_l(d, l)
                {
                    return Err(format!("doc {d}: n_rl[{l}] does not sum to n_l"));
                }
                total += self.n_l(d, l) as u64;
            }
            if total != self.n_d(d) as u64 {
                return Err(format!("doc {d}: sum_l n_l != n_d"));
            }
        }
        Ok(())
    }
}
