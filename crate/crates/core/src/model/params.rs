use serde::{Deserialize, Serialize};

use super::counts::{Layout, TopicKind};
use super::hyperparams::Mode;
use super::state::ModelState;
use crate::corpus::Domain;
use crate::error::{Error, Result};

/// Smoothed point estimates of every distribution in the model.
///
/// All tables are flat, row-major, with the distribution's support as the
/// innermost axis:
/// `phi_common[l][c][v]`, `phi_spec[m][l][s][v]`, `theta_common[d][l][c]`,
/// `theta_spec[d][l][s]`, `sigma[d][l]` (probability of a specific topic) and
/// `pi[d][l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorParams {
    pub mode: Mode,
    pub layout: Layout,
    pub doc_domains: Vec<Domain>,
    pub phi_common: Vec<f64>,
    pub phi_spec: [Vec<f64>; 2],
    pub theta_common: Vec<f64>,
    pub theta_spec: Vec<f64>,
    pub theta_spec_offset: Vec<usize>,
    pub sigma: Vec<f64>,
    pub pi: Vec<f64>,
}

impl PosteriorParams {
    /// Every distribution uniform over its support and `sigma = 1/2`.
    pub fn uniform(mode: Mode, layout: Layout, doc_domains: Vec<Domain>) -> Self {
        let (g, tc, v) = (layout.groups, layout.t_common, layout.vocab);
        let n = doc_domains.len();
        let mut theta_spec = Vec::new();
        let mut theta_spec_offset = Vec::with_capacity(n + 1);
        for &m in &doc_domains {
            theta_spec_offset.push(theta_spec.len());
            let ts = layout.t_spec(m);
            theta_spec.extend(std::iter::repeat_n(1.0 / ts as f64, g * ts));
        }
        theta_spec_offset.push(theta_spec.len());
        PosteriorParams {
            mode,
            phi_common: vec![1.0 / v as f64; g * tc * v],
            phi_spec: Domain::ALL.map(|m| vec![1.0 / v as f64; g * layout.t_spec(m) * v]),
            theta_common: vec![1.0 / tc as f64; n * g * tc],
            theta_spec,
            theta_spec_offset,
            sigma: vec![0.5; n * g],
            pi: vec![1.0 / g as f64; n * g],
            layout,
            doc_domains,
        }
    }

    pub fn num_docs(&self) -> usize {
        self.doc_domains.len()
    }

    pub fn groups(&self) -> usize {
        self.layout.groups
    }

    pub fn phi_common(&self, l: usize, c: usize) -> &[f64] {
        let v = self.layout.vocab;
        let start = (l * self.layout.t_common + c) * v;
        &self.phi_common[start..start + v]
    }

    pub fn phi_spec(&self, m: Domain, l: usize, s: usize) -> &[f64] {
        let v = self.layout.vocab;
        let start = (l * self.layout.t_spec(m) + s) * v;
        &self.phi_spec[m.index()][start..start + v]
    }

    pub fn theta_common(&self, d: usize, l: usize) -> &[f64] {
        let tc = self.layout.t_common;
        let start = (d * self.layout.groups + l) * tc;
        &self.theta_common[start..start + tc]
    }

    pub fn theta_spec(&self, d: usize, l: usize) -> &[f64] {
        let ts = self.layout.t_spec(self.doc_domains[d]);
        let start = self.theta_spec_offset[d] + l * ts;
        &self.theta_spec[start..start + ts]
    }

    pub fn sigma(&self, d: usize, l: usize) -> f64 {
        self.sigma[d * self.layout.groups + l]
    }

    pub fn pi(&self, d: usize) -> &[f64] {
        let g = self.layout.groups;
        &self.pi[d * g..(d + 1) * g]
    }

    /// Word distribution of one topic.
    pub fn phi(&self, l: usize, kind: TopicKind, domain: Domain, topic: usize) -> &[f64] {
        match kind {
            TopicKind::Common => self.phi_common(l, topic),
            TopicKind::Specific => self.phi_spec(domain, l, topic),
        }
    }

    /// Largest deviation from 1 of any distribution's total mass, together
    /// with the smallest entry seen. Used to check normalization.
    pub fn normalization_error(&self) -> (f64, f64) {
        let mut worst = 0.0f64;
        let mut min = f64::INFINITY;
        let mut check = |row: &[f64]| {
            let s: f64 = row.iter().sum();
            worst = worst.max((s - 1.0).abs());
            min = row.iter().copied().fold(min, f64::min);
        };
        let lay = &self.layout;
        for l in 0..lay.groups {
            for c in 0..lay.t_common {
                check(self.phi_common(l, c));
            }
            for m in Domain::ALL {
                for s in 0..lay.t_spec(m) {
                    check(self.phi_spec(m, l, s));
                }
            }
        }
        for d in 0..self.num_docs() {
            check(self.pi(d));
            for l in 0..lay.groups {
                check(self.theta_common(d, l));
                check(self.theta_spec(d, l));
                let s = self.sigma(d, l);
                check(&[s, 1.0 - s]);
            }
        }
        (worst, min)
    }

    fn same_shape(&self, other: &PosteriorParams) -> bool {
        self.mode == other.mode
            && self.layout == other.layout
            && self.doc_domains == other.doc_domains
            && self.theta_spec_offset == other.theta_spec_offset
    }

    fn zip_apply(&mut self, other: &PosteriorParams, f: impl Fn(&mut f64, f64)) {
        let pairs: [(&mut Vec<f64>, &Vec<f64>); 7] = {
            let [ps0, ps1] = &mut self.phi_spec;
            [
                (&mut self.phi_common, &other.phi_common),
                (ps0, &other.phi_spec[0]),
                (ps1, &other.phi_spec[1]),
                (&mut self.theta_common, &other.theta_common),
                (&mut self.theta_spec, &other.theta_spec),
                (&mut self.sigma, &other.sigma),
                (&mut self.pi, &other.pi),
            ]
        };
        for (dst, src) in pairs {
            for (a, &b) in dst.iter_mut().zip(src) {
                f(a, b);
            }
        }
    }

    fn scale(&mut self, k: f64) {
        let me = self.clone();
        self.zip_apply(&me, |a, _| *a *= k);
    }
}

/// Smoothed estimates from the current counts (no token is excluded).
///
/// In ccl mode the single group's topic mixture is shared by both topic types
/// and is written to both `theta_common` and `theta_spec`.
pub fn estimate_params(state: &ModelState<'_>) -> PosteriorParams {
    let hp = state.hyperparams();
    let counts = state.counts();
    let lay = counts.layout().clone();
    let (g, tc, v) = (lay.groups, lay.t_common, lay.vocab);
    let vb = v as f64 * hp.beta;
    let n_docs = counts.num_docs();
    let doc_domains: Vec<Domain> = (0..n_docs).map(|d| counts.doc_domain(d)).collect();

    let mut phi_common = Vec::with_capacity(g * tc * v);
    for l in 0..g {
        for c in 0..tc {
            let denom = counts.n_common(l, c) as f64 + vb;
            phi_common.extend((0..v).map(|w| (counts.n_w_common(l, c, w) as f64 + hp.beta) / denom));
        }
    }
    let phi_spec = Domain::ALL.map(|m| {
        let ts = lay.t_spec(m);
        let mut out = Vec::with_capacity(g * ts * v);
        for l in 0..g {
            for s in 0..ts {
                let denom = counts.n_spec(m, l, s) as f64 + vb;
                out.extend((0..v).map(|w| (counts.n_w_spec(m, l, s, w) as f64 + hp.beta) / denom));
            }
        }
        out
    });

    let mut theta_common = Vec::with_capacity(n_docs * g * tc);
    let mut theta_spec = Vec::new();
    let mut theta_spec_offset = Vec::with_capacity(n_docs + 1);
    let mut sigma = Vec::with_capacity(n_docs * g);
    let mut pi = Vec::with_capacity(n_docs * g);
    let (a, gm, eta) = (hp.alpha, hp.gamma, hp.eta);
    for (d, &m) in doc_domains.iter().enumerate() {
        theta_spec_offset.push(theta_spec.len());
        let ts = lay.t_spec(m);
        let n_d = counts.n_d(d) as f64;
        for l in 0..g {
            let n_l = counts.n_l(d, l) as f64;
            let n_spec = counts.n_rl(d, l, TopicKind::Specific) as f64;
            let common = counts.doc_topics(d, l, TopicKind::Common);
            let spec = counts.doc_topics(d, l, TopicKind::Specific);
            if hp.mode == Mode::Ccl {
                let denom = n_d + tc as f64 * a;
                let shared: Vec<f64> = common
                    .iter()
                    .zip(spec)
                    .map(|(&x, &y)| (x as f64 + y as f64 + a) / denom)
                    .collect();
                theta_common.extend_from_slice(&shared);
                theta_spec.extend_from_slice(&shared);
            } else {
                let n_common = counts.n_rl(d, l, TopicKind::Common) as f64;
                let dc = n_common + tc as f64 * a;
                theta_common.extend(common.iter().map(|&x| (x as f64 + a) / dc));
                let ds = n_spec + ts as f64 * a;
                theta_spec.extend(spec.iter().map(|&x| (x as f64 + a) / ds));
            }
            sigma.push((n_spec + gm) / (n_l + 2.0 * gm));
            pi.push((n_l + eta) / (n_d + g as f64 * eta));
        }
    }
    theta_spec_offset.push(theta_spec.len());

    PosteriorParams {
        mode: hp.mode,
        layout: lay,
        doc_domains,
        phi_common,
        phi_spec,
        theta_common,
        theta_spec,
        theta_spec_offset,
        sigma,
        pi,
    }
}

/// Running element-wise sum of posterior samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsAccumulator {
    sum: Option<PosteriorParams>,
    count: usize,
}

impl Default for ParamsAccumulator {
    fn default() -> Self {
        ParamsAccumulator { sum: None, count: 0 }
    }
}

impl ParamsAccumulator {
    pub fn add(&mut self, sample: &PosteriorParams) -> Result<()> {
        match &mut self.sum {
            None => self.sum = Some(sample.clone()),
            Some(sum) => {
                if !sum.same_shape(sample) {
                    return Err(Error::Shape("posterior samples have different shapes".into()));
                }
                sum.zip_apply(sample, |a, b| *a += b);
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The running sum, if any sample was added.
    pub fn sum(&self) -> Option<&PosteriorParams> {
        self.sum.as_ref()
    }

    pub(crate) fn from_parts(sum: Option<PosteriorParams>, count: usize) -> Self {
        ParamsAccumulator { sum, count }
    }

    /// Element-wise mean of everything added so far.
    pub fn mean(&self) -> Result<PosteriorParams> {
        let mut out = self
            .sum
            .clone()
            .ok_or_else(|| Error::Shape("cannot average an empty list of samples".into()))?;
        if self.count > 1 {
            out.scale(1.0 / self.count as f64);
        }
        Ok(out)
    }
}

/// Element-wise arithmetic mean of posterior samples.
pub fn average_params(samples: &[PosteriorParams]) -> Result<PosteriorParams> {
    let mut acc = ParamsAccumulator::default();
    for s in samples {
        acc.add(s)?;
    }
    acc.mean()
}
