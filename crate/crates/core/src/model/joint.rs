//! Exact log joint probability of the latent assignments and the words,
//! with every Dirichlet and Beta parameter integrated out.

use statrs::function::gamma::ln_gamma;

use super::counts::{CountTables, TopicKind};
use super::hyperparams::Mode;
use super::state::ModelState;
use crate::corpus::Domain;

/// `ln B(prior + n) - ln B(prior)` for a symmetric prior over `dim` cells.
/// Zero counts contribute nothing, so only nonzero entries are visited.
fn dirichlet_multinomial<I>(counts: I, prior: f64, dim: usize) -> f64
where
    I: IntoIterator<Item = u32>,
{
    let mut total = 0u64;
    let mut acc = 0.0;
    let ln_prior = ln_gamma(prior);
    for n in counts {
        if n > 0 {
            total += n as u64;
            acc += ln_gamma(n as f64 + prior) - ln_prior;
        }
    }
    if total == 0 {
        return 0.0;
    }
    let mass = dim as f64 * prior;
    acc + ln_gamma(mass) - ln_gamma(total as f64 + mass)
}

/// Log of the collapsed joint `P(l, r, z, w)` at the current assignments.
///
/// In ccl mode the per-document topic mixture is shared by both topic types,
/// so the topic term runs over `n_zc + n_zs` of the single group.
pub fn joint_log_prob(state: &ModelState<'_>) -> f64 {
    let hp = state.hyperparams();
    let counts = state.counts();
    let lay = counts.layout();
    let g = lay.groups;

    let mut lp = 0.0;
    for d in 0..counts.num_docs() {
        lp += dirichlet_multinomial((0..g).map(|l| counts.n_l(d, l)), hp.eta, g);
        for l in 0..g {
            lp += dirichlet_multinomial(
                [TopicKind::Common, TopicKind::Specific].map(|r| counts.n_rl(d, l, r)),
                hp.gamma,
                2,
            );
        }
        lp += match hp.mode {
            Mode::Ccl => ccl_topic_term(counts, d, hp.alpha),
            _ => grouped_topic_term(counts, d, hp.alpha),
        };
    }
    lp + word_term(counts, hp.beta)
}

fn grouped_topic_term(counts: &CountTables, d: usize, alpha: f64) -> f64 {
    let lay = counts.layout();
    let m = counts.doc_domain(d);
    (0..lay.groups)
        .map(|l| {
            dirichlet_multinomial(
                counts.doc_topics(d, l, TopicKind::Common).iter().copied(),
                alpha,
                lay.t_common,
            ) + dirichlet_multinomial(
                counts.doc_topics(d, l, TopicKind::Specific).iter().copied(),
                alpha,
                lay.t_spec(m),
            )
        })
        .sum()
}

fn ccl_topic_term(counts: &CountTables, d: usize, alpha: f64) -> f64 {
    let common = counts.doc_topics(d, 0, TopicKind::Common);
    let spec = counts.doc_topics(d, 0, TopicKind::Specific);
    dirichlet_multinomial(
        common.iter().zip(spec).map(|(a, b)| a + b),
        alpha,
        counts.layout().t_common,
    )
}

fn word_term(counts: &CountTables, beta: f64) -> f64 {
    let lay = counts.layout();
    let mut lp = 0.0;
    for l in 0..lay.groups {
        for c in 0..lay.t_common {
            lp += dirichlet_multinomial(
                (0..lay.vocab).map(|v| counts.n_w_common(l, c, v)),
                beta,
                lay.vocab,
            );
        }
        for m in Domain::ALL {
            for s in 0..lay.t_spec(m) {
                lp += dirichlet_multinomial(
                    (0..lay.vocab).map(|v| counts.n_w_spec(m, l, s, v)),
                    beta,
                    lay.vocab,
                );
            }
        }
    }
    lp
}
