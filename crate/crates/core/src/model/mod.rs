//! Model state: hyperparameters, per-token latent assignments, the count
//! tables they imply, the exact collapsed joint and smoothed posterior
//! estimates.

mod counts;
mod hyperparams;
mod joint;
mod params;
mod state;

pub use counts::{Assignment, CountTables, Layout, TopicKind};
pub use hyperparams::{Hyperparams, Mode, ScanOrder};
pub use joint::joint_log_prob;
pub use params::{average_params, estimate_params, ParamsAccumulator, PosteriorParams};
pub use state::{init_state, rebuild_counts, ChainRng, ModelState};
