//! Search-step trial point generators.
//!
//! Searches are the flexible half of the search/poll dichotomy: any finite
//! set of mesh points is admissible, so each generator here encodes a
//! different heuristic for where good points might be. They only *propose*
//! points — evaluation, ordering, and opportunistic stopping are the
//! engine's business.

mod latin;
mod nelder;
mod quad;
mod speculative;

pub use latin::{lh_sample, sampling_box, LhExplorer};
pub(crate) use latin::lh_search_trials;
pub use nelder::nm_search_points;
pub use quad::quad_model_search_points;
pub use speculative::speculative_search_points;
