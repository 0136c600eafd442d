//! Instance generators, randomized comparison against the oracle, and
//! counterexample shrinking.

mod campaign;
mod gen;

pub use campaign::{run_campaign, shrink, CampaignReport, Disagreement, Outcome};
pub use gen::{gen_subset_sum, FuzzSpec, Instance};
