//! File formats, real-data preprocessing and the experiment harness.

pub mod analyze;
pub mod edgelist;
pub mod experiment;
pub mod instance;
pub mod membership;
pub mod preprocess;
pub mod results;

pub use analyze::{analyze_membership_pair, analyze_memberships, MembershipReport, NodeReport};
pub use edgelist::{parse_multiplex_edges, LabelTable, LabeledStack};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentTable};
pub use preprocess::{merge_nodes, parse_merge_spec, select_top_layers};
