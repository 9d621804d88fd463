//! Resource-bounded conditional complexity `K'(x|z)` and the bounds built
//! on it: joint complexity, the chain rule gap, printing and neutrality.

pub mod bounds;
pub mod constructions;
pub mod corpus;
pub mod search;

pub use bounds::{
    chain_rule_gap, joint_bounds, neutrality_check, print_bound, ChainRuleReport, JointBounds,
    NeutralityReport, PrintReport,
};
pub use corpus::{CorpusEntry, CorpusError, WitnessCorpus};
pub use search::{k_prime, ComplexityEstimate, EstimateStatus, KPrime, SearchError, SearchIndex};
