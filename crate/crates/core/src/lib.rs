//! Satisfaction bounds of omega-regular properties, given as deterministic
//! Rabin automata, on interval-valued Markov chains.

pub mod bscc;
pub mod engine;
pub mod imc;
pub mod intervals;
pub mod letter;
pub mod product;
pub mod rabin;
pub mod reach;

#[cfg(feature = "test-support")]
pub mod oracle;

pub use bscc::{find_largest_accepting_single_pair, find_largest_nonaccepting, ClassifiedSets, SearchError};
pub use engine::{
    lower_bounds, upper_bounds_single_pair, upper_bounds_via_complement, verify, verify_detailed, BoundMeta,
    BoundResult, Route, StateBounds, VerifyError, VerifyOptions,
};
pub use imc::{load_imc, parse_imc, parse_imc_json, Imc, Mc, ModelError, RawImc, Violation};
pub use intervals::{IntervalEntry, IntervalMatrix, SUM_TOLERANCE};
pub use letter::Letter;
pub use product::{build_product, AccProp, ProductError, ProductImc};
pub use rabin::{load_dra, parse_dra, parse_dra_json, AutomatonError, RabinAutomaton, RabinPair};
pub use reach::{extremal_distribution, reach_probability, Objective, ReachError, ReachQuery, ReachResult};
