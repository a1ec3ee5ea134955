//! Analytical and simulation checks of global FWER control.
//!
//! * [`bounds`]: worst-case local levels given which hypotheses are true
//!   nulls, and the FWER upper bound built from them.
//! * [`simulate`]: Monte Carlo estimate of the global FWER.
//! * [`oracles`]: direct implementations of the fallback and fixed-sequence
//!   procedures, used to cross-check engine reductions.
//! * [`random`]: random problem and null-configuration generators for
//!   property sweeps.

pub mod bounds;
pub mod nulls;
pub mod oracles;
pub mod random;
pub mod simulate;

pub use bounds::{
    bound_chain, fwer_bound, fwer_bound_two_layer, levels_within_worst_case, partition_bound,
    worst_case_levels, worst_case_levels_two_layer, WorstCaseLevels,
};
pub use nulls::NullConfiguration;
pub use oracles::{fallback_oracle, fixed_sequence_oracle};
pub use simulate::{
    clopper_pearson_upper, monte_carlo_fwer, DependenceModel, Effect, SimTarget, SimulationReport,
    GENERATOR,
};
