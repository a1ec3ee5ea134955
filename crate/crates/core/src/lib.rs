//! Bonferroni-based gatekeeping procedures with a retesting option for
//! hierarchically ordered families of hypotheses.
//!
//! The [`sequential`] engine tests families one after another and keeps
//! re-running the sequence with updated local levels until a full stage
//! rejects nothing new. The [`two_layer`] engine does the same for two
//! layers of families tested simultaneously within a layer. Both produce an
//! [`AuditTrail`] with every stage's levels and rejections.
//!
//! [`verify`] holds the analytical FWER bounds, Monte Carlo estimation and
//! independent oracles used to check the engines.

pub mod bonferroni;
pub mod error;
pub mod problem;
pub mod sequential;
pub mod trail;
pub mod two_layer;
pub mod verify;

pub use bonferroni::{bonferroni_reject, bonferroni_threshold};
pub use error::{GatekeepingError, Result};
pub use problem::{
    validate_problem, validate_transition_matrix, FamilySpec, GatekeepingProblem, PValueSet,
    TransitionMatrix, SUM_TOLERANCE,
};
pub use sequential::{
    run_procedure, stage1_level, stagek_level, two_family_problem, EngineOptions,
};
pub use trail::{AuditTrail, FamilyKey, FamilyStage, Layer, StageRecord, Termination};
pub use two_layer::{layer1_level, layer2_level, layered_family, run_two_layer, TwoLayerProblem};
