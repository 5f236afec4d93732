//! Eigen-analysis of harmonic state-space models: dense eigensolve,
//! LAP-based matching across parameter variations, CDI/CDV/DI
//! classification, eigenvector sequence reports and sensitivity loci.

pub mod assignment;
pub mod classify;
pub mod eigen;
pub mod error;
pub mod report;
pub mod sweep;

pub use assignment::{closest_subset, lap_match, lap_match_values, lap_solve, similarity_metric, SubsetMatch};
pub use classify::{
    census, classify, classify_sets, label_sets, set_census, ClassifyOptions, EigenClass, EigenLabel, LabelSet, Perturbation,
    SetCensus,
};
pub use eigen::{canonical_cmp, damping, eigensolve, eigensolve_matrix, eigenvalues, EigenSet};
pub use error::{EngineError, Result};
pub use report::{
    edge_mask, edge_weights, eigenvector_sequence_report, eigenvector_support, SequenceEntry, SequenceLabel,
};
pub use sweep::{
    di_mask, sensitivity_sweep, spurious_mask, stability_margin, stability_margin_masked, Schedule, SensitivityTrace,
    StepKind,
};
